#include "comfort/multihorizon.hpp"

#include <fstream>
#include <sstream>

#include "comfort/batch.hpp"
#include "comfort/error.hpp"

namespace comfort {

std::string_view to_string(HorizonMode m) {
  return m == HorizonMode::TeacherForced ? "teacher_forced" : "recursive";
}

std::vector<Sequence> sequences(const Dataset& d) {
  std::vector<Sequence> out;
  std::vector<std::uint8_t> seen(d.dwellings.size(), 0);
  for (std::size_t i = 0; i < d.rows(); ++i) {
    if (out.empty() || d.dwelling[i] != out.back().dwelling) {
      if (seen[d.dwelling[i]]) {
        throw ValidationError("rows of dwelling " + d.dwellings[d.dwelling[i]] + " are not contiguous");
      }
      seen[d.dwelling[i]] = 1;
      out.push_back({d.dwelling[i], i, i + 1});
      continue;
    }
    if (d.step[i] != d.step[i - 1] + 1) {
      throw ValidationError("rows of dwelling " + d.dwellings[d.dwelling[i]] + " skip steps after step " +
                            std::to_string(d.step[i - 1]));
    }
    out.back().last = i + 1;
  }
  return out;
}

namespace {

void check_window(const Sequence& s, const Dataset& d, std::size_t window) {
  if (s.last - s.first <= window) {
    throw ValidationError("sequence of dwelling " + d.dwellings[s.dwelling] + " has " +
                          std::to_string(s.last - s.first) + " rows, not more than the window of " +
                          std::to_string(window));
  }
}

void append_row(std::vector<float>& x, const float* base, std::size_t nf, const std::vector<int>& history,
                std::size_t at, std::size_t window) {
  x.insert(x.end(), base, base + nf);
  for (std::size_t l = 1; l <= window; ++l) x.push_back(static_cast<float>(history[at - l]));
}

}  // namespace

Dataset lagged_dataset(const Dataset& d, std::size_t window) {
  if (window == 0) throw ValidationError("multihorizon window must be >= 1");
  Dataset out;
  out.feature_names = d.feature_names;
  for (std::size_t l = 1; l <= window; ++l) out.feature_names.push_back("lag_" + std::to_string(l));
  out.dwellings = d.dwellings;
  for (const auto& s : sequences(d)) {
    check_window(s, d, window);
    for (std::size_t i = s.first + window; i < s.last; ++i) {
      append_row(out.x, d.row(i), d.features(), d.y, i, window);
      out.y.push_back(d.y[i]);
      out.dwelling.push_back(d.dwelling[i]);
      out.step.push_back(d.step[i]);
    }
  }
  return out;
}

MultihorizonModel train_multihorizon(const Dataset& train, const MultihorizonParams& params) {
  MultihorizonModel m;
  m.window = params.window;
  m.base_features = train.features();
  m.forest = train_random_forest(lagged_dataset(train, params.window), params.forest);
  return m;
}

HorizonPrediction predict_multihorizon(const MultihorizonModel& model, const Dataset& d, HorizonMode mode,
                                       std::size_t workers) {
  if (d.features() != model.base_features) throw ValidationError("multihorizon model expects a different feature count");
  const std::size_t w = model.window, nf = d.features();
  const auto seqs = sequences(d);
  for (const auto& s : seqs) check_window(s, d, w);
  std::vector<HorizonPrediction> parts(seqs.size());
  parallel_for(seqs.size(), workers, [&](std::size_t k) {
    const auto& s = seqs[k];
    auto& p = parts[k];
    std::vector<int> history(d.y.begin() + static_cast<std::ptrdiff_t>(s.first),
                             d.y.begin() + static_cast<std::ptrdiff_t>(s.first + w));
    std::vector<float> x;
    x.reserve(nf + w);
    for (std::size_t i = s.first + w; i < s.last; ++i) {
      const std::size_t at = i - s.first;
      x.clear();
      const auto& past = mode == HorizonMode::TeacherForced ? d.y : history;
      const std::size_t offset = mode == HorizonMode::TeacherForced ? i : at;
      append_row(x, d.row(i), nf, past, offset, w);
      const int pred = model.forest.predict(x.data());
      std::uint8_t differs = 0;
      for (std::size_t l = 1; l <= w && !differs; ++l) differs = past[offset - l] != d.y[i - l];
      p.rows.push_back(i);
      p.predicted.push_back(pred);
      p.truth.push_back(d.y[i]);
      p.window_differs.push_back(differs);
      history.push_back(pred);
    }
  });
  HorizonPrediction out;
  for (auto& p : parts) {
    out.rows.insert(out.rows.end(), p.rows.begin(), p.rows.end());
    out.predicted.insert(out.predicted.end(), p.predicted.begin(), p.predicted.end());
    out.truth.insert(out.truth.end(), p.truth.begin(), p.truth.end());
    out.window_differs.insert(out.window_differs.end(), p.window_differs.begin(), p.window_differs.end());
  }
  return out;
}

std::string serialize_multihorizon(const MultihorizonModel& m) {
  std::ostringstream out;
  out << "comfortsim-multihorizon 1\nwindow " << m.window << "\nbase_features " << m.base_features << '\n'
      << serialize_forest(m.forest);
  return out.str();
}

MultihorizonModel parse_multihorizon(const std::string& text) {
  std::istringstream in(text);
  std::string tag, k1, k2;
  int version = 0;
  MultihorizonModel m;
  if (!(in >> tag >> version) || tag != "comfortsim-multihorizon" || version != 1) {
    throw ParseError("multihorizon model: bad header");
  }
  if (!(in >> k1 >> m.window >> k2 >> m.base_features) || k1 != "window" || k2 != "base_features") {
    throw ParseError("multihorizon model: bad window lines");
  }
  in >> std::ws;
  std::stringstream rest;
  rest << in.rdbuf();
  m.forest = parse_forest(rest.str());
  if (m.forest.features != m.base_features + m.window) throw ParseError("multihorizon model: feature count mismatch");
  return m;
}

void write_multihorizon(const std::string& path, const MultihorizonModel& m) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path);
  out << serialize_multihorizon(m);
}

MultihorizonModel read_multihorizon(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open model file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_multihorizon(ss.str());
}

}  // namespace comfort
