#include "comfort/dataset.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <random>

#include "comfort/digest.hpp"
#include "comfort/error.hpp"

namespace comfort {

std::size_t Dataset::feature_index(const std::string& name) const {
  for (std::size_t i = 0; i < feature_names.size(); ++i) {
    if (feature_names[i] == name) return i;
  }
  throw ValidationError("dataset has no feature '" + name + "'");
}

std::vector<std::string> dataset_feature_names() {
  std::vector<std::string> names;
  for (auto slot : kRoomSlots) {
    const std::string s(slot);
    names.push_back(s + ".t_mr");
    names.push_back(s + ".t_air");
    names.push_back(s + ".q_heat");
  }
  for (const char* g : {"t_op_pres", "t_out", "avg_age", "gender_ratio", "presence"}) names.emplace_back(g);
  return names;
}

Dataset assemble_dataset(const std::vector<DwellingInputs>& inputs) {
  Dataset d;
  d.feature_names = dataset_feature_names();
  const std::size_t nf = d.features();
  std::size_t total = 0;
  for (const auto& in : inputs) {
    if (!in.sim || !in.survey) throw ValidationError("assemble_dataset: missing simulation or survey input");
    if (!in.labels) throw ValidationError("assemble_dataset: missing label file for dwelling " + in.sim->dwelling_id);
    total += in.sim->grid.count;
  }
  d.x.reserve(total * nf);
  d.y.reserve(total);
  for (const auto& in : inputs) {
    const auto& sim = *in.sim;
    const auto& lab = *in.labels;
    if (lab.grid != sim.grid) throw ValidationError("assemble_dataset: label grid differs from simulation grid for " + sim.dwelling_id);
    if (in.survey->dwelling_id != sim.dwelling_id) {
      throw ValidationError("assemble_dataset: survey " + in.survey->dwelling_id + " paired with simulation " + sim.dwelling_id);
    }
    const auto di = static_cast<std::uint32_t>(d.dwellings.size());
    d.dwellings.push_back(sim.dwelling_id);
    std::vector<const RoomSeries*> slots;
    for (auto slot : kRoomSlots) {
      const RoomSeries* found = nullptr;
      for (const auto& r : sim.rooms) {
        if (r.name == slot) found = &r;
      }
      slots.push_back(found);
    }
    for (std::size_t k = 0; k < sim.grid.count; ++k) {
      bool present = false;
      double mean_op = 0;
      for (const auto* r : slots) {
        if (r) {
          d.x.push_back(static_cast<float>(r->t_mr[k]));
          d.x.push_back(static_cast<float>(r->t_air[k]));
          d.x.push_back(static_cast<float>(r->q_conv[k] + r->q_rad[k]));
          present = present || r->presence[k];
          mean_op += r->t_op[k];
        } else {
          d.x.insert(d.x.end(), {0.0f, 0.0f, 0.0f});
        }
      }
      mean_op /= static_cast<double>(sim.rooms.size());
      const double t_op_pres = lab.series.defined[k] ? lab.series.value[k] : mean_op;
      d.x.push_back(static_cast<float>(t_op_pres));
      d.x.push_back(static_cast<float>(sim.t_out[k]));
      d.x.push_back(static_cast<float>(in.survey->avg_age));
      d.x.push_back(static_cast<float>(in.survey->gender_ratio));
      d.x.push_back(present ? 1.0f : 0.0f);
      d.y.push_back(static_cast<int>(lab.labels[k]));
      d.dwelling.push_back(di);
      d.step.push_back(static_cast<std::uint32_t>(k));
    }
  }
  return d;
}

Dataset subset(const Dataset& d, const std::vector<std::size_t>& rows) {
  Dataset s;
  s.feature_names = d.feature_names;
  s.dwellings = d.dwellings;
  const std::size_t nf = d.features();
  s.x.reserve(rows.size() * nf);
  for (std::size_t i : rows) {
    s.x.insert(s.x.end(), d.row(i), d.row(i) + nf);
    s.y.push_back(d.y[i]);
    s.dwelling.push_back(d.dwelling[i]);
    s.step.push_back(d.step[i]);
  }
  return s;
}

std::string dataset_digest(const Dataset& d) {
  std::string buf;
  for (const auto& n : d.feature_names) buf += n + "\n";
  for (const auto& n : d.dwellings) buf += n + "\n";
  auto append = [&](const void* p, std::size_t bytes) { buf.append(static_cast<const char*>(p), bytes); };
  append(d.x.data(), d.x.size() * sizeof(float));
  for (int v : d.y) {
    const auto b = static_cast<std::int32_t>(v);
    append(&b, sizeof b);
  }
  append(d.dwelling.data(), d.dwelling.size() * sizeof(std::uint32_t));
  append(d.step.data(), d.step.size() * sizeof(std::uint32_t));
  return sha256_hex(buf);
}

std::string_view to_string(SplitMode m) { return m == SplitMode::ByStep ? "by_step" : "by_dwelling"; }

SplitMode parse_split_mode(std::string_view s) {
  if (s == "by_step") return SplitMode::ByStep;
  if (s == "by_dwelling") return SplitMode::ByDwelling;
  throw ValidationError("unknown split mode '" + std::string(s) + "' (expected by_step or by_dwelling)");
}

void validate(const SplitSpec& s) {
  if (!(s.train > 0 && s.val >= 0 && s.test > 0)) throw ValidationError("split fractions must be positive");
  if (std::abs(s.train + s.val + s.test - 1.0) > 1e-9) throw ValidationError("split fractions must sum to 1");
}

namespace {

// Sizes of the three parts of n items, rounded, summing to n.
std::array<std::size_t, 3> part_sizes(std::size_t n, const SplitSpec& s) {
  const auto tr = static_cast<std::size_t>(std::llround(s.train * static_cast<double>(n)));
  const auto va = std::min(n - std::min(tr, n), static_cast<std::size_t>(std::llround(s.val * static_cast<double>(n))));
  const std::size_t t = std::min(tr, n);
  return {t, va, n - t - va};
}

}  // namespace

Split split_dataset(const Dataset& d, const SplitSpec& spec) {
  validate(spec);
  if (d.rows() < 3) throw ValidationError("split_dataset: need at least 3 rows");
  std::mt19937_64 gen(spec.seed);
  Split out;
  if (spec.mode == SplitMode::ByStep) {
    std::vector<std::size_t> idx(d.rows());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::shuffle(idx.begin(), idx.end(), gen);
    const auto sz = part_sizes(idx.size(), spec);
    out.train.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(sz[0]));
    out.val.assign(idx.begin() + static_cast<std::ptrdiff_t>(sz[0]),
                   idx.begin() + static_cast<std::ptrdiff_t>(sz[0] + sz[1]));
    out.test.assign(idx.begin() + static_cast<std::ptrdiff_t>(sz[0] + sz[1]), idx.end());
  } else {
    const std::size_t nd = d.dwellings.size();
    std::vector<std::uint8_t> has_disc(nd, 0);
    std::vector<std::uint8_t> seen(nd, 0);
    for (std::size_t i = 0; i < d.rows(); ++i) {
      seen[d.dwelling[i]] = 1;
      if (d.y[i] == static_cast<int>(Label::Discomfort)) has_disc[d.dwelling[i]] = 1;
    }
    std::vector<int> part(nd, -1);
    for (int stratum = 1; stratum >= 0; --stratum) {
      std::vector<std::size_t> members;
      for (std::size_t i = 0; i < nd; ++i) {
        if (seen[i] && has_disc[i] == stratum) members.push_back(i);
      }
      std::shuffle(members.begin(), members.end(), gen);
      const auto sz = part_sizes(members.size(), spec);
      for (std::size_t j = 0; j < members.size(); ++j) part[members[j]] = j < sz[0] ? 0 : (j < sz[0] + sz[1] ? 1 : 2);
    }
    for (std::size_t i = 0; i < d.rows(); ++i) {
      const int p = part[d.dwelling[i]];
      (p == 0 ? out.train : p == 1 ? out.val : out.test).push_back(i);
    }
  }
  std::sort(out.train.begin(), out.train.end());
  std::sort(out.val.begin(), out.val.end());
  std::sort(out.test.begin(), out.test.end());
  return out;
}

}  // namespace comfort
