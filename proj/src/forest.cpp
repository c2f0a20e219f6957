#include "comfort/forest.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

#include "comfort/batch.hpp"
#include "comfort/csv.hpp"
#include "comfort/error.hpp"

namespace comfort {

int DecisionTree::predict(const float* x) const {
  int i = 0;
  while (nodes[i].feature >= 0) {
    const auto& n = nodes[i];
    i = x[n.feature] <= n.threshold ? n.left : n.right;
  }
  return nodes[i].label;
}

std::size_t DecisionTree::depth() const {
  if (nodes.empty()) return 0;
  std::vector<std::pair<int, std::size_t>> stack{{0, 0}};
  std::size_t best = 0;
  while (!stack.empty()) {
    const auto [i, d] = stack.back();
    stack.pop_back();
    best = std::max(best, d);
    if (nodes[i].feature >= 0) {
      stack.push_back({nodes[i].left, d + 1});
      stack.push_back({nodes[i].right, d + 1});
    }
  }
  return best;
}

std::vector<double> RandomForest::vote(const float* x) const {
  std::vector<double> v(classes, 0.0);
  for (const auto& t : trees) v[t.predict(x)] += 1.0;
  for (auto& p : v) p /= static_cast<double>(std::max<std::size_t>(trees.size(), 1));
  return v;
}

int RandomForest::predict(const float* x) const {
  std::vector<int> counts(classes, 0);
  for (const auto& t : trees) ++counts[t.predict(x)];
  return static_cast<int>(std::max_element(counts.begin(), counts.end()) - counts.begin());
}

std::vector<int> RandomForest::predict(const Dataset& d) const {
  if (d.features() != features) throw ValidationError("forest expects " + std::to_string(features) + " features");
  std::vector<int> out(d.rows());
  for (std::size_t i = 0; i < d.rows(); ++i) out[i] = predict(d.row(i));
  return out;
}

BinEdges compute_bins(const Dataset& d, std::size_t max_bins) {
  if (max_bins < 2 || max_bins > 256) throw ValidationError("max_bins must lie in [2, 256]");
  BinEdges b;
  const std::size_t nf = d.features(), n = d.rows();
  const std::size_t stride = std::max<std::size_t>(1, n / 200000);
  for (std::size_t f = 0; f < nf; ++f) {
    std::vector<float> v;
    v.reserve(n / stride + 1);
    for (std::size_t i = 0; i < n; i += stride) v.push_back(d.at(i, f));
    std::sort(v.begin(), v.end());
    std::vector<float> uniq = v;
    uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
    std::vector<float> edges;
    if (uniq.size() <= max_bins) {
      edges = uniq;
    } else {
      for (std::size_t k = 1; k <= max_bins; ++k) {
        const std::size_t pos = std::min(v.size() - 1, k * v.size() / max_bins - 1);
        if (edges.empty() || v[pos] > edges.back()) edges.push_back(v[pos]);
      }
    }
    if (edges.empty()) edges.push_back(0.0f);
    edges.back() = std::numeric_limits<float>::infinity();
    b.edges.push_back(std::move(edges));
  }
  return b;
}

namespace {

struct Binned {
  std::size_t rows = 0;
  std::vector<std::vector<std::uint8_t>> columns;
};

Binned bin_dataset(const Dataset& d, const BinEdges& edges) {
  Binned b;
  b.rows = d.rows();
  b.columns.resize(d.features());
  for (std::size_t f = 0; f < d.features(); ++f) {
    const auto& e = edges.edges[f];
    auto& col = b.columns[f];
    col.resize(d.rows());
    for (std::size_t i = 0; i < d.rows(); ++i) {
      const auto it = std::lower_bound(e.begin(), e.end(), d.at(i, f));
      col[i] = static_cast<std::uint8_t>(std::min<std::size_t>(static_cast<std::size_t>(it - e.begin()), e.size() - 1));
    }
  }
  return b;
}

int majority(const std::array<long, kClassCount>& c, int classes) {
  int best = 0;
  for (int k = 1; k < classes; ++k) {
    if (c[k] > c[best]) best = k;
  }
  return best;
}

struct TreeBuilder {
  const Binned& data;
  const BinEdges& edges;
  const std::vector<int>& y;
  const ForestParams& params;
  int classes;
  std::size_t mtry;
  std::mt19937_64 gen;

  DecisionTree build(std::vector<std::uint32_t>& idx) {
    DecisionTree tree;
    struct Task {
      std::size_t begin, end, depth;
      int node;
    };
    tree.nodes.push_back({});
    std::vector<Task> stack{{0, idx.size(), 0, 0}};
    const std::size_t nf = data.columns.size();
    std::vector<std::size_t> order(nf);
    std::vector<std::array<long, kClassCount>> hist(256);
    while (!stack.empty()) {
      const Task t = stack.back();
      stack.pop_back();
      std::array<long, kClassCount> counts{};
      for (std::size_t i = t.begin; i < t.end; ++i) ++counts[y[idx[i]]];
      const long n = static_cast<long>(t.end - t.begin);
      tree.nodes[t.node].label = majority(counts, classes);
      const bool pure = std::count_if(counts.begin(), counts.end(), [](long c) { return c > 0; }) <= 1;
      if (pure || n < static_cast<long>(params.min_samples_split) ||
          (params.max_depth > 0 && t.depth >= params.max_depth)) {
        continue;
      }
      double parent = 0;
      for (long c : counts) parent += static_cast<double>(c) * static_cast<double>(c);
      parent /= static_cast<double>(n);

      std::iota(order.begin(), order.end(), 0);
      int best_f = -1, best_bin = -1;
      double best_score = parent + 1e-9 * std::max(1.0, parent);
      for (std::size_t tried = 0; tried < nf; ++tried) {
        // Sample features without replacement; keep drawing past mtry only
        // while no valid split has been found.
        if (tried >= mtry && best_f >= 0) break;
        std::uniform_int_distribution<std::size_t> pick(tried, nf - 1);
        std::swap(order[tried], order[pick(gen)]);
        const std::size_t f = order[tried];
        const auto& col = data.columns[f];
        const std::size_t nb = edges.edges[f].size();
        if (nb < 2) continue;
        for (std::size_t b = 0; b < nb; ++b) hist[b] = {};
        for (std::size_t i = t.begin; i < t.end; ++i) ++hist[col[idx[i]]][y[idx[i]]];
        std::array<long, kClassCount> left{};
        long nl = 0;
        for (std::size_t b = 0; b + 1 < nb; ++b) {
          for (int k = 0; k < classes; ++k) left[k] += hist[b][k];
          nl += std::accumulate(hist[b].begin(), hist[b].begin() + classes, 0L);
          const long nr = n - nl;
          if (nl < static_cast<long>(params.min_samples_leaf)) continue;
          if (nr < static_cast<long>(params.min_samples_leaf)) break;
          double sl = 0, sr = 0;
          for (int k = 0; k < classes; ++k) {
            const double l = static_cast<double>(left[k]), r = static_cast<double>(counts[k] - left[k]);
            sl += l * l;
            sr += r * r;
          }
          const double score = sl / static_cast<double>(nl) + sr / static_cast<double>(nr);
          if (score > best_score) {
            best_score = score;
            best_f = static_cast<int>(f);
            best_bin = static_cast<int>(b);
          }
        }
      }
      if (best_f < 0) continue;
      const auto& col = data.columns[best_f];
      const auto mid_it = std::partition(idx.begin() + static_cast<std::ptrdiff_t>(t.begin),
                                         idx.begin() + static_cast<std::ptrdiff_t>(t.end),
                                         [&](std::uint32_t r) { return col[r] <= best_bin; });
      const auto mid = static_cast<std::size_t>(mid_it - idx.begin());
      const int l = static_cast<int>(tree.nodes.size());
      tree.nodes.push_back({});
      tree.nodes.push_back({});
      auto& node = tree.nodes[t.node];
      node.feature = best_f;
      node.threshold = edges.edges[best_f][best_bin];
      node.left = l;
      node.right = l + 1;
      stack.push_back({mid, t.end, t.depth + 1, l + 1});
      stack.push_back({t.begin, mid, t.depth + 1, l});
    }
    return tree;
  }
};

}  // namespace

RandomForest train_random_forest(const Dataset& train, const ForestParams& params) {
  if (train.rows() == 0) throw ValidationError("train_random_forest: empty training set");
  if (params.trees < 1) throw ValidationError("train_random_forest: need at least one tree");
  if (params.min_samples_leaf < 1) throw ValidationError("train_random_forest: min_samples_leaf must be >= 1");
  RandomForest forest;
  forest.classes = kClassCount;
  forest.features = train.features();
  for (int c : train.y) {
    if (c < 0 || c >= kClassCount) throw ValidationError("train_random_forest: label out of range");
  }
  std::vector<int> present(kClassCount, 0);
  for (int c : train.y) present[c] = 1;
  if (std::accumulate(present.begin(), present.end(), 0) < 2) {
    forest.constant = true;
    DecisionTree t;
    t.nodes.push_back({});
    t.nodes[0].label = train.y[0];
    forest.trees.push_back(t);
    return forest;
  }
  const auto edges = compute_bins(train, params.max_bins);
  const auto binned = bin_dataset(train, edges);
  const std::size_t nf = train.features();
  const std::size_t mtry =
      params.max_features > 0 ? std::min(params.max_features, nf)
                              : std::max<std::size_t>(1, static_cast<std::size_t>(std::sqrt(static_cast<double>(nf))));
  forest.trees.resize(params.trees);
  parallel_for(params.trees, std::max<std::size_t>(1, params.workers), [&](std::size_t t) {
    TreeBuilder b{binned, edges, train.y, params, kClassCount, mtry,
                  std::mt19937_64(params.seed ^ (0x9E3779B97F4A7C15ULL * (t + 1)))};
    std::vector<std::uint32_t> idx(train.rows());
    if (params.bootstrap) {
      std::uniform_int_distribution<std::uint32_t> draw(0, static_cast<std::uint32_t>(train.rows() - 1));
      for (auto& i : idx) i = draw(b.gen);
    } else {
      std::iota(idx.begin(), idx.end(), 0u);
    }
    forest.trees[t] = b.build(idx);
  });
  return forest;
}

RandomForest train_decision_tree(const Dataset& train, std::size_t max_depth, std::size_t min_samples_leaf,
                                 std::uint64_t seed) {
  ForestParams p;
  p.trees = 1;
  p.bootstrap = false;
  p.max_depth = max_depth;
  p.min_samples_leaf = min_samples_leaf;
  p.max_features = train.features();
  p.seed = seed;
  return train_random_forest(train, p);
}

std::string serialize_forest(const RandomForest& f) {
  std::ostringstream out;
  out << "comfortsim-forest 1\n";
  out << "classes " << f.classes << "\nfeatures " << f.features << "\nconstant " << (f.constant ? 1 : 0) << "\n";
  out << "trees " << f.trees.size() << "\n";
  for (const auto& t : f.trees) {
    out << "tree " << t.nodes.size() << "\n";
    for (const auto& n : t.nodes) {
      out << n.feature << ' ' << csv::format_double(static_cast<double>(n.threshold)) << ' ' << n.left << ' '
          << n.right << ' ' << n.label << '\n';
    }
  }
  return out.str();
}

RandomForest parse_forest(const std::string& text) {
  std::istringstream in(text);
  std::string tag, key;
  int version = 0;
  RandomForest f;
  auto expect = [&](const char* want) {
    if (!(in >> key) || key != want) throw ParseError(std::string("forest model: expected '") + want + "'");
  };
  if (!(in >> tag >> version) || tag != "comfortsim-forest" || version != 1) {
    throw ParseError("forest model: unsupported header");
  }
  int constant = 0;
  std::size_t trees = 0;
  expect("classes");
  in >> f.classes;
  expect("features");
  in >> f.features;
  expect("constant");
  in >> constant;
  expect("trees");
  in >> trees;
  f.constant = constant != 0;
  if (!in || f.classes < 1 || f.classes > kClassCount) throw ParseError("forest model: bad header values");
  f.trees.resize(trees);
  for (auto& t : f.trees) {
    std::size_t n = 0;
    expect("tree");
    if (!(in >> n) || n == 0) throw ParseError("forest model: bad tree size");
    t.nodes.resize(n);
    for (auto& node : t.nodes) {
      std::string thr;
      if (!(in >> node.feature >> thr >> node.left >> node.right >> node.label)) {
        throw ParseError("forest model: truncated node list");
      }
      node.threshold = static_cast<float>(csv::parse_double(thr));
      const int limit = static_cast<int>(n);
      if (node.feature >= static_cast<int>(f.features) || node.label < 0 || node.label >= f.classes ||
          (node.feature >= 0 && (node.left <= 0 || node.left >= limit || node.right <= 0 || node.right >= limit))) {
        throw ParseError("forest model: node out of range");
      }
    }
  }
  return f;
}

void write_forest(const std::string& path, const RandomForest& f) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path);
  out << serialize_forest(f);
}

RandomForest read_forest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open model file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_forest(ss.str());
}

}  // namespace comfort
