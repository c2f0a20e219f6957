#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "comfort/dataset.hpp"

namespace comfort {

struct ForestParams {
  std::size_t trees = 100;
  std::size_t max_depth = 0;          // 0 = unlimited
  std::size_t min_samples_split = 2;
  std::size_t min_samples_leaf = 1;
  std::size_t max_features = 0;       // 0 = floor(sqrt(d)), at least 1
  bool bootstrap = true;
  std::size_t max_bins = 256;
  std::uint64_t seed = 1;
  std::size_t workers = 1;
};

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  float threshold = 0;  // go left when x <= threshold
  int left = -1, right = -1;
  int label = 0;
};

struct DecisionTree {
  std::vector<TreeNode> nodes;
  int predict(const float* x) const;
  std::size_t depth() const;
};

/// Bagged CART trees (Gini impurity) voting by majority; ties go to the
/// smallest class index.
struct RandomForest {
  int classes = kClassCount;
  std::size_t features = 0;
  std::vector<DecisionTree> trees;
  bool constant = false;  // training set held a single class

  int predict(const float* x) const;
  std::vector<int> predict(const Dataset& d) const;
  /// Vote fractions per class.
  std::vector<double> vote(const float* x) const;
};

/// Quantile bin edges per feature; value v falls in the first bin whose
/// upper edge is >= v.
struct BinEdges {
  std::vector<std::vector<float>> edges;
};
BinEdges compute_bins(const Dataset& d, std::size_t max_bins);

RandomForest train_random_forest(const Dataset& train, const ForestParams& params);
/// Single unbagged tree over all features.
RandomForest train_decision_tree(const Dataset& train, std::size_t max_depth = 0, std::size_t min_samples_leaf = 1,
                                 std::uint64_t seed = 1);

std::string serialize_forest(const RandomForest& f);
RandomForest parse_forest(const std::string& text);
void write_forest(const std::string& path, const RandomForest& f);
RandomForest read_forest(const std::string& path);

}  // namespace comfort
