#pragma once

#include <string>
#include <vector>

namespace comfort {

struct ClassMetrics {
  long tp = 0, fp = 0, fn = 0, tn = 0;
  long support = 0;  // tp + fn
  double precision = 0, recall = 0, f1 = 0;
  bool zero_division = false;  // some ratio had a zero denominator and was set to 0
};

/// Precision, recall and F1 from one class's counts.
ClassMetrics metrics_from_counts(long tp, long fp, long fn, long tn = 0);
/// Harmonic mean; 0 when both are 0.
double f1_score(double precision, double recall);

struct ConfusionMatrix {
  int classes = 0;
  std::vector<std::vector<long>> counts;  // [truth][prediction]

  ClassMetrics of(int cls) const;
  long total() const;
};

ConfusionMatrix confusion(const std::vector<int>& predicted, const std::vector<int>& truth, int classes);
std::vector<ClassMetrics> evaluate(const std::vector<int>& predicted, const std::vector<int>& truth, int classes);
double accuracy(const std::vector<int>& predicted, const std::vector<int>& truth);

/// -sum_i y_i log p_i for one sample with a one-hot truth.
double cross_entropy(const std::vector<double>& probabilities, int truth);
/// Mean over samples.
double cross_entropy(const std::vector<std::vector<double>>& probabilities, const std::vector<int>& truth);

}  // namespace comfort
