#include "comfort/metrics.hpp"

#include <cmath>

#include "comfort/error.hpp"

namespace comfort {

double f1_score(double p, double r) { return p + r > 0 ? 2 * p * r / (p + r) : 0.0; }

ClassMetrics metrics_from_counts(long tp, long fp, long fn, long tn) {
  if (tp < 0 || fp < 0 || fn < 0 || tn < 0) throw ValidationError("confusion counts must be non-negative");
  ClassMetrics m;
  m.tp = tp, m.fp = fp, m.fn = fn, m.tn = tn;
  m.support = tp + fn;
  if (tp + fp > 0) {
    m.precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
  } else {
    m.zero_division = true;
  }
  if (tp + fn > 0) {
    m.recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
  } else {
    m.zero_division = true;
  }
  if (m.precision + m.recall > 0) {
    m.f1 = f1_score(m.precision, m.recall);
  } else {
    m.zero_division = true;
  }
  return m;
}

long ConfusionMatrix::total() const {
  long t = 0;
  for (const auto& row : counts) {
    for (long v : row) t += v;
  }
  return t;
}

ClassMetrics ConfusionMatrix::of(int cls) const {
  long tp = counts[cls][cls], fp = 0, fn = 0;
  for (int j = 0; j < classes; ++j) {
    if (j == cls) continue;
    fp += counts[j][cls];
    fn += counts[cls][j];
  }
  return metrics_from_counts(tp, fp, fn, total() - tp - fp - fn);
}

ConfusionMatrix confusion(const std::vector<int>& predicted, const std::vector<int>& truth, int classes) {
  if (predicted.size() != truth.size()) throw ValidationError("evaluate: prediction and truth lengths differ");
  if (classes < 1) throw ValidationError("evaluate: class count must be >= 1");
  ConfusionMatrix m;
  m.classes = classes;
  m.counts.assign(classes, std::vector<long>(classes, 0));
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] < 0 || truth[i] >= classes || predicted[i] < 0 || predicted[i] >= classes) {
      throw ValidationError("evaluate: class index out of range at " + std::to_string(i));
    }
    ++m.counts[truth[i]][predicted[i]];
  }
  return m;
}

std::vector<ClassMetrics> evaluate(const std::vector<int>& predicted, const std::vector<int>& truth, int classes) {
  const auto m = confusion(predicted, truth, classes);
  std::vector<ClassMetrics> out;
  for (int c = 0; c < classes; ++c) out.push_back(m.of(c));
  return out;
}

double accuracy(const std::vector<int>& predicted, const std::vector<int>& truth) {
  if (predicted.size() != truth.size()) throw ValidationError("accuracy: lengths differ");
  if (truth.empty()) return 0.0;
  std::size_t ok = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) ok += predicted[i] == truth[i] ? 1 : 0;
  return static_cast<double>(ok) / static_cast<double>(truth.size());
}

double cross_entropy(const std::vector<double>& p, int truth) {
  if (truth < 0 || static_cast<std::size_t>(truth) >= p.size()) throw ValidationError("cross_entropy: bad class");
  return -std::log(p[truth]);
}

double cross_entropy(const std::vector<std::vector<double>>& p, const std::vector<int>& truth) {
  if (p.size() != truth.size()) throw ValidationError("cross_entropy: lengths differ");
  if (p.empty()) return 0.0;
  double s = 0;
  for (std::size_t i = 0; i < p.size(); ++i) s += cross_entropy(p[i], truth[i]);
  return s / static_cast<double>(p.size());
}

}  // namespace comfort
