#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "comfort/dataset.hpp"

namespace comfort {

/// Per-feature affine map fitted on training rows; constant features keep scale 1.
struct Standardizer {
  std::vector<double> mean, scale;
  void fit(const Dataset& d);
  Eigen::MatrixXd apply(const Dataset& d) const;
};

/// Fully connected network: tanh hidden layers, softmax output.
class Mlp {
 public:
  Mlp() = default;
  Mlp(const std::vector<std::size_t>& sizes, std::uint64_t seed);

  const std::vector<std::size_t>& sizes() const { return sizes_; }
  std::size_t parameter_count() const;
  std::vector<double> parameters() const;
  void set_parameters(const std::vector<double>& p);

  /// Row-wise class probabilities for row-major samples.
  Eigen::MatrixXd forward(const Eigen::MatrixXd& x) const;
  /// Mean cross-entropy over the rows.
  double loss(const Eigen::MatrixXd& x, const std::vector<int>& y) const;
  /// Mean cross-entropy and its gradient, flattened as parameters().
  double loss_and_gradient(const Eigen::MatrixXd& x, const std::vector<int>& y, std::vector<double>& grad) const;

  std::vector<Eigen::MatrixXd> weights;  // layer l: sizes[l] x sizes[l+1]
  std::vector<Eigen::RowVectorXd> biases;

 private:
  std::vector<std::size_t> sizes_;
};

struct MlpParams {
  std::vector<std::size_t> hidden = {32, 16};
  std::size_t epochs = 30;
  std::size_t batch = 256;
  double learning_rate = 1e-3;
  double beta1 = 0.9, beta2 = 0.999, epsilon = 1e-8;
  std::size_t patience = 3;
  std::size_t max_train_rows = 100000;  // 0 = all rows
  std::uint64_t seed = 1;
};

struct MlpModel {
  Standardizer standardizer;
  Mlp net;
  std::vector<double> train_loss, val_loss;  // per epoch
  std::size_t best_epoch = 0;
  bool stopped_early = false;

  std::vector<int> predict(const Dataset& d) const;
  Eigen::MatrixXd probabilities(const Dataset& d) const;
};

/// Adam on mini-batches; keeps the parameters of the epoch with the lowest
/// validation loss and stops after `patience` epochs without improvement.
MlpModel train_mlp(const Dataset& train, const Dataset& val, const MlpParams& params);

std::string serialize_mlp(const MlpModel& m);
MlpModel parse_mlp(const std::string& text);
void write_mlp(const std::string& path, const MlpModel& m);
MlpModel read_mlp(const std::string& path);

}  // namespace comfort
