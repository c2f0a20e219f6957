#include "comfort/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include "comfort/csv.hpp"
#include "comfort/error.hpp"

namespace comfort {

void Standardizer::fit(const Dataset& d) {
  const std::size_t nf = d.features(), n = d.rows();
  mean.assign(nf, 0.0);
  scale.assign(nf, 1.0);
  if (n == 0) return;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t f = 0; f < nf; ++f) mean[f] += d.at(i, f);
  }
  for (auto& m : mean) m /= static_cast<double>(n);
  std::vector<double> var(nf, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t f = 0; f < nf; ++f) {
      const double c = d.at(i, f) - mean[f];
      var[f] += c * c;
    }
  }
  for (std::size_t f = 0; f < nf; ++f) {
    const double sd = std::sqrt(var[f] / static_cast<double>(n));
    scale[f] = sd > 1e-12 ? sd : 1.0;
  }
}

Eigen::MatrixXd Standardizer::apply(const Dataset& d) const {
  if (d.features() != mean.size()) throw ValidationError("standardizer fitted on a different feature count");
  Eigen::MatrixXd x(static_cast<Eigen::Index>(d.rows()), static_cast<Eigen::Index>(d.features()));
  for (std::size_t i = 0; i < d.rows(); ++i) {
    for (std::size_t f = 0; f < d.features(); ++f) {
      x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(f)) = (d.at(i, f) - mean[f]) / scale[f];
    }
  }
  return x;
}

// ---------------------------------------------------------------------------

Mlp::Mlp(const std::vector<std::size_t>& sizes, std::uint64_t seed) : sizes_(sizes) {
  if (sizes.size() < 2) throw ValidationError("mlp: need at least an input and an output layer");
  for (auto s : sizes) {
    if (s == 0) throw ValidationError("mlp: layer sizes must be >= 1");
  }
  std::mt19937_64 gen(seed);
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    const auto fi = static_cast<Eigen::Index>(sizes[l]), fo = static_cast<Eigen::Index>(sizes[l + 1]);
    const double limit = std::sqrt(6.0 / static_cast<double>(fi + fo));
    std::uniform_real_distribution<double> u(-limit, limit);
    Eigen::MatrixXd w(fi, fo);
    for (Eigen::Index c = 0; c < fo; ++c) {
      for (Eigen::Index r = 0; r < fi; ++r) w(r, c) = u(gen);
    }
    weights.push_back(std::move(w));
    biases.push_back(Eigen::RowVectorXd::Zero(fo));
  }
}

std::size_t Mlp::parameter_count() const {
  std::size_t n = 0;
  for (std::size_t l = 0; l < weights.size(); ++l) n += weights[l].size() + biases[l].size();
  return n;
}

std::vector<double> Mlp::parameters() const {
  std::vector<double> p;
  p.reserve(parameter_count());
  for (std::size_t l = 0; l < weights.size(); ++l) {
    p.insert(p.end(), weights[l].data(), weights[l].data() + weights[l].size());
    p.insert(p.end(), biases[l].data(), biases[l].data() + biases[l].size());
  }
  return p;
}

void Mlp::set_parameters(const std::vector<double>& p) {
  if (p.size() != parameter_count()) throw ValidationError("mlp: parameter vector has the wrong length");
  std::size_t k = 0;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    std::copy(p.begin() + static_cast<std::ptrdiff_t>(k),
              p.begin() + static_cast<std::ptrdiff_t>(k + weights[l].size()), weights[l].data());
    k += weights[l].size();
    std::copy(p.begin() + static_cast<std::ptrdiff_t>(k), p.begin() + static_cast<std::ptrdiff_t>(k + biases[l].size()),
              biases[l].data());
    k += biases[l].size();
  }
}

namespace {

// Row-wise log-softmax of the logits.
Eigen::MatrixXd log_softmax(const Eigen::MatrixXd& z) {
  Eigen::MatrixXd out(z.rows(), z.cols());
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    const double m = z.row(i).maxCoeff();
    const double lse = m + std::log((z.row(i).array() - m).exp().sum());
    out.row(i) = z.row(i).array() - lse;
  }
  return out;
}

}  // namespace

Eigen::MatrixXd Mlp::forward(const Eigen::MatrixXd& x) const {
  Eigen::MatrixXd a = x;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    Eigen::MatrixXd z = (a * weights[l]).rowwise() + biases[l];
    if (l + 1 < weights.size()) {
      a = z.array().tanh();
    } else {
      a = log_softmax(z).array().exp();
    }
  }
  return a;
}

double Mlp::loss(const Eigen::MatrixXd& x, const std::vector<int>& y) const {
  Eigen::MatrixXd a = x;
  for (std::size_t l = 0; l + 1 < weights.size(); ++l) a = ((a * weights[l]).rowwise() + biases[l]).array().tanh();
  const Eigen::MatrixXd lp = log_softmax((a * weights.back()).rowwise() + biases.back());
  double s = 0;
  for (Eigen::Index i = 0; i < lp.rows(); ++i) s -= lp(i, y[static_cast<std::size_t>(i)]);
  return lp.rows() ? s / static_cast<double>(lp.rows()) : 0.0;
}

double Mlp::loss_and_gradient(const Eigen::MatrixXd& x, const std::vector<int>& y, std::vector<double>& grad) const {
  if (static_cast<std::size_t>(x.rows()) != y.size()) throw ValidationError("mlp: rows and labels differ");
  const std::size_t nl = weights.size();
  std::vector<Eigen::MatrixXd> act(nl + 1);
  act[0] = x;
  for (std::size_t l = 0; l + 1 < nl; ++l) act[l + 1] = ((act[l] * weights[l]).rowwise() + biases[l]).array().tanh();
  const Eigen::MatrixXd lp = log_softmax((act[nl - 1] * weights.back()).rowwise() + biases.back());
  const auto n = static_cast<double>(x.rows());
  double s = 0;
  Eigen::MatrixXd delta = lp.array().exp();
  for (Eigen::Index i = 0; i < lp.rows(); ++i) {
    const int c = y[static_cast<std::size_t>(i)];
    s -= lp(i, c);
    delta(i, c) -= 1.0;
  }
  delta /= n;
  std::vector<Eigen::MatrixXd> gw(nl);
  std::vector<Eigen::RowVectorXd> gb(nl);
  for (std::size_t l = nl; l-- > 0;) {
    gw[l] = act[l].transpose() * delta;
    gb[l] = delta.colwise().sum();
    if (l > 0) delta = ((delta * weights[l].transpose()).array() * (1.0 - act[l].array().square())).matrix();
  }
  grad.clear();
  grad.reserve(parameter_count());
  for (std::size_t l = 0; l < nl; ++l) {
    grad.insert(grad.end(), gw[l].data(), gw[l].data() + gw[l].size());
    grad.insert(grad.end(), gb[l].data(), gb[l].data() + gb[l].size());
  }
  return s / n;
}

// ---------------------------------------------------------------------------

Eigen::MatrixXd MlpModel::probabilities(const Dataset& d) const { return net.forward(standardizer.apply(d)); }

std::vector<int> MlpModel::predict(const Dataset& d) const {
  const Eigen::MatrixXd p = probabilities(d);
  std::vector<int> out(d.rows());
  for (Eigen::Index i = 0; i < p.rows(); ++i) {
    Eigen::Index c = 0;
    p.row(i).maxCoeff(&c);
    out[static_cast<std::size_t>(i)] = static_cast<int>(c);
  }
  return out;
}

namespace {

Dataset sample_rows(const Dataset& d, std::size_t max_rows, std::mt19937_64& gen) {
  if (max_rows == 0 || d.rows() <= max_rows) return d;
  std::vector<std::size_t> idx(d.rows());
  std::iota(idx.begin(), idx.end(), 0);
  std::shuffle(idx.begin(), idx.end(), gen);
  idx.resize(max_rows);
  std::sort(idx.begin(), idx.end());
  return subset(d, idx);
}

}  // namespace

MlpModel train_mlp(const Dataset& train_in, const Dataset& val_in, const MlpParams& params) {
  if (train_in.rows() == 0) throw ValidationError("train_mlp: empty training set");
  if (params.batch == 0 || params.epochs == 0) throw ValidationError("train_mlp: batch and epochs must be >= 1");
  std::mt19937_64 gen(params.seed);
  const Dataset train = sample_rows(train_in, params.max_train_rows, gen);
  const Dataset val = sample_rows(val_in.rows() ? val_in : train_in, params.max_train_rows / 4 + 1, gen);

  MlpModel m;
  m.standardizer.fit(train);
  std::vector<std::size_t> sizes{train.features()};
  sizes.insert(sizes.end(), params.hidden.begin(), params.hidden.end());
  sizes.push_back(kClassCount);
  m.net = Mlp(sizes, params.seed);
  const Eigen::MatrixXd xt = m.standardizer.apply(train);
  const Eigen::MatrixXd xv = m.standardizer.apply(val);

  std::vector<double> theta = m.net.parameters(), mom(theta.size(), 0.0), vel(theta.size(), 0.0), grad;
  std::vector<double> best = theta;
  double best_val = m.net.loss(xv, val.y);
  std::size_t since_best = 0, t = 0;
  std::vector<Eigen::Index> order(static_cast<std::size_t>(xt.rows()));
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t epoch = 0; epoch < params.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), gen);
    double epoch_loss = 0;
    for (std::size_t b = 0; b < order.size(); b += params.batch) {
      const std::size_t e = std::min(order.size(), b + params.batch);
      Eigen::MatrixXd xb(static_cast<Eigen::Index>(e - b), xt.cols());
      std::vector<int> yb(e - b);
      for (std::size_t i = b; i < e; ++i) {
        xb.row(static_cast<Eigen::Index>(i - b)) = xt.row(order[i]);
        yb[i - b] = train.y[static_cast<std::size_t>(order[i])];
      }
      const double l = m.net.loss_and_gradient(xb, yb, grad);
      if (!std::isfinite(l)) throw Error("train_mlp: loss diverged at epoch " + std::to_string(epoch + 1));
      epoch_loss += l * static_cast<double>(e - b);
      ++t;
      const double c1 = 1 - std::pow(params.beta1, static_cast<double>(t));
      const double c2 = 1 - std::pow(params.beta2, static_cast<double>(t));
      for (std::size_t k = 0; k < theta.size(); ++k) {
        mom[k] = params.beta1 * mom[k] + (1 - params.beta1) * grad[k];
        vel[k] = params.beta2 * vel[k] + (1 - params.beta2) * grad[k] * grad[k];
        theta[k] -= params.learning_rate * (mom[k] / c1) / (std::sqrt(vel[k] / c2) + params.epsilon);
      }
      m.net.set_parameters(theta);
    }
    m.train_loss.push_back(epoch_loss / static_cast<double>(order.size()));
    const double vl = m.net.loss(xv, val.y);
    if (!std::isfinite(vl)) throw Error("train_mlp: validation loss diverged at epoch " + std::to_string(epoch + 1));
    m.val_loss.push_back(vl);
    if (vl < best_val) {
      best_val = vl, best = theta, since_best = 0;
      m.best_epoch = epoch + 1;
    } else if (++since_best >= params.patience) {
      m.stopped_early = true;
      break;
    }
  }
  m.net.set_parameters(best);
  return m;
}

std::string serialize_mlp(const MlpModel& m) {
  std::ostringstream out;
  out << "comfortsim-mlp 1\nsizes " << m.net.sizes().size();
  for (auto s : m.net.sizes()) out << ' ' << s;
  out << "\nmean";
  for (double v : m.standardizer.mean) out << ' ' << csv::format_double(v);
  out << "\nscale";
  for (double v : m.standardizer.scale) out << ' ' << csv::format_double(v);
  out << "\nparameters " << m.net.parameter_count() << '\n';
  for (double v : m.net.parameters()) out << csv::format_double(v) << '\n';
  return out.str();
}

MlpModel parse_mlp(const std::string& text) {
  std::istringstream in(text);
  std::string tag, key;
  int version = 0;
  if (!(in >> tag >> version) || tag != "comfortsim-mlp" || version != 1) throw ParseError("mlp model: bad header");
  std::size_t nsizes = 0;
  if (!(in >> key >> nsizes) || key != "sizes" || nsizes < 2) throw ParseError("mlp model: bad sizes line");
  std::vector<std::size_t> sizes(nsizes);
  for (auto& s : sizes) in >> s;
  auto read_vec = [&](const char* name, std::size_t n) {
    std::vector<double> v(n);
    std::string tok;
    if (!(in >> key) || key != name) throw ParseError(std::string("mlp model: expected ") + name);
    for (auto& x : v) {
      if (!(in >> tok)) throw ParseError("mlp model: truncated");
      x = csv::parse_double(tok);
    }
    return v;
  };
  MlpModel m;
  m.standardizer.mean = read_vec("mean", sizes[0]);
  m.standardizer.scale = read_vec("scale", sizes[0]);
  m.net = Mlp(sizes, 0);
  std::size_t np = 0;
  if (!(in >> key >> np) || key != "parameters" || np != m.net.parameter_count()) {
    throw ParseError("mlp model: parameter count mismatch");
  }
  std::vector<double> p(np);
  std::string tok;
  for (auto& x : p) {
    if (!(in >> tok)) throw ParseError("mlp model: truncated parameters");
    x = csv::parse_double(tok);
  }
  m.net.set_parameters(p);
  return m;
}

void write_mlp(const std::string& path, const MlpModel& m) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path);
  out << serialize_mlp(m);
}

MlpModel read_mlp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open model file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_mlp(ss.str());
}

}  // namespace comfort
