#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <set>

#include "comfort/dataset.hpp"
#include "comfort/error.hpp"
#include "comfort/forest.hpp"
#include "comfort/metrics.hpp"
#include "comfort/mlp.hpp"
#include "comfort/multihorizon.hpp"

using namespace comfort;

namespace {

SimulationResult tiny_sim(const std::string& id, std::size_t n) {
  SimulationResult s;
  s.dwelling_id = id;
  s.grid = {from_civil({2022, 11, 1}), kOutputStep, n};
  s.t_out.assign(n, 3);
  for (const char* name : {"living", "bathroom"}) {
    RoomSeries r;
    r.name = name;
    r.t_air.assign(n, 19);
    r.t_mr.assign(n, 17);
    r.t_op.assign(n, 18);
    r.q_conv.assign(n, 100);
    r.q_rad.assign(n, 50);
    r.window_open.assign(n, 0);
    r.presence.assign(n, 0);
    s.rooms.push_back(r);
  }
  return s;
}

// Two features; class follows the sign of x0, x1 is noise.
Dataset toy(std::size_t n, std::uint64_t seed, std::size_t dwellings = 1) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1, 1);
  Dataset d;
  d.feature_names = {"x0", "x1"};
  for (std::size_t w = 0; w < dwellings; ++w) d.dwellings.push_back("D" + std::to_string(w));
  const std::size_t per = n / dwellings;
  for (std::size_t w = 0; w < dwellings; ++w) {
    for (std::size_t k = 0; k < per; ++k) {
      const double a = u(rng), b = u(rng);
      d.x.push_back(static_cast<float>(a));
      d.x.push_back(static_cast<float>(b));
      d.y.push_back(a > 0.3 ? 1 : (a < -0.6 ? 2 : 0));
      d.dwelling.push_back(static_cast<std::uint32_t>(w));
      d.step.push_back(static_cast<std::uint32_t>(k));
    }
  }
  return d;
}

}  // namespace

TEST_CASE("dataset: one row per dwelling and step") {
  const auto a = tiny_sim("A", 10), b = tiny_sim("B", 10);
  LabelFile la{a.grid, std::vector<Label>(10, Label::Unknown),
               {std::vector<double>(10, NAN), std::vector<std::uint8_t>(10, 0)}};
  LabelFile lb = la;
  lb.series.defined[3] = 1;
  lb.series.value[3] = 16;
  lb.labels[3] = Label::Discomfort;
  SurveyRecord sa, sb;
  sa.dwelling_id = "A", sb.dwelling_id = "B";
  sa.avg_age = 44;
  const auto d = assemble_dataset({{&a, &la, &sa}, {&b, &lb, &sb}});
  CHECK(d.rows() == 20);
  CHECK(d.features() == dataset_feature_names().size());
  CHECK(d.dwellings == std::vector<std::string>{"A", "B"});
  CHECK(d.y[0] == static_cast<int>(Label::Unknown));
  CHECK(d.y[13] == static_cast<int>(Label::Discomfort));
  CHECK(d.at(0, d.feature_index("presence")) == 0);
  CHECK(d.at(0, d.feature_index("t_op_pres")) == doctest::Approx(18));
  CHECK(d.at(13, d.feature_index("t_op_pres")) == doctest::Approx(16));
  CHECK(d.at(0, d.feature_index("avg_age")) == 44);
  CHECK(d.step[19] == 9);
  LabelFile wrong = la;
  wrong.grid.start += kOutputStep;
  CHECK_THROWS_AS(assemble_dataset({{&a, &wrong, &sa}}), ValidationError);
  CHECK_THROWS_AS(assemble_dataset({{&a, &la, &sb}}), ValidationError);
}

TEST_CASE("splits: sizes, determinism and dwelling disjointness") {
  const auto d = toy(100, 1);
  const auto s = split_dataset(d, {0.6, 0.2, 0.2, SplitMode::ByStep, 9});
  CHECK(s.train.size() == 60);
  CHECK(s.val.size() == 20);
  CHECK(s.test.size() == 20);
  std::set<std::size_t> all(s.train.begin(), s.train.end());
  all.insert(s.val.begin(), s.val.end());
  all.insert(s.test.begin(), s.test.end());
  CHECK(all.size() == 100);
  const auto again = split_dataset(d, {0.6, 0.2, 0.2, SplitMode::ByStep, 9});
  CHECK(again.train == s.train);
  CHECK(again.test == s.test);

  const auto many = toy(400, 2, 20);
  const auto g = split_dataset(many, {0.6, 0.2, 0.2, SplitMode::ByDwelling, 9});
  std::set<std::uint32_t> tr, va, te;
  for (auto i : g.train) tr.insert(many.dwelling[i]);
  for (auto i : g.val) va.insert(many.dwelling[i]);
  for (auto i : g.test) te.insert(many.dwelling[i]);
  for (auto w : te) {
    CHECK(tr.count(w) == 0);
    CHECK(va.count(w) == 0);
  }
  for (auto w : va) CHECK(tr.count(w) == 0);
  CHECK(tr.size() + va.size() + te.size() == 20);
  CHECK_THROWS_AS(validate(SplitSpec{0.7, 0.2, 0.2}), ValidationError);
}

TEST_CASE("metrics from counts") {
  const auto m = metrics_from_counts(3, 1, 2);
  CHECK(m.precision == doctest::Approx(0.75));
  CHECK(m.recall == doctest::Approx(0.6));
  CHECK(m.f1 == doctest::Approx(2.0 / 3.0));
  CHECK(m.support == 5);
  CHECK(f1_score(0.61, 0.37) == doctest::Approx(0.46).epsilon(0.005));
  CHECK(f1_score(0, 0) == 0);
  const auto z = metrics_from_counts(0, 0, 0);
  CHECK(z.zero_division);
  CHECK(z.f1 == 0);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0, 1);
  for (int i = 0; i < 1000; ++i) {
    const double p = u(rng), r = u(rng);
    const double f = f1_score(p, r);
    CHECK(f <= std::max(p, r) + 1e-12);
    CHECK(f >= std::min(p, r) - 1e-12);
  }
}

TEST_CASE("confusion matrix and accuracy") {
  const std::vector<int> truth = {0, 0, 1, 1, 2, 2}, pred = {0, 1, 1, 1, 2, 0};
  const auto c = confusion(pred, truth, 3);
  CHECK(c.total() == 6);
  CHECK(c.counts[0][1] == 1);
  CHECK(c.counts[2][0] == 1);
  const auto m1 = c.of(1);
  CHECK(m1.tp == 2);
  CHECK(m1.fp == 1);
  CHECK(m1.fn == 0);
  CHECK(accuracy(pred, truth) == doctest::Approx(4.0 / 6));
  CHECK_THROWS(confusion({0}, {0, 1}, 3));
}

TEST_CASE("cross entropy") {
  CHECK(cross_entropy(std::vector<double>{0, 1, 0}, 1) == doctest::Approx(0));
  CHECK(cross_entropy(std::vector<double>{1.0 / 3, 1.0 / 3, 1.0 / 3}, 2) == doctest::Approx(std::log(3.0)));
  CHECK(cross_entropy(std::vector<std::vector<double>>{{1, 0, 0}, {0.5, 0.5, 0}}, {0, 1}) ==
        doctest::Approx(std::log(2.0) / 2));
}

TEST_CASE("trees learn separable data") {
  const auto train = toy(2000, 3), test = toy(500, 4);
  const auto tree = train_decision_tree(train);
  const auto forest = train_random_forest(train, {.trees = 20, .seed = 3});
  CHECK(accuracy(tree.predict(test), test.y) > 0.97);
  CHECK(accuracy(forest.predict(test), test.y) > 0.97);
  CHECK(accuracy(tree.predict(train), train.y) == 1.0);
  // Determinism and the text format.
  const auto again = train_random_forest(train, {.trees = 20, .seed = 3});
  CHECK(serialize_forest(again) == serialize_forest(forest));
  const auto parsed = parse_forest(serialize_forest(forest));
  CHECK(parsed.predict(test) == forest.predict(test));
  const auto shallow = train_decision_tree(train, 2);
  CHECK(shallow.trees[0].depth() <= 2);
}

TEST_CASE("forest on a single class is constant") {
  auto d = toy(50, 5);
  std::fill(d.y.begin(), d.y.end(), 1);
  const auto f = train_random_forest(d, {.trees = 5});
  CHECK(f.constant);
  for (int p : f.predict(toy(20, 6))) CHECK(p == 1);
  const auto v = f.vote(d.row(0));
  CHECK(v[1] == 1.0);
}

TEST_CASE("mlp gradient matches finite differences") {
  const auto d = toy(40, 7);
  Standardizer st;
  st.fit(d);
  const auto x = st.apply(d);
  Mlp net({2, 5, 4, 3}, 11);
  std::vector<double> grad;
  net.loss_and_gradient(x, d.y, grad);
  auto p = net.parameters();
  REQUIRE(grad.size() == p.size());
  double worst = 0;
  const double h = 1e-5;
  for (std::size_t i = 0; i < p.size(); ++i) {
    auto q = p;
    q[i] = p[i] + h;
    net.set_parameters(q);
    const double up = net.loss(x, d.y);
    q[i] = p[i] - h;
    net.set_parameters(q);
    const double down = net.loss(x, d.y);
    const double numeric = (up - down) / (2 * h);
    worst = std::max(worst, std::abs(numeric - grad[i]) / std::max(1.0, std::abs(numeric)));
  }
  net.set_parameters(p);
  CHECK(worst < 1e-4);
  const auto probs = net.forward(x);
  for (Eigen::Index r = 0; r < probs.rows(); ++r) CHECK(probs.row(r).sum() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("mlp training reduces loss and round trips") {
  const auto train = toy(1500, 8), val = toy(300, 9);
  MlpParams p;
  p.hidden = {16};
  p.epochs = 40;
  p.batch = 64;
  p.learning_rate = 1e-2;
  p.patience = 5;
  const auto m = train_mlp(train, val, p);
  REQUIRE_FALSE(m.train_loss.empty());
  CHECK(m.train_loss.back() < m.train_loss.front());
  CHECK(accuracy(m.predict(val), val.y) > 0.9);
  const auto back = parse_mlp(serialize_mlp(m));
  CHECK(back.predict(val) == m.predict(val));
  CHECK(serialize_mlp(back) == serialize_mlp(m));
  const auto same = train_mlp(train, val, p);
  CHECK(serialize_mlp(same) == serialize_mlp(m));
}

TEST_CASE("standardizer keeps constant features finite") {
  auto d = toy(10, 10);
  for (std::size_t i = 0; i < d.rows(); ++i) d.x[i * 2 + 1] = 4;
  Standardizer s;
  s.fit(d);
  CHECK(s.scale[1] == 1);
  const auto x = s.apply(d);
  CHECK(x.allFinite());
  CHECK(x.col(0).mean() == doctest::Approx(0).epsilon(1e-6));
}

TEST_CASE("sequences and lagged features") {
  const auto d = toy(60, 12, 3);
  const auto seq = sequences(d);
  REQUIRE(seq.size() == 3);
  CHECK(seq[1].first == 20);
  CHECK(seq[1].last == 40);
  const auto lag = lagged_dataset(d, 4);
  CHECK(lag.rows() == 3 * 16);
  CHECK(lag.features() == 6);
  CHECK(lag.feature_names[2] == "lag_1");
  // Row 0 of the lagged set is source row 4; lag_1 is the label at row 3.
  CHECK(lag.at(0, 2) == d.y[3]);
  CHECK(lag.at(0, 5) == d.y[0]);
  CHECK_THROWS_AS(lagged_dataset(d, 20), ValidationError);
  auto gap = d;
  gap.step[5] = 99;
  CHECK_THROWS(sequences(gap));
}

TEST_CASE("multihorizon: constant labels and window semantics") {
  auto d = toy(100, 13, 2);
  std::fill(d.y.begin(), d.y.end(), 0);
  const auto model = train_multihorizon(d, {1, {.trees = 3}});
  for (auto mode : {HorizonMode::TeacherForced, HorizonMode::Recursive}) {
    const auto p = predict_multihorizon(model, d, mode);
    CHECK(p.rows.size() == 98);
    CHECK(p.predicted == p.truth);
    for (auto w : p.window_differs) CHECK(w == 0);
  }

  const auto train = toy(1200, 14, 4);
  const auto m = train_multihorizon(train, {3, {.trees = 10, .seed = 2}});
  const auto test = toy(300, 15, 3);
  const auto tf = predict_multihorizon(m, test, HorizonMode::TeacherForced);
  for (auto w : tf.window_differs) CHECK(w == 0);
  const auto rec = predict_multihorizon(m, test, HorizonMode::Recursive, 3);
  CHECK(rec.rows == tf.rows);
  // A recursive window differs exactly when a prediction among the previous W
  // (after seeding) was wrong.
  std::size_t offset = 0;
  for (const auto& s : sequences(test)) {
    const std::size_t n = s.last - s.first - 3;
    for (std::size_t i = 0; i < n; ++i) {
      bool wrong = false;
      for (std::size_t j = (i >= 3 ? i - 3 : 0); j < i; ++j) {
        wrong = wrong || rec.predicted[offset + j] != rec.truth[offset + j];
      }
      CHECK(rec.window_differs[offset + i] == (wrong ? 1 : 0));
    }
    offset += n;
  }
  CHECK(serialize_multihorizon(parse_multihorizon(serialize_multihorizon(m))) == serialize_multihorizon(m));
  CHECK(predict_multihorizon(m, test, HorizonMode::Recursive, 1).predicted == rec.predicted);
}
