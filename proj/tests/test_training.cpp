#include <doctest.h>

#include <cmath>
#include <random>

#include "gvf/errors.hpp"
#include "gvf/synth.hpp"
#include "gvf/training.hpp"
#include "oracle.hpp"

using namespace gvf;

namespace {

Eigen::MatrixXd gaussian(std::mt19937_64& rng, Eigen::Index r, Eigen::Index c) {
  std::normal_distribution<double> g(0, 1);
  Eigen::MatrixXd m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m(i) = g(rng);
  return m;
}

struct Instance {
  GvfModel model;
  Batch batch;
};

Instance small_instance(std::uint64_t seed, bool masked) {
  std::mt19937_64 rng(seed);
  auto k = std::make_shared<const SimplicialComplex>(oracle::random_complex(rng, 10, 0.45, 0.7));
  const auto bundle = BundleConfig::standard(2, 2);
  ModelShape shape;
  shape.hidden = 5;
  shape.gate_hidden = 4;
  shape.flow_hidden = 6;
  Instance in{init_model(bundle, shape, seed), {}};
  for (auto& e : in.model.experts) e.masked = masked;
  std::vector<int> labels(10);
  for (int i = 0; i < 10; ++i) labels[static_cast<std::size_t>(i)] = i % 3 == 2 ? -1 : i % 2;
  in.batch = make_batch(k, gaussian(rng, 10, 8), gaussian(rng, static_cast<Eigen::Index>(k->num_edges()), 3),
                        labels);
  return in;
}

}  // namespace

TEST_CASE("loss config validation") {
  LossConfig c;
  CHECK_NOTHROW(c.validate());
  c.lambda1 = 0.2;
  CHECK_THROWS_AS(c.validate(), ValidationError);
  c.lambda1 = 0;
  CHECK_NOTHROW(c.validate());
  c.p_drop = 1;
  CHECK_THROWS_AS(c.validate(), ValidationError);
  TrainConfig t;
  t.epochs = 0;
  CHECK_THROWS_AS(t.validate(), ValidationError);
}

TEST_CASE("analytic gradients match central differences") {
  for (bool masked : {true, false}) {
    auto in = small_instance(masked ? 3 : 4, masked);
    LossConfig cfg;
    cfg.lambda1 = 0.5;
    cfg.lambda2 = 0.3;
    auto [parts, grads] = backward(in.model, in.batch, cfg);
    REQUIRE_FALSE(parts.clipped);
    CHECK(parts.rho > 0);
    auto params = parameter_views(in.model);
    auto gviews = gradient_views(grads);
    REQUIRE(params.size() == gviews.size());
    const auto loss = [&] { return loss_total(in.model, in.batch, cfg).total; };
    for (std::size_t v = 0; v < params.size(); ++v) {
      double diff2 = 0, ref2 = 0;
      for (Eigen::Index i = 0; i < params[v].size; ++i) {
        const double num = oracle::central_difference(loss, params[v].data[i], 1e-6);
        const double ana = gviews[v].data[i];
        diff2 += (num - ana) * (num - ana);
        ref2 += ana * ana;
      }
      INFO(params[v].group << "." << params[v].name);
      CHECK(std::sqrt(diff2) <= 1e-4 * std::max(std::sqrt(ref2), 1e-6));
    }
  }
}

TEST_CASE("geometric term stays in [-log 2, 0] and clips") {
  auto in = small_instance(5, true);
  LossConfig cfg;
  const auto base = in.model;
  for (double scale : {0.0, 1e-3, 1.0, 30.0}) {
    in.model.flow.w1 = scale * base.flow.w1;
    const auto p = loss_total(in.model, in.batch, cfg);
    CHECK(p.geo <= 0.0);
    CHECK(p.geo >= -std::log(2.0) - 1e-15);
  }
  // a pure circulation on a filled triangle has rho = 3 > 1
  const auto k = std::make_shared<const SimplicialComplex>(oracle::filled_triangle());
  auto model = init_model(BundleConfig::standard(2, 2), {}, 1);
  model.flow = FlowParams::gradient_special_case(8, 3);
  model.flow.linear = true;
  model.flow.w1.setZero();
  model.flow.w1.rightCols(3).setIdentity();  // hidden = e
  model.flow.w2.setZero();
  model.flow.w2.leftCols(3).setIdentity();
  Eigen::MatrixXd e(3, 3);
  e << 1, 0, 0, -1, 0, 0, 1, 0, 0;  // circulation around the triangle
  const auto batch = make_batch(k, Eigen::MatrixXd::Zero(3, 8), e, {0, 1, -1});
  const auto p = loss_total(model, batch, cfg);
  CHECK(p.clipped);
  CHECK(p.geo == doctest::Approx(-std::log(2.0)));
  auto [parts, grads] = backward(model, batch, cfg);
  CHECK(grads.flow.w1.norm() == 0.0);
}

TEST_CASE("gradient special case yields rho = 0") {
  auto in = small_instance(6, true);
  in.model.flow = FlowParams::gradient_special_case(8, 3);
  const auto p = loss_total(in.model, in.batch, {});
  CHECK(p.rho <= 1e-24);
  CHECK(p.geo == doctest::Approx(0.0).scale(1.0));
}

TEST_CASE("risk axes get no gradient") {
  auto in = small_instance(7, true);
  auto [parts, grads] = backward(in.model, in.batch, {});
  for (const auto& g : grads.risk_axes) CHECK(g.norm() == 0.0);
}

TEST_CASE("modality dropout never removes every block") {
  std::mt19937_64 rng(1);
  const auto bundle = BundleConfig::standard(2, 2);
  const Eigen::MatrixXd x = Eigen::MatrixXd::Ones(500, 8);
  const auto d = modality_dropout(x, bundle, 0.7, rng);
  int dropped = 0;
  for (Eigen::Index i = 0; i < 500; ++i) {
    CHECK_FALSE(d.dropped.row(i).all());
    for (int n = 0; n < 4; ++n) {
      const double s = d.x.block(i, 2 * n, 1, 2).sum();
      CHECK(s == (d.dropped(i, n) ? 0.0 : 2.0));
      dropped += d.dropped(i, n) ? 1 : 0;
    }
  }
  CHECK(dropped > 1000);
  const auto none = modality_dropout(x, bundle, 0.0, rng);
  CHECK(none.x == x);
}

TEST_CASE("training lowers the loss and is reproducible") {
  CohortConfig cc;
  cc.scenario = Scenario::GradientDominant;
  cc.n_agents = 30;
  cc.seed = 2;
  const auto sample = make_sample(generate(cc));
  const auto model = init_model(BundleConfig::standard(2, 2), {}, 2);
  TrainConfig tc;
  tc.epochs = 15;
  tc.step = 0.05;
  const auto a = train(model, {sample}, tc);
  const auto b = train(model, {sample}, tc);
  REQUIRE(a.history.size() == 15);
  CHECK(a.history.back().loss < a.history.front().loss);
  CHECK(a.history.back().loss == b.history.back().loss);
  CHECK((a.model.flow.w1 - b.model.flow.w1).norm() == 0.0);
  for (const auto& u : a.model.risk_axes) CHECK(u.norm() == doctest::Approx(1.0));
  CHECK(predict(a.model, prepare_batch(a.model, sample)).size() == sample.complex->num_vertices());
}

TEST_CASE("divergence is reported") {
  CohortConfig cc;
  cc.seed = 3;
  const auto sample = make_sample(generate(cc));
  TrainConfig tc;
  tc.epochs = 50;
  tc.step = 1e6;
  CHECK_THROWS_AS(train(init_model(BundleConfig::standard(2, 2), {}, 1), {sample}, tc), TrainingDiverged);
  CHECK_THROWS_AS(train(init_model(BundleConfig::standard(2, 2), {}, 1), {}, {}), ValidationError);
}

TEST_CASE("fit_flow reduces the regression error") {
  std::mt19937_64 rng(9);
  const auto k = oracle::random_complex(rng, 10, 0.5, 0.6);
  const auto bundle = BundleConfig::standard(2, 2);
  auto fp = init_model(bundle, {}, 4).flow;
  const Cochain r(0, gaussian(rng, 10, 8));
  const Eigen::MatrixXd e = gaussian(rng, static_cast<Eigen::Index>(k.num_edges()), 3);
  const auto target = grad(k, r);
  auto copy = fp;
  const double start = fit_flow(copy, k, r, e, target, 0, 0.1);
  const double end = fit_flow(fp, k, r, e, target, 300, 0.05);
  CHECK(end < 0.5 * start);
}

TEST_CASE("a larger lambda1 does not lower the final curl ratio") {
  int wins = 0;
  double mean0 = 0, mean5 = 0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    CohortConfig cc;
    cc.scenario = Scenario::Mixed;
    cc.n_agents = 20;
    cc.seed = seed;
    const auto sample = make_sample(generate(cc));
    const auto model = init_model(BundleConfig::standard(2, 2), {}, seed);
    TrainConfig tc;
    tc.epochs = 30;
    tc.step = 0.05;
    tc.seed = seed;
    tc.loss.lambda1 = 0.0;
    const double rho0 = train(model, {sample}, tc).history.back().rho;
    tc.loss.lambda1 = 0.5;
    const double rho5 = train(model, {sample}, tc).history.back().rho;
    wins += rho5 >= rho0 ? 1 : 0;
    mean0 += rho0 / 5;
    mean5 += rho5 / 5;
  }
  CHECK(wins == 5);
  CHECK(mean5 >= mean0);
}
