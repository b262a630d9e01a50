#include <doctest.h>

#include <random>

#include "gvf/errors.hpp"
#include "gvf/monitor.hpp"
#include "gvf/synth.hpp"
#include "oracle.hpp"

using namespace gvf;

namespace {

Eigen::MatrixXd gaussian(std::mt19937_64& rng, Eigen::Index r, Eigen::Index c) {
  std::normal_distribution<double> g(0, 1);
  Eigen::MatrixXd m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m(i) = g(rng);
  return m;
}

// Source star 0 -> {1,2,3}, joined by 3 -> 4 to sink star {4} <- {5,6}.
SimplicialComplex two_stars() {
  std::vector<NodeKind> kinds(7, NodeKind::Agent);
  return oracle::make(kinds, {{0, 1}, {0, 2}, {0, 3}, {3, 4}, {4, 5}, {4, 6}}, {});
}

}  // namespace

TEST_CASE("DPS sign pattern on planted source and sink") {
  const auto k = two_stars();
  const auto bundle = BundleConfig::standard(2, 2);
  Eigen::MatrixXd f(6, 8);
  // outward from 0, inward to 4 (edges (4,5), (4,6) run away from 4 so negate)
  const Eigen::VectorXd base = (Eigen::VectorXd(6) << 1, 1, 1, 1, -1, -1).finished();
  for (int c = 0; c < 8; ++c) f.col(c) = base * (1.0 + 0.1 * c);
  const auto s = dps(k, Cochain(1, f), bundle, ScoreConfig::uniform(bundle));
  CHECK(s(0) > 0);
  CHECK(s(4) < 0);
  CHECK(s(1) < 0);
  CHECK(s(5) > 0);
  CHECK(s(3) == doctest::Approx(0.0).scale(1.0));
  CHECK(s.sum() == doctest::Approx(0.0).scale(1.0));
}

TEST_CASE("DPS is invariant under fiber rotations fixing the risk axis") {
  std::mt19937_64 rng(4);
  const auto k = oracle::random_complex(rng, 10, 0.4, 0.5);
  BundleConfig bundle;
  bundle.modalities = {{"phys", 1, 3}, {"beh", 1, 3}};
  ScoreConfig cfg;
  cfg.weights = {0.3, 0.7};
  for (int n = 0; n < 2; ++n) cfg.axes.push_back(gaussian(rng, 3, 1).col(0).normalized());
  const Cochain f(1, gaussian(rng, static_cast<Eigen::Index>(k.num_edges()), 6));
  const auto before = dps(k, f, bundle, cfg);
  Eigen::MatrixXd rot = Eigen::MatrixXd::Zero(6, 6);
  for (int n = 0; n < 2; ++n) {
    // rotation about u: R = u u^T + cos(t) (I - u u^T) + sin(t) [u]_x
    const Eigen::Vector3d u = cfg.axes[static_cast<std::size_t>(n)];
    Eigen::Matrix3d cross;
    cross << 0, -u(2), u(1), u(2), 0, -u(0), -u(1), u(0), 0;
    const double t = 0.7 + n;
    const Eigen::Matrix3d r =
        u * u.transpose() + std::cos(t) * (Eigen::Matrix3d::Identity() - u * u.transpose()) + std::sin(t) * cross;
    CHECK((r * u - u).norm() <= 1e-14);
    rot.block(3 * n, 3 * n, 3, 3) = r;
  }
  const Cochain g(1, f.values * rot.transpose());
  CHECK((dps(k, g, bundle, cfg) - before).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("CRI vanishes on triangle-free complexes and exact flows") {
  std::mt19937_64 rng(5);
  const auto hollow = oracle::hollow_triangle();
  CHECK(cri(hollow, Cochain(1, gaussian(rng, 3, 2))).norm() == 0.0);
  for (int trial = 0; trial < 5; ++trial) {
    const auto k = oracle::random_complex(rng, 10, 0.6, 0.8);
    const Cochain r(0, gaussian(rng, 10, 3));
    CHECK(cri(k, grad(k, r)).cwiseAbs().maxCoeff() <= 1e-12);
  }
  const auto t = oracle::filled_triangle();
  const auto c = cri(t, Cochain(1, Eigen::MatrixXd(Eigen::Vector3d(1, -1, 1))));
  CHECK(c(0) == doctest::Approx(3.0));
}

TEST_CASE("score config validation") {
  const auto bundle = BundleConfig::standard(2, 2);
  auto cfg = ScoreConfig::uniform(bundle);
  CHECK_NOTHROW(cfg.validate(bundle));
  cfg.weights[0] = 0.5;
  CHECK_THROWS_AS(cfg.validate(bundle), ValidationError);
  cfg = ScoreConfig::uniform(bundle);
  cfg.axes[1] *= 2;
  CHECK_THROWS_AS(cfg.validate(bundle), ValidationError);
}

TEST_CASE("annotation follows the dominant component") {
  CHECK(intervention(Component::Gradient) == "Reduce source (exposure, shift pattern)");
  CHECK(intervention(Component::Curl) == "Break cycle (sleep hygiene, pharmacological)");
  CHECK(intervention(Component::Harmonic) == "Restructure network (scheduling, zoning)");
  CHECK(intervention(Component::None).empty());

  const auto k = oracle::hollow_triangle();
  const Cochain f(1, Eigen::MatrixXd(Eigen::Vector3d(1, -1, 1)));
  const auto d = decompose(k, f);
  const auto bundle = BundleConfig{{{"x", 1, 1}}};
  const auto report = score_report(k, f, bundle, ScoreConfig::uniform(bundle), d);
  REQUIRE(report.agents.size() == 3);
  CHECK(report.dominant == Component::Harmonic);
  for (const auto& a : report.agents) CHECK(a.dominant == Component::Harmonic);
  const auto e = local_energy(k, d);
  CHECK(e.col(2).sum() == doctest::Approx(6.0));
}

TEST_CASE("score report covers agents only") {
  CohortConfig cc;
  cc.seed = 6;
  const auto c = generate(cc);
  const auto bundle = BundleConfig::standard(2, 2);
  const auto d = decompose(c.truth.complex, c.truth.flow);
  const auto r = score_report(c.truth.complex, c.truth.flow, bundle, ScoreConfig::uniform(bundle), d);
  CHECK(r.agents.size() == static_cast<std::size_t>(cc.n_agents));
  for (const auto& a : r.agents) CHECK(a.id[0] == 'a');
}

TEST_CASE("spectral distance and shift decision") {
  const auto a = oracle::hollow_triangle();
  CHECK(spectral_distance(a, a) == 0.0);
  const auto b = oracle::filled_triangle();
  // spectra of the hollow and filled triangles differ only in Delta_1: {0,3,3} vs {3,3,3}
  CHECK(spectral_distance(a, b) == doctest::Approx(3.0));
  const auto s = spectral_shift(b, a);
  CHECK(s.threshold == doctest::Approx(0.1 * std::sqrt(4 * 9.0)));
  CHECK(s.decision == ShiftDecision::Retrain);
  CHECK(spectral_shift(b, a, 10.0).decision == ShiftDecision::FineTune);
  CHECK(to_string(ShiftDecision::FineTune) == "fine_tune");
  CHECK_THROWS_AS(spectral_shift(SimplicialComplex{}, a), ValidationError);

  const auto p = padded_spectrum(Eigen::Vector2d(1, 2), Eigen::VectorXd(), 3, 1);
  REQUIRE(p.size() == 4);
  CHECK(p(0) == 0.0);
  CHECK(p(1) == 1.0);
  CHECK(p(3) == 0.0);
}

TEST_CASE("spectral distance grows with structural change") {
  CohortConfig cc;
  cc.seed = 8;
  const auto base = generate(cc).truth.complex;
  cc.scenario = Scenario::HarmonicDominant;
  const auto other = generate(cc).truth.complex;
  CHECK(spectral_distance(base, other) > 0);
  CHECK(spectral_distance(base, other) == doctest::Approx(spectral_distance(other, base)));
}
