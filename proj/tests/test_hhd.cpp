#include <doctest.h>

#include <random>

#include "gvf/errors.hpp"
#include "gvf/hhd.hpp"
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

}  // namespace

TEST_CASE("decomposition agrees with dense projections") {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 15; ++trial) {
    const auto k = oracle::random_complex(rng, 9, 0.45, 0.5);
    if (k.num_edges() == 0) continue;
    const Cochain f(1, gaussian(rng, static_cast<Eigen::Index>(k.num_edges()), 3));
    const auto d = decompose(k, f);
    const auto o = oracle::dense_hhd(k, f.values);
    const double scale = f.norm();
    CHECK((d.gradient.values - o.gradient).norm() <= 1e-8 * scale);
    CHECK((d.curl.values - o.curl).norm() <= 1e-8 * scale);
    CHECK((d.harmonic.values - o.harmonic).norm() <= 1e-8 * scale);
    CHECK(check_decomposition(k, f, d).ok());
    const auto e = energy_fractions(d);
    CHECK(e.gradient + e.curl + e.harmonic == doctest::Approx(1.0).epsilon(1e-8));
  }
}

TEST_CASE("pure components are recovered") {
  const auto k = oracle::hollow_triangle();
  Cochain ring(1, Eigen::MatrixXd(Eigen::Vector3d(1, -1, 1)));
  const auto d = decompose(k, ring);
  CHECK(energy_fractions(d).harmonic == doctest::Approx(1.0));

  const auto t = oracle::filled_triangle();
  const auto dc = decompose(t, ring);
  CHECK(energy_fractions(dc).curl == doctest::Approx(1.0));
  CHECK(dc.stream.values(0, 0) == doctest::Approx(1.0));

  Cochain r(0, Eigen::MatrixXd(Eigen::Vector3d(0, 2, 5)));
  const auto dg = decompose(t, grad(t, r));
  CHECK(energy_fractions(dg).gradient == doctest::Approx(1.0));
  // potential is unique up to a constant and returned mean-free per component
  CHECK(dg.potential.values.sum() == doctest::Approx(0.0).scale(1.0));
  CHECK((grad(t, dg.potential).values - grad(t, r).values).norm() <= 1e-10);
}

TEST_CASE("potential is orthogonal to component indicators") {
  const auto k = oracle::make({NodeKind::Agent, NodeKind::Agent, NodeKind::Agent, NodeKind::Agent},
                              {{0, 1}, {2, 3}}, {});
  const Cochain f(1, Eigen::MatrixXd(Eigen::Vector2d(2, -3)));
  const auto d = decompose(k, f);
  CHECK(d.potential.values(0, 0) + d.potential.values(1, 0) == doctest::Approx(0.0).scale(1.0));
  CHECK(d.potential.values(2, 0) + d.potential.values(3, 0) == doctest::Approx(0.0).scale(1.0));
  CHECK(energy_fractions(d).gradient == doctest::Approx(1.0));
}

TEST_CASE("face kernel is detected on a closed surface") {
  // boundary of a tetrahedron: B2 has a one-dimensional kernel
  std::vector<NodeKind> kinds{NodeKind::Agent, NodeKind::Agent, NodeKind::EnvSensor, NodeKind::External};
  const auto k = oracle::make(kinds, {{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}},
                              {{0, 1, 2}, {0, 1, 3}, {0, 2, 3}, {1, 2, 3}});
  CHECK(face_kernel_basis(k).cols() == 1);
  CHECK(vertex_kernel_basis(k).cols() == 1);
  std::mt19937_64 rng(5);
  const Cochain f(1, gaussian(rng, 6, 2));
  const auto d = decompose(k, f);
  CHECK(check_decomposition(k, f, d).ok());
  // stream function orthogonal to the face kernel
  CHECK(std::abs((face_kernel_basis(k).transpose() * d.stream.values).norm()) <= 1e-10);
  CHECK(face_kernel_basis(oracle::filled_triangle()).cols() == 0);
}

TEST_CASE("cg solver on a deflated Laplacian") {
  std::mt19937_64 rng(8);
  const auto k = oracle::random_complex(rng, 12, 0.4, 0.5);
  const auto op = hodge_laplacian(k, 0);
  const auto basis = vertex_kernel_basis(k);
  Eigen::VectorXd b = gaussian(rng, static_cast<Eigen::Index>(k.num_vertices()), 1).col(0);
  const auto res = cg_solve(op, b, basis, {});
  const Eigen::VectorXd bp = b - basis * (basis.transpose() * b);
  CHECK((Eigen::MatrixXd(op.matrix) * res.x - bp).norm() <= 1e-9 * bp.norm());
  CHECK((basis.transpose() * res.x).norm() <= 1e-10 * std::max(1.0, res.x.norm()));
  CHECK(res.deflated_norm == doctest::Approx((b - bp).norm()));
}

TEST_CASE("zero right-hand side returns zero") {
  const auto k = oracle::filled_triangle();
  const auto d = decompose(k, Cochain(1, 3, 2));
  CHECK(d.potential.norm() == 0.0);
  CHECK(d.max_iterations() == 0);
  const auto e = energy_fractions(d);
  CHECK(e.gradient == 0.0);
  CHECK(e.harmonic == 0.0);
}

TEST_CASE("non-convergence is a numerical error") {
  CohortConfig cfg;
  cfg.n_agents = 40;
  cfg.seed = 3;
  const auto cohort = generate(cfg);
  SolverConfig solver;
  solver.max_iter = 1;
  CHECK_THROWS_AS(decompose(cohort.truth.complex, cohort.truth.flow, solver), CgNonConvergence);
  solver.tol = -1;
  CHECK_THROWS_AS(solver.validate(), ValidationError);
}

TEST_CASE("planted cohorts decompose within tolerance") {
  for (auto sc : {Scenario::GradientDominant, Scenario::CurlDominant, Scenario::HarmonicDominant, Scenario::Mixed}) {
    CohortConfig cfg;
    cfg.scenario = sc;
    cfg.seed = 12;
    const auto c = generate(cfg);
    const auto d = decompose(c.truth.complex, c.truth.flow);
    CHECK(check_decomposition(c.truth.complex, c.truth.flow, d).ok());
  }
}
