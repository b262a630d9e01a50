#include "gvf/dec.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Eigenvalues>

#include "gvf/errors.hpp"
#include "gvf/log.hpp"

namespace gvf {

Eigen::Index simplex_count(const SimplicialComplex& k, int degree) {
  switch (degree) {
    case 0:
      return static_cast<Eigen::Index>(k.num_vertices());
    case 1:
      return static_cast<Eigen::Index>(k.num_edges());
    case 2:
      return static_cast<Eigen::Index>(k.num_triangles());
    default:
      throw ValidationError("cochain degree " + std::to_string(degree) + " out of range");
  }
}

void check_cochain(const SimplicialComplex& k, const Cochain& c, int degree) {
  if (c.degree != degree) {
    throw ValidationError("expected a degree-" + std::to_string(degree) + " cochain, got degree " +
                          std::to_string(c.degree));
  }
  if (c.rows() != simplex_count(k, degree)) {
    throw ValidationError("cochain has " + std::to_string(c.rows()) + " rows but the complex has " +
                          std::to_string(simplex_count(k, degree)) + " " + std::to_string(degree) + "-simplices");
  }
  if (c.channels() < 1) throw ValidationError("cochain must have at least one channel");
}

Cochain grad(const SimplicialComplex& k, const Cochain& r) {
  check_cochain(k, r, 0);
  return {1, Eigen::MatrixXd(k.b1_real().transpose() * r.values)};
}

Cochain div(const SimplicialComplex& k, const Cochain& f) {
  check_cochain(k, f, 1);
  return {0, Eigen::MatrixXd(k.b1_real() * f.values)};
}

Cochain net_outflow(const SimplicialComplex& k, const Cochain& f) {
  Cochain d = div(k, f);
  d.values = -d.values;
  return d;
}

Cochain curl(const SimplicialComplex& k, const Cochain& f) {
  check_cochain(k, f, 1);
  return {2, Eigen::MatrixXd(k.b2_real().transpose() * f.values)};
}

Cochain curl_adjoint(const SimplicialComplex& k, const Cochain& psi) {
  check_cochain(k, psi, 2);
  return {1, Eigen::MatrixXd(k.b2_real() * psi.values)};
}

HodgeOperator hodge_laplacian(const SimplicialComplex& k, int degree) {
  IntSparse m;
  switch (degree) {
    case 0:
      m = k.b1() * IntSparse(k.b1().transpose());
      break;
    case 1:
      m = IntSparse(k.b1().transpose()) * k.b1() + k.b2() * IntSparse(k.b2().transpose());
      break;
    case 2:
      m = IntSparse(k.b2().transpose()) * k.b2();
      break;
    default:
      throw ValidationError("Hodge Laplacian degree " + std::to_string(degree) + " out of range");
  }
  m.prune(0);
  return {degree, m.cast<double>()};
}

double inner(const Cochain& a, const Cochain& b) {
  if (a.degree != b.degree || a.rows() != b.rows() || a.channels() != b.channels()) {
    throw ValidationError("inner product of cochains with different shapes");
  }
  return (a.values.array() * b.values.array()).sum();
}

Eigen::VectorXd spectrum(const HodgeOperator& op) {
  if (op.matrix.rows() == 0) return {};
  Eigen::MatrixXd dense(op.matrix);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(dense, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw NumericalError("eigen-solver failed");
  return es.eigenvalues();
}

std::size_t kernel_dimension(const HodgeOperator& op) {
  const Eigen::VectorXd ev = spectrum(op);
  if (ev.size() == 0) return 0;
  const double cutoff = kKernelTolerance * std::max(ev.maxCoeff(), 0.0);
  std::size_t count = 0;
  for (double v : ev) count += (v <= cutoff) ? 1 : 0;
  return count;
}

Eigen::MatrixXd kernel_basis(const HodgeOperator& op) {
  const Eigen::Index n = op.matrix.rows();
  if (n == 0) return Eigen::MatrixXd(0, 0);
  Eigen::MatrixXd dense(op.matrix);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(dense);
  if (es.info() != Eigen::Success) throw NumericalError("eigen-solver failed");
  const double cutoff = kKernelTolerance * std::max(es.eigenvalues().maxCoeff(), 0.0);
  Eigen::Index count = 0;
  while (count < n && es.eigenvalues()(count) <= cutoff) ++count;
  return es.eigenvectors().leftCols(count);
}

CurlNormDiagnostics curl_norm_diagnostics(const SimplicialComplex& k) {
  CurlNormDiagnostics d;
  std::vector<std::size_t> per_edge(k.num_edges(), 0);
  for (Eigen::Index c = 0; c < k.b2().outerSize(); ++c) {
    for (IntSparse::InnerIterator it(k.b2(), c); it; ++it) ++per_edge[static_cast<std::size_t>(it.row())];
  }
  for (auto v : per_edge) d.d_max = std::max(d.d_max, v);
  d.gershgorin_bound = std::sqrt(3.0 * static_cast<double>(d.d_max));
  d.tight_bound = std::sqrt(static_cast<double>(d.d_max));
  if (k.num_triangles() > 0) {
    // ||B2^T||_2^2 is the top eigenvalue of Delta_2 = B2^T B2.
    const Eigen::VectorXd ev = spectrum(hodge_laplacian(k, 2));
    d.measured = std::sqrt(std::max(ev.maxCoeff(), 0.0));
  }
  d.tight_bound_holds = d.measured <= d.tight_bound * (1 + 1e-12);
  logger()->info("curl operator norm {:.6g}; sqrt(3 d_max) = {:.6g}; sqrt(d_max) = {:.6g} ({})", d.measured,
                 d.gershgorin_bound, d.tight_bound, d.tight_bound_holds ? "holds" : "violated");
  return d;
}

}  // namespace gvf
