#include "gvf/hhd.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "gvf/errors.hpp"
#include "gvf/log.hpp"

namespace gvf {

void SolverConfig::validate() const {
  if (!(tol > 0)) throw ValidationError("solver tol must be > 0");
  if (max_iter < 0) throw ValidationError("solver max_iter must be >= 1 (or 0 for the default)");
}

namespace {

void project_out(Eigen::VectorXd& v, const Eigen::MatrixXd& basis) {
  if (basis.cols() > 0) v -= basis * (basis.transpose() * v);
}

}  // namespace

CgResult cg_solve(const HodgeOperator& a, const Eigen::VectorXd& b, const Eigen::MatrixXd& deflation,
                  const SolverConfig& cfg) {
  cfg.validate();
  const Eigen::Index n = a.matrix.rows();
  if (b.size() != n) throw ValidationError("cg_solve: right-hand side size mismatch");
  if (deflation.cols() > 0 && deflation.rows() != n) throw ValidationError("cg_solve: deflation basis size mismatch");
  const int max_iter = cfg.max_iter > 0 ? cfg.max_iter : static_cast<int>(std::max<Eigen::Index>(10 * n, 1));

  CgResult out;
  out.x = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd rhs = b;
  project_out(rhs, deflation);
  out.deflated_norm = (b - rhs).norm();
  const double b_norm = rhs.norm();
  if (b_norm == 0.0 || b_norm <= 1e-300) return out;
  if (out.deflated_norm > 1e-8 * b.norm()) {
    logger()->debug("cg_solve: removed rhs component of relative size {:.3g} along the kernel",
                    out.deflated_norm / b.norm());
  }

  Eigen::VectorXd inv_diag(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double d = a.matrix.coeff(i, i);
    inv_diag(i) = d > 0 ? 1.0 / d : 1.0;
  }

  Eigen::VectorXd r = rhs;
  Eigen::VectorXd z = inv_diag.cwiseProduct(r);
  project_out(z, deflation);
  Eigen::VectorXd p = z;
  Eigen::VectorXd ap(n);
  double rz = r.dot(z);
  for (int it = 1; it <= max_iter; ++it) {
    ap.noalias() = a.matrix * p;
    const double pap = p.dot(ap);
    if (!(pap > 0)) break;
    const double alpha = rz / pap;
    out.x += alpha * p;
    r -= alpha * ap;
    out.iterations = it;
    out.residual = r.norm() / b_norm;
    if (out.residual <= cfg.tol) {
      project_out(out.x, deflation);
      out.residual = (a.matrix * out.x - rhs).norm() / b_norm;
      if (out.residual <= cfg.tol) return out;
      r = rhs - a.matrix * out.x;
    }
    z = inv_diag.cwiseProduct(r);
    project_out(z, deflation);
    const double rz_next = r.dot(z);
    p = z + (rz_next / rz) * p;
    rz = rz_next;
  }
  project_out(out.x, deflation);
  out.residual = (a.matrix * out.x - rhs).norm() / b_norm;
  if (out.residual <= cfg.tol) return out;
  logger()->error("conjugate gradient stalled at relative residual {:.3e} after {} iterations", out.residual,
                  out.iterations);
  throw CgNonConvergence(out.iterations, out.residual);
}

Eigen::MatrixXd vertex_kernel_basis(const SimplicialComplex& k) {
  const std::size_t n = k.num_vertices();
  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), std::size_t{0});
  const auto find = [&](std::size_t x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  };
  for (const auto& e : k.edges()) {
    auto a = find(static_cast<std::size_t>(e[0]));
    auto b = find(static_cast<std::size_t>(e[1]));
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
  std::vector<Eigen::Index> column(n, -1);
  std::vector<std::size_t> sizes;
  for (std::size_t v = 0; v < n; ++v) {
    const std::size_t root = find(v);
    if (column[root] < 0) {
      column[root] = static_cast<Eigen::Index>(sizes.size());
      sizes.push_back(0);
    }
    ++sizes[static_cast<std::size_t>(column[root])];
  }
  Eigen::MatrixXd basis = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(sizes.size()));
  for (std::size_t v = 0; v < n; ++v) {
    const Eigen::Index c = column[find(v)];
    basis(static_cast<Eigen::Index>(v), c) = 1.0 / std::sqrt(static_cast<double>(sizes[static_cast<std::size_t>(c)]));
  }
  return basis;
}

Eigen::MatrixXd face_kernel_basis(const SimplicialComplex& k) {
  const auto nt = static_cast<Eigen::Index>(k.num_triangles());
  if (nt == 0) return Eigen::MatrixXd(0, 0);
  const std::size_t rank = exact_rank(k.b2());
  if (rank == k.num_triangles()) return Eigen::MatrixXd(nt, 0);
  Eigen::MatrixXd basis = kernel_basis(hodge_laplacian(k, 2));
  if (static_cast<std::size_t>(basis.cols()) != k.num_triangles() - rank) {
    logger()->warn("numerical ker(Delta_2) has dimension {} but exact rank predicts {}", basis.cols(),
                   k.num_triangles() - rank);
  }
  return basis;
}

int HodgeDecomposition::max_iterations() const {
  int m = 0;
  for (const auto& s : potential_solves) m = std::max(m, s.iterations);
  for (const auto& s : stream_solves) m = std::max(m, s.iterations);
  return m;
}

HodgeDecomposition decompose(const SimplicialComplex& k, const Cochain& f, const SolverConfig& cfg) {
  check_cochain(k, f, 1);
  cfg.validate();
  const Eigen::Index channels = f.channels();
  const auto nv = static_cast<Eigen::Index>(k.num_vertices());
  const auto nt = static_cast<Eigen::Index>(k.num_triangles());

  HodgeDecomposition d;
  d.potential = Cochain(0, nv, channels);
  d.stream = Cochain(2, nt, channels);

  const Cochain divergence = div(k, f);
  const HodgeOperator l0 = hodge_laplacian(k, 0);
  const Eigen::MatrixXd ker0 = vertex_kernel_basis(k);
  for (Eigen::Index c = 0; c < channels; ++c) {
    CgResult res = cg_solve(l0, divergence.values.col(c), ker0, cfg);
    d.potential.values.col(c) = res.x;
    d.potential_solves.push_back({res.iterations, res.residual});
  }

  if (nt > 0) {
    const Cochain circulation = curl(k, f);
    const HodgeOperator l2 = hodge_laplacian(k, 2);
    const Eigen::MatrixXd ker2 = face_kernel_basis(k);
    for (Eigen::Index c = 0; c < channels; ++c) {
      CgResult res = cg_solve(l2, circulation.values.col(c), ker2, cfg);
      d.stream.values.col(c) = res.x;
      d.stream_solves.push_back({res.iterations, res.residual});
    }
  }

  d.gradient = grad(k, d.potential);
  d.curl = nt > 0 ? curl_adjoint(k, d.stream) : Cochain(1, f.rows(), channels);
  d.harmonic = Cochain(1, Eigen::MatrixXd(f.values - d.gradient.values - d.curl.values));
  logger()->debug("decomposed {}-channel flow; max CG iterations {}", channels, d.max_iterations());
  return d;
}

EnergyFractions energy_fractions(const HodgeDecomposition& d) {
  EnergyFractions e;
  const double total = (d.gradient.values + d.curl.values + d.harmonic.values).squaredNorm();
  if (total == 0.0) return e;
  e.gradient = d.gradient.values.squaredNorm() / total;
  e.curl = d.curl.values.squaredNorm() / total;
  e.harmonic = d.harmonic.values.squaredNorm() / total;
  return e;
}

DecompositionCheck check_decomposition(const SimplicialComplex& k, const Cochain& f, const HodgeDecomposition& d) {
  DecompositionCheck c;
  const double fn = f.norm();
  if (fn == 0.0) return c;
  const double f2 = fn * fn;
  c.reconstruction = (d.gradient.values + d.curl.values + d.harmonic.values - f.values).norm() / fn;
  c.orthogonality = std::max({std::abs(inner(d.gradient, d.curl)), std::abs(inner(d.gradient, d.harmonic)),
                              std::abs(inner(d.curl, d.harmonic))}) /
                    f2;
  c.harmonic_div = div(k, d.harmonic).norm() / fn;
  c.harmonic_curl = k.num_triangles() > 0 ? curl(k, d.harmonic).norm() / fn : 0.0;
  c.harmonic_laplacian = (hodge_laplacian(k, 1).matrix * d.harmonic.values).norm() / fn;
  return c;
}

}  // namespace gvf
