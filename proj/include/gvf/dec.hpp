#pragma once

#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "gvf/complex.hpp"

namespace gvf {

/// Vector-valued k-cochain: one row per k-simplex in canonical order, one
/// column per channel.
struct Cochain {
  int degree = 0;
  Eigen::MatrixXd values;

  Cochain() = default;
  Cochain(int degree, Eigen::Index rows, Eigen::Index channels)
      : degree(degree), values(Eigen::MatrixXd::Zero(rows, channels)) {}
  Cochain(int degree, Eigen::MatrixXd values) : degree(degree), values(std::move(values)) {}

  Eigen::Index rows() const { return values.rows(); }
  Eigen::Index channels() const { return values.cols(); }
  double norm() const { return values.norm(); }
};

/// Number of k-simplices of `k`.
Eigen::Index simplex_count(const SimplicialComplex& k, int degree);

/// Throws ValidationError unless `c` has the given degree and matches the
/// complex's simplex count.
void check_cochain(const SimplicialComplex& k, const Cochain& c, int degree);

/// (grad r)_{ij} = r_j - r_i, i.e. B1^T r.
Cochain grad(const SimplicialComplex& k, const Cochain& r);

/// B1 F: the adjoint of grad. Under the canonical orientation a unit flow on
/// edge (a, b) gives -1 at a and +1 at b.
Cochain div(const SimplicialComplex& k, const Cochain& f);

/// Net outflow sum_{(i,j)} F_ij - sum_{(j,i)} F_ji = -B1 F. Positive marks a
/// source.
Cochain net_outflow(const SimplicialComplex& k, const Cochain& f);

/// Oriented circulation per triangle, B2^T F. Zero rows when there are no
/// triangles.
Cochain curl(const SimplicialComplex& k, const Cochain& f);

/// B2 psi, the adjoint of curl, mapping 2-cochains to 1-cochains.
Cochain curl_adjoint(const SimplicialComplex& k, const Cochain& psi);

struct HodgeOperator {
  int degree = 0;
  RealSparse matrix;
};

/// Delta_0 = B1 B1^T, Delta_1 = B1^T B1 + B2 B2^T, Delta_2 = B2^T B2, formed
/// in integer arithmetic and converted, so symmetry is exact.
HodgeOperator hodge_laplacian(const SimplicialComplex& k, int degree);

/// Combinatorial inner product (identity Hodge star), summed over channels.
double inner(const Cochain& a, const Cochain& b);

/// Relative threshold below which an eigenvalue counts as zero.
inline constexpr double kKernelTolerance = 1e-9;

/// Ascending eigenvalues of a Hodge operator, via a dense symmetric solve.
Eigen::VectorXd spectrum(const HodgeOperator& op);

/// Eigenvalues below kKernelTolerance * lambda_max, counted.
std::size_t kernel_dimension(const HodgeOperator& op);

/// Orthonormal basis of ker(op) by dense eigendecomposition.
Eigen::MatrixXd kernel_basis(const HodgeOperator& op);

struct CurlNormDiagnostics {
  double measured = 0;          // ||B2^T||_2
  std::size_t d_max = 0;
  double gershgorin_bound = 0;  // sqrt(3 d_max)
  double tight_bound = 0;       // sqrt(d_max)
  bool tight_bound_holds = true;
};

/// Measures ||curl|| and compares it with sqrt(3 d_max) and sqrt(d_max).
CurlNormDiagnostics curl_norm_diagnostics(const SimplicialComplex& k);

}  // namespace gvf
