#pragma once

#include <vector>

#include <Eigen/Dense>

#include "gvf/complex.hpp"
#include "gvf/dec.hpp"

namespace gvf {

struct SolverConfig {
  double tol = 1e-10;
  /// 0 selects 10 x problem size.
  int max_iter = 0;

  void validate() const;
};

struct CgResult {
  Eigen::VectorXd x;
  int iterations = 0;
  double residual = 0;       // ||A x - b_proj|| / ||b_proj||
  double deflated_norm = 0;  // norm of the rhs component removed by deflation
};

/// Jacobi-preconditioned conjugate gradient on the orthogonal complement of
/// `deflation` (orthonormal columns spanning ker A, possibly zero columns).
/// The right-hand side and every search direction are projected onto
/// ker(A)^perp, and the returned x is orthogonal to the deflation basis.
/// Throws CgNonConvergence when max_iter is exhausted.
CgResult cg_solve(const HodgeOperator& a, const Eigen::VectorXd& b, const Eigen::MatrixXd& deflation,
                  const SolverConfig& cfg);

/// Orthonormalised connected-component indicators: an exact basis of ker Delta_0.
Eigen::MatrixXd vertex_kernel_basis(const SimplicialComplex& k);

/// Basis of ker Delta_2 = ker B2. Empty when the exact rank of B2 is full.
Eigen::MatrixXd face_kernel_basis(const SimplicialComplex& k);

struct SolveDiagnostics {
  int iterations = 0;
  double residual = 0;
};

struct HodgeDecomposition {
  Cochain potential;   // phi, degree 0
  Cochain stream;      // psi, degree 2
  Cochain gradient;    // grad phi
  Cochain curl;        // B2 psi
  Cochain harmonic;    // F - gradient - curl
  std::vector<SolveDiagnostics> potential_solves;  // one per channel
  std::vector<SolveDiagnostics> stream_solves;

  int max_iterations() const;
};

HodgeDecomposition decompose(const SimplicialComplex& k, const Cochain& f, const SolverConfig& cfg = {});

struct EnergyFractions {
  double gradient = 0;
  double curl = 0;
  double harmonic = 0;
};

/// ||component||^2 / ||F||^2 for each part; all zero when F = 0.
EnergyFractions energy_fractions(const HodgeDecomposition& d);

/// Worst-case violations of the decomposition's defining properties, each
/// normalised as in the invariants: reconstruction, harmonic div/curl/Delta_1
/// by ||F||; pairwise inner products by ||F||^2.
struct DecompositionCheck {
  double reconstruction = 0;
  double orthogonality = 0;
  double harmonic_div = 0;
  double harmonic_curl = 0;
  double harmonic_laplacian = 0;

  bool ok(double tol = 1e-8) const {
    return reconstruction <= tol && orthogonality <= tol && harmonic_div <= tol && harmonic_curl <= tol &&
           harmonic_laplacian <= tol;
  }
};

DecompositionCheck check_decomposition(const SimplicialComplex& k, const Cochain& f, const HodgeDecomposition& d);

}  // namespace gvf
