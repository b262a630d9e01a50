#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "gvf/complex.hpp"
#include "gvf/dec.hpp"

namespace gvf {

struct Modality {
  std::string name;
  int input_dim = 1;  // width of this modality's raw input block
  int fiber_dim = 1;  // m_n, width of its summand in the risk bundle
};

/// Direct-sum layout of inputs and of the risk bundle.
struct BundleConfig {
  std::vector<Modality> modalities;

  void validate() const;
  int num_modalities() const { return static_cast<int>(modalities.size()); }
  int input_dim() const;
  int fiber_dim() const;  // m
  int input_offset(int n) const;
  int fiber_offset(int n) const;

  /// phys / beh / env / ext, each with the given block widths.
  static BundleConfig standard(int input_dim = 2, int fiber_dim = 2);
};

/// Block-orthogonalising input transform: x_w = W (x - mean).
///
/// Blocks are processed in order. Block n is first regressed on the already
/// whitened blocks 1..n-1 and the residual is ZCA-whitened within the block,
/// so W is block lower-triangular and the calibration covariance of x_w is the
/// identity with exactly zero cross-block terms, even for collinear blocks.
struct WhiteningTransform {
  Eigen::VectorXd mean;
  Eigen::MatrixXd matrix;
  /// ||off-block-diagonal part of E[x_w x_w^T] - I||_F on the held-out split.
  double residual_delta = 0;
  bool regularized = false;

  bool fitted() const { return matrix.size() > 0; }
  Eigen::MatrixXd apply(const Eigen::MatrixXd& x) const;
};

/// Fraction of calibration rows held out for residual_delta.
inline constexpr double kWhiteningHoldout = 0.25;

WhiteningTransform whiten_fit(const Eigen::MatrixXd& calibration, const BundleConfig& bundle);

/// Frobenius norm of the cross-block part of (x^T x / rows - I).
double cross_block_residual(const Eigen::MatrixXd& whitened, const BundleConfig& bundle);

/// Expert n: tanh(W1 x^(n) + b1) -> lazy neighbourhood mixing -> W2 a + b2.
///
/// W2 is m x hidden over the whole bundle. With `masked` set, rows outside
/// fiber n are held at exactly zero, so the expert writes only into its
/// summand.
struct ExpertParams {
  int modality = 0;
  Eigen::MatrixXd w1;  // hidden x input_dim(n)
  Eigen::VectorXd b1;
  Eigen::MatrixXd w2;  // m x hidden
  Eigen::VectorXd b2;  // m
  bool masked = true;
  bool spectral_norm = false;
};

/// Two-layer softmax gate over the full whitened input.
struct GatingParams {
  Eigen::MatrixXd w1;  // hidden x input_dim
  Eigen::VectorXd b1;
  Eigen::MatrixXd w2;  // N_mod x hidden
  Eigen::VectorXd b2;
};

/// MLP_omega over [r_i, r_j, e_ij]; antisymmetrised in flow_field.
struct FlowParams {
  Eigen::MatrixXd w1;  // hidden x (2m + p)
  Eigen::VectorXd b1;
  Eigen::MatrixXd w2;  // m x hidden
  Eigen::VectorXd b2;
  int edge_dim = 0;
  bool linear = false;  // identity activation instead of tanh

  int channels() const { return static_cast<int>(w2.rows()); }

  /// MLP(a, b, e) = b - a exactly, so that the flow is grad r.
  static FlowParams gradient_special_case(int channels, int edge_dim);
};

struct ReadoutHead {
  Eigen::MatrixXd w;  // C x m
  Eigen::VectorXd b;  // C
};

struct GvfModel {
  BundleConfig bundle;
  WhiteningTransform whitening;
  std::vector<ExpertParams> experts;
  GatingParams gating;
  FlowParams flow;
  ReadoutHead readout;
  std::vector<Eigen::VectorXd> risk_axes;  // u^(n), unit length, dim m_n
};

struct ModelShape {
  int hidden = 32;
  int gate_hidden = 16;
  int flow_hidden = 32;
  int edge_dim = 3;
  int num_classes = 2;
  bool spectral_norm = false;
};

/// Uniform +-sqrt(6 / (fan_in + fan_out)) weights, zero biases, risk axes
/// 1/sqrt(m_n). The whitening transform is left unfitted.
GvfModel init_model(const BundleConfig& bundle, const ModelShape& shape, std::uint64_t seed);

/// Lazy symmetric neighbourhood mean  S = (I + D^-1/2 (A + I) D^-1/2) / 2,
/// with D the degree matrix of A + I. S is symmetric with spectrum in [0, 1].
RealSparse neighborhood_mixing(const SimplicialComplex& k);

/// Raw output of one expert, |V| x m.
Eigen::MatrixXd expert_forward(const RealSparse& mixing, const Eigen::MatrixXd& x, const BundleConfig& bundle,
                               const ExpertParams& expert);

/// Softmax gate weights, |V| x N_mod.
Eigen::MatrixXd gate_forward(const Eigen::MatrixXd& x, const GatingParams& gating);

struct MoeOutput {
  Cochain risk;                               // degree 0, m channels
  Eigen::MatrixXd gates;                      // |V| x N_mod
  std::vector<Eigen::MatrixXd> expert_outputs;  // per modality, |V| x m
};

/// r_i = sum_n g^(n)(x_i) F^(n)(K, x)_i over whitened inputs x.
MoeOutput moe_forward(const SimplicialComplex& k, const Eigen::MatrixXd& x, const BundleConfig& bundle,
                      const std::vector<ExpertParams>& experts, const GatingParams& gating);
MoeOutput moe_forward(const RealSparse& mixing, const Eigen::MatrixXd& x, const BundleConfig& bundle,
                      const std::vector<ExpertParams>& experts, const GatingParams& gating);

Eigen::VectorXd flow_mlp(const FlowParams& fp, const Eigen::VectorXd& ri, const Eigen::VectorXd& rj,
                         const Eigen::VectorXd& e);

/// Psi(r_i, r_j, e) = (MLP(r_i, r_j, e) - MLP(r_j, r_i, -e)) / 2.
Eigen::VectorXd flow_psi(const FlowParams& fp, const Eigen::VectorXd& ri, const Eigen::VectorXd& rj,
                         const Eigen::VectorXd& e);

/// Edge flow over the canonical edge order; `edge_features` has one row per
/// edge, expressed for the low-to-high orientation.
Cochain flow_field(const SimplicialComplex& k, const Cochain& r, const Eigen::MatrixXd& edge_features,
                   const FlowParams& fp);

inline constexpr int kPowerIterations = 100;

/// Top singular value by power iteration on W^T W.
double top_singular_value(const Eigen::MatrixXd& w, int iterations = kPowerIterations);

/// W / max(1, sigma_max(W)).
Eigen::MatrixXd spectral_normalize(const Eigen::MatrixXd& w, int iterations = kPowerIterations);

/// Applies spectral_normalize to both layers of every expert that has the
/// flag set.
void apply_spectral_norm(std::vector<ExpertParams>& experts);

}  // namespace gvf
