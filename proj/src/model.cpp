#include "gvf/model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Eigenvalues>
#include <Eigen/QR>

#include "gvf/errors.hpp"
#include "gvf/log.hpp"

namespace gvf {

// ---------------------------------------------------------------------------
// Bundle

void BundleConfig::validate() const {
  if (modalities.empty()) throw ValidationError("bundle needs at least one modality");
  for (const auto& m : modalities) {
    if (m.input_dim < 1 || m.fiber_dim < 1) {
      throw ValidationError("modality '" + m.name + "' must have input_dim >= 1 and fiber_dim >= 1");
    }
  }
}

int BundleConfig::input_dim() const {
  int s = 0;
  for (const auto& m : modalities) s += m.input_dim;
  return s;
}

int BundleConfig::fiber_dim() const {
  int s = 0;
  for (const auto& m : modalities) s += m.fiber_dim;
  return s;
}

int BundleConfig::input_offset(int n) const {
  int s = 0;
  for (int i = 0; i < n; ++i) s += modalities.at(static_cast<std::size_t>(i)).input_dim;
  return s;
}

int BundleConfig::fiber_offset(int n) const {
  int s = 0;
  for (int i = 0; i < n; ++i) s += modalities.at(static_cast<std::size_t>(i)).fiber_dim;
  return s;
}

BundleConfig BundleConfig::standard(int input_dim, int fiber_dim) {
  BundleConfig b;
  for (const char* name : {"phys", "beh", "env", "ext"}) b.modalities.push_back({name, input_dim, fiber_dim});
  return b;
}

// ---------------------------------------------------------------------------
// Whitening

Eigen::MatrixXd WhiteningTransform::apply(const Eigen::MatrixXd& x) const {
  if (!fitted()) throw ValidationError("whitening transform is not fitted");
  if (x.cols() != mean.size()) throw ValidationError("whitening input width mismatch");
  return (x.rowwise() - mean.transpose()) * matrix.transpose();
}

double cross_block_residual(const Eigen::MatrixXd& whitened, const BundleConfig& bundle) {
  if (whitened.rows() == 0) return 0.0;
  const Eigen::MatrixXd s = whitened.transpose() * whitened / static_cast<double>(whitened.rows());
  double acc = 0;
  for (int a = 0; a < bundle.num_modalities(); ++a) {
    for (int b = 0; b < bundle.num_modalities(); ++b) {
      if (a == b) continue;
      acc += s.block(bundle.input_offset(a), bundle.input_offset(b), bundle.modalities[a].input_dim,
                     bundle.modalities[b].input_dim)
                 .squaredNorm();
    }
  }
  return std::sqrt(acc);
}

WhiteningTransform whiten_fit(const Eigen::MatrixXd& calibration, const BundleConfig& bundle) {
  bundle.validate();
  const Eigen::Index d = bundle.input_dim();
  if (calibration.cols() != d) throw ValidationError("calibration width does not match the bundle input layout");
  if (calibration.rows() < 2 * d) {
    throw ValidationError("whitening needs at least " + std::to_string(2 * d) + " calibration rows, got " +
                          std::to_string(calibration.rows()));
  }
  const Eigen::Index held = static_cast<Eigen::Index>(std::floor(kWhiteningHoldout * calibration.rows()));
  const Eigen::Index fit_rows = calibration.rows() - held;
  const Eigen::MatrixXd fit = calibration.topRows(fit_rows);

  WhiteningTransform w;
  w.mean = fit.colwise().mean().transpose();
  const Eigen::MatrixXd centered = fit.rowwise() - w.mean.transpose();
  const Eigen::MatrixXd sigma = centered.transpose() * centered / static_cast<double>(fit_rows);
  const double trace = sigma.trace();
  const double ridge = 1e-6 * (trace > 0 ? trace : 1.0) / static_cast<double>(d);

  w.matrix = Eigen::MatrixXd::Zero(d, d);
  for (int n = 0; n < bundle.num_modalities(); ++n) {
    const Eigen::Index off = bundle.input_offset(n);
    const Eigen::Index dim = bundle.modalities[static_cast<std::size_t>(n)].input_dim;
    Eigen::MatrixXd residual_map = Eigen::MatrixXd::Zero(dim, d);
    residual_map.middleCols(off, dim).setIdentity();
    if (off > 0) {
      const Eigen::MatrixXd prev = w.matrix.topRows(off);
      const Eigen::MatrixXd cov_prev = prev * sigma * prev.transpose();
      const Eigen::MatrixXd cross = residual_map * sigma * prev.transpose();
      const Eigen::MatrixXd coef = cov_prev.completeOrthogonalDecomposition().solve(cross.transpose()).transpose();
      residual_map -= coef * prev;
    }
    Eigen::MatrixXd cov = residual_map * sigma * residual_map.transpose();
    cov = 0.5 * (cov + cov.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
    if (es.info() != Eigen::Success) throw NumericalError("whitening eigen-solve failed");
    Eigen::VectorXd lambda = es.eigenvalues();
    const double top = std::max(lambda.maxCoeff(), 0.0);
    if (lambda.minCoeff() <= 1e-10 * std::max(top, ridge)) {
      lambda.array() = lambda.array().max(0.0) + ridge;
      w.regularized = true;
    }
    const Eigen::MatrixXd zca =
        es.eigenvectors() * lambda.cwiseSqrt().cwiseInverse().asDiagonal() * es.eigenvectors().transpose();
    w.matrix.middleRows(off, dim) = zca * residual_map;
  }
  if (w.regularized) logger()->info("whitening: rank-deficient covariance regularised with ridge {:.3g}", ridge);

  const Eigen::MatrixXd eval = held > 0 ? Eigen::MatrixXd(calibration.bottomRows(held)) : fit;
  w.residual_delta = cross_block_residual(w.apply(eval), bundle);
  return w;
}

// ---------------------------------------------------------------------------
// Initialisation

namespace {

Eigen::MatrixXd glorot(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
  const double a = std::sqrt(6.0 / static_cast<double>(rows + cols));
  std::uniform_real_distribution<double> u(-a, a);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j) {
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = u(rng);
  }
  return m;
}

}  // namespace

GvfModel init_model(const BundleConfig& bundle, const ModelShape& shape, std::uint64_t seed) {
  bundle.validate();
  if (shape.hidden < 1 || shape.gate_hidden < 1 || shape.flow_hidden < 1 || shape.edge_dim < 0 ||
      shape.num_classes < 2) {
    throw ValidationError("invalid model shape");
  }
  std::mt19937_64 rng(seed);
  GvfModel model;
  model.bundle = bundle;
  const int m = bundle.fiber_dim();
  const int d = bundle.input_dim();
  for (int n = 0; n < bundle.num_modalities(); ++n) {
    const auto& mod = bundle.modalities[static_cast<std::size_t>(n)];
    ExpertParams e;
    e.modality = n;
    e.w1 = glorot(shape.hidden, mod.input_dim, rng);
    e.b1 = Eigen::VectorXd::Zero(shape.hidden);
    e.w2 = Eigen::MatrixXd::Zero(m, shape.hidden);
    e.w2.middleRows(bundle.fiber_offset(n), mod.fiber_dim) = glorot(mod.fiber_dim, shape.hidden, rng);
    e.b2 = Eigen::VectorXd::Zero(m);
    e.spectral_norm = shape.spectral_norm;
    model.experts.push_back(std::move(e));
    model.risk_axes.push_back(Eigen::VectorXd::Constant(mod.fiber_dim, 1.0 / std::sqrt(mod.fiber_dim)));
  }
  apply_spectral_norm(model.experts);
  model.gating.w1 = glorot(shape.gate_hidden, d, rng);
  model.gating.b1 = Eigen::VectorXd::Zero(shape.gate_hidden);
  model.gating.w2 = glorot(bundle.num_modalities(), shape.gate_hidden, rng);
  model.gating.b2 = Eigen::VectorXd::Zero(bundle.num_modalities());
  model.flow.edge_dim = shape.edge_dim;
  model.flow.w1 = glorot(shape.flow_hidden, 2 * m + shape.edge_dim, rng);
  model.flow.b1 = Eigen::VectorXd::Zero(shape.flow_hidden);
  model.flow.w2 = glorot(m, shape.flow_hidden, rng);
  model.flow.b2 = Eigen::VectorXd::Zero(m);
  model.readout.w = glorot(shape.num_classes, m, rng);
  model.readout.b = Eigen::VectorXd::Zero(shape.num_classes);
  return model;
}

FlowParams FlowParams::gradient_special_case(int channels, int edge_dim) {
  FlowParams fp;
  fp.edge_dim = edge_dim;
  fp.linear = true;
  fp.w1 = Eigen::MatrixXd::Zero(channels, 2 * channels + edge_dim);
  fp.w1.leftCols(channels) = -Eigen::MatrixXd::Identity(channels, channels);
  fp.w1.middleCols(channels, channels) = Eigen::MatrixXd::Identity(channels, channels);
  fp.b1 = Eigen::VectorXd::Zero(channels);
  fp.w2 = Eigen::MatrixXd::Identity(channels, channels);
  fp.b2 = Eigen::VectorXd::Zero(channels);
  return fp;
}

// ---------------------------------------------------------------------------
// Forward passes

RealSparse neighborhood_mixing(const SimplicialComplex& k) {
  const auto n = static_cast<Eigen::Index>(k.num_vertices());
  Eigen::VectorXd deg = Eigen::VectorXd::Ones(n);
  for (const auto& e : k.edges()) {
    deg(e[0]) += 1;
    deg(e[1]) += 1;
  }
  std::vector<Eigen::Triplet<double>> t;
  t.reserve(static_cast<std::size_t>(n) + 2 * k.num_edges());
  for (Eigen::Index i = 0; i < n; ++i) t.emplace_back(i, i, 0.5 + 0.5 / deg(i));
  for (const auto& e : k.edges()) {
    const double w = 0.5 / std::sqrt(deg(e[0]) * deg(e[1]));
    t.emplace_back(e[0], e[1], w);
    t.emplace_back(e[1], e[0], w);
  }
  RealSparse s(n, n);
  s.setFromTriplets(t.begin(), t.end());
  return s;
}

Eigen::MatrixXd expert_forward(const RealSparse& mixing, const Eigen::MatrixXd& x, const BundleConfig& bundle,
                               const ExpertParams& expert) {
  const int n = expert.modality;
  const auto& mod = bundle.modalities.at(static_cast<std::size_t>(n));
  if (x.cols() != bundle.input_dim() || x.rows() != mixing.rows()) {
    throw ValidationError("expert input shape does not match the complex and bundle");
  }
  const Eigen::MatrixXd block = x.middleCols(bundle.input_offset(n), mod.input_dim);
  const Eigen::MatrixXd h = ((block * expert.w1.transpose()).rowwise() + expert.b1.transpose()).array().tanh().matrix();
  const Eigen::MatrixXd a = mixing * h;
  Eigen::MatrixXd out = (a * expert.w2.transpose()).rowwise() + expert.b2.transpose();
  if (expert.masked) {
    const int lo = bundle.fiber_offset(n);
    const int hi = lo + mod.fiber_dim;
    for (Eigen::Index c = 0; c < out.cols(); ++c) {
      if (c < lo || c >= hi) out.col(c).setZero();
    }
  }
  return out;
}

Eigen::MatrixXd gate_forward(const Eigen::MatrixXd& x, const GatingParams& gating) {
  const Eigen::MatrixXd h = ((x * gating.w1.transpose()).rowwise() + gating.b1.transpose()).array().tanh().matrix();
  Eigen::MatrixXd logits = (h * gating.w2.transpose()).rowwise() + gating.b2.transpose();
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const double mx = logits.row(i).maxCoeff();
    logits.row(i) = (logits.row(i).array() - mx).exp().matrix();
    logits.row(i) /= logits.row(i).sum();
  }
  return logits;
}

MoeOutput moe_forward(const RealSparse& mixing, const Eigen::MatrixXd& x, const BundleConfig& bundle,
                      const std::vector<ExpertParams>& experts, const GatingParams& gating) {
  bundle.validate();
  if (static_cast<int>(experts.size()) != bundle.num_modalities()) {
    throw ValidationError("one expert per modality is required");
  }
  if (x.rows() != mixing.rows() || x.cols() != bundle.input_dim()) {
    throw ValidationError("node feature matrix shape does not match the complex and bundle");
  }
  MoeOutput out;
  out.gates = gate_forward(x, gating);
  Eigen::MatrixXd r = Eigen::MatrixXd::Zero(x.rows(), bundle.fiber_dim());
  for (std::size_t n = 0; n < experts.size(); ++n) {
    Eigen::MatrixXd o = expert_forward(mixing, x, bundle, experts[n]);
    r += out.gates.col(static_cast<Eigen::Index>(n)).asDiagonal() * o;
    out.expert_outputs.push_back(std::move(o));
  }
  out.risk = Cochain(0, std::move(r));
  return out;
}

MoeOutput moe_forward(const SimplicialComplex& k, const Eigen::MatrixXd& x, const BundleConfig& bundle,
                      const std::vector<ExpertParams>& experts, const GatingParams& gating) {
  return moe_forward(neighborhood_mixing(k), x, bundle, experts, gating);
}

namespace {

Eigen::MatrixXd mlp_rows(const FlowParams& fp, const Eigen::MatrixXd& z) {
  Eigen::MatrixXd h = (z * fp.w1.transpose()).rowwise() + fp.b1.transpose();
  if (!fp.linear) h = h.array().tanh().matrix();
  return (h * fp.w2.transpose()).rowwise() + fp.b2.transpose();
}

void check_flow_shapes(const FlowParams& fp, Eigen::Index m, Eigen::Index p) {
  if (fp.w1.cols() != 2 * m + p || fp.w2.rows() != m || fp.edge_dim != p) {
    throw ValidationError("flow parameters do not match risk channels / edge feature width");
  }
}

}  // namespace

Eigen::VectorXd flow_mlp(const FlowParams& fp, const Eigen::VectorXd& ri, const Eigen::VectorXd& rj,
                         const Eigen::VectorXd& e) {
  check_flow_shapes(fp, ri.size(), e.size());
  Eigen::RowVectorXd z(2 * ri.size() + e.size());
  z << ri.transpose(), rj.transpose(), e.transpose();
  return mlp_rows(fp, z).transpose();
}

Eigen::VectorXd flow_psi(const FlowParams& fp, const Eigen::VectorXd& ri, const Eigen::VectorXd& rj,
                         const Eigen::VectorXd& e) {
  return 0.5 * (flow_mlp(fp, ri, rj, e) - flow_mlp(fp, rj, ri, -e));
}

Cochain flow_field(const SimplicialComplex& k, const Cochain& r, const Eigen::MatrixXd& edge_features,
                   const FlowParams& fp) {
  check_cochain(k, r, 0);
  const Eigen::Index ne = static_cast<Eigen::Index>(k.num_edges());
  const Eigen::Index m = r.channels();
  const Eigen::Index p = edge_features.cols();
  if (edge_features.rows() != ne) throw ValidationError("edge feature rows must match the edge count");
  check_flow_shapes(fp, m, p);
  Eigen::MatrixXd zp(ne, 2 * m + p);
  Eigen::MatrixXd zm(ne, 2 * m + p);
  for (Eigen::Index e = 0; e < ne; ++e) {
    const auto& [i, j] = k.edges()[static_cast<std::size_t>(e)];
    zp.row(e) << r.values.row(i), r.values.row(j), edge_features.row(e);
    zm.row(e) << r.values.row(j), r.values.row(i), -edge_features.row(e);
  }
  return {1, Eigen::MatrixXd(0.5 * (mlp_rows(fp, zp) - mlp_rows(fp, zm)))};
}

// ---------------------------------------------------------------------------
// Spectral normalisation

double top_singular_value(const Eigen::MatrixXd& w, int iterations) {
  if (w.size() == 0) return 0.0;
  Eigen::VectorXd v(w.cols());
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = 1.0 + 0.1 * std::sin(1.0 + static_cast<double>(i));
  v.normalize();
  double sigma = 0;
  for (int it = 0; it < std::max(iterations, 30); ++it) {
    Eigen::VectorXd u = w * v;
    sigma = u.norm();
    if (sigma == 0.0) return 0.0;
    v = w.transpose() * (u / sigma);
    const double nv = v.norm();
    if (nv == 0.0) return 0.0;
    v /= nv;
  }
  return (w * v).norm();
}

Eigen::MatrixXd spectral_normalize(const Eigen::MatrixXd& w, int iterations) {
  const double sigma = top_singular_value(w, iterations);
  return w / std::max(1.0, sigma);
}

void apply_spectral_norm(std::vector<ExpertParams>& experts) {
  for (auto& e : experts) {
    if (!e.spectral_norm) continue;
    e.w1 = spectral_normalize(e.w1);
    e.w2 = spectral_normalize(e.w2);
  }
}

}  // namespace gvf
