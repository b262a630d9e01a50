#include "gvf/monitor.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "gvf/errors.hpp"
#include "gvf/log.hpp"

namespace gvf {

void ScoreConfig::validate(const BundleConfig& bundle) const {
  bundle.validate();
  const auto n = static_cast<std::size_t>(bundle.num_modalities());
  if (axes.size() != n || weights.size() != n) throw ValidationError("one risk axis and one weight per modality");
  double total = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (axes[i].size() != bundle.modalities[i].fiber_dim) {
      throw ValidationError("risk axis " + std::to_string(i) + " does not match its fiber dimension");
    }
    if (std::abs(axes[i].norm() - 1.0) > 1e-10) throw ValidationError("risk axes must have unit length");
    if (!(weights[i] > 0)) throw ValidationError("modality weights must be > 0");
    total += weights[i];
  }
  if (std::abs(total - 1.0) > 1e-10) throw ValidationError("modality weights must sum to 1");
}

ScoreConfig ScoreConfig::uniform(const BundleConfig& bundle) {
  bundle.validate();
  ScoreConfig cfg;
  for (const auto& m : bundle.modalities) {
    cfg.axes.push_back(Eigen::VectorXd::Constant(m.fiber_dim, 1.0 / std::sqrt(static_cast<double>(m.fiber_dim))));
    cfg.weights.push_back(1.0 / static_cast<double>(bundle.num_modalities()));
  }
  return cfg;
}

Eigen::VectorXd dps(const SimplicialComplex& k, const Cochain& f, const BundleConfig& bundle,
                    const ScoreConfig& cfg) {
  check_cochain(k, f, 1);
  cfg.validate(bundle);
  if (f.channels() != bundle.fiber_dim()) throw ValidationError("flow channels must equal the bundle dimension");
  const Cochain out = net_outflow(k, f);
  Eigen::VectorXd score = Eigen::VectorXd::Zero(out.rows());
  for (int n = 0; n < bundle.num_modalities(); ++n) {
    const auto& mod = bundle.modalities[static_cast<std::size_t>(n)];
    score += cfg.weights[static_cast<std::size_t>(n)] *
             (out.values.middleCols(bundle.fiber_offset(n), mod.fiber_dim) * cfg.axes[static_cast<std::size_t>(n)]);
  }
  return score;
}

Eigen::VectorXd cri(const SimplicialComplex& k, const Cochain& f) {
  check_cochain(k, f, 1);
  const auto nv = static_cast<Eigen::Index>(k.num_vertices());
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(nv);
  if (k.num_triangles() == 0) return sum;
  const Cochain c = curl(k, f);
  std::vector<int> count(static_cast<std::size_t>(nv), 0);
  for (std::size_t t = 0; t < k.num_triangles(); ++t) {
    const double mag = c.values.row(static_cast<Eigen::Index>(t)).norm();
    for (int v : k.triangles()[t]) {
      sum(v) += mag;
      ++count[static_cast<std::size_t>(v)];
    }
  }
  for (Eigen::Index v = 0; v < nv; ++v) sum(v) /= std::max(count[static_cast<std::size_t>(v)], 1);
  return sum;
}

std::string_view to_string(Component c) {
  switch (c) {
    case Component::Gradient: return "gradient";
    case Component::Curl: return "curl";
    case Component::Harmonic: return "harmonic";
    case Component::None: break;
  }
  return "none";
}

std::string_view intervention(Component c) {
  switch (c) {
    case Component::Gradient: return "Reduce source (exposure, shift pattern)";
    case Component::Curl: return "Break cycle (sleep hygiene, pharmacological)";
    case Component::Harmonic: return "Restructure network (scheduling, zoning)";
    case Component::None: break;
  }
  return "";
}

Eigen::MatrixXd local_energy(const SimplicialComplex& k, const HodgeDecomposition& d) {
  Eigen::MatrixXd e = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(k.num_vertices()), 3);
  const Cochain* parts[3] = {&d.gradient, &d.curl, &d.harmonic};
  for (int p = 0; p < 3; ++p) {
    check_cochain(k, *parts[p], 1);
    for (std::size_t idx = 0; idx < k.num_edges(); ++idx) {
      const double w = parts[p]->values.row(static_cast<Eigen::Index>(idx)).squaredNorm();
      e(k.edges()[idx][0], p) += w;
      e(k.edges()[idx][1], p) += w;
    }
  }
  return e;
}

void annotate(const SimplicialComplex& k, const HodgeDecomposition& d, ScoreReport& scores) {
  const Eigen::MatrixXd e = local_energy(k, d);
  std::size_t a = 0;
  for (std::size_t v = 0; v < k.num_vertices() && a < scores.agents.size(); ++v) {
    if (k.vertices()[v].kind != NodeKind::Agent) continue;
    AgentScore& s = scores.agents[a++];
    if (s.id != k.vertices()[v].id) throw ValidationError("score report does not match the complex");
    Eigen::Index arg;
    const double best = e.row(static_cast<Eigen::Index>(v)).maxCoeff(&arg);
    static constexpr Component order[3] = {Component::Gradient, Component::Curl, Component::Harmonic};
    s.dominant = best > 0 ? order[arg] : Component::None;
  }
  scores.energy = energy_fractions(d);
  const double parts[3] = {scores.energy.gradient, scores.energy.curl, scores.energy.harmonic};
  const auto* top = std::max_element(std::begin(parts), std::end(parts));
  scores.dominant = *top > 0 ? std::array{Component::Gradient, Component::Curl, Component::Harmonic}[top - parts]
                             : Component::None;
}

ScoreReport score_report(const SimplicialComplex& k, const Cochain& f, const BundleConfig& bundle,
                         const ScoreConfig& cfg, const HodgeDecomposition& d) {
  const Eigen::VectorXd p = dps(k, f, bundle, cfg);
  const Eigen::VectorXd c = cri(k, f);
  ScoreReport report;
  for (std::size_t v = 0; v < k.num_vertices(); ++v) {
    if (k.vertices()[v].kind != NodeKind::Agent) continue;
    const auto i = static_cast<Eigen::Index>(v);
    report.agents.push_back({k.vertices()[v].id, p(i), c(i), Component::None});
  }
  annotate(k, d, report);
  return report;
}

std::string_view to_string(ShiftDecision d) { return d == ShiftDecision::FineTune ? "fine_tune" : "retrain"; }

Eigen::VectorXd padded_spectrum(const Eigen::VectorXd& delta0, const Eigen::VectorXd& delta1, Eigen::Index len0,
                                Eigen::Index len1) {
  if (delta0.size() > len0 || delta1.size() > len1) throw ValidationError("padding length shorter than spectrum");
  Eigen::VectorXd out = Eigen::VectorXd::Zero(len0 + len1);
  out.head(delta0.size()) = delta0;
  out.segment(len0, delta1.size()) = delta1;
  std::sort(out.data(), out.data() + len0);
  std::sort(out.data() + len0, out.data() + len0 + len1);
  return out;
}

namespace {

Eigen::VectorXd laplacian_spectrum(const SimplicialComplex& k, int degree) {
  if (simplex_count(k, degree) == 0) return Eigen::VectorXd(0);
  return spectrum(hodge_laplacian(k, degree));
}

double distance(const Eigen::VectorXd& a0, const Eigen::VectorXd& a1, const Eigen::VectorXd& b0,
                const Eigen::VectorXd& b1) {
  const Eigen::Index l0 = std::max(a0.size(), b0.size());
  const Eigen::Index l1 = std::max(a1.size(), b1.size());
  return (padded_spectrum(a0, a1, l0, l1) - padded_spectrum(b0, b1, l0, l1)).norm();
}

}  // namespace

double spectral_distance(const SimplicialComplex& a, const SimplicialComplex& b) {
  return distance(laplacian_spectrum(a, 0), laplacian_spectrum(a, 1), laplacian_spectrum(b, 0),
                  laplacian_spectrum(b, 1));
}

SpectrumSummary spectral_shift(const SimplicialComplex& k, const SimplicialComplex& k_prev, double threshold) {
  if (k.empty() || k_prev.empty()) throw ValidationError("spectral shift needs two nonempty complexes");
  if (!std::isfinite(threshold)) throw ValidationError("threshold must be finite");
  SpectrumSummary s;
  s.delta0 = laplacian_spectrum(k, 0);
  s.delta1 = laplacian_spectrum(k, 1);
  const Eigen::VectorXd p0 = laplacian_spectrum(k_prev, 0);
  const Eigen::VectorXd p1 = laplacian_spectrum(k_prev, 1);
  if (!s.delta0.allFinite() || !s.delta1.allFinite() || !p0.allFinite() || !p1.allFinite()) {
    throw NumericalError("eigen-solver returned non-finite eigenvalues");
  }
  s.d_spec = distance(s.delta0, s.delta1, p0, p1);
  s.threshold = threshold > 0 ? threshold : 0.1 * std::sqrt(p0.squaredNorm() + p1.squaredNorm());
  s.decision = s.d_spec <= s.threshold ? ShiftDecision::FineTune : ShiftDecision::Retrain;
  if (k.num_vertices() != k_prev.num_vertices() || k.num_edges() != k_prev.num_edges()) {
    logger()->info("spectra of different sizes were zero-padded; added zero eigenvalues do not move d_spec");
  }
  return s;
}

}  // namespace gvf
