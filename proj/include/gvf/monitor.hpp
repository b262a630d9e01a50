#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gvf/complex.hpp"
#include "gvf/dec.hpp"
#include "gvf/hhd.hpp"
#include "gvf/model.hpp"

namespace gvf {

struct ScoreConfig {
  std::vector<Eigen::VectorXd> axes;  // u^(n), unit length, dim m_n
  std::vector<double> weights;        // w_n > 0, sum 1

  void validate(const BundleConfig& bundle) const;

  /// Axes 1/sqrt(m_n) per coordinate, weights 1/N_mod.
  static ScoreConfig uniform(const BundleConfig& bundle);
};

/// DPS_i = sum_n w_n <(net outflow of F^(n))_i, u^(n)>, with F^(n) the fiber-n
/// channels of F. Positive marks a net source. One value per vertex.
Eigen::VectorXd dps(const SimplicialComplex& k, const Cochain& f, const BundleConfig& bundle,
                    const ScoreConfig& cfg);

/// CRI_i = sum over triangles t containing i of ||(curl F)_t|| / max(|T_i|, 1).
Eigen::VectorXd cri(const SimplicialComplex& k, const Cochain& f);

enum class Component { None, Gradient, Curl, Harmonic };

std::string_view to_string(Component c);
/// Intervention target for a dominant component; empty for None.
std::string_view intervention(Component c);

struct AgentScore {
  std::string id;
  double dps = 0;
  double cri = 0;
  Component dominant = Component::None;
};

struct ScoreReport {
  std::vector<AgentScore> agents;
  EnergyFractions energy;
  Component dominant = Component::None;  // largest global energy fraction
};

/// Per-vertex energy of each component: sum over incident edges of the
/// squared row norm. Rows: vertices; columns: gradient, curl, harmonic.
Eigen::MatrixXd local_energy(const SimplicialComplex& k, const HodgeDecomposition& d);

/// Scores for agent vertices plus the dominant local component of each.
ScoreReport score_report(const SimplicialComplex& k, const Cochain& f, const BundleConfig& bundle,
                         const ScoreConfig& cfg, const HodgeDecomposition& d);

/// Fills in the dominant component of every agent in `scores` from the local
/// energies of `d`.
void annotate(const SimplicialComplex& k, const HodgeDecomposition& d, ScoreReport& scores);

enum class ShiftDecision { FineTune, Retrain };
std::string_view to_string(ShiftDecision d);

struct SpectrumSummary {
  Eigen::VectorXd delta0;  // ascending
  Eigen::VectorXd delta1;
  double d_spec = 0;
  double threshold = 0;
  ShiftDecision decision = ShiftDecision::FineTune;
};

/// Concatenated ascending spectra of Delta_0 and Delta_1, each zero-padded
/// at the front to `len0` / `len1`.
Eigen::VectorXd padded_spectrum(const Eigen::VectorXd& delta0, const Eigen::VectorXd& delta1, Eigen::Index len0,
                                Eigen::Index len1);

/// Euclidean distance between padded sorted spectra.
double spectral_distance(const SimplicialComplex& a, const SimplicialComplex& b);

/// threshold <= 0 selects 0.1 * ||lambda(K_prev)||.
SpectrumSummary spectral_shift(const SimplicialComplex& k, const SimplicialComplex& k_prev, double threshold = 0);

}  // namespace gvf
