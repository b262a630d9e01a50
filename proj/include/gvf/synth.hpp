#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "gvf/complex.hpp"
#include "gvf/dec.hpp"
#include "gvf/model.hpp"
#include "gvf/training.hpp"

namespace gvf {

enum class Scenario { GradientDominant, CurlDominant, HarmonicDominant, Mixed };

std::string_view to_string(Scenario s);
Scenario scenario_from_string(std::string_view name);

struct CohortConfig {
  int n_agents = 24;
  int n_sensors = 6;
  int n_external = 2;
  Scenario scenario = Scenario::Mixed;
  /// Number of agent rings for harmonic_dominant (1..3).
  int rings = 2;
  /// Scales RSSI jitter (10 sigma dB), HRV jitter and feature noise.
  double noise = 0.1;
  /// Channels of the planted flow; matches the bundle's fiber dimension.
  int channels = 8;
  std::uint64_t seed = 1;

  void validate() const;
};

/// Records are emitted in [kSynthStart, kSynthStart + kSynthWindow) and are
/// built with the default ThresholdConfig.
inline constexpr double kSynthStart = 0.0;
inline constexpr double kSynthWindow = 300.0;

struct GroundTruth {
  SimplicialComplex complex;
  std::size_t beta1 = 0;
  std::vector<int> sources;                // strict local maxima of the planted potential
  std::vector<int> sinks;                  // strict local minima
  std::vector<std::vector<int>> cycles;    // edge indices of planted cycles
  std::vector<int> labels;                 // class per vertex, -1 for non-agents
  Eigen::MatrixXd features;                // |V| x input_dim, standard bundle layout
  Eigen::VectorXd label_weights;           // w of the rule y = [w . z > 0]
  Eigen::MatrixXd latent;                  // z per vertex, one column per input channel (zero rows for non-agents)
  Cochain flow;                            // planted edge flow
};

struct Cohort {
  EventStream stream;
  GroundTruth truth;
};

/// Seeded cohort with planted topology, labels and flow. Throws
/// ValidationError when the counts cannot realise the scenario.
Cohort generate(const CohortConfig& cfg);

/// Per-edge features [median RSSI / 100, total dwell / 60, link flag] over the
/// window, for the complex's canonical edge order.
Eigen::MatrixXd edge_features(const EventStream& events, const SimplicialComplex& k, double t0,
                              const ThresholdConfig& cfg);

/// Training sample for one cohort: complex rebuilt from the stream, features
/// and labels aligned to its vertices by id.
Sample make_sample(const Cohort& cohort, const ThresholdConfig& cfg = {});

/// Two agent clusters: within-cluster RSSI in [40, 60], some cross-cluster
/// pairs in [5, 15].
EventStream two_cluster_stream(int per_cluster, std::uint64_t seed);

/// Fully connected agent clique with RSSI in [30, 50].
EventStream clique_stream(int n, std::uint64_t seed);

}  // namespace gvf
