#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <Eigen/Sparse>

namespace gvf {

enum class NodeKind { Agent, SpatialCell, EnvSensor, External };

std::string_view to_string(NodeKind kind);
NodeKind node_kind_from_string(std::string_view name);

struct Vertex {
  std::string id;
  NodeKind kind = NodeKind::Agent;

  bool operator==(const Vertex&) const = default;
};

/// Oriented edge (lo, hi) with lo < hi.
using Edge = std::array<int, 2>;
/// Oriented triangle (a, b, c) with a < b < c.
using Triangle = std::array<int, 3>;

using IntSparse = Eigen::SparseMatrix<int>;
using RealSparse = Eigen::SparseMatrix<double>;

/// Immutable 2-dimensional simplicial complex with canonical orientation.
///
/// Edges are stored sorted lexicographically and oriented low index to high
/// index; triangles sorted and oriented by ascending vertex index. The
/// incidence matrices are built once on construction:
///   B1(i, e) = -1 at the tail, +1 at the head of edge e,
///   B2(e, t) = boundary coefficient of edge e in triangle t, using
///   d[a,b,c] = [b,c] - [a,c] + [a,b].
class SimplicialComplex {
 public:
  SimplicialComplex() = default;

  /// Validates closure and canonical orientation, then sorts and builds
  /// incidence matrices. Throws ValidationError on malformed input.
  static SimplicialComplex from_simplices(std::vector<Vertex> vertices, std::vector<Edge> edges,
                                          std::vector<Triangle> triangles);

  std::size_t num_vertices() const { return vertices_.size(); }
  std::size_t num_edges() const { return edges_.size(); }
  std::size_t num_triangles() const { return triangles_.size(); }
  bool empty() const { return vertices_.empty(); }

  const std::vector<Vertex>& vertices() const { return vertices_; }
  const std::vector<Edge>& edges() const { return edges_; }
  const std::vector<Triangle>& triangles() const { return triangles_; }

  const IntSparse& b1() const { return b1_; }
  const IntSparse& b2() const { return b2_; }
  const RealSparse& b1_real() const { return b1_real_; }
  const RealSparse& b2_real() const { return b2_real_; }

  /// Index of edge {u, v} in canonical order, if present.
  std::optional<std::size_t> edge_index(int u, int v) const;

  /// Sorted neighbour lists of the 1-skeleton.
  std::vector<std::vector<int>> adjacency() const;

  bool operator==(const SimplicialComplex& other) const {
    return vertices_ == other.vertices_ && edges_ == other.edges_ && triangles_ == other.triangles_;
  }

 private:
  std::vector<Vertex> vertices_;
  std::vector<Edge> edges_;
  std::vector<Triangle> triangles_;
  IntSparse b1_;
  IntSparse b2_;
  RealSparse b1_real_;
  RealSparse b2_real_;
};

// ---------------------------------------------------------------------------
// Event streams

struct NodeRecord {
  std::string id;
  NodeKind kind = NodeKind::Agent;
};

/// Bluetooth proximity sample; rssi is dB above the receiver noise floor.
struct ProxRecord {
  double t = 0;
  std::string agent_i;
  std::string agent_j;
  double rssi = 0;
};

struct PhysRecord {
  double t = 0;
  std::string agent;
  std::string channel;
  double value = 0;
};

/// Time an agent spent inside a sensor's active radius, in minutes.
struct DwellRecord {
  double t = 0;
  std::string agent;
  std::string sensor;
  double duration = 0;
};

/// Static agent to external-node (or spatial cell) link.
struct LinkRecord {
  std::string agent;
  std::string node;
};

using Record = std::variant<NodeRecord, ProxRecord, PhysRecord, DwellRecord, LinkRecord>;

/// Ordered multimodal record stream. Record indices are positions in
/// `records`, which is also the JSONL line order.
struct EventStream {
  std::vector<Record> records;

  /// Checks id resolution, kind compatibility, duplicate declarations and
  /// per-class timestamp monotonicity. Throws RecordError.
  void validate() const;
};

/// Physiological channel compared by DTW when forming synchrony edges.
inline constexpr std::string_view kSyncChannel = "hrv";
/// Fixed length of the per-window resampled series fed to DTW.
inline constexpr std::size_t kDtwLength = 64;

struct ThresholdConfig {
  double tau_prox = 25.0;   // dB above noise floor
  double tau_sync = 2.0;    // DTW distance
  double tau_dwell = 10.0;  // minutes
  double window = 300.0;    // seconds

  void validate() const;
  bool operator==(const ThresholdConfig&) const = default;
};

struct TopologySummary {
  std::size_t beta0 = 0;
  std::size_t beta1 = 0;
  std::size_t d_max = 0;
  std::size_t rank_b1 = 0;
  std::size_t rank_b2 = 0;

  bool operator==(const TopologySummary&) const = default;
};

/// Classic unconstrained dynamic time warping with absolute-difference cost.
double dtw_distance(const std::vector<double>& a, const std::vector<double>& b);

/// Linear-interpolation resampling of (t, value) samples onto `length`
/// uniform points spanning the sample time range.
std::vector<double> resample_series(std::vector<std::pair<double, double>> samples, std::size_t length);

/// Builds K(t0) over the window [t0, t0 + cfg.window).
SimplicialComplex build_complex(const EventStream& events, double t0, const ThresholdConfig& cfg);

/// Exact rank of an integer matrix by fraction-free column elimination.
std::size_t exact_rank(const IntSparse& m);

TopologySummary betti_numbers(const SimplicialComplex& k);

struct SweepPoint {
  ThresholdConfig config;
  TopologySummary summary;
};

struct PlateauSelection {
  std::size_t index = 0;
  ThresholdConfig config;
  std::size_t plateau_start = 0;
  std::size_t plateau_length = 0;
  std::size_t beta0 = 0;
  std::size_t beta1 = 0;
  bool no_plateau = false;
};

std::vector<SweepPoint> sweep_thresholds(const EventStream& events, double t0,
                                         const std::vector<ThresholdConfig>& grid);

/// Midpoint of the longest contiguous run of constant (beta0, beta1).
/// Ties resolve to the earliest run.
PlateauSelection select_plateau(const std::vector<SweepPoint>& sweep);

}  // namespace gvf
