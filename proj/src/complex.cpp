#include "gvf/complex.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <stdexcept>
#include <unordered_map>
#include <utility>

#include <boost/multiprecision/cpp_int.hpp>

#include "gvf/errors.hpp"
#include "gvf/log.hpp"

namespace gvf {

std::string_view to_string(NodeKind kind) {
  switch (kind) {
    case NodeKind::Agent:
      return "agent";
    case NodeKind::SpatialCell:
      return "spatial";
    case NodeKind::EnvSensor:
      return "sensor";
    case NodeKind::External:
      return "external";
  }
  return "agent";
}

NodeKind node_kind_from_string(std::string_view name) {
  if (name == "agent") return NodeKind::Agent;
  if (name == "spatial") return NodeKind::SpatialCell;
  if (name == "sensor") return NodeKind::EnvSensor;
  if (name == "external") return NodeKind::External;
  throw ValidationError("unknown node kind '" + std::string(name) + "'");
}

// ---------------------------------------------------------------------------
// SimplicialComplex

namespace {

std::uint64_t edge_key(int u, int v) {
  return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(u)) << 32) | static_cast<std::uint32_t>(v);
}

}  // namespace

SimplicialComplex SimplicialComplex::from_simplices(std::vector<Vertex> vertices, std::vector<Edge> edges,
                                                    std::vector<Triangle> triangles) {
  const int n = static_cast<int>(vertices.size());
  {
    std::unordered_map<std::string, int> seen;
    for (int i = 0; i < n; ++i) {
      if (!seen.emplace(vertices[i].id, i).second) {
        throw ValidationError("duplicate vertex id '" + vertices[i].id + "'");
      }
    }
  }
  for (const auto& e : edges) {
    if (e[0] < 0 || e[1] >= n || e[0] >= e[1]) {
      throw ValidationError("edge (" + std::to_string(e[0]) + "," + std::to_string(e[1]) +
                            ") is not canonically oriented over existing vertices");
    }
  }
  std::sort(edges.begin(), edges.end());
  if (std::adjacent_find(edges.begin(), edges.end()) != edges.end()) {
    throw ValidationError("duplicate edge");
  }
  for (const auto& t : triangles) {
    if (t[0] < 0 || t[2] >= n || !(t[0] < t[1] && t[1] < t[2])) {
      throw ValidationError("triangle is not canonically oriented over existing vertices");
    }
  }
  std::sort(triangles.begin(), triangles.end());
  if (std::adjacent_find(triangles.begin(), triangles.end()) != triangles.end()) {
    throw ValidationError("duplicate triangle");
  }

  SimplicialComplex k;
  k.vertices_ = std::move(vertices);
  k.edges_ = std::move(edges);
  k.triangles_ = std::move(triangles);

  std::unordered_map<std::uint64_t, int> index;
  index.reserve(k.edges_.size() * 2);
  for (std::size_t e = 0; e < k.edges_.size(); ++e) {
    index.emplace(edge_key(k.edges_[e][0], k.edges_[e][1]), static_cast<int>(e));
  }

  std::vector<Eigen::Triplet<int>> t1;
  t1.reserve(2 * k.edges_.size());
  for (std::size_t e = 0; e < k.edges_.size(); ++e) {
    t1.emplace_back(k.edges_[e][0], static_cast<int>(e), -1);
    t1.emplace_back(k.edges_[e][1], static_cast<int>(e), +1);
  }
  std::vector<Eigen::Triplet<int>> t2;
  t2.reserve(3 * k.triangles_.size());
  for (std::size_t f = 0; f < k.triangles_.size(); ++f) {
    const auto [a, b, c] = k.triangles_[f];
    const auto find = [&](int u, int v) {
      auto it = index.find(edge_key(u, v));
      if (it == index.end()) {
        throw ValidationError("triangle (" + std::to_string(a) + "," + std::to_string(b) + "," +
                              std::to_string(c) + ") is missing bounding edge (" + std::to_string(u) + "," +
                              std::to_string(v) + ")");
      }
      return it->second;
    };
    t2.emplace_back(find(a, b), static_cast<int>(f), +1);
    t2.emplace_back(find(b, c), static_cast<int>(f), +1);
    t2.emplace_back(find(a, c), static_cast<int>(f), -1);
  }

  const auto ne = static_cast<Eigen::Index>(k.edges_.size());
  const auto nt = static_cast<Eigen::Index>(k.triangles_.size());
  k.b1_.resize(n, ne);
  k.b1_.setFromTriplets(t1.begin(), t1.end());
  k.b2_.resize(ne, nt);
  k.b2_.setFromTriplets(t2.begin(), t2.end());
  k.b1_real_ = k.b1_.cast<double>();
  k.b2_real_ = k.b2_.cast<double>();
  return k;
}

std::optional<std::size_t> SimplicialComplex::edge_index(int u, int v) const {
  if (u > v) std::swap(u, v);
  const Edge key{u, v};
  auto it = std::lower_bound(edges_.begin(), edges_.end(), key);
  if (it == edges_.end() || *it != key) return std::nullopt;
  return static_cast<std::size_t>(it - edges_.begin());
}

std::vector<std::vector<int>> SimplicialComplex::adjacency() const {
  std::vector<std::vector<int>> adj(vertices_.size());
  for (const auto& e : edges_) {
    adj[e[0]].push_back(e[1]);
    adj[e[1]].push_back(e[0]);
  }
  for (auto& a : adj) std::sort(a.begin(), a.end());
  return adj;
}

// ---------------------------------------------------------------------------
// Stream validation

namespace {

struct NodeIndex {
  std::unordered_map<std::string, std::pair<std::size_t, NodeKind>> by_id;  // id -> (decl order, kind)
  std::vector<NodeRecord> decls;
};

NodeIndex index_nodes(const EventStream& events) {
  NodeIndex idx;
  for (std::size_t r = 0; r < events.records.size(); ++r) {
    if (const auto* node = std::get_if<NodeRecord>(&events.records[r])) {
      if (node->id.empty()) throw RecordError(r, "empty node id");
      if (!idx.by_id.emplace(node->id, std::make_pair(idx.decls.size(), node->kind)).second) {
        throw RecordError(r, "duplicate node id '" + node->id + "'");
      }
      idx.decls.push_back(*node);
    }
  }
  return idx;
}

void expect_kind(const NodeIndex& idx, std::size_t r, const std::string& id, std::initializer_list<NodeKind> kinds,
                 const char* role) {
  auto it = idx.by_id.find(id);
  if (it == idx.by_id.end()) throw RecordError(r, std::string("unresolvable ") + role + " id '" + id + "'");
  if (std::find(kinds.begin(), kinds.end(), it->second.second) == kinds.end()) {
    throw RecordError(r, std::string(role) + " id '" + id + "' has incompatible kind " +
                             std::string(to_string(it->second.second)));
  }
}

void check_finite(std::size_t r, double v, const char* what) {
  if (!std::isfinite(v)) throw RecordError(r, std::string("non-finite ") + what);
}

}  // namespace

void EventStream::validate() const {
  const NodeIndex idx = index_nodes(*this);
  double last_prox = -std::numeric_limits<double>::infinity();
  double last_phys = last_prox;
  double last_dwell = last_prox;
  const auto monotone = [](std::size_t r, double t, double& last, const char* cls) {
    if (t < last) throw RecordError(r, std::string("timestamp decreases within ") + cls + " records");
    last = t;
  };
  for (std::size_t r = 0; r < records.size(); ++r) {
    const Record& rec = records[r];
    if (const auto* p = std::get_if<ProxRecord>(&rec)) {
      check_finite(r, p->t, "timestamp");
      check_finite(r, p->rssi, "rssi");
      expect_kind(idx, r, p->agent_i, {NodeKind::Agent}, "agent");
      expect_kind(idx, r, p->agent_j, {NodeKind::Agent}, "agent");
      if (p->agent_i == p->agent_j) throw RecordError(r, "proximity record pairs an agent with itself");
      monotone(r, p->t, last_prox, "prox");
    } else if (const auto* p = std::get_if<PhysRecord>(&rec)) {
      check_finite(r, p->t, "timestamp");
      check_finite(r, p->value, "value");
      expect_kind(idx, r, p->agent, {NodeKind::Agent}, "agent");
      monotone(r, p->t, last_phys, "phys");
    } else if (const auto* p = std::get_if<DwellRecord>(&rec)) {
      check_finite(r, p->t, "timestamp");
      check_finite(r, p->duration, "duration");
      if (p->duration < 0) throw RecordError(r, "negative dwell duration");
      expect_kind(idx, r, p->agent, {NodeKind::Agent}, "agent");
      expect_kind(idx, r, p->sensor, {NodeKind::EnvSensor}, "sensor");
      monotone(r, p->t, last_dwell, "dwell");
    } else if (const auto* p = std::get_if<LinkRecord>(&rec)) {
      expect_kind(idx, r, p->agent, {NodeKind::Agent}, "agent");
      expect_kind(idx, r, p->node, {NodeKind::External, NodeKind::SpatialCell}, "link target");
    }
  }
}

void ThresholdConfig::validate() const {
  const auto positive = [](double v, const char* name) {
    if (!(std::isfinite(v) && v > 0)) throw ValidationError(std::string(name) + " must be finite and > 0");
  };
  positive(tau_prox, "tau_prox");
  positive(tau_sync, "tau_sync");
  positive(tau_dwell, "tau_dwell");
  positive(window, "window");
}

// ---------------------------------------------------------------------------
// DTW

double dtw_distance(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.empty() || b.empty()) return std::numeric_limits<double>::infinity();
  const std::size_t n = a.size();
  const std::size_t m = b.size();
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> prev(m + 1, inf);
  std::vector<double> cur(m + 1, inf);
  prev[0] = 0.0;
  for (std::size_t i = 1; i <= n; ++i) {
    cur[0] = inf;
    for (std::size_t j = 1; j <= m; ++j) {
      const double cost = std::abs(a[i - 1] - b[j - 1]);
      cur[j] = cost + std::min({prev[j], cur[j - 1], prev[j - 1]});
    }
    std::swap(prev, cur);
  }
  return prev[m];
}

std::vector<double> resample_series(std::vector<std::pair<double, double>> samples, std::size_t length) {
  std::vector<double> out;
  if (samples.empty() || length == 0) return out;
  std::stable_sort(samples.begin(), samples.end(),
                   [](const auto& x, const auto& y) { return x.first < y.first; });
  out.resize(length);
  const double t_lo = samples.front().first;
  const double t_hi = samples.back().first;
  if (samples.size() == 1 || t_hi <= t_lo) {
    std::fill(out.begin(), out.end(), samples.front().second);
    return out;
  }
  std::size_t seg = 0;
  for (std::size_t k = 0; k < length; ++k) {
    const double t = length == 1 ? t_lo : t_lo + (t_hi - t_lo) * static_cast<double>(k) / static_cast<double>(length - 1);
    while (seg + 2 < samples.size() && samples[seg + 1].first < t) ++seg;
    const auto& [t0, v0] = samples[seg];
    const auto& [t1, v1] = samples[seg + 1];
    const double w = t1 > t0 ? std::clamp((t - t0) / (t1 - t0), 0.0, 1.0) : 0.0;
    out[k] = v0 + w * (v1 - v0);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Construction

namespace {

double median(std::vector<double> v) {
  const std::size_t n = v.size();
  std::sort(v.begin(), v.end());
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

SimplicialComplex build_complex(const EventStream& events, double t0, const ThresholdConfig& cfg) {
  cfg.validate();
  events.validate();
  const NodeIndex idx = index_nodes(events);
  const double t1 = t0 + cfg.window;
  const auto in_window = [&](double t) { return t >= t0 && t < t1; };

  // V^A(t) and V^E(t) are the agents and sensors seen inside the window;
  // spatial cells and external nodes are static.
  std::vector<char> active(idx.decls.size(), 0);
  for (std::size_t d = 0; d < idx.decls.size(); ++d) {
    const NodeKind kind = idx.decls[d].kind;
    active[d] = kind == NodeKind::SpatialCell || kind == NodeKind::External;
  }
  const auto decl_of = [&](const std::string& id) { return idx.by_id.at(id).first; };

  std::map<std::pair<std::size_t, std::size_t>, std::vector<double>> rssi;
  std::map<std::size_t, std::vector<std::pair<double, double>>> sync_series;
  std::map<std::pair<std::size_t, std::size_t>, double> dwell;
  std::vector<std::pair<std::size_t, std::size_t>> links;

  for (const Record& rec : events.records) {
    if (const auto* p = std::get_if<ProxRecord>(&rec)) {
      if (!in_window(p->t)) continue;
      auto a = decl_of(p->agent_i);
      auto b = decl_of(p->agent_j);
      active[a] = active[b] = 1;
      rssi[{std::min(a, b), std::max(a, b)}].push_back(p->rssi);
    } else if (const auto* p = std::get_if<PhysRecord>(&rec)) {
      if (!in_window(p->t)) continue;
      auto a = decl_of(p->agent);
      active[a] = 1;
      if (p->channel == kSyncChannel) sync_series[a].emplace_back(p->t, p->value);
    } else if (const auto* p = std::get_if<DwellRecord>(&rec)) {
      if (!in_window(p->t)) continue;
      auto a = decl_of(p->agent);
      auto s = decl_of(p->sensor);
      active[a] = active[s] = 1;
      dwell[{a, s}] += p->duration;
    } else if (const auto* p = std::get_if<LinkRecord>(&rec)) {
      links.emplace_back(decl_of(p->agent), decl_of(p->node));
    }
  }

  std::vector<int> vertex_of(idx.decls.size(), -1);
  std::vector<Vertex> vertices;
  for (std::size_t d = 0; d < idx.decls.size(); ++d) {
    if (!active[d]) continue;
    vertex_of[d] = static_cast<int>(vertices.size());
    vertices.push_back({idx.decls[d].id, idx.decls[d].kind});
  }

  std::vector<Edge> edges;
  const auto add_edge = [&](std::size_t da, std::size_t db) {
    int u = vertex_of[da];
    int v = vertex_of[db];
    if (u < 0 || v < 0 || u == v) return;
    edges.push_back({std::min(u, v), std::max(u, v)});
  };

  // Phase 1: 1-skeleton.
  for (const auto& [pair, samples] : rssi) {
    if (median(samples) >= cfg.tau_prox) add_edge(pair.first, pair.second);
  }
  {
    std::vector<std::pair<std::size_t, std::vector<double>>> resampled;
    for (auto& [agent, samples] : sync_series) {
      if (samples.size() >= 2) resampled.emplace_back(agent, resample_series(samples, kDtwLength));
    }
    for (std::size_t x = 0; x < resampled.size(); ++x) {
      for (std::size_t y = x + 1; y < resampled.size(); ++y) {
        const auto& sa = resampled[x].second;
        const auto& sb = resampled[y].second;
        // Every warping path visits both corner cells.
        if (std::abs(sa.front() - sb.front()) + std::abs(sa.back() - sb.back()) > cfg.tau_sync) continue;
        if (dtw_distance(sa, sb) <= cfg.tau_sync) {
          add_edge(resampled[x].first, resampled[y].first);
        }
      }
    }
  }
  for (const auto& [pair, total] : dwell) {
    if (total >= cfg.tau_dwell) add_edge(pair.first, pair.second);
  }
  for (const auto& [agent, node] : links) {
    if (active[agent]) add_edge(agent, node);
  }
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());

  // Phase 2: close a triad only when its three edges exist and at least two
  // node kinds are present. Only wedges over existing edges are visited.
  std::vector<std::vector<int>> upper(vertices.size());
  for (const auto& e : edges) upper[e[0]].push_back(e[1]);
  std::vector<Triangle> triangles;
  for (const auto& [a, b] : edges) {
    const auto& na = upper[a];
    const auto& nb = upper[b];
    auto ia = std::upper_bound(na.begin(), na.end(), b);
    auto ib = nb.begin();
    while (ia != na.end() && ib != nb.end()) {
      if (*ia < *ib) {
        ++ia;
      } else if (*ib < *ia) {
        ++ib;
      } else {
        const int c = *ia;
        const NodeKind ka = vertices[a].kind;
        const NodeKind kb = vertices[b].kind;
        const NodeKind kc = vertices[c].kind;
        if (!(ka == kb && kb == kc)) triangles.push_back({a, b, c});
        ++ia;
        ++ib;
      }
    }
  }

  logger()->debug("built complex at t0={}: {} vertices, {} edges, {} triangles", t0, vertices.size(),
                  edges.size(), triangles.size());
  return SimplicialComplex::from_simplices(std::move(vertices), std::move(edges), std::move(triangles));
}

// ---------------------------------------------------------------------------
// Exact rank

namespace {

using BigInt = boost::multiprecision::cpp_int;

struct Overflow {};

template <class Int>
struct Arith;

template <>
struct Arith<std::int64_t> {
  static std::int64_t mul(std::int64_t a, std::int64_t b) {
    std::int64_t out;
    if (__builtin_mul_overflow(a, b, &out)) throw Overflow{};
    return out;
  }
  static std::int64_t sub(std::int64_t a, std::int64_t b) {
    std::int64_t out;
    if (__builtin_sub_overflow(a, b, &out)) throw Overflow{};
    return out;
  }
  static std::int64_t gcd(std::int64_t a, std::int64_t b) { return std::gcd(a, b); }
  static std::int64_t abs(std::int64_t a) { return a < 0 ? -a : a; }
};

template <>
struct Arith<BigInt> {
  static BigInt mul(const BigInt& a, const BigInt& b) { return a * b; }
  static BigInt sub(const BigInt& a, const BigInt& b) { return a - b; }
  static BigInt gcd(const BigInt& a, const BigInt& b) { return boost::multiprecision::gcd(a, b); }
  static BigInt abs(const BigInt& a) { return boost::multiprecision::abs(a); }
};

// Column reduction over Z with content (gcd) normalisation: every column is
// reduced against stored pivot columns keyed by their lowest nonzero row.
// Integer combinations b*col - a*piv never leave Z, and the rank over Z equals
// the rank over Q.
template <class Int>
std::size_t rank_impl(const IntSparse& m) {
  using A = Arith<Int>;
  using Column = std::vector<std::pair<int, Int>>;
  std::unordered_map<int, Column> pivots;
  Column work;
  Column merged;
  for (Eigen::Index c = 0; c < m.outerSize(); ++c) {
    work.clear();
    for (IntSparse::InnerIterator it(m, c); it; ++it) {
      if (it.value() != 0) work.emplace_back(static_cast<int>(it.row()), Int(it.value()));
    }
    std::sort(work.begin(), work.end(), [](const auto& x, const auto& y) { return x.first < y.first; });
    while (!work.empty()) {
      auto found = pivots.find(work.back().first);
      if (found == pivots.end()) break;
      const Column& piv = found->second;
      const Int a = work.back().second;
      const Int b = piv.back().second;
      merged.clear();
      std::size_t i = 0;
      std::size_t j = 0;
      while (i < work.size() || j < piv.size()) {
        if (j == piv.size() || (i < work.size() && work[i].first < piv[j].first)) {
          merged.emplace_back(work[i].first, A::mul(b, work[i].second));
          ++i;
        } else if (i == work.size() || piv[j].first < work[i].first) {
          merged.emplace_back(piv[j].first, A::sub(Int(0), A::mul(a, piv[j].second)));
          ++j;
        } else {
          Int v = A::sub(A::mul(b, work[i].second), A::mul(a, piv[j].second));
          if (v != 0) merged.emplace_back(work[i].first, v);
          ++i;
          ++j;
        }
      }
      Int g(0);
      for (const auto& [row, v] : merged) g = A::gcd(g, A::abs(v));
      if (g > 1) {
        for (auto& [row, v] : merged) v /= g;
      }
      std::swap(work, merged);
    }
    if (!work.empty()) {
      const int low = work.back().first;
      pivots.emplace(low, work);
    }
  }
  return pivots.size();
}

}  // namespace

std::size_t exact_rank(const IntSparse& m) {
  try {
    return rank_impl<std::int64_t>(m);
  } catch (const Overflow&) {
    logger()->debug("int64 overflow in exact rank; retrying with arbitrary precision");
    return rank_impl<BigInt>(m);
  }
}

TopologySummary betti_numbers(const SimplicialComplex& k) {
  TopologySummary s;
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
  std::size_t components = n;
  for (const auto& e : k.edges()) {
    auto a = find(static_cast<std::size_t>(e[0]));
    auto b = find(static_cast<std::size_t>(e[1]));
    if (a != b) {
      parent[std::max(a, b)] = std::min(a, b);
      --components;
    }
  }
  s.beta0 = components;
  s.rank_b1 = exact_rank(k.b1());
  s.rank_b2 = exact_rank(k.b2());
  s.beta1 = k.num_edges() - s.rank_b1 - s.rank_b2;
  std::vector<std::size_t> per_edge(k.num_edges(), 0);
  for (Eigen::Index c = 0; c < k.b2().outerSize(); ++c) {
    for (IntSparse::InnerIterator it(k.b2(), c); it; ++it) ++per_edge[static_cast<std::size_t>(it.row())];
  }
  for (auto d : per_edge) s.d_max = std::max(s.d_max, d);
  return s;
}

// ---------------------------------------------------------------------------
// Threshold sweep

std::vector<SweepPoint> sweep_thresholds(const EventStream& events, double t0,
                                         const std::vector<ThresholdConfig>& grid) {
  if (grid.empty()) throw ValidationError("threshold grid is empty");
  std::vector<SweepPoint> out;
  out.reserve(grid.size());
  for (const auto& cfg : grid) {
    out.push_back({cfg, betti_numbers(build_complex(events, t0, cfg))});
  }
  return out;
}

PlateauSelection select_plateau(const std::vector<SweepPoint>& sweep) {
  if (sweep.empty()) throw ValidationError("empty sweep");
  std::size_t best_start = 0;
  std::size_t best_len = 0;
  std::size_t start = 0;
  for (std::size_t i = 1; i <= sweep.size(); ++i) {
    const bool breaks = i == sweep.size() || sweep[i].summary.beta0 != sweep[start].summary.beta0 ||
                        sweep[i].summary.beta1 != sweep[start].summary.beta1;
    if (breaks) {
      if (i - start > best_len) {
        best_len = i - start;
        best_start = start;
      }
      start = i;
    }
  }
  PlateauSelection sel;
  sel.plateau_start = best_start;
  sel.plateau_length = best_len;
  sel.no_plateau = best_len == 1 && sweep.size() > 1;
  sel.index = sel.no_plateau ? 0 : best_start + (best_len - 1) / 2;
  sel.config = sweep[sel.index].config;
  sel.beta0 = sweep[sel.index].summary.beta0;
  sel.beta1 = sweep[sel.index].summary.beta1;
  if (sel.no_plateau) logger()->warn("threshold sweep found no plateau; returning first grid point");
  return sel;
}

}  // namespace gvf
