#include "gvf/synth.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <set>

#include <fmt/format.h>

#include "gvf/errors.hpp"
#include "gvf/log.hpp"

namespace gvf {

std::string_view to_string(Scenario s) {
  switch (s) {
    case Scenario::GradientDominant: return "gradient_dominant";
    case Scenario::CurlDominant: return "curl_dominant";
    case Scenario::HarmonicDominant: return "harmonic_dominant";
    case Scenario::Mixed: break;
  }
  return "mixed";
}

Scenario scenario_from_string(std::string_view name) {
  if (name == "gradient_dominant") return Scenario::GradientDominant;
  if (name == "curl_dominant") return Scenario::CurlDominant;
  if (name == "harmonic_dominant") return Scenario::HarmonicDominant;
  if (name == "mixed") return Scenario::Mixed;
  throw ValidationError("unknown scenario '" + std::string(name) + "'");
}

void CohortConfig::validate() const {
  if (n_agents < 2) throw ValidationError("n_agents must be >= 2");
  if (n_sensors < 1) throw ValidationError("n_sensors must be >= 1");
  if (n_external < 0) throw ValidationError("n_external must be >= 0");
  if (!(noise >= 0) || !std::isfinite(noise)) throw ValidationError("noise must be finite and >= 0");
  if (channels < 1) throw ValidationError("channels must be >= 1");
  switch (scenario) {
    case Scenario::GradientDominant:
    case Scenario::CurlDominant:
      if (n_sensors > n_agents - 1) {
        throw ValidationError(fmt::format("{} needs n_sensors <= n_agents - 1", to_string(scenario)));
      }
      break;
    case Scenario::HarmonicDominant:
      if (rings < 1 || rings > 3) throw ValidationError("harmonic_dominant supports 1 to 3 rings");
      if (n_agents < 4 * rings) throw ValidationError("harmonic_dominant needs at least 4 agents per ring");
      break;
    case Scenario::Mixed:
      if (n_agents < 3) throw ValidationError("mixed needs at least 3 agents");
      break;
  }
}

namespace {

using Pair = std::pair<int, int>;

Pair ordered(int a, int b) { return {std::min(a, b), std::max(a, b)}; }

struct Plan {
  int na = 0, ns = 0, nx = 0;
  std::vector<Vertex> vertices;
  std::set<Pair> prox;   // agent-agent, realised by RSSI
  std::set<Pair> sync;   // agent-agent, realised by identical HRV series
  std::set<Pair> dwell;  // (agent, sensor)
  std::set<Pair> link;   // (agent, external)
  std::vector<double> phi;
  double grad_scale = 1.0;
  std::vector<std::vector<int>> rings;
  double ring_scale = 0.0;
  double curl_scale = 0.0;
  bool random_part = false;

  int sensor(int s) const { return na + s; }
  int external(int x) const { return na + ns + x; }
};

int pick(std::mt19937_64& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

// Random tree over agents [0, n): agent j > 0 attaches to an earlier one.
std::vector<Pair> random_tree(std::mt19937_64& rng, int n, int first_star) {
  std::vector<Pair> edges;
  for (int j = 1; j < n; ++j) {
    const int parent = j <= first_star ? 0 : pick(rng, 1, j - 1);
    edges.push_back({parent, j});
  }
  return edges;
}

void sensors_on_edges(std::mt19937_64& rng, Plan& p, std::vector<Pair> tree) {
  std::shuffle(tree.begin(), tree.end(), rng);
  for (int s = 0; s < p.ns; ++s) {
    const auto [a, b] = tree[static_cast<std::size_t>(s)];
    p.dwell.insert({a, p.sensor(s)});
    p.dwell.insert({b, p.sensor(s)});
  }
}

void pendant_externals(std::mt19937_64& rng, Plan& p) {
  for (int x = 0; x < p.nx; ++x) p.link.insert({pick(rng, 0, p.na - 1), p.external(x)});
}

std::vector<double> bfs_potential(const Plan& p, int root) {
  const int nv = static_cast<int>(p.vertices.size());
  std::vector<std::vector<int>> adj(static_cast<std::size_t>(nv));
  const auto add = [&](const Pair& e) {
    adj[static_cast<std::size_t>(e.first)].push_back(e.second);
    adj[static_cast<std::size_t>(e.second)].push_back(e.first);
  };
  for (const auto& e : p.prox) add(e);
  for (const auto& e : p.sync) add(e);
  for (const auto& e : p.dwell) add(e);
  for (const auto& e : p.link) add(e);
  std::vector<int> dist(static_cast<std::size_t>(nv), -1);
  std::vector<int> queue{root};
  dist[static_cast<std::size_t>(root)] = 0;
  for (std::size_t q = 0; q < queue.size(); ++q) {
    for (int v : adj[static_cast<std::size_t>(queue[q])]) {
      if (dist[static_cast<std::size_t>(v)] < 0) {
        dist[static_cast<std::size_t>(v)] = dist[static_cast<std::size_t>(queue[q])] + 1;
        queue.push_back(v);
      }
    }
  }
  int far = 0;
  for (int d : dist) far = std::max(far, d);
  std::vector<double> phi(static_cast<std::size_t>(nv));
  for (int v = 0; v < nv; ++v) {
    const int d = dist[static_cast<std::size_t>(v)];
    phi[static_cast<std::size_t>(v)] = -static_cast<double>(d < 0 ? far + 1 : d);
  }
  return phi;
}

std::vector<double> random_potential(std::mt19937_64& rng, int nv) {
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<double> phi(static_cast<std::size_t>(nv));
  for (auto& v : phi) v = g(rng);
  return phi;
}

void plan_gradient(std::mt19937_64& rng, Plan& p) {
  const auto tree = random_tree(rng, p.na, std::max(2, p.na / 3));
  p.prox.insert(tree.begin(), tree.end());
  sensors_on_edges(rng, p, tree);
  pendant_externals(rng, p);
  p.phi = bfs_potential(p, 0);
}

void plan_curl(std::mt19937_64& rng, Plan& p) {
  const auto tree = random_tree(rng, p.na, 1);
  p.prox.insert(tree.begin(), tree.end());
  sensors_on_edges(rng, p, tree);
  pendant_externals(rng, p);
  p.phi = random_potential(rng, static_cast<int>(p.vertices.size()));
  p.grad_scale = 0.1;
  p.curl_scale = 1.0;
}

void plan_harmonic(std::mt19937_64& rng, Plan& p, int rings) {
  const int len = std::max(4, std::min(8, p.na / rings));
  for (int r = 0; r < rings; ++r) {
    std::vector<int> ring;
    for (int k = 0; k < len; ++k) ring.push_back(r * len + k);
    for (int k = 0; k < len; ++k) p.prox.insert(ordered(ring[static_cast<std::size_t>(k)], ring[static_cast<std::size_t>((k + 1) % len)]));
    if (r > 0) p.prox.insert({(r - 1) * len, r * len});
    p.rings.push_back(std::move(ring));
  }
  for (int j = rings * len; j < p.na; ++j) p.prox.insert({pick(rng, 0, j - 1), j});
  for (int s = 0; s < p.ns; ++s) p.dwell.insert({pick(rng, 0, p.na - 1), p.sensor(s)});
  pendant_externals(rng, p);
  p.phi = random_potential(rng, static_cast<int>(p.vertices.size()));
  p.grad_scale = 0.2;
  p.ring_scale = 1.0;
}

void plan_mixed(std::mt19937_64& rng, Plan& p) {
  const int partners = std::min(4, p.na - 1);
  std::set<Pair> contacts;
  for (int i = 0; i < p.na; ++i) {
    for (int c = 0; c < partners; ++c) {
      int j = pick(rng, 0, p.na - 2);
      if (j >= i) ++j;
      contacts.insert(ordered(i, j));
    }
  }
  std::vector<char> matched(static_cast<std::size_t>(p.na), 0);
  std::bernoulli_distribution coin(0.1);
  for (const auto& e : contacts) {
    if (!matched[static_cast<std::size_t>(e.first)] && !matched[static_cast<std::size_t>(e.second)] && coin(rng)) {
      matched[static_cast<std::size_t>(e.first)] = matched[static_cast<std::size_t>(e.second)] = 1;
      p.sync.insert(e);
    } else {
      p.prox.insert(e);
    }
  }
  std::vector<std::vector<int>> nbrs(static_cast<std::size_t>(p.na));
  for (const auto& [a, b] : contacts) {
    nbrs[static_cast<std::size_t>(a)].push_back(b);
    nbrs[static_cast<std::size_t>(b)].push_back(a);
  }
  for (int s = 0; s < p.ns; ++s) {
    const int a = pick(rng, 0, p.na - 1);
    p.dwell.insert({a, p.sensor(s)});
    auto ego = nbrs[static_cast<std::size_t>(a)];
    std::shuffle(ego.begin(), ego.end(), rng);
    for (std::size_t k = 0; k < std::min<std::size_t>(2, ego.size()); ++k) p.dwell.insert({ego[k], p.sensor(s)});
  }
  for (int x = 0; x < p.nx; ++x) {
    const int a = pick(rng, 0, p.na - 1);
    p.link.insert({a, p.external(x)});
    if (!nbrs[static_cast<std::size_t>(a)].empty()) {
      const auto& n = nbrs[static_cast<std::size_t>(a)];
      p.link.insert({n[static_cast<std::size_t>(pick(rng, 0, static_cast<int>(n.size()) - 1))], p.external(x)});
    }
  }
  p.phi = random_potential(rng, static_cast<int>(p.vertices.size()));
  p.curl_scale = 1.0;
  p.random_part = true;
}

SimplicialComplex planted_complex(const Plan& p) {
  std::vector<Edge> edges;
  for (const auto* set : {&p.prox, &p.sync, &p.dwell, &p.link}) {
    for (const auto& [a, b] : *set) edges.push_back({std::min(a, b), std::max(a, b)});
  }
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  std::vector<std::vector<int>> upper(p.vertices.size());
  for (const auto& e : edges) upper[static_cast<std::size_t>(e[0])].push_back(e[1]);
  std::vector<Triangle> triangles;
  for (const auto& [a, b] : edges) {
    const auto& na = upper[static_cast<std::size_t>(a)];
    const auto& nb = upper[static_cast<std::size_t>(b)];
    std::vector<int> common;
    std::set_intersection(na.begin(), na.end(), nb.begin(), nb.end(), std::back_inserter(common));
    for (int c : common) {
      const auto ka = p.vertices[static_cast<std::size_t>(a)].kind;
      const auto kb = p.vertices[static_cast<std::size_t>(b)].kind;
      const auto kc = p.vertices[static_cast<std::size_t>(c)].kind;
      if (!(ka == kb && kb == kc)) triangles.push_back({a, b, c});
    }
  }
  return SimplicialComplex::from_simplices(p.vertices, std::move(edges), std::move(triangles));
}

Eigen::VectorXd scalar_flow(std::mt19937_64& rng, const Plan& p, const SimplicialComplex& k,
                            std::vector<std::vector<int>>& cycles) {
  const auto ne = static_cast<Eigen::Index>(k.num_edges());
  Eigen::VectorXd f = Eigen::VectorXd::Zero(ne);
  for (Eigen::Index e = 0; e < ne; ++e) {
    const auto& [a, b] = k.edges()[static_cast<std::size_t>(e)];
    f(e) = p.grad_scale * (p.phi[static_cast<std::size_t>(a)] - p.phi[static_cast<std::size_t>(b)]);
  }
  if (p.curl_scale > 0 && k.num_triangles() > 0) {
    std::uniform_real_distribution<double> u(1.0, 2.0);
    std::bernoulli_distribution sign(0.5);
    Eigen::VectorXd psi(static_cast<Eigen::Index>(k.num_triangles()));
    for (Eigen::Index t = 0; t < psi.size(); ++t) psi(t) = (sign(rng) ? 1.0 : -1.0) * u(rng);
    f += p.curl_scale * (k.b2_real() * psi);
    for (const auto& tri : k.triangles()) {
      cycles.push_back({static_cast<int>(*k.edge_index(tri[0], tri[1])), static_cast<int>(*k.edge_index(tri[1], tri[2])),
                        static_cast<int>(*k.edge_index(tri[0], tri[2]))});
    }
  }
  for (const auto& ring : p.rings) {
    std::vector<int> ids;
    for (std::size_t s = 0; s < ring.size(); ++s) {
      const int a = ring[s];
      const int b = ring[(s + 1) % ring.size()];
      const auto e = static_cast<Eigen::Index>(*k.edge_index(a, b));
      f(e) += p.ring_scale * (a < b ? 1.0 : -1.0);
      ids.push_back(static_cast<int>(e));
    }
    cycles.push_back(std::move(ids));
  }
  if (p.random_part) {
    std::normal_distribution<double> g(0.0, 0.5);
    for (Eigen::Index e = 0; e < ne; ++e) f(e) += g(rng);
  }
  return f;
}

void local_extrema(const Plan& p, const SimplicialComplex& k, GroundTruth& t) {
  const auto adj = k.adjacency();
  for (std::size_t v = 0; v < adj.size(); ++v) {
    if (adj[v].empty()) continue;
    bool is_max = true;
    bool is_min = true;
    for (int w : adj[v]) {
      is_max = is_max && p.phi[v] > p.phi[static_cast<std::size_t>(w)];
      is_min = is_min && p.phi[v] < p.phi[static_cast<std::size_t>(w)];
    }
    if (is_max) t.sources.push_back(static_cast<int>(v));
    if (is_min) t.sinks.push_back(static_cast<int>(v));
  }
}

void plant_features(std::mt19937_64& rng, const Plan& p, double noise, GroundTruth& t) {
  const BundleConfig bundle = BundleConfig::standard();
  const int d = bundle.input_dim();
  const auto nv = static_cast<Eigen::Index>(p.vertices.size());
  std::normal_distribution<double> g(0.0, 1.0);
  // every modality block observes its own slice of the latent state
  t.label_weights = Eigen::VectorXd(d);
  for (Eigen::Index i = 0; i < d; ++i) t.label_weights(i) = g(rng);
  t.label_weights.normalize();
  t.features = Eigen::MatrixXd::Zero(nv, d);
  t.latent = Eigen::MatrixXd::Zero(nv, d);
  t.labels.assign(static_cast<std::size_t>(nv), -1);
  for (Eigen::Index v = 0; v < nv; ++v) {
    if (p.vertices[static_cast<std::size_t>(v)].kind == NodeKind::Agent) {
      Eigen::VectorXd z(d);
      do {
        for (Eigen::Index i = 0; i < d; ++i) z(i) = g(rng);
      } while (std::abs(t.label_weights.dot(z)) < 0.5);
      t.latent.row(v) = z.transpose();
      t.labels[static_cast<std::size_t>(v)] = t.label_weights.dot(z) > 0 ? 1 : 0;
      for (Eigen::Index i = 0; i < d; ++i) t.features(v, i) = z(i) + noise * g(rng);
    } else {
      for (Eigen::Index i = 0; i < d; ++i) t.features(v, i) = g(rng);
    }
  }
}

struct Timed {
  double t;
  Record rec;
};

EventStream emit(std::mt19937_64& rng, const Plan& p, double noise) {
  EventStream s;
  for (const auto& v : p.vertices) s.records.push_back(NodeRecord{v.id, v.kind});
  const auto id = [&](int v) { return p.vertices[static_cast<std::size_t>(v)].id; };
  for (const auto& [a, x] : p.link) s.records.push_back(LinkRecord{id(a), id(x)});

  const double span = kSynthWindow - 10.0;
  std::uniform_real_distribution<double> when(kSynthStart, kSynthStart + span);
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<Timed> timed;

  for (const auto& [a, b] : p.prox) {
    for (int r = 0; r < 5; ++r) timed.push_back({when(rng), ProxRecord{0, id(a), id(b), 40.0 + 10.0 * noise * g(rng)}});
  }
  const int decoys = std::min(p.na, p.na * (p.na - 1) / 2 - static_cast<int>(p.prox.size() + p.sync.size()));
  std::set<Pair> used;
  for (int d = 0, tries = 0; d < decoys && tries < 20 * p.na; ++tries) {
    const Pair e = ordered(pick(rng, 0, p.na - 1), pick(rng, 0, p.na - 1));
    if (e.first == e.second || p.prox.count(e) || p.sync.count(e) || !used.insert(e).second) continue;
    for (int r = 0; r < 3; ++r) timed.push_back({when(rng), ProxRecord{0, id(e.first), id(e.second), 10.0 + 10.0 * noise * g(rng)}});
    ++d;
  }

  // HRV: distinct baselines keep unsynchronised DTW distances near 64 x 3.
  std::vector<int> leader(static_cast<std::size_t>(p.na));
  for (int a = 0; a < p.na; ++a) leader[static_cast<std::size_t>(a)] = a;
  for (const auto& [a, b] : p.sync) leader[static_cast<std::size_t>(b)] = a;
  std::vector<std::vector<double>> series(static_cast<std::size_t>(p.na));
  std::uniform_real_distribution<double> phase(0.0, 2.0 * M_PI);
  for (int a = 0; a < p.na; ++a) {
    const double ph = phase(rng);
    auto& sr = series[static_cast<std::size_t>(a)];
    for (int k = 0; k < 8; ++k) sr.push_back(50.0 + 3.0 * a + std::sin(2.0 * M_PI * k / 8.0 + ph) + noise * g(rng));
  }
  for (int a = 0; a < p.na; ++a) {
    const auto& sr = series[static_cast<std::size_t>(leader[static_cast<std::size_t>(a)])];
    for (int k = 0; k < 8; ++k) timed.push_back({5.0 + 36.0 * k, PhysRecord{0, id(a), std::string(kSyncChannel), sr[static_cast<std::size_t>(k)]}});
  }

  for (const auto& [a, sensor] : p.dwell) {
    for (int r = 0; r < 2; ++r) timed.push_back({when(rng), DwellRecord{0, id(a), id(sensor), 8.0}});
  }
  std::set<Pair> decoy_dwell;
  for (int d = 0, tries = 0; d < p.ns && tries < 20 * p.ns; ++tries) {
    const Pair e{pick(rng, 0, p.na - 1), p.sensor(pick(rng, 0, p.ns - 1))};
    if (p.dwell.count(e) || !decoy_dwell.insert(e).second) continue;
    timed.push_back({when(rng), DwellRecord{0, id(e.first), id(e.second), 3.0}});
    ++d;
  }

  std::stable_sort(timed.begin(), timed.end(), [](const Timed& x, const Timed& y) { return x.t < y.t; });
  for (auto& tr : timed) {
    std::visit(
        [&](auto& r) {
          if constexpr (requires { r.t; }) r.t = tr.t;
        },
        tr.rec);
    s.records.push_back(std::move(tr.rec));
  }
  return s;
}

}  // namespace

Cohort generate(const CohortConfig& cfg) {
  cfg.validate();
  std::mt19937_64 rng(cfg.seed);
  Plan p;
  p.na = cfg.n_agents;
  p.ns = cfg.n_sensors;
  p.nx = cfg.n_external;
  for (int a = 0; a < p.na; ++a) p.vertices.push_back({fmt::format("a{:03d}", a), NodeKind::Agent});
  for (int s = 0; s < p.ns; ++s) p.vertices.push_back({fmt::format("s{:03d}", s), NodeKind::EnvSensor});
  for (int x = 0; x < p.nx; ++x) p.vertices.push_back({fmt::format("x{:03d}", x), NodeKind::External});

  switch (cfg.scenario) {
    case Scenario::GradientDominant: plan_gradient(rng, p); break;
    case Scenario::CurlDominant: plan_curl(rng, p); break;
    case Scenario::HarmonicDominant: plan_harmonic(rng, p, cfg.rings); break;
    case Scenario::Mixed: plan_mixed(rng, p); break;
  }

  Cohort c;
  GroundTruth& t = c.truth;
  t.complex = planted_complex(p);
  t.beta1 = betti_numbers(t.complex).beta1;
  local_extrema(p, t.complex, t);

  const Eigen::VectorXd f = scalar_flow(rng, p, t.complex, t.cycles);
  std::uniform_real_distribution<double> scale(0.5, 1.5);
  t.flow = Cochain(1, f.size(), cfg.channels);
  for (int ch = 0; ch < cfg.channels; ++ch) t.flow.values.col(ch) = scale(rng) * f;

  plant_features(rng, p, cfg.noise, t);
  c.stream = emit(rng, p, cfg.noise);
  logger()->debug("generated {} cohort: {} vertices, {} edges, {} triangles, beta1 {}", to_string(cfg.scenario),
                  t.complex.num_vertices(), t.complex.num_edges(), t.complex.num_triangles(), t.beta1);
  return c;
}

Eigen::MatrixXd edge_features(const EventStream& events, const SimplicialComplex& k, double t0,
                              const ThresholdConfig& cfg) {
  std::map<std::string, int> vid;
  for (std::size_t v = 0; v < k.num_vertices(); ++v) vid[k.vertices()[v].id] = static_cast<int>(v);
  const auto lookup = [&](const std::string& id) {
    auto it = vid.find(id);
    return it == vid.end() ? -1 : it->second;
  };
  const auto in_window = [&](double t) { return t >= t0 && t < t0 + cfg.window; };
  std::map<Pair, std::vector<double>> rssi;
  std::map<Pair, double> dwell;
  std::set<Pair> links;
  for (const Record& rec : events.records) {
    if (const auto* p = std::get_if<ProxRecord>(&rec); p && in_window(p->t)) {
      const int a = lookup(p->agent_i), b = lookup(p->agent_j);
      if (a >= 0 && b >= 0) rssi[ordered(a, b)].push_back(p->rssi);
    } else if (const auto* p = std::get_if<DwellRecord>(&rec); p && in_window(p->t)) {
      const int a = lookup(p->agent), b = lookup(p->sensor);
      if (a >= 0 && b >= 0) dwell[ordered(a, b)] += p->duration;
    } else if (const auto* p = std::get_if<LinkRecord>(&rec)) {
      const int a = lookup(p->agent), b = lookup(p->node);
      if (a >= 0 && b >= 0) links.insert(ordered(a, b));
    }
  }
  Eigen::MatrixXd e = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(k.num_edges()), 3);
  for (std::size_t i = 0; i < k.num_edges(); ++i) {
    const Pair key{k.edges()[i][0], k.edges()[i][1]};
    const auto r = static_cast<Eigen::Index>(i);
    if (auto it = rssi.find(key); it != rssi.end()) {
      auto v = it->second;
      std::sort(v.begin(), v.end());
      const std::size_t n = v.size();
      e(r, 0) = (n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2])) / 100.0;
    }
    if (auto it = dwell.find(key); it != dwell.end()) e(r, 1) = it->second / 60.0;
    if (links.count(key)) e(r, 2) = 1.0;
  }
  return e;
}

Sample make_sample(const Cohort& cohort, const ThresholdConfig& cfg) {
  auto k = std::make_shared<const SimplicialComplex>(build_complex(cohort.stream, kSynthStart, cfg));
  std::map<std::string, Eigen::Index> row;
  const auto& tv = cohort.truth.complex.vertices();
  for (std::size_t v = 0; v < tv.size(); ++v) row[tv[v].id] = static_cast<Eigen::Index>(v);
  Sample s;
  s.features.resize(static_cast<Eigen::Index>(k->num_vertices()), cohort.truth.features.cols());
  s.labels.resize(k->num_vertices());
  for (std::size_t v = 0; v < k->num_vertices(); ++v) {
    auto it = row.find(k->vertices()[v].id);
    if (it == row.end()) throw ValidationError("vertex " + k->vertices()[v].id + " missing from ground truth");
    s.features.row(static_cast<Eigen::Index>(v)) = cohort.truth.features.row(it->second);
    s.labels[v] = cohort.truth.labels[static_cast<std::size_t>(it->second)];
  }
  s.edge_features = edge_features(cohort.stream, *k, kSynthStart, cfg);
  s.complex = std::move(k);
  return s;
}

namespace {

EventStream agents_only(int n, const std::vector<std::pair<Pair, double>>& pairs, std::mt19937_64& rng) {
  EventStream s;
  for (int a = 0; a < n; ++a) s.records.push_back(NodeRecord{fmt::format("a{:03d}", a), NodeKind::Agent});
  std::uniform_real_distribution<double> when(kSynthStart, kSynthStart + kSynthWindow - 10.0);
  std::vector<Timed> timed;
  for (const auto& [e, rssi] : pairs) {
    for (int r = 0; r < 3; ++r) {
      timed.push_back({when(rng), ProxRecord{0, fmt::format("a{:03d}", e.first), fmt::format("a{:03d}", e.second), rssi}});
    }
  }
  std::stable_sort(timed.begin(), timed.end(), [](const Timed& x, const Timed& y) { return x.t < y.t; });
  for (auto& tr : timed) {
    std::get<ProxRecord>(tr.rec).t = tr.t;
    s.records.push_back(std::move(tr.rec));
  }
  return s;
}

}  // namespace

EventStream two_cluster_stream(int per_cluster, std::uint64_t seed) {
  if (per_cluster < 2) throw ValidationError("clusters need at least 2 agents");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> strong(40.0, 60.0);
  std::uniform_real_distribution<double> weak(5.0, 15.0);
  std::bernoulli_distribution coin(0.3);
  std::vector<std::pair<Pair, double>> pairs;
  const int n = 2 * per_cluster;
  for (int a = 0; a < n; ++a) {
    for (int b = a + 1; b < n; ++b) {
      const bool same = (a < per_cluster) == (b < per_cluster);
      if (same) {
        pairs.push_back({{a, b}, strong(rng)});
      } else if (coin(rng)) {
        pairs.push_back({{a, b}, weak(rng)});
      }
    }
  }
  return agents_only(n, pairs, rng);
}

EventStream clique_stream(int n, std::uint64_t seed) {
  if (n < 2) throw ValidationError("a clique needs at least 2 agents");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> strong(30.0, 50.0);
  std::vector<std::pair<Pair, double>> pairs;
  for (int a = 0; a < n; ++a) {
    for (int b = a + 1; b < n; ++b) pairs.push_back({{a, b}, strong(rng)});
  }
  return agents_only(n, pairs, rng);
}

}  // namespace gvf
