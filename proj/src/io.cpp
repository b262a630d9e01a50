#include "gvf/io.hpp"

#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include <fmt/format.h>

#include "gvf/errors.hpp"

namespace gvf::io {

namespace {

template <class F>
auto guarded(const char* what, F&& f) {
  try {
    return f();
  } catch (const json::exception& e) {
    throw ValidationError(std::string(what) + ": " + e.what());
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// Streams

json record_to_json(const Record& r) {
  return std::visit(
      [](const auto& x) -> json {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, NodeRecord>) {
          return {{"type", "node"}, {"id", x.id}, {"kind", std::string(to_string(x.kind))}};
        } else if constexpr (std::is_same_v<T, ProxRecord>) {
          return {{"type", "prox"}, {"t", x.t}, {"agent_i", x.agent_i}, {"agent_j", x.agent_j}, {"rssi", x.rssi}};
        } else if constexpr (std::is_same_v<T, PhysRecord>) {
          return {{"type", "phys"}, {"t", x.t}, {"agent", x.agent}, {"channel", x.channel}, {"value", x.value}};
        } else if constexpr (std::is_same_v<T, DwellRecord>) {
          return {{"type", "dwell"}, {"t", x.t}, {"agent", x.agent}, {"sensor", x.sensor}, {"duration", x.duration}};
        } else {
          return {{"type", "link"}, {"agent", x.agent}, {"node", x.node}};
        }
      },
      r);
}

Record record_from_json(const json& j, std::size_t index) {
  try {
    const std::string type = j.at("type").get<std::string>();
    if (type == "node") {
      return NodeRecord{j.at("id").get<std::string>(), node_kind_from_string(j.at("kind").get<std::string>())};
    }
    if (type == "prox") {
      return ProxRecord{j.at("t").get<double>(), j.at("agent_i").get<std::string>(),
                        j.at("agent_j").get<std::string>(), j.at("rssi").get<double>()};
    }
    if (type == "phys") {
      return PhysRecord{j.at("t").get<double>(), j.at("agent").get<std::string>(), j.at("channel").get<std::string>(),
                        j.at("value").get<double>()};
    }
    if (type == "dwell") {
      return DwellRecord{j.at("t").get<double>(), j.at("agent").get<std::string>(), j.at("sensor").get<std::string>(),
                         j.at("duration").get<double>()};
    }
    if (type == "link") return LinkRecord{j.at("agent").get<std::string>(), j.at("node").get<std::string>()};
    throw RecordError(index, "unknown record type '" + type + "'");
  } catch (const json::exception& e) {
    throw RecordError(index, e.what());
  } catch (const RecordError&) {
    throw;
  } catch (const ValidationError& e) {
    throw RecordError(index, e.what());
  }
}

void write_stream(std::ostream& out, const EventStream& s) {
  for (const auto& r : s.records) out << record_to_json(r).dump() << '\n';
}

EventStream read_stream(std::istream& in) {
  EventStream s;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::size_t index = s.records.size();
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw RecordError(index, e.what());
    }
    s.records.push_back(record_from_json(j, index));
  }
  return s;
}

// ---------------------------------------------------------------------------
// Dense arrays

json matrix_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(i, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const json& j, Eigen::Index cols_if_empty) {
  return guarded("matrix", [&] {
    if (!j.is_array()) throw ValidationError("matrix must be an array of rows");
    const auto rows = static_cast<Eigen::Index>(j.size());
    const Eigen::Index cols = rows ? static_cast<Eigen::Index>(j[0].size()) : cols_if_empty;
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
      const json& row = j[static_cast<std::size_t>(i)];
      if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) {
        throw ValidationError("matrix rows must have equal length");
      }
      for (Eigen::Index c = 0; c < cols; ++c) m(i, c) = row[static_cast<std::size_t>(c)].get<double>();
    }
    return m;
  });
}

json vector_to_json(const Eigen::VectorXd& v) { return json(std::vector<double>(v.data(), v.data() + v.size())); }

Eigen::VectorXd vector_from_json(const json& j) {
  return guarded("vector", [&] {
    const auto v = j.get<std::vector<double>>();
    return Eigen::VectorXd(Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size())));
  });
}

// ---------------------------------------------------------------------------
// Complex and cochains

json complex_to_json(const SimplicialComplex& k) {
  json vs = json::array();
  for (const auto& v : k.vertices()) vs.push_back({{"id", v.id}, {"kind", std::string(to_string(v.kind))}});
  return {{"vertices", vs}, {"edges", k.edges()}, {"triangles", k.triangles()}};
}

SimplicialComplex complex_from_json(const json& j) {
  return guarded("complex", [&] {
    std::vector<Vertex> vs;
    for (const auto& v : j.at("vertices")) {
      vs.push_back({v.at("id").get<std::string>(), node_kind_from_string(v.at("kind").get<std::string>())});
    }
    return SimplicialComplex::from_simplices(std::move(vs), j.at("edges").get<std::vector<Edge>>(),
                                             j.at("triangles").get<std::vector<Triangle>>());
  });
}

json cochain_to_json(const Cochain& c) {
  return {{"degree", c.degree}, {"channels", c.channels()}, {"values", matrix_to_json(c.values)}};
}

Cochain cochain_from_json(const json& j) {
  return guarded("cochain", [&] {
    const int degree = j.at("degree").get<int>();
    const auto channels = j.at("channels").get<Eigen::Index>();
    if (degree < 0 || degree > 2) throw ValidationError("cochain degree must be 0, 1 or 2");
    if (channels < 1) throw ValidationError("cochain channels must be >= 1");
    Eigen::MatrixXd values = matrix_from_json(j.at("values"), channels);
    if (values.cols() != channels) throw ValidationError("cochain values do not match the channel count");
    if (!values.allFinite()) throw ValidationError("cochain values must be finite");
    return Cochain(degree, std::move(values));
  });
}

// ---------------------------------------------------------------------------
// Topology and thresholds

json topology_to_json(const TopologySummary& t) {
  return {{"beta0", t.beta0}, {"beta1", t.beta1}, {"d_max", t.d_max}, {"rank_b1", t.rank_b1}, {"rank_b2", t.rank_b2}};
}

json thresholds_to_json(const ThresholdConfig& c) {
  return {{"tau_prox", c.tau_prox}, {"tau_sync", c.tau_sync}, {"tau_dwell", c.tau_dwell}, {"window", c.window}};
}

ThresholdConfig thresholds_from_json(const json& j, ThresholdConfig base) {
  return guarded("thresholds", [&] {
    base.tau_prox = j.value("tau_prox", base.tau_prox);
    base.tau_sync = j.value("tau_sync", base.tau_sync);
    base.tau_dwell = j.value("tau_dwell", base.tau_dwell);
    base.window = j.value("window", base.window);
    base.validate();
    return base;
  });
}

json sweep_to_json(const std::vector<SweepPoint>& sweep, const PlateauSelection& sel) {
  json points = json::array();
  for (const auto& p : sweep) points.push_back({{"config", thresholds_to_json(p.config)}, {"topology", topology_to_json(p.summary)}});
  return {{"points", points},
          {"selection",
           {{"index", sel.index},
            {"config", thresholds_to_json(sel.config)},
            {"plateau_start", sel.plateau_start},
            {"plateau_length", sel.plateau_length},
            {"beta0", sel.beta0},
            {"beta1", sel.beta1},
            {"no_plateau", sel.no_plateau}}}};
}

// ---------------------------------------------------------------------------
// Synthetic cohorts

json cohort_config_to_json(const CohortConfig& c) {
  return {{"n_agents", c.n_agents}, {"n_sensors", c.n_sensors}, {"n_external", c.n_external},
          {"scenario", std::string(to_string(c.scenario))}, {"rings", c.rings}, {"noise", c.noise},
          {"channels", c.channels}, {"seed", c.seed}};
}

CohortConfig cohort_config_from_json(const json& j, CohortConfig base) {
  return guarded("cohort config", [&] {
    base.n_agents = j.value("n_agents", base.n_agents);
    base.n_sensors = j.value("n_sensors", base.n_sensors);
    base.n_external = j.value("n_external", base.n_external);
    if (j.contains("scenario")) base.scenario = scenario_from_string(j.at("scenario").get<std::string>());
    base.rings = j.value("rings", base.rings);
    base.noise = j.value("noise", base.noise);
    base.channels = j.value("channels", base.channels);
    base.seed = j.value("seed", base.seed);
    base.validate();
    return base;
  });
}

json truth_to_json(const GroundTruth& t) {
  return {{"complex", complex_to_json(t.complex)},
          {"beta1", t.beta1},
          {"sources", t.sources},
          {"sinks", t.sinks},
          {"cycles", t.cycles},
          {"labels", t.labels},
          {"features", matrix_to_json(t.features)},
          {"latent", matrix_to_json(t.latent)},
          {"label_weights", vector_to_json(t.label_weights)},
          {"flow", cochain_to_json(t.flow)}};
}

GroundTruth truth_from_json(const json& j) {
  return guarded("ground truth", [&] {
    GroundTruth t;
    t.complex = complex_from_json(j.at("complex"));
    t.beta1 = j.at("beta1").get<std::size_t>();
    t.sources = j.at("sources").get<std::vector<int>>();
    t.sinks = j.at("sinks").get<std::vector<int>>();
    t.cycles = j.at("cycles").get<std::vector<std::vector<int>>>();
    t.labels = j.at("labels").get<std::vector<int>>();
    t.features = matrix_from_json(j.at("features"));
    t.latent = matrix_from_json(j.at("latent"));
    t.label_weights = vector_from_json(j.at("label_weights"));
    t.flow = cochain_from_json(j.at("flow"));
    const auto nv = static_cast<Eigen::Index>(t.complex.num_vertices());
    if (t.features.rows() != nv || static_cast<Eigen::Index>(t.labels.size()) != nv) {
      throw ValidationError("ground truth features and labels must have one row per vertex");
    }
    check_cochain(t.complex, t.flow, 1);
    return t;
  });
}

// ---------------------------------------------------------------------------
// Reports

json decomposition_to_json(const HodgeDecomposition& d, const DecompositionCheck& check, bool with_values) {
  const EnergyFractions e = energy_fractions(d);
  const auto solves = [](const std::vector<SolveDiagnostics>& s) {
    json a = json::array();
    for (const auto& x : s) a.push_back({{"iterations", x.iterations}, {"residual", x.residual}});
    return a;
  };
  json j = {{"energy", {{"gradient", e.gradient}, {"curl", e.curl}, {"harmonic", e.harmonic}}},
            {"solver",
             {{"potential", solves(d.potential_solves)},
              {"stream", solves(d.stream_solves)},
              {"max_iterations", d.max_iterations()}}},
            {"checks",
             {{"reconstruction", check.reconstruction},
              {"orthogonality", check.orthogonality},
              {"harmonic_div", check.harmonic_div},
              {"harmonic_curl", check.harmonic_curl},
              {"harmonic_laplacian", check.harmonic_laplacian}}}};
  if (with_values) {
    j["components"] = {{"potential", cochain_to_json(d.potential)},
                       {"stream", cochain_to_json(d.stream)},
                       {"gradient", cochain_to_json(d.gradient)},
                       {"curl", cochain_to_json(d.curl)},
                       {"harmonic", cochain_to_json(d.harmonic)}};
  }
  return j;
}

json score_report_to_json(const ScoreReport& r) {
  json agents = json::array();
  for (const auto& a : r.agents) {
    agents.push_back({{"id", a.id},
                      {"dps", a.dps},
                      {"cri", a.cri},
                      {"dominant_component", std::string(to_string(a.dominant))},
                      {"intervention", std::string(intervention(a.dominant))}});
  }
  return {{"agents", agents},
          {"energy", {{"gradient", r.energy.gradient}, {"curl", r.energy.curl}, {"harmonic", r.energy.harmonic}}},
          {"dominant_component", std::string(to_string(r.dominant))},
          {"intervention", std::string(intervention(r.dominant))}};
}

json spectrum_to_json(const SpectrumSummary& s) {
  const auto head = [](const Eigen::VectorXd& v) {
    const auto n = std::min<Eigen::Index>(v.size(), static_cast<Eigen::Index>(kSpectrumReportLimit));
    return vector_to_json(v.head(n));
  };
  return {{"delta0", head(s.delta0)},
          {"delta1", head(s.delta1)},
          {"delta0_size", s.delta0.size()},
          {"delta1_size", s.delta1.size()},
          {"truncated", s.delta0.size() > static_cast<Eigen::Index>(kSpectrumReportLimit) ||
                            s.delta1.size() > static_cast<Eigen::Index>(kSpectrumReportLimit)},
          {"d_spec", s.d_spec},
          {"threshold", s.threshold},
          {"decision", std::string(to_string(s.decision))}};
}

// ---------------------------------------------------------------------------
// Checkpoints

json checkpoint_to_json(const GvfModel& m) {
  json mods = json::array();
  for (const auto& x : m.bundle.modalities) {
    mods.push_back({{"name", x.name}, {"input_dim", x.input_dim}, {"fiber_dim", x.fiber_dim}});
  }
  json experts = json::array();
  for (const auto& e : m.experts) {
    experts.push_back({{"modality", e.modality},
                       {"w1", matrix_to_json(e.w1)},
                       {"b1", vector_to_json(e.b1)},
                       {"w2", matrix_to_json(e.w2)},
                       {"b2", vector_to_json(e.b2)},
                       {"masked", e.masked},
                       {"spectral_norm", e.spectral_norm}});
  }
  json axes = json::array();
  for (const auto& u : m.risk_axes) axes.push_back(vector_to_json(u));
  return {{"format_version", kCheckpointVersion},
          {"bundle", mods},
          {"whitening",
           {{"mean", vector_to_json(m.whitening.mean)},
            {"matrix", matrix_to_json(m.whitening.matrix)},
            {"residual_delta", m.whitening.residual_delta},
            {"regularized", m.whitening.regularized}}},
          {"experts", experts},
          {"gating",
           {{"w1", matrix_to_json(m.gating.w1)},
            {"b1", vector_to_json(m.gating.b1)},
            {"w2", matrix_to_json(m.gating.w2)},
            {"b2", vector_to_json(m.gating.b2)}}},
          {"flow",
           {{"w1", matrix_to_json(m.flow.w1)},
            {"b1", vector_to_json(m.flow.b1)},
            {"w2", matrix_to_json(m.flow.w2)},
            {"b2", vector_to_json(m.flow.b2)},
            {"edge_dim", m.flow.edge_dim},
            {"linear", m.flow.linear}}},
          {"readout", {{"w", matrix_to_json(m.readout.w)}, {"b", vector_to_json(m.readout.b)}}},
          {"risk_axes", axes}};
}

GvfModel checkpoint_from_json(const json& j) {
  return guarded("checkpoint", [&] {
    if (j.at("format_version").get<int>() != kCheckpointVersion) {
      throw ValidationError("unsupported checkpoint format_version");
    }
    GvfModel m;
    for (const auto& x : j.at("bundle")) {
      m.bundle.modalities.push_back(
          {x.at("name").get<std::string>(), x.at("input_dim").get<int>(), x.at("fiber_dim").get<int>()});
    }
    m.bundle.validate();
    const json& w = j.at("whitening");
    m.whitening.mean = vector_from_json(w.at("mean"));
    m.whitening.matrix = matrix_from_json(w.at("matrix"));
    m.whitening.residual_delta = w.at("residual_delta").get<double>();
    m.whitening.regularized = w.at("regularized").get<bool>();
    for (const auto& e : j.at("experts")) {
      ExpertParams p;
      p.modality = e.at("modality").get<int>();
      p.w1 = matrix_from_json(e.at("w1"));
      p.b1 = vector_from_json(e.at("b1"));
      p.w2 = matrix_from_json(e.at("w2"));
      p.b2 = vector_from_json(e.at("b2"));
      p.masked = e.at("masked").get<bool>();
      p.spectral_norm = e.at("spectral_norm").get<bool>();
      m.experts.push_back(std::move(p));
    }
    const json& g = j.at("gating");
    m.gating = {matrix_from_json(g.at("w1")), vector_from_json(g.at("b1")), matrix_from_json(g.at("w2")),
                vector_from_json(g.at("b2"))};
    const json& f = j.at("flow");
    m.flow.w1 = matrix_from_json(f.at("w1"));
    m.flow.b1 = vector_from_json(f.at("b1"));
    m.flow.w2 = matrix_from_json(f.at("w2"));
    m.flow.b2 = vector_from_json(f.at("b2"));
    m.flow.edge_dim = f.at("edge_dim").get<int>();
    m.flow.linear = f.at("linear").get<bool>();
    m.readout = {matrix_from_json(j.at("readout").at("w")), vector_from_json(j.at("readout").at("b"))};
    for (const auto& u : j.at("risk_axes")) m.risk_axes.push_back(vector_from_json(u));
    if (static_cast<int>(m.experts.size()) != m.bundle.num_modalities() ||
        static_cast<int>(m.risk_axes.size()) != m.bundle.num_modalities()) {
      throw ValidationError("checkpoint needs one expert and one risk axis per modality");
    }
    return m;
  });
}

json train_config_to_json(const TrainConfig& c) {
  return {{"lambda1", c.loss.lambda1}, {"lambda2", c.loss.lambda2}, {"eps", c.loss.eps},
          {"num_classes", c.loss.num_classes}, {"p_drop", c.loss.p_drop}, {"step", c.step},
          {"epochs", c.epochs}, {"seed", c.seed}};
}

TrainConfig train_config_from_json(const json& j, TrainConfig base) {
  return guarded("training config", [&] {
    base.loss.lambda1 = j.value("lambda1", base.loss.lambda1);
    base.loss.lambda2 = j.value("lambda2", base.loss.lambda2);
    base.loss.eps = j.value("eps", base.loss.eps);
    base.loss.num_classes = j.value("num_classes", base.loss.num_classes);
    base.loss.p_drop = j.value("p_drop", base.loss.p_drop);
    base.step = j.value("step", base.step);
    base.epochs = j.value("epochs", base.epochs);
    base.seed = j.value("seed", base.seed);
    base.validate();
    return base;
  });
}

ModelShape model_shape_from_json(const json& j, ModelShape base) {
  return guarded("model shape", [&] {
    base.hidden = j.value("hidden", base.hidden);
    base.gate_hidden = j.value("gate_hidden", base.gate_hidden);
    base.flow_hidden = j.value("flow_hidden", base.flow_hidden);
    base.edge_dim = j.value("edge_dim", base.edge_dim);
    base.num_classes = j.value("num_classes", base.num_classes);
    base.spectral_norm = j.value("spectral_norm", base.spectral_norm);
    return base;
  });
}

void write_history_csv(std::ostream& out, const std::vector<EpochRecord>& history) {
  out << "epoch,loss,cls,geo,orth,rho,gate_entropy\n";
  for (const auto& r : history) {
    out << fmt::format("{},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g}\n", r.epoch, r.loss, r.cls, r.geo, r.orth,
                       r.rho, r.gate_entropy);
  }
}

// ---------------------------------------------------------------------------
// Files

json read_json_file(const std::filesystem::path& p) {
  std::ifstream in(p);
  if (!in) throw ValidationError("cannot open " + p.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ValidationError(p.string() + ": " + e.what());
  }
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

void write_json_file(const std::filesystem::path& p, const json& j) {
  std::ofstream out(p);
  if (!out) throw ValidationError("cannot write " + p.string());
  out << dump(j);
}

}  // namespace gvf::io
