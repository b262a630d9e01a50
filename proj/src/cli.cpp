#include "gvf/cli.hpp"

#include <array>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <fmt/chrono.h>
#include <fmt/format.h>

#include "gvf/complex.hpp"
#include "gvf/errors.hpp"
#include "gvf/hhd.hpp"
#include "gvf/io.hpp"
#include "gvf/log.hpp"
#include "gvf/model.hpp"
#include "gvf/monitor.hpp"
#include "gvf/synth.hpp"
#include "gvf/training.hpp"

namespace gvf {

namespace fs = std::filesystem;
using io::json;

namespace {

constexpr std::array<std::string_view, 7> kCommands = {"simulate", "build-complex", "sweep-thresholds", "decompose",
                                                      "train",    "scores",        "shift-detect"};

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out = ".";
  std::string format = "json";
};

struct Run {
  std::string command;
  Common common;
  json config = json::object();
  std::map<std::string, std::string> inputs;
  std::vector<std::string> outputs;
  std::uint64_t seed = 1;

  fs::path out_dir() const { return fs::path(common.out); }

  void write_json(const std::string& name, const json& j) {
    io::write_json_file(out_dir() / name, j);
    outputs.push_back(name);
  }

  std::ofstream open(const std::string& name) {
    std::ofstream f(out_dir() / name);
    if (!f) throw ValidationError("cannot write " + (out_dir() / name).string());
    outputs.push_back(name);
    return f;
  }

  const json& section(const char* key) const {
    static const json empty = json::object();
    return config.contains(key) ? config.at(key) : empty;
  }
};

EventStream load_stream(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path);
  return io::read_stream(in);
}

double config_t0(const Run& r) { return io::guarded_value(r.config, "t0", 0.0); }

void cmd_simulate(Run& r) {
  CohortConfig cfg = io::cohort_config_from_json(r.section("cohort"));
  if (r.common.seed) cfg.seed = *r.common.seed;
  r.seed = cfg.seed;
  const Cohort c = generate(cfg);
  {
    auto f = r.open("stream.jsonl");
    io::write_stream(f, c.stream);
  }
  r.write_json("truth.json", io::truth_to_json(c.truth));
  r.write_json("flow.json", io::cochain_to_json(c.truth.flow));
  r.write_json("cohort.json", io::cohort_config_to_json(cfg));
}

void cmd_build_complex(Run& r, const std::string& stream) {
  r.inputs["stream"] = stream;
  const EventStream s = load_stream(stream);
  const ThresholdConfig cfg = io::thresholds_from_json(r.section("thresholds"));
  const SimplicialComplex k = build_complex(s, config_t0(r), cfg);
  r.write_json("complex.json", io::complex_to_json(k));
  r.write_json("topology.json", io::topology_to_json(betti_numbers(k)));
}

void cmd_sweep(Run& r, const std::string& stream) {
  r.inputs["stream"] = stream;
  const EventStream s = load_stream(stream);
  const ThresholdConfig base = io::thresholds_from_json(r.section("thresholds"));
  const json& sw = r.section("sweep");
  const std::string param = io::guarded_value(sw, "parameter", std::string("tau_prox"));
  std::vector<double> values;
  if (sw.contains("values")) {
    values = io::guarded_value(sw, "values", std::vector<double>{});
  } else {
    for (int v = 5; v <= 70; v += 5) values.push_back(v);
  }
  if (values.empty()) throw ValidationError("sweep grid is empty");
  if (!std::is_sorted(values.begin(), values.end())) throw ValidationError("sweep values must be sorted");
  std::vector<ThresholdConfig> grid;
  for (double v : values) {
    ThresholdConfig c = base;
    if (param == "tau_prox") {
      c.tau_prox = v;
    } else if (param == "tau_sync") {
      c.tau_sync = v;
    } else if (param == "tau_dwell") {
      c.tau_dwell = v;
    } else if (param == "window") {
      c.window = v;
    } else {
      throw ValidationError("unknown sweep parameter '" + param + "'");
    }
    c.validate();
    grid.push_back(c);
  }
  const auto sweep = sweep_thresholds(s, config_t0(r), grid);
  const PlateauSelection sel = select_plateau(sweep);
  if (sel.no_plateau) logger()->warn("sweep: no plateau, returning the first grid point");
  json j = io::sweep_to_json(sweep, sel);
  j["parameter"] = param;
  r.write_json("sweep.json", j);
}

SolverConfig solver_config(const Run& r) {
  const json& s = r.section("solver");
  SolverConfig cfg;
  cfg.tol = io::guarded_value(s, "tol", cfg.tol);
  cfg.max_iter = io::guarded_value(s, "max_iter", cfg.max_iter);
  cfg.validate();
  return cfg;
}

void cmd_decompose(Run& r, const std::string& complex, const std::string& flow) {
  r.inputs["complex"] = complex;
  r.inputs["flow"] = flow;
  const SimplicialComplex k = io::complex_from_json(io::read_json_file(complex));
  const Cochain f = io::cochain_from_json(io::read_json_file(flow));
  const HodgeDecomposition d = decompose(k, f, solver_config(r));
  const DecompositionCheck check = check_decomposition(k, f, d);
  const bool omit = io::guarded_value(r.config, "omit_values", false);
  r.write_json("decomposition.json", io::decomposition_to_json(d, check, !omit));
}

void cmd_train(Run& r, const std::string& stream, const std::string& truth) {
  r.inputs["stream"] = stream;
  r.inputs["truth"] = truth;
  Cohort c{load_stream(stream), io::truth_from_json(io::read_json_file(truth))};
  TrainConfig cfg = io::train_config_from_json(r.section("training"));
  if (r.common.seed) cfg.seed = *r.common.seed;
  r.seed = cfg.seed;
  const ModelShape shape = io::model_shape_from_json(r.section("model"));
  const ThresholdConfig th = io::thresholds_from_json(r.section("thresholds"));
  const Sample sample = make_sample(c, th);
  const int fiber = static_cast<int>(c.truth.flow.channels()) / 4;
  if (fiber < 1 || c.truth.flow.channels() % 4 != 0) {
    throw ValidationError("ground-truth flow channels must split evenly over four modalities");
  }
  const BundleConfig bundle = BundleConfig::standard(static_cast<int>(sample.features.cols()) / 4, fiber);
  ModelShape s = shape;
  s.edge_dim = static_cast<int>(sample.edge_features.cols());
  r.write_json("train_config.json", io::train_config_to_json(cfg));
  try {
    TrainResult res = train(init_model(bundle, s, cfg.seed), {sample}, cfg);
    {
      auto f = r.open("history.csv");
      io::write_history_csv(f, res.history);
    }
    r.write_json("checkpoint.json", io::checkpoint_to_json(res.model));
    r.write_json("train_report.json", {{"epochs", res.history.size()},
                                       {"final_loss", res.history.back().loss},
                                       {"final_accuracy", res.history.back().accuracy},
                                       {"whitening_residual_delta", res.model.whitening.residual_delta}});
  } catch (const TrainingDiverged& e) {
    auto f = r.open("history.csv");
    io::write_history_csv(f, e.history());
    throw;
  }
}

void cmd_scores(Run& r, const std::string& complex, const std::string& flow, const std::string& checkpoint) {
  r.inputs["complex"] = complex;
  r.inputs["flow"] = flow;
  const SimplicialComplex k = io::complex_from_json(io::read_json_file(complex));
  const Cochain f = io::cochain_from_json(io::read_json_file(flow));
  BundleConfig bundle;
  ScoreConfig cfg;
  if (!checkpoint.empty()) {
    r.inputs["checkpoint"] = checkpoint;
    const GvfModel m = io::checkpoint_from_json(io::read_json_file(checkpoint));
    bundle = m.bundle;
    cfg = ScoreConfig::uniform(bundle);
    cfg.axes = m.risk_axes;
  } else {
    const int modalities = io::guarded_value(r.config, "modalities", 4);
    if (modalities < 1 || f.channels() % modalities != 0) {
      throw ValidationError("flow channels must split evenly over the modalities");
    }
    bundle = BundleConfig::standard(2, static_cast<int>(f.channels()) / modalities);
    bundle.modalities.resize(static_cast<std::size_t>(modalities));
    cfg = ScoreConfig::uniform(bundle);
  }
  if (r.config.contains("weights")) cfg.weights = io::guarded_value(r.config, "weights", std::vector<double>{});
  const HodgeDecomposition d = decompose(k, f, solver_config(r));
  r.write_json("scores.json", io::score_report_to_json(score_report(k, f, bundle, cfg, d)));
}

void cmd_shift(Run& r, const std::string& complex, const std::string& previous) {
  r.inputs["complex"] = complex;
  r.inputs["previous"] = previous;
  const SimplicialComplex k = io::complex_from_json(io::read_json_file(complex));
  const SimplicialComplex p = io::complex_from_json(io::read_json_file(previous));
  const double threshold = io::guarded_value(r.config, "threshold", 0.0);
  if (threshold < 0) throw ValidationError("threshold must be >= 0");
  const SpectrumSummary s = spectral_shift(k, p, threshold);
  if (s.delta0.size() > static_cast<Eigen::Index>(io::kSpectrumReportLimit) ||
      s.delta1.size() > static_cast<Eigen::Index>(io::kSpectrumReportLimit)) {
    logger()->info("spectrum report truncated to the first {} eigenvalues", io::kSpectrumReportLimit);
  }
  r.write_json("spectrum.json", io::spectrum_to_json(s));
}

void write_manifest(const Run& r, std::string_view status, int code) {
  const auto now = std::chrono::system_clock::now();
  json m = {{"command", r.command},
            {"config", r.common.config.empty() ? json(nullptr) : json(r.common.config)},
            {"inputs", r.inputs},
            {"outputs", r.outputs},
            {"out", r.common.out},
            {"seed", r.seed},
            {"version", std::string(kVersion)},
            {"status", std::string(status)},
            {"exit_code", code},
            {"wall_clock", fmt::format("{:%Y-%m-%dT%H:%M:%SZ}", fmt::gmtime(std::chrono::system_clock::to_time_t(now)))}};
  io::write_json_file(r.out_dir() / "manifest.json", m);
}

std::string usage() {
  std::string s = "usage: gvf <command> [--config PATH] [--seed N] [--out DIR] [--format json] [inputs]\ncommands:";
  for (auto c : kCommands) s += fmt::format(" {}", c);
  return s + "\n";
}

}  // namespace

int cli_dispatch(int argc, const char* const* argv) {
  if (argc < 2) {
    std::cerr << usage();
    return kExitUsage;
  }
  const std::string_view first = argv[1];
  if (first == "--help" || first == "-h") {
    std::cout << usage();
    return kExitOk;
  }
  if (first == "--version") {
    std::cout << kVersion << "\n";
    return kExitOk;
  }
  if (std::find(kCommands.begin(), kCommands.end(), first) == kCommands.end()) {
    std::cerr << "unknown subcommand '" << first << "'\n" << usage();
    return kExitUsage;
  }

  CLI::App app{"gvf: geometric risk flows on multimodal simplicial complexes", "gvf"};
  Run run;
  run.command = std::string(first);
  Common& common = run.common;
  std::string stream, truth, complex, flow, checkpoint, previous;

  CLI::App* sub = app.add_subcommand(run.command);
  sub->add_option("--config", common.config, "JSON configuration file");
  std::uint64_t seed_value = 0;
  CLI::Option* seed_opt = sub->add_option("--seed", seed_value, "random seed");
  sub->add_option("--out", common.out, "output directory");
  sub->add_option("--format", common.format, "report format")->check(CLI::IsMember({"json"}));
  if (run.command == "build-complex" || run.command == "sweep-thresholds" || run.command == "train") {
    sub->add_option("--stream", stream, "event stream (JSONL)")->required();
  }
  if (run.command == "train") sub->add_option("--truth", truth, "ground-truth JSON")->required();
  if (run.command == "decompose" || run.command == "scores" || run.command == "shift-detect") {
    sub->add_option("--complex", complex, "complex JSON")->required();
  }
  if (run.command == "decompose" || run.command == "scores") {
    sub->add_option("--flow", flow, "1-cochain JSON")->required();
  }
  if (run.command == "scores") sub->add_option("--checkpoint", checkpoint, "model checkpoint for risk axes");
  if (run.command == "shift-detect") sub->add_option("--previous", previous, "previous window's complex JSON")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitValidation;
  }

  if (seed_opt->count() > 0) common.seed = seed_value;

  int code = kExitOk;
  std::string_view status = "ok";
  try {
    fs::create_directories(run.out_dir());
  } catch (const fs::filesystem_error& e) {
    logger()->error("{}", e.what());
    return kExitValidation;
  }
  try {
    if (common.seed) run.seed = *common.seed;
    if (!common.config.empty()) run.config = io::read_json_file(common.config);
    if (!run.config.is_object()) throw ValidationError("configuration must be a JSON object");
    if (run.command == "simulate") {
      cmd_simulate(run);
    } else if (run.command == "build-complex") {
      cmd_build_complex(run, stream);
    } else if (run.command == "sweep-thresholds") {
      cmd_sweep(run, stream);
    } else if (run.command == "decompose") {
      cmd_decompose(run, complex, flow);
    } else if (run.command == "train") {
      cmd_train(run, stream, truth);
    } else if (run.command == "scores") {
      cmd_scores(run, complex, flow, checkpoint);
    } else {
      cmd_shift(run, complex, previous);
    }
  } catch (const NumericalError& e) {
    logger()->error("{}", e.what());
    code = kExitNumerical;
    status = "numerical_failure";
  } catch (const ValidationError& e) {
    logger()->error("{}", e.what());
    code = kExitValidation;
    status = "validation_error";
  } catch (const std::exception& e) {
    logger()->error("{}", e.what());
    code = kExitValidation;
    status = "validation_error";
  }
  try {
    write_manifest(run, status, code);
  } catch (const std::exception& e) {
    logger()->error("manifest: {}", e.what());
    if (code == kExitOk) code = kExitValidation;
  }
  return code;
}

}  // namespace gvf
