#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "gvf/complex.hpp"
#include "gvf/dec.hpp"
#include "gvf/errors.hpp"
#include "gvf/hhd.hpp"
#include "gvf/model.hpp"
#include "gvf/monitor.hpp"
#include "gvf/synth.hpp"
#include "gvf/training.hpp"

namespace gvf::io {

using json = nlohmann::json;

inline constexpr int kCheckpointVersion = 1;
/// Spectra longer than this are truncated in reports.
inline constexpr std::size_t kSpectrumReportLimit = 128;

// Event streams: one JSON object per line, `type` in node/prox/phys/dwell/link.
json record_to_json(const Record& r);
Record record_from_json(const json& j, std::size_t index);
void write_stream(std::ostream& out, const EventStream& s);
EventStream read_stream(std::istream& in);

json matrix_to_json(const Eigen::MatrixXd& m);
Eigen::MatrixXd matrix_from_json(const json& j, Eigen::Index cols_if_empty = 0);
json vector_to_json(const Eigen::VectorXd& v);
Eigen::VectorXd vector_from_json(const json& j);

json complex_to_json(const SimplicialComplex& k);
SimplicialComplex complex_from_json(const json& j);

json cochain_to_json(const Cochain& c);
Cochain cochain_from_json(const json& j);

json topology_to_json(const TopologySummary& t);
json thresholds_to_json(const ThresholdConfig& c);
ThresholdConfig thresholds_from_json(const json& j, ThresholdConfig base = {});
json sweep_to_json(const std::vector<SweepPoint>& sweep, const PlateauSelection& sel);

json cohort_config_to_json(const CohortConfig& c);
CohortConfig cohort_config_from_json(const json& j, CohortConfig base = {});
json truth_to_json(const GroundTruth& t);
GroundTruth truth_from_json(const json& j);

json decomposition_to_json(const HodgeDecomposition& d, const DecompositionCheck& check, bool with_values);
json score_report_to_json(const ScoreReport& r);
json spectrum_to_json(const SpectrumSummary& s);

json checkpoint_to_json(const GvfModel& m);
GvfModel checkpoint_from_json(const json& j);

json train_config_to_json(const TrainConfig& c);
TrainConfig train_config_from_json(const json& j, TrainConfig base = {});
ModelShape model_shape_from_json(const json& j, ModelShape base = {});

/// j[key] if present, else `fallback`; type mismatches become ValidationError.
template <class T>
T guarded_value(const json& j, const char* key, T fallback) {
  if (!j.is_object() || !j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ValidationError(std::string(key) + ": " + e.what());
  }
}

void write_history_csv(std::ostream& out, const std::vector<EpochRecord>& history);

/// Reads a JSON file; ValidationError on missing file or parse failure.
json read_json_file(const std::filesystem::path& p);
/// Two-space indented dump plus trailing newline.
void write_json_file(const std::filesystem::path& p, const json& j);
std::string dump(const json& j);

}  // namespace gvf::io
