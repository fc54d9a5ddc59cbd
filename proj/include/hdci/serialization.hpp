#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "hdci/lb_calculator.hpp"
#include "hdci/simulation.hpp"

namespace hdci {

using json = nlohmann::json;

inline constexpr int kSchemaVersion = 1;

json to_json(const SamplerConfig& cfg);
SamplerConfig sampler_config_from_json(const json& j);

json to_json(const CIConfig& cfg);
CIConfig ci_config_from_json(const json& j);

json to_json(const ExperimentConfig& cfg);
/// Relative loading paths are resolved against base_dir.
ExperimentConfig experiment_config_from_json(const json& j, const std::filesystem::path& base_dir = {});

json to_json(const IntervalResult& r);
IntervalResult interval_result_from_json(const json& j);

json to_json(const CellSummary& c);
/// The serialized report omits runtime_seconds so identical runs are byte-identical.
json to_json(const CoverageReport& r);
json to_json(const NonadaptivityReport& r);
json to_json(const REEstimate& r);
json to_json(const OmegaSurrogate& r);

/// Sweep table with header
/// swept_value,coverage,cov_lo,cov_hi,mean_length,median_length,degenerate_fraction,failure_fraction.
std::string sweep_csv(const CoverageReport& r);

/// Plain comma-separated numbers, no header, one row per line.
Eigen::MatrixXd read_matrix_csv(const std::filesystem::path& path);
/// One value per line (a single row is accepted too).
Eigen::VectorXd read_vector_csv(const std::filesystem::path& path);
void write_matrix_csv(const std::filesystem::path& path, const Eigen::MatrixXd& m);

/// Shortest decimal form that parses back to the same double.
std::string format_double(double v);

json read_json_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace hdci
