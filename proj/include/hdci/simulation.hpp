#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "hdci/ci_construct.hpp"
#include "hdci/design_sampler.hpp"

namespace hdci {

enum class XiKind { Coordinate, AllOnes, Explicit };

struct XiSpec {
    XiKind kind = XiKind::Coordinate;
    /// Zero-based coordinate for XiKind::Coordinate.
    int index = 0;
    /// Values for XiKind::Explicit (loaded from `path` by the CLI).
    Eigen::VectorXd values;
    std::string path;
};

Eigen::VectorXd build_xi(const XiSpec& spec, int p);

enum class SweepParameter { K, N, P };

const char* to_string(SweepParameter s);
SweepParameter sweep_parameter_from_string(const std::string& s);

struct Sweep {
    SweepParameter parameter = SweepParameter::K;
    std::vector<int> values;
};

struct ExperimentConfig {
    SamplerConfig sampler;
    /// Score QP escalation is on by default in simulations.
    CIConfig ci = [] {
        CIConfig c;
        c.escalate = true;
        return c;
    }();
    IntervalKind interval = IntervalKind::KnownDesign;
    XiSpec xi;
    int replicates = 100;
    std::uint64_t base_seed = 0;
    std::optional<Sweep> sweep;
    /// Known noise level for the known-design interval; defaults to sampler.sigma.
    std::optional<double> sigma0;
    /// When sweeping k, the interval's assumed k follows the truth.
    bool sweep_sets_ci_k = true;
    /// Largest tolerated per-cell failure fraction (the CLI exits 3 above it).
    double failure_ceiling = 0.05;

    void validate() const;
};

struct ReplicateRecord {
    std::uint64_t seed = 0;
    bool failed = false;
    std::string error;
    double truth = 0.0;
    double lower = 0.0;
    double upper = 0.0;
    double radius = 0.0;
    bool covered = false;
    bool degenerate = false;
    int branch = 0;

    /// 2 * radius, so a deterministic radius gives a bit-identical length.
    double length() const { return degenerate ? 0.0 : 2.0 * radius; }
};

struct CellSummary {
    double swept_value = 0.0;
    int replicates = 0;
    int evaluated = 0;
    int failures = 0;
    int covered = 0;
    /// covered / evaluated; failed replicates are excluded and flagged.
    double empirical_coverage = 0.0;
    std::pair<double, double> wilson{0.0, 1.0};
    double mean_length = 0.0;
    double median_length = 0.0;
    double degenerate_fraction = 0.0;
    double branch1_fraction = 0.0;
    double failure_fraction = 0.0;
    bool failures_excluded = false;
    std::vector<ReplicateRecord> records;
};

struct SlopeFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
};

struct CoverageReport {
    ExperimentConfig config;
    std::vector<CellSummary> cells;
    std::optional<SlopeFit> fit;
    std::string version;
    /// Wall time; kept out of the serialized report so reruns are byte-identical.
    double runtime_seconds = 0.0;

    double max_failure_fraction() const;
};

/// Library version string recorded in reports.
const char* library_version();

/// Runs every cell and replicate on `threads` workers (0 = all cores).
/// Records are reduced in fixed index order, so the thread count never
/// changes the report.
CoverageReport run_experiment(const ExperimentConfig& cfg, int threads = 0);

/// run_experiment on a k sweep plus a least-squares fit of mean length on k.
CoverageReport rate_sweep_report(const ExperimentConfig& cfg, int threads = 0);

/// Ordinary least squares of y on x.
SlopeFit fit_line(const std::vector<double>& x, const std::vector<double>& y);

/// Wilson score interval for `successes` out of `trials` at normal quantile z.
std::pair<double, double> wilson_interval(int successes, int trials, double z = 1.959963984540054);

/// Covariance, regression vector and noise level of the least-favorable truth
/// used by the non-adaptivity demonstration: Sigma = I + e1 d' + d e1' with d
/// holding m = k - 1 entries rho at coordinates 2..k, rho / (1 - m rho^2) = magnitude,
/// beta_1 = -sigma m rho^2/(1 - m rho^2) and beta_j = (sigma - beta_1) rho on the spike.
struct SpikedTruth {
    Eigen::MatrixXd covariance;
    Eigen::VectorXd beta;
    double noise_sd = 0.0;
    double rho = 0.0;
};

SpikedTruth spiked_truth(int p, int k, double magnitude, double sigma);

struct NonadaptivityReport {
    int n = 0;
    int p = 0;
    int k_small = 0;
    int k_large = 0;
    double alpha = 0.05;
    double sigma = 1.0;
    double magnitude = 0.0;
    CellSummary small;
    CellSummary large;
    double deficit = 0.0;
    /// True when the two Wilson intervals do not overlap and small covers more.
    bool significant = false;
};

/// Sparse-loading interval built for sparsity k_small (OracleNormality mode)
/// evaluated at k_small and k_large truths with nonzero magnitude
/// sqrt(log p / n) * sigma.
NonadaptivityReport nonadaptivity_demo(int n, int p, int k_small, int k_large, double alpha, int replicates,
                                       std::uint64_t seed, double sigma = 1.0, int threads = 0);

}  // namespace hdci
