#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "hdci/certificates.hpp"
#include "hdci/debias.hpp"

namespace hdci {

/// Faithful uses the stated constants. Rescaled replaces them by
/// CIConfig::constants. OracleNormality keeps only the normal-approximation
/// part of the sparse-loading radius; it is a diagnostic and never faithful.
enum class CIMode { Faithful, Rescaled, OracleNormality };

const char* to_string(CIMode mode);
CIMode ci_mode_from_string(const std::string& s);

struct CIConfig {
    double alpha = 0.05;
    /// Assumed sparsity.
    int k = 0;
    double m1 = 2.0;
    /// Known-design intervals use alpha0 = gamma0 * alpha.
    double gamma0 = 0.9;
    CIMode mode = CIMode::Faithful;
    /// Only read in Rescaled mode.
    Constants constants;
    std::optional<double> lambda_n_override;
    /// lambda_n prefactor in OracleNormality mode: lambda_n = prefactor * ||xi||_2 * sqrt(log p / n).
    double oracle_lambda_prefactor = 1.0;
    /// Plug-in eigenvalues of Omega for the omega surrogate; default 1/m1 and m1.
    std::optional<double> lambda_min;
    std::optional<double> lambda_max;
    /// Squared restricted eigenvalue; takes precedence over the omega surrogate.
    std::optional<double> kappa_sq;
    /// Score QP escalation on an empty constraint set.
    bool escalate = false;
    /// When set, the loading is classified with this gamma and must match the
    /// interval family.
    std::optional<double> loading_gamma;

    /// Constants in effect for the configured mode.
    Constants effective_constants() const;
    void validate() const;
};

/// Sparse-loading interval centered at the de-biased estimator.
IntervalResult ci_sparse(const Dataset& data, const Eigen::VectorXd& xi, const CIConfig& cfg);

/// Dense-loading interval centered at the plug-in estimator xi' beta_hat.
IntervalResult ci_dense(const Dataset& data, const Eigen::VectorXd& xi, const CIConfig& cfg);

/// Known-design interval (Sigma = I, sigma = sigma0) from the split-sample estimator.
IntervalResult ci_known_design(const Dataset& data, const Eigen::VectorXd& xi, double sigma0, const CIConfig& cfg,
                               std::uint64_t seed);

/// 1.01 * ||xi||_2 / sqrt(n2) * z_{gamma0 alpha / 2} * sigma0.
double known_design_radius(const Eigen::VectorXd& xi, int n2, double sigma0, double alpha, double gamma0);

}  // namespace hdci
