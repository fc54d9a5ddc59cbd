#pragma once

#include <cstdint>
#include <vector>

#include "hdci/core_model.hpp"

namespace hdci {

/// Numeric prefactors of the interval constants. Defaults are the values the
/// theory is stated with; rescaled-constants mode overrides them.
struct Constants {
    double c1 = 7000.0;        // C1 prefactor
    double re = 912.0;         // restricted-eigenvalue branch of C1 and C2
    double c2 = 822.0;         // C2 prefactor
    double cone = 405.0;       // cone parameter multiplier, also inside omega
    double omega = 9.0;        // omega deviation coefficient
    double lambda_n = 12.0;    // score QP tuning prefactor

    bool is_default() const;
};

enum class REMode { BruteForceOracle, HeuristicUpper };

const char* to_string(REMode mode);

struct REEstimate {
    double value = 0.0;
    REMode mode = REMode::HeuristicUpper;
    int k = 0;
    double alpha0 = 0.0;
    /// Minimizing support J0 and direction delta (||delta_J0||_2 = 1).
    std::vector<int> support;
    Eigen::VectorXd delta;
};

struct HeuristicOptions {
    std::uint64_t seed = 0;
    /// Random starting directions per support, on top of the eigenvector start.
    int starts = 3;
    /// Supports sampled at random when full enumeration exceeds max_supports.
    int max_supports = 2000;
    int descent_iterations = 200;
};

/// Restricted eigenvalue
///   min_{|J0| <= k} min_{||d_J0c||_1 <= alpha0 ||d_J0||_1} ||X d||_2 / (sqrt(n) ||d_J0||_2).
/// BruteForceOracle enumerates supports and grids the direction on J0 (p <= 12,
/// k <= 2). HeuristicUpper returns the value at an attained feasible point,
/// hence an upper estimate.
REEstimate restricted_eigenvalue(const Dataset& data, int k, double alpha0, REMode mode,
                                 const HeuristicOptions& opts = {});

/// max_j ||X_j|| / min_j ||X_j||.
double column_norm_ratio(const Dataset& data);

/// cone * column_norm_ratio(data).
double default_cone_alpha0(const Dataset& data, const Constants& c = {});

struct OmegaSurrogate {
    double value = 0.0;
    double lambda_min_used = 0.0;
    double lambda_max_used = 0.0;
    double ratio = 1.0;
    bool plug_in = false;
};

/// (1/(4 sqrt(lmax)) - 9 (1 + 405 ratio) / sqrt(lmin) * sqrt(k log p / n))_+^2
/// with eigenvalues of Omega supplied by the caller.
OmegaSurrogate omega_surrogate(double lambda_min, double lambda_max, const Dataset& data, int k,
                               bool plug_in = false, const Constants& c = {});

/// The surrogate from its scalar inputs; ratio is the column-norm ratio.
double omega_value(double lambda_min, double lambda_max, double ratio, double k_log_p_over_n,
                   const Constants& c = {});

/// 7000 M1^2 sqrt(n)/min||X_j|| * max{1.25, 912 max||X_j||^2 / (n kappa_sq)}.
double c1_constant(const Dataset& data, int k, double kappa_sq, double m1, const Constants& c = {});

/// 822 sqrt(n)/min||X_j|| * max{1.25, 912 max||X_j||^2 / (n kappa_sq)}.
double c2_constant(const Dataset& data, int k, double kappa_sq, const Constants& c = {});

}  // namespace hdci
