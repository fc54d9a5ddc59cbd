#pragma once

#include <vector>

#include "hdci/core_model.hpp"

namespace hdci {

struct LassoOptions {
    /// Coordinate descent stops once max_j |delta beta_j| * ||X_j|| / sqrt(n)
    /// falls below inner_tol * ||y|| / sqrt(n).
    double inner_tol = 1e-10;
    int max_sweeps = 100000;
    /// KKT violation tolerance, relative to the penalty level. A violation at
    /// the floating-point rounding level also counts as converged.
    double kkt_tol = 1e-6;
    /// Outer alternation of the scaled Lasso.
    int max_outer = 500;
    double sigma_tol = 1e-8;
    /// Optional warm start (length p).
    Eigen::VectorXd warm_start;
    /// Record the objective after every sweep (lasso only).
    bool record_trace = false;
};

struct LassoFit {
    Eigen::VectorXd beta_hat;
    double lambda = 0.0;
    int iterations = 0;
    double kkt_residual = 0.0;
    double objective = 0.0;
    std::vector<double> objective_trace;
};

struct ScaledLassoFit {
    Eigen::VectorXd beta_hat;
    double sigma_hat = 0.0;
    double lambda0 = 0.0;
    /// Outer alternation steps.
    int iterations = 0;
    double kkt_residual = 0.0;
    double objective = 0.0;
    /// KKT residual of each outer iterate at the penalty implied by the next
    /// noise-level update.
    std::vector<double> kkt_history;
};

struct NormalizedModel {
    Eigen::VectorXd d;
    Eigen::MatrixXd w;
};

/// sqrt(2.05 log p / n), the universal penalty level of the scaled Lasso.
double default_lambda0(Eigen::Index n, Eigen::Index p);

/// ||y - X b||^2 / (2n) + lambda * sum_j ||X_j|| / sqrt(n) |b_j|.
double lasso_objective(const Dataset& data, const Eigen::VectorXd& beta, double lambda);

/// ||y - X b||^2 / (2 n s) + s / 2 + lambda0 * sum_j ||X_j|| / sqrt(n) |b_j|.
double scaled_lasso_objective(const Dataset& data, const Eigen::VectorXd& beta, double sigma, double lambda0);

/// Largest violation of the weighted-Lasso KKT conditions at penalty level
/// `penalty`, divided by `penalty`.
double lasso_kkt_residual(const Dataset& data, const Eigen::VectorXd& beta, double penalty);

/// Joint (beta, sigma) minimizer by alternating a coordinate-descent Lasso at
/// penalty lambda0 * sigma with sigma = ||y - X beta|| / sqrt(n).
ScaledLassoFit scaled_lasso(const Dataset& data, double lambda0, const LassoOptions& opts = {});

/// Weighted Lasso with column-norm penalty weights ||X_j|| / sqrt(n).
LassoFit lasso(const Dataset& data, double lambda, const LassoOptions& opts = {});

/// W = X D with D = diag(sqrt(n) / ||X_j||), so every column of W has norm sqrt(n).
NormalizedModel normalize(const Dataset& data);

}  // namespace hdci
