#pragma once

#include <cstdint>

#include "hdci/sparse_estimators.hpp"

namespace hdci {

struct ScoreOptions {
    /// Feasibility tolerance is feas_tol * (1 + ||xi||_inf).
    double feas_tol = 1e-8;
    /// Duality gap tolerance, relative to max(1, objective).
    double gap_tol = 1e-7;
    int max_sweeps = 20000;
    /// Multiply lambda_n by escalation_factor (at most max_escalations times)
    /// when the constraint set is empty. Off for faithful library calls.
    bool auto_escalate = false;
    double escalation_factor = 1.5;
    int max_escalations = 10;
};

/// Solution of min u' S u subject to ||S u - xi||_inf <= lambda_n.
struct ScoreSolution {
    Eigen::VectorXd u_hat;
    /// u_hat' S u_hat.
    double objective = 0.0;
    /// max(0, ||S u_hat - xi||_inf - lambda_n).
    double infeasibility = 0.0;
    double duality_gap = 0.0;
    /// Signed multiplier w of the box constraint; the Lagrangian dual bound
    /// at w is -w'Sw/4 - w'xi - lambda_n ||w||_1.
    Eigen::VectorXd multiplier;
    double lambda_n = 0.0;
    int escalations = 0;
    int sweeps = 0;
};

/// 12 ||xi||_2 M1^2 sqrt(log p / n).
double default_lambda_n(const Eigen::VectorXd& xi, double m1, Eigen::Index n, Eigen::Index p,
                        double prefactor = 12.0);

/// Score QP on an explicit PSD matrix.
ScoreSolution solve_score(const Eigen::MatrixXd& sigma_hat, const Eigen::VectorXd& xi, double lambda_n,
                          const ScoreOptions& opts = {});

/// Score QP with S = X'X/n taken implicitly from the design; cheaper when n < p.
ScoreSolution solve_score(const Dataset& data, const Eigen::VectorXd& xi, double lambda_n,
                          const ScoreOptions& opts = {});

struct DebiasedEstimate {
    double mu_tilde = 0.0;
    /// score.objective / n.
    double variance_proxy = 0.0;
    ScaledLassoFit fit;
    ScoreSolution score;
};

/// xi' beta_hat + u_hat' X'(y - X beta_hat) / n.
DebiasedEstimate debiased_estimate(const Dataset& data, const Eigen::VectorXd& xi, const ScaledLassoFit& fit,
                                   const ScoreSolution& score);

/// |(mu_tilde - xi'beta) - (u'X'eps/n + (xi - S u)'(beta_hat - beta))| for a
/// known truth, with eps = y - X beta.
double decomposition_residual(const Dataset& data, const Eigen::VectorXd& xi, const DebiasedEstimate& est,
                              const Eigen::VectorXd& beta);

struct SplitEstimate {
    double mu_bar = 0.0;
    int n1 = 0;
    int n2 = 0;
    LassoFit fit;
    double sigma0 = 0.0;
    /// True when n was odd and the last permuted observation was dropped.
    bool dropped_observation = false;
};

/// Known-design estimator: Lasso on a seeded random half, plug-in correction
/// on the other half.
SplitEstimate split_estimate(const Dataset& data, const Eigen::VectorXd& xi, double sigma0, std::uint64_t seed,
                             const LassoOptions& opts = {});

}  // namespace hdci
