#include "hdci/ci_construct.hpp"

#include <cmath>
#include <limits>

#include "hdci/design_sampler.hpp"

namespace hdci {

namespace {

void check_loading(const Dataset& data, const Eigen::VectorXd& xi) {
    if (xi.size() != data.p()) fail(ErrorCode::DimensionMismatch, "loading length differs from p");
    if (!xi.allFinite()) fail(ErrorCode::InvalidArgument, "loading has non-finite entries");
    if (xi.cwiseAbs().maxCoeff() == 0.0) fail(ErrorCode::InvalidArgument, "loading vector is zero");
}

void check_regime(const Dataset& data, const Eigen::VectorXd& xi, const CIConfig& cfg, LoadingRegime want) {
    if (!cfg.loading_gamma) return;
    const Loading l = classify_loading(xi, static_cast<int>(data.p()), cfg.k, *cfg.loading_gamma);
    if (l.regime != want) {
        fail(ErrorCode::InvalidArgument, want == LoadingRegime::Sparse ? "loading is dense; use the dense interval"
                                                                        : "loading is sparse; use the sparse interval");
    }
}

double mode_code(CIMode m) {
    switch (m) {
        case CIMode::Faithful: return 0.0;
        case CIMode::Rescaled: return 1.0;
        case CIMode::OracleNormality: return 2.0;
    }
    return 0.0;
}

// kappa_sq for the constants: the user value if given, else the omega
// surrogate. Non-positive means the capped branch is used alone.
double kappa_sq_source(const Dataset& data, const CIConfig& cfg, IntervalResult& out) {
    if (cfg.kappa_sq) {
        out.diagnostics["kappa_sq"] = *cfg.kappa_sq;
        out.diagnostics["kappa_from_omega"] = 0.0;
        return *cfg.kappa_sq;
    }
    const double lmin = cfg.lambda_min.value_or(1.0 / cfg.m1);
    const double lmax = cfg.lambda_max.value_or(cfg.m1);
    const bool plug_in = cfg.lambda_min.has_value() || cfg.lambda_max.has_value();
    const OmegaSurrogate om = omega_surrogate(lmin, lmax, data, cfg.k, plug_in, cfg.effective_constants());
    out.diagnostics["kappa_sq"] = om.value;
    out.diagnostics["kappa_from_omega"] = 1.0;
    out.diagnostics["omega_ratio"] = om.ratio;
    return om.value;
}

}  // namespace

const char* to_string(CIMode mode) {
    switch (mode) {
        case CIMode::Faithful: return "faithful";
        case CIMode::Rescaled: return "rescaled";
        case CIMode::OracleNormality: return "oracle-normality";
    }
    return "faithful";
}

CIMode ci_mode_from_string(const std::string& s) {
    if (s == "faithful") return CIMode::Faithful;
    if (s == "rescaled") return CIMode::Rescaled;
    if (s == "oracle-normality") return CIMode::OracleNormality;
    fail(ErrorCode::ConfigError, "unknown mode '" + s + "' (faithful, rescaled, oracle-normality)");
}

Constants CIConfig::effective_constants() const { return mode == CIMode::Rescaled ? constants : Constants{}; }

void CIConfig::validate() const {
    if (!(alpha > 0.0 && alpha < 0.5)) fail(ErrorCode::ConfigError, "alpha must lie in (0, 1/2)");
    if (k < 0) fail(ErrorCode::ConfigError, "k must be nonnegative");
    if (!(m1 > 1.0)) fail(ErrorCode::ConfigError, "m1 must exceed 1");
    if (!(gamma0 > 0.0 && gamma0 < 1.0)) fail(ErrorCode::ConfigError, "gamma0 must lie in (0, 1)");
    if (lambda_n_override && !(*lambda_n_override > 0.0)) fail(ErrorCode::ConfigError, "lambda_n override must be positive");
    if (!(oracle_lambda_prefactor > 0.0)) fail(ErrorCode::ConfigError, "oracle lambda prefactor must be positive");
    const Constants c = effective_constants();
    for (double v : {c.c1, c.re, c.c2, c.cone, c.omega, c.lambda_n}) {
        if (!(v > 0.0) || !std::isfinite(v)) fail(ErrorCode::ConfigError, "constants must be positive and finite");
    }
}

IntervalResult ci_sparse(const Dataset& data, const Eigen::VectorXd& xi, const CIConfig& cfg) {
    cfg.validate();
    check_loading(data, xi);
    check_regime(data, xi, cfg, LoadingRegime::Sparse);

    const double n = static_cast<double>(data.n());
    const double log_p = std::log(static_cast<double>(data.p()));
    const ScaledLassoFit fit = scaled_lasso(data, default_lambda0(data.n(), data.p()));
    if (!(fit.sigma_hat <= log_p)) {
        IntervalResult out = IntervalResult::collapsed(IntervalKind::SparseLoading, fit.sigma_hat);
        out.diagnostics["mode"] = mode_code(cfg.mode);
        out.diagnostics["lasso_iterations"] = fit.iterations;
        return out;
    }

    const Constants c = cfg.effective_constants();
    double lambda_n;
    if (cfg.lambda_n_override) {
        lambda_n = *cfg.lambda_n_override;
    } else if (cfg.mode == CIMode::OracleNormality) {
        lambda_n = cfg.oracle_lambda_prefactor * xi.norm() * std::sqrt(log_p / n);
    } else {
        lambda_n = default_lambda_n(xi, cfg.m1, data.n(), data.p(), c.lambda_n);
    }
    ScoreOptions sopts;
    sopts.auto_escalate = cfg.escalate;
    const ScoreSolution score = solve_score(data, xi, lambda_n, sopts);
    const DebiasedEstimate est = debiased_estimate(data, xi, fit, score);

    const double xi_norm = xi.norm();
    const double z = gaussian_quantile(cfg.alpha / 2.0);
    const double normality = 1.01 * std::sqrt(score.objective / (n * xi_norm * xi_norm)) * z;
    const double cap = log_p * (1.0 / std::sqrt(n) + cfg.k * log_p / n);

    IntervalResult tmp;
    double branch1 = normality;
    double branch = 1.0;
    if (cfg.mode != CIMode::OracleNormality && cfg.k > 0) {
        const double kappa_sq = kappa_sq_source(data, cfg, tmp);
        if (kappa_sq > 0.0) {
            const double c1 = c1_constant(data, cfg.k, kappa_sq, cfg.m1, c);
            tmp.diagnostics["c1"] = c1;
            tmp.diagnostics["c1_capped"] = 0.0;
            branch1 = normality + c1 * cfg.k * log_p / n;
        } else {
            tmp.diagnostics["c1_capped"] = 1.0;
            branch1 = std::numeric_limits<double>::infinity();
        }
    }
    double factor = branch1;
    if (cfg.mode != CIMode::OracleNormality && cap < branch1) {
        factor = cap;
        branch = 2.0;
    }

    IntervalResult out = IntervalResult::centered(est.mu_tilde, xi_norm * fit.sigma_hat * factor,
                                                  IntervalKind::SparseLoading);
    out.sigma_hat = fit.sigma_hat;
    out.event_a = true;
    out.diagnostics = std::move(tmp.diagnostics);
    out.diagnostics["mode"] = mode_code(cfg.mode);
    out.diagnostics["branch"] = branch;
    out.diagnostics["normality_radius"] = xi_norm * fit.sigma_hat * normality;
    out.diagnostics["cap_radius"] = xi_norm * fit.sigma_hat * cap;
    out.diagnostics["lambda_n"] = score.lambda_n;
    out.diagnostics["escalations"] = score.escalations;
    out.diagnostics["qp_objective"] = score.objective;
    out.diagnostics["qp_gap"] = score.duality_gap;
    out.diagnostics["qp_infeasibility"] = score.infeasibility;
    out.diagnostics["lasso_iterations"] = fit.iterations;
    return out;
}

IntervalResult ci_dense(const Dataset& data, const Eigen::VectorXd& xi, const CIConfig& cfg) {
    cfg.validate();
    if (cfg.mode == CIMode::OracleNormality) {
        fail(ErrorCode::ConfigError, "oracle-normality mode applies to the sparse-loading interval only");
    }
    check_loading(data, xi);
    check_regime(data, xi, cfg, LoadingRegime::Dense);

    const double n = static_cast<double>(data.n());
    const double log_p = std::log(static_cast<double>(data.p()));
    const ScaledLassoFit fit = scaled_lasso(data, default_lambda0(data.n(), data.p()));
    if (!(fit.sigma_hat <= log_p)) {
        IntervalResult out = IntervalResult::collapsed(IntervalKind::DenseLoading, fit.sigma_hat);
        out.diagnostics["mode"] = mode_code(cfg.mode);
        out.diagnostics["lasso_iterations"] = fit.iterations;
        return out;
    }

    const Constants c = cfg.effective_constants();
    const double root = std::sqrt(log_p / n);
    const double cap = log_p * cfg.k * root;

    IntervalResult tmp;
    double branch1 = 0.0;
    double branch = 1.0;
    if (cfg.k > 0) {
        const double kappa_sq = kappa_sq_source(data, cfg, tmp);
        if (kappa_sq > 0.0) {
            const double c2 = c2_constant(data, cfg.k, kappa_sq, c);
            tmp.diagnostics["c2"] = c2;
            tmp.diagnostics["c2_capped"] = 0.0;
            branch1 = c2 * cfg.k * root;
        } else {
            tmp.diagnostics["c2_capped"] = 1.0;
            branch1 = std::numeric_limits<double>::infinity();
        }
    }
    double factor = branch1;
    if (cap < branch1) {
        factor = cap;
        branch = 2.0;
    }

    const double xi_inf = xi.cwiseAbs().maxCoeff();
    IntervalResult out = IntervalResult::centered(xi.dot(fit.beta_hat), xi_inf * factor * fit.sigma_hat,
                                                  IntervalKind::DenseLoading);
    out.sigma_hat = fit.sigma_hat;
    out.event_a = true;
    out.diagnostics = std::move(tmp.diagnostics);
    out.diagnostics["mode"] = mode_code(cfg.mode);
    out.diagnostics["branch"] = branch;
    out.diagnostics["cap_radius"] = xi_inf * cap * fit.sigma_hat;
    out.diagnostics["lasso_iterations"] = fit.iterations;
    return out;
}

double known_design_radius(const Eigen::VectorXd& xi, int n2, double sigma0, double alpha, double gamma0) {
    if (n2 < 1) fail(ErrorCode::InvalidArgument, "n2 must be positive");
    const double z = gaussian_quantile(gamma0 * alpha / 2.0);
    return 1.01 * (xi.norm() / std::sqrt(static_cast<double>(n2))) * z * sigma0;
}

IntervalResult ci_known_design(const Dataset& data, const Eigen::VectorXd& xi, double sigma0, const CIConfig& cfg,
                               std::uint64_t seed) {
    cfg.validate();
    check_loading(data, xi);
    const SplitEstimate split = split_estimate(data, xi, sigma0, seed);
    const double radius = known_design_radius(xi, split.n2, sigma0, cfg.alpha, cfg.gamma0);

    IntervalResult out = IntervalResult::centered(split.mu_bar, radius, IntervalKind::KnownDesign);
    out.sigma_hat = sigma0;
    out.event_a = true;
    out.diagnostics["mode"] = mode_code(cfg.mode);
    out.diagnostics["n1"] = split.n1;
    out.diagnostics["n2"] = split.n2;
    out.diagnostics["dropped_observation"] = split.dropped_observation ? 1.0 : 0.0;
    out.diagnostics["lasso_lambda"] = split.fit.lambda;
    out.diagnostics["lasso_iterations"] = split.fit.iterations;
    return out;
}

}  // namespace hdci
