#include "hdci/sparse_estimators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace hdci {

namespace {

inline double soft_threshold(double z, double t) {
    if (z > t) return z - t;
    if (z < -t) return z + t;
    return 0.0;
}

// Coordinate descent for ||y - X b||^2 / (2n) + penalty * sum_j w_j |b_j| with
// w_j = ||X_j|| / sqrt(n). Keeps the residual y - X b up to date.
class CoordinateDescent {
public:
    explicit CoordinateDescent(const Dataset& data)
        : x_(data.x()), y_(data.y()), n_(static_cast<double>(data.n())) {
        const Eigen::Index p = data.p();
        col_sq_ = x_.colwise().squaredNorm().transpose() / n_;
        weights_ = col_sq_.cwiseSqrt();
        beta_ = Eigen::VectorXd::Zero(p);
        resid_ = y_;
        y_scale_ = y_.norm() / std::sqrt(n_);
    }

    void warm_start(const Eigen::VectorXd& beta) {
        if (beta.size() != beta_.size()) fail(ErrorCode::DimensionMismatch, "warm start has wrong length");
        beta_ = beta;
        resid_ = y_ - x_ * beta_;
    }

    // One pass over `coords`; returns the largest scaled coordinate change.
    double sweep(const std::vector<Eigen::Index>& coords, double penalty) {
        double max_change = 0.0;
        for (Eigen::Index j : coords) {
            const double a = col_sq_[j];
            const double old = beta_[j];
            const double z = x_.col(j).dot(resid_) / n_ + a * old;
            const double updated = soft_threshold(z, penalty * weights_[j]) / a;
            const double delta = updated - old;
            if (delta != 0.0) {
                resid_.noalias() -= delta * x_.col(j);
                beta_[j] = updated;
                max_change = std::max(max_change, std::abs(delta) * weights_[j]);
            }
        }
        return max_change;
    }

    // Runs to convergence with active-set cycling; returns the number of sweeps.
    int solve(double penalty, const LassoOptions& opts, std::vector<double>* trace) {
        const Eigen::Index p = beta_.size();
        std::vector<Eigen::Index> all(p);
        for (Eigen::Index j = 0; j < p; ++j) all[j] = j;
        const double tol = opts.inner_tol * y_scale_;

        int sweeps = 0;
        auto record = [&] {
            if (trace) trace->push_back(objective(penalty));
        };
        while (sweeps < opts.max_sweeps) {
            const double full_change = sweep(all, penalty);
            ++sweeps;
            record();
            if (full_change <= tol) return sweeps;

            std::vector<Eigen::Index> active;
            for (Eigen::Index j = 0; j < p; ++j) {
                if (beta_[j] != 0.0) active.push_back(j);
            }
            while (sweeps < opts.max_sweeps) {
                const double change = sweep(active, penalty);
                ++sweeps;
                record();
                if (change <= tol) break;
            }
        }
        return sweeps;
    }

    double objective(double penalty) const {
        return resid_.squaredNorm() / (2.0 * n_) + penalty * weights_.cwiseProduct(beta_).cwiseAbs().sum();
    }

    const Eigen::VectorXd& beta() const { return beta_; }
    const Eigen::VectorXd& residual() const { return resid_; }

    // Gradient entries below this level are rounding noise. Only matters when
    // the penalty itself is near zero (the split estimator's 1e-12 floor).
    double roundoff_floor() const {
        return 64.0 * std::numeric_limits<double>::epsilon() * weights_.maxCoeff() * y_scale_;
    }

private:
    const Eigen::MatrixXd& x_;
    const Eigen::VectorXd& y_;
    double n_;
    double y_scale_ = 0.0;
    Eigen::VectorXd col_sq_;
    Eigen::VectorXd weights_;
    Eigen::VectorXd beta_;
    Eigen::VectorXd resid_;
};

double kkt_violation(const Eigen::MatrixXd& x, const Eigen::VectorXd& resid, const Eigen::VectorXd& beta,
                     double penalty) {
    const double n = static_cast<double>(x.rows());
    const Eigen::VectorXd grad = x.transpose() * resid / n;
    double worst = 0.0;
    for (Eigen::Index j = 0; j < beta.size(); ++j) {
        const double level = penalty * x.col(j).norm() / std::sqrt(n);
        double v;
        if (beta[j] > 0.0) {
            v = std::abs(grad[j] - level);
        } else if (beta[j] < 0.0) {
            v = std::abs(grad[j] + level);
        } else {
            v = std::max(0.0, std::abs(grad[j]) - level);
        }
        worst = std::max(worst, v);
    }
    return worst;
}

double relative(double violation, double penalty) {
    if (penalty > 0.0) return violation / penalty;
    return violation == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
}

}  // namespace

double default_lambda0(Eigen::Index n, Eigen::Index p) {
    return std::sqrt(2.05 * std::log(static_cast<double>(p)) / static_cast<double>(n));
}

double lasso_objective(const Dataset& data, const Eigen::VectorXd& beta, double lambda) {
    const double n = static_cast<double>(data.n());
    const Eigen::VectorXd r = data.y() - data.x() * beta;
    const Eigen::VectorXd w = data.column_norms() / std::sqrt(n);
    return r.squaredNorm() / (2.0 * n) + lambda * w.cwiseProduct(beta).cwiseAbs().sum();
}

double scaled_lasso_objective(const Dataset& data, const Eigen::VectorXd& beta, double sigma, double lambda0) {
    const double n = static_cast<double>(data.n());
    const Eigen::VectorXd r = data.y() - data.x() * beta;
    const Eigen::VectorXd w = data.column_norms() / std::sqrt(n);
    return r.squaredNorm() / (2.0 * n * sigma) + 0.5 * sigma + lambda0 * w.cwiseProduct(beta).cwiseAbs().sum();
}

double lasso_kkt_residual(const Dataset& data, const Eigen::VectorXd& beta, double penalty) {
    const Eigen::VectorXd r = data.y() - data.x() * beta;
    return relative(kkt_violation(data.x(), r, beta, penalty), penalty);
}

LassoFit lasso(const Dataset& data, double lambda, const LassoOptions& opts) {
    if (!(lambda > 0.0)) fail(ErrorCode::InvalidArgument, "lasso penalty must be positive");
    CoordinateDescent cd(data);
    if (opts.warm_start.size() > 0) cd.warm_start(opts.warm_start);

    LassoFit fit;
    fit.lambda = lambda;
    std::vector<double>* trace = opts.record_trace ? &fit.objective_trace : nullptr;
    if (trace) trace->push_back(cd.objective(lambda));

    LassoOptions local = opts;
    int budget = opts.max_sweeps;
    while (true) {
        local.max_sweeps = budget;
        const int used = cd.solve(lambda, local, trace);
        fit.iterations += used;
        budget -= used;
        const double violation = kkt_violation(data.x(), cd.residual(), cd.beta(), lambda);
        fit.kkt_residual = relative(violation, lambda);
        if (fit.kkt_residual <= opts.kkt_tol || violation <= cd.roundoff_floor()) break;
        if (budget <= 0) {
            fail(ErrorCode::MaxIterations, "lasso coordinate descent did not reach KKT tolerance (residual " +
                                               std::to_string(fit.kkt_residual) + ")");
        }
        local.inner_tol *= 0.01;
    }
    fit.beta_hat = cd.beta();
    fit.objective = cd.objective(lambda);
    return fit;
}

ScaledLassoFit scaled_lasso(const Dataset& data, double lambda0, const LassoOptions& opts) {
    if (!(lambda0 > 0.0)) fail(ErrorCode::InvalidArgument, "lambda0 must be positive");
    const double sqrt_n = std::sqrt(static_cast<double>(data.n()));
    const double y_norm = data.y().norm();
    if (y_norm == 0.0) fail(ErrorCode::DegenerateResponse, "response is identically zero");

    ScaledLassoFit fit;
    fit.lambda0 = lambda0;

    CoordinateDescent cd(data);
    if (opts.warm_start.size() > 0) cd.warm_start(opts.warm_start);
    double sigma = cd.residual().norm() / sqrt_n;
    if (sigma == 0.0) sigma = y_norm / sqrt_n;

    for (int outer = 1; outer <= opts.max_outer; ++outer) {
        LassoOptions inner = opts;
        int budget = opts.max_sweeps;
        while (true) {
            inner.max_sweeps = budget;
            budget -= cd.solve(lambda0 * sigma, inner, nullptr);
            const double kkt = relative(kkt_violation(data.x(), cd.residual(), cd.beta(), lambda0 * sigma),
                                        lambda0 * sigma);
            if (kkt <= opts.kkt_tol) break;
            if (budget <= 0) fail(ErrorCode::MaxIterations, "inner lasso of the scaled lasso did not converge");
            inner.inner_tol *= 0.01;
        }

        const double next = cd.residual().norm() / sqrt_n;
        if (next == 0.0) fail(ErrorCode::DegenerateResponse, "scaled lasso interpolates y; noise level estimate is zero");
        fit.iterations = outer;
        fit.kkt_history.push_back(
            relative(kkt_violation(data.x(), cd.residual(), cd.beta(), lambda0 * next), lambda0 * next));

        const bool done = std::abs(next - sigma) <= opts.sigma_tol * std::max(1.0, sigma) &&
                          fit.kkt_history.back() <= opts.kkt_tol;
        sigma = next;
        if (done) {
            fit.beta_hat = cd.beta();
            fit.sigma_hat = sigma;
            fit.kkt_residual = fit.kkt_history.back();
            fit.objective = scaled_lasso_objective(data, fit.beta_hat, fit.sigma_hat, lambda0);
            return fit;
        }
    }
    fail(ErrorCode::MaxIterations, "scaled lasso alternation did not converge in " + std::to_string(opts.max_outer) +
                                       " outer iterations");
}

NormalizedModel normalize(const Dataset& data) {
    const double sqrt_n = std::sqrt(static_cast<double>(data.n()));
    NormalizedModel out;
    const Eigen::VectorXd norms = data.column_norms();
    if ((norms.array() == 0.0).any()) fail(ErrorCode::ZeroColumn, "cannot normalize a zero column");
    out.d = sqrt_n * norms.cwiseInverse();
    out.w = data.x() * out.d.asDiagonal();
    return out;
}

}  // namespace hdci
