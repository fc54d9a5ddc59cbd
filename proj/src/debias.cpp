#include "hdci/debias.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <Eigen/Eigenvalues>

#include "hdci/rng.hpp"

namespace hdci {

namespace {

inline double soft_threshold(double z, double t) {
    if (z > t) return z - t;
    if (z < -t) return z + t;
    return 0.0;
}

// S held explicitly; keeps g = S v.
class GramOperator {
public:
    explicit GramOperator(const Eigen::MatrixXd& s) : s_(s) {}
    Eigen::Index size() const { return s_.rows(); }
    double diag(Eigen::Index j) const { return s_(j, j); }
    void reset(const Eigen::VectorXd& v) { g_ = s_ * v; }
    double sv(Eigen::Index j) const { return g_[j]; }
    void update(Eigen::Index j, double delta) { g_.noalias() += delta * s_.col(j); }
    Eigen::VectorXd full_sv() const { return g_; }
    double quad(const Eigen::VectorXd& v) const { return v.dot(g_); }

private:
    const Eigen::MatrixXd& s_;
    Eigen::VectorXd g_;
};

// S = X'X/n implicit; keeps z = X v.
class DesignOperator {
public:
    explicit DesignOperator(const Eigen::MatrixXd& x) : x_(x), n_(static_cast<double>(x.rows())) {
        diag_ = x_.colwise().squaredNorm().transpose() / n_;
    }
    Eigen::Index size() const { return x_.cols(); }
    double diag(Eigen::Index j) const { return diag_[j]; }
    void reset(const Eigen::VectorXd& v) { z_ = x_ * v; }
    double sv(Eigen::Index j) const { return x_.col(j).dot(z_) / n_; }
    void update(Eigen::Index j, double delta) { z_.noalias() += delta * x_.col(j); }
    Eigen::VectorXd full_sv() const { return x_.transpose() * z_ / n_; }
    double quad(const Eigen::VectorXd&) const { return z_.squaredNorm() / n_; }

private:
    const Eigen::MatrixXd& x_;
    double n_;
    Eigen::VectorXd diag_;
    Eigen::VectorXd z_;
};

struct Attempt {
    ScoreSolution sol;
    bool infeasible = false;
};

// Coordinate descent on the dual-form problem
//   min_v  v'Sv/2 - xi'v + lambda ||v||_1,
// whose minimizer is the primal optimum u = v. At w = -2v the Lagrangian dual
// bound is -v'Sv + 2 xi'v - 2 lambda ||v||_1, so the gap is
// 2 (v'Sv - xi'v + lambda ||v||_1). An empty constraint set makes the
// problem unbounded below, which shows up as divergence.
template <class Op>
Attempt solve_once(Op& op, const Eigen::VectorXd& xi, double lambda, const ScoreOptions& opts) {
    const Eigen::Index p = op.size();
    const double xi_inf = xi.cwiseAbs().maxCoeff();
    const double feas_tol = opts.feas_tol * (1.0 + xi_inf);

    Attempt out;
    out.sol.lambda_n = lambda;
    for (Eigen::Index j = 0; j < p; ++j) {
        // A zero diagonal forces (S u)_j = 0 for PSD S.
        if (op.diag(j) <= 0.0 && std::abs(xi[j]) > lambda + feas_tol) {
            out.infeasible = true;
            return out;
        }
    }

    double max_diag = 0.0;
    for (Eigen::Index j = 0; j < p; ++j) max_diag = std::max(max_diag, op.diag(j));
    double tol = 1e-10 * xi_inf / std::sqrt(max_diag);
    const double blowup = 1e12 * (1.0 + xi.squaredNorm()) / std::min(1.0, lambda);

    Eigen::VectorXd v = Eigen::VectorXd::Zero(p);
    op.reset(v);
    std::vector<Eigen::Index> all(p);
    std::iota(all.begin(), all.end(), Eigen::Index{0});

    auto sweep = [&](const std::vector<Eigen::Index>& coords) {
        double change = 0.0;
        for (Eigen::Index j : coords) {
            const double a = op.diag(j);
            if (a <= 0.0) continue;
            const double old = v[j];
            const double r = xi[j] - op.sv(j) + a * old;
            const double updated = soft_threshold(r, lambda) / a;
            const double delta = updated - old;
            if (delta != 0.0) {
                op.update(j, delta);
                v[j] = updated;
                change = std::max(change, std::abs(delta) * std::sqrt(a));
            }
        }
        return change;
    };

    int sweeps = 0;
    while (sweeps < opts.max_sweeps) {
        double change = sweep(all);
        ++sweeps;
        if (change > tol) {
            std::vector<Eigen::Index> active;
            for (Eigen::Index j = 0; j < p; ++j) {
                if (v[j] != 0.0) active.push_back(j);
            }
            while (sweeps < opts.max_sweeps) {
                const double c = sweep(active);
                ++sweeps;
                if (c <= tol) break;
            }
            const double dual_obj = 0.5 * op.quad(v) - xi.dot(v) + lambda * v.lpNorm<1>();
            if (!std::isfinite(dual_obj) || dual_obj < -blowup) {
                out.infeasible = true;
                return out;
            }
            continue;
        }

        op.reset(v);  // drop accumulated rounding before certifying
        const double quad = op.quad(v);
        const Eigen::VectorXd sv = op.full_sv();
        const double infeas = std::max(0.0, (sv - xi).cwiseAbs().maxCoeff() - lambda);
        const double gap = 2.0 * (quad - xi.dot(v) + lambda * v.lpNorm<1>());
        if (infeas <= feas_tol && gap <= opts.gap_tol * std::max(1.0, quad)) {
            out.sol.u_hat = v;
            out.sol.objective = std::max(0.0, quad);
            out.sol.infeasibility = infeas;
            out.sol.duality_gap = std::max(0.0, gap);
            out.sol.multiplier = -2.0 * v;
            out.sol.sweeps = sweeps;
            return out;
        }
        tol *= 0.01;
        if (tol < 1e-300) break;
    }

    const Eigen::VectorXd sv = op.full_sv();
    const double infeas = std::max(0.0, (sv - xi).cwiseAbs().maxCoeff() - lambda);
    if (infeas > feas_tol) {
        out.infeasible = true;
        return out;
    }
    fail(ErrorCode::MaxIterations, "score QP did not reach the duality-gap tolerance in " +
                                       std::to_string(opts.max_sweeps) + " sweeps");
}

void check_inputs(Eigen::Index p, const Eigen::VectorXd& xi, double lambda_n) {
    if (xi.size() != p) fail(ErrorCode::DimensionMismatch, "loading length differs from p");
    if (!xi.allFinite()) fail(ErrorCode::InvalidArgument, "loading has non-finite entries");
    if (xi.cwiseAbs().maxCoeff() == 0.0) fail(ErrorCode::InvalidArgument, "loading vector is zero");
    if (!(lambda_n > 0.0) || !std::isfinite(lambda_n)) fail(ErrorCode::InvalidArgument, "lambda_n must be positive");
}

template <class Op>
ScoreSolution solve_with_escalation(Op& op, const Eigen::VectorXd& xi, double lambda_n, const ScoreOptions& opts) {
    double lambda = lambda_n;
    const int budget = opts.auto_escalate ? opts.max_escalations : 0;
    for (int esc = 0; esc <= budget; ++esc) {
        Attempt a = solve_once(op, xi, lambda, opts);
        if (!a.infeasible) {
            a.sol.escalations = esc;
            return a.sol;
        }
        lambda *= opts.escalation_factor;
    }
    fail(ErrorCode::InfeasibleScoreQP, "score QP constraint set is empty at lambda_n = " + std::to_string(lambda_n) +
                                           (opts.auto_escalate ? " after escalation" : ""));
}

}  // namespace

double default_lambda_n(const Eigen::VectorXd& xi, double m1, Eigen::Index n, Eigen::Index p, double prefactor) {
    return prefactor * xi.norm() * m1 * m1 *
           std::sqrt(std::log(static_cast<double>(p)) / static_cast<double>(n));
}

ScoreSolution solve_score(const Eigen::MatrixXd& sigma_hat, const Eigen::VectorXd& xi, double lambda_n,
                          const ScoreOptions& opts) {
    const Eigen::Index p = sigma_hat.rows();
    if (sigma_hat.cols() != p) fail(ErrorCode::DimensionMismatch, "score matrix must be square");
    check_inputs(p, xi, lambda_n);
    if (!sigma_hat.allFinite()) fail(ErrorCode::NotPSD, "score matrix has non-finite entries");
    const double scale = std::max(1.0, sigma_hat.cwiseAbs().maxCoeff());
    if ((sigma_hat - sigma_hat.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale) {
        fail(ErrorCode::NotPSD, "score matrix is not symmetric");
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sigma_hat, Eigen::EigenvaluesOnly);
    if (eig.eigenvalues().minCoeff() < -1e-10 * scale) fail(ErrorCode::NotPSD, "score matrix has a negative eigenvalue");

    GramOperator op(sigma_hat);
    return solve_with_escalation(op, xi, lambda_n, opts);
}

ScoreSolution solve_score(const Dataset& data, const Eigen::VectorXd& xi, double lambda_n, const ScoreOptions& opts) {
    check_inputs(data.p(), xi, lambda_n);
    DesignOperator op(data.x());
    return solve_with_escalation(op, xi, lambda_n, opts);
}

DebiasedEstimate debiased_estimate(const Dataset& data, const Eigen::VectorXd& xi, const ScaledLassoFit& fit,
                                   const ScoreSolution& score) {
    const Eigen::Index p = data.p();
    if (xi.size() != p || fit.beta_hat.size() != p || score.u_hat.size() != p) {
        fail(ErrorCode::DimensionMismatch, "debiasing inputs disagree on p");
    }
    const double n = static_cast<double>(data.n());
    const Eigen::VectorXd resid = data.y() - data.x() * fit.beta_hat;
    const Eigen::VectorXd xu = data.x() * score.u_hat;

    DebiasedEstimate est;
    est.mu_tilde = xi.dot(fit.beta_hat) + xu.dot(resid) / n;
    est.variance_proxy = score.objective / n;
    est.fit = fit;
    est.score = score;
    return est;
}

double decomposition_residual(const Dataset& data, const Eigen::VectorXd& xi, const DebiasedEstimate& est,
                              const Eigen::VectorXd& beta) {
    if (beta.size() != data.p()) fail(ErrorCode::DimensionMismatch, "true beta has wrong length");
    const double n = static_cast<double>(data.n());
    const Eigen::VectorXd eps = data.y() - data.x() * beta;
    const Eigen::VectorXd xu = data.x() * est.score.u_hat;
    const Eigen::VectorXd su = data.x().transpose() * xu / n;
    const double lhs = est.mu_tilde - xi.dot(beta);
    const double rhs = xu.dot(eps) / n + (xi - su).dot(est.fit.beta_hat - beta);
    return std::abs(lhs - rhs);
}

SplitEstimate split_estimate(const Dataset& data, const Eigen::VectorXd& xi, double sigma0, std::uint64_t seed,
                             const LassoOptions& opts) {
    const int n = static_cast<int>(data.n());
    const Eigen::Index p = data.p();
    if (n < 4) fail(ErrorCode::DegenerateSplit, "sample splitting needs n >= 4");
    if (xi.size() != p) fail(ErrorCode::DimensionMismatch, "loading length differs from p");
    if (xi.cwiseAbs().maxCoeff() == 0.0) fail(ErrorCode::InvalidArgument, "loading vector is zero");
    if (!(sigma0 >= 0.0) || !std::isfinite(sigma0)) fail(ErrorCode::InvalidArgument, "sigma0 must be nonnegative");

    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    Philox rng(seed, kStreamSplit);
    for (int i = n - 1; i > 0; --i) {
        const auto j = static_cast<int>(rng.below(static_cast<std::uint64_t>(i + 1)));
        std::swap(perm[i], perm[j]);
    }

    const int half = n / 2;
    Eigen::MatrixXd x1(half, p), x2(half, p);
    Eigen::VectorXd y1(half), y2(half);
    for (int i = 0; i < half; ++i) {
        x1.row(i) = data.x().row(perm[i]);
        y1[i] = data.y()[perm[i]];
        x2.row(i) = data.x().row(perm[half + i]);
        y2[i] = data.y()[perm[half + i]];
    }

    SplitEstimate out;
    out.n1 = half;
    out.n2 = half;
    out.sigma0 = sigma0;
    out.dropped_observation = (n % 2) != 0;

    const Dataset first(std::move(x1), std::move(y1));
    const double lambda = std::max(default_lambda0(half, p) * sigma0, 1e-12);
    out.fit = lasso(first, lambda, opts);

    const Eigen::VectorXd resid2 = y2 - x2 * out.fit.beta_hat;
    out.mu_bar = xi.dot(out.fit.beta_hat) + (x2 * xi).dot(resid2) / static_cast<double>(half);
    return out;
}

}  // namespace hdci
