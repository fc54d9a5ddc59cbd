#include "hdci/core_model.hpp"

#include <algorithm>
#include <cmath>
#include <Eigen/Eigenvalues>

namespace hdci {

const char* to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::InvalidArgument: return "InvalidArgument";
        case ErrorCode::DimensionMismatch: return "DimensionMismatch";
        case ErrorCode::NonSymmetricOmega: return "NonSymmetricOmega";
        case ErrorCode::MiddleRegimeLoading: return "MiddleRegimeLoading";
        case ErrorCode::NotSPD: return "NotSPD";
        case ErrorCode::NotPSD: return "NotPSD";
        case ErrorCode::OutOfRange: return "OutOfRange";
        case ErrorCode::ZeroColumn: return "ZeroColumn";
        case ErrorCode::DegenerateResponse: return "DegenerateResponse";
        case ErrorCode::MaxIterations: return "MaxIterations";
        case ErrorCode::InfeasibleScoreQP: return "InfeasibleScoreQP";
        case ErrorCode::DegenerateSplit: return "DegenerateSplit";
        case ErrorCode::OracleTooLarge: return "OracleTooLarge";
        case ErrorCode::BadEigenOrder: return "BadEigenOrder";
        case ErrorCode::ZeroKappa: return "ZeroKappa";
        case ErrorCode::DivergentChiSq: return "DivergentChiSq";
        case ErrorCode::GapDiverges: return "GapDiverges";
        case ErrorCode::ConfigError: return "ConfigError";
        case ErrorCode::IoError: return "IoError";
    }
    return "Unknown";
}

Dataset::Dataset(Eigen::MatrixXd x, Eigen::VectorXd y) : x_(std::move(x)), y_(std::move(y)) {
    if (x_.rows() < 2) fail(ErrorCode::InvalidArgument, "dataset needs n >= 2 observations");
    if (x_.cols() < 1) fail(ErrorCode::InvalidArgument, "dataset needs p >= 1 covariates");
    if (y_.size() != x_.rows()) {
        fail(ErrorCode::DimensionMismatch, "y has " + std::to_string(y_.size()) + " entries but X has " +
                                               std::to_string(x_.rows()) + " rows");
    }
    if (!x_.allFinite() || !y_.allFinite()) fail(ErrorCode::InvalidArgument, "non-finite entry in X or y");
    for (Eigen::Index j = 0; j < x_.cols(); ++j) {
        if ((x_.col(j).array() == 0.0).all()) {
            fail(ErrorCode::ZeroColumn, "column " + std::to_string(j) + " of X is identically zero");
        }
    }
}

Eigen::MatrixXd Dataset::gram() const {
    Eigen::MatrixXd g = Eigen::MatrixXd::Zero(p(), p());
    g.selfadjointView<Eigen::Lower>().rankUpdate(x_.transpose(), 1.0 / static_cast<double>(n()));
    return g.selfadjointView<Eigen::Lower>();
}

MembershipResult check_theta_membership(const ModelParams& params, int k) {
    const auto& omega = params.omega;
    if (omega.rows() != omega.cols() || omega.rows() != params.beta.size()) {
        fail(ErrorCode::DimensionMismatch, "omega must be p x p with p = beta.size()");
    }
    const double scale = std::max(1.0, omega.cwiseAbs().maxCoeff());
    if ((omega - omega.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale) {
        fail(ErrorCode::NonSymmetricOmega, "omega is not symmetric to 1e-10 relative tolerance");
    }

    MembershipResult out;
    const long nnz = (params.beta.array() != 0.0).count();
    if (nnz > k) out.violations.emplace_back("sparsity");

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(omega, Eigen::EigenvaluesOnly);
    const double lo = eig.eigenvalues().minCoeff();
    const double hi = eig.eigenvalues().maxCoeff();
    if (lo < 1.0 / params.m1 || hi > params.m1) out.violations.emplace_back("eigenvalue band");

    if (!(params.sigma > 0.0) || params.sigma > params.m2) out.violations.emplace_back("noise level");

    out.member = out.violations.empty();
    return out;
}

Loading classify_loading(const Eigen::VectorXd& xi, int p, int k, double gamma, double capital_c,
                         double c_dense) {
    if (xi.size() != p) fail(ErrorCode::DimensionMismatch, "loading length differs from p");
    if (!(gamma >= 0.0 && gamma < 0.5)) fail(ErrorCode::InvalidArgument, "gamma must lie in [0, 1/2)");

    Loading out;
    out.xi = xi;
    double max_abs = 0.0;
    double min_abs = std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < xi.size(); ++j) {
        const double a = std::abs(xi[j]);
        if (a == 0.0) continue;
        ++out.q;
        max_abs = std::max(max_abs, a);
        min_abs = std::min(min_abs, a);
    }
    if (out.q == 0) fail(ErrorCode::InvalidArgument, "loading vector is identically zero");
    out.cbar = max_abs / min_abs;

    const double q = out.q;
    const double sparse_cut = capital_c * k;
    const double dense_cut = c_dense * std::pow(static_cast<double>(p), 2.0 * gamma);
    if (q <= sparse_cut) {
        out.regime = LoadingRegime::Sparse;
    } else if (q > dense_cut) {
        out.regime = LoadingRegime::Dense;
    } else {
        fail(ErrorCode::MiddleRegimeLoading,
             "support size " + std::to_string(out.q) + " exceeds C*k = " + std::to_string(sparse_cut) +
                 " but not c*p^(2 gamma) = " + std::to_string(dense_cut));
    }
    return out;
}

const char* to_string(IntervalKind kind) {
    switch (kind) {
        case IntervalKind::SparseLoading: return "sparse";
        case IntervalKind::DenseLoading: return "dense";
        case IntervalKind::KnownDesign: return "known";
    }
    return "sparse";
}

IntervalKind interval_kind_from_string(const std::string& s) {
    if (s == "sparse") return IntervalKind::SparseLoading;
    if (s == "dense") return IntervalKind::DenseLoading;
    if (s == "known") return IntervalKind::KnownDesign;
    fail(ErrorCode::ConfigError, "unknown interval kind '" + s + "' (expected sparse|dense|known)");
}

IntervalResult IntervalResult::centered(double center, double radius, IntervalKind regime) {
    IntervalResult r;
    r.regime = regime;
    r.radius = radius;
    r.lower = center - radius;
    r.upper = center + radius;
    // Recompute from the endpoints so that center == (lower + upper) / 2 holds bit-for-bit.
    r.center = 0.5 * (r.lower + r.upper);
    return r;
}

IntervalResult IntervalResult::collapsed(IntervalKind regime, double sigma_hat) {
    IntervalResult r;
    r.regime = regime;
    r.sigma_hat = sigma_hat;
    r.event_a = false;
    r.degenerate = true;
    return r;
}

RateQuery RateQuery::from_dims(RateRegime regime, long n, long p, long k, long k1) {
    RateQuery q;
    q.regime = regime;
    q.n = static_cast<double>(n);
    q.log_p = std::log(static_cast<double>(p));
    q.k = static_cast<double>(k);
    q.k1 = static_cast<double>(k1);
    return q;
}

double reference_rate(const RateQuery& q) {
    if (!(q.n > 0.0) || q.k < 0.0 || q.k1 < 0.0 || q.log_p < 0.0) {
        fail(ErrorCode::InvalidArgument, "rate query needs n > 0, k, k1 >= 0 and p >= 1");
    }
    const double root = std::sqrt(q.log_p / q.n);
    switch (q.regime) {
        case RateRegime::SparseUnknown:
            return q.xi_l2 * (1.0 / std::sqrt(q.n) + q.k * q.log_p / q.n);
        case RateRegime::DenseUnknown:
            return q.xi_linf * q.k * root;
        case RateRegime::SparseKnownIdentity:
            return q.xi_l2 / std::sqrt(q.n);
        case RateRegime::DenseKnownAdaptivity: {
            const double adaptive = std::sqrt(q.k * q.k1) * root;
            const double capped = std::min(q.k * root, std::sqrt(q.k) / std::pow(q.n, 0.25));
            return q.xi_linf * q.sigma0 * std::max(adaptive, capped);
        }
    }
    return 0.0;
}

}  // namespace hdci
