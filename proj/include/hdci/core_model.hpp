#pragma once

#include <Eigen/Dense>
#include <map>
#include <string>
#include <vector>

#include "hdci/errors.hpp"

namespace hdci {

/// Observed data Z = (y, X): n observations of p covariates.
///
/// Construction validates the invariants every estimator relies on: n >= 2,
/// p >= 1, finite entries and no all-zero column of X.
class Dataset {
public:
    Dataset(Eigen::MatrixXd x, Eigen::VectorXd y);

    const Eigen::MatrixXd& x() const { return x_; }
    const Eigen::VectorXd& y() const { return y_; }
    Eigen::Index n() const { return x_.rows(); }
    Eigen::Index p() const { return x_.cols(); }

    /// Euclidean norms of the columns of X.
    Eigen::VectorXd column_norms() const { return x_.colwise().norm().transpose(); }

    /// Sample Gram matrix X^T X / n.
    Eigen::MatrixXd gram() const;

private:
    Eigen::MatrixXd x_;
    Eigen::VectorXd y_;
};

/// Ground-truth parameter triple (beta, Omega, sigma) plus the band constants
/// M1 and M2 of the parameter space.
struct ModelParams {
    Eigen::VectorXd beta;
    Eigen::MatrixXd omega;
    double sigma = 1.0;
    double m1 = 2.0;
    double m2 = 1.0;
};

struct MembershipResult {
    bool member = false;
    std::vector<std::string> violations;
};

/// Checks theta against the k-sparse parameter space: ||beta||_0 <= k, the
/// spectrum of Omega inside [1/M1, M1] and 0 < sigma <= M2. Violations are
/// named "sparsity", "eigenvalue band" and "noise level".
MembershipResult check_theta_membership(const ModelParams& params, int k);

enum class LoadingRegime { Sparse, Dense };

struct Loading {
    Eigen::VectorXd xi;
    LoadingRegime regime = LoadingRegime::Sparse;
    int q = 0;
    double cbar = 1.0;
};

/// Sparse if q <= capital_c * k, dense if q > c_dense * p^(2 gamma) and
/// q > capital_c * k. Anything else is the unresolved middle regime and throws
/// MiddleRegimeLoading.
Loading classify_loading(const Eigen::VectorXd& xi, int p, int k, double gamma,
                         double capital_c = 1.0, double c_dense = 1.0);

enum class IntervalKind { SparseLoading, DenseLoading, KnownDesign };

const char* to_string(IntervalKind kind);
IntervalKind interval_kind_from_string(const std::string& s);

struct IntervalResult {
    double lower = 0.0;
    double upper = 0.0;
    double center = 0.0;
    double radius = 0.0;
    IntervalKind regime = IntervalKind::SparseLoading;
    double sigma_hat = 0.0;
    bool event_a = true;
    bool degenerate = false;
    std::map<std::string, double> diagnostics;

    double length() const { return upper - lower; }
    bool covers(double value) const { return lower <= value && value <= upper; }

    /// Interval [center - radius, center + radius].
    static IntervalResult centered(double center, double radius, IntervalKind regime);
    /// The collapsed {0} interval returned off the event A.
    static IntervalResult collapsed(IntervalKind regime, double sigma_hat);
};

enum class RateRegime { SparseUnknown, DenseUnknown, SparseKnownIdentity, DenseKnownAdaptivity };

/// Inputs of the reference minimax-rate expressions. The dimension enters
/// only through log_p (natural logarithm of p).
struct RateQuery {
    RateRegime regime = RateRegime::SparseUnknown;
    double n = 1.0;
    double log_p = 0.0;
    double k = 0.0;
    double k1 = 0.0;
    double xi_l2 = 1.0;
    double xi_linf = 1.0;
    double sigma0 = 1.0;

    static RateQuery from_dims(RateRegime regime, long n, long p, long k, long k1 = 0);
};

/// Rate expressions with unit constants. All comparisons downstream are up
/// to constants.
double reference_rate(const RateQuery& q);

}  // namespace hdci
