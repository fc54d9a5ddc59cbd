#include "hdci/design_sampler.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "hdci/rng.hpp"

namespace hdci {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

Eigen::MatrixXd ar1_precision(int p, double rho) {
    Eigen::MatrixXd omega = Eigen::MatrixXd::Zero(p, p);
    const double scale = 1.0 / (1.0 - rho * rho);
    for (int j = 0; j < p; ++j) {
        omega(j, j) = (j == 0 || j == p - 1) ? scale : (1.0 + rho * rho) * scale;
        if (j + 1 < p) {
            omega(j, j + 1) = -rho * scale;
            omega(j + 1, j) = -rho * scale;
        }
    }
    if (p == 1) omega(0, 0) = 1.0;
    return omega;
}

}  // namespace

DesignSampler::DesignSampler(const SamplerConfig& cfg) : cfg_(cfg) {
    if (cfg_.n < 1 || cfg_.p < 1) fail(ErrorCode::InvalidArgument, "sampler needs n >= 1 and p >= 1");
    if (!(cfg_.sigma >= 0.0)) fail(ErrorCode::InvalidArgument, "noise level must be nonnegative");

    std::visit(overloaded{
                   [&](const IdentityCovariance&) {
                       omega_ = Eigen::MatrixXd::Identity(cfg_.p, cfg_.p);
                       m1_ = 2.0;
                   },
                   [&](const Ar1Covariance& ar) {
                       if (!(ar.rho > -1.0 && ar.rho < 1.0)) {
                           fail(ErrorCode::InvalidArgument, "AR(1) correlation must lie in (-1, 1)");
                       }
                       omega_ = ar1_precision(cfg_.p, ar.rho);
                       const double a = std::abs(ar.rho);
                       m1_ = std::max(2.0, (1.0 + a) / (1.0 - a));
                   },
                   [&](const ExplicitCovariance& ex) {
                       const auto& s = ex.sigma;
                       if (s.rows() != cfg_.p || s.cols() != cfg_.p) {
                           fail(ErrorCode::DimensionMismatch, "explicit covariance must be p x p");
                       }
                       const double scale = std::max(1.0, s.cwiseAbs().maxCoeff());
                       if ((s - s.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale) {
                           fail(ErrorCode::NotSPD, "explicit covariance is not symmetric");
                       }
                       Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(s, Eigen::EigenvaluesOnly);
                       const double lo = eig.eigenvalues().minCoeff();
                       const double hi = eig.eigenvalues().maxCoeff();
                       if (!(lo > 0.0)) fail(ErrorCode::NotSPD, "explicit covariance has eigenvalue <= 0");
                       Eigen::LLT<Eigen::MatrixXd> llt(s);
                       if (llt.info() != Eigen::Success) fail(ErrorCode::NotSPD, "Cholesky factorization failed");
                       factor_ = llt.matrixL();
                       omega_ = llt.solve(Eigen::MatrixXd::Identity(cfg_.p, cfg_.p));
                       omega_ = 0.5 * (omega_ + omega_.transpose()).eval();
                       m1_ = std::max({2.0, hi, 1.0 / lo});
                   },
               },
               cfg_.covariance);

    std::visit(overloaded{
                   [&](const ExplicitBeta& b) {
                       if (b.beta.size() != cfg_.p) fail(ErrorCode::DimensionMismatch, "beta must have length p");
                   },
                   [&](const RandomSupportBeta& b) {
                       if (b.k < 0 || b.k > cfg_.p) fail(ErrorCode::InvalidArgument, "random support needs 0 <= k <= p");
                   },
               },
               cfg_.beta);
}

Eigen::VectorXd DesignSampler::beta_for_seed(std::uint64_t seed) const {
    return std::visit(overloaded{
                          [](const ExplicitBeta& b) -> Eigen::VectorXd { return b.beta; },
                          [&](const RandomSupportBeta& b) -> Eigen::VectorXd {
                              Philox rng(seed, kStreamBeta);
                              std::vector<int> perm(cfg_.p);
                              std::iota(perm.begin(), perm.end(), 0);
                              // Partial Fisher-Yates: only the first k slots are needed.
                              for (int i = 0; i < b.k; ++i) {
                                  const auto j = i + static_cast<int>(rng.below(static_cast<std::uint64_t>(cfg_.p - i)));
                                  std::swap(perm[i], perm[j]);
                              }
                              Eigen::VectorXd beta = Eigen::VectorXd::Zero(cfg_.p);
                              for (int i = 0; i < b.k; ++i) beta[perm[i]] = (i % 2 == 0) ? b.magnitude : -b.magnitude;
                              return beta;
                          },
                      },
                      cfg_.beta);
}

Eigen::MatrixXd DesignSampler::draw_design(std::uint64_t seed) const {
    const int n = cfg_.n;
    const int p = cfg_.p;
    Philox rng(seed, kStreamDesign);
    Eigen::MatrixXd z(n, p);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < p; ++j) z(i, j) = rng.normal();
    }
    if (const auto* ar = std::get_if<Ar1Covariance>(&cfg_.covariance)) {
        const double rho = ar->rho;
        const double innov = std::sqrt(1.0 - rho * rho);
        for (int i = 0; i < n; ++i) {
            for (int j = 1; j < p; ++j) z(i, j) = rho * z(i, j - 1) + innov * z(i, j);
        }
        return z;
    }
    if (factor_.size() > 0) return z * factor_.transpose();
    return z;
}

Instance DesignSampler::sample(std::uint64_t seed) const {
    Eigen::VectorXd beta = beta_for_seed(seed);
    Eigen::MatrixXd x = draw_design(seed);
    Philox noise(seed, kStreamNoise);
    Eigen::VectorXd eps = noise.normals(cfg_.n);
    Eigen::VectorXd y = x * beta + cfg_.sigma * eps;

    ModelParams truth;
    truth.beta = std::move(beta);
    truth.omega = omega_;
    truth.sigma = cfg_.sigma;
    truth.m1 = m1_;
    truth.m2 = std::max(1.0, cfg_.sigma);
    return Instance{Dataset(std::move(x), std::move(y)), std::move(truth)};
}

Instance sample_instance(const SamplerConfig& cfg) { return DesignSampler(cfg).sample(); }

double gaussian_upper_tail(double z) { return 0.5 * std::erfc(z / std::numbers::sqrt2); }

double gaussian_quantile(double u) {
    if (!(u > 0.0 && u < 1.0)) fail(ErrorCode::OutOfRange, "quantile level must lie in (0, 1)");

    // Acklam's rational approximation of the lower quantile Phi^{-1}(u),
    // relative error below 1.15e-9, followed by one Halley step.
    static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
                                   1.383577518672690e+02,  -3.066479806614716e+01, 2.506628277459239e+00};
    static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
                                   6.680131188771972e+01,  -1.328068155288572e+01};
    static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
                                   -2.549732539343734e+00, 4.374664141464968e+00,  2.938163982698783e+00};
    static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
                                   3.754408661907416e+00};
    constexpr double p_low = 0.02425;

    double x;
    if (u < p_low) {
        const double q = std::sqrt(-2.0 * std::log(u));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    } else if (u <= 1.0 - p_low) {
        const double q = u - 0.5;
        const double r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    } else {
        const double q = std::sqrt(-2.0 * std::log1p(-u));
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }

    const double e = 0.5 * std::erfc(-x / std::numbers::sqrt2) - u;
    const double step = e * std::sqrt(2.0 * std::numbers::pi) * std::exp(0.5 * x * x);
    x -= step / (1.0 + 0.5 * x * step);

    return x == 0.0 ? 0.0 : -x;
}

}  // namespace hdci
