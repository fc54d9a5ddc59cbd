#include "hdci/lb_calculator.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace hdci {

namespace {

// log C(n, r) as a sum of logs; exact enough for n up to ~1e7 and small r.
double log_binomial(long n, long r) {
    if (r < 0 || r > n) return -INFINITY;
    r = std::min(r, n - r);
    double s = 0.0;
    for (long i = 1; i <= r; ++i) s += std::log(static_cast<double>(n - r + i)) - std::log(static_cast<double>(i));
    return s;
}

// Neumaier compensated summation.
class Sum {
public:
    void add(double x) {
        const double t = sum_ + x;
        if (std::abs(sum_) >= std::abs(x)) {
            comp_ += (sum_ - t) + x;
        } else {
            comp_ += (x - t) + sum_;
        }
        sum_ = t;
    }
    double value() const { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

}  // namespace

double two_point_length_bound(const TwoPointProblem& tp) {
    if (!(tp.alpha > 0.0 && tp.alpha < 0.5)) fail(ErrorCode::InvalidArgument, "alpha must lie in (0, 1/2)");
    if (!(tp.tv >= 0.0)) fail(ErrorCode::InvalidArgument, "total variation must be nonnegative");
    return std::abs(tp.mu1 - tp.mu0) * std::max(0.0, 1.0 - 2.0 * tp.alpha - tp.tv);
}

void MixtureSpec::validate() const {
    if (n < 1) fail(ErrorCode::InvalidArgument, "mixture needs n >= 1");
    if (p1 < 1 || m < 1 || m > p1) fail(ErrorCode::InvalidArgument, "mixture needs 1 <= m <= p1");
    if (!(rho >= 0.0) || !std::isfinite(rho)) fail(ErrorCode::InvalidArgument, "rho must be nonnegative");
    if (!(sigma > 0.0)) fail(ErrorCode::InvalidArgument, "sigma must be positive");
    if (!std::isfinite(psi1_star) || !std::isfinite(rho0)) fail(ErrorCode::InvalidArgument, "psi1* and rho0 must be finite");
}

double mixture_multiplier(const MixtureSpec& spec) {
    // rho0 (rho0 - psi1*) + sigma^2 + psi1*^2 - rho0 psi1* = (rho0 - psi1*)^2 + sigma^2; the
    // factored form avoids cancelling psi1*^2 terms.
    const double d = (spec.rho0 - spec.psi1_star) / spec.sigma;
    return 1.0 + d * d;
}

std::vector<double> hypergeom_overlap_pmf(long p, long k) {
    if (p < 1 || k < 0 || k > p) fail(ErrorCode::InvalidArgument, "overlap pmf needs 0 <= k <= p");
    std::vector<double> pmf(static_cast<std::size_t>(k) + 1, 0.0);
    const double log_total = log_binomial(p, k);
    for (long j = std::max(0L, 2 * k - p); j <= k; ++j) {
        pmf[static_cast<std::size_t>(j)] = std::exp(log_binomial(k, j) + log_binomial(p - k, k - j) - log_total);
    }
    return pmf;
}

double chisq_mixture(const MixtureSpec& spec) {
    spec.validate();
    const double c = mixture_multiplier(spec);
    const double r2 = spec.rho * spec.rho;
    if (c * static_cast<double>(spec.m) * r2 >= 1.0) {
        fail(ErrorCode::DivergentChiSq, "c m rho^2 >= 1: the chi-square expectation diverges");
    }
    const std::vector<double> pmf = hypergeom_overlap_pmf(spec.p1, spec.m);
    const double n = static_cast<double>(spec.n);
    Sum total;
    for (std::size_t j = 0; j < pmf.size(); ++j) {
        if (pmf[j] == 0.0) continue;
        // (1 - c rho^2 j)^(-n) - 1, accurate for small c rho^2 j.
        total.add(pmf[j] * std::expm1(-n * std::log1p(-c * r2 * static_cast<double>(j))));
    }
    return total.value();
}

double tv_upper_from_chisq(double chisq) {
    if (!(chisq >= 0.0)) fail(ErrorCode::InvalidArgument, "chi-square must be nonnegative");
    return std::sqrt(chisq);
}

MgfCheck hypergeom_mgf_bound_check(long p, long k, double t) {
    if (k < 1 || k >= p) fail(ErrorCode::InvalidArgument, "MGF bound needs 1 <= k < p");
    if (!std::isfinite(t)) fail(ErrorCode::InvalidArgument, "t must be finite");
    const std::vector<double> pmf = hypergeom_overlap_pmf(p, k);
    Sum exact;
    for (std::size_t j = 0; j < pmf.size(); ++j) exact.add(pmf[j] * std::exp(t * static_cast<double>(j)));
    const double kp = static_cast<double>(k) / static_cast<double>(p);
    MgfCheck out;
    out.exact = exact.value();
    out.bound = std::exp(static_cast<double>(k * k) / static_cast<double>(p - k)) *
                std::pow(1.0 - kp + kp * std::exp(t), static_cast<double>(k));
    return out;
}

double separation_gap(const MixtureSpec& spec) {
    spec.validate();
    const double norm_sq = static_cast<double>(spec.m) * spec.rho * spec.rho;
    if (norm_sq >= 1.0) fail(ErrorCode::GapDiverges, "m rho^2 >= 1: the separation gap is undefined");
    return std::abs(spec.rho0 - spec.psi1_star) * norm_sq / (1.0 - norm_sq);
}

AdaptivityBound adaptivity_lower_curve(long n, long p, long k, long k1, double alpha, double zeta0, double sigma) {
    if (!(alpha > 0.0 && alpha < 0.5)) fail(ErrorCode::InvalidArgument, "alpha must lie in (0, 1/2)");
    if (!(zeta0 > 0.0 && zeta0 <= 1.0)) fail(ErrorCode::InvalidArgument, "zeta0 must lie in (0, 1]");
    if (n < 1 || k < 1 || k1 < 0 || k1 > k) fail(ErrorCode::InvalidArgument, "need n >= 1 and 0 <= k1 <= k, k >= 1");

    AdaptivityBound out;
    out.p1 = p - k1 - 1;
    out.m = std::max(1L, static_cast<long>(std::floor(zeta0 * static_cast<double>(k) / 2.0)));
    if (out.p1 < out.m) fail(ErrorCode::InvalidArgument, "p too small for the mixture support");
    const double kk = static_cast<double>(k);
    const double arg = 4.0 * static_cast<double>(out.p1) / (zeta0 * zeta0 * kk * kk);
    if (!(arg > 1.0)) fail(ErrorCode::InvalidArgument, "need 4 p1 > zeta0^2 k^2 for a positive spike");
    out.rho = std::sqrt(std::log(arg) / (8.0 * static_cast<double>(n)));

    MixtureSpec spec;
    spec.n = n;
    spec.p1 = out.p1;
    spec.m = out.m;
    spec.rho = out.rho;
    spec.sigma = sigma;
    spec.psi1_star = 0.0;
    spec.rho0 = sigma;

    out.chisq = chisq_mixture(spec);
    out.tv = tv_upper_from_chisq(out.chisq);
    out.gap = separation_gap(spec);
    out.bound = two_point_length_bound({0.0, out.gap, alpha, out.tv});
    return out;
}

}  // namespace hdci
