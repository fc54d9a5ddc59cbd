#pragma once

#include <vector>

#include "hdci/errors.hpp"

namespace hdci {

struct TwoPointProblem {
    double mu0 = 0.0;
    double mu1 = 0.0;
    double alpha = 0.05;
    double tv = 0.0;
};

/// |mu1 - mu0| * (1 - 2 alpha - tv)_+.
double two_point_length_bound(const TwoPointProblem& tp);

/// Null-versus-mixture testing problem: delta uniform over p1-vectors with m
/// entries equal to rho and the rest zero.
struct MixtureSpec {
    long n = 1;
    long p1 = 1;
    long m = 1;
    double rho = 0.0;
    double sigma = 1.0;
    double psi1_star = 0.0;
    double rho0 = 1.0;

    void validate() const;
};

/// (rho0 (rho0 - psi1*) + sigma^2 + psi1*^2 - rho0 psi1*) / sigma^2, which equals
/// 1 + ((rho0 - psi1*) / sigma)^2.
double mixture_multiplier(const MixtureSpec& spec);

/// P(J = j), j = 0..k, for J ~ Hypergeometric(p, k, k): the overlap of two
/// independent uniform k-subsets of a p-set.
std::vector<double> hypergeom_overlap_pmf(long p, long k);

/// Exact chi-square distance E(1 - c rho^2 J)^(-n) - 1 with J the support
/// overlap, J ~ Hypergeometric(p1, m, m).
double chisq_mixture(const MixtureSpec& spec);

/// sqrt(chisq).
double tv_upper_from_chisq(double chisq);

struct MgfCheck {
    double exact = 0.0;
    double bound = 0.0;
};

/// Exact E exp(tJ), J ~ Hypergeometric(p, k, k), and the bound
/// e^{k^2/(p-k)} (1 - k/p + (k/p) e^t)^k.
MgfCheck hypergeom_mgf_bound_check(long p, long k, double t);

/// |rho0 - psi1*| m rho^2 / (1 - m rho^2); equals sigma m rho^2 / (1 - m rho^2)
/// when rho0 = psi1* + sigma.
double separation_gap(const MixtureSpec& spec);

struct AdaptivityBound {
    double bound = 0.0;
    double chisq = 0.0;
    double tv = 0.0;
    double gap = 0.0;
    double rho = 0.0;
    long m = 0;
    long p1 = 0;
};

/// Expected-length lower bound for intervals that must cover over k-sparse
/// truths while being evaluated at a k1-sparse null: p1 = p - k1 - 1,
/// m = max(1, floor(zeta0 k / 2)), rho = sqrt(log(4 p1 / (zeta0^2 k^2)) / (8 n)),
/// psi1* = 0 and rho0 = sigma.
AdaptivityBound adaptivity_lower_curve(long n, long p, long k, long k1, double alpha, double zeta0, double sigma);

}  // namespace hdci
