#pragma once

#include <cstdint>
#include <utility>
#include <variant>

#include "hdci/core_model.hpp"

namespace hdci {

struct IdentityCovariance {};
struct Ar1Covariance {
    double rho = 0.0;
};
struct ExplicitCovariance {
    Eigen::MatrixXd sigma;
};
using CovarianceKind = std::variant<IdentityCovariance, Ar1Covariance, ExplicitCovariance>;

struct ExplicitBeta {
    Eigen::VectorXd beta;
};
/// k nonzeros of the given magnitude at the first k positions of a seeded
/// permutation, with signs alternating +, -, +, ...
struct RandomSupportBeta {
    int k = 0;
    double magnitude = 1.0;
};
using BetaSpec = std::variant<ExplicitBeta, RandomSupportBeta>;

struct SamplerConfig {
    std::uint64_t seed = 0;
    int n = 0;
    int p = 0;
    CovarianceKind covariance = IdentityCovariance{};
    BetaSpec beta = RandomSupportBeta{};
    double sigma = 1.0;
};

struct Instance {
    Dataset data;
    ModelParams truth;
};

/// Gaussian-design sampler. The covariance factor and precision matrix are
/// computed once at construction, so a single sampler can draw many
/// replicates cheaply; draws depend only on the seed passed to sample().
class DesignSampler {
public:
    explicit DesignSampler(const SamplerConfig& cfg);

    Instance sample(std::uint64_t seed) const;
    Instance sample() const { return sample(cfg_.seed); }

    /// Regression vector for a given seed (random-support specs depend on it).
    Eigen::VectorXd beta_for_seed(std::uint64_t seed) const;

    const SamplerConfig& config() const { return cfg_; }

private:
    Eigen::MatrixXd draw_design(std::uint64_t seed) const;

    SamplerConfig cfg_;
    Eigen::MatrixXd factor_;  // lower Cholesky factor; empty for Identity and AR(1)
    Eigen::MatrixXd omega_;
    double m1_ = 2.0;
};

/// One-shot convenience wrapper around DesignSampler.
Instance sample_instance(const SamplerConfig& cfg);

/// Upper quantile z with P(N(0,1) > z) = u, for 0 < u < 1.
double gaussian_quantile(double u);

/// Standard normal upper tail P(N(0,1) > z).
double gaussian_upper_tail(double z);

}  // namespace hdci
