#include <doctest.h>

#include <cmath>

#include "hdci/ci_construct.hpp"
#include "hdci/design_sampler.hpp"
#include "oracles.hpp"

using namespace hdci;

namespace {

Instance instance(int n, int p, int k, std::uint64_t seed, double sigma = 1.0, double magnitude = 1.0) {
    SamplerConfig cfg;
    cfg.n = n;
    cfg.p = p;
    cfg.seed = seed;
    cfg.sigma = sigma;
    cfg.beta = RandomSupportBeta{k, magnitude};
    return sample_instance(cfg);
}

Eigen::VectorXd unit(int p, int j) {
    Eigen::VectorXd e = Eigen::VectorXd::Zero(p);
    e[j] = 1.0;
    return e;
}

Constants small_constants() {
    Constants c;
    c.c1 = 1e-3;
    c.re = 1.0;
    c.c2 = 1e-3;
    c.cone = 1.0;
    c.omega = 0.05;
    c.lambda_n = 1.0;
    return c;
}

void check_shape(const IntervalResult& r) {
    CHECK(r.lower <= r.upper);
    if (r.degenerate) {
        CHECK(r.lower == 0.0);
        CHECK(r.upper == 0.0);
        return;
    }
    CHECK(r.center == 0.5 * (r.lower + r.upper));
    CHECK(std::abs((r.upper - r.lower) - 2.0 * r.radius) <= 4.0 * std::ldexp(1.0, -52) * (std::abs(r.center) + r.radius));
}

}  // namespace

TEST_CASE("known-design radius worked example") {
    const double z = oracle::upper_quantile(0.9 * 0.05 / 2.0);
    const double expect = 1.01 * 0.1 * z;
    const Eigen::VectorXd e1 = unit(400, 0);
    CHECK(std::abs(known_design_radius(e1, 100, 1.0, 0.05, 0.9) - expect) < 1e-9);
    CHECK(std::abs(known_design_radius(e1, 100, 1.0, 0.05, 0.9) - 0.202470) < 5e-7);
    CHECK(known_design_radius(3.0 * e1, 100, 1.0, 0.05, 0.9) ==
          doctest::Approx(3.0 * known_design_radius(e1, 100, 1.0, 0.05, 0.9)).epsilon(1e-15));

    const Instance inst = instance(200, 400, 5, 1);
    CIConfig cfg;
    const IntervalResult r = ci_known_design(inst.data, e1, 1.0, cfg, 7);
    CHECK(std::abs(r.radius - expect) < 1e-9);
    CHECK(r.regime == IntervalKind::KnownDesign);
    CHECK(r.diagnostics.at("n2") == 100.0);
    check_shape(r);
}

TEST_CASE("known-design radius does not depend on beta or k") {
    CIConfig cfg;
    const Eigen::VectorXd xi = unit(60, 2) + 0.5 * unit(60, 7);
    double first = -1.0;
    for (int k : {0, 1, 3, 10, 40}) {
        for (double mag : {0.1, 1.0, 5.0}) {
            const Instance inst = instance(80, 60, k, 10 + k, 1.0, mag);
            cfg.k = k;
            const double r = ci_known_design(inst.data, xi, 1.0, cfg, 3).radius;
            if (first < 0.0) first = r;
            CHECK(r == first);
        }
    }
}

TEST_CASE("known-design noiseless interval collapses on the truth") {
    SamplerConfig sc;
    sc.n = 60;
    sc.p = 8;
    sc.sigma = 0.0;
    Eigen::VectorXd beta = Eigen::VectorXd::Zero(8);
    beta[1] = 2.0;
    sc.beta = ExplicitBeta{beta};
    const Instance inst = sample_instance(sc);
    const IntervalResult r = ci_known_design(inst.data, unit(8, 1), 0.0, CIConfig{}, 5);
    CHECK(r.radius == 0.0);
    CHECK(std::abs(r.center - 2.0) < 1e-6);
}

TEST_CASE("sparse interval collapses off the event A") {
    // p = 2 gives log p < 1, far below the noise level.
    const Instance inst = instance(20, 2, 1, 3, 100.0);
    CIConfig cfg;
    cfg.k = 1;
    const IntervalResult r = ci_sparse(inst.data, unit(2, 0), cfg);
    CHECK(r.degenerate);
    CHECK_FALSE(r.event_a);
    CHECK(r.sigma_hat > std::log(2.0));
    check_shape(r);
    const IntervalResult d = ci_dense(inst.data, Eigen::VectorXd::Ones(2), cfg);
    CHECK(d.degenerate);
    check_shape(d);
}

TEST_CASE("faithful sparse radius never exceeds the cap") {
    CIConfig cfg;
    cfg.k = 5;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const Instance inst = instance(100, 500, 5, 100 + seed);
        const IntervalResult r = ci_sparse(inst.data, unit(500, 0), cfg);
        check_shape(r);
        if (r.degenerate) continue;
        const double lp = std::log(500.0);
        CHECK(r.radius <= lp * (1.0 / 10.0 + 5.0 * lp / 100.0) * r.sigma_hat * (1.0 + 1e-15));
        CHECK(r.diagnostics.at("branch") == 2.0);
        CHECK(r.diagnostics.at("mode") == 0.0);
    }
}

TEST_CASE("sparse radius pieces and coverage dominance") {
    for (std::uint64_t seed = 0; seed < 4; ++seed) {
        const Instance inst = instance(120, 150, 3, 200 + seed);
        const Eigen::VectorXd xi = unit(150, 0) - 0.5 * unit(150, 4);
        CIConfig faithful;
        faithful.k = 3;
        CIConfig oracle_mode = faithful;
        oracle_mode.mode = CIMode::OracleNormality;
        oracle_mode.lambda_n_override = default_lambda_n(xi, faithful.m1, 120, 150);
        const IntervalResult f = ci_sparse(inst.data, xi, faithful);
        const IntervalResult o = ci_sparse(inst.data, xi, oracle_mode);
        REQUIRE_FALSE(f.degenerate);
        // Same lambda_n, so the normality term is shared.
        CHECK(f.diagnostics.at("normality_radius") == doctest::Approx(o.radius).epsilon(1e-12));
        CHECK(f.radius >= std::min(o.radius, f.diagnostics.at("cap_radius")) * (1.0 - 1e-12));
        CHECK(o.diagnostics.at("mode") == 2.0);

        // Independent evaluation of the normality radius from its definition.
        const double z = oracle::upper_quantile(0.025);
        const double expect = 1.01 * std::sqrt(o.diagnostics.at("qp_objective") / 120.0) * z * o.sigma_hat;
        CHECK(o.radius == doctest::Approx(expect).epsilon(1e-9));
    }
}

TEST_CASE("sparse and dense radii are nondecreasing in k") {
    const Instance inst = instance(100, 120, 3, 77);
    const Eigen::VectorXd xi = unit(120, 0);
    for (CIMode mode : {CIMode::Faithful, CIMode::Rescaled}) {
        CIConfig cfg;
        cfg.mode = mode;
        cfg.constants = small_constants();
        double prev_s = 0.0, prev_d = 0.0;
        bool saw_branch1 = false;
        for (int k = 0; k <= 12; ++k) {
            cfg.k = k;
            const IntervalResult s = ci_sparse(inst.data, xi, cfg);
            const IntervalResult d = ci_dense(inst.data, Eigen::VectorXd::Ones(120), cfg);
            CHECK(s.radius >= prev_s * (1.0 - 1e-12));
            CHECK(d.radius >= prev_d * (1.0 - 1e-12));
            prev_s = s.radius;
            prev_d = d.radius;
            if (k > 0 && s.diagnostics.at("branch") == 1.0) saw_branch1 = true;
            CHECK(s.diagnostics.at("mode") == (mode == CIMode::Faithful ? 0.0 : 1.0));
        }
        if (mode == CIMode::Rescaled) CHECK(saw_branch1);
        if (mode == CIMode::Faithful) CHECK_FALSE(saw_branch1);
    }
}

TEST_CASE("dense radius is linear in k on the cap branch") {
    const Instance inst = instance(100, 300, 4, 8);
    CIConfig cfg;
    const Eigen::VectorXd xi = Eigen::VectorXd::Ones(300);
    cfg.k = 1;
    const IntervalResult one = ci_dense(inst.data, xi, cfg);
    REQUIRE(one.diagnostics.at("branch") == 2.0);
    const double lp = std::log(300.0);
    CHECK(one.radius == doctest::Approx(lp * std::sqrt(lp / 100.0) * one.sigma_hat).epsilon(1e-14));
    for (int k : {2, 4, 8, 16}) {
        cfg.k = k;
        const IntervalResult r = ci_dense(inst.data, xi, cfg);
        CHECK(r.diagnostics.at("branch") == 2.0);
        CHECK(r.radius == doctest::Approx(k * one.radius).epsilon(1e-13));
        CHECK(r.radius <= xi.cwiseAbs().maxCoeff() * lp * k * std::sqrt(lp / 100.0) * r.sigma_hat * (1.0 + 1e-15));
        check_shape(r);
    }
}

TEST_CASE("kappa source and capped reporting") {
    const Instance inst = instance(100, 120, 3, 9);
    CIConfig cfg;
    cfg.k = 3;
    IntervalResult r = ci_sparse(inst.data, unit(120, 0), cfg);
    CHECK(r.diagnostics.at("kappa_from_omega") == 1.0);
    CHECK(r.diagnostics.at("kappa_sq") == 0.0);
    CHECK(r.diagnostics.at("c1_capped") == 1.0);

    cfg.kappa_sq = 0.5;
    r = ci_sparse(inst.data, unit(120, 0), cfg);
    CHECK(r.diagnostics.at("kappa_from_omega") == 0.0);
    CHECK(r.diagnostics.at("c1_capped") == 0.0);
    CHECK(r.diagnostics.at("c1") == doctest::Approx(c1_constant(inst.data, 3, 0.5, 2.0)).epsilon(1e-15));
}

TEST_CASE("configuration validation") {
    const Instance inst = instance(50, 60, 2, 1);
    CIConfig cfg;
    cfg.alpha = 0.5;
    CHECK_THROWS_AS(ci_sparse(inst.data, unit(60, 0), cfg), Error);
    cfg = CIConfig{};
    cfg.mode = CIMode::OracleNormality;
    try {
        ci_dense(inst.data, Eigen::VectorXd::Ones(60), cfg);
        FAIL("expected ConfigError");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::ConfigError);
    }
    cfg = CIConfig{};
    CHECK_THROWS_AS(ci_sparse(inst.data, Eigen::VectorXd::Zero(60), cfg), Error);
    CHECK_THROWS_AS(ci_sparse(inst.data, Eigen::VectorXd::Zero(5), cfg), Error);
    cfg.loading_gamma = 0.2;
    cfg.k = 2;
    CHECK_THROWS_AS(ci_sparse(inst.data, Eigen::VectorXd::Ones(60), cfg), Error);
    CHECK_THROWS_AS(ci_dense(inst.data, unit(60, 0), cfg), Error);
    CHECK_NOTHROW(ci_dense(inst.data, Eigen::VectorXd::Ones(60), cfg));

    CHECK(ci_mode_from_string("rescaled") == CIMode::Rescaled);
    for (CIMode m : {CIMode::Faithful, CIMode::Rescaled, CIMode::OracleNormality}) {
        CHECK(ci_mode_from_string(to_string(m)) == m);
    }
    CHECK_THROWS_AS(ci_mode_from_string("loose"), Error);
}

TEST_CASE("strict score QP surfaces infeasibility, escalation recovers") {
    // For this instance the constraint set is empty below lambda_n of about 0.25.
    const Instance inst = instance(30, 200, 2, 4);
    CIConfig cfg;
    cfg.mode = CIMode::OracleNormality;
    cfg.lambda_n_override = 0.1;
    try {
        ci_sparse(inst.data, unit(200, 0), cfg);
        FAIL("expected InfeasibleScoreQP");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::InfeasibleScoreQP);
        CHECK(e.is_solver_failure());
    }
    cfg.escalate = true;
    const IntervalResult r = ci_sparse(inst.data, unit(200, 0), cfg);
    CHECK(r.diagnostics.at("escalations") >= 2.0);
    CHECK(r.diagnostics.at("lambda_n") == doctest::Approx(0.1 * std::pow(1.5, r.diagnostics.at("escalations"))));
    CHECK(r.diagnostics.at("qp_infeasibility") <= 1e-8 * 2.0);
}
