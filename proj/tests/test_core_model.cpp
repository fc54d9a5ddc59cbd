#include <doctest.h>

#include <cmath>
#include <random>

#include "hdci/core_model.hpp"

using namespace hdci;

namespace {

template <class F>
ErrorCode code_of(F&& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected an hdci::Error");
    return ErrorCode::InvalidArgument;
}

ModelParams params(Eigen::VectorXd beta, Eigen::MatrixXd omega, double sigma, double m1, double m2) {
    ModelParams m;
    m.beta = std::move(beta);
    m.omega = std::move(omega);
    m.sigma = sigma;
    m.m1 = m1;
    m.m2 = m2;
    return m;
}

}  // namespace

TEST_CASE("dataset rejects malformed input") {
    CHECK(code_of([] { Dataset(Eigen::MatrixXd::Ones(1, 2), Eigen::VectorXd::Ones(1)); }) ==
          ErrorCode::InvalidArgument);
    CHECK(code_of([] { Dataset(Eigen::MatrixXd::Ones(3, 2), Eigen::VectorXd::Ones(2)); }) ==
          ErrorCode::DimensionMismatch);
    Eigen::MatrixXd x = Eigen::MatrixXd::Ones(3, 2);
    x.col(1).setZero();
    CHECK(code_of([&] { Dataset(x, Eigen::VectorXd::Ones(3)); }) == ErrorCode::ZeroColumn);
    x.col(1).setOnes();
    x(0, 0) = std::nan("");
    CHECK(code_of([&] { Dataset(x, Eigen::VectorXd::Ones(3)); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("gram matrix is X'X/n") {
    Eigen::MatrixXd x(3, 2);
    x << 1, 2, 3, 4, 5, 6;
    const Dataset d(x, Eigen::VectorXd::Ones(3));
    const Eigen::MatrixXd expect = x.transpose() * x / 3.0;
    CHECK((d.gram() - expect).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("membership examples") {
    const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(3, 3);
    auto r = check_theta_membership(params(Eigen::VectorXd::Zero(3), id, 1.0, 10.0, 5.0), 0);
    CHECK(r.member);
    CHECK(r.violations.empty());

    r = check_theta_membership(params(Eigen::Vector3d(1, 0, 0), id, 1.0, 10.0, 5.0), 0);
    CHECK_FALSE(r.member);
    REQUIRE(r.violations.size() == 1);
    CHECK(r.violations[0] == "sparsity");

    Eigen::MatrixXd om = Eigen::Matrix2d::Zero();
    om.diagonal() << 0.05, 1.0;
    r = check_theta_membership(params(Eigen::VectorXd::Zero(2), om, 1.0, 10.0, 5.0), 1);
    CHECK_FALSE(r.member);
    REQUIRE(r.violations.size() == 1);
    CHECK(r.violations[0] == "eigenvalue band");

    r = check_theta_membership(params(Eigen::VectorXd::Zero(2), Eigen::Matrix2d::Identity(), 6.0, 10.0, 5.0), 0);
    CHECK(r.violations == std::vector<std::string>{"noise level"});

    Eigen::MatrixXd asym = Eigen::Matrix2d::Identity();
    asym(0, 1) = 1e-6;
    CHECK(code_of([&] { check_theta_membership(params(Eigen::VectorXd::Zero(2), asym, 1.0, 10.0, 5.0), 0); }) ==
          ErrorCode::NonSymmetricOmega);
}

TEST_CASE("membership is invariant to joint coordinate permutation") {
    std::mt19937_64 gen(11);
    std::normal_distribution<double> nd;
    for (int trial = 0; trial < 20; ++trial) {
        const int p = 5;
        Eigen::MatrixXd a(p, p);
        for (int i = 0; i < p * p; ++i) a.data()[i] = nd(gen);
        Eigen::MatrixXd om = a * a.transpose() / p + 0.3 * Eigen::MatrixXd::Identity(p, p);
        Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
        beta[trial % p] = 1.0;
        beta[(trial + 2) % p] = trial % 3 == 0 ? 0.0 : -2.0;
        Eigen::VectorXi idx = Eigen::VectorXi::LinSpaced(p, 0, p - 1);
        std::shuffle(idx.data(), idx.data() + p, gen);
        Eigen::PermutationMatrix<Eigen::Dynamic> perm(idx);
        const Eigen::MatrixXd om2 = perm * om * perm.transpose();
        const Eigen::VectorXd beta2 = perm * beta;
        for (int k : {0, 1, 2}) {
            const auto r1 = check_theta_membership(params(beta, om, 1.0, 4.0, 2.0), k);
            const auto r2 = check_theta_membership(params(beta2, om2, 1.0, 4.0, 2.0), k);
            CHECK(r1.member == r2.member);
            CHECK(r1.violations == r2.violations);
        }
    }
}

TEST_CASE("loading classification examples") {
    Eigen::VectorXd e1 = Eigen::VectorXd::Zero(500);
    e1[0] = 1.0;
    Loading l = classify_loading(e1, 500, 5, 0.2);
    CHECK(l.regime == LoadingRegime::Sparse);
    CHECK(l.q == 1);
    CHECK(l.cbar == 1.0);

    l = classify_loading(Eigen::VectorXd::Ones(500), 500, 5, 0.2);
    CHECK(l.regime == LoadingRegime::Dense);
    CHECK(l.q == 500);

    // 500^0.4 is about 12.0 and C k = 5, so q = 8 is in neither regime.
    Eigen::VectorXd mid = Eigen::VectorXd::Zero(500);
    mid.head(8).setConstant(1.0);
    CHECK(code_of([&] { classify_loading(mid, 500, 5, 0.2); }) == ErrorCode::MiddleRegimeLoading);

    Eigen::VectorXd forty = Eigen::VectorXd::Zero(500);
    forty.head(40).setConstant(2.0);
    forty[3] = -0.5;
    l = classify_loading(forty, 500, 5, 0.2);
    CHECK(l.regime == LoadingRegime::Dense);
    CHECK(l.cbar == doctest::Approx(4.0));

    CHECK(code_of([&] { classify_loading(Eigen::VectorXd::Zero(500), 500, 5, 0.2); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("loading classification is deterministic and total outside the middle regime") {
    std::mt19937_64 gen(5);
    for (int q = 1; q <= 60; ++q) {
        Eigen::VectorXd xi = Eigen::VectorXd::Zero(200);
        for (int i = 0; i < q; ++i) xi[(i * 37) % 200] = 1.0 + (gen() % 7);
        const double cut = std::pow(200.0, 0.4);
        if (q > 5 && q < cut) {
            CHECK_THROWS_AS(classify_loading(xi, 200, 5, 0.2), Error);
            continue;
        }
        const Loading a = classify_loading(xi, 200, 5, 0.2);
        const Loading b = classify_loading(xi, 200, 5, 0.2);
        CHECK(a.regime == b.regime);
        CHECK(a.q == q);
        CHECK(a.regime == (q <= 5 ? LoadingRegime::Sparse : LoadingRegime::Dense));
        CHECK(a.cbar >= 1.0);
    }
}

TEST_CASE("interval result invariants") {
    const IntervalResult r = IntervalResult::centered(0.3, 0.125, IntervalKind::SparseLoading);
    CHECK(r.lower <= r.upper);
    CHECK(r.center == 0.5 * (r.lower + r.upper));
    CHECK(r.covers(0.3));
    CHECK_FALSE(r.covers(0.5));

    std::mt19937_64 gen(3);
    std::uniform_real_distribution<double> c(-50.0, 50.0), rad(0.0, 3.0);
    for (int i = 0; i < 1000; ++i) {
        const IntervalResult s = IntervalResult::centered(c(gen), rad(gen), IntervalKind::DenseLoading);
        CHECK(s.center == 0.5 * (s.lower + s.upper));
        CHECK(std::abs((s.upper - s.lower) - 2.0 * s.radius) <= 4.0 * std::ldexp(1.0, -52) * (std::abs(s.center) + s.radius));
    }

    const IntervalResult z = IntervalResult::collapsed(IntervalKind::DenseLoading, 9.0);
    CHECK(z.degenerate);
    CHECK_FALSE(z.event_a);
    CHECK(z.lower == 0.0);
    CHECK(z.upper == 0.0);
    CHECK(z.sigma_hat == 9.0);
}

TEST_CASE("reference rate examples") {
    RateQuery q;
    q.regime = RateRegime::SparseUnknown;
    q.n = 100;
    q.log_p = 5;
    q.k = 0;
    CHECK(reference_rate(q) == doctest::Approx(0.1).epsilon(1e-14));

    q.regime = RateRegime::DenseUnknown;
    q.log_p = 4;
    q.k = 10;
    q.xi_linf = 2;
    CHECK(reference_rate(q) == doctest::Approx(4.0).epsilon(1e-14));

    q.regime = RateRegime::DenseKnownAdaptivity;
    q.n = 10000;
    q.k = 16;
    q.k1 = 1;
    q.xi_linf = 1;
    q.sigma0 = 1;
    CHECK(reference_rate(q) == doctest::Approx(0.32).epsilon(1e-14));
}

TEST_CASE("reference rate shape properties") {
    for (long n : {50L, 100L, 400L}) {
        double prev = -1.0;
        for (long k = 0; k <= 20; ++k) {
            const double r = reference_rate(RateQuery::from_dims(RateRegime::SparseUnknown, n, 300, k));
            CHECK(r >= prev);
            prev = r;
            const double a = reference_rate(RateQuery::from_dims(RateRegime::SparseUnknown, n, 300, k));
            const double b = reference_rate(RateQuery::from_dims(RateRegime::SparseUnknown, 2 * n, 300, k));
            CHECK(b < a);
        }
    }
    const double base = reference_rate(RateQuery::from_dims(RateRegime::SparseKnownIdentity, 100, 300, 0));
    for (long k = 1; k <= 30; ++k) {
        CHECK(reference_rate(RateQuery::from_dims(RateRegime::SparseKnownIdentity, 100, 300, k)) == base);
    }

    std::mt19937_64 gen(17);
    std::uniform_int_distribution<long> kk(1, 40), nn(20, 5000);
    std::uniform_real_distribution<double> lp(1.0, 9.0), l2(0.1, 3.0), ratio(1.0, 4.0);
    for (int i = 0; i < 500; ++i) {
        RateQuery q;
        q.n = static_cast<double>(nn(gen));
        q.log_p = lp(gen);
        q.k = static_cast<double>(kk(gen));
        q.k1 = q.k;
        q.xi_l2 = l2(gen);
        q.sigma0 = 1.0;
        q.xi_linf = q.xi_l2 * ratio(gen);
        q.regime = RateRegime::DenseKnownAdaptivity;
        const double dense = reference_rate(q);
        q.regime = RateRegime::SparseKnownIdentity;
        CHECK(dense >= reference_rate(q));
    }
}

TEST_CASE("enum string round trips") {
    for (IntervalKind k : {IntervalKind::SparseLoading, IntervalKind::DenseLoading, IntervalKind::KnownDesign}) {
        CHECK(interval_kind_from_string(to_string(k)) == k);
    }
    CHECK_THROWS_AS(interval_kind_from_string("bogus"), Error);
}
