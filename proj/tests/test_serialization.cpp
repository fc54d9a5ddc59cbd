#include <doctest.h>

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>

#include "hdci/serialization.hpp"
#include "oracles.hpp"

using namespace hdci;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / "hdci_serialization_test";
    fs::create_directories(dir);
    return dir / name;
}

void write_file(const fs::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    out << text;
}

ErrorCode code_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected an hdci::Error");
    return ErrorCode::InvalidArgument;
}

}  // namespace

TEST_CASE("format_double round-trips every double it prints") {
    std::mt19937_64 gen(17);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int i = 0; i < 2000; ++i) {
        const double v = std::ldexp(u(gen), static_cast<int>(i % 80) - 40);
        CHECK(std::stod(format_double(v)) == v);
    }
    CHECK(format_double(0.5) == "0.5");
    CHECK(format_double(3.0) == "3");
    const double tiny = std::numeric_limits<double>::denorm_min();
    const std::string t = format_double(tiny);
    double back = 0.0;
    std::from_chars(t.data(), t.data() + t.size(), back);
    CHECK(back == tiny);
}

TEST_CASE("interval results round-trip exactly through JSON text") {
    IntervalResult r;
    r.lower = -0.1234567890123456789;
    r.upper = 0.3;
    r.center = 0.5 * (r.lower + r.upper);
    r.radius = 0.5 * (r.upper - r.lower);
    r.regime = IntervalKind::SparseLoading;
    r.sigma_hat = 1.0 / 3.0;
    r.event_a = true;
    r.degenerate = false;
    r.diagnostics["lambda_n"] = 0.1;
    r.diagnostics["escalations"] = 2.0;
    const json j = to_json(r);
    CHECK(j.at("schema_version") == 1);
    const IntervalResult back = interval_result_from_json(json::parse(j.dump()));
    CHECK(back.lower == r.lower);
    CHECK(back.upper == r.upper);
    CHECK(back.center == r.center);
    CHECK(back.radius == r.radius);
    CHECK(back.regime == r.regime);
    CHECK(back.sigma_hat == r.sigma_hat);
    CHECK(back.event_a == r.event_a);
    CHECK(back.degenerate == r.degenerate);
    CHECK(back.diagnostics == r.diagnostics);

    json broken = j;
    broken.erase("radius");
    CHECK(code_of([&] { interval_result_from_json(broken); }) == ErrorCode::ConfigError);
    CHECK(code_of([&] { interval_result_from_json(json::array()); }) == ErrorCode::ConfigError);
}

TEST_CASE("sampler configs round-trip for every covariance and beta kind") {
    SamplerConfig a;
    a.seed = 123456789012345ULL;
    a.n = 30;
    a.p = 3;
    a.sigma = 0.7;
    a.covariance = Ar1Covariance{0.4};
    a.beta = RandomSupportBeta{2, 0.25};
    SamplerConfig b = sampler_config_from_json(json::parse(to_json(a).dump()));
    CHECK(b.seed == a.seed);
    CHECK(b.n == 30);
    CHECK(b.sigma == 0.7);
    CHECK(std::get<Ar1Covariance>(b.covariance).rho == 0.4);
    CHECK(std::get<RandomSupportBeta>(b.beta).k == 2);
    CHECK(std::get<RandomSupportBeta>(b.beta).magnitude == 0.25);

    Eigen::Matrix3d s;
    s << 2, 0.5, 0, 0.5, 1, 0.1, 0, 0.1, 1;
    a.covariance = ExplicitCovariance{s};
    a.beta = ExplicitBeta{Eigen::Vector3d(1.0 / 7.0, 0.0, -2.0)};
    b = sampler_config_from_json(json::parse(to_json(a).dump()));
    CHECK(std::get<ExplicitCovariance>(b.covariance).sigma == Eigen::MatrixXd(s));
    CHECK(std::get<ExplicitBeta>(b.beta).beta == Eigen::VectorXd(Eigen::Vector3d(1.0 / 7.0, 0.0, -2.0)));

    a.covariance = IdentityCovariance{};
    b = sampler_config_from_json(to_json(a));
    CHECK(std::holds_alternative<IdentityCovariance>(b.covariance));
}

TEST_CASE("CI configs round-trip including optional fields") {
    CIConfig a;
    a.alpha = 0.1;
    a.k = 7;
    a.m1 = 3.0;
    a.gamma0 = 0.8;
    a.mode = CIMode::Rescaled;
    a.constants.c1 = 1e-3;
    a.constants.omega = 0.05;
    a.lambda_n_override = 0.2;
    a.kappa_sq = 0.3;
    a.escalate = true;
    a.loading_gamma = 0.25;
    const CIConfig b = ci_config_from_json(json::parse(to_json(a).dump()));
    CHECK(b.alpha == 0.1);
    CHECK(b.k == 7);
    CHECK(b.m1 == 3.0);
    CHECK(b.gamma0 == 0.8);
    CHECK(b.mode == CIMode::Rescaled);
    CHECK(b.constants.c1 == 1e-3);
    CHECK(b.constants.omega == 0.05);
    CHECK(b.constants.c2 == a.constants.c2);
    CHECK(b.lambda_n_override == a.lambda_n_override);
    CHECK_FALSE(b.lambda_min.has_value());
    CHECK(b.kappa_sq == a.kappa_sq);
    CHECK(b.escalate);
    CHECK(b.loading_gamma == a.loading_gamma);
    CHECK(to_json(b) == to_json(a));
}

TEST_CASE("experiment configs round-trip and reject unknown keys") {
    ExperimentConfig a;
    a.sampler.n = 50;
    a.sampler.p = 80;
    a.sampler.beta = RandomSupportBeta{3, 1.0};
    a.interval = IntervalKind::DenseLoading;
    a.xi.kind = XiKind::AllOnes;
    a.replicates = 17;
    a.base_seed = 42;
    a.sweep = Sweep{SweepParameter::K, {2, 4, 8}};
    a.sigma0 = 1.5;
    a.failure_ceiling = 0.1;
    const json j = to_json(a);
    CHECK(j.at("schema_version") == kSchemaVersion);
    const ExperimentConfig b = experiment_config_from_json(json::parse(j.dump()));
    CHECK(to_json(b) == j);

    json extra = j;
    extra["replicats"] = 3;
    CHECK(code_of([&] { experiment_config_from_json(extra); }) == ErrorCode::ConfigError);
    json nested = j;
    nested["sampler"]["covariance"] = json{{"kind", "ar1"}, {"rho", 0.2}, {"scale", 1}};
    CHECK(code_of([&] { experiment_config_from_json(nested); }) == ErrorCode::ConfigError);
    json version = j;
    version["schema_version"] = 2;
    CHECK(code_of([&] { experiment_config_from_json(version); }) == ErrorCode::ConfigError);
    json nosampler = j;
    nosampler.erase("sampler");
    CHECK(code_of([&] { experiment_config_from_json(nosampler); }) == ErrorCode::ConfigError);
    json badsweep = j;
    badsweep["sweep"]["values"] = json::array({4, 2});
    CHECK_THROWS_AS(experiment_config_from_json(badsweep), Error);
    json badkind = j;
    badkind["interval"] = "wide";
    CHECK(code_of([&] { experiment_config_from_json(badkind); }) == ErrorCode::ConfigError);
}

TEST_CASE("simulation configs escalate unless told otherwise") {
    json j{{"sampler", {{"n", 20}, {"p", 10}, {"beta", {{"kind", "random_support"}, {"k", 1}}}}},
           {"ci", {{"alpha", 0.05}}}};
    CHECK(experiment_config_from_json(j).ci.escalate);
    j["ci"]["escalate"] = false;
    CHECK_FALSE(experiment_config_from_json(j).ci.escalate);
    CHECK_FALSE(ci_config_from_json(json{{"alpha", 0.05}}).escalate);
}

TEST_CASE("explicit loadings load from a path relative to the config") {
    const fs::path xi = scratch("xi.csv");
    write_file(xi, "1\n0\n-2.5\n");
    json j{{"sampler", {{"n", 20}, {"p", 3}, {"beta", {{"kind", "random_support"}, {"k", 1}}}}},
           {"xi", {{"kind", "explicit"}, {"path", "xi.csv"}}}};
    const ExperimentConfig cfg = experiment_config_from_json(j, xi.parent_path());
    CHECK(cfg.xi.values == Eigen::VectorXd(Eigen::Vector3d(1.0, 0.0, -2.5)));
    j["xi"]["path"] = "missing.csv";
    CHECK(code_of([&] { experiment_config_from_json(j, xi.parent_path()); }) == ErrorCode::ConfigError);
}

TEST_CASE("matrix CSV round-trips exactly and reports malformed input") {
    const Eigen::MatrixXd m = oracle::normal_matrix(7, 4, 3) * 1e-3;
    const fs::path p = scratch("m.csv");
    write_matrix_csv(p, m);
    CHECK(read_matrix_csv(p) == m);

    write_file(p, "1, 2\n\n+3,4\r\n");
    const Eigen::MatrixXd r = read_matrix_csv(p);
    CHECK(r.rows() == 2);
    CHECK(r(1, 0) == 3.0);

    write_file(p, "1,2\n3\n");
    CHECK(code_of([&] { read_matrix_csv(p); }) == ErrorCode::IoError);
    write_file(p, "1,abc\n");
    CHECK(code_of([&] { read_matrix_csv(p); }) == ErrorCode::IoError);
    write_file(p, "1,\n");
    CHECK(code_of([&] { read_matrix_csv(p); }) == ErrorCode::IoError);
    write_file(p, "");
    CHECK(code_of([&] { read_matrix_csv(p); }) == ErrorCode::IoError);
    CHECK(code_of([&] { read_matrix_csv(scratch("nope.csv")); }) == ErrorCode::IoError);

    write_file(p, "1,2,3\n");
    CHECK(read_vector_csv(p).size() == 3);
    write_file(p, "1,2\n3,4\n");
    CHECK(code_of([&] { read_vector_csv(p); }) == ErrorCode::IoError);
}

TEST_CASE("reports carry the schema version and a fixed sweep table header") {
    ExperimentConfig cfg;
    cfg.sampler.n = 30;
    cfg.sampler.p = 40;
    cfg.sampler.beta = RandomSupportBeta{1, 0.5};
    cfg.replicates = 3;
    const CoverageReport rep = run_experiment(cfg, 1);
    const json j = to_json(rep);
    CHECK(j.at("schema_version") == 1);
    CHECK_FALSE(j.contains("runtime_seconds"));
    CHECK(j.at("cells").size() == 1);
    CHECK(j.at("cells")[0].at("records").size() == 3);
    CHECK(j.at("cells")[0].at("records")[0].contains("radius"));
    const std::string csv = sweep_csv(rep);
    CHECK(csv.rfind(
              "swept_value,coverage,cov_lo,cov_hi,mean_length,median_length,degenerate_fraction,failure_fraction\n",
              0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 2);

    CHECK(code_of([&] { read_json_file(scratch("absent.json")); }) == ErrorCode::ConfigError);
    const fs::path bad = scratch("bad.json");
    write_file(bad, "{ not json");
    CHECK(code_of([&] { read_json_file(bad); }) == ErrorCode::ConfigError);
}
