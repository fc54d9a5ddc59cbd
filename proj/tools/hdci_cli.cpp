// Command-line front end: ci, simulate, lb and re subcommands.
#include <CLI11.hpp>

#include <cmath>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <thread>

#include "hdci/certificates.hpp"
#include "hdci/ci_construct.hpp"
#include "hdci/lb_calculator.hpp"
#include "hdci/serialization.hpp"
#include "hdci/simulation.hpp"

namespace fs = std::filesystem;
using namespace hdci;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitSolver = 3;

struct Common {
    std::string config;
    std::string out;
    int threads = 0;
    std::string mode;
};

void emit(const Common& common, const std::string& file, const std::string& text) {
    if (common.out.empty()) {
        std::cout << text;
        return;
    }
    fs::create_directories(common.out);
    write_text_file(fs::path(common.out) / file, text);
}

std::optional<CIMode> mode_flag(const Common& c) {
    if (c.mode.empty()) return std::nullopt;
    return ci_mode_from_string(c.mode);
}

struct CiArgs {
    std::string x, y, xi;
    int coordinate = -1;
    bool all_ones = false;
    std::string interval = "sparse";
    std::optional<int> k;
    std::optional<double> alpha;
    std::optional<double> m1;
    double sigma0 = 1.0;
    std::uint64_t seed = 0;
};

int run_ci(const Common& common, const CiArgs& a) {
    CIConfig cfg;
    if (!common.config.empty()) cfg = ci_config_from_json(read_json_file(common.config));
    if (auto m = mode_flag(common)) cfg.mode = *m;
    if (a.k) cfg.k = *a.k;
    if (a.alpha) cfg.alpha = *a.alpha;
    if (a.m1) cfg.m1 = *a.m1;

    Dataset data(read_matrix_csv(a.x), read_vector_csv(a.y));
    Eigen::VectorXd xi;
    if (!a.xi.empty()) {
        xi = read_vector_csv(a.xi);
    } else if (a.all_ones) {
        xi = Eigen::VectorXd::Ones(data.p());
    } else if (a.coordinate >= 0) {
        xi = build_xi(XiSpec{XiKind::Coordinate, a.coordinate, {}, {}}, static_cast<int>(data.p()));
    } else {
        fail(ErrorCode::ConfigError, "give the loading with --xi, --coordinate or --all-ones");
    }

    IntervalResult r;
    const IntervalKind kind = interval_kind_from_string(a.interval);
    switch (kind) {
        case IntervalKind::SparseLoading: r = ci_sparse(data, xi, cfg); break;
        case IntervalKind::DenseLoading: r = ci_dense(data, xi, cfg); break;
        case IntervalKind::KnownDesign: r = ci_known_design(data, xi, a.sigma0, cfg, a.seed); break;
    }
    emit(common, "interval.json", to_json(r).dump(2) + "\n");
    return 0;
}

int run_simulate(const Common& common) {
    if (common.config.empty()) fail(ErrorCode::ConfigError, "simulate needs --config");
    const json j = read_json_file(common.config);
    const int threads = common.threads;

    if (j.is_object() && j.contains("nonadaptivity")) {
        const json& d = j.at("nonadaptivity");
        if (!d.is_object()) fail(ErrorCode::ConfigError, "'nonadaptivity' must be an object");
        try {
            const NonadaptivityReport rep = nonadaptivity_demo(
                d.value("n", 100), d.value("p", 500), d.value("k_small", 2), d.value("k_large", 25),
                d.value("alpha", 0.05), d.value("replicates", 200), d.value("seed", std::uint64_t{0}),
                d.value("sigma", 1.0), threads);
            emit(common, "report.json", to_json(rep).dump(2) + "\n");
        } catch (const json::exception& e) {
            fail(ErrorCode::ConfigError, e.what());
        }
        return 0;
    }

    ExperimentConfig cfg = experiment_config_from_json(j, fs::path(common.config).parent_path());
    if (auto m = mode_flag(common)) cfg.ci.mode = *m;

    const bool fit = cfg.sweep && cfg.sweep->parameter == SweepParameter::K && cfg.sweep->values.size() >= 2;
    const CoverageReport rep = fit ? rate_sweep_report(cfg, threads) : run_experiment(cfg, threads);

    emit(common, "report.json", to_json(rep).dump(2) + "\n");
    if (!common.out.empty()) {
        write_text_file(fs::path(common.out) / "sweep.csv", sweep_csv(rep));
        const json run{{"runtime_seconds", rep.runtime_seconds},
                       {"threads", threads > 0 ? threads : static_cast<int>(std::thread::hardware_concurrency())}};
        write_text_file(fs::path(common.out) / "runtime.json", run.dump(2) + "\n");
    }
    std::cerr << "simulate: " << rep.cells.size() << " cell(s), " << format_double(rep.runtime_seconds) << " s\n";

    if (rep.max_failure_fraction() > cfg.failure_ceiling) {
        std::cerr << "simulate: failure fraction " << format_double(rep.max_failure_fraction())
                  << " exceeds the ceiling " << format_double(cfg.failure_ceiling) << "\n";
        return kExitSolver;
    }
    return 0;
}

struct LbArgs {
    std::vector<long> n{400};
    std::vector<long> p{2000};
    std::vector<long> k{10};
    long k1 = 0;
    double alpha = 0.05;
    double zeta0 = 0.5;
    double sigma = 1.0;
};

int run_lb(const Common& common, LbArgs a) {
    if (!common.config.empty()) {
        const json j = read_json_file(common.config);
        try {
            a.n = j.value("n", a.n);
            a.p = j.value("p", a.p);
            a.k = j.value("k", a.k);
            a.k1 = j.value("k1", a.k1);
            a.alpha = j.value("alpha", a.alpha);
            a.zeta0 = j.value("zeta0", a.zeta0);
            a.sigma = j.value("sigma", a.sigma);
        } catch (const json::exception& e) {
            fail(ErrorCode::ConfigError, e.what());
        }
    }
    std::string out = "n,p,k,k1,m,p1,rho,chisq,tv,gap,bound,reference_rate\n";
    for (long n : a.n) {
        for (long p : a.p) {
            for (long k : a.k) {
                const AdaptivityBound b = adaptivity_lower_curve(n, p, k, a.k1, a.alpha, a.zeta0, a.sigma);
                RateQuery q = RateQuery::from_dims(RateRegime::SparseUnknown, n, p, k, a.k1);
                q.sigma0 = a.sigma;
                out += std::to_string(n) + ',' + std::to_string(p) + ',' + std::to_string(k) + ',' +
                       std::to_string(a.k1) + ',' + std::to_string(b.m) + ',' + std::to_string(b.p1) + ',' +
                       format_double(b.rho) + ',' + format_double(b.chisq) + ',' + format_double(b.tv) + ',' +
                       format_double(b.gap) + ',' + format_double(b.bound) + ',' +
                       format_double(a.sigma * reference_rate(q)) + '\n';
            }
        }
    }
    emit(common, "lb.csv", out);
    return 0;
}

struct ReArgs {
    std::string x;
    int k = 1;
    std::optional<double> alpha0;
    std::string method = "heuristic";
    std::optional<double> lambda_min;
    std::optional<double> lambda_max;
    double m1 = 2.0;
    std::uint64_t seed = 0;
};

int run_re(const Common& common, const ReArgs& a) {
    const Eigen::MatrixXd x = read_matrix_csv(a.x);
    Dataset data(x, Eigen::VectorXd::Zero(x.rows()));
    Constants c;
    if (auto m = mode_flag(common); m && *m == CIMode::Rescaled && !common.config.empty()) {
        c = ci_config_from_json(read_json_file(common.config)).constants;
    }
    const double alpha0 = a.alpha0.value_or(default_cone_alpha0(data, c));
    REMode mode;
    if (a.method == "oracle") {
        mode = REMode::BruteForceOracle;
    } else if (a.method == "heuristic") {
        mode = REMode::HeuristicUpper;
    } else {
        fail(ErrorCode::ConfigError, "--method must be oracle or heuristic");
    }
    HeuristicOptions hopts;
    hopts.seed = a.seed;
    const REEstimate re = restricted_eigenvalue(data, a.k, alpha0, mode, hopts);
    const bool plug_in = a.lambda_min.has_value() || a.lambda_max.has_value();
    const OmegaSurrogate om =
        omega_surrogate(a.lambda_min.value_or(1.0 / a.m1), a.lambda_max.value_or(a.m1), data, a.k, plug_in, c);

    json j{{"schema_version", kSchemaVersion}, {"kappa", to_json(re)}, {"omega", to_json(om)},
           {"column_norm_ratio", column_norm_ratio(data)}};
    const double kappa_sq = re.value * re.value;
    if (kappa_sq > 0.0) {
        j["c1"] = c1_constant(data, a.k, kappa_sq, a.m1, c);
        j["c2"] = c2_constant(data, a.k, kappa_sq, c);
    } else {
        j["c1"] = nullptr;
        j["c2"] = nullptr;
    }
    emit(common, "re.json", j.dump(2) + "\n");
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Confidence intervals for linear functionals in high-dimensional regression"};
    app.require_subcommand(1);

    Common common;
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", common.config, "JSON configuration file");
        sub->add_option("--out", common.out, "output directory (default: standard output)");
        sub->add_option("--threads", common.threads, "worker threads (default: all cores)")->check(CLI::NonNegativeNumber);
        sub->add_option("--mode", common.mode, "faithful, rescaled or oracle-normality")
            ->check(CLI::IsMember({"faithful", "rescaled", "oracle-normality"}));
    };

    CiArgs ci;
    auto* ci_cmd = app.add_subcommand("ci", "one interval for a dataset given as CSV files");
    add_common(ci_cmd);
    ci_cmd->add_option("--x", ci.x, "design matrix CSV (n rows, p columns)")->required();
    ci_cmd->add_option("--y", ci.y, "response CSV (one value per line)")->required();
    ci_cmd->add_option("--xi", ci.xi, "loading CSV (one value per line)");
    ci_cmd->add_option("--coordinate", ci.coordinate, "loading e_i with zero-based i");
    ci_cmd->add_flag("--all-ones", ci.all_ones, "loading of all ones");
    ci_cmd->add_option("--interval", ci.interval, "sparse, dense or known")
        ->check(CLI::IsMember({"sparse", "dense", "known"}));
    ci_cmd->add_option("--k", ci.k, "assumed sparsity");
    ci_cmd->add_option("--alpha", ci.alpha, "significance level");
    ci_cmd->add_option("--m1", ci.m1, "eigenvalue band constant");
    ci_cmd->add_option("--sigma0", ci.sigma0, "known noise level (known design)");
    ci_cmd->add_option("--seed", ci.seed, "sample-split seed (known design)");

    auto* sim_cmd = app.add_subcommand("simulate", "Monte Carlo coverage study from a JSON config");
    add_common(sim_cmd);

    LbArgs lb;
    auto* lb_cmd = app.add_subcommand("lb", "lower-bound curve over a grid, as CSV");
    add_common(lb_cmd);
    lb_cmd->add_option("--n", lb.n, "sample sizes")->expected(1, -1);
    lb_cmd->add_option("--p", lb.p, "dimensions")->expected(1, -1);
    lb_cmd->add_option("--k", lb.k, "sparsity levels")->expected(1, -1);
    lb_cmd->add_option("--k1", lb.k1, "null sparsity");
    lb_cmd->add_option("--alpha", lb.alpha, "significance level");
    lb_cmd->add_option("--zeta0", lb.zeta0, "prior support fraction");
    lb_cmd->add_option("--sigma", lb.sigma, "noise level");

    ReArgs re;
    auto* re_cmd = app.add_subcommand("re", "restricted eigenvalue and omega report for a design");
    add_common(re_cmd);
    re_cmd->add_option("--x", re.x, "design matrix CSV")->required();
    re_cmd->add_option("--k", re.k, "support size");
    re_cmd->add_option("--alpha0", re.alpha0, "cone parameter (default 405 * column norm ratio)");
    re_cmd->add_option("--method", re.method, "oracle or heuristic")->check(CLI::IsMember({"oracle", "heuristic"}));
    re_cmd->add_option("--lambda-min", re.lambda_min, "plug-in smallest eigenvalue of the precision matrix");
    re_cmd->add_option("--lambda-max", re.lambda_max, "plug-in largest eigenvalue of the precision matrix");
    re_cmd->add_option("--m1", re.m1, "eigenvalue band constant");
    re_cmd->add_option("--seed", re.seed, "heuristic seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitConfig;
    }

    try {
        if (*ci_cmd) return run_ci(common, ci);
        if (*sim_cmd) return run_simulate(common);
        if (*lb_cmd) return run_lb(common, lb);
        if (*re_cmd) return run_re(common, re);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return e.is_solver_failure() ? kExitSolver : kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    }
    return kExitConfig;
}
