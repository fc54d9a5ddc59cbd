#include "hdci/simulation.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

#include "hdci/rng.hpp"

namespace hdci {

namespace {

struct CellContext {
    DesignSampler sampler;
    Eigen::VectorXd xi;
    CIConfig ci;
    double sigma0 = 1.0;
    IntervalKind kind = IntervalKind::KnownDesign;
    double swept_value = 0.0;
};

ReplicateRecord run_replicate(const CellContext& cell, std::uint64_t seed) {
    ReplicateRecord rec;
    rec.seed = seed;
    const Instance inst = cell.sampler.sample(seed);
    rec.truth = cell.xi.dot(inst.truth.beta);
    try {
        IntervalResult r;
        switch (cell.kind) {
            case IntervalKind::SparseLoading: r = ci_sparse(inst.data, cell.xi, cell.ci); break;
            case IntervalKind::DenseLoading: r = ci_dense(inst.data, cell.xi, cell.ci); break;
            case IntervalKind::KnownDesign: r = ci_known_design(inst.data, cell.xi, cell.sigma0, cell.ci, seed); break;
        }
        rec.lower = r.lower;
        rec.upper = r.upper;
        rec.radius = r.radius;
        rec.covered = r.covers(rec.truth);
        rec.degenerate = r.degenerate;
        const auto it = r.diagnostics.find("branch");
        rec.branch = (it != r.diagnostics.end()) ? static_cast<int>(it->second) : (r.degenerate ? 0 : 1);
    } catch (const Error& e) {
        if (!e.is_solver_failure()) throw;
        rec.failed = true;
        rec.error = to_string(e.code());
    }
    return rec;
}

// Runs fn(i) for i in [0, count) on a pool of workers. The first exception
// by index is rethrown after all workers finish.
template <class Fn>
void parallel_for(std::size_t count, int threads, Fn fn) {
    if (threads <= 0) threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    threads = static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(threads), std::max<std::size_t>(count, 1)));

    std::atomic<std::size_t> next{0};
    std::mutex err_mu;
    std::size_t err_index = count;
    std::exception_ptr err;

    auto worker = [&] {
        while (true) {
            const std::size_t i = next.fetch_add(1);
            if (i >= count) return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(err_mu);
                if (i < err_index) {
                    err_index = i;
                    err = std::current_exception();
                }
            }
        }
    };
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(threads));
        for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    if (err) std::rethrow_exception(err);
}

// Mean as x0 + sum(x_i - x0)/n: identical inputs give the input back exactly.
double shifted_mean(const std::vector<double>& v) {
    if (v.empty()) return 0.0;
    const double x0 = v.front();
    double s = 0.0;
    for (double x : v) s += x - x0;
    return x0 + s / static_cast<double>(v.size());
}

double median(std::vector<double> v) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    const std::size_t h = v.size() / 2;
    if (v.size() % 2 == 1) return v[h];
    return v[h - 1] + 0.5 * (v[h] - v[h - 1]);
}

CellSummary summarize(double swept_value, std::vector<ReplicateRecord> records) {
    CellSummary c;
    c.swept_value = swept_value;
    c.replicates = static_cast<int>(records.size());
    std::vector<double> lengths;
    int degenerate = 0;
    int branch1 = 0;
    for (const auto& r : records) {
        if (r.failed) {
            ++c.failures;
            continue;
        }
        ++c.evaluated;
        if (r.covered) ++c.covered;
        if (r.degenerate) ++degenerate;
        if (r.branch == 1) ++branch1;
        lengths.push_back(r.length());
    }
    const double ev = static_cast<double>(c.evaluated);
    if (c.evaluated > 0) {
        c.empirical_coverage = static_cast<double>(c.covered) / ev;
        c.degenerate_fraction = static_cast<double>(degenerate) / ev;
        c.branch1_fraction = static_cast<double>(branch1) / ev;
    }
    c.wilson = wilson_interval(c.covered, c.evaluated);
    c.failure_fraction = c.replicates > 0 ? static_cast<double>(c.failures) / c.replicates : 0.0;
    c.failures_excluded = c.failures > 0;
    c.mean_length = shifted_mean(lengths);
    c.median_length = median(lengths);
    c.records = std::move(records);
    return c;
}

}  // namespace

Eigen::VectorXd build_xi(const XiSpec& spec, int p) {
    switch (spec.kind) {
        case XiKind::Coordinate: {
            if (spec.index < 0 || spec.index >= p) fail(ErrorCode::ConfigError, "coordinate loading index out of range");
            Eigen::VectorXd xi = Eigen::VectorXd::Zero(p);
            xi[spec.index] = 1.0;
            return xi;
        }
        case XiKind::AllOnes: return Eigen::VectorXd::Ones(p);
        case XiKind::Explicit:
            if (spec.values.size() != p) fail(ErrorCode::ConfigError, "explicit loading length differs from p");
            if (spec.values.cwiseAbs().maxCoeff() == 0.0) fail(ErrorCode::ConfigError, "explicit loading is zero");
            return spec.values;
    }
    fail(ErrorCode::ConfigError, "unknown loading kind");
}

const char* to_string(SweepParameter s) {
    switch (s) {
        case SweepParameter::K: return "k";
        case SweepParameter::N: return "n";
        case SweepParameter::P: return "p";
    }
    return "k";
}

SweepParameter sweep_parameter_from_string(const std::string& s) {
    if (s == "k") return SweepParameter::K;
    if (s == "n") return SweepParameter::N;
    if (s == "p") return SweepParameter::P;
    fail(ErrorCode::ConfigError, "sweep parameter must be k, n or p");
}

void ExperimentConfig::validate() const {
    if (replicates < 1) fail(ErrorCode::ConfigError, "replicates must be at least 1");
    if (sampler.n < 2 || sampler.p < 1) fail(ErrorCode::ConfigError, "sampler needs n >= 2 and p >= 1");
    if (!(failure_ceiling >= 0.0 && failure_ceiling <= 1.0)) fail(ErrorCode::ConfigError, "failure ceiling must lie in [0, 1]");
    if (sigma0 && !(*sigma0 >= 0.0)) fail(ErrorCode::ConfigError, "sigma0 must be nonnegative");
    ci.validate();
    if (sweep) {
        if (sweep->values.empty()) fail(ErrorCode::ConfigError, "sweep needs at least one value");
        for (std::size_t i = 1; i < sweep->values.size(); ++i) {
            if (sweep->values[i] <= sweep->values[i - 1]) fail(ErrorCode::ConfigError, "sweep values must be strictly increasing");
        }
        if (sweep->parameter == SweepParameter::K && !std::holds_alternative<RandomSupportBeta>(sampler.beta)) {
            fail(ErrorCode::ConfigError, "a k sweep needs a random-support beta");
        }
    }
}

double CoverageReport::max_failure_fraction() const {
    double worst = 0.0;
    for (const auto& c : cells) worst = std::max(worst, c.failure_fraction);
    return worst;
}

const char* library_version() { return "hdci 1.0.0"; }

CoverageReport run_experiment(const ExperimentConfig& cfg, int threads) {
    cfg.validate();
    const auto start = std::chrono::steady_clock::now();

    std::vector<int> values;
    if (cfg.sweep) {
        values = cfg.sweep->values;
    } else {
        values.push_back(0);
    }

    std::vector<CellContext> cells;
    cells.reserve(values.size());
    for (int v : values) {
        SamplerConfig sc = cfg.sampler;
        CIConfig ci = cfg.ci;
        double swept = 0.0;
        if (cfg.sweep) {
            swept = v;
            switch (cfg.sweep->parameter) {
                case SweepParameter::K:
                    std::get<RandomSupportBeta>(sc.beta).k = v;
                    if (cfg.sweep_sets_ci_k) ci.k = v;
                    break;
                case SweepParameter::N: sc.n = v; break;
                case SweepParameter::P: sc.p = v; break;
            }
        }
        Eigen::VectorXd xi = build_xi(cfg.xi, sc.p);
        cells.push_back(CellContext{DesignSampler(sc), std::move(xi), ci, cfg.sigma0.value_or(sc.sigma), cfg.interval, swept});
    }

    const std::size_t reps = static_cast<std::size_t>(cfg.replicates);
    std::vector<ReplicateRecord> records(cells.size() * reps);
    parallel_for(records.size(), threads, [&](std::size_t i) {
        const std::size_t cell = i / reps;
        const std::size_t r = i % reps;
        records[i] = run_replicate(cells[cell], derive_seed(cfg.base_seed, cell, r));
    });

    CoverageReport report;
    report.config = cfg;
    report.version = library_version();
    for (std::size_t c = 0; c < cells.size(); ++c) {
        std::vector<ReplicateRecord> mine(records.begin() + static_cast<std::ptrdiff_t>(c * reps),
                                          records.begin() + static_cast<std::ptrdiff_t>((c + 1) * reps));
        report.cells.push_back(summarize(cells[c].swept_value, std::move(mine)));
    }
    report.runtime_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return report;
}

SlopeFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) fail(ErrorCode::InvalidArgument, "line fit needs at least two points");
    const double mx = shifted_mean(x);
    const double my = shifted_mean(y);
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = x[i] - mx;
        const double dy = y[i] - my;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if (sxx == 0.0) fail(ErrorCode::InvalidArgument, "line fit needs at least two distinct x values");
    SlopeFit f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    double ss_res = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double e = y[i] - (f.intercept + f.slope * x[i]);
        ss_res += e * e;
    }
    // A constant response is fit exactly by the horizontal line.
    f.r_squared = syy > 0.0 ? 1.0 - ss_res / syy : 1.0;
    return f;
}

CoverageReport rate_sweep_report(const ExperimentConfig& cfg, int threads) {
    if (!cfg.sweep || cfg.sweep->parameter != SweepParameter::K) {
        fail(ErrorCode::ConfigError, "rate sweep needs a sweep over k");
    }
    if (cfg.sweep->values.size() < 2) fail(ErrorCode::ConfigError, "rate sweep needs at least two k values");
    CoverageReport report = run_experiment(cfg, threads);
    std::vector<double> x, y;
    for (const auto& c : report.cells) {
        x.push_back(c.swept_value);
        y.push_back(c.mean_length);
    }
    report.fit = fit_line(x, y);
    return report;
}

std::pair<double, double> wilson_interval(int successes, int trials, double z) {
    if (trials < 0 || successes < 0 || successes > trials) fail(ErrorCode::InvalidArgument, "bad binomial counts");
    if (trials == 0) return {0.0, 1.0};
    const double n = static_cast<double>(trials);
    const double phat = static_cast<double>(successes) / n;
    const double z2 = z * z;
    const double denom = 1.0 + z2 / n;
    const double center = (phat + z2 / (2.0 * n)) / denom;
    const double half = z / denom * std::sqrt(phat * (1.0 - phat) / n + z2 / (4.0 * n * n));
    // Clamp so the interval always contains phat despite rounding at 0 and 1.
    return {std::min(phat, std::max(0.0, center - half)), std::max(phat, std::min(1.0, center + half))};
}

SpikedTruth spiked_truth(int p, int k, double magnitude, double sigma) {
    if (k < 1 || k > p) fail(ErrorCode::InvalidArgument, "spiked truth needs 1 <= k <= p");
    if (!(magnitude > 0.0) || !(sigma > 0.0)) fail(ErrorCode::InvalidArgument, "magnitude and sigma must be positive");
    const int m = k - 1;
    SpikedTruth t;
    t.covariance = Eigen::MatrixXd::Identity(p, p);
    t.beta = Eigen::VectorXd::Zero(p);
    if (m == 0) {
        t.noise_sd = sigma;
        return t;
    }
    // Spike rho with rho / (1 - m rho^2) = magnitude.
    const double a = magnitude;
    const double md = static_cast<double>(m);
    t.rho = (std::sqrt(1.0 + 4.0 * md * a * a) - 1.0) / (2.0 * md * a);
    const double d2 = md * t.rho * t.rho;
    if (!(d2 < 0.5)) fail(ErrorCode::InvalidArgument, "spike too large: m rho^2 must stay below 1/2");
    const double beta1 = -sigma * d2 / (1.0 - d2);
    t.beta[0] = beta1;
    for (int j = 1; j <= m; ++j) {
        t.covariance(0, j) = t.rho;
        t.covariance(j, 0) = t.rho;
        t.beta[j] = (sigma - beta1) * t.rho;
    }
    t.noise_sd = sigma * std::sqrt(1.0 - d2 / (1.0 - d2));
    return t;
}

NonadaptivityReport nonadaptivity_demo(int n, int p, int k_small, int k_large, double alpha, int replicates,
                                       std::uint64_t seed, double sigma, int threads) {
    if (!(k_small <= k_large)) fail(ErrorCode::InvalidArgument, "need k_small <= k_large");
    NonadaptivityReport out;
    out.n = n;
    out.p = p;
    out.k_small = k_small;
    out.k_large = k_large;
    out.alpha = alpha;
    out.sigma = sigma;
    out.magnitude = std::sqrt(std::log(static_cast<double>(p)) / static_cast<double>(n));

    auto run = [&](int k, std::uint64_t cell) {
        const SpikedTruth truth = spiked_truth(p, k, out.magnitude, sigma);
        ExperimentConfig cfg;
        cfg.sampler.n = n;
        cfg.sampler.p = p;
        cfg.sampler.covariance = ExplicitCovariance{truth.covariance};
        cfg.sampler.beta = ExplicitBeta{truth.beta};
        cfg.sampler.sigma = truth.noise_sd;
        cfg.ci.alpha = alpha;
        cfg.ci.k = k_small;
        cfg.ci.mode = CIMode::OracleNormality;
        cfg.ci.escalate = true;
        cfg.interval = IntervalKind::SparseLoading;
        cfg.xi.kind = XiKind::Coordinate;
        cfg.xi.index = 0;
        cfg.replicates = replicates;
        cfg.base_seed = derive_seed(seed, cell, 0);
        CoverageReport rep = run_experiment(cfg, threads);
        CellSummary c = std::move(rep.cells.front());
        c.swept_value = k;
        return c;
    };
    out.small = run(k_small, 0);
    out.large = run(k_large, 1);
    out.deficit = out.small.empirical_coverage - out.large.empirical_coverage;
    out.significant = out.small.wilson.first > out.large.wilson.second;
    return out;
}

}  // namespace hdci
