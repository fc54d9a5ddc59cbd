#include "hdci/serialization.hpp"

#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

namespace hdci {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

void require_object(const json& j, const char* what) {
    if (!j.is_object()) fail(ErrorCode::ConfigError, std::string(what) + " must be a JSON object");
}

void check_keys(const json& j, std::initializer_list<const char*> allowed, const char* what) {
    require_object(j, what);
    const std::set<std::string> ok(allowed.begin(), allowed.end());
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (!ok.count(it.key())) fail(ErrorCode::ConfigError, std::string("unknown key '") + it.key() + "' in " + what);
    }
}

template <class T>
T get(const json& j, const char* key, T fallback) {
    if (!j.contains(key) || j.at(key).is_null()) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        fail(ErrorCode::ConfigError, std::string("bad value for '") + key + "': " + e.what());
    }
}

template <class T>
std::optional<T> get_opt(const json& j, const char* key) {
    if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
    return get<T>(j, key, T{});
}

json vector_json(const Eigen::VectorXd& v) {
    json a = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
    return a;
}

Eigen::VectorXd vector_from_json(const json& j, const char* what) {
    if (!j.is_array()) fail(ErrorCode::ConfigError, std::string(what) + " must be an array of numbers");
    Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) {
        if (!j[i].is_number()) fail(ErrorCode::ConfigError, std::string(what) + " must contain numbers only");
        v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
    }
    return v;
}

json matrix_json(const Eigen::MatrixXd& m) {
    json a = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) a.push_back(vector_json(m.row(i).transpose()));
    return a;
}

Eigen::MatrixXd matrix_from_json(const json& j, const char* what) {
    if (!j.is_array() || j.empty()) fail(ErrorCode::ConfigError, std::string(what) + " must be a non-empty array of rows");
    const auto rows = static_cast<Eigen::Index>(j.size());
    const Eigen::VectorXd first = vector_from_json(j[0], what);
    Eigen::MatrixXd m(rows, first.size());
    for (Eigen::Index i = 0; i < rows; ++i) {
        const Eigen::VectorXd r = vector_from_json(j[static_cast<std::size_t>(i)], what);
        if (r.size() != first.size()) fail(ErrorCode::ConfigError, std::string(what) + " rows differ in length");
        m.row(i) = r.transpose();
    }
    return m;
}

json constants_json(const Constants& c) {
    return json{{"c1", c.c1}, {"re", c.re}, {"c2", c.c2}, {"cone", c.cone}, {"omega", c.omega}, {"lambda_n", c.lambda_n}};
}

Constants constants_from_json(const json& j) {
    check_keys(j, {"c1", "re", "c2", "cone", "omega", "lambda_n"}, "constants");
    Constants c;
    c.c1 = get(j, "c1", c.c1);
    c.re = get(j, "re", c.re);
    c.c2 = get(j, "c2", c.c2);
    c.cone = get(j, "cone", c.cone);
    c.omega = get(j, "omega", c.omega);
    c.lambda_n = get(j, "lambda_n", c.lambda_n);
    return c;
}

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

json record_json(const ReplicateRecord& r) {
    json j{{"seed", r.seed},   {"failed", r.failed},   {"truth", r.truth},
           {"lower", r.lower}, {"upper", r.upper},     {"radius", r.radius}, {"covered", r.covered},
           {"degenerate", r.degenerate}, {"branch", r.branch}};
    if (r.failed) j["error"] = r.error;
    return j;
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

double parse_number(std::string s, const std::filesystem::path& path, std::size_t line) {
    const auto b = s.find_first_not_of(" \t\r");
    const auto e = s.find_last_not_of(" \t\r");
    if (b == std::string::npos) fail(ErrorCode::IoError, path.string() + ":" + std::to_string(line) + ": empty field");
    s = s.substr(b, e - b + 1);
    if (!s.empty() && s[0] == '+') s.erase(0, 1);
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
        fail(ErrorCode::IoError, path.string() + ":" + std::to_string(line) + ": not a number: '" + s + "'");
    }
    return v;
}

}  // namespace

std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

json to_json(const SamplerConfig& cfg) {
    json j;
    j["seed"] = cfg.seed;
    j["n"] = cfg.n;
    j["p"] = cfg.p;
    j["sigma"] = cfg.sigma;
    j["covariance"] = std::visit(overloaded{
                                     [](const IdentityCovariance&) { return json{{"kind", "identity"}}; },
                                     [](const Ar1Covariance& a) { return json{{"kind", "ar1"}, {"rho", a.rho}}; },
                                     [](const ExplicitCovariance& e) {
                                         return json{{"kind", "explicit"}, {"matrix", matrix_json(e.sigma)}};
                                     },
                                 },
                                 cfg.covariance);
    j["beta"] = std::visit(overloaded{
                               [](const ExplicitBeta& b) { return json{{"kind", "explicit"}, {"values", vector_json(b.beta)}}; },
                               [](const RandomSupportBeta& b) {
                                   return json{{"kind", "random_support"}, {"k", b.k}, {"magnitude", b.magnitude}};
                               },
                           },
                           cfg.beta);
    return j;
}

SamplerConfig sampler_config_from_json(const json& j) {
    check_keys(j, {"seed", "n", "p", "sigma", "covariance", "beta"}, "sampler");
    SamplerConfig cfg;
    cfg.seed = get<std::uint64_t>(j, "seed", 0);
    cfg.n = get(j, "n", 0);
    cfg.p = get(j, "p", 0);
    cfg.sigma = get(j, "sigma", 1.0);
    if (j.contains("covariance")) {
        const json& c = j.at("covariance");
        require_object(c, "covariance");
        const std::string kind = get<std::string>(c, "kind", "identity");
        if (kind == "identity") {
            check_keys(c, {"kind"}, "covariance");
            cfg.covariance = IdentityCovariance{};
        } else if (kind == "ar1") {
            check_keys(c, {"kind", "rho"}, "covariance");
            cfg.covariance = Ar1Covariance{get(c, "rho", 0.0)};
        } else if (kind == "explicit") {
            check_keys(c, {"kind", "matrix"}, "covariance");
            if (!c.contains("matrix")) fail(ErrorCode::ConfigError, "explicit covariance needs 'matrix'");
            cfg.covariance = ExplicitCovariance{matrix_from_json(c.at("matrix"), "covariance matrix")};
        } else {
            fail(ErrorCode::ConfigError, "covariance kind must be identity, ar1 or explicit");
        }
    }
    if (j.contains("beta")) {
        const json& b = j.at("beta");
        require_object(b, "beta");
        const std::string kind = get<std::string>(b, "kind", "random_support");
        if (kind == "random_support") {
            check_keys(b, {"kind", "k", "magnitude"}, "beta");
            cfg.beta = RandomSupportBeta{get(b, "k", 0), get(b, "magnitude", 1.0)};
        } else if (kind == "explicit") {
            check_keys(b, {"kind", "values"}, "beta");
            if (!b.contains("values")) fail(ErrorCode::ConfigError, "explicit beta needs 'values'");
            cfg.beta = ExplicitBeta{vector_from_json(b.at("values"), "beta values")};
        } else {
            fail(ErrorCode::ConfigError, "beta kind must be random_support or explicit");
        }
    }
    return cfg;
}

json to_json(const CIConfig& cfg) {
    json j;
    j["alpha"] = cfg.alpha;
    j["k"] = cfg.k;
    j["m1"] = cfg.m1;
    j["gamma0"] = cfg.gamma0;
    j["mode"] = to_string(cfg.mode);
    j["constants"] = constants_json(cfg.constants);
    j["lambda_n"] = optional_json(cfg.lambda_n_override);
    j["oracle_lambda_prefactor"] = cfg.oracle_lambda_prefactor;
    j["lambda_min"] = optional_json(cfg.lambda_min);
    j["lambda_max"] = optional_json(cfg.lambda_max);
    j["kappa_sq"] = optional_json(cfg.kappa_sq);
    j["escalate"] = cfg.escalate;
    j["loading_gamma"] = optional_json(cfg.loading_gamma);
    return j;
}

CIConfig ci_config_from_json(const json& j) {
    check_keys(j,
               {"alpha", "k", "m1", "gamma0", "mode", "constants", "lambda_n", "oracle_lambda_prefactor", "lambda_min",
                "lambda_max", "kappa_sq", "escalate", "loading_gamma"},
               "ci");
    CIConfig cfg;
    cfg.alpha = get(j, "alpha", cfg.alpha);
    cfg.k = get(j, "k", cfg.k);
    cfg.m1 = get(j, "m1", cfg.m1);
    cfg.gamma0 = get(j, "gamma0", cfg.gamma0);
    cfg.mode = ci_mode_from_string(get<std::string>(j, "mode", "faithful"));
    if (j.contains("constants") && !j.at("constants").is_null()) cfg.constants = constants_from_json(j.at("constants"));
    cfg.lambda_n_override = get_opt<double>(j, "lambda_n");
    cfg.oracle_lambda_prefactor = get(j, "oracle_lambda_prefactor", cfg.oracle_lambda_prefactor);
    cfg.lambda_min = get_opt<double>(j, "lambda_min");
    cfg.lambda_max = get_opt<double>(j, "lambda_max");
    cfg.kappa_sq = get_opt<double>(j, "kappa_sq");
    cfg.escalate = get(j, "escalate", cfg.escalate);
    cfg.loading_gamma = get_opt<double>(j, "loading_gamma");
    return cfg;
}

json to_json(const ExperimentConfig& cfg) {
    json j;
    j["schema_version"] = kSchemaVersion;
    j["sampler"] = to_json(cfg.sampler);
    j["ci"] = to_json(cfg.ci);
    j["interval"] = to_string(cfg.interval);
    json xi;
    switch (cfg.xi.kind) {
        case XiKind::Coordinate: xi = json{{"kind", "coordinate"}, {"index", cfg.xi.index}}; break;
        case XiKind::AllOnes: xi = json{{"kind", "all_ones"}}; break;
        case XiKind::Explicit:
            xi = json{{"kind", "explicit"}, {"values", vector_json(cfg.xi.values)}};
            if (!cfg.xi.path.empty()) xi["path"] = cfg.xi.path;
            break;
    }
    j["xi"] = xi;
    j["replicates"] = cfg.replicates;
    j["base_seed"] = cfg.base_seed;
    if (cfg.sweep) {
        j["sweep"] = json{{"parameter", to_string(cfg.sweep->parameter)}, {"values", cfg.sweep->values}};
    } else {
        j["sweep"] = nullptr;
    }
    j["sigma0"] = optional_json(cfg.sigma0);
    j["sweep_sets_ci_k"] = cfg.sweep_sets_ci_k;
    j["failure_ceiling"] = cfg.failure_ceiling;
    return j;
}

ExperimentConfig experiment_config_from_json(const json& j, const std::filesystem::path& base_dir) {
    check_keys(j,
               {"schema_version", "sampler", "ci", "interval", "xi", "replicates", "base_seed", "sweep", "sigma0",
                "sweep_sets_ci_k", "failure_ceiling"},
               "experiment config");
    if (j.contains("schema_version") && get(j, "schema_version", kSchemaVersion) != kSchemaVersion) {
        fail(ErrorCode::ConfigError, "unsupported schema_version");
    }
    ExperimentConfig cfg;
    if (!j.contains("sampler")) fail(ErrorCode::ConfigError, "experiment config needs 'sampler'");
    cfg.sampler = sampler_config_from_json(j.at("sampler"));
    if (j.contains("ci")) {
        // Simulations escalate by default unless the config says otherwise.
        json ci = j.at("ci");
        if (ci.is_object() && !ci.contains("escalate")) ci["escalate"] = true;
        cfg.ci = ci_config_from_json(ci);
    }
    try {
        cfg.interval = interval_kind_from_string(get<std::string>(j, "interval", "known"));
    } catch (const Error& e) {
        fail(ErrorCode::ConfigError, e.what());
    }
    if (j.contains("xi")) {
        const json& x = j.at("xi");
        require_object(x, "xi");
        const std::string kind = get<std::string>(x, "kind", "coordinate");
        if (kind == "coordinate") {
            check_keys(x, {"kind", "index"}, "xi");
            cfg.xi.kind = XiKind::Coordinate;
            cfg.xi.index = get(x, "index", 0);
        } else if (kind == "all_ones") {
            check_keys(x, {"kind"}, "xi");
            cfg.xi.kind = XiKind::AllOnes;
        } else if (kind == "explicit") {
            check_keys(x, {"kind", "values", "path"}, "xi");
            cfg.xi.kind = XiKind::Explicit;
            if (x.contains("values")) {
                cfg.xi.values = vector_from_json(x.at("values"), "xi values");
                cfg.xi.path = get<std::string>(x, "path", "");
            } else if (x.contains("path")) {
                cfg.xi.path = get<std::string>(x, "path", "");
                std::filesystem::path p(cfg.xi.path);
                if (p.is_relative()) p = base_dir / p;
                try {
                    cfg.xi.values = read_vector_csv(p);
                } catch (const Error& e) {
                    fail(ErrorCode::ConfigError, e.what());
                }
            } else {
                fail(ErrorCode::ConfigError, "explicit xi needs 'values' or 'path'");
            }
        } else {
            fail(ErrorCode::ConfigError, "xi kind must be coordinate, all_ones or explicit");
        }
    }
    cfg.replicates = get(j, "replicates", cfg.replicates);
    cfg.base_seed = get<std::uint64_t>(j, "base_seed", cfg.base_seed);
    if (j.contains("sweep") && !j.at("sweep").is_null()) {
        const json& s = j.at("sweep");
        check_keys(s, {"parameter", "values"}, "sweep");
        Sweep sw;
        sw.parameter = sweep_parameter_from_string(get<std::string>(s, "parameter", "k"));
        sw.values = get<std::vector<int>>(s, "values", {});
        cfg.sweep = sw;
    }
    cfg.sigma0 = get_opt<double>(j, "sigma0");
    cfg.sweep_sets_ci_k = get(j, "sweep_sets_ci_k", cfg.sweep_sets_ci_k);
    cfg.failure_ceiling = get(j, "failure_ceiling", cfg.failure_ceiling);
    cfg.validate();
    return cfg;
}

json to_json(const IntervalResult& r) {
    json diag = json::object();
    for (const auto& [k, v] : r.diagnostics) diag[k] = v;
    return json{{"schema_version", kSchemaVersion},
                {"lower", r.lower},
                {"upper", r.upper},
                {"center", r.center},
                {"radius", r.radius},
                {"regime", to_string(r.regime)},
                {"sigma_hat", r.sigma_hat},
                {"event_a", r.event_a},
                {"degenerate", r.degenerate},
                {"diagnostics", diag}};
}

IntervalResult interval_result_from_json(const json& j) {
    require_object(j, "interval result");
    IntervalResult r;
    try {
        r.lower = j.at("lower").get<double>();
        r.upper = j.at("upper").get<double>();
        r.center = j.at("center").get<double>();
        r.radius = j.at("radius").get<double>();
        r.regime = interval_kind_from_string(j.at("regime").get<std::string>());
        r.sigma_hat = j.at("sigma_hat").get<double>();
        r.event_a = j.at("event_a").get<bool>();
        r.degenerate = j.at("degenerate").get<bool>();
        for (auto it = j.at("diagnostics").begin(); it != j.at("diagnostics").end(); ++it) {
            r.diagnostics[it.key()] = it.value().get<double>();
        }
    } catch (const json::exception& e) {
        fail(ErrorCode::ConfigError, std::string("malformed interval result: ") + e.what());
    }
    return r;
}

json to_json(const CellSummary& c) {
    json records = json::array();
    for (const auto& r : c.records) records.push_back(record_json(r));
    return json{{"swept_value", c.swept_value},
                {"replicates", c.replicates},
                {"evaluated", c.evaluated},
                {"failures", c.failures},
                {"covered", c.covered},
                {"empirical_coverage", c.empirical_coverage},
                {"wilson_interval", json::array({c.wilson.first, c.wilson.second})},
                {"mean_length", c.mean_length},
                {"median_length", c.median_length},
                {"degenerate_fraction", c.degenerate_fraction},
                {"branch1_fraction", c.branch1_fraction},
                {"failure_fraction", c.failure_fraction},
                {"failures_excluded", c.failures_excluded},
                {"records", records}};
}

json to_json(const CoverageReport& r) {
    json cells = json::array();
    for (const auto& c : r.cells) cells.push_back(to_json(c));
    json j{{"schema_version", kSchemaVersion},
           {"version", r.version},
           {"mode", to_string(r.config.ci.mode)},
           {"config", to_json(r.config)},
           {"cells", cells}};
    if (r.fit) {
        j["fit"] = json{{"slope", r.fit->slope}, {"intercept", r.fit->intercept}, {"r_squared", r.fit->r_squared}};
    }
    return j;
}

json to_json(const NonadaptivityReport& r) {
    return json{{"schema_version", kSchemaVersion},
                {"version", library_version()},
                {"mode", to_string(CIMode::OracleNormality)},
                {"n", r.n},
                {"p", r.p},
                {"k_small", r.k_small},
                {"k_large", r.k_large},
                {"alpha", r.alpha},
                {"sigma", r.sigma},
                {"magnitude", r.magnitude},
                {"small", to_json(r.small)},
                {"large", to_json(r.large)},
                {"deficit", r.deficit},
                {"significant", r.significant}};
}

json to_json(const REEstimate& r) {
    return json{{"value", r.value},
                {"mode", to_string(r.mode)},
                {"k", r.k},
                {"alpha0", r.alpha0},
                {"support", r.support},
                {"delta", vector_json(r.delta)}};
}

json to_json(const OmegaSurrogate& r) {
    return json{{"value", r.value},
                {"lambda_min_used", r.lambda_min_used},
                {"lambda_max_used", r.lambda_max_used},
                {"ratio", r.ratio},
                {"plug_in", r.plug_in}};
}

std::string sweep_csv(const CoverageReport& r) {
    std::string out =
        "swept_value,coverage,cov_lo,cov_hi,mean_length,median_length,degenerate_fraction,failure_fraction\n";
    for (const auto& c : r.cells) {
        for (double v : {c.swept_value, c.empirical_coverage, c.wilson.first, c.wilson.second, c.mean_length,
                         c.median_length, c.degenerate_fraction}) {
            out += format_double(v);
            out += ',';
        }
        out += format_double(c.failure_fraction);
        out += '\n';
    }
    return out;
}

Eigen::MatrixXd read_matrix_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorCode::IoError, "cannot open " + path.string());
    std::vector<std::vector<double>> rows;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        std::vector<double> row;
        for (const auto& cell : split_csv_line(line)) row.push_back(parse_number(cell, path, lineno));
        if (!rows.empty() && row.size() != rows.front().size()) {
            fail(ErrorCode::IoError, path.string() + ":" + std::to_string(lineno) + ": row length differs");
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) fail(ErrorCode::IoError, path.string() + " is empty");
    Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t j = 0; j < rows[i].size(); ++j) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    }
    return m;
}

Eigen::VectorXd read_vector_csv(const std::filesystem::path& path) {
    const Eigen::MatrixXd m = read_matrix_csv(path);
    if (m.cols() == 1) return m.col(0);
    if (m.rows() == 1) return m.row(0).transpose();
    fail(ErrorCode::IoError, path.string() + " must hold a single column of values");
}

void write_matrix_csv(const std::filesystem::path& path, const Eigen::MatrixXd& m) {
    std::string out;
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            if (j) out += ',';
            out += format_double(m(i, j));
        }
        out += '\n';
    }
    write_text_file(path, out);
}

json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorCode::ConfigError, "cannot open " + path.string());
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        fail(ErrorCode::ConfigError, path.string() + ": " + e.what());
    }
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(ErrorCode::IoError, "cannot write " + path.string());
    out << text;
    if (!out) fail(ErrorCode::IoError, "write failed for " + path.string());
}

}  // namespace hdci
