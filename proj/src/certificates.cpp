#include "hdci/certificates.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <Eigen/Eigenvalues>

#include "hdci/rng.hpp"

namespace hdci {

namespace {

// Euclidean projection onto {w : ||w||_1 <= r} (sort-based).
Eigen::VectorXd project_l1_ball(const Eigen::VectorXd& v, double r) {
    if (v.lpNorm<1>() <= r) return v;
    if (r <= 0.0) return Eigen::VectorXd::Zero(v.size());
    std::vector<double> a(v.size());
    for (Eigen::Index i = 0; i < v.size(); ++i) a[i] = std::abs(v[i]);
    std::sort(a.begin(), a.end(), std::greater<>());
    double cum = 0.0;
    double theta = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        cum += a[i];
        const double t = (cum - r) / static_cast<double>(i + 1);
        if (a[i] - t > 0.0) theta = t;
    }
    Eigen::VectorXd out(v.size());
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        out[i] = std::copysign(std::max(0.0, std::abs(v[i]) - theta), v[i]);
    }
    return out;
}

// Restriction of the Gram matrix to a support J and its complement, with the
// inner cone problem
//   min_w  d'G_JJ d + 2 w'G_CJ d + w'G_CC w   s.t.  ||w||_1 <= alpha0 ||d||_1
// solved by FISTA with adaptive restart.
class SupportProblem {
public:
    SupportProblem(const Eigen::MatrixXd& g, std::vector<int> support, double alpha0, double lipschitz)
        : support_(std::move(support)), alpha0_(alpha0), step_(lipschitz > 0.0 ? 1.0 / lipschitz : 0.0) {
        const int p = static_cast<int>(g.rows());
        std::vector<bool> in(p, false);
        for (int j : support_) in[j] = true;
        for (int j = 0; j < p; ++j) {
            if (!in[j]) comp_.push_back(j);
        }
        const auto s = static_cast<Eigen::Index>(support_.size());
        const auto c = static_cast<Eigen::Index>(comp_.size());
        gjj_.resize(s, s);
        gcj_.resize(c, s);
        gcc_.resize(c, c);
        for (Eigen::Index a = 0; a < s; ++a) {
            for (Eigen::Index b = 0; b < s; ++b) gjj_(a, b) = g(support_[a], support_[b]);
            for (Eigen::Index b = 0; b < c; ++b) gcj_(b, a) = g(comp_[b], support_[a]);
        }
        for (Eigen::Index a = 0; a < c; ++a) {
            for (Eigen::Index b = 0; b < c; ++b) gcc_(a, b) = g(comp_[a], comp_[b]);
        }
        warm_ = Eigen::VectorXd::Zero(c);
    }

    Eigen::Index dim() const { return static_cast<Eigen::Index>(support_.size()); }
    const Eigen::MatrixXd& gjj() const { return gjj_; }

    // Value at unit direction d; the minimizing w is kept as the next warm start.
    double value(const Eigen::VectorXd& d) {
        const double base = d.dot(gjj_ * d);
        if (comp_.empty() || alpha0_ == 0.0) {
            last_w_ = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(comp_.size()));
            return std::max(0.0, base);
        }
        const double r = alpha0_ * d.lpNorm<1>();
        const Eigen::VectorXd b = gcj_ * d;
        auto f = [&](const Eigen::VectorXd& w) { return base + 2.0 * b.dot(w) + w.dot(gcc_ * w); };

        Eigen::VectorXd w = project_l1_ball(warm_, r);
        Eigen::VectorXd yk = w;
        double t = 1.0;
        double fw = f(w);
        bool restarted = true;
        for (int it = 0; it < 20000; ++it) {
            const Eigen::VectorXd grad = 2.0 * (b + gcc_ * yk);
            Eigen::VectorXd next = project_l1_ball(yk - step_ * grad, r);
            const double fn = f(next);
            if (fn > fw) {
                if (restarted) break;  // no descent even without momentum
                // Restart momentum from the last accepted point.
                yk = w;
                t = 1.0;
                restarted = true;
                continue;
            }
            restarted = false;
            const double move = (next - w).lpNorm<Eigen::Infinity>();
            const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
            yk = next + ((t - 1.0) / t_next) * (next - w);
            t = t_next;
            w = std::move(next);
            fw = fn;
            if (move <= 1e-15 * (1.0 + w.lpNorm<Eigen::Infinity>())) break;
        }
        warm_ = w;
        last_w_ = w;
        return std::max(0.0, fw);
    }

    Eigen::VectorXd full_delta(const Eigen::VectorXd& d, Eigen::Index p) const {
        Eigen::VectorXd delta = Eigen::VectorXd::Zero(p);
        for (std::size_t a = 0; a < support_.size(); ++a) delta[support_[a]] = d[static_cast<Eigen::Index>(a)];
        for (std::size_t a = 0; a < comp_.size(); ++a) delta[comp_[a]] = last_w_[static_cast<Eigen::Index>(a)];
        return delta;
    }

    const std::vector<int>& support() const { return support_; }

private:
    std::vector<int> support_;
    std::vector<int> comp_;
    double alpha0_;
    double step_;
    Eigen::MatrixXd gjj_, gcj_, gcc_;
    Eigen::VectorXd warm_;
    Eigen::VectorXd last_w_;
};

struct Best {
    double value = std::numeric_limits<double>::infinity();
    std::vector<int> support;
    Eigen::VectorXd delta;

    void offer(double v, SupportProblem& prob, const Eigen::VectorXd& d, Eigen::Index p) {
        if (v < value) {
            value = v;
            support = prob.support();
            // Re-evaluate so the stored w belongs to d.
            prob.value(d);
            delta = prob.full_delta(d, p);
        }
    }
};

Eigen::VectorXd angle_dir(double theta) {
    Eigen::VectorXd d(2);
    d << std::cos(theta), std::sin(theta);
    return d;
}

// Grid over [0, pi) at 0.5 degree, then golden-section refinement around
// every grid local minimum (the objective has period pi in the angle).
void oracle_pair(SupportProblem& prob, Eigen::Index p, Best& best) {
    constexpr int kGrid = 360;
    const double h = std::numbers::pi / kGrid;
    std::vector<double> vals(kGrid);
    for (int i = 0; i < kGrid; ++i) vals[i] = prob.value(angle_dir(i * h));

    constexpr double inv_phi = 0.6180339887498949;
    for (int i = 0; i < kGrid; ++i) {
        const double left = vals[(i + kGrid - 1) % kGrid];
        const double right = vals[(i + 1) % kGrid];
        if (vals[i] > left || vals[i] > right) continue;
        if (i > 0 && vals[i] == left) continue;  // plateau already handled
        best.offer(vals[i], prob, angle_dir(i * h), p);

        double a = (i - 1) * h;
        double b = (i + 1) * h;
        double c = b - inv_phi * (b - a);
        double d = a + inv_phi * (b - a);
        double fc = prob.value(angle_dir(c));
        double fd = prob.value(angle_dir(d));
        while (b - a > 1e-10) {
            if (fc <= fd) {
                b = d;
                d = c;
                fd = fc;
                c = b - inv_phi * (b - a);
                fc = prob.value(angle_dir(c));
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + inv_phi * (b - a);
                fd = prob.value(angle_dir(d));
            }
        }
        if (fc <= fd) {
            best.offer(fc, prob, angle_dir(c), p);
        } else {
            best.offer(fd, prob, angle_dir(d), p);
        }
    }
}

// Projected descent on the unit sphere with finite-difference gradients.
void descend(SupportProblem& prob, Eigen::VectorXd d, int iterations, Eigen::Index p, Best& best) {
    d.normalize();
    double fd = prob.value(d);
    const Eigen::Index s = d.size();
    double step = 0.1;
    for (int it = 0; it < iterations && step > 1e-12; ++it) {
        Eigen::VectorXd grad(s);
        const double eps = 1e-6;
        for (Eigen::Index a = 0; a < s; ++a) {
            Eigen::VectorXd up = d, dn = d;
            up[a] += eps;
            dn[a] -= eps;
            grad[a] = (prob.value(up.normalized()) - prob.value(dn.normalized())) / (2.0 * eps);
        }
        grad -= grad.dot(d) * d;
        const double gn = grad.norm();
        if (gn < 1e-14) break;
        bool moved = false;
        while (step > 1e-12) {
            const Eigen::VectorXd trial = (d - step * grad / gn).normalized();
            const double ft = prob.value(trial);
            if (ft < fd) {
                d = trial;
                fd = ft;
                step *= 2.0;
                moved = true;
                break;
            }
            step *= 0.5;
        }
        if (!moved) break;
    }
    best.offer(prob.value(d), prob, d, p);
}

void for_each_subset(int p, int size, const std::function<void(const std::vector<int>&)>& fn) {
    std::vector<int> idx(size);
    for (int i = 0; i < size; ++i) idx[i] = i;
    while (true) {
        fn(idx);
        int i = size - 1;
        while (i >= 0 && idx[i] == p - size + i) --i;
        if (i < 0) return;
        ++idx[i];
        for (int j = i + 1; j < size; ++j) idx[j] = idx[j - 1] + 1;
    }
}

double binomial(int n, int r) {
    double out = 1.0;
    for (int i = 1; i <= r; ++i) out = out * (n - r + i) / i;
    return out;
}

}  // namespace

bool Constants::is_default() const {
    const Constants d;
    return c1 == d.c1 && re == d.re && c2 == d.c2 && cone == d.cone && omega == d.omega && lambda_n == d.lambda_n;
}

const char* to_string(REMode mode) {
    return mode == REMode::BruteForceOracle ? "brute_force_oracle" : "heuristic_upper";
}

REEstimate restricted_eigenvalue(const Dataset& data, int k, double alpha0, REMode mode, const HeuristicOptions& opts) {
    const int p = static_cast<int>(data.p());
    if (k < 1 || k > p) fail(ErrorCode::InvalidArgument, "restricted eigenvalue needs 1 <= k <= p");
    if (!(alpha0 >= 0.0) || !std::isfinite(alpha0)) fail(ErrorCode::InvalidArgument, "alpha0 must be nonnegative");
    if (mode == REMode::BruteForceOracle && (p > 12 || k > 2)) {
        fail(ErrorCode::OracleTooLarge, "brute-force restricted eigenvalue is limited to p <= 12 and k <= 2");
    }

    const Eigen::MatrixXd g = data.gram();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(g, Eigen::EigenvaluesOnly);
    const double lipschitz = 2.0 * eig.eigenvalues().maxCoeff();

    Best best;
    if (mode == REMode::BruteForceOracle) {
        for (int size = 1; size <= k; ++size) {
            for_each_subset(p, size, [&](const std::vector<int>& j) {
                SupportProblem prob(g, j, alpha0, lipschitz);
                if (size == 1) {
                    const Eigen::VectorXd d = Eigen::VectorXd::Ones(1);
                    best.offer(prob.value(d), prob, d, p);
                } else {
                    oracle_pair(prob, p, best);
                }
            });
        }
    } else {
        std::vector<std::vector<int>> supports;
        double total = 0.0;
        for (int size = 1; size <= k; ++size) total += binomial(p, size);
        if (total <= opts.max_supports) {
            for (int size = 1; size <= k; ++size) {
                for_each_subset(p, size, [&](const std::vector<int>& j) { supports.push_back(j); });
            }
        } else {
            Philox rng(opts.seed, 0);
            for (int j = 0; j < p && static_cast<int>(supports.size()) < opts.max_supports / 2; ++j) {
                supports.push_back({j});
            }
            std::vector<int> perm(p);
            while (static_cast<int>(supports.size()) < opts.max_supports) {
                for (int j = 0; j < p; ++j) perm[j] = j;
                for (int i = 0; i < k; ++i) {
                    const auto r = i + static_cast<int>(rng.below(static_cast<std::uint64_t>(p - i)));
                    std::swap(perm[i], perm[r]);
                }
                std::vector<int> j(perm.begin(), perm.begin() + k);
                std::sort(j.begin(), j.end());
                supports.push_back(std::move(j));
            }
        }

        Philox dir_rng(opts.seed, 1);
        for (const auto& j : supports) {
            SupportProblem prob(g, j, alpha0, lipschitz);
            if (j.size() == 1) {
                const Eigen::VectorXd d = Eigen::VectorXd::Ones(1);
                best.offer(prob.value(d), prob, d, p);
                continue;
            }
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> local(prob.gjj());
            descend(prob, local.eigenvectors().col(0), opts.descent_iterations, p, best);
            for (int s = 0; s < opts.starts; ++s) {
                descend(prob, dir_rng.normals(prob.dim()), opts.descent_iterations, p, best);
            }
        }
    }

    REEstimate out;
    out.mode = mode;
    out.k = k;
    out.alpha0 = alpha0;
    out.value = std::sqrt(std::max(0.0, best.value));
    out.support = best.support;
    out.delta = best.delta;
    return out;
}

double column_norm_ratio(const Dataset& data) {
    const Eigen::VectorXd norms = data.column_norms();
    return norms.maxCoeff() / norms.minCoeff();
}

double default_cone_alpha0(const Dataset& data, const Constants& c) { return c.cone * column_norm_ratio(data); }

OmegaSurrogate omega_surrogate(double lambda_min, double lambda_max, const Dataset& data, int k, bool plug_in,
                               const Constants& c) {
    if (!(lambda_min > 0.0) || !(lambda_max >= lambda_min) || !std::isfinite(lambda_max)) {
        fail(ErrorCode::BadEigenOrder, "omega surrogate needs 0 < lambda_min <= lambda_max");
    }
    if (k < 0) fail(ErrorCode::InvalidArgument, "sparsity must be nonnegative");
    OmegaSurrogate out;
    out.lambda_min_used = lambda_min;
    out.lambda_max_used = lambda_max;
    out.ratio = column_norm_ratio(data);
    out.plug_in = plug_in;
    const double n = static_cast<double>(data.n());
    const double log_p = std::log(static_cast<double>(data.p()));
    out.value = omega_value(lambda_min, lambda_max, out.ratio, k * log_p / n, c);
    return out;
}

double omega_value(double lambda_min, double lambda_max, double ratio, double k_log_p_over_n, const Constants& c) {
    if (!(lambda_min > 0.0) || !(lambda_max >= lambda_min) || !std::isfinite(lambda_max)) {
        fail(ErrorCode::BadEigenOrder, "omega surrogate needs 0 < lambda_min <= lambda_max");
    }
    if (!(k_log_p_over_n >= 0.0)) fail(ErrorCode::InvalidArgument, "k log p / n must be nonnegative");
    const double inner = 1.0 / (4.0 * std::sqrt(lambda_max)) -
                         c.omega * (1.0 + c.cone * ratio) / std::sqrt(lambda_min) * std::sqrt(k_log_p_over_n);
    const double clipped = std::max(0.0, inner);
    return clipped * clipped;
}

namespace {

double re_constant(const Dataset& data, double kappa_sq, double prefactor, const Constants& c) {
    if (!(kappa_sq > 0.0)) fail(ErrorCode::ZeroKappa, "kappa_sq must be positive; use the capped branch instead");
    const Eigen::VectorXd norms = data.column_norms();
    const double n = static_cast<double>(data.n());
    const double lead = prefactor * std::sqrt(n) / norms.minCoeff();
    const double max_sq = norms.maxCoeff() * norms.maxCoeff();
    return lead * std::max(1.25, c.re * max_sq / (n * kappa_sq));
}

}  // namespace

double c1_constant(const Dataset& data, int k, double kappa_sq, double m1, const Constants& c) {
    if (k < 0) fail(ErrorCode::InvalidArgument, "sparsity must be nonnegative");
    return re_constant(data, kappa_sq, c.c1 * m1 * m1, c);
}

double c2_constant(const Dataset& data, int k, double kappa_sq, const Constants& c) {
    if (k < 0) fail(ErrorCode::InvalidArgument, "sparsity must be nonnegative");
    return re_constant(data, kappa_sq, c.c2, c);
}

}  // namespace hdci
