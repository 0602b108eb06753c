#include "kzlab/randwalk.hpp"

#include <atomic>
#include <cmath>
#include <limits>
#include <thread>

namespace kzlab::randwalk {

double opnorm(const Mat2& m) {
    const double a = m.squaredNorm();
    const double d = m.determinant();
    const double disc = std::max(0.0, a * a - 4 * d * d);
    return std::sqrt(0.5 * (a + std::sqrt(disc)));
}

double group_norm(const Mat2& g) { return std::log(std::max(1.0, opnorm(g))); }

Complex mobius(const Mat2& g, Complex z) {
    return (g(0, 0) * z + g(0, 1)) / (g(1, 0) * z + g(1, 1));
}

double hyperbolic_distance(Complex z, Complex w) {
    const double num = std::norm(z - w);
    return std::acosh(1.0 + num / (2.0 * z.imag() * w.imag()));
}

Complex reduce_modular(Complex z) {
    if (z.imag() <= 0) throw DomainError("reduce_modular: point not in the upper half-plane");
    for (int iter = 0; iter < 500; ++iter) {
        z -= std::round(z.real());
        if (std::norm(z) < 1.0 - 1e-15) {
            z = -1.0 / z;
            continue;
        }
        return z;
    }
    throw StructureError("reduce_modular: reduction did not terminate");
}

WalkMeasure::WalkMeasure(std::vector<Mat2> support, std::vector<double> probabilities)
    : support_(std::move(support)), probs_(std::move(probabilities)) {
    if (support_.empty() || support_.size() != probs_.size())
        throw StructureError("walk measure: support/probability size mismatch");
    double total = 0.0;
    for (std::size_t i = 0; i < support_.size(); ++i) {
        if (probs_[i] <= 0) throw StructureError("walk measure: probabilities must be positive");
        if (std::abs(support_[i].determinant() - 1.0) > 1e-10)
            throw StructureError("walk measure: support matrix determinant differs from 1");
        total += probs_[i];
        cumulative_.push_back(total);
    }
    if (std::abs(total - 1.0) > config().sum_tol)
        throw StructureError("walk measure: probabilities do not sum to 1");
    cumulative_.back() = 1.0;
}

WalkMeasure WalkMeasure::uniform(std::vector<Mat2> support) {
    const std::size_t k = support.size();
    return WalkMeasure(std::move(support),
                       std::vector<double>(k, 1.0 / static_cast<double>(k)));
}

WalkMeasure measure_from_json(const Json& j) {
    std::vector<Mat2> support;
    std::vector<double> probs;
    for (const auto& item : j.at("support")) {
        const RMat m = rmat_from_json(item.at("matrix"));
        if (m.rows() != 2 || m.cols() != 2)
            throw StructureError("walk measure: matrices must be 2x2");
        support.push_back(m);
        probs.push_back(item.at("prob").get<double>());
    }
    return WalkMeasure(std::move(support), std::move(probs));
}

Json measure_to_json(const WalkMeasure& nu) {
    Json out;
    Json sup = Json::array();
    for (std::size_t i = 0; i < nu.support().size(); ++i) {
        Json item;
        item["matrix"] = rmat_to_json(nu.support()[i]);
        item["prob"] = nu.probabilities()[i];
        sup.push_back(item);
    }
    out["support"] = sup;
    return out;
}

WalkMeasure hyperbolic_pair_measure() {
    Mat2 a;
    a << std::exp(1.0), 0, 0, std::exp(-1.0);
    const double c = std::sqrt(0.5);
    Mat2 r;
    r << c, -c, c, c;
    const Mat2 b = r * a * r.transpose();
    return WalkMeasure::uniform({a, b});
}

WalkMeasure rotation_measure() {
    Mat2 r1, r2;
    const double t = 0.7;
    r1 << std::cos(t), -std::sin(t), std::sin(t), std::cos(t);
    r2 = r1.transpose();
    return WalkMeasure::uniform({r1, r2});
}

WalkMeasure rotation_symmetric_measure() {
    Mat2 a;
    a << std::exp(1.0), 0, 0, std::exp(-1.0);
    std::vector<Mat2> support;
    for (int j = 0; j < 4; ++j) {
        const double t = j * 0.25 * 3.14159265358979323846;
        Mat2 u;
        u << std::cos(t), -std::sin(t), std::sin(t), std::cos(t);
        support.push_back(u * a * u.transpose());
    }
    return WalkMeasure::uniform(support);
}

namespace {

bool is_rotation(const Mat2& g) {
    return (g.transpose() * g - Mat2::Identity()).norm() < 1e-9;
}

bool is_pm_identity(const Mat2& g) {
    return (g - Mat2::Identity()).norm() < 1e-12 || (g + Mat2::Identity()).norm() < 1e-12;
}

/// Real eigendirections of a det-1 matrix (unit vectors), empty when the
/// eigenvalues are not real.
std::vector<Eigen::Vector2d> real_eigendirections(const Mat2& g) {
    std::vector<Eigen::Vector2d> dirs;
    const double t = g.trace();
    const double disc = t * t - 4.0;
    if (disc < -1e-12) return dirs;
    const double root = std::sqrt(std::max(0.0, disc));
    for (const double lam : {(t + root) / 2, (t - root) / 2}) {
        const Mat2 m = g - lam * Mat2::Identity();
        // null direction of a (numerically) singular 2x2
        Eigen::Vector2d v;
        if (m.row(0).norm() > m.row(1).norm())
            v = Eigen::Vector2d(-m(0, 1), m(0, 0));
        else
            v = Eigen::Vector2d(-m(1, 1), m(1, 0));
        if (v.norm() < 1e-12) continue;
        v.normalize();
        if ((m * v).norm() < 1e-7) {
            bool dup = false;
            for (const auto& d : dirs)
                if (std::abs(d.dot(v)) > 1 - 1e-9) dup = true;
            if (!dup) dirs.push_back(v);
        }
        if (std::abs(root) < 1e-12) break;  // parabolic: single direction
    }
    return dirs;
}

}  // namespace

GenerationCheck support_generates(const WalkMeasure& nu) {
    GenerationCheck out;
    bool all_rotations = true;
    for (const auto& g : nu.support())
        if (!is_rotation(g)) all_rotations = false;
    if (all_rotations) {
        out.generates = false;
        out.reason = "support lies in SO(2)";
        return out;
    }

    // common real eigenvector across the support (+-identity excluded)
    std::vector<Eigen::Vector2d> candidates;
    bool have_candidates = false;
    for (const auto& g : nu.support()) {
        if (is_pm_identity(g)) continue;
        const auto dirs = real_eigendirections(g);
        if (!have_candidates) {
            candidates = dirs;
            have_candidates = true;
        } else {
            std::vector<Eigen::Vector2d> kept;
            for (const auto& c : candidates)
                for (const auto& d : dirs)
                    if (std::abs(c.dot(d)) > 1 - 1e-9) kept.push_back(c);
            candidates = kept;
        }
        if (candidates.empty()) break;
    }
    if (have_candidates && !candidates.empty()) {
        out.generates = false;
        out.reason = "support has a common real eigenvector (simultaneously triangularizable)";
        return out;
    }
    out.generates = true;
    out.reason = "accepted by the generation heuristic";
    return out;
}

void ScaledMatrix::apply_left(const Mat2& g) {
    m = g * m;
    const double n = m.norm();
    if (n > 1e12 || n < 1e-12) {
        log_scale += std::log(n);
        m /= n;
    }
}

double displacement(const ScaledMatrix& g) { return 2.0 * std::max(0.0, g.log_opnorm()); }

double polar_distance(const PolarPoint& a, const PolarPoint& b) {
    constexpr double kPi = 3.14159265358979323846;
    double dphi = std::fmod(std::abs(2.0 * (a.theta - b.theta)), 2 * kPi);
    if (dphi > kPi) dphi = 2 * kPi - dphi;
    // angles converge exponentially along walks, far below double resolution;
    // once dphi sits at ulp scale it is quantization noise and the angular
    // term (amplified by sinh r sinh r) would be garbage, so clamp it away
    if (dphi < 1e-12) dphi = 0.0;
    const double s = std::sin(0.5 * dphi);
    const double one_minus_cos = 2.0 * s * s;
    const double dr = std::abs(a.radius - b.radius);

    if (std::max(a.radius, b.radius) < 350.0) {
        const double x = std::cosh(dr) +
                         std::sinh(a.radius) * std::sinh(b.radius) * one_minus_cos;
        return std::acosh(std::max(1.0, x));
    }
    // log-domain: d = log(2X) up to O(e^{-2d}) once X is astronomically large
    const auto lsinh = [](double r) {
        if (r <= 0) return -std::numeric_limits<double>::infinity();
        return r < 20 ? std::log(std::sinh(r)) : r - std::log(2.0);
    };
    const double log_cosh = dr < 30 ? std::log(std::cosh(dr)) : dr - std::log(2.0);
    double log_s = -std::numeric_limits<double>::infinity();
    if (one_minus_cos > 0)
        log_s = lsinh(a.radius) + lsinh(b.radius) + std::log(one_minus_cos);
    const double hi = std::max(log_cosh, log_s);
    const double log_x =
        hi + std::log1p(std::exp(std::min(log_cosh, log_s) - hi));
    if (log_x < 32.0) return std::acosh(std::max(1.0, std::exp(log_x)));
    return std::log(2.0) + log_x;  // acosh(X) up to O(X^-2)
}

void CartanWalker::step_right(const Mat2& g) {
    constexpr double kPi = 3.14159265358979323846;
    const double c = std::cos(psi_), s = std::sin(psi_);
    Mat2 kpsi;
    kpsi << c, -s, s, c;
    const Mat2 m = kpsi * g;
    if (log_sigma_ < 30.0) {
        Mat2 full = m;
        full.row(0) *= std::exp(log_sigma_);
        full.row(1) *= std::exp(-log_sigma_);
        Eigen::JacobiSVD<Mat2> svd(full, Eigen::ComputeFullU | Eigen::ComputeFullV);
        Mat2 u = svd.matrixU();
        Mat2 v = svd.matrixV();
        if (u.determinant() < 0) {
            u.col(1) *= -1.0;
            v.col(1) *= -1.0;
        }
        log_sigma_ = std::log(svd.singularValues()(0));
        theta_ += std::atan2(u(1, 0), u(0, 0));
        psi_ = std::atan2(-v(1, 0), v(0, 0));
    } else {
        // the contracted row carries weight e^{-2L}: the left rotation of the
        // step is below double resolution, so only L and the right rotation
        // move (this is exactly why the position direction converges)
        const Eigen::Vector2d top = m.row(0);
        log_sigma_ += std::log(top.norm());
        psi_ = std::atan2(-top(1) / top.norm(), top(0) / top.norm());
    }
    theta_ = std::fmod(theta_, kPi);
    if (theta_ < 0) theta_ += kPi;
}

Trajectory sample_products(const WalkMeasure& nu, int n, std::uint64_t seed) {
    if (n < 0) throw DomainError("sample_products: n must be >= 0");
    Trajectory t;
    t.seed = seed;
    Rng rng(seed);
    ScaledMatrix prod;
    for (int i = 0; i < n; ++i) {
        const int idx = nu.sample(rng);
        t.increments.push_back(idx);
        prod.apply_left(nu.support()[static_cast<std::size_t>(idx)]);
        t.products.push_back(prod);
    }
    return t;
}

namespace {

/// Run `trials` independent jobs with derived seeds, results in trial order.
std::vector<double> run_trials(int trials, int threads, std::uint64_t seed,
                               const std::function<double(std::uint64_t)>& job) {
    std::vector<double> results(static_cast<std::size_t>(trials));
    if (threads <= 1) {
        for (int t = 0; t < trials; ++t)
            results[static_cast<std::size_t>(t)] = job(derive_seed(seed, static_cast<std::uint64_t>(t)));
        return results;
    }
    std::vector<std::thread> pool;
    std::atomic<int> next{0};
    for (int w = 0; w < threads; ++w)
        pool.emplace_back([&]() {
            while (true) {
                const int t = next.fetch_add(1);
                if (t >= trials) break;
                results[static_cast<std::size_t>(t)] =
                    job(derive_seed(seed, static_cast<std::uint64_t>(t)));
            }
        });
    for (auto& th : pool) th.join();
    return results;
}

}  // namespace

DriftResult drift(const WalkMeasure& nu, int n, int trials, std::uint64_t seed, int threads) {
    const auto gen = support_generates(nu);
    if (!gen.generates) throw PreconditionError("drift: " + gen.reason);
    if (n < 1 || trials < 1) throw DomainError("drift: need n >= 1 and trials >= 1");

    DriftResult out;
    out.per_trial = run_trials(trials, threads, seed, [&](std::uint64_t s) {
        Rng rng(s);
        ScaledMatrix prod;
        for (int i = 0; i < n; ++i)
            prod.apply_left(nu.support()[static_cast<std::size_t>(nu.sample(rng))]);
        return prod.log_opnorm() / static_cast<double>(n);
    });
    const auto ms = mean_stderr(out.per_trial);
    out.delta = ms.mean;
    out.stderr_ = ms.stderr_;
    out.ci_halfwidth = 2.0 * ms.stderr_;
    return out;
}

TrackingResult tracking_error(const WalkMeasure& nu, int n, std::uint64_t seed,
                              int drift_trials) {
    if (n < 1) throw DomainError("tracking_error: n must be >= 1");
    Rng rng(seed);
    // [g_k ... g_1 x] in K\G corresponds to the right-appended product of the
    // inverses acting on i; that is the path with a converging direction
    CartanWalker walker;
    std::vector<PolarPoint> path;
    path.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        const Mat2& g = nu.support()[static_cast<std::size_t>(nu.sample(rng))];
        Mat2 ginv;
        ginv << g(1, 1), -g(0, 1), -g(1, 0), g(0, 0);
        walker.step_right(ginv);
        path.push_back(walker.position());
    }

    TrackingResult out;
    // ensemble drift on independent streams (no generation gate: delta
    // measures of a single hyperbolic matrix are legitimate here)
    {
        std::vector<double> rates;
        for (int t = 0; t < drift_trials; ++t) {
            Rng trng(derive_seed(seed ^ 0x747261636bULL, static_cast<std::uint64_t>(t)));
            ScaledMatrix prod;
            for (int i = 0; i < n; ++i)
                prod.apply_left(nu.support()[static_cast<std::size_t>(nu.sample(trng))]);
            rates.push_back(prod.log_opnorm() / static_cast<double>(n));
        }
        out.delta_hyp = 2.0 * mean_stderr(rates).mean;
    }
    // the geodesic ray toward the terminal singular direction
    const double theta_star = path.back().theta;
    out.error.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        const PolarPoint geo{out.delta_hyp * static_cast<double>(i + 1), theta_star};
        out.error[static_cast<std::size_t>(i)] =
            polar_distance(path[static_cast<std::size_t>(i)], geo) /
            static_cast<double>(i + 1);
    }
    out.terminal = out.error.back();
    return out;
}

TamenessReport tameness_estimate(const std::function<double(const ScaledMatrix&)>& f,
                                 const std::vector<ScaledMatrix>& samples) {
    if (samples.empty()) throw PreconditionError("tameness_estimate: empty sample set");
    TamenessReport out;
    // dyadic shells of the group norm, starting at [0.5, 1)
    const double base = 0.5;
    for (const auto& g : samples) {
        const double s = std::max(std::max(0.0, g.log_opnorm()), base);
        int shell = 0;
        double lo = base;
        while (s >= 2 * lo) {
            lo *= 2;
            ++shell;
        }
        if (static_cast<std::size_t>(shell) >= out.shell_ratio.size()) {
            out.shell_ratio.resize(static_cast<std::size_t>(shell) + 1, 0.0);
            out.shell_count.resize(static_cast<std::size_t>(shell) + 1, 0);
        }
        const double ratio = std::abs(f(g)) / s;
        out.shell_ratio[static_cast<std::size_t>(shell)] =
            std::max(out.shell_ratio[static_cast<std::size_t>(shell)], ratio);
        out.shell_count[static_cast<std::size_t>(shell)] += 1;
    }
    // superlinear flag: ratios grow across populated shells
    double first = -1, last = -1;
    for (std::size_t i = 0; i < out.shell_ratio.size(); ++i)
        if (out.shell_count[i] > 0) {
            if (first < 0) first = out.shell_ratio[i];
            last = out.shell_ratio[i];
        }
    out.superlinear = first >= 0 && last > 2.0 * std::max(first, 1e-12);
    return out;
}

std::vector<ScaledMatrix> sample_group_points(const WalkMeasure& nu, int count, int max_len,
                                              std::uint64_t seed) {
    std::vector<ScaledMatrix> out;
    Rng rng(seed);
    for (int i = 0; i < count; ++i) {
        const int len = 1 + static_cast<int>(rng.uniform() * max_len);
        ScaledMatrix prod;
        for (int s = 0; s < len; ++s)
            prod.apply_left(nu.support()[static_cast<std::size_t>(nu.sample(rng))]);
        out.push_back(prod);
    }
    return out;
}

template <class Space>
SubharmonicityReport subharmonicity_report(const WalkMeasure& nu, const SpaceFn<Space>& f,
                                           const std::vector<typename Space::Point>& samples,
                                           int n, int trials, std::uint64_t seed, int threads) {
    if (samples.empty()) throw PreconditionError("subharmonicity_report: empty sample set");
    SubharmonicityReport out;

    double min_l = std::numeric_limits<double>::infinity();
    double max_l = -std::numeric_limits<double>::infinity();
    double scale = 1.0;
    for (const auto& x : samples) {
        const double l = walk_laplacian<Space>(nu, f, x);
        min_l = std::min(min_l, l);
        max_l = std::max(max_l, l);
        scale = std::max(scale, std::abs(f(x)));
    }
    out.min_laplacian = min_l;
    out.max_laplacian = max_l;

    const double tol = 1e-9 * scale;
    if (std::abs(min_l) <= tol && std::abs(max_l) <= tol)
        out.classification = "harmonic";
    else if (min_l >= -tol)
        out.classification = "subharmonic";
    else
        out.classification = "neither";

    // telescoping estimate A_N = (1/N) [E f(g_N ... g_1 x) - f(x)]
    const auto x0 = samples.front();
    const double f0 = f(x0);
    const auto per_trial = run_trials(trials, threads, seed, [&](std::uint64_t s) {
        Rng rng(s);
        typename Space::Point pos = x0;
        for (int i = 0; i < n; ++i)
            pos = Space::act(nu.support()[static_cast<std::size_t>(nu.sample(rng))], pos);
        return (f(pos) - f0) / static_cast<double>(n);
    });
    const auto ms = mean_stderr(per_trial);
    out.a_n = ms.mean;
    out.a_n_stderr = ms.stderr_;

    // reference: hyperbolic displacement rate = twice the matrix-norm drift
    const auto gen = support_generates(nu);
    if (gen.generates) {
        const auto d = drift(nu, std::min(n, 2000), std::min(trials, 20),
                             derive_seed(seed, 0xd21fULL), threads);
        out.reference_rate = 2.0 * d.delta;
    }

    const double noise = std::max(config().classify_sigmas * out.a_n_stderr, 1e-6 * scale);
    out.constancy_forced =
        out.classification != "neither" && std::abs(out.a_n) <= noise;
    return out;
}

template SubharmonicityReport subharmonicity_report<GroupSpace>(
    const WalkMeasure&, const SpaceFn<GroupSpace>&, const std::vector<ScaledMatrix>&, int, int,
    std::uint64_t, int);
template SubharmonicityReport subharmonicity_report<ModularSpace>(
    const WalkMeasure&, const SpaceFn<ModularSpace>&, const std::vector<Complex>&, int, int,
    std::uint64_t, int);

}  // namespace kzlab::randwalk
