#pragma once

#include <Eigen/Dense>
#include <functional>
#include <string>
#include <vector>

#include "kzlab/config.hpp"
#include "kzlab/json_util.hpp"
#include "kzlab/rng.hpp"

namespace kzlab::randwalk {

using Mat2 = Eigen::Matrix2d;

/// Operator norm (largest singular value) of a 2x2 real matrix.
double opnorm(const Mat2& m);

/// Group-scale norm log ||g||; vanishes exactly on rotations, grows linearly
/// along geodesics (d_hyp(i, g i) = 2 log ||g|| for positive symmetric g).
double group_norm(const Mat2& g);

// hyperbolic plane helpers (upper half-plane model)
Complex mobius(const Mat2& g, Complex z);
double hyperbolic_distance(Complex z, Complex w);
/// Reduce to the standard fundamental domain of SL(2,Z).
Complex reduce_modular(Complex z);

/// Finitely supported probability measure on determinant-one matrices.
class WalkMeasure {
public:
    WalkMeasure(std::vector<Mat2> support, std::vector<double> probabilities);
    static WalkMeasure uniform(std::vector<Mat2> support);

    const std::vector<Mat2>& support() const { return support_; }
    const std::vector<double>& probabilities() const { return probs_; }
    int sample(Rng& rng) const { return rng.categorical(cumulative_); }

private:
    std::vector<Mat2> support_;
    std::vector<double> probs_;
    std::vector<double> cumulative_;
};

WalkMeasure measure_from_json(const Json& j);
Json measure_to_json(const WalkMeasure& nu);

/// The canonical generating measure: diag(e, 1/e) and its conjugate by a
/// rotation of 45 degrees, uniform weights.
WalkMeasure hyperbolic_pair_measure();
/// A measure supported inside SO(2) (rejected by the generation heuristic).
WalkMeasure rotation_measure();
/// Discrete stand-in for a K-bi-invariant measure: conjugates of diag(e, 1/e)
/// by rotations of 0, 45, 90, 135 degrees (closed under inverses).
WalkMeasure rotation_symmetric_measure();

struct GenerationCheck {
    bool generates = false;
    std::string reason;
};

/// Computable proxy for "the support generates the group": rejects supports
/// inside SO(2) and supports with a common real eigenvector.
GenerationCheck support_generates(const WalkMeasure& nu);

/// Matrix with a factored-out scale: value = exp(log_scale) * m. Determinant-one
/// products of length 10^4 and beyond stay representable this way.
struct ScaledMatrix {
    Mat2 m = Mat2::Identity();
    double log_scale = 0.0;

    void apply_left(const Mat2& g);
    double log_opnorm() const { return log_scale + std::log(opnorm(m)); }
};

/// Hyperbolic displacement d(o, g o) = 2 log sigma_max(g) of a determinant-one
/// scaled matrix; exact in the upper half-plane model with o = i.
double displacement(const ScaledMatrix& g);

/// Geodesic polar coordinates around o = i: radius r and the K-rotation
/// parameter theta (mod pi); the point is K(theta) a_r o.
struct PolarPoint {
    double radius = 0.0;
    double theta = 0.0;
};

/// Distance between polar points, stable for radii far beyond the range of
/// cosh/sinh (log-domain asymptotics take over there).
double polar_distance(const PolarPoint& a, const PolarPoint& b);

/// Cartan form K(theta) diag(e^L, e^-L) K(psi) of a product grown by RIGHT
/// multiplication, maintained in log space. Right-appended products are the
/// ones whose position K(theta) e^{2L} i converges toward a boundary ray (the
/// walk seen in K\G), which is what geodesic tracking measures.
class CartanWalker {
public:
    void step_right(const Mat2& g);
    PolarPoint position() const { return {2.0 * log_sigma_, theta_}; }
    double log_sigma() const { return log_sigma_; }

private:
    double log_sigma_ = 0.0;  // L, log of the top singular value
    double theta_ = 0.0;      // left rotation parameter
    double psi_ = 0.0;        // right rotation parameter
};

struct Trajectory {
    std::uint64_t seed = 0;
    std::vector<int> increments;          // indices into the support
    std::vector<ScaledMatrix> products;   // products[k] = g_{k+1} ... g_1
};

/// Deterministic: identical (nu, n, seed) gives identical trajectories.
Trajectory sample_products(const WalkMeasure& nu, int n, std::uint64_t seed);

// ---- base spaces -----------------------------------------------------------

/// Functions on the group itself (walk position = scaled matrix).
struct GroupSpace {
    using Point = ScaledMatrix;
    static Point origin() { return ScaledMatrix{}; }
    static Point act(const Mat2& g, const Point& x) {
        Point y = x;
        y.apply_left(g);
        return y;
    }
};

/// The modular surface: upper half-plane mod SL(2,Z), finite invariant area.
struct ModularSpace {
    using Point = Complex;
    static Point origin() { return Complex(0, 1); }
    static Point act(const Mat2& g, const Point& z) { return reduce_modular(mobius(g, z)); }
};

template <class Space>
using SpaceFn = std::function<double(const typename Space::Point&)>;

template <class Space>
double convolve(const WalkMeasure& nu, const SpaceFn<Space>& f,
                const typename Space::Point& x) {
    double s = 0.0;
    for (std::size_t i = 0; i < nu.support().size(); ++i)
        s += nu.probabilities()[i] * f(Space::act(nu.support()[i], x));
    return s;
}

/// L f = nu * f - f.
template <class Space>
double walk_laplacian(const WalkMeasure& nu, const SpaceFn<Space>& f,
                      const typename Space::Point& x) {
    return convolve<Space>(nu, f, x) - f(x);
}

/// Cesaro average (1/N) sum_{i=1}^{N} f(g_i ... g_1 x) along one sampled path.
template <class Space>
double birkhoff_average(const WalkMeasure& nu, const SpaceFn<Space>& f,
                        typename Space::Point x, int n, std::uint64_t seed) {
    if (n < 1) throw DomainError("birkhoff_average: n must be >= 1");
    Rng rng(seed);
    std::vector<double> vals;
    vals.reserve(static_cast<std::size_t>(n));
    typename Space::Point pos = x;
    for (int i = 0; i < n; ++i) {
        pos = Space::act(nu.support()[static_cast<std::size_t>(nu.sample(rng))], pos);
        vals.push_back(f(pos));
    }
    return pairwise_sum(vals) / static_cast<double>(n);
}

// ---- drift and tracking ------------------------------------------------------

struct DriftResult {
    double delta = 0.0;        // mean of (1/N) log ||g_N ... g_1||
    double stderr_ = 0.0;
    double ci_halfwidth = 0.0; // 2 x standard error
    std::vector<double> per_trial;
};

/// Positive for generating measures; throws PreconditionError when the
/// generation heuristic rejects the support.
DriftResult drift(const WalkMeasure& nu, int n, int trials, std::uint64_t seed,
                  int threads = 1);

struct TrackingResult {
    std::vector<double> error;   // e_k = d(z_k, gamma(delta_hyp k)) / k
    double delta_hyp = 0.0;      // hyperbolic drift (ensemble estimate, = 2x matrix drift)
    double terminal = 0.0;       // e_n
};

/// Distance between the walk path in the hyperbolic plane and the geodesic ray
/// toward the terminal singular direction, normalized by the step count. The
/// ray speed is the ensemble drift (precomputed over `drift_trials` paths),
/// not the speed of the tracked path itself.
TrackingResult tracking_error(const WalkMeasure& nu, int n, std::uint64_t seed,
                              int drift_trials = 20);

// ---- tameness and subharmonicity ----------------------------------------------

struct TamenessReport {
    std::vector<double> shell_ratio;  // max |f| / group_norm per dyadic shell
    std::vector<int> shell_count;
    bool superlinear = false;
};

/// Empirical growth of |f| against the group norm over dyadic norm shells.
TamenessReport tameness_estimate(const std::function<double(const ScaledMatrix&)>& f,
                                 const std::vector<ScaledMatrix>& samples);

/// Group samples with a spread of norms (walk products of graded lengths).
std::vector<ScaledMatrix> sample_group_points(const WalkMeasure& nu, int count, int max_len,
                                              std::uint64_t seed);

struct SubharmonicityReport {
    std::string classification;  // "harmonic" | "subharmonic" | "neither"
    bool constancy_forced = false;
    double min_laplacian = 0.0;
    double max_laplacian = 0.0;
    double a_n = 0.0;          // telescoping estimate (1/N)[E f(g_N...g_1 x) - f(x)]
    double a_n_stderr = 0.0;
    double reference_rate = 0.0;  // hyperbolic drift, for comparison with a_n
};

template <class Space>
SubharmonicityReport subharmonicity_report(const WalkMeasure& nu, const SpaceFn<Space>& f,
                                           const std::vector<typename Space::Point>& samples,
                                           int n, int trials, std::uint64_t seed,
                                           int threads = 1);

}  // namespace kzlab::randwalk
