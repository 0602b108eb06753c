#pragma once

#include <map>
#include <string>
#include <vector>

#include "kzlab/cocycle.hpp"
#include "kzlab/intlinalg.hpp"
#include "kzlab/json_util.hpp"

namespace kzlab::origami {

/// Square-tiled surface: n unit squares, h(i) is the square to the right of i,
/// v(i) the square above i (0-indexed image arrays).
struct Origami {
    int n = 0;
    std::vector<int> h;
    std::vector<int> v;

    bool operator==(const Origami& o) const { return n == o.n && h == o.h && v == o.v; }
    bool operator<(const Origami& o) const {
        if (n != o.n) return n < o.n;
        if (h != o.h) return h < o.h;
        return v < o.v;
    }
};

/// Text form: `h = (1 2)(3)` and `v = (1 3)(2)` on separate lines, 1-indexed
/// cycles; unmentioned squares are fixed points.
Origami origami_from_text(const std::string& text);
std::string origami_to_text(const Origami& o);
Origami origami_from_json(const Json& j);
Json origami_to_json(const Origami& o);

bool is_transitive(const Origami& o);

/// Checks well-formedness and transitivity, then relabels canonically
/// (lexicographically smallest encoding over all BFS roots), so equality of
/// normalized origamis is equality of surfaces-with-markings.
Origami validate_and_normalize(const Origami& o);

struct StratumSignature {
    std::vector<int> zero_orders;  // descending
    int genus = 1;
};

/// Zero orders from the commutator cycle structure (length l -> order l-1).
StratumSignature stratum(const Origami& o);

/// Integer cohomology of the square complex with the cup-product intersection
/// form, symplectically standardized: classes are 2n-edge-cochain columns and
/// the pairing of the stored basis is exactly J0 = [[0,I],[-I,0]].
struct HomologyModel {
    Origami surface;          // normalized
    int genus = 0;
    intal::IMat basis;        // 2n x 2g cocycle representatives (edges: b_0..b_{n-1}, l_0..l_{n-1})
    intal::IMat coboundary0;  // 2n x V matrix of delta^0 (for solving classes)
    intal::IMat pairing;      // 2g x 2g, always the standard symplectic form
};

HomologyModel homology_model(const Origami& o);

/// Value pairing of two cochain vectors under the cup form
/// sum_i [x(b_i) y(l_{h(i)}) - x(l_i) y(b_{v(i)})].
long long cup_pairing(const Origami& o, const intal::IVec& x, const intal::IVec& y);

enum class Gen { T, Tinv, S, Sinv };
const char* gen_name(Gen g);
Gen gen_inverse(Gen g);

struct GeneratorImage {
    Origami image;            // normalized
    intal::IMat h1_matrix;    // H^1(src) -> H^1(image) in the standardized bases
};

/// Affine action: T = [[1,1],[0,1]] sends (h, v) to (h, v h^{-1}) and
/// S = [[0,-1],[1,0]] sends (h, v) to (v, h^{-1}); the matrix is the induced
/// chain-level map on H^1, exactly symplectic.
GeneratorImage apply_generator(const HomologyModel& src, Gen g);
GeneratorImage apply_generator(const Origami& o, Gen g);

struct OrbitEdge {
    int src = 0;
    int dst = 0;
    Gen gen = Gen::T;
    intal::IMat matrix;
};

struct OrbitGraph {
    std::vector<Origami> vertices;
    std::vector<HomologyModel> models;
    std::vector<OrbitEdge> edges;  // four per vertex, in generator order T, T^-1, S, S^-1
    int base = 0;

    const OrbitEdge& edge(int vertex, Gen g) const;
};

/// Breadth-first closure under T and S with canonical deduplication.
/// Throws DomainError (with the partial size in the message) above the cap.
OrbitGraph sl2z_orbit(const Origami& o, int cap = 100000);

/// Matrices of a generating set of loops at the base vertex (spanning-tree
/// complement edges), each exactly J0-symplectic.
std::vector<intal::IMat> monodromy_generators(const OrbitGraph& graph, int base = 0);

struct TautologicalSplitting {
    intal::IMat st;    // 2g x 2: pullback of the torus classes
    intal::IMat comp;  // 2g x (2g-2): J-orthogonal complement
};

/// st = pullback of the torus cohomology along the covering to the standard
/// torus; comp = saturated integer kernel of the J-pairing against st.
TautologicalSplitting tautological_splitting(const HomologyModel& model,
                                             const std::vector<intal::IMat>& monodromy);

/// Translations of the origami: permutations commuting with both h and v
/// (the deck group of the covering to the torus). Identity included.
std::vector<std::vector<int>> translations(const Origami& o);

/// H^1 matrix of a translation (in the standardized basis of the model).
intal::IMat translation_h1_matrix(const HomologyModel& model, const std::vector<int>& phi);

struct KzSpectrum {
    cocycle::LyapunovSpectrum full;       // all 2g exponents of the H^1 walk
    std::vector<double> normalized;       // nonnegative half, divided by the top
    std::vector<double> normalized_stderr;
};

/// Random-walk Lyapunov spectrum of the H^1 cocycle over the orbit graph,
/// normalized so the tautological exponent is 1. weights: probabilities of
/// (T, T^-1, S, S^-1); uniform when empty. Throws DomainError on zero drift.
KzSpectrum kz_spectrum(const OrbitGraph& graph, std::vector<double> weights, int n,
                       int trials, std::uint64_t seed, int threads = 1);

/// max Frobenius norm of the walk cocycle restricted to the subspace spanned
/// by `frame` (in base coordinates) over a random word of the given length.
double restricted_norm_bound(const OrbitGraph& graph, const intal::IMat& frame, int steps,
                             std::uint64_t seed);

struct RationalSplittingReport {
    int genus = 0;
    int st_rank = 0;
    int comp_rank = 0;
    bool j_orthogonal = false;
    bool st_invariant = false;
    bool comp_invariant = false;
    long long projector_denominator = 1;  // divides the covering degree
    intal::QMat st_projector;             // rational projector onto st along comp
    int translation_group_order = 1;
    int monodromy_commutant_dim = 0;  // commutant of the monodromy on comp
    /// isotypic refinement of comp under the translation (deck) group, the
    /// algebra supplying the endomorphisms of the Jacobian
    std::vector<cocycle::IsotypicComponent> comp_isotypic;
    std::vector<double> comp_isotypic_monodromy_residuals;
};

RationalSplittingReport rational_splitting_report(const Origami& o, int orbit_cap = 100000);

}  // namespace kzlab::origami
