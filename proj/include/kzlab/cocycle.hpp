#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "kzlab/config.hpp"
#include "kzlab/json_util.hpp"
#include "kzlab/linalg.hpp"

namespace kzlab::cocycle {

/// Generator-indexed matrix system; an optional bilinear pairing J with
/// g^T J g = J for every generator.
class MatrixCocycle {
public:
    MatrixCocycle(int dim, std::vector<RMat> generators,
                  std::optional<RMat> pairing = std::nullopt);

    int dim() const { return dim_; }
    const std::vector<RMat>& generators() const { return gens_; }
    const std::optional<RMat>& pairing() const { return pairing_; }

private:
    int dim_;
    std::vector<RMat> gens_;
    std::optional<RMat> pairing_;
};

MatrixCocycle cocycle_from_json(const Json& j);
Json cocycle_to_json(const MatrixCocycle& c);

struct LyapunovSpectrum {
    std::vector<double> exponents;  // sorted descending
    std::vector<double> stderrs;
    std::vector<int> multiplicity_group;  // exponents within 4 SE share a group
};

/// One step of a matrix walk; drivers own any internal state (orbit position).
using Stepper = std::function<RMat(Rng&)>;
using StepperFactory = std::function<Stepper()>;

/// QR-deflation estimate of the full spectrum along `trials` independent
/// walks of length n; standard errors from the trial spread.
LyapunovSpectrum lyapunov_qr(int dim, const StepperFactory& factory, int n, int trials,
                             std::uint64_t seed, int threads = 1);

/// Spectrum of the cocycle driven by i.i.d. generator picks with the given
/// weights (uniform when empty).
LyapunovSpectrum lyapunov_spectrum(const MatrixCocycle& c, std::vector<double> weights,
                                   int n, int trials, std::uint64_t seed, int threads = 1);

/// |lambda_i + lambda_{d+1-i}| <= factor * (se_i + se_{d+1-i}) for all i.
bool spectrum_symmetric(const LyapunovSpectrum& s, double factor = 2.0);

// ---- tensor functors --------------------------------------------------------

MatrixCocycle tensor_power(const MatrixCocycle& c, int k);
MatrixCocycle wedge_power(const MatrixCocycle& c, int k);
MatrixCocycle sym_power(const MatrixCocycle& c, int k);
/// Conjugation action X -> g X g^{-1} on endomorphisms.
MatrixCocycle end_cocycle(const MatrixCocycle& c);

// ---- invariant subspaces and the commutant ----------------------------------

/// max_g ||(1 - P_V) g V|| with P_V the orthogonal projector; zero iff the
/// span of v is invariant. Throws on rank-deficient input.
double invariant_subspace_check(const RMat& v, const std::vector<RMat>& generators);

/// Basis of {X : X g = g X for all generators}.
std::vector<RMat> commutant(const std::vector<RMat>& generators, int dim);

struct IsotypicComponent {
    RMat frame;          // orthonormal basis of the isotypic block
    int dim_w = 0;       // multiplicity of the simple module (dim of W over A)
    int simple_dim = 0;  // real dimension of the simple module
    char algebra = 'R';  // 'R', 'C' or 'H'
};

struct IsotypicDecomposition {
    std::vector<IsotypicComponent> components;
};

/// Central splitting of the commutant plus division-algebra identification.
/// Throws SemisimplicityError when the action is not semisimple.
IsotypicDecomposition isotypic_decompose(const std::vector<RMat>& generators, int dim);

// ---- gradings of endomorphism algebras ---------------------------------------

struct GradedPiece {
    int degree = 0;
    CMat frame;  // columns: vectorized matrices (column-major) or vectors of W
};

/// Recovers a grading of W from an algebra grading of End(W), normalized so
/// the lowest degree is 0; unique up to shift. Throws StructureError with a
/// certificate when the input grading is not induced by any grading of W.
std::vector<GradedPiece> end_grading_lift(const std::vector<GradedPiece>& end_grading, int n);

/// The grading of End(W) induced by a grading of W (degree of Hom-component =
/// difference of degrees).
std::vector<GradedPiece> induce_end_grading(const std::vector<GradedPiece>& w_grading, int n);

// ---- rigidity ----------------------------------------------------------------

/// floor(top_end_exponent / (1 - lambda2)); requires lambda2 < 1.
int degree_bound(double top_end_exponent, double lambda2);
/// Exact rational version: Lambda = ln/ld, lambda2 = mn/md.
long long degree_bound_rational(long long ln, long long ld, long long mn, long long md);

struct PolyReconstruction {
    RMat coefficients;  // (N+1)x(N+1), coefficients[i][j] = coeff of x^i y^j
    double residual = 0.0;
};

/// Line-by-line polynomial reconstruction on a product grid: Vandermonde in x
/// for the first N+1 rows of y, then a fit in y of each x-coefficient, with
/// the residual measured over the whole grid. Throws PreconditionError when
/// the samples are not jointly polynomial of degree <= N at the tolerance.
PolyReconstruction bivariate_poly_reconstruct(const std::vector<double>& xs,
                                              const std::vector<double>& ys,
                                              const RMat& values, int degree_cap,
                                              double tol = 1e-6);

double evaluate_bivariate(const RMat& coefficients, double x, double y);

/// Monomial exponents (i, j, k) for x^i y^j invA^k.
struct WeightedMonomial {
    int x = 0;
    int y = 0;
    int inv_area = 0;
};

/// True iff every monomial has weighted degree zero for deg x = deg y = 1,
/// deg invA = -2.
bool homogeneous_degree_check(const std::vector<std::pair<WeightedMonomial, double>>& poly);

}  // namespace kzlab::cocycle
