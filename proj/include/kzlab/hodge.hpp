#pragma once

#include <optional>
#include <vector>

#include "kzlab/config.hpp"
#include "kzlab/json_util.hpp"
#include "kzlab/linalg.hpp"

namespace kzlab::hodge {

// Conventions used throughout (single source of truth for every sign-sensitive
// test in this project):
//   * the ambient space is C^n with entry-wise conjugation as real structure;
//   * Q is the flat bilinear pairing, Q(x, y) = x^T Q y, antisymmetric for odd
//     weight and symmetric for even weight;
//   * indefinite form  <x, y>_i = Q(x, conj y)   (linear in x);
//   * Weil operator C acts by i^{p-q} on H^{p,q};
//   * definite form   <x, y>   = <C x, y>_i, positive definite when polarized.
// On the standard elliptic fiber with frame omega = (1, tau) this yields
// ||omega||^2 = 2 Im tau.

/// One H^{p,q} summand: a complex column frame spanning the piece.
struct PqPiece {
    int p = 0;
    int q = 0;
    CMat frame;
};

class HodgeStructure {
public:
    /// Validates: p + q = weight, 0 <= p, frames jointly span (direct sum) and
    /// conj H^{p,q} = H^{q,p}. Zero-dimensional pieces are legal.
    HodgeStructure(int weight, int dim, std::vector<PqPiece> pieces);

    int weight() const { return weight_; }
    int dim() const { return dim_; }
    const std::vector<PqPiece>& pieces() const { return pieces_; }
    const PqPiece* piece(int p, int q) const;

    /// Assembled n x n basis, piece frames concatenated by descending p.
    const CMat& basis() const { return basis_; }

private:
    int weight_;
    int dim_;
    std::vector<PqPiece> pieces_;
    CMat basis_;
};

/// Weil (Hodge-star) operator: i^{p-q} on each piece, as an ambient matrix.
CMat weil_operator(const HodgeStructure& h);

/// Action of z in the Deligne torus: z^p conj(z)^q on H^{p,q}. z must be
/// nonzero; deligne_act(i, h) == weil_operator(h).
CMat deligne_act(Complex z, const HodgeStructure& h);

struct PqComponent {
    int p = 0;
    int q = 0;
    CVec component;
};

/// Decomposition x = sum of piece components.
std::vector<PqComponent> pq_components(const CVec& x, const HodgeStructure& h);

/// Component of x in H^{p,q} (zero vector when the piece is absent).
CVec pq_component(const CVec& x, const HodgeStructure& h, int p, int q);

class Polarization {
public:
    explicit Polarization(CMat pairing);

    const CMat& pairing() const { return q_; }

    /// Gram of <x,y>_i = y^* G_i x.
    CMat indefinite_gram() const { return q_.transpose(); }

    /// Gram of the definite form, y^* (Q^T C) x.
    CMat definite_gram(const HodgeStructure& h) const;

private:
    CMat q_;
};

enum class InnerKind { definite, indefinite };

Complex hodge_inner(const CVec& x, const CVec& y, const HodgeStructure& h,
                    const Polarization& pol, InnerKind kind);

double hodge_norm_sq(const CVec& x, const HodgeStructure& h, const Polarization& pol);

struct PolarizationDiagnostic {
    bool polarized = false;
    double min_eigenvalue = 0.0;      // smallest eigenvalue of the definite Gram
    double hermitian_residual = 0.0;  // || G - G^* ||
    double piece_orthogonality = 0.0; // worst cross-piece indefinite pairing
};

PolarizationDiagnostic is_polarized(const HodgeStructure& h, const Polarization& pol);

struct ComplementResult {
    CMat definite;                    // frame of the definite-form complement
    std::optional<CMat> indefinite;   // absent when the indefinite metric is degenerate on V
    bool indefinite_degenerate = false;
    bool c_invariant_input = false;
    double complement_mismatch = 0.0; // projector distance definite vs indefinite
};

/// Orthogonal complement of span(v). The definite complement always exists;
/// for C-invariant subspaces the two complements are checked to coincide.
ComplementResult hodge_orthogonal(const CMat& v, const HodgeStructure& h,
                                  const Polarization& pol);

/// Serialization: {weight, dim, pieces: [{p, q, frame}], pairing}. Field names
/// are part of the format contract.
Json to_json(const HodgeStructure& h, const Polarization& pol);
std::pair<HodgeStructure, Polarization> structure_from_json(const Json& j);

}  // namespace kzlab::hodge
