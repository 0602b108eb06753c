#pragma once

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "kzlab/config.hpp"
#include "kzlab/hodge.hpp"
#include "kzlab/linalg.hpp"

namespace kzlab::vhs {

// Orientation conventions (fixed once, used by every identity below):
//   * a OneOneForm stores the coefficient of dtau ^ conj(dtau); a scalar form
//     f dtau ^ conj(dtau) is positive when f >= 0, matching the statement that
//     dz ^ conj(dz) is positive;
//   * for a function g,  delbar del g has coefficient -g_{tau conjtau} and
//     del delbar g has coefficient +g_{tau conjtau};
//   * curvature is dA + A ^ A for the connection in a holomorphic frame, so in
//     one variable the coefficient matrix is -delbar(A);
//   * sigma_p adjoints: A_p denotes the adjoint for the definite metric; the
//     indefinite adjoint is -A_p. The curvature of a piece assembled from the
//     second fundamental forms is  A_p S_p - S_{p+1} A_{p+1}.

/// Base domain: upper half-plane Im tau > 0 with an interior-margin predicate.
struct Domain {
    bool contains(Complex tau, double margin = 0.0) const {
        return tau.imag() > margin;
    }
};

/// Coefficient of dtau ^ conj(dtau); endomorphism-valued in general, 1x1 for
/// scalar forms.
struct OneOneForm {
    CMat coeff;

    static OneOneForm scalar(Complex c) {
        OneOneForm f;
        f.coeff = CMat::Constant(1, 1, c);
        return f;
    }
    Complex scalar_value() const { return coeff(0, 0); }
};

/// Weak positivity of the hermitian coefficient matrix.
bool is_positive_form(const OneOneForm& form, double tol = config().positivity_tol);

/// A variation of Hodge structure over the upper half-plane, given by a nested
/// holomorphic frame: columns [0, dim F^p) span F^p for every p, and the
/// column block [dim F^{p+1}, dim F^p) completes F^{p+1} to F^p.
class VhsFamily {
public:
    using FrameFn = std::function<CMat(Complex)>;

    VhsFamily(int weight, int dim, CMat pairing, std::vector<int> filtration_dims,
              FrameFn frames, FrameFn frames_deriv, std::string name);

    int weight() const { return weight_; }
    int dim() const { return dim_; }
    const CMat& pairing() const { return pairing_; }
    const hodge::Polarization& polarization() const { return pol_; }
    const Domain& domain() const { return domain_; }
    const std::string& name() const { return name_; }

    /// dim F^p; n for p <= 0 and 0 for p > weight.
    int filtration_dim(int p) const;

    /// Filtration level of frame column i (the p with i < dim F^p minimal...).
    int column_level(int i) const;

    CMat frames_at(Complex tau) const;
    CMat frames_deriv_at(Complex tau) const;

    void require_inside(Complex tau, double margin = 0.0) const;

private:
    int weight_;
    int dim_;
    CMat pairing_;
    hodge::Polarization pol_;
    Domain domain_;
    std::vector<int> filtration_dims_;  // index j holds dim F^{weight-j}, j=0..weight
    FrameFn frames_;
    FrameFn frames_deriv_;
    std::string name_;
};

/// Weight-1 family over the upper half-plane with H^{1,0}(tau) = span(1, tau)
/// and the standard symplectic pairing; the norm of the frame is 2 Im tau.
VhsFamily elliptic_family();

/// Family with constant filtration equal to the given polarized structure.
VhsFamily constant_family(const hodge::HodgeStructure& h, const hodge::Polarization& pol,
                          std::string name = "constant");

VhsFamily symmetric_power(const VhsFamily& fam, int k);
VhsFamily direct_sum(const VhsFamily& a, const VhsFamily& b);

/// Family selector: "elliptic", "sym:<k>:<name>", "sum:<name>,<name>",
/// "constant:<json-file>".
VhsFamily family_by_name(const std::string& spec);

/// Polarized Hodge structure of the fiber at tau (pieces carry the
/// quotient-model holomorphic frames).
hodge::HodgeStructure hodge_frames_at(const VhsFamily& fam, Complex tau);

/// Per-point state: concrete pieces, their holomorphic frames and Gram
/// matrices, and the second fundamental forms.
class Fiber {
public:
    Fiber(const VhsFamily& fam, Complex tau);

    struct Piece {
        int p = 0;
        int q = 0;
        CMat hol_frame;  // pq-components of the F^p-completion columns
        CMat gram;       // definite Gram of the frame
    };

    Complex tau() const { return tau_; }
    const VhsFamily& family() const { return *family_; }
    const hodge::HodgeStructure& structure() const { return *structure_; }

    bool has_piece(int p) const { return pieces_.count(p) > 0; }
    const Piece& piece(int p) const;

    /// sigma_p : H^{p,q} -> H^{p-1,q+1} in the holomorphic frames.
    const CMat& sigma(int p) const;
    bool has_sigma(int p) const { return sigma_.count(p) > 0; }

    /// Definite-metric adjoint A_p : H^{p-1,q+1} -> H^{p,q}.
    CMat sigma_adjoint(int p) const;

    /// Norm of the frame-derivative components that escape F^{p-1}.
    double transversality_residual() const { return transversality_residual_; }

    CVec component(const CVec& x, int p) const;
    CVec coords(const CVec& vector_in_piece, int p) const;
    Complex inner(const CVec& x, const CVec& y) const;  // definite ambient form
    double norm_sq(const CVec& x) const;

private:
    const VhsFamily* family_;
    Complex tau_;
    std::shared_ptr<hodge::HodgeStructure> structure_;
    std::map<int, Piece> pieces_;
    std::map<int, CMat> sigma_;
    CMat definite_gram_;
    double transversality_residual_ = 0.0;
};

// ---- connection and curvature -------------------------------------------

struct ConnectionResult {
    CMat matrix;              // (1,0)-part A in the holomorphic frame
    double compat_residual;   // defect of d<.,.> = <grad, .> + <., grad>
};

/// Chern connection of (H^{p,q}, definite metric) by central differences of
/// the frame Gram; A = (dH H^{-1})^T in the conventions above.
ConnectionResult connection_matrix(const VhsFamily& fam, int p, Complex tau, double h);

struct SffResult {
    CMat matrix;                    // sigma_p in holomorphic frames
    double transversality_residual;
};

SffResult second_fundamental_form(const VhsFamily& fam, int p, Complex tau);

/// Curvature of the piece by finite differences of the connection.
OneOneForm curvature_fd(const VhsFamily& fam, int p, Complex tau, double h);

/// Curvature assembled from the second fundamental forms:
/// A_p S_p - S_{p+1} A_{p+1}.
OneOneForm curvature_formula(const VhsFamily& fam, int p, Complex tau);

struct CurvaturePairing {
    Complex value;      // coefficient of dtau ^ conj(dtau)
    bool projected;     // inputs fell outside the piece and were projected
};

/// <Omega e, e'> = <sigma_p e, sigma_p e'> + <A_{p+1} e, A_{p+1} e'>-signed
/// combination, evaluated with the definite metric.
CurvaturePairing curvature_pairing(const VhsFamily& fam, int p, const CVec& e,
                                   const CVec& eprime, Complex tau);

// ---- holomorphic sections and the second-variation identities ------------

/// Holomorphic section of the piece H^{p, w-p}: coefficients in the
/// quotient-model frame are polynomials in tau.
struct PolySection {
    int p = 0;
    std::vector<CVec> coeffs;  // coeffs[m] = tau^m coefficient vector

    CVec eval(Complex tau) const;
    CVec deriv(Complex tau) const;
    static PolySection constant(int p, CVec c);
};

struct TwoSides {
    OneOneForm lhs;
    OneOneForm rhs;
    double residual = 0.0;
};

struct SecondVariationResult {
    OneOneForm lhs;            // delbar del log ||phi||^2
    OneOneForm rhs;
    OneOneForm curvature_term; // <Omega phi, phi>/||phi||^2
    OneOneForm schwarz_term;   // the Cauchy-Schwarz part, never positive
    double residual = 0.0;
};

SecondVariationResult second_variation_log(const VhsFamily& fam, const PolySection& phi,
                                           Complex tau, double h);

struct NormLaplacianResult {
    OneOneForm lhs;            // delbar del ||phi||^2
    OneOneForm rhs;
    OneOneForm curvature_term; // <Omega phi, phi>
    OneOneForm gradient_term;  // <grad phi, grad phi>
    double residual = 0.0;
};

NormLaplacianResult norm_laplacian(const VhsFamily& fam, const PolySection& phi,
                                   Complex tau, double h);

/// Operator-norm residual of the splitting of the flat connection into the
/// Hodge connection plus the second fundamental forms and their adjoints,
/// evaluated on the flat basis.
double gm_split_residual(const VhsFamily& fam, Complex tau, double h);

// ---- Kontsevich-Forni ------------------------------------------------------

struct KontsevichForniResult {
    OneOneForm lhs;             // del delbar log ||wedge c||^2 (finite differences)
    OneOneForm rhs;             // tr(sigma sigma*) - projected trace
    OneOneForm full_trace;      // tr(sigma sigma*)
    double residual = 0.0;
};

/// classes: n x k real matrix of flat classes spanning an isotropic subspace.
KontsevichForniResult kontsevich_forni_sides(const VhsFamily& fam, const RMat& classes,
                                             Complex tau, double h);

/// Ratio of squared wedge norms det Gram(c) / det Gram(phi); equals 2^k.
double isotropic_norm_ratio(const VhsFamily& fam, const RMat& classes, Complex tau);

// ---- fixed part -----------------------------------------------------------

struct ComponentResidual {
    int p = 0;
    int q = 0;
    double sigma_norm = 0.0;       // ||sigma_p phi^{p,q}||
    double gm_deriv_norm = 0.0;    // finite-difference flat derivative of the component
    double norm_variation = 0.0;   // max-min of ||phi^{p,q}|| over the sample grid
};

std::vector<ComponentResidual> fixed_part_residuals(const VhsFamily& fam, const CVec& flat_class,
                                                    Complex tau, double h);

/// Points of an nx x ny rectangle [re0, re1] x [im0, im1] (row-major order).
std::vector<Complex> tau_grid(double re0, double re1, double im0, double im1, int nx, int ny);

}  // namespace kzlab::vhs
