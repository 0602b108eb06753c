#include "kzlab/vhs.hpp"

#include <cmath>
#include <fstream>

#include "kzlab/tensor_ops.hpp"

namespace kzlab::vhs {

namespace {

// Wirtinger derivatives by central differences: d/dtau = (d/dx - i d/dy)/2.
CMat wirtinger_del(const std::function<CMat(Complex)>& f, Complex tau, double h) {
    const CMat fx = (f(tau + h) - f(tau - h)) / (2 * h);
    const CMat fy = (f(tau + Complex(0, h)) - f(tau - Complex(0, h))) / (2 * h);
    return 0.5 * (fx - Complex(0, 1) * fy);
}

CMat wirtinger_delbar(const std::function<CMat(Complex)>& f, Complex tau, double h) {
    const CMat fx = (f(tau + h) - f(tau - h)) / (2 * h);
    const CMat fy = (f(tau + Complex(0, h)) - f(tau - Complex(0, h))) / (2 * h);
    return 0.5 * (fx + Complex(0, 1) * fy);
}

/// mixed second derivative g_{tau conjtau} = Laplacian/4 via the 5-point stencil
double mixed_derivative(const std::function<double(Complex)>& g, Complex tau, double h) {
    const double lap = (g(tau + h) + g(tau - h) + g(tau + Complex(0, h)) +
                        g(tau - Complex(0, h)) - 4.0 * g(tau)) /
                       (h * h);
    return 0.25 * lap;
}

CVec least_squares_coords(const CMat& frame, const CVec& v) {
    return frame.colPivHouseholderQr().solve(v);
}

}  // namespace

bool is_positive_form(const OneOneForm& form, double tol) {
    const CMat herm = 0.5 * (form.coeff + form.coeff.adjoint());
    if ((form.coeff - herm).norm() > 1e-8 * std::max(1.0, form.coeff.norm())) return false;
    Eigen::SelfAdjointEigenSolver<CMat> es(herm);
    return es.eigenvalues().minCoeff() >= -tol;
}

// ---- VhsFamily -------------------------------------------------------------

VhsFamily::VhsFamily(int weight, int dim, CMat pairing, std::vector<int> filtration_dims,
                     FrameFn frames, FrameFn frames_deriv, std::string name)
    : weight_(weight),
      dim_(dim),
      pairing_(std::move(pairing)),
      pol_(pairing_),
      filtration_dims_(std::move(filtration_dims)),
      frames_(std::move(frames)),
      frames_deriv_(std::move(frames_deriv)),
      name_(std::move(name)) {
    if (weight_ < 0) throw StructureError("vhs: negative weight");
    if (static_cast<int>(filtration_dims_.size()) != weight_ + 1)
        throw StructureError("vhs: need one filtration dimension per level");
    if (filtration_dims_.back() != dim_)
        throw StructureError("vhs: F^0 must be the ambient space");
    for (std::size_t i = 1; i < filtration_dims_.size(); ++i)
        if (filtration_dims_[i] < filtration_dims_[i - 1])
            throw StructureError("vhs: filtration dimensions must be nondecreasing");
    if (pairing_.rows() != dim_) throw StructureError("vhs: pairing size mismatch");
    // parity of the flat pairing
    const double sym = (pairing_ - pairing_.transpose()).norm();
    const double antisym = (pairing_ + pairing_.transpose()).norm();
    if (weight_ % 2 == 0 ? sym > 1e-10 * std::max(1.0, pairing_.norm())
                         : antisym > 1e-10 * std::max(1.0, pairing_.norm()))
        throw StructureError("vhs: pairing parity does not match the weight");
}

int VhsFamily::filtration_dim(int p) const {
    if (p > weight_) return 0;
    if (p < 0) return dim_;
    return filtration_dims_[static_cast<std::size_t>(weight_ - p)];
}

int VhsFamily::column_level(int i) const {
    for (int p = weight_; p >= 0; --p)
        if (i < filtration_dim(p)) return p;
    throw StructureError("vhs: column index out of range");
}

CMat VhsFamily::frames_at(Complex tau) const {
    require_inside(tau);
    CMat b = frames_(tau);
    if (b.rows() != dim_ || b.cols() != dim_)
        throw StructureError("vhs: frame function returned wrong shape");
    return b;
}

CMat VhsFamily::frames_deriv_at(Complex tau) const {
    require_inside(tau);
    return frames_deriv_(tau);
}

void VhsFamily::require_inside(Complex tau, double margin) const {
    if (!domain_.contains(tau, margin))
        throw DomainError("vhs: tau outside the base domain (need Im tau > " +
                          std::to_string(margin) + ")");
}

// ---- built-in families ------------------------------------------------------

VhsFamily elliptic_family() {
    CMat q(2, 2);
    q << 0, 1, -1, 0;
    auto frames = [](Complex tau) {
        CMat b(2, 2);
        b << Complex(1, 0), Complex(0, 0), tau, Complex(1, 0);
        return b;
    };
    auto deriv = [](Complex) {
        CMat b = CMat::Zero(2, 2);
        b(1, 0) = 1;
        return b;
    };
    return VhsFamily(1, 2, q, {1, 2}, frames, deriv, "elliptic");
}

VhsFamily constant_family(const hodge::HodgeStructure& h, const hodge::Polarization& pol,
                          std::string name) {
    const auto diag = hodge::is_polarized(h, pol);
    if (!diag.polarized)
        throw StructureError("constant_family: structure is not polarized");
    const int w = h.weight();
    const int n = h.dim();
    CMat basis(n, n);
    std::vector<int> dims;
    Eigen::Index col = 0;
    for (int p = w; p >= 0; --p) {
        if (const auto* pc = h.piece(p, w - p)) {
            basis.block(0, col, n, pc->frame.cols()) = pc->frame;
            col += pc->frame.cols();
        }
        dims.push_back(static_cast<int>(col));
    }
    if (col != n) throw StructureError("constant_family: pieces do not fill the fiber");
    auto frames = [basis](Complex) { return basis; };
    auto deriv = [n](Complex) { return CMat::Zero(n, n); };
    return VhsFamily(w, n, pol.pairing(), dims, frames, deriv, std::move(name));
}

VhsFamily symmetric_power(const VhsFamily& fam, int k) {
    if (k < 1) throw DomainError("symmetric_power: k must be >= 1");
    const int n = fam.dim();
    const auto basis = tensor::multisets(n, k);
    const auto m = static_cast<int>(basis.size());

    // column order: descending total filtration level
    std::vector<int> order(basis.size());
    std::vector<int> level(basis.size());
    for (std::size_t i = 0; i < basis.size(); ++i) {
        order[i] = static_cast<int>(i);
        int lv = 0;
        for (int c : basis[i]) lv += fam.column_level(c);
        level[i] = lv;
    }
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return level[static_cast<std::size_t>(a)] >
                                                level[static_cast<std::size_t>(b)]; });

    const int new_weight = k * fam.weight();
    std::vector<int> dims(static_cast<std::size_t>(new_weight) + 1, 0);
    for (int p = new_weight; p >= 0; --p) {
        int count = 0;
        for (std::size_t i = 0; i < basis.size(); ++i)
            if (level[i] >= p) ++count;
        dims[static_cast<std::size_t>(new_weight - p)] = count;
    }

    auto frame_fn = [fam, k, basis, order, m](Complex tau) {
        const CMat b = fam.frames_at(tau);
        CMat out(m, m);
        for (int c = 0; c < m; ++c) {
            std::vector<CVec> cols;
            for (int i : basis[static_cast<std::size_t>(order[static_cast<std::size_t>(c)])])
                cols.push_back(b.col(i));
            out.col(c) = tensor::sym_product<CMat, CVec>(cols, basis);
        }
        return out;
    };
    auto deriv_fn = [fam, k, basis, order, m](Complex tau) {
        const CMat b = fam.frames_at(tau);
        const CMat db = fam.frames_deriv_at(tau);
        CMat out = CMat::Zero(m, m);
        for (int c = 0; c < m; ++c) {
            const auto& idx = basis[static_cast<std::size_t>(order[static_cast<std::size_t>(c)])];
            for (std::size_t d = 0; d < idx.size(); ++d) {
                std::vector<CVec> cols;
                for (std::size_t e = 0; e < idx.size(); ++e)
                    cols.push_back(e == d ? CVec(db.col(idx[e])) : CVec(b.col(idx[e])));
                out.col(c) += tensor::sym_product<CMat, CVec>(cols, basis);
            }
        }
        return out;
    };
    return VhsFamily(new_weight, m, tensor::sym_pairing(fam.pairing(), k), dims, frame_fn,
                     deriv_fn, "sym:" + std::to_string(k) + ":" + fam.name());
}

VhsFamily direct_sum(const VhsFamily& a, const VhsFamily& b) {
    if (a.weight() != b.weight())
        throw StructureError("direct_sum: weights differ");
    const int w = a.weight();
    const int n = a.dim() + b.dim();
    CMat q = CMat::Zero(n, n);
    q.topLeftCorner(a.dim(), a.dim()) = a.pairing();
    q.bottomRightCorner(b.dim(), b.dim()) = b.pairing();

    std::vector<int> dims;
    for (int p = w; p >= 0; --p) dims.push_back(a.filtration_dim(p) + b.filtration_dim(p));

    const int na = a.dim();
    auto assemble = [na, n, w, a, b](const CMat& fa, const CMat& fb) {
        CMat out = CMat::Zero(n, n);
        int col = 0;
        for (int p = w; p >= 0; --p) {
            const int a0 = a.filtration_dim(p + 1), a1 = a.filtration_dim(p);
            const int b0 = b.filtration_dim(p + 1), b1 = b.filtration_dim(p);
            for (int j = a0; j < a1; ++j) out.col(col++).head(na) = fa.col(j);
            for (int j = b0; j < b1; ++j) out.col(col++).tail(fb.rows()) = fb.col(j);
        }
        return out;
    };
    auto frame_fn = [a, b, assemble](Complex tau) {
        return assemble(a.frames_at(tau), b.frames_at(tau));
    };
    auto deriv_fn = [a, b, assemble](Complex tau) {
        return assemble(a.frames_deriv_at(tau), b.frames_deriv_at(tau));
    };
    return VhsFamily(w, n, q, dims, frame_fn, deriv_fn, "sum:" + a.name() + "," + b.name());
}

VhsFamily family_by_name(const std::string& spec) {
    if (spec == "elliptic") return elliptic_family();
    if (spec.rfind("sym:", 0) == 0) {
        const auto rest = spec.substr(4);
        const auto colon = rest.find(':');
        if (colon == std::string::npos)
            throw DomainError("family spec: expected sym:<k>:<name>");
        const int k = std::stoi(rest.substr(0, colon));
        return symmetric_power(family_by_name(rest.substr(colon + 1)), k);
    }
    if (spec.rfind("sum:", 0) == 0) {
        const auto rest = spec.substr(4);
        const auto comma = rest.find(',');
        if (comma == std::string::npos)
            throw DomainError("family spec: expected sum:<name>,<name>");
        return direct_sum(family_by_name(rest.substr(0, comma)),
                          family_by_name(rest.substr(comma + 1)));
    }
    if (spec.rfind("constant:", 0) == 0) {
        const auto path = spec.substr(9);
        std::ifstream in(path);
        if (!in) throw DomainError("family spec: cannot open " + path);
        Json j;
        in >> j;
        const auto [h, pol] = hodge::structure_from_json(j);
        return constant_family(h, pol, "constant:" + path);
    }
    throw DomainError("unknown family spec: " + spec);
}

// ---- Fiber -------------------------------------------------------------------

Fiber::Fiber(const VhsFamily& fam, Complex tau) : family_(&fam), tau_(tau) {
    fam.require_inside(tau);
    const int w = fam.weight();
    const int n = fam.dim();
    const CMat b = fam.frames_at(tau);
    {
        Eigen::JacobiSVD<CMat> svd(b);
        const auto& sv = svd.singularValues();
        if (sv(sv.size() - 1) <= sv(0) * 1e-11)
            throw StructureError("vhs fiber: frame numerically rank-deficient");
    }

    // concrete pieces H^{p,q} = F^p  intersect  conj(F^{w-p})
    std::vector<hodge::PqPiece> raw;
    for (int p = w; p >= 0; --p) {
        const int dp = fam.filtration_dim(p);
        const int dnext = fam.filtration_dim(p + 1);
        if (dp == dnext) continue;
        const CMat fp = b.leftCols(dp);
        const CMat fq = b.leftCols(fam.filtration_dim(w - p)).conjugate();
        CMat piece = intersect_spans(fp, fq);
        if (piece.cols() != dp - dnext)
            throw StructureError("vhs fiber: piece dimension mismatch at p=" + std::to_string(p));
        raw.push_back({p, w - p, std::move(piece)});
    }
    const hodge::HodgeStructure temp(w, n, raw);

    // quotient-model holomorphic frames: pq components of the completion columns
    std::vector<hodge::PqPiece> final_pieces;
    for (int p = w; p >= 0; --p) {
        const int dp = fam.filtration_dim(p);
        const int dnext = fam.filtration_dim(p + 1);
        if (dp == dnext) continue;
        CMat hol(n, dp - dnext);
        for (int j = dnext; j < dp; ++j)
            hol.col(j - dnext) = hodge::pq_component(b.col(j), temp, p, w - p);
        final_pieces.push_back({p, w - p, std::move(hol)});
    }
    structure_ = std::make_shared<hodge::HodgeStructure>(w, n, final_pieces);
    definite_gram_ = fam.polarization().definite_gram(*structure_);

    for (const auto& pc : structure_->pieces()) {
        Piece piece;
        piece.p = pc.p;
        piece.q = pc.q;
        piece.hol_frame = pc.frame;
        piece.gram = (pc.frame.adjoint() * definite_gram_ * pc.frame).transpose();
        pieces_[pc.p] = std::move(piece);
    }

    // second fundamental forms from the analytic frame derivative
    const CMat db = fam.frames_deriv_at(tau);
    double residual = 0.0;
    for (int p = w; p >= 1; --p) {
        if (!has_piece(p)) continue;
        const int dp = fam.filtration_dim(p);
        const int dnext = fam.filtration_dim(p + 1);
        const Eigen::Index cols = dp - dnext;
        const bool target = has_piece(p - 1);
        CMat s(target ? pieces_.at(p - 1).hol_frame.cols() : 0, cols);
        for (int j = dnext; j < dp; ++j) {
            const auto comps = hodge::pq_components(db.col(j), *structure_);
            for (const auto& c : comps) {
                if (c.p > p) continue;  // allowed: derivative may stay higher in the filtration
                if (c.p == p) continue;
                if (c.p == p - 1) {
                    if (target)
                        s.col(j - dnext) =
                            least_squares_coords(pieces_.at(p - 1).hol_frame, c.component);
                    else
                        residual = std::max(residual, c.component.norm());
                } else {
                    // transversality: nothing may land below F^{p-1}
                    residual = std::max(residual, c.component.norm());
                }
            }
        }
        if (target) sigma_[p] = std::move(s);
    }
    transversality_residual_ = residual;
}

const Fiber::Piece& Fiber::piece(int p) const {
    const auto it = pieces_.find(p);
    if (it == pieces_.end())
        throw DomainError("vhs fiber: no piece with p=" + std::to_string(p));
    return it->second;
}

const CMat& Fiber::sigma(int p) const {
    const auto it = sigma_.find(p);
    if (it == sigma_.end())
        throw DomainError("vhs fiber: sigma_" + std::to_string(p) + " not defined");
    return it->second;
}

CMat Fiber::sigma_adjoint(int p) const {
    // A = M_src^{-1} S^* M_dst for S : src -> dst, where M = gram^T is the
    // matrix with <frame a, frame b> = b^* M a.
    const CMat& s = sigma(p);
    const CMat msrc = piece(p).gram.transpose();
    const CMat mdst = piece(p - 1).gram.transpose();
    return msrc.partialPivLu().solve(s.adjoint() * mdst).eval();
}

CVec Fiber::component(const CVec& x, int p) const {
    return hodge::pq_component(x, *structure_, p, family_->weight() - p);
}

CVec Fiber::coords(const CVec& v, int p) const {
    return least_squares_coords(piece(p).hol_frame, v);
}

Complex Fiber::inner(const CVec& x, const CVec& y) const {
    return y.dot(definite_gram_ * x);
}

double Fiber::norm_sq(const CVec& x) const { return std::real(inner(x, x)); }

hodge::HodgeStructure hodge_frames_at(const VhsFamily& fam, Complex tau) {
    const Fiber fib(fam, tau);
    const auto diag = hodge::is_polarized(fib.structure(), fam.polarization());
    if (!diag.polarized)
        throw StructureError("vhs: fiber at tau is not polarized (min eigenvalue " +
                             std::to_string(diag.min_eigenvalue) + ")");
    return fib.structure();
}

// ---- connection and curvature ------------------------------------------------

namespace {

/// Gram H with H_{jk} = <e_j, e_k> of the quotient frame of piece p at tau.
CMat piece_gram_at(const VhsFamily& fam, int p, Complex tau) {
    const Fiber fib(fam, tau);
    return fib.piece(p).gram;
}

}  // namespace

ConnectionResult connection_matrix(const VhsFamily& fam, int p, Complex tau, double h) {
    fam.require_inside(tau, 2 * h);
    const auto gram = [&](Complex t) { return piece_gram_at(fam, p, t); };
    const CMat hmat = gram(tau);
    const CMat dh = wirtinger_del(gram, tau, h);
    ConnectionResult r;
    // A^T = dH H^{-1}, so A = H^{-T} dH^T
    r.matrix = hmat.transpose().partialPivLu().solve(dh.transpose());

    // Chern (0,1)-defect: the tangential antiholomorphic derivative of the
    // quotient frame must vanish.
    const Fiber center(fam, tau);
    const auto& frame = center.piece(p).hol_frame;
    const auto frame_fn = [&](Complex t) { return CMat(Fiber(fam, t).piece(p).hol_frame); };
    const CMat dbar_frame = wirtinger_delbar(frame_fn, tau, h);
    double defect = 0.0;
    for (Eigen::Index j = 0; j < frame.cols(); ++j) {
        const CVec tangential = center.component(dbar_frame.col(j), p);
        defect = std::max(defect, tangential.norm());
    }
    r.compat_residual = defect;
    return r;
}

SffResult second_fundamental_form(const VhsFamily& fam, int p, Complex tau) {
    if (p < 1) throw DomainError("second_fundamental_form: p must be >= 1");
    const Fiber fib(fam, tau);
    SffResult r;
    r.matrix = fib.has_sigma(p) ? fib.sigma(p) : CMat::Zero(0, fib.piece(p).hol_frame.cols());
    r.transversality_residual = fib.transversality_residual();
    if (r.transversality_residual > 1e-6)
        throw StructureError("second_fundamental_form: transversality violated (residual " +
                             std::to_string(r.transversality_residual) + ")");
    return r;
}

OneOneForm curvature_fd(const VhsFamily& fam, int p, Complex tau, double h) {
    fam.require_inside(tau, 4 * h);
    const auto conn = [&](Complex t) { return connection_matrix(fam, p, t, h).matrix; };
    OneOneForm f;
    f.coeff = -wirtinger_delbar(conn, tau, h);
    return f;
}

OneOneForm curvature_formula(const VhsFamily& fam, int p, Complex tau) {
    const Fiber fib(fam, tau);
    const Eigen::Index dim = fib.piece(p).hol_frame.cols();
    CMat omega = CMat::Zero(dim, dim);
    if (fib.has_sigma(p)) omega += fib.sigma_adjoint(p) * fib.sigma(p);
    if (fib.has_sigma(p + 1)) omega -= fib.sigma(p + 1) * fib.sigma_adjoint(p + 1);
    OneOneForm f;
    f.coeff = omega;
    return f;
}

CurvaturePairing curvature_pairing(const VhsFamily& fam, int p, const CVec& e,
                                   const CVec& eprime, Complex tau) {
    const Fiber fib(fam, tau);
    CurvaturePairing out;
    const CVec pe = fib.component(e, p);
    const CVec pep = fib.component(eprime, p);
    out.projected = (pe - e).norm() > 1e-9 * std::max(1.0, e.norm()) ||
                    (pep - eprime).norm() > 1e-9 * std::max(1.0, eprime.norm());

    const CVec xi = fib.coords(pe, p);
    const CVec eta = fib.coords(pep, p);

    Complex value{0, 0};
    if (fib.has_sigma(p)) {
        // <sigma_p e, sigma_p e'> in the target piece
        const CMat& s = fib.sigma(p);
        const CMat mdst = fib.piece(p - 1).gram.transpose();
        value += CVec(s * eta).dot(mdst * (s * xi));
    }
    if (fib.has_sigma(p + 1)) {
        // -<A_{p+1} e, A_{p+1} e'> (the adjoint lands in the piece above)
        const CMat a = fib.sigma_adjoint(p + 1);
        const CMat mup = fib.piece(p + 1).gram.transpose();
        value -= CVec(a * eta).dot(mup * (a * xi));
    }
    out.value = value;
    return out;
}

// ---- sections and identities ---------------------------------------------------

CVec PolySection::eval(Complex tau) const {
    CVec v = CVec::Zero(coeffs.empty() ? 0 : coeffs[0].size());
    for (std::size_t m = coeffs.size(); m-- > 0;) v = tau * v + coeffs[m];
    return v;
}

CVec PolySection::deriv(Complex tau) const {
    CVec v = CVec::Zero(coeffs.empty() ? 0 : coeffs[0].size());
    for (std::size_t m = coeffs.size(); m-- > 1;)
        v = tau * v + Complex(static_cast<double>(m), 0) * coeffs[m];
    return v;
}

PolySection PolySection::constant(int p, CVec c) {
    PolySection s;
    s.p = p;
    s.coeffs = {std::move(c)};
    return s;
}

namespace {

CVec section_ambient(const VhsFamily& fam, const PolySection& phi, Complex tau) {
    const Fiber fib(fam, tau);
    return fib.piece(phi.p).hol_frame * phi.eval(tau);
}

double section_norm_sq(const VhsFamily& fam, const PolySection& phi, Complex tau) {
    const Fiber fib(fam, tau);
    const CVec v = section_ambient(fam, phi, tau);
    return fib.norm_sq(v);
}

}  // namespace

SecondVariationResult second_variation_log(const VhsFamily& fam, const PolySection& phi,
                                           Complex tau, double h) {
    fam.require_inside(tau, 2 * h);
    const double nsq = section_norm_sq(fam, phi, tau);
    if (nsq < config().zero_section_tol * config().zero_section_tol)
        throw ZeroDivisorError("second_variation_log: section norm below the zero threshold");

    SecondVariationResult out;
    const auto g = [&](Complex t) { return std::log(section_norm_sq(fam, phi, t)); };
    out.lhs = OneOneForm::scalar(-mixed_derivative(g, tau, h));

    const Fiber fib(fam, tau);
    const int p = phi.p;
    const CVec c = phi.eval(tau);
    const CVec cprime = phi.deriv(tau);
    const CMat a = connection_matrix(fam, p, tau, h).matrix;
    const CMat& m = fib.piece(p).gram;  // M with <u,v> = coords(v)^* M^T coords(u)
    const CMat mt = m.transpose();

    const CVec u = cprime + a * c;  // grad^{1,0} coefficients
    const Complex uphi = c.dot(mt * u);  // <grad phi, phi>
    const Complex uu = u.dot(mt * u);    // <grad phi, grad phi>
    const CMat omega = curvature_formula(fam, p, tau).coeff;
    const Complex curv = c.dot(mt * (omega * c));

    out.curvature_term = OneOneForm::scalar(curv / nsq);
    out.schwarz_term = OneOneForm::scalar((uphi * std::conj(uphi) - nsq * uu) / (nsq * nsq));
    out.rhs = OneOneForm::scalar(out.curvature_term.scalar_value() +
                                 out.schwarz_term.scalar_value());
    out.residual = std::abs(out.lhs.scalar_value() - out.rhs.scalar_value());
    return out;
}

NormLaplacianResult norm_laplacian(const VhsFamily& fam, const PolySection& phi, Complex tau,
                                   double h) {
    fam.require_inside(tau, 2 * h);
    NormLaplacianResult out;
    const auto g = [&](Complex t) { return section_norm_sq(fam, phi, t); };
    out.lhs = OneOneForm::scalar(-mixed_derivative(g, tau, h));

    const Fiber fib(fam, tau);
    const int p = phi.p;
    const CVec c = phi.eval(tau);
    const CMat a = connection_matrix(fam, p, tau, h).matrix;
    const CMat mt = fib.piece(p).gram.transpose();
    const CVec u = phi.deriv(tau) + a * c;
    const CMat omega = curvature_formula(fam, p, tau).coeff;

    out.curvature_term = OneOneForm::scalar(c.dot(mt * (omega * c)));
    out.gradient_term = OneOneForm::scalar(u.dot(mt * u));
    out.rhs = OneOneForm::scalar(out.curvature_term.scalar_value() -
                                 out.gradient_term.scalar_value());
    out.residual = std::abs(out.lhs.scalar_value() - out.rhs.scalar_value());
    return out;
}

double gm_split_residual(const VhsFamily& fam, Complex tau, double h) {
    fam.require_inside(tau, 2 * h);
    const Fiber fib(fam, tau);
    const int w = fam.weight();
    const int n = fam.dim();

    // connections of all pieces at the center
    std::map<int, CMat> conn;
    for (int p = 0; p <= w; ++p)
        if (fib.has_piece(p)) conn[p] = connection_matrix(fam, p, tau, h).matrix;

    double worst = 0.0;
    for (int i = 0; i < n; ++i) {
        const CVec flat = CVec::Unit(n, i);
        for (int p = 0; p <= w; ++p) {
            if (!fib.has_piece(p)) continue;
            // coordinates of the (p,q)-component of the flat vector, as a
            // function of tau
            const auto coord_fn = [&](Complex t) {
                const Fiber f(fam, t);
                return CMat(f.coords(f.component(flat, p), p));
            };
            const CVec a0 = coord_fn(tau).col(0);
            const CVec da = wirtinger_del(coord_fn, tau, h).col(0);
            const CVec dbara = wirtinger_delbar(coord_fn, tau, h).col(0);

            // dtau part: Hodge connection + sigma_{p+1} from the piece above
            CVec dtau_part = da + conn.at(p) * a0;
            if (fib.has_sigma(p + 1)) {
                const CVec above = fib.coords(fib.component(flat, p + 1), p + 1);
                dtau_part += fib.sigma(p + 1) * above;
            }
            // conj(dtau) part: antiholomorphic derivative + adjoint from below
            CVec dbar_part = dbara;
            if (fib.has_sigma(p) && fib.has_piece(p - 1)) {
                const CVec below = fib.coords(fib.component(flat, p - 1), p - 1);
                dbar_part += fib.sigma_adjoint(p) * below;
            }
            const CMat& frame = fib.piece(p).hol_frame;
            worst = std::max(worst, std::sqrt(fib.norm_sq(frame * dtau_part)));
            worst = std::max(worst, std::sqrt(fib.norm_sq(frame * dbar_part)));
        }
    }
    return worst;
}

// ---- Kontsevich-Forni -----------------------------------------------------------

namespace {

struct KfFrames {
    CMat s_on;   // sigma in orthonormal bases H^{1,0} -> H^{0,1}
    CMat psi01;  // orthonormal coordinates of the phi_i in H^{0,1}
    CMat psi10;  // orthonormal coordinates of conj(phi_i) in H^{1,0}
    double gram_det_c = 0.0;
    double gram_det_phi = 0.0;
};

KfFrames kf_frames(const VhsFamily& fam, const RMat& classes, Complex tau) {
    if (fam.weight() != 1)
        throw PreconditionError("kontsevich-forni: requires a weight-1 family");
    const Eigen::Index k = classes.cols();
    // isotropy: Q(c_i, c_j) = 0
    for (Eigen::Index i = 0; i < k; ++i) {
        const CVec qc = fam.pairing() * classes.col(i).cast<Complex>();
        for (Eigen::Index j = 0; j < k; ++j) {
            const Complex v = CVec(classes.col(j).cast<Complex>()).conjugate().dot(qc);
            if (std::abs(v) > 1e-10)
                throw PreconditionError("kontsevich-forni: classes are not isotropic");
        }
    }

    const Fiber fib(fam, tau);
    const auto& p01 = fib.piece(0);
    const auto& p10 = fib.piece(1);

    // orthonormalize the piece frames for the definite metric via Cholesky
    const auto on_transform = [](const CMat& gram) {
        Eigen::LLT<CMat> llt(gram.transpose());  // gram^T = frame^* G frame
        if (llt.info() != Eigen::Success)
            throw StructureError("kontsevich-forni: piece metric not positive definite");
        return CMat(llt.matrixL());
    };
    const CMat l01 = on_transform(p01.gram);
    const CMat l10 = on_transform(p10.gram);

    KfFrames out;
    const CMat s = fib.has_sigma(1) ? fib.sigma(1) : CMat::Zero(p01.hol_frame.cols(),
                                                                p10.hol_frame.cols());
    const CMat l10adj = l10.adjoint();
    out.s_on = l01.adjoint() * s * l10adj.inverse();

    CMat phi01(fam.dim(), k), phi10(fam.dim(), k);
    for (Eigen::Index i = 0; i < k; ++i) {
        const CVec c = classes.col(i).cast<Complex>();
        phi01.col(i) = fib.component(c, 0);
        phi10.col(i) = phi01.col(i).conjugate();
    }
    CMat coords01(p01.hol_frame.cols(), k), coords10(p10.hol_frame.cols(), k);
    for (Eigen::Index i = 0; i < k; ++i) {
        coords01.col(i) = fib.coords(phi01.col(i), 0);
        coords10.col(i) = fib.coords(phi10.col(i), 1);
    }
    out.psi01 = l01.adjoint() * coords01;
    out.psi10 = l10.adjoint() * coords10;

    // Gram determinants (squared wedge norms) of the classes and projections
    CMat gram_c(k, k), gram_phi(k, k);
    for (Eigen::Index i = 0; i < k; ++i)
        for (Eigen::Index j = 0; j < k; ++j) {
            gram_c(i, j) = fib.inner(classes.col(i).cast<Complex>().eval(),
                                     classes.col(j).cast<Complex>().eval());
            gram_phi(i, j) = fib.inner(phi01.col(i).eval(), phi01.col(j).eval());
        }
    out.gram_det_c = std::real(gram_c.determinant());
    out.gram_det_phi = std::real(gram_phi.determinant());
    return out;
}

}  // namespace

KontsevichForniResult kontsevich_forni_sides(const VhsFamily& fam, const RMat& classes,
                                             Complex tau, double h) {
    fam.require_inside(tau, 2 * h);
    const KfFrames center = kf_frames(fam, classes, tau);
    if (center.gram_det_phi < 1e-14)
        throw ZeroDivisorError("kontsevich-forni: degenerate wedge of projections");

    KontsevichForniResult out;
    const auto g = [&](Complex t) {
        const double det = kf_frames(fam, classes, t).gram_det_c;
        if (det <= 0) throw ZeroDivisorError("kontsevich-forni: wedge norm vanished on stencil");
        return std::log(det);
    };
    // del delbar orientation: +g_{tau conjtau}
    out.lhs = OneOneForm::scalar(mixed_derivative(g, tau, h));

    const CMat& s = center.s_on;
    const CMat proj01 = orthonormal_span(center.psi01);
    const CMat proj10 = orthonormal_span(center.psi10);
    const CMat p = CMat::Identity(s.rows(), s.rows()) - proj01 * proj01.adjoint();
    const CMat pbar = CMat::Identity(s.cols(), s.cols()) - proj10 * proj10.adjoint();

    const double full = std::real((s * s.adjoint()).trace());
    const double projected = std::real((s * pbar * s.adjoint() * p).trace());
    out.full_trace = OneOneForm::scalar(full);
    out.rhs = OneOneForm::scalar(full - projected);
    out.residual = std::abs(out.lhs.scalar_value() - out.rhs.scalar_value());
    return out;
}

double isotropic_norm_ratio(const VhsFamily& fam, const RMat& classes, Complex tau) {
    if (classes.cols() == 0) return 1.0;
    const KfFrames f = kf_frames(fam, classes, tau);
    if (f.gram_det_phi < 1e-14)
        throw ZeroDivisorError("isotropic_norm_ratio: degenerate wedge of projections");
    return f.gram_det_c / f.gram_det_phi;
}

// ---- fixed part ----------------------------------------------------------------

std::vector<ComponentResidual> fixed_part_residuals(const VhsFamily& fam, const CVec& flat_class,
                                                    Complex tau, double h) {
    fam.require_inside(tau, 2 * h);
    const Fiber fib(fam, tau);
    const int w = fam.weight();
    std::vector<ComponentResidual> out;

    const double grid_step = std::max(10 * h, 1e-3);
    for (int p = 0; p <= w; ++p) {
        if (!fib.has_piece(p)) continue;
        ComponentResidual r;
        r.p = p;
        r.q = w - p;

        const CVec comp = fib.component(flat_class, p);
        if (fib.has_sigma(p)) {
            const CVec s = fib.sigma(p) * fib.coords(comp, p);
            r.sigma_norm = std::sqrt(fib.norm_sq(fib.piece(p - 1).hol_frame * s));
        }

        const auto comp_fn = [&](Complex t) {
            const Fiber f(fam, t);
            return CMat(f.component(flat_class, p));
        };
        const CVec del = wirtinger_del(comp_fn, tau, h).col(0);
        const CVec delbar = wirtinger_delbar(comp_fn, tau, h).col(0);
        r.gm_deriv_norm = std::sqrt(fib.norm_sq(del)) + std::sqrt(fib.norm_sq(delbar));

        double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
        for (int a = -1; a <= 1; ++a)
            for (int b = -1; b <= 1; ++b) {
                const Complex t = tau + Complex(a * grid_step, b * grid_step);
                if (!fam.domain().contains(t)) continue;
                const Fiber f(fam, t);
                const double nr = std::sqrt(f.norm_sq(f.component(flat_class, p)));
                lo = std::min(lo, nr);
                hi = std::max(hi, nr);
            }
        r.norm_variation = hi - lo;
        out.push_back(r);
    }
    return out;
}

std::vector<Complex> tau_grid(double re0, double re1, double im0, double im1, int nx, int ny) {
    std::vector<Complex> out;
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i) {
            const double re = nx == 1 ? re0 : re0 + (re1 - re0) * i / (nx - 1);
            const double im = ny == 1 ? im0 : im0 + (im1 - im0) * j / (ny - 1);
            out.emplace_back(re, im);
        }
    return out;
}

}  // namespace kzlab::vhs
