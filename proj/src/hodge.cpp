#include "kzlab/hodge.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

namespace kzlab::hodge {

namespace {

Complex i_power(int k) {
    switch (((k % 4) + 4) % 4) {
        case 0: return {1, 0};
        case 1: return {0, 1};
        case 2: return {-1, 0};
        default: return {0, -1};
    }
}

Complex int_power(Complex z, int k) {
    Complex r{1, 0};
    for (int i = 0; i < k; ++i) r *= z;
    return r;
}

}  // namespace

HodgeStructure::HodgeStructure(int weight, int dim, std::vector<PqPiece> pieces)
    : weight_(weight), dim_(dim), pieces_(std::move(pieces)) {
    if (weight_ < 0) throw StructureError("hodge: negative weight");
    if (dim_ < 0) throw StructureError("hodge: negative dimension");

    std::sort(pieces_.begin(), pieces_.end(),
              [](const PqPiece& a, const PqPiece& b) { return a.p > b.p; });

    Eigen::Index total = 0;
    for (std::size_t i = 0; i < pieces_.size(); ++i) {
        const auto& pc = pieces_[i];
        if (pc.p + pc.q != weight_ || pc.p < 0 || pc.q < 0)
            throw StructureError("hodge: piece bigrading (p,q) does not match the weight");
        if (pc.frame.rows() != dim_)
            throw StructureError("hodge: piece frame has wrong ambient dimension");
        for (std::size_t j = i + 1; j < pieces_.size(); ++j)
            if (pieces_[j].p == pc.p && pieces_[j].q == pc.q)
                throw StructureError("hodge: duplicate (p,q) piece");
        total += pc.frame.cols();
    }
    if (total != dim_) throw StructureError("hodge: piece dimensions do not sum to ambient");

    basis_.resize(dim_, dim_);
    Eigen::Index col = 0;
    for (const auto& pc : pieces_) {
        basis_.block(0, col, dim_, pc.frame.cols()) = pc.frame;
        col += pc.frame.cols();
    }
    if (dim_ > 0) {
        Eigen::JacobiSVD<CMat> svd(basis_);
        const auto& sv = svd.singularValues();
        if (sv(sv.size() - 1) <= sv(0) * 1e-12)
            throw StructureError("hodge: pieces do not form a direct sum (singular basis)");
    }

    // real-structure symmetry: conj H^{p,q} = H^{q,p}
    const double tol = config().structural_tol;
    for (const auto& pc : pieces_) {
        const PqPiece* mirror = piece(pc.q, pc.p);
        if (!mirror) {
            if (pc.frame.cols() > 0)
                throw StructureError("hodge: missing conjugate piece");
            continue;
        }
        if (mirror->frame.cols() != pc.frame.cols())
            throw StructureError("hodge: conjugate pieces have different dimensions");
        if (pc.frame.cols() > 0 &&
            projector_distance(pc.frame.conjugate(), mirror->frame) > tol * 100)
            throw StructureError("hodge: conj(H^{p,q}) does not span H^{q,p}");
    }
}

const PqPiece* HodgeStructure::piece(int p, int q) const {
    for (const auto& pc : pieces_)
        if (pc.p == p && pc.q == q) return &pc;
    return nullptr;
}

namespace {

CMat scalar_on_pieces(const HodgeStructure& h, const std::function<Complex(int, int)>& s) {
    const Eigen::Index n = h.dim();
    CMat diag = CMat::Zero(n, n);
    Eigen::Index col = 0;
    for (const auto& pc : h.pieces()) {
        for (Eigen::Index j = 0; j < pc.frame.cols(); ++j)
            diag(col + j, col + j) = s(pc.p, pc.q);
        col += pc.frame.cols();
    }
    const CMat& b = h.basis();
    return b * diag * b.partialPivLu().inverse();
}

}  // namespace

CMat weil_operator(const HodgeStructure& h) {
    return scalar_on_pieces(h, [](int p, int q) { return i_power(p - q); });
}

CMat deligne_act(Complex z, const HodgeStructure& h) {
    if (std::abs(z) == 0.0) throw DomainError("deligne_act: z must be nonzero");
    return scalar_on_pieces(h, [z](int p, int q) {
        return int_power(z, p) * int_power(std::conj(z), q);
    });
}

std::vector<PqComponent> pq_components(const CVec& x, const HodgeStructure& h) {
    if (x.size() != h.dim()) throw StructureError("pq_components: wrong vector size");
    const CVec coeffs = h.basis().partialPivLu().solve(x);
    std::vector<PqComponent> out;
    Eigen::Index col = 0;
    for (const auto& pc : h.pieces()) {
        PqComponent c;
        c.p = pc.p;
        c.q = pc.q;
        c.component = pc.frame * coeffs.segment(col, pc.frame.cols());
        col += pc.frame.cols();
        out.push_back(std::move(c));
    }
    return out;
}

CVec pq_component(const CVec& x, const HodgeStructure& h, int p, int q) {
    for (const auto& c : pq_components(x, h))
        if (c.p == p && c.q == q) return c.component;
    return CVec::Zero(h.dim());
}

Polarization::Polarization(CMat pairing) : q_(std::move(pairing)) {
    if (q_.rows() != q_.cols()) throw StructureError("polarization: pairing not square");
}

CMat Polarization::definite_gram(const HodgeStructure& h) const {
    if (q_.rows() != h.dim()) throw StructureError("polarization: size mismatch");
    return q_.transpose() * weil_operator(h);
}

Complex hodge_inner(const CVec& x, const CVec& y, const HodgeStructure& h,
                    const Polarization& pol, InnerKind kind) {
    const CMat g = (kind == InnerKind::definite) ? pol.definite_gram(h)
                                                 : pol.indefinite_gram();
    return y.adjoint() * g * x;
}

double hodge_norm_sq(const CVec& x, const HodgeStructure& h, const Polarization& pol) {
    return std::real(hodge_inner(x, x, h, pol, InnerKind::definite));
}

PolarizationDiagnostic is_polarized(const HodgeStructure& h, const Polarization& pol) {
    PolarizationDiagnostic d;
    if (h.dim() == 0) {
        d.polarized = true;
        return d;
    }
    const CMat g = pol.definite_gram(h);
    d.hermitian_residual = (g - g.adjoint()).norm();

    const CMat herm = 0.5 * (g + g.adjoint());
    Eigen::SelfAdjointEigenSolver<CMat> es(herm);
    d.min_eigenvalue = es.eigenvalues().minCoeff();
    const double scale = std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff());

    const CMat gi = pol.indefinite_gram();
    double worst = 0.0;
    const auto& pieces = h.pieces();
    for (std::size_t a = 0; a < pieces.size(); ++a)
        for (std::size_t b = 0; b < pieces.size(); ++b) {
            if (a == b) continue;
            if (pieces[a].frame.cols() == 0 || pieces[b].frame.cols() == 0) continue;
            const CMat cross =
                pieces[b].frame.adjoint() * gi * pieces[a].frame;
            worst = std::max(worst, cross.cwiseAbs().maxCoeff());
        }
    d.piece_orthogonality = worst;

    const double tol = config().structural_tol;
    d.polarized = d.min_eigenvalue > scale * tol &&
                  d.hermitian_residual <= scale * 100 * tol &&
                  worst <= scale * 100 * tol;
    return d;
}

ComplementResult hodge_orthogonal(const CMat& v, const HodgeStructure& h,
                                  const Polarization& pol) {
    ComplementResult r;
    const CMat vq = orthonormal_span(v);
    const CMat gdef = pol.definite_gram(h);
    r.definite = nullspace(vq.adjoint() * gdef);
    if (r.definite.cols() + vq.cols() != h.dim())
        throw StructureError("hodge_orthogonal: dimension mismatch (degenerate definite metric?)");

    const CMat gi = pol.indefinite_gram();
    const CMat restricted = vq.adjoint() * gi * vq;
    if (vq.cols() > 0) {
        Eigen::JacobiSVD<CMat> svd(restricted);
        const auto& sv = svd.singularValues();
        r.indefinite_degenerate = sv(sv.size() - 1) <= std::max(sv(0), 1.0) * 1e-10;
    }
    if (!r.indefinite_degenerate) r.indefinite = nullspace(vq.adjoint() * gi);

    const CMat c = weil_operator(h);
    r.c_invariant_input =
        vq.cols() == 0 || containment_residual(vq, c * vq) <= config().structural_tol * 100;
    if (r.c_invariant_input && r.indefinite) {
        r.complement_mismatch = projector_distance(r.definite, *r.indefinite);
        if (r.complement_mismatch > config().structural_tol)
            throw StructureError(
                "hodge_orthogonal: definite and indefinite complements differ on a "
                "C-invariant subspace");
    }
    return r;
}

Json to_json(const HodgeStructure& h, const Polarization& pol) {
    Json j;
    j["weight"] = h.weight();
    j["dim"] = h.dim();
    Json pieces = Json::array();
    for (const auto& pc : h.pieces()) {
        Json pj;
        pj["p"] = pc.p;
        pj["q"] = pc.q;
        pj["frame"] = cmat_to_json(pc.frame);
        pieces.push_back(pj);
    }
    j["pieces"] = pieces;
    j["pairing"] = cmat_to_json(pol.pairing());
    return j;
}

std::pair<HodgeStructure, Polarization> structure_from_json(const Json& j) {
    const int weight = j.at("weight").get<int>();
    const int dim = j.at("dim").get<int>();
    std::vector<PqPiece> pieces;
    for (const auto& pj : j.at("pieces")) {
        PqPiece pc;
        pc.p = pj.at("p").get<int>();
        pc.q = pj.at("q").get<int>();
        pc.frame = cmat_from_json(pj.at("frame"));
        pieces.push_back(std::move(pc));
    }
    HodgeStructure h(weight, dim, std::move(pieces));
    Polarization pol(cmat_from_json(j.at("pairing")));
    return {std::move(h), std::move(pol)};
}

}  // namespace kzlab::hodge
