#pragma once

#include <Eigen/Dense>
#include <complex>

#include "kzlab/error.hpp"
#include "kzlab/rng.hpp"

namespace kzlab {

using Complex = std::complex<double>;
using CMat = Eigen::MatrixXcd;
using CVec = Eigen::VectorXcd;
using RMat = Eigen::MatrixXd;
using RVec = Eigen::VectorXd;

/// Orthonormal basis of the column span (rank detected at `tol` relative to
/// the largest singular value). Empty input yields an n x 0 frame.
inline CMat orthonormal_span(const CMat& frame, double tol = 1e-12) {
    if (frame.cols() == 0) return CMat(frame.rows(), 0);
    Eigen::JacobiSVD<CMat> svd(frame, Eigen::ComputeThinU);
    const auto& sv = svd.singularValues();
    const double cutoff = sv.size() ? sv(0) * tol : 0.0;
    Eigen::Index rank = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i)
        if (sv(i) > cutoff) ++rank;
    return svd.matrixU().leftCols(rank);
}

/// Basis of ker(A) as orthonormal columns.
inline CMat nullspace(const CMat& a, double tol = 1e-11) {
    if (a.rows() == 0) return CMat::Identity(a.cols(), a.cols());
    Eigen::JacobiSVD<CMat> svd(a, Eigen::ComputeFullV);
    const auto& sv = svd.singularValues();
    const double scale = sv.size() ? std::max(sv(0), 1.0) : 1.0;
    Eigen::Index rank = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i)
        if (sv(i) > scale * tol) ++rank;
    return svd.matrixV().rightCols(a.cols() - rank);
}

inline RMat nullspace_real(const RMat& a, double tol = 1e-11) {
    if (a.rows() == 0) return RMat::Identity(a.cols(), a.cols());
    Eigen::JacobiSVD<RMat> svd(a, Eigen::ComputeFullV);
    const auto& sv = svd.singularValues();
    const double scale = sv.size() ? std::max(sv(0), 1.0) : 1.0;
    Eigen::Index rank = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i)
        if (sv(i) > scale * tol) ++rank;
    return svd.matrixV().rightCols(a.cols() - rank);
}

/// Orthogonal projector onto the column span of an orthonormal frame.
inline CMat projector(const CMat& onframe) { return onframe * onframe.adjoint(); }

/// Operator-norm distance between the projectors of two spans; the module-wide
/// notion of subspace equality.
inline double projector_distance(const CMat& a, const CMat& b) {
    const CMat pa = projector(orthonormal_span(a));
    const CMat pb = projector(orthonormal_span(b));
    return (pa - pb).operatorNorm();
}

/// || (1 - P_span) v || residual of containment of the columns of v in span.
inline double containment_residual(const CMat& span, const CMat& v) {
    const CMat q = orthonormal_span(span);
    return (v - q * (q.adjoint() * v)).norm();
}

/// Intersection of two column spans, returned as an orthonormal frame.
inline CMat intersect_spans(const CMat& a, const CMat& b, double tol = 1e-10) {
    const CMat qa = orthonormal_span(a);
    const CMat qb = orthonormal_span(b);
    if (qa.cols() == 0 || qb.cols() == 0) return CMat(a.rows(), 0);
    // x = qa u = qb w  <=>  [qa | -qb] (u; w) = 0
    CMat stacked(a.rows(), qa.cols() + qb.cols());
    stacked << qa, -qb;
    const CMat ker = nullspace(stacked, tol);
    CMat result(a.rows(), ker.cols());
    for (Eigen::Index j = 0; j < ker.cols(); ++j)
        result.col(j) = qa * ker.col(j).head(qa.cols());
    return orthonormal_span(result, tol);
}

inline CVec random_complex_vector(Eigen::Index n, Rng& rng) {
    CVec v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = Complex(rng.normal(), rng.normal());
    return v;
}

inline RMat random_orthogonal(Eigen::Index n, Rng& rng) {
    RMat a(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) a(i, j) = rng.normal();
    Eigen::HouseholderQR<RMat> qr(a);
    RMat q = qr.householderQ();
    const RMat r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (Eigen::Index i = 0; i < n; ++i)
        if (r(i, i) < 0) q.col(i) *= -1.0;
    return q;
}

/// Pairwise (tree) summation: order-independent enough to keep parallel
/// reductions reproducible when chunks are concatenated in trial order.
inline double pairwise_sum(const std::vector<double>& xs) {
    if (xs.empty()) return 0.0;
    std::vector<double> buf = xs;
    while (buf.size() > 1) {
        std::vector<double> next;
        next.reserve((buf.size() + 1) / 2);
        for (std::size_t i = 0; i + 1 < buf.size(); i += 2) next.push_back(buf[i] + buf[i + 1]);
        if (buf.size() % 2 == 1) next.push_back(buf.back());
        buf.swap(next);
    }
    return buf[0];
}

struct MeanStderr {
    double mean = 0.0;
    double stderr_ = 0.0;
};

inline MeanStderr mean_stderr(const std::vector<double>& xs) {
    MeanStderr r;
    if (xs.empty()) return r;
    r.mean = pairwise_sum(xs) / static_cast<double>(xs.size());
    if (xs.size() < 2) return r;
    double ss = 0.0;
    for (double x : xs) ss += (x - r.mean) * (x - r.mean);
    r.stderr_ = std::sqrt(ss / (static_cast<double>(xs.size()) - 1.0) /
                          static_cast<double>(xs.size()));
    return r;
}

}  // namespace kzlab
