#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <numeric>
#include <string>

#include "kzlab/error.hpp"

namespace kzlab::intal {

using IMat = Eigen::Matrix<long long, Eigen::Dynamic, Eigen::Dynamic>;
using IVec = Eigen::Matrix<long long, Eigen::Dynamic, 1>;

/// L * A * R = D with L, R unimodular and D diagonal, each diagonal entry
/// non-negative and dividing the next.
struct SmithForm {
    IMat d;
    IMat left;
    IMat right;
};

SmithForm smith_normal_form(const IMat& a);

/// Basis of the integer kernel lattice {x : A x = 0}, as columns. The basis is
/// saturated: any integer solution is an integer combination of the columns.
IMat kernel(const IMat& a);

/// Solve A x = b over the integers. Returns false when no integer solution
/// exists. Free coordinates are set to zero.
bool solve(const IMat& a, const IVec& b, IVec& x);
bool solve_matrix(const IMat& a, const IMat& b, IMat& x);

/// Inverse of a unimodular matrix (throws StructureError otherwise).
IMat unimodular_inverse(const IMat& u);

/// Overflow-checked product (long chains of monodromy matrices grow
/// exponentially; garbage must not propagate silently).
IMat checked_product(const IMat& a, const IMat& b);

/// Exact determinant (fraction-free Bareiss elimination).
long long det(const IMat& a);

/// For an antisymmetric unimodular J (size 2g), a unimodular U with
/// U^T J U = J0 where J0 = [[0, I_g], [-I_g, 0]].
IMat symplectic_basis(const IMat& j);

IMat standard_symplectic(int g);

/// Reduced fraction on int64 with overflow-checked arithmetic; enough for the
/// desk-scale rational projectors emitted by the origami module.
struct Rational {
    long long num = 0;
    long long den = 1;

    Rational() = default;
    Rational(long long n, long long d);
    static Rational of(long long n) { return Rational(n, 1); }

    Rational operator+(const Rational& o) const;
    Rational operator-(const Rational& o) const;
    Rational operator*(const Rational& o) const;
    Rational operator/(const Rational& o) const;
    bool operator==(const Rational& o) const { return num == o.num && den == o.den; }
    std::string str() const;
};

using QMat = Eigen::Matrix<Rational, Eigen::Dynamic, Eigen::Dynamic>;

}  // namespace kzlab::intal
