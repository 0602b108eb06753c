#include "kzlab/intlinalg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>

namespace kzlab::intal {

namespace {

using i128 = __int128;

long long checked(i128 v, const char* where) {
    if (v > std::numeric_limits<long long>::max() || v < std::numeric_limits<long long>::min())
        throw StructureError(std::string("integer overflow in ") + where);
    return static_cast<long long>(v);
}

long long mul(long long a, long long b) { return checked(i128(a) * i128(b), "mul"); }

using WMat = Eigen::Matrix<i128, Eigen::Dynamic, Eigen::Dynamic>;

i128 abs128(i128 v) { return v < 0 ? -v : v; }

const i128 kGuard = (i128(1) << 120);

i128 wmul(i128 a, i128 b) {
    if (a != 0 && (abs128(a) > kGuard / std::max<i128>(abs128(b), 1)))
        throw StructureError("integer overflow in smith reduction");
    return a * b;
}

void add_row(WMat& a, Eigen::Index dst, Eigen::Index src, i128 factor) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) a(dst, j) += wmul(factor, a(src, j));
}

void add_col(WMat& a, Eigen::Index dst, Eigen::Index src, i128 factor) {
    for (Eigen::Index i = 0; i < a.rows(); ++i) a(i, dst) += wmul(factor, a(i, src));
}

/// Smallest nonzero |entry|; ties broken by a Markowitz-style fill estimate,
/// which keeps the transform entries from exploding on chain-complex inputs.
bool find_pivot(const WMat& d, Eigen::Index s, Eigen::Index& pi, Eigen::Index& pj) {
    i128 best = 0;
    long long best_fill = 0;
    bool found = false;
    for (Eigen::Index i = s; i < d.rows(); ++i)
        for (Eigen::Index j = s; j < d.cols(); ++j) {
            const i128 v = abs128(d(i, j));
            if (v == 0) continue;
            long long nr = 0, nc = 0;
            for (Eigen::Index k = s; k < d.cols(); ++k)
                if (d(i, k) != 0) ++nr;
            for (Eigen::Index k = s; k < d.rows(); ++k)
                if (d(k, j) != 0) ++nc;
            const long long fill = (nr - 1) * (nc - 1);
            if (!found || v < best || (v == best && fill < best_fill)) {
                best = v;
                best_fill = fill;
                pi = i;
                pj = j;
                found = true;
            }
        }
    return found;
}

IMat narrow(const WMat& a, const char* where) {
    IMat out(a.rows(), a.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j) out(i, j) = checked(a(i, j), where);
    return out;
}

/// Round-to-nearest quotient: the remainder a - q b lies in [-|b|/2, |b|/2],
/// which keeps the elimination transforms from exploding.
i128 balanced_quotient(i128 a, i128 b) {
    i128 q = a / b;
    const i128 r = a - q * b;
    if (2 * abs128(r) > abs128(b)) q += ((r > 0) == (b > 0)) ? 1 : -1;
    return q;
}

}  // namespace

SmithForm smith_normal_form(const IMat& a) {
    const Eigen::Index m = a.rows(), n = a.cols();
    WMat d = a.cast<i128>();
    WMat left = WMat::Identity(m, m);
    WMat right = WMat::Identity(n, n);
    const Eigen::Index steps = std::min(m, n);

    for (Eigen::Index s = 0; s < steps; ++s) {
        Eigen::Index pi = s, pj = s;
        if (!find_pivot(d, s, pi, pj)) break;
        d.row(s).swap(d.row(pi));
        left.row(s).swap(left.row(pi));
        d.col(s).swap(d.col(pj));
        right.col(s).swap(right.col(pj));

        bool clean = false;
        while (!clean) {
            clean = true;
            for (Eigen::Index i = s + 1; i < m; ++i) {
                if (d(i, s) == 0) continue;
                const i128 q = balanced_quotient(d(i, s), d(s, s));
                add_row(d, i, s, -q);
                add_row(left, i, s, -q);
                if (d(i, s) != 0) {  // remainder smaller than pivot: promote it
                    d.row(s).swap(d.row(i));
                    left.row(s).swap(left.row(i));
                    clean = false;
                }
            }
            for (Eigen::Index j = s + 1; j < n; ++j) {
                if (d(s, j) == 0) continue;
                const i128 q = balanced_quotient(d(s, j), d(s, s));
                add_col(d, j, s, -q);
                add_col(right, j, s, -q);
                if (d(s, j) != 0) {
                    d.col(s).swap(d.col(j));
                    right.col(s).swap(right.col(j));
                    clean = false;
                }
            }
            if (clean) {
                // divisibility sweep: pivot must divide the remaining block
                for (Eigen::Index i = s + 1; i < m && clean; ++i)
                    for (Eigen::Index j = s + 1; j < n && clean; ++j)
                        if (d(i, j) % d(s, s) != 0) {
                            add_row(d, s, i, 1);
                            add_row(left, s, i, 1);
                            clean = false;
                        }
            }
        }
        if (d(s, s) < 0) {
            d.row(s) *= -1;
            left.row(s) *= -1;
        }
    }
    SmithForm f;
    f.d = narrow(d, "smith diagonal");
    f.left = narrow(left, "smith left transform");
    f.right = narrow(right, "smith right transform");
    return f;
}

IMat kernel(const IMat& a) {
    if (a.rows() == 0) return IMat::Identity(a.cols(), a.cols());
    const SmithForm f = smith_normal_form(a);
    std::vector<Eigen::Index> free_cols;
    const Eigen::Index r = std::min(a.rows(), a.cols());
    for (Eigen::Index j = 0; j < a.cols(); ++j)
        if (j >= r || f.d(j, j) == 0) free_cols.push_back(j);
    IMat k(a.cols(), static_cast<Eigen::Index>(free_cols.size()));
    for (std::size_t c = 0; c < free_cols.size(); ++c) k.col(c) = f.right.col(free_cols[c]);
    return k;
}

bool solve(const IMat& a, const IVec& b, IVec& x) {
    const SmithForm f = smith_normal_form(a);
    const IVec lb = f.left * b;
    IVec y = IVec::Zero(a.cols());
    const Eigen::Index r = std::min(a.rows(), a.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        const long long d = (i < r) ? f.d(i, i) : 0;
        if (d == 0) {
            if (lb(i) != 0) return false;
        } else {
            if (lb(i) % d != 0) return false;
            if (i < a.cols()) y(i) = lb(i) / d;
        }
    }
    x = f.right * y;
    return true;
}

bool solve_matrix(const IMat& a, const IMat& b, IMat& x) {
    x.resize(a.cols(), b.cols());
    for (Eigen::Index j = 0; j < b.cols(); ++j) {
        IVec col;
        if (!solve(a, b.col(j), col)) return false;
        x.col(j) = col;
    }
    return true;
}

IMat checked_product(const IMat& a, const IMat& b) {
    if (a.cols() != b.rows()) throw StructureError("checked_product: shape mismatch");
    IMat out(a.rows(), b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < b.cols(); ++j) {
            i128 acc = 0;
            for (Eigen::Index k = 0; k < a.cols(); ++k) acc += i128(a(i, k)) * i128(b(k, j));
            out(i, j) = checked(acc, "integer matrix product");
        }
    return out;
}

IMat unimodular_inverse(const IMat& u) {
    if (u.rows() != u.cols()) throw StructureError("unimodular_inverse: not square");
    const SmithForm f = smith_normal_form(u);
    for (Eigen::Index i = 0; i < u.rows(); ++i)
        if (f.d(i, i) != 1)
            throw StructureError("unimodular_inverse: matrix is not unimodular");
    // L U R = I  =>  U^{-1} = R L
    return f.right * f.left;
}

long long det(const IMat& a) {
    if (a.rows() != a.cols()) throw StructureError("det: not square");
    const Eigen::Index n = a.rows();
    if (n == 0) return 1;
    Eigen::Matrix<i128, Eigen::Dynamic, Eigen::Dynamic> m(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) m(i, j) = a(i, j);
    i128 prev = 1;
    int sign = 1;
    for (Eigen::Index k = 0; k + 1 < n; ++k) {
        if (m(k, k) == 0) {
            Eigen::Index swap = -1;
            for (Eigen::Index i = k + 1; i < n; ++i)
                if (m(i, k) != 0) {
                    swap = i;
                    break;
                }
            if (swap < 0) return 0;
            m.row(k).swap(m.row(swap));
            sign = -sign;
        }
        for (Eigen::Index i = k + 1; i < n; ++i)
            for (Eigen::Index j = k + 1; j < n; ++j)
                m(i, j) = (m(i, j) * m(k, k) - m(i, k) * m(k, j)) / prev;
        prev = m(k, k);
    }
    return checked(i128(sign) * m(n - 1, n - 1), "det");
}

IMat standard_symplectic(int g) {
    IMat j = IMat::Zero(2 * g, 2 * g);
    for (int i = 0; i < g; ++i) {
        j(i, g + i) = 1;
        j(g + i, i) = -1;
    }
    return j;
}

IMat symplectic_basis(const IMat& j) {
    const Eigen::Index n = j.rows();
    if (n % 2 != 0 || j.cols() != n) throw StructureError("symplectic_basis: bad shape");
    if ((j + j.transpose()).cwiseAbs().maxCoeff() != 0)
        throw StructureError("symplectic_basis: form not antisymmetric");
    const long long dj = det(j);
    if (dj != 1 && dj != -1) throw StructureError("symplectic_basis: form not unimodular");

    const Eigen::Index g = n / 2;
    std::vector<IVec> remaining;
    for (Eigen::Index i = 0; i < n; ++i) remaining.push_back(IVec::Unit(n, i));
    std::vector<IVec> es, fs;

    auto pair = [&](const IVec& x, const IVec& y) -> long long {
        i128 s = 0;
        for (Eigen::Index a = 0; a < n; ++a)
            for (Eigen::Index b = 0; b < n; ++b)
                s += i128(x(a)) * i128(j(a, b)) * i128(y(b));
        return checked(s, "symplectic pairing");
    };

    while (!remaining.empty()) {
        const IVec e = remaining.front();
        // build f with <e, f> = 1 via the extended gcd of the pairings
        long long g0 = 0;
        IVec f = IVec::Zero(n);
        for (std::size_t i = 1; i < remaining.size(); ++i) {
            const long long p = pair(e, remaining[i]);
            if (p == 0) continue;
            if (g0 == 0) {
                g0 = std::llabs(p);
                f = (p > 0 ? 1 : -1) * remaining[i];
            } else {
                // Euclid on the pairings, carrying the vectors along; the
                // invariant is pair(e, va) == a, pair(e, vb) == b.
                long long a = g0, b = p;
                IVec va = f, vb = remaining[i];
                while (b != 0) {
                    const long long q = a / b;
                    const long long t = a - q * b;
                    const IVec vt = va - q * vb;
                    a = b;
                    va = vb;
                    b = t;
                    vb = vt;
                }
                if (a < 0) {
                    a = -a;
                    va = -va;
                }
                g0 = a;
                f = va;
            }
            if (g0 == 1) break;
        }
        if (g0 != 1)
            throw StructureError("symplectic_basis: primitive vector without unit pairing");
        // reduce the rest to the J-orthogonal complement of span{e, f}
        std::vector<IVec> next;
        for (std::size_t i = 1; i < remaining.size(); ++i) {
            const IVec& r = remaining[i];
            IVec rr = r;
            rr -= pair(e, r) * f;
            rr += pair(f, r) * e;
            if (rr.cwiseAbs().maxCoeff() != 0) next.push_back(rr);
        }
        // drop linear dependencies: keep a lattice basis of the complement
        IMat stack(n, static_cast<Eigen::Index>(next.size()));
        for (std::size_t i = 0; i < next.size(); ++i) stack.col(static_cast<Eigen::Index>(i)) = next[i];
        // column-reduce via SNF of the transpose to extract an independent set
        std::vector<IVec> pruned;
        if (!next.empty()) {
            const SmithForm sf = smith_normal_form(stack);
            const Eigen::Index r = std::min(stack.rows(), stack.cols());
            Eigen::Index rank = 0;
            for (Eigen::Index i = 0; i < r; ++i)
                if (sf.d(i, i) != 0) ++rank;
            // basis of the column lattice: left^{-1} * first `rank` columns of D
            const IMat linv = unimodular_inverse(sf.left);
            for (Eigen::Index c = 0; c < rank; ++c) {
                IVec v = IVec::Zero(n);
                for (Eigen::Index i = 0; i < n; ++i) v(i) = sf.d(i, c);
                pruned.push_back(linv * v);
            }
        }
        es.push_back(e);
        fs.push_back(f);
        remaining = pruned;
    }

    if (static_cast<Eigen::Index>(es.size()) != g)
        throw StructureError("symplectic_basis: decomposition has wrong rank");
    IMat u(n, n);
    for (Eigen::Index i = 0; i < g; ++i) {
        u.col(i) = es[static_cast<std::size_t>(i)];
        u.col(g + i) = fs[static_cast<std::size_t>(i)];
    }
    const IMat check = u.transpose() * j * u;
    if ((check - standard_symplectic(static_cast<int>(g))).cwiseAbs().maxCoeff() != 0)
        throw StructureError("symplectic_basis: verification failed");
    return u;
}

Rational::Rational(long long n, long long d) {
    if (d == 0) throw StructureError("rational with zero denominator");
    if (d < 0) {
        n = -n;
        d = -d;
    }
    const long long g = std::gcd(std::llabs(n), d);
    num = g ? n / g : n;
    den = g ? d / g : d;
}

Rational Rational::operator+(const Rational& o) const {
    return Rational(checked(i128(num) * o.den + i128(o.num) * den, "rat+"), mul(den, o.den));
}
Rational Rational::operator-(const Rational& o) const {
    return Rational(checked(i128(num) * o.den - i128(o.num) * den, "rat-"), mul(den, o.den));
}
Rational Rational::operator*(const Rational& o) const {
    return Rational(mul(num, o.num), mul(den, o.den));
}
Rational Rational::operator/(const Rational& o) const {
    if (o.num == 0) throw StructureError("rational division by zero");
    return Rational(mul(num, o.den), mul(den, o.num));
}

std::string Rational::str() const {
    if (den == 1) return std::to_string(num);
    return std::to_string(num) + "/" + std::to_string(den);
}

}  // namespace kzlab::intal
