#include "doctest.h"

#include "kzlab/intlinalg.hpp"
#include "kzlab/rng.hpp"

using namespace kzlab;
using namespace kzlab::intal;

namespace {

IMat random_int_matrix(Eigen::Index m, Eigen::Index n, Rng& rng, long long lo, long long hi) {
    IMat a(m, n);
    for (Eigen::Index i = 0; i < m; ++i)
        for (Eigen::Index j = 0; j < n; ++j)
            a(i, j) = lo + static_cast<long long>(rng.uniform() * static_cast<double>(hi - lo + 1));
    return a;
}

}  // namespace

TEST_CASE("smith normal form: L A R = D, diagonal, divisibility") {
    Rng rng(11);
    for (int rep = 0; rep < 40; ++rep) {
        const Eigen::Index m = 1 + static_cast<Eigen::Index>(rng.uniform() * 6);
        const Eigen::Index n = 1 + static_cast<Eigen::Index>(rng.uniform() * 6);
        const IMat a = random_int_matrix(m, n, rng, -5, 5);
        const SmithForm f = smith_normal_form(a);
        CHECK(((f.left * a * f.right) - f.d).cwiseAbs().maxCoeff() == 0);
        CHECK(std::llabs(det(f.left)) == 1);
        CHECK(std::llabs(det(f.right)) == 1);
        const Eigen::Index r = std::min(m, n);
        for (Eigen::Index i = 0; i < r; ++i) {
            CHECK(f.d(i, i) >= 0);
            if (i + 1 < r && f.d(i + 1, i + 1) != 0 && f.d(i, i) != 0)
                CHECK(f.d(i + 1, i + 1) % f.d(i, i) == 0);
            for (Eigen::Index j = 0; j < n; ++j)
                if (j != i) CHECK(f.d(i, j) == 0);
        }
    }
}

TEST_CASE("integer kernel and solve") {
    Rng rng(7);
    for (int rep = 0; rep < 30; ++rep) {
        const Eigen::Index m = 1 + static_cast<Eigen::Index>(rng.uniform() * 5);
        const Eigen::Index n = 1 + static_cast<Eigen::Index>(rng.uniform() * 5);
        const IMat a = random_int_matrix(m, n, rng, -4, 4);
        const IMat k = kernel(a);
        if (k.cols() > 0) CHECK((a * k).cwiseAbs().maxCoeff() == 0);

        // a solvable right-hand side
        const IVec x0 = random_int_matrix(n, 1, rng, -3, 3);
        const IVec b = a * x0;
        IVec x;
        REQUIRE(solve(a, b, x));
        CHECK((a * x - b).cwiseAbs().maxCoeff() == 0);
    }
}

TEST_CASE("solve detects unsolvable systems") {
    IMat a(2, 2);
    a << 2, 0, 0, 2;
    IVec b(2);
    b << 1, 0;
    IVec x;
    CHECK_FALSE(solve(a, b, x));
}

TEST_CASE("unimodular inverse") {
    IMat u(3, 3);
    u << 1, 2, 3, 0, 1, 4, 0, 0, 1;
    const IMat ui = unimodular_inverse(u);
    CHECK(((u * ui) - IMat::Identity(3, 3)).cwiseAbs().maxCoeff() == 0);
    IMat not_uni(2, 2);
    not_uni << 2, 0, 0, 1;
    CHECK_THROWS_AS(unimodular_inverse(not_uni), StructureError);
}

TEST_CASE("symplectic basis normalizes unimodular antisymmetric forms") {
    Rng rng(23);
    for (int g = 1; g <= 3; ++g) {
        // scramble the standard form by a random unimodular congruence
        IMat u = IMat::Identity(2 * g, 2 * g);
        for (int step = 0; step < 12; ++step) {
            const auto i = static_cast<Eigen::Index>(rng.uniform() * 2 * g);
            const auto j = static_cast<Eigen::Index>(rng.uniform() * 2 * g);
            if (i == j) continue;
            const long long c = static_cast<long long>(rng.uniform() * 5) - 2;
            u.col(i) += c * u.col(j);
        }
        const IMat j0 = standard_symplectic(g);
        const IMat j = u.transpose() * j0 * u;
        const IMat basis = symplectic_basis(j);
        CHECK(((basis.transpose() * j * basis) - j0).cwiseAbs().maxCoeff() == 0);
    }
}

TEST_CASE("rational arithmetic reduces") {
    const Rational a(2, 4);
    CHECK(a.num == 1);
    CHECK(a.den == 2);
    const Rational b = a + Rational(1, 3);
    CHECK(b == Rational(5, 6));
    CHECK((Rational(3, 2) * Rational(2, 3)) == Rational(1, 1));
    CHECK(Rational(-4, -6) == Rational(2, 3));
    CHECK(Rational(1, -2).str() == "-1/2");
}
