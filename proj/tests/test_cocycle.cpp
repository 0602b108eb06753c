#include "doctest.h"

#include <cmath>

#include "kzlab/cocycle.hpp"
#include "kzlab/randwalk.hpp"
#include "kzlab/tensor_ops.hpp"

using namespace kzlab;
using namespace kzlab::cocycle;

namespace {

RMat mat2(double a, double b, double c, double d) {
    RMat m(2, 2);
    m << a, b, c, d;
    return m;
}

/// Real 4x4 matrix of left multiplication by the quaternion a+bi+cj+dk.
RMat quat_left(double a, double b, double c, double d) {
    RMat m(4, 4);
    m << a, -b, -c, -d, b, a, -d, c, c, d, a, -b, d, -c, b, a;
    return m;
}

RMat random_invertible(int n, Rng& rng) {
    while (true) {
        RMat g(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) g(i, j) = rng.normal();
        if (std::abs(g.determinant()) > 0.05) return g;
    }
}

/// Block-diagonal m-fold repetition of g.
RMat repeat_diag(const RMat& g, int m) {
    const int u = static_cast<int>(g.rows());
    RMat out = RMat::Zero(u * m, u * m);
    for (int i = 0; i < m; ++i) out.block(i * u, i * u, u, u) = g;
    return out;
}

}  // namespace

TEST_CASE("deterministic diagonal spectrum") {
    const MatrixCocycle c(2, {mat2(2, 0, 0, 0.5)});
    const auto s = lyapunov_spectrum(c, {}, 1000, 3, 5);
    REQUIRE(s.exponents.size() == 2);
    CHECK(s.exponents[0] == doctest::Approx(std::log(2.0)).epsilon(1e-12));
    CHECK(s.exponents[1] == doctest::Approx(-std::log(2.0)).epsilon(1e-12));
    CHECK(s.stderrs[0] < 1e-14);
}

TEST_CASE("identity generators give the zero spectrum") {
    const MatrixCocycle c(3, {RMat::Identity(3, 3)});
    const auto s = lyapunov_spectrum(c, {}, 500, 2, 1);
    for (double e : s.exponents) CHECK(std::abs(e) < 1e-14);
}

TEST_CASE("top exponent matches the random-walk drift") {
    const auto nu = randwalk::hyperbolic_pair_measure();
    RMat j = mat2(0, 1, -1, 0);
    const MatrixCocycle c(2, {RMat(nu.support()[0]), RMat(nu.support()[1])}, j);
    const auto s = lyapunov_spectrum(c, {}, 4000, 30, 99);
    const auto d = randwalk::drift(nu, 4000, 30, 98);
    CHECK(std::abs(s.exponents[0] - d.delta) < 2 * (s.stderrs[0] + d.stderr_) + 1e-3);
    // symplectic symmetry of the spectrum
    CHECK(spectrum_symmetric(s));
}

TEST_CASE("sym power of a diagonal matrix") {
    const RMat g = mat2(2, 0, 0, 0.5);
    const RMat s2 = tensor::sym_power(g, 2);
    RMat expected = RMat::Zero(3, 3);
    expected(0, 0) = 4;
    expected(1, 1) = 1;
    expected(2, 2) = 0.25;
    CHECK((s2 - expected).norm() < 1e-14);
}

TEST_CASE("wedge of the full dimension is the determinant") {
    Rng rng(17);
    RMat j = mat2(0, 1, -1, 0);
    // random symplectic 2x2 = random determinant-one
    RMat g = random_invertible(2, rng);
    g /= std::sqrt(std::abs(g.determinant()));
    if (g.determinant() < 0) g.col(0) *= -1;
    const MatrixCocycle c(2, {g}, j);
    const auto w = wedge_power(c, 2);
    CHECK(w.dim() == 1);
    CHECK(w.generators()[0](0, 0) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("end cocycle exponents are pairwise differences") {
    const RMat g = mat2(3, 0, 0, 1.0 / 3);
    const MatrixCocycle c(2, {g});
    const auto e = end_cocycle(c);
    const auto s = lyapunov_spectrum(e, {}, 400, 2, 1);
    // expected: {log 9, 0, 0, -log 9}
    CHECK(s.exponents[0] == doctest::Approx(std::log(9.0)).epsilon(1e-10));
    CHECK(std::abs(s.exponents[1]) < 1e-12);
    CHECK(std::abs(s.exponents[2]) < 1e-12);
    CHECK(s.exponents[3] == doctest::Approx(-std::log(9.0)).epsilon(1e-10));
}

TEST_CASE("wedge top exponent is the sum of the top k exponents") {
    Rng rng(4);
    std::vector<RMat> gens;
    for (int i = 0; i < 2; ++i) gens.push_back(random_invertible(3, rng));
    const MatrixCocycle c(3, gens);
    const auto s1 = lyapunov_spectrum(c, {}, 3000, 25, 11);
    const auto s2 = lyapunov_spectrum(wedge_power(c, 2), {}, 3000, 25, 11);
    const double expect = s1.exponents[0] + s1.exponents[1];
    CHECK(std::abs(s2.exponents[0] - expect) <
          2 * (s1.stderrs[0] + s1.stderrs[1] + s2.stderrs[0]) + 2e-3);
}

TEST_CASE("tensor functors preserve the induced pairings") {
    Rng rng(23);
    RMat j = mat2(0, 1, -1, 0);
    RMat g = random_invertible(2, rng);
    g /= std::sqrt(std::abs(g.determinant()));
    if (g.determinant() < 0) g.col(0) *= -1;
    const MatrixCocycle c(2, {g}, j);
    // constructors throw if the induced pairing is not preserved
    CHECK_NOTHROW(tensor_power(c, 2));
    CHECK_NOTHROW(sym_power(c, 3));
    CHECK_NOTHROW(wedge_power(c, 2));
    CHECK_NOTHROW(end_cocycle(c));
}

TEST_CASE("invariant subspace residuals") {
    const RMat full = RMat::Identity(3, 3);
    std::vector<RMat> gens = {repeat_diag(mat2(1, 1, 0, 1), 1)};
    // extend to 3x3 upper triangular
    RMat g = RMat::Identity(3, 3);
    g.topLeftCorner(2, 2) = mat2(1, 1, 0, 1);
    g(0, 2) = 0.5;
    std::vector<RMat> tri = {g};
    CHECK(invariant_subspace_check(full, tri) < 1e-12);
    RMat axis = RMat::Zero(3, 1);
    axis(0, 0) = 1;
    CHECK(invariant_subspace_check(axis, tri) < 1e-12);

    Rng rng(31);
    std::vector<RMat> irr = {random_invertible(3, rng), random_invertible(3, rng)};
    double total = 0;
    for (int rep = 0; rep < 10; ++rep) {
        RMat v(3, 1);
        for (int i = 0; i < 3; ++i) v(i, 0) = rng.normal();
        total += invariant_subspace_check(v, irr);
    }
    CHECK(total / 10 > 0.1);

    RMat deficient(3, 2);
    deficient.col(0) = axis;
    deficient.col(1) = 2 * axis;
    CHECK_THROWS_AS(invariant_subspace_check(deficient, tri), StructureError);
}

TEST_CASE("commutant dimensions") {
    CHECK(commutant({RMat::Identity(3, 3)}, 3).size() == 9);
    // rotation by 90 degrees: commutant isomorphic to C
    CHECK(commutant({mat2(0, -1, 1, 0)}, 2).size() == 2);
    // generic irreducible pair: scalars only
    Rng rng(8);
    CHECK(commutant({random_invertible(3, rng), random_invertible(3, rng)}, 3).size() == 1);
}

TEST_CASE("isotypic: identity action") {
    const auto dec = isotypic_decompose({RMat::Identity(4, 4)}, 4);
    REQUIRE(dec.components.size() == 1);
    CHECK(dec.components[0].dim_w == 4);
    CHECK(dec.components[0].simple_dim == 1);
    CHECK(dec.components[0].algebra == 'R');
}

TEST_CASE("isotypic: doubled irreducible has multiplicity two") {
    Rng rng(12);
    const RMat g1 = random_invertible(3, rng), g2 = random_invertible(3, rng);
    const auto dec = isotypic_decompose({repeat_diag(g1, 2), repeat_diag(g2, 2)}, 6);
    REQUIRE(dec.components.size() == 1);
    CHECK(dec.components[0].dim_w == 2);
    CHECK(dec.components[0].simple_dim == 3);
    CHECK(dec.components[0].algebra == 'R');
}

TEST_CASE("isotypic: quaternion type") {
    const RMat li = quat_left(0, 1, 0, 0);
    const RMat lj = quat_left(0, 0, 1, 0);
    const auto dec = isotypic_decompose({li, lj}, 4);
    REQUIRE(dec.components.size() == 1);
    CHECK(dec.components[0].algebra == 'H');
    CHECK(dec.components[0].dim_w == 1);
    CHECK(dec.components[0].simple_dim == 4);
}

TEST_CASE("isotypic: complex type (rotation)") {
    // an irrational rotation acting on R^2: commutant is C
    const double t = 1.234;
    const auto dec = isotypic_decompose({mat2(std::cos(t), -std::sin(t), std::sin(t), std::cos(t))}, 2);
    REQUIRE(dec.components.size() == 1);
    CHECK(dec.components[0].algebra == 'C');
    CHECK(dec.components[0].dim_w == 1);
}

TEST_CASE("isotypic: two non-isomorphic blocks are found and are invariant") {
    Rng rng(15);
    const RMat a1 = random_invertible(2, rng), a2 = random_invertible(2, rng);
    const RMat b1 = random_invertible(3, rng), b2 = random_invertible(3, rng);
    RMat g1 = RMat::Zero(5, 5), g2 = RMat::Zero(5, 5);
    g1.topLeftCorner(2, 2) = a1;
    g1.bottomRightCorner(3, 3) = b1;
    g2.topLeftCorner(2, 2) = a2;
    g2.bottomRightCorner(3, 3) = b2;
    // hide the splitting with a random orthogonal conjugation
    const RMat u = random_orthogonal(5, rng);
    const std::vector<RMat> gens = {u * g1 * u.transpose(), u * g2 * u.transpose()};
    const auto dec = isotypic_decompose(gens, 5);
    REQUIRE(dec.components.size() == 2);
    for (const auto& comp : dec.components)
        CHECK(invariant_subspace_check(comp.frame, gens) < 1e-8);
    CHECK(dec.components[0].frame.cols() + dec.components[1].frame.cols() == 5);
    // recover the hidden subspaces exactly
    RMat first = RMat::Zero(5, 3);
    first(2, 0) = first(3, 1) = first(4, 2) = 1;
    const CMat expected = (u * first).cast<Complex>();
    bool matched = false;
    for (const auto& comp : dec.components)
        if (comp.frame.cols() == 3 &&
            projector_distance(comp.frame.cast<Complex>(), expected) < 1e-8)
            matched = true;
    CHECK(matched);
}

TEST_CASE("isotypic rejects non-semisimple actions") {
    CHECK_THROWS_AS(isotypic_decompose({mat2(1, 1, 0, 1)}, 2), SemisimplicityError);
}

TEST_CASE("distinct isotypic blocks are J-orthogonal when J is preserved") {
    // two irreducible self-dual symplectic blocks: an SL(2,Z)-type block (the
    // two shears) and a rotation block; non-isomorphic, so the flat pairing
    // must vanish between them
    const double t = 0.9;
    RMat g1 = RMat::Zero(4, 4), g2 = RMat::Zero(4, 4);
    g1.topLeftCorner(2, 2) = mat2(1, 1, 0, 1);
    g1.bottomRightCorner(2, 2) = mat2(std::cos(t), -std::sin(t), std::sin(t), std::cos(t));
    g2.topLeftCorner(2, 2) = mat2(1, 0, 1, 1);
    g2.bottomRightCorner(2, 2) = mat2(std::cos(t), std::sin(t), -std::sin(t), std::cos(t));
    RMat j = RMat::Zero(4, 4);
    j.topLeftCorner(2, 2) = mat2(0, 1, -1, 0);
    j.bottomRightCorner(2, 2) = mat2(0, 1, -1, 0);
    const MatrixCocycle c(4, {g1, g2}, j);
    const auto dec = isotypic_decompose(c.generators(), 4);
    REQUIRE(dec.components.size() == 2);
    const RMat cross =
        dec.components[0].frame.transpose() * j * dec.components[1].frame;
    CHECK(cross.norm() < 1e-9);
}

TEST_CASE("end grading lift: two-dimensional example") {
    // W = C^2 graded in degrees {0, 1}: End degrees {-1, 0, 1}, dims {1, 2, 1}
    std::vector<GradedPiece> w_grading;
    CMat w0(2, 1), w1(2, 1);
    w0 << 1, 0;
    w1 << 0, 1;
    w_grading.push_back({0, w0});
    w_grading.push_back({1, w1});
    const auto end = induce_end_grading(w_grading, 2);
    REQUIRE(end.size() == 3);
    CHECK(end[0].degree == -1);
    CHECK(end[0].frame.cols() == 1);
    CHECK(end[1].frame.cols() == 2);
    CHECK(end[2].frame.cols() == 1);

    const auto lifted = end_grading_lift(end, 2);
    REQUIRE(lifted.size() == 2);
    CHECK(lifted[0].degree == 0);
    CHECK(lifted[1].degree == 1);
    CHECK(lifted[0].frame.cols() == 1);
    CHECK(lifted[1].frame.cols() == 1);
}

TEST_CASE("end grading lift: concentrated in degree zero") {
    std::vector<GradedPiece> w_grading = {{0, CMat::Identity(3, 3)}};
    const auto end = induce_end_grading(w_grading, 3);
    REQUIRE(end.size() == 1);
    const auto lifted = end_grading_lift(end, 3);
    REQUIRE(lifted.size() == 1);
    CHECK(lifted[0].frame.cols() == 3);
}

TEST_CASE("end grading lift: round trip on random realizable gradings") {
    Rng rng(2718);
    for (int rep = 0; rep < 25; ++rep) {
        const int n = 2 + static_cast<int>(rng.uniform() * 3);  // 2..4
        // random degrees with multiplicities
        std::vector<int> degs;
        int deg = 0;
        for (int i = 0; i < n; ++i) {
            degs.push_back(deg);
            if (rng.uniform() < 0.6) ++deg;
        }
        // random well-conditioned basis mixing (unitary from a QR of noise)
        CMat noise(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) noise(i, j) = Complex(rng.normal(), rng.normal());
        const CMat basis = orthonormal_span(noise);
        REQUIRE(basis.cols() == n);

        std::vector<GradedPiece> w_grading;
        int col = 0;
        while (col < n) {
            int end_col = col;
            while (end_col < n && degs[static_cast<std::size_t>(end_col)] ==
                                      degs[static_cast<std::size_t>(col)])
                ++end_col;
            w_grading.push_back(
                {degs[static_cast<std::size_t>(col)], basis.middleCols(col, end_col - col)});
            col = end_col;
        }
        const auto end = induce_end_grading(w_grading, n);
        const auto lifted = end_grading_lift(end, n);
        // same degree multiset (up to shift, normalized lowest = 0)
        REQUIRE(lifted.size() == w_grading.size());
        for (std::size_t i = 0; i < lifted.size(); ++i) {
            CHECK(lifted[i].degree == w_grading[i].degree - w_grading[0].degree);
            CHECK(lifted[i].frame.cols() == w_grading[i].frame.cols());
            CHECK(projector_distance(lifted[i].frame, w_grading[i].frame) < 1e-7);
        }
        // re-induce: same End-grading dimensions
        const auto end2 = induce_end_grading(lifted, n);
        REQUIRE(end2.size() == end.size());
        for (std::size_t i = 0; i < end.size(); ++i)
            CHECK(end2[i].frame.cols() == end[i].frame.cols());
    }
}

TEST_CASE("end grading lift rejects unrealizable input") {
    // a fake grading of End(C^2) with degree-0 part of dimension 3: no
    // grading of W induces it (dims must be sums of m_a m_b patterns)
    CMat e0(4, 3), e1(4, 1);
    e0.setZero();
    e1.setZero();
    // span{E11, E22, E12} in degree 0 and E21 in degree 1: not multiplicative
    e0(0, 0) = 1;
    e0(3, 1) = 1;
    e0(2, 2) = 1;
    e1(1, 0) = 1;
    CHECK_THROWS_AS(end_grading_lift({{0, e0}, {1, e1}}, 2), StructureError);
}

TEST_CASE("degree bound") {
    CHECK(degree_bound(1.0, 1.0 / 3.0) == 1);
    CHECK(degree_bound(2.0, 0.0) == 2);
    CHECK_THROWS_AS(degree_bound(1.0, 1.0), DomainError);
    CHECK(degree_bound_rational(1, 1, 1, 3) == 1);
    CHECK(degree_bound_rational(2, 1, 0, 1) == 2);
    CHECK(degree_bound_rational(7, 2, 1, 2) == 7);  // (7/2)/(1/2) = 7 exactly
    CHECK_THROWS_AS(degree_bound_rational(1, 1, 3, 2), DomainError);
}

TEST_CASE("bivariate reconstruction: exact polynomial") {
    const std::vector<double> xs = {-1.0, -0.5, 0.0, 0.5, 1.0};
    const std::vector<double> ys = {-0.8, -0.3, 0.1, 0.6, 1.1};
    RMat vals(5, 5);
    for (int i = 0; i < 5; ++i)
        for (int j = 0; j < 5; ++j) {
            const double x = xs[static_cast<std::size_t>(i)], y = ys[static_cast<std::size_t>(j)];
            vals(i, j) = x * x * y + 3 * y * y;
        }
    const auto rec = bivariate_poly_reconstruct(xs, ys, vals, 3, 1e-6);
    CHECK(rec.residual < 1e-9);
    CHECK(rec.coefficients(2, 1) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(rec.coefficients(0, 2) == doctest::Approx(3.0).epsilon(1e-9));
    CHECK(std::abs(rec.coefficients(1, 1)) < 1e-9);
}

TEST_CASE("bivariate reconstruction: constants and rejection") {
    const std::vector<double> xs = {0.0, 1.0, 2.0};
    const std::vector<double> ys = {0.0, 1.0, 2.0};
    const RMat vals = RMat::Constant(3, 3, 4.5);
    const auto rec = bivariate_poly_reconstruct(xs, ys, vals, 2, 1e-9);
    CHECK(rec.coefficients(0, 0) == doctest::Approx(4.5));
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            if (i + j > 0) CHECK(std::abs(rec.coefficients(i, j)) < 1e-10);

    // exp(xy) is not polynomial: rejected at any cap <= 5
    const std::vector<double> xe = {-1.2, -0.8, -0.4, 0.0, 0.4, 0.8, 1.2, 1.6};
    RMat ve(8, 8);
    for (int i = 0; i < 8; ++i)
        for (int j = 0; j < 8; ++j)
            ve(i, j) = std::exp(xe[static_cast<std::size_t>(i)] * xe[static_cast<std::size_t>(j)]);
    for (int cap = 1; cap <= 5; ++cap)
        CHECK_THROWS_AS(bivariate_poly_reconstruct(xe, xe, ve, cap, 1e-3), PreconditionError);
}

TEST_CASE("bivariate reconstruction: property over random polynomials") {
    Rng rng(606);
    const std::vector<double> nodes = {-1.5, -0.9, -0.3, 0.3, 0.9, 1.5, 2.1};
    for (int rep = 0; rep < 25; ++rep) {
        const int deg = static_cast<int>(rng.uniform() * 6);  // 0..5
        RMat coeff = RMat::Zero(deg + 1, deg + 1);
        for (int i = 0; i <= deg; ++i)
            for (int j = 0; j <= deg; ++j) coeff(i, j) = rng.uniform(-1, 1);
        RMat vals(7, 7);
        for (int i = 0; i < 7; ++i)
            for (int j = 0; j < 7; ++j)
                vals(i, j) = evaluate_bivariate(coeff, nodes[static_cast<std::size_t>(i)],
                                                nodes[static_cast<std::size_t>(j)]);
        if (deg + 1 > 7) continue;
        const auto rec = bivariate_poly_reconstruct(nodes, nodes, vals, deg, 1e-6);
        CHECK(rec.residual < 1e-9);
    }
}

TEST_CASE("homogeneous degree check") {
    using M = WeightedMonomial;
    CHECK(homogeneous_degree_check({{M{1, 1, 1}, 2.0}}));        // x y invA
    CHECK(homogeneous_degree_check({{M{2, 0, 1}, -1.0}}));       // x^2 invA
    CHECK_FALSE(homogeneous_degree_check({{M{1, 0, 1}, 1.0}}));  // degree -1
    CHECK(homogeneous_degree_check({{M{1, 0, 1}, 0.0}}));        // zero coefficient ignored
    CHECK(homogeneous_degree_check({{M{2, 2, 2}, 1.0}, {M{0, 0, 0}, 3.0}}));
    CHECK_FALSE(homogeneous_degree_check({{M{2, 2, 2}, 1.0}, {M{1, 0, 0}, 3.0}}));
}

TEST_CASE("cocycle json round trip") {
    RMat j = mat2(0, 1, -1, 0);
    const MatrixCocycle c(2, {mat2(1, 1, 0, 1), mat2(1, 0, 1, 1)}, j);
    const auto jj = cocycle_to_json(c);
    const auto c2 = cocycle_from_json(jj);
    CHECK(c2.dim() == 2);
    CHECK((c2.generators()[1] - c.generators()[1]).norm() < 1e-15);
    REQUIRE(c2.pairing().has_value());
    CHECK((*c2.pairing() - j).norm() < 1e-15);
}

TEST_CASE("pairing violation is rejected") {
    RMat j = mat2(0, 1, -1, 0);
    CHECK_THROWS_AS(MatrixCocycle(2, {mat2(2, 0, 0, 2)}, j), StructureError);
}
