#include "doctest.h"

#include "kzlab/origami.hpp"
#include "kzlab/rng.hpp"

using namespace kzlab;
using namespace kzlab::origami;
using intal::IMat;
using intal::IVec;

namespace {

Origami torus() { return {1, {0}, {0}}; }

/// The 3-square L: h = (1 2)(3), v = (1 3)(2).
Origami l_origami() { return {3, {1, 0, 2}, {2, 1, 0}}; }

/// Cayley origami of the quaternion group: squares = {1,-1,i,-i,j,-j,k,-k},
/// h = right multiplication by i, v = right multiplication by j.
Origami quaternion_origami() {
    return {8, {2, 3, 1, 0, 7, 6, 4, 5}, {4, 5, 6, 7, 1, 0, 3, 2}};
}

}  // namespace

TEST_CASE("validate and normalize") {
    CHECK(validate_and_normalize(torus()) == torus());

    // a relabeled copy of the L-origami normalizes to the same form
    const Origami l = l_origami();
    // apply the relabeling 0->2, 1->0, 2->1
    const std::vector<int> pi = {2, 0, 1};
    Origami relabeled;
    relabeled.n = 3;
    relabeled.h.resize(3);
    relabeled.v.resize(3);
    for (int x = 0; x < 3; ++x) {
        relabeled.h[static_cast<std::size_t>(pi[static_cast<std::size_t>(x)])] =
            pi[static_cast<std::size_t>(l.h[static_cast<std::size_t>(x)])];
        relabeled.v[static_cast<std::size_t>(pi[static_cast<std::size_t>(x)])] =
            pi[static_cast<std::size_t>(l.v[static_cast<std::size_t>(x)])];
    }
    CHECK(validate_and_normalize(relabeled) == validate_and_normalize(l));

    // disconnected pair of tori
    const Origami disconnected{2, {0, 1}, {0, 1}};
    CHECK_THROWS_AS(validate_and_normalize(disconnected), StructureError);
    // malformed permutation
    CHECK_THROWS_AS(validate_and_normalize(Origami{2, {0, 0}, {0, 1}}), StructureError);
}

TEST_CASE("origami text and json parsing") {
    const auto l = origami_from_text("h = (1 2)(3)\nv = (1 3)(2)\n");
    CHECK(l == l_origami());
    const auto round = origami_from_text(origami_to_text(l_origami()));
    CHECK(round == l_origami());

    const auto j = origami_to_json(l_origami());
    CHECK(j["n"] == 3);
    CHECK(origami_from_json(j) == l_origami());

    CHECK_THROWS_AS(origami_from_text("h = (1 2\nv = (1)"), StructureError);
}

TEST_CASE("strata of the three reference surfaces") {
    const auto st = stratum(torus());
    CHECK(st.zero_orders.empty());
    CHECK(st.genus == 1);

    const auto sl = stratum(l_origami());
    CHECK(sl.zero_orders == std::vector<int>{2});
    CHECK(sl.genus == 2);

    const auto sq = stratum(quaternion_origami());
    CHECK(sq.zero_orders == std::vector<int>{1, 1, 1, 1});
    CHECK(sq.genus == 3);
}

TEST_CASE("homology: torus") {
    const auto m = homology_model(torus());
    CHECK(m.genus == 1);
    CHECK(m.basis.cols() == 2);
    IMat j0(2, 2);
    j0 << 0, 1, -1, 0;
    CHECK((m.pairing - j0).cwiseAbs().maxCoeff() == 0);
}

TEST_CASE("homology ranks: L is 4, quaternion is 6") {
    CHECK(homology_model(l_origami()).basis.cols() == 4);
    CHECK(homology_model(quaternion_origami()).basis.cols() == 6);
}

TEST_CASE("generator action on the torus") {
    const auto model = homology_model(torus());
    const auto t = apply_generator(model, Gen::T);
    CHECK(t.image == torus());
    IMat shear(2, 2);
    shear << 1, 1, 0, 1;
    CHECK((t.h1_matrix - shear).cwiseAbs().maxCoeff() == 0);

    const auto s = apply_generator(model, Gen::S);
    CHECK(s.image == torus());
    // S^2 acts by -1 on the torus part
    const IMat s2 = s.h1_matrix * s.h1_matrix;
    CHECK((s2 + IMat::Identity(2, 2)).cwiseAbs().maxCoeff() == 0);
}

TEST_CASE("generator then inverse is the identity") {
    for (const Origami& o : {torus(), l_origami(), quaternion_origami()}) {
        const auto model = homology_model(o);
        for (const Gen g : {Gen::T, Gen::Tinv, Gen::S, Gen::Sinv}) {
            const auto fwd = apply_generator(model, g);
            const auto back = apply_generator(homology_model(fwd.image), gen_inverse(g));
            CHECK(back.image == validate_and_normalize(o));
            const IMat prod = back.h1_matrix * fwd.h1_matrix;
            CHECK((prod - IMat::Identity(prod.rows(), prod.cols())).cwiseAbs().maxCoeff() == 0);
        }
    }
}

TEST_CASE("orbits: torus has one vertex, the L-origami three") {
    CHECK(sl2z_orbit(torus()).vertices.size() == 1);
    const auto graph = sl2z_orbit(l_origami());
    CHECK(graph.vertices.size() == 3);
    // closure: every generator image lands in the vertex set (by construction
    // of the edges; spot-check the edge endpoints)
    for (const auto& e : graph.edges) {
        CHECK(e.src >= 0);
        CHECK(e.dst < static_cast<int>(graph.vertices.size()));
    }
    CHECK_THROWS_AS(sl2z_orbit(l_origami(), 2), DomainError);
}

TEST_CASE("quaternion orbit closes and stays symplectic") {
    const auto graph = sl2z_orbit(quaternion_origami());
    CHECK(graph.vertices.size() >= 1);
    // symplecticity of every edge matrix is asserted inside apply_generator;
    // verify once more against the base pairing
    const auto& j = graph.models[0].pairing;
    for (const auto& e : graph.edges) {
        if (e.src != 0 || e.dst != 0) continue;
        const IMat check = e.matrix.transpose() * j * e.matrix;
        CHECK((check - j).cwiseAbs().maxCoeff() == 0);
    }
}

TEST_CASE("word functoriality along the orbit graph") {
    const auto graph = sl2z_orbit(l_origami());
    Rng rng(31337);
    for (int rep = 0; rep < 6; ++rep) {
        const int len = 1 + static_cast<int>(rng.uniform() * 10);
        int vertex = 0;
        IMat prod = IMat::Identity(4, 4);
        std::vector<Gen> word;
        for (int s = 0; s < len; ++s) {
            const Gen g = static_cast<Gen>(static_cast<int>(rng.uniform() * 4));
            word.push_back(g);
            const auto& e = graph.edge(vertex, g);
            prod = e.matrix * prod;
            vertex = e.dst;
        }
        // recompute by applying generators one at a time from scratch
        Origami cur = graph.vertices[0];
        IMat prod2 = IMat::Identity(4, 4);
        for (const Gen g : word) {
            const auto img = apply_generator(cur, g);
            prod2 = img.h1_matrix * prod2;
            cur = img.image;
        }
        CHECK(cur == graph.vertices[static_cast<std::size_t>(vertex)]);
        CHECK((prod - prod2).cwiseAbs().maxCoeff() == 0);
    }
}

TEST_CASE("monodromy generators are symplectic and act like SL(2,Z) on the torus") {
    const auto graph = sl2z_orbit(torus());
    const auto mono = monodromy_generators(graph);
    REQUIRE(mono.size() == 4);  // all four edges are loops
    const IMat j = graph.models[0].pairing;
    for (const auto& g : mono)
        CHECK((g.transpose() * j * g - j).cwiseAbs().maxCoeff() == 0);
    // the group generated contains -I = S^2 and the standard shear: find S, T
    bool has_shear = false, has_rotation = false;
    for (const auto& g : mono) {
        if (g(0, 0) == 1 && g(0, 1) == 1 && g(1, 0) == 0 && g(1, 1) == 1) has_shear = true;
        if (g(0, 0) == 0 && g(1, 1) == 0) has_rotation = true;
    }
    CHECK(has_shear);
    CHECK(has_rotation);
}

TEST_CASE("tautological splitting: torus has trivial complement") {
    const auto graph = sl2z_orbit(torus());
    const auto split = tautological_splitting(graph.models[0], monodromy_generators(graph));
    CHECK(split.st.cols() == 2);
    CHECK(split.comp.cols() == 0);
}

TEST_CASE("tautological splitting of the L-origami") {
    const auto graph = sl2z_orbit(l_origami());
    const auto mono = monodromy_generators(graph);
    const auto split = tautological_splitting(graph.models[0], mono);
    CHECK(split.st.cols() == 2);
    CHECK(split.comp.cols() == 2);
    const IMat cross = split.st.transpose() * graph.models[0].pairing * split.comp;
    CHECK(cross.cwiseAbs().maxCoeff() == 0);
}

TEST_CASE("quaternion complement has rank 4 with bounded monodromy") {
    const auto graph = sl2z_orbit(quaternion_origami());
    const auto mono = monodromy_generators(graph);
    const auto split = tautological_splitting(graph.models[0], mono);
    CHECK(split.comp.cols() == 4);
    const double bound = restricted_norm_bound(graph, split.comp, 10000, 7);
    CHECK(bound < 100.0);
}

TEST_CASE("kz spectrum of the torus is the tautological exponent alone") {
    const auto graph = sl2z_orbit(torus());
    const auto spec = kz_spectrum(graph, {}, 4000, 6, 11);
    REQUIRE(spec.normalized.size() == 1);
    CHECK(spec.normalized[0] == doctest::Approx(1.0));
    CHECK(cocycle::spectrum_symmetric(spec.full));
}

TEST_CASE("kz spectrum of the L-origami under the uniform generator walk") {
    // The uniform walk on {T, T^-1, S, S^-1} has a singular harmonic measure,
    // so its normalized second exponent sits near 0.208 rather than at the
    // Teichmuller-flow value 1/3 (see the cross-checks in the acceptance
    // suite); this pins the measured value as a regression guard.
    const auto graph = sl2z_orbit(l_origami());
    const auto spec = kz_spectrum(graph, {}, 30000, 10, 2024);
    REQUIRE(spec.normalized.size() == 2);
    CHECK(spec.normalized[0] == doctest::Approx(1.0));
    CHECK(spec.normalized[1] > 0.16);
    CHECK(spec.normalized[1] < 0.26);
    CHECK(cocycle::spectrum_symmetric(spec.full));
    // the top exponent agrees with the drift of the standard representation
    CHECK(spec.full.exponents[0] == doctest::Approx(0.0437).epsilon(0.06));
}

TEST_CASE("quaternion monodromy on the complement factors through a finite group") {
    const auto graph = sl2z_orbit(quaternion_origami());
    const auto mono = monodromy_generators(graph);
    const auto split = tautological_splitting(graph.models[0], mono);
    std::vector<IMat> restricted;
    for (const auto& g : mono) {
        IMat r;
        REQUIRE(intal::solve_matrix(split.comp, intal::checked_product(g, split.comp), r));
        restricted.push_back(r);
    }
    // closure under multiplication: the image is a finite group of order 96
    std::vector<IMat> group = {IMat::Identity(4, 4)};
    bool grew = true;
    while (grew && group.size() <= 200) {
        grew = false;
        for (std::size_t i = 0; i < group.size(); ++i)
            for (const auto& g : restricted) {
                const IMat prod = intal::checked_product(g, group[i]);
                bool found = false;
                for (const auto& h : group)
                    if ((h - prod).cwiseAbs().maxCoeff() == 0) found = true;
                if (!found) {
                    group.push_back(prod);
                    grew = true;
                }
            }
    }
    CHECK(group.size() == 96);
}

TEST_CASE("rational splitting report") {
    const auto torus_report = rational_splitting_report(torus());
    CHECK(torus_report.comp_rank == 0);
    CHECK(torus_report.st_rank == 2);

    const auto l_report = rational_splitting_report(l_origami());
    CHECK(l_report.genus == 2);
    CHECK(l_report.comp_rank == 2);
    CHECK(l_report.j_orthogonal);
    CHECK(l_report.st_invariant);
    CHECK(l_report.comp_invariant);
    CHECK(l_report.projector_denominator >= 1);
    REQUIRE_FALSE(l_report.comp_isotypic.empty());

    const auto q_report = rational_splitting_report(quaternion_origami());
    CHECK(q_report.comp_rank == 4);
    REQUIRE(q_report.comp_isotypic.size() == 1);
    CHECK(q_report.comp_isotypic[0].algebra == 'H');
}

TEST_CASE("property: generator round trips on random surfaces with automorphisms") {
    // random transitive pairs often carry nontrivial translation groups; the
    // inverse generators must still compose to the exact identity
    Rng rng(5550);
    int tested = 0;
    while (tested < 8) {
        const int n = 2 + static_cast<int>(rng.uniform() * 6);  // 2..7
        Origami o;
        o.n = n;
        o.h.resize(static_cast<std::size_t>(n));
        o.v.resize(static_cast<std::size_t>(n));
        for (auto* p : {&o.h, &o.v}) {
            for (int i = 0; i < n; ++i) (*p)[static_cast<std::size_t>(i)] = i;
            for (int i = n - 1; i > 0; --i) {
                const int j = static_cast<int>(rng.uniform() * (i + 1));
                std::swap((*p)[static_cast<std::size_t>(i)], (*p)[static_cast<std::size_t>(j)]);
            }
        }
        if (!is_transitive(o)) continue;
        ++tested;
        const auto model = homology_model(o);
        for (const Gen g : {Gen::T, Gen::Tinv, Gen::S, Gen::Sinv}) {
            const auto fwd = apply_generator(model, g);
            const auto back = apply_generator(homology_model(fwd.image), gen_inverse(g));
            CHECK(back.image == model.surface);
            const IMat prod = back.h1_matrix * fwd.h1_matrix;
            CHECK((prod - IMat::Identity(prod.rows(), prod.cols())).cwiseAbs().maxCoeff() == 0);
        }
    }
}

TEST_CASE("property: monodromy and splitting on a random medium orbit") {
    // a 7-square surface with a 144-vertex orbit: transports stay exact
    const Origami o{7, {1, 2, 0, 4, 3, 6, 5}, {2, 0, 3, 1, 5, 6, 4}};
    if (is_transitive(o)) {
        const auto graph = sl2z_orbit(o);
        CHECK(graph.vertices.size() >= 2);
        const auto mono = monodromy_generators(graph);
        const auto split = tautological_splitting(graph.models[0], mono);
        CHECK(split.st.cols() == 2);
        CHECK(split.comp.cols() + 2 == graph.models[0].basis.cols());
    }
}

TEST_CASE("property: stratum and homology agree on random transitive pairs") {
    Rng rng(123);
    int tested = 0;
    while (tested < 12) {
        const int n = 2 + static_cast<int>(rng.uniform() * 11);  // 2..12
        Origami o;
        o.n = n;
        o.h.resize(static_cast<std::size_t>(n));
        o.v.resize(static_cast<std::size_t>(n));
        // random permutations by Fisher-Yates
        for (auto* p : {&o.h, &o.v}) {
            for (int i = 0; i < n; ++i) (*p)[static_cast<std::size_t>(i)] = i;
            for (int i = n - 1; i > 0; --i) {
                const int j = static_cast<int>(rng.uniform() * (i + 1));
                std::swap((*p)[static_cast<std::size_t>(i)], (*p)[static_cast<std::size_t>(j)]);
            }
        }
        if (!is_transitive(o)) continue;
        ++tested;
        const auto sig = stratum(o);
        int total = 0;
        for (int k : sig.zero_orders) total += k;
        CHECK(total == 2 * sig.genus - 2);
        const auto model = homology_model(o);
        CHECK(model.basis.cols() == 2 * sig.genus);
        CHECK((model.pairing - intal::standard_symplectic(sig.genus)).cwiseAbs().maxCoeff() == 0);
    }
}
