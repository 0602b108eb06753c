#include "kzlab/origami.hpp"

#include <algorithm>
#include <cctype>
#include <numeric>
#include <queue>
#include <sstream>

#include "kzlab/rng.hpp"

namespace kzlab::origami {

namespace {

using intal::IMat;
using intal::IVec;

std::vector<int> inverse_perm(const std::vector<int>& p) {
    std::vector<int> inv(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) inv[static_cast<std::size_t>(p[i])] = static_cast<int>(i);
    return inv;
}

void check_permutation(const std::vector<int>& p, int n, const char* name) {
    if (static_cast<int>(p.size()) != n)
        throw StructureError(std::string("origami: permutation ") + name + " has wrong length");
    std::vector<bool> seen(static_cast<std::size_t>(n), false);
    for (int x : p) {
        if (x < 0 || x >= n || seen[static_cast<std::size_t>(x)])
            throw StructureError(std::string("origami: ") + name + " is not a permutation");
        seen[static_cast<std::size_t>(x)] = true;
    }
}

struct UnionFind {
    std::vector<int> parent;
    explicit UnionFind(int n) : parent(static_cast<std::size_t>(n)) {
        std::iota(parent.begin(), parent.end(), 0);
    }
    int find(int x) {
        while (parent[static_cast<std::size_t>(x)] != x) {
            parent[static_cast<std::size_t>(x)] =
                parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(x)])];
            x = parent[static_cast<std::size_t>(x)];
        }
        return x;
    }
    void unite(int a, int b) { parent[static_cast<std::size_t>(find(a))] = find(b); }
};

}  // namespace

Origami origami_from_text(const std::string& text) {
    std::map<char, std::vector<std::vector<int>>> cycles;
    std::istringstream in(text);
    std::string line;
    int max_label = 0;
    while (std::getline(in, line)) {
        const auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        char which = 0;
        for (std::size_t i = 0; i < eq; ++i)
            if (line[i] == 'h' || line[i] == 'v') which = line[i];
        if (which == 0) throw StructureError("origami text: expected `h = ...` or `v = ...`");
        std::vector<std::vector<int>> cs;
        std::vector<int> current;
        bool inside = false;
        std::string num;
        const auto flush_num = [&]() {
            if (num.empty()) return;
            const int label = std::stoi(num);
            if (label < 1) throw StructureError("origami text: labels are 1-indexed");
            current.push_back(label - 1);
            max_label = std::max(max_label, label);
            num.clear();
        };
        for (std::size_t i = eq + 1; i < line.size(); ++i) {
            const char c = line[i];
            if (c == '(') {
                inside = true;
                current.clear();
            } else if (c == ')') {
                flush_num();
                if (!inside) throw StructureError("origami text: unbalanced parentheses");
                cs.push_back(current);
                inside = false;
            } else if (std::isdigit(static_cast<unsigned char>(c))) {
                num.push_back(c);
            } else if (c == ' ' || c == ',' || c == '\t' || c == '\r') {
                flush_num();
            } else {
                throw StructureError("origami text: unexpected character");
            }
        }
        if (inside) throw StructureError("origami text: unbalanced parentheses");
        cycles[which] = cs;
    }
    if (!cycles.count('h') || !cycles.count('v'))
        throw StructureError("origami text: need both h and v");

    Origami o;
    o.n = max_label;
    const auto build = [&](const std::vector<std::vector<int>>& cs) {
        std::vector<int> p(static_cast<std::size_t>(o.n));
        std::iota(p.begin(), p.end(), 0);
        for (const auto& cyc : cs)
            for (std::size_t i = 0; i < cyc.size(); ++i) {
                const int from = cyc[i];
                const int to = cyc[(i + 1) % cyc.size()];
                if (from >= o.n || to >= o.n) throw StructureError("origami text: label out of range");
                p[static_cast<std::size_t>(from)] = to;
            }
        return p;
    };
    o.h = build(cycles['h']);
    o.v = build(cycles['v']);
    check_permutation(o.h, o.n, "h");
    check_permutation(o.v, o.n, "v");
    return o;
}

std::string origami_to_text(const Origami& o) {
    const auto cycles_of = [&](const std::vector<int>& p) {
        std::string out;
        std::vector<bool> seen(static_cast<std::size_t>(o.n), false);
        for (int start = 0; start < o.n; ++start) {
            if (seen[static_cast<std::size_t>(start)]) continue;
            out += "(";
            int x = start;
            bool first = true;
            do {
                if (!first) out += " ";
                out += std::to_string(x + 1);
                seen[static_cast<std::size_t>(x)] = true;
                x = p[static_cast<std::size_t>(x)];
                first = false;
            } while (x != start);
            out += ")";
        }
        return out;
    };
    return "h = " + cycles_of(o.h) + "\nv = " + cycles_of(o.v) + "\n";
}

Origami origami_from_json(const Json& j) {
    Origami o;
    o.n = j.at("n").get<int>();
    o.h = j.at("h").get<std::vector<int>>();
    o.v = j.at("v").get<std::vector<int>>();
    check_permutation(o.h, o.n, "h");
    check_permutation(o.v, o.n, "v");
    return o;
}

Json origami_to_json(const Origami& o) {
    Json j;
    j["n"] = o.n;
    j["h"] = o.h;
    j["v"] = o.v;
    return j;
}

bool is_transitive(const Origami& o) {
    if (o.n <= 0) return false;
    std::vector<bool> seen(static_cast<std::size_t>(o.n), false);
    std::queue<int> queue;
    queue.push(0);
    seen[0] = true;
    int count = 1;
    const auto hinv = inverse_perm(o.h);
    const auto vinv = inverse_perm(o.v);
    while (!queue.empty()) {
        const int x = queue.front();
        queue.pop();
        for (const auto* p : {&o.h, &o.v, &hinv, &vinv}) {
            const int y = (*p)[static_cast<std::size_t>(x)];
            if (!seen[static_cast<std::size_t>(y)]) {
                seen[static_cast<std::size_t>(y)] = true;
                ++count;
                queue.push(y);
            }
        }
    }
    return count == o.n;
}

Origami validate_and_normalize(const Origami& o) {
    if (o.n <= 0) throw StructureError("origami: need at least one square");
    check_permutation(o.h, o.n, "h");
    check_permutation(o.v, o.n, "v");
    if (!is_transitive(o))
        throw StructureError("origami: squares are not connected (non-transitive pair)");

    const auto hinv = inverse_perm(o.h);
    const auto vinv = inverse_perm(o.v);
    Origami best;
    for (int root = 0; root < o.n; ++root) {
        // breadth-first relabeling from this root, neighbor order h, v, h^-1, v^-1
        std::vector<int> label(static_cast<std::size_t>(o.n), -1);
        std::vector<int> order;
        std::queue<int> queue;
        queue.push(root);
        label[static_cast<std::size_t>(root)] = 0;
        order.push_back(root);
        while (!queue.empty()) {
            const int x = queue.front();
            queue.pop();
            for (const auto* p : {&o.h, &o.v, &hinv, &vinv}) {
                const int y = (*p)[static_cast<std::size_t>(x)];
                if (label[static_cast<std::size_t>(y)] < 0) {
                    label[static_cast<std::size_t>(y)] = static_cast<int>(order.size());
                    order.push_back(y);
                    queue.push(y);
                }
            }
        }
        Origami cand;
        cand.n = o.n;
        cand.h.resize(static_cast<std::size_t>(o.n));
        cand.v.resize(static_cast<std::size_t>(o.n));
        for (int x = 0; x < o.n; ++x) {
            cand.h[static_cast<std::size_t>(label[static_cast<std::size_t>(x)])] =
                label[static_cast<std::size_t>(o.h[static_cast<std::size_t>(x)])];
            cand.v[static_cast<std::size_t>(label[static_cast<std::size_t>(x)])] =
                label[static_cast<std::size_t>(o.v[static_cast<std::size_t>(x)])];
        }
        if (root == 0 || cand < best) best = cand;
    }
    return best;
}

StratumSignature stratum(const Origami& o) {
    const Origami norm = validate_and_normalize(o);
    const auto hinv = inverse_perm(norm.h);
    const auto vinv = inverse_perm(norm.v);
    // commutator h v h^-1 v^-1 as a function composition
    std::vector<int> c(static_cast<std::size_t>(norm.n));
    for (int x = 0; x < norm.n; ++x)
        c[static_cast<std::size_t>(x)] =
            norm.h[static_cast<std::size_t>(
                norm.v[static_cast<std::size_t>(hinv[static_cast<std::size_t>(
                    vinv[static_cast<std::size_t>(x)])])])];

    StratumSignature sig;
    std::vector<bool> seen(static_cast<std::size_t>(norm.n), false);
    int total = 0;
    for (int start = 0; start < norm.n; ++start) {
        if (seen[static_cast<std::size_t>(start)]) continue;
        int len = 0;
        int x = start;
        do {
            seen[static_cast<std::size_t>(x)] = true;
            x = c[static_cast<std::size_t>(x)];
            ++len;
        } while (x != start);
        if (len > 1) {
            sig.zero_orders.push_back(len - 1);
            total += len - 1;
        }
    }
    std::sort(sig.zero_orders.rbegin(), sig.zero_orders.rend());
    if (total % 2 != 0)
        throw StructureError("stratum: zero orders do not sum to an even number");
    sig.genus = 1 + total / 2;
    return sig;
}

HomologyModel homology_model(const Origami& input) {
    const Origami o = validate_and_normalize(input);
    const int n = o.n;
    const auto hinv = inverse_perm(o.h);
    const auto vinv = inverse_perm(o.v);

    // edges: b_i = i (bottom), l_i = n + i (left)
    // boundary of square i: b_i + l_{h(i)} - b_{v(i)} - l_i
    IMat d2 = IMat::Zero(2 * n, n);
    for (int i = 0; i < n; ++i) {
        d2(i, i) += 1;
        d2(n + o.h[static_cast<std::size_t>(i)], i) += 1;
        d2(o.v[static_cast<std::size_t>(i)], i) -= 1;
        d2(n + i, i) -= 1;
    }

    // vertices: orbits of the 4n corner slots (BL, BR, TL, TR per square)
    UnionFind uf(4 * n);
    const auto corner = [n](int square, int c) { return 4 * square + c; };
    constexpr int BL = 0, BR = 1, TL = 2, TR = 3;
    for (int i = 0; i < n; ++i) {
        uf.unite(corner(i, BR), corner(o.h[static_cast<std::size_t>(i)], BL));
        uf.unite(corner(i, TL), corner(o.v[static_cast<std::size_t>(i)], BL));
        uf.unite(corner(i, TR), corner(o.h[static_cast<std::size_t>(i)], TL));
        uf.unite(corner(i, TR), corner(o.v[static_cast<std::size_t>(i)], BR));
    }
    std::map<int, int> vertex_id;
    for (int s = 0; s < 4 * n; ++s) {
        const int r = uf.find(s);
        if (!vertex_id.count(r)) vertex_id[r] = static_cast<int>(vertex_id.size());
    }
    const int nv = static_cast<int>(vertex_id.size());

    IMat d1 = IMat::Zero(nv, 2 * n);
    for (int i = 0; i < n; ++i) {
        // b_i runs BL(i) -> BL(h(i)); l_i runs BL(i) -> BL(v(i))
        d1(vertex_id[uf.find(corner(o.h[static_cast<std::size_t>(i)], BL))], i) += 1;
        d1(vertex_id[uf.find(corner(i, BL))], i) -= 1;
        d1(vertex_id[uf.find(corner(o.v[static_cast<std::size_t>(i)], BL))], n + i) += 1;
        d1(vertex_id[uf.find(corner(i, BL))], n + i) -= 1;
    }

    // Euler characteristic sanity: V - E + F = 2 - 2g
    const auto sig = stratum(o);
    if (nv - 2 * n + n != 2 - 2 * sig.genus)
        throw StructureError("homology: Euler characteristic mismatch");

    // H^1 = ker(delta^1) / im(delta^0), delta^i the transposed boundaries
    const IMat delta1 = d2.transpose();
    const IMat delta0 = d1.transpose();
    const IMat kernel_basis = intal::kernel(delta1);  // 2n x r

    IMat y;
    if (!intal::solve_matrix(kernel_basis, delta0, y))
        throw StructureError("homology: coboundaries do not lie in the cocycles");
    const auto sf = intal::smith_normal_form(y);
    const IMat kernel_adapted = kernel_basis * intal::unimodular_inverse(sf.left);
    std::vector<Eigen::Index> free_cols;
    const Eigen::Index rr = std::min(y.rows(), y.cols());
    for (Eigen::Index i = 0; i < kernel_adapted.cols(); ++i) {
        const long long d = (i < rr) ? sf.d(i, i) : 0;
        if (d == 0) {
            free_cols.push_back(i);
        } else if (d != 1) {
            throw StructureError("homology: unexpected torsion in H^1");
        }
    }
    if (static_cast<int>(free_cols.size()) != 2 * sig.genus)
        throw StructureError("homology: rank differs from 2g");

    IMat basis(2 * n, static_cast<Eigen::Index>(free_cols.size()));
    for (std::size_t c = 0; c < free_cols.size(); ++c)
        basis.col(static_cast<Eigen::Index>(c)) = kernel_adapted.col(free_cols[c]);

    HomologyModel model;
    model.surface = o;
    model.genus = sig.genus;

    // cup-product intersection form on the chosen representatives
    IMat j(basis.cols(), basis.cols());
    for (Eigen::Index a = 0; a < basis.cols(); ++a)
        for (Eigen::Index b = 0; b < basis.cols(); ++b)
            j(a, b) = cup_pairing(o, basis.col(a), basis.col(b));
    if ((j + j.transpose()).cwiseAbs().maxCoeff() != 0)
        throw StructureError("homology: intersection form is not antisymmetric");
    const long long det = intal::det(j);
    if (det != 1 && det != -1)
        throw StructureError("homology: intersection form is not unimodular");

    const IMat u = intal::symplectic_basis(j);
    model.basis = basis * u;
    model.coboundary0 = delta0;
    model.pairing = intal::standard_symplectic(sig.genus);
    return model;
}

long long cup_pairing(const Origami& o, const IVec& x, const IVec& y) {
    const int n = o.n;
    long long total = 0;
    for (int i = 0; i < n; ++i) {
        // (x cup y)(square i) = x(bottom) y(right) - x(left) y(top)
        total += x(i) * y(n + o.h[static_cast<std::size_t>(i)]);
        total -= x(n + i) * y(o.v[static_cast<std::size_t>(i)]);
    }
    return total;
}

const char* gen_name(Gen g) {
    switch (g) {
        case Gen::T: return "T";
        case Gen::Tinv: return "T^-1";
        case Gen::S: return "S";
        default: return "S^-1";
    }
}

Gen gen_inverse(Gen g) {
    switch (g) {
        case Gen::T: return Gen::Tinv;
        case Gen::Tinv: return Gen::T;
        case Gen::S: return Gen::Sinv;
        default: return Gen::S;
    }
}

namespace {

/// One term of an edge path: +-1 times an edge of the source complex.
struct PathTerm {
    int edge = 0;
    int sign = 1;
};

/// Combinatorial image and the expression of each image edge as a chain of
/// source edges (rooted at the shared corner convention).
struct ActionData {
    Origami image_raw;  // same labels as the source
    std::vector<std::vector<PathTerm>> bottom_paths;  // per square
    std::vector<std::vector<PathTerm>> left_paths;
};

ActionData combinatorial_action(const Origami& o, Gen g) {
    const int n = o.n;
    const auto hinv = inverse_perm(o.h);
    const auto vinv = inverse_perm(o.v);
    ActionData out;
    out.image_raw.n = n;
    out.bottom_paths.resize(static_cast<std::size_t>(n));
    out.left_paths.resize(static_cast<std::size_t>(n));
    const auto B = [](int i) { return i; };
    const auto L = [n](int i) { return n + i; };

    switch (g) {
        case Gen::T:
            // (h, v) -> (h, v o h^-1)
            out.image_raw.h = o.h;
            out.image_raw.v.resize(static_cast<std::size_t>(n));
            for (int i = 0; i < n; ++i)
                out.image_raw.v[static_cast<std::size_t>(i)] =
                    o.v[static_cast<std::size_t>(hinv[static_cast<std::size_t>(i)])];
            for (int i = 0; i < n; ++i) {
                out.bottom_paths[static_cast<std::size_t>(i)] = {{B(i), +1}};
                const int hi = hinv[static_cast<std::size_t>(i)];
                out.left_paths[static_cast<std::size_t>(i)] = {{B(hi), -1}, {L(hi), +1}};
            }
            break;
        case Gen::Tinv:
            // (h, v) -> (h, v o h)
            out.image_raw.h = o.h;
            out.image_raw.v.resize(static_cast<std::size_t>(n));
            for (int i = 0; i < n; ++i)
                out.image_raw.v[static_cast<std::size_t>(i)] =
                    o.v[static_cast<std::size_t>(o.h[static_cast<std::size_t>(i)])];
            for (int i = 0; i < n; ++i) {
                out.bottom_paths[static_cast<std::size_t>(i)] = {{B(i), +1}};
                out.left_paths[static_cast<std::size_t>(i)] = {
                    {B(i), +1}, {L(o.h[static_cast<std::size_t>(i)]), +1}};
            }
            break;
        case Gen::S:
            // (h, v) -> (v, h^-1); clockwise rotation of the squares, so the
            // new bottom is the old right edge and the new left the reversed
            // old bottom
            out.image_raw.h = o.v;
            out.image_raw.v = hinv;
            for (int i = 0; i < n; ++i) {
                out.bottom_paths[static_cast<std::size_t>(i)] = {
                    {L(o.h[static_cast<std::size_t>(i)]), +1}};
                out.left_paths[static_cast<std::size_t>(i)] = {{B(i), -1}};
            }
            break;
        case Gen::Sinv:
            // (h, v) -> (v^-1, h); counterclockwise rotation: new bottom is
            // the reversed old left edge, new left the old top
            out.image_raw.h = vinv;
            out.image_raw.v = o.h;
            for (int i = 0; i < n; ++i) {
                out.bottom_paths[static_cast<std::size_t>(i)] = {{L(i), -1}};
                out.left_paths[static_cast<std::size_t>(i)] = {
                    {B(o.v[static_cast<std::size_t>(i)]), +1}};
            }
            break;
    }
    return out;
}

}  // namespace

GeneratorImage apply_generator(const HomologyModel& src, Gen g) {
    const Origami& o = src.surface;
    const int n = o.n;

    // The relabeling to the canonical image is only defined up to a
    // translation of the image, so the chain-level matrices of gamma and
    // gamma^{-1} computed independently need not compose to the identity on
    // surfaces with automorphisms. The inverse generators are therefore
    // defined as exact inverses of the forward ones evaluated at the image,
    // which makes (gamma, then gamma^{-1}) the identity by construction.
    if (g == Gen::Tinv || g == Gen::Sinv) {
        const ActionData raw = combinatorial_action(o, g);
        const Origami image = validate_and_normalize(raw.image_raw);
        const auto forward = apply_generator(homology_model(image), gen_inverse(g));
        if (!(forward.image == o))
            throw StructureError("apply_generator: inverse image round trip failed");
        GeneratorImage out;
        out.image = image;
        out.h1_matrix = intal::unimodular_inverse(forward.h1_matrix);
        return out;
    }

    const ActionData action = combinatorial_action(o, g);

    // relabeling of the raw image to its canonical form
    const Origami image = validate_and_normalize(action.image_raw);
    // find the relabeling by re-running normalization bookkeeping: try all
    // roots and pick the one reproducing `image`
    const auto hinv = inverse_perm(action.image_raw.h);
    const auto vinv = inverse_perm(action.image_raw.v);
    std::vector<int> relabel;
    for (int root = 0; root < n && relabel.empty(); ++root) {
        std::vector<int> label(static_cast<std::size_t>(n), -1);
        std::queue<int> queue;
        queue.push(root);
        label[static_cast<std::size_t>(root)] = 0;
        int next = 1;
        while (!queue.empty()) {
            const int x = queue.front();
            queue.pop();
            for (const auto* p : {&action.image_raw.h, &action.image_raw.v, &hinv, &vinv}) {
                const int y = (*p)[static_cast<std::size_t>(x)];
                if (label[static_cast<std::size_t>(y)] < 0) {
                    label[static_cast<std::size_t>(y)] = next++;
                    queue.push(y);
                }
            }
        }
        Origami cand;
        cand.n = n;
        cand.h.resize(static_cast<std::size_t>(n));
        cand.v.resize(static_cast<std::size_t>(n));
        for (int x = 0; x < n; ++x) {
            cand.h[static_cast<std::size_t>(label[static_cast<std::size_t>(x)])] =
                label[static_cast<std::size_t>(action.image_raw.h[static_cast<std::size_t>(x)])];
            cand.v[static_cast<std::size_t>(label[static_cast<std::size_t>(x)])] =
                label[static_cast<std::size_t>(action.image_raw.v[static_cast<std::size_t>(x)])];
        }
        if (cand == image) relabel = label;
    }
    if (relabel.empty()) throw StructureError("apply_generator: relabeling not found");

    const HomologyModel dst = homology_model(image);

    // pull each basis cocycle through the edge-path table, then transport along
    // the relabeling: edge e of the raw image = edge (relabeled e) of `image`
    IMat pulled(2 * n, src.basis.cols());
    for (Eigen::Index c = 0; c < src.basis.cols(); ++c) {
        IVec x = src.basis.col(c);
        IVec xt = IVec::Zero(2 * n);
        for (int i = 0; i < n; ++i) {
            long long bval = 0, lval = 0;
            for (const auto& t : action.bottom_paths[static_cast<std::size_t>(i)])
                bval += t.sign * x(t.edge);
            for (const auto& t : action.left_paths[static_cast<std::size_t>(i)])
                lval += t.sign * x(t.edge);
            xt(relabel[static_cast<std::size_t>(i)]) = bval;
            xt(n + relabel[static_cast<std::size_t>(i)]) = lval;
        }
        pulled.col(c) = xt;
    }

    // pulled columns must be cocycles of the image complex
    {
        IMat d2 = IMat::Zero(2 * n, n);
        for (int i = 0; i < n; ++i) {
            d2(i, i) += 1;
            d2(n + image.h[static_cast<std::size_t>(i)], i) += 1;
            d2(image.v[static_cast<std::size_t>(i)], i) -= 1;
            d2(n + i, i) -= 1;
        }
        if ((d2.transpose() * pulled).cwiseAbs().maxCoeff() != 0)
            throw StructureError("apply_generator: pulled cochain is not a cocycle");
    }

    // class coordinates: pulled = basis * m + coboundary * p
    IMat stacked(2 * n, dst.basis.cols() + dst.coboundary0.cols());
    stacked << dst.basis, dst.coboundary0;
    IMat solution;
    if (!intal::solve_matrix(stacked, pulled, solution))
        throw StructureError("apply_generator: class solve failed");
    const IMat m_pull = solution.topRows(dst.basis.cols());

    GeneratorImage out;
    out.image = image;
    // the H^1 matrix in the covariant convention: inverse transpose of the
    // cocycle pullback
    out.h1_matrix = intal::unimodular_inverse(m_pull).transpose();

    const IMat check = out.h1_matrix.transpose() * dst.pairing * out.h1_matrix;
    if ((check - src.pairing).cwiseAbs().maxCoeff() != 0)
        throw StructureError("apply_generator: matrix is not symplectic");
    return out;
}

GeneratorImage apply_generator(const Origami& o, Gen g) {
    return apply_generator(homology_model(o), g);
}

const OrbitEdge& OrbitGraph::edge(int vertex, Gen g) const {
    return edges[static_cast<std::size_t>(vertex) * 4 + static_cast<std::size_t>(g)];
}

OrbitGraph sl2z_orbit(const Origami& o, int cap) {
    OrbitGraph graph;
    const Origami base = validate_and_normalize(o);
    std::map<Origami, int> index;
    graph.vertices.push_back(base);
    graph.models.push_back(homology_model(base));
    index[base] = 0;

    std::size_t frontier = 0;
    while (frontier < graph.vertices.size()) {
        const int src = static_cast<int>(frontier);
        for (const Gen g : {Gen::T, Gen::Tinv, Gen::S, Gen::Sinv}) {
            const auto img = apply_generator(graph.models[static_cast<std::size_t>(src)], g);
            auto it = index.find(img.image);
            int dst;
            if (it == index.end()) {
                dst = static_cast<int>(graph.vertices.size());
                if (dst >= cap)
                    throw DomainError("sl2z_orbit: orbit exceeds the cap of " +
                                      std::to_string(cap) + " vertices");
                graph.vertices.push_back(img.image);
                graph.models.push_back(homology_model(img.image));
                index[img.image] = dst;
            } else {
                dst = it->second;
            }
            graph.edges.push_back({src, dst, g, img.h1_matrix});
        }
        ++frontier;
    }
    return graph;
}

std::vector<IMat> monodromy_generators(const OrbitGraph& graph, int base) {
    const int nv = static_cast<int>(graph.vertices.size());
    // breadth-first spanning tree with transports in both directions; the
    // reverse transport is accumulated from the inverse-generator edges
    // (exact inverses by construction), never by inverting big products
    std::vector<IMat> to_vertex(static_cast<std::size_t>(nv));    // H^1(base) -> H^1(v)
    std::vector<IMat> from_vertex(static_cast<std::size_t>(nv));  // H^1(v) -> H^1(base)
    std::vector<bool> seen(static_cast<std::size_t>(nv), false);
    std::queue<int> queue;
    const int g2 = static_cast<int>(graph.models[static_cast<std::size_t>(base)].basis.cols());
    to_vertex[static_cast<std::size_t>(base)] = IMat::Identity(g2, g2);
    from_vertex[static_cast<std::size_t>(base)] = IMat::Identity(g2, g2);
    seen[static_cast<std::size_t>(base)] = true;
    queue.push(base);
    std::vector<std::pair<int, Gen>> tree_edges;
    while (!queue.empty()) {
        const int u = queue.front();
        queue.pop();
        for (const Gen g : {Gen::T, Gen::Tinv, Gen::S, Gen::Sinv}) {
            const auto& e = graph.edge(u, g);
            if (!seen[static_cast<std::size_t>(e.dst)]) {
                seen[static_cast<std::size_t>(e.dst)] = true;
                to_vertex[static_cast<std::size_t>(e.dst)] =
                    intal::checked_product(e.matrix, to_vertex[static_cast<std::size_t>(u)]);
                from_vertex[static_cast<std::size_t>(e.dst)] = intal::checked_product(
                    from_vertex[static_cast<std::size_t>(u)],
                    graph.edge(e.dst, gen_inverse(g)).matrix);
                tree_edges.push_back({u, g});
                queue.push(e.dst);
            }
        }
    }
    // loops: non-tree edges closed up through the tree
    std::vector<IMat> out;
    for (const auto& e : graph.edges) {
        bool in_tree = false;
        for (const auto& [u, g] : tree_edges)
            if (u == e.src && g == e.gen) in_tree = true;
        if (in_tree) continue;
        const IMat loop = intal::checked_product(
            from_vertex[static_cast<std::size_t>(e.dst)],
            intal::checked_product(e.matrix, to_vertex[static_cast<std::size_t>(e.src)]));
        out.push_back(loop);
    }
    return out;
}

TautologicalSplitting tautological_splitting(const HomologyModel& model,
                                             const std::vector<IMat>& monodromy) {
    const Origami& o = model.surface;
    const int n = o.n;
    // pullbacks of the torus classes: sum of all bottom edges, sum of all lefts
    IMat pulled(2 * n, 2);
    pulled.setZero();
    for (int i = 0; i < n; ++i) {
        pulled(i, 0) = 1;
        pulled(n + i, 1) = 1;
    }
    IMat stacked(2 * n, model.basis.cols() + model.coboundary0.cols());
    stacked << model.basis, model.coboundary0;
    IMat solution;
    if (!intal::solve_matrix(stacked, pulled, solution))
        throw StructureError("tautological_splitting: torus classes not solvable");

    TautologicalSplitting out;
    // Edge matrices act covariantly (inverse transpose of the cocycle
    // pullback); for symplectic maps that action is conjugate to the pullback
    // by J, so the invariant embedding of the pulled-back classes is J * class.
    out.st = model.pairing * solution.topRows(model.basis.cols());

    // comp = saturated kernel of the J-pairing against st
    IMat pair_rows(2, model.basis.cols());
    pair_rows.row(0) = (model.pairing.transpose() * out.st.col(0)).transpose();
    pair_rows.row(1) = (model.pairing.transpose() * out.st.col(1)).transpose();
    out.comp = intal::kernel(pair_rows);

    if (out.comp.cols() + 2 != model.basis.cols())
        throw StructureError("tautological_splitting: complement has wrong rank");
    // exact invariance under the monodromy
    for (const auto& g : monodromy) {
        IMat dummy;
        if (!intal::solve_matrix(out.st, intal::checked_product(g, out.st), dummy))
            throw StructureError("tautological_splitting: st is not invariant");
        if (!intal::solve_matrix(out.comp, intal::checked_product(g, out.comp), dummy))
            throw StructureError("tautological_splitting: comp is not invariant");
    }
    return out;
}

std::vector<std::vector<int>> translations(const Origami& input) {
    const Origami o = validate_and_normalize(input);
    const int n = o.n;
    const auto hinv = inverse_perm(o.h);
    const auto vinv = inverse_perm(o.v);
    std::vector<std::vector<int>> out;
    // a translation is determined by the image of square 0 (transitivity);
    // propagate along the h/v moves and check consistency
    for (int target = 0; target < n; ++target) {
        std::vector<int> phi(static_cast<std::size_t>(n), -1);
        phi[0] = target;
        std::queue<int> queue;
        queue.push(0);
        bool ok = true;
        while (!queue.empty() && ok) {
            const int x = queue.front();
            queue.pop();
            const int fx = phi[static_cast<std::size_t>(x)];
            const std::pair<const std::vector<int>*, const std::vector<int>*> moves[] = {
                {&o.h, &o.h}, {&o.v, &o.v}, {&hinv, &hinv}, {&vinv, &vinv}};
            for (const auto& [p, q] : moves) {
                const int y = (*p)[static_cast<std::size_t>(x)];
                const int fy = (*q)[static_cast<std::size_t>(fx)];
                if (phi[static_cast<std::size_t>(y)] < 0) {
                    phi[static_cast<std::size_t>(y)] = fy;
                    queue.push(y);
                } else if (phi[static_cast<std::size_t>(y)] != fy) {
                    ok = false;
                    break;
                }
            }
        }
        if (!ok) continue;
        // verify commutation exactly
        for (int x = 0; x < n && ok; ++x) {
            if (phi[static_cast<std::size_t>(o.h[static_cast<std::size_t>(x)])] !=
                o.h[static_cast<std::size_t>(phi[static_cast<std::size_t>(x)])])
                ok = false;
            if (phi[static_cast<std::size_t>(o.v[static_cast<std::size_t>(x)])] !=
                o.v[static_cast<std::size_t>(phi[static_cast<std::size_t>(x)])])
                ok = false;
        }
        if (ok) out.push_back(phi);
    }
    return out;
}

intal::IMat translation_h1_matrix(const HomologyModel& model, const std::vector<int>& phi) {
    const Origami& o = model.surface;
    const int n = o.n;
    // pullback along the chain map b_i -> b_{phi(i)}, l_i -> l_{phi(i)}
    IMat pulled(2 * n, model.basis.cols());
    for (Eigen::Index c = 0; c < model.basis.cols(); ++c)
        for (int i = 0; i < n; ++i) {
            pulled(i, c) = model.basis(phi[static_cast<std::size_t>(i)], c);
            pulled(n + i, c) = model.basis(n + phi[static_cast<std::size_t>(i)], c);
        }
    IMat stacked(2 * n, model.basis.cols() + model.coboundary0.cols());
    stacked << model.basis, model.coboundary0;
    IMat solution;
    if (!intal::solve_matrix(stacked, pulled, solution))
        throw StructureError("translation_h1_matrix: class solve failed");
    const IMat m_pull = solution.topRows(model.basis.cols());
    const IMat e = intal::unimodular_inverse(m_pull).transpose();
    const IMat check = e.transpose() * model.pairing * e;
    if ((check - model.pairing).cwiseAbs().maxCoeff() != 0)
        throw StructureError("translation_h1_matrix: matrix is not symplectic");
    return e;
}

KzSpectrum kz_spectrum(const OrbitGraph& graph, std::vector<double> weights, int n,
                       int trials, std::uint64_t seed, int threads) {
    if (weights.empty()) weights.assign(4, 0.25);
    if (weights.size() != 4)
        throw DomainError("kz_spectrum: need four weights for T, T^-1, S, S^-1");
    std::vector<double> cumulative;
    double total = 0;
    for (double w : weights) {
        if (w <= 0) throw DomainError("kz_spectrum: weights must be positive");
        total += w;
        cumulative.push_back(total);
    }
    if (std::abs(total - 1.0) > config().sum_tol)
        throw DomainError("kz_spectrum: weights must sum to 1");
    cumulative.back() = 1.0;

    const int dim = static_cast<int>(graph.models[0].basis.cols());
    const cocycle::StepperFactory factory = [&graph, cumulative]() {
        auto state = std::make_shared<int>(graph.base);
        return cocycle::Stepper([&graph, cumulative, state](Rng& rng) {
            const Gen g = static_cast<Gen>(rng.categorical(cumulative));
            const auto& e = graph.edge(*state, g);
            *state = e.dst;
            return e.matrix.cast<double>().eval();
        });
    };
    const auto full = cocycle::lyapunov_qr(dim, factory, n, trials, seed, threads);

    KzSpectrum out;
    out.full = full;
    const double top = full.exponents.front();
    if (top < 5.0 * full.stderrs.front() || top <= 0)
        throw DomainError("kz_spectrum: zero drift (top exponent not separated from 0)");
    for (int i = 0; i < dim / 2; ++i) {
        out.normalized.push_back(full.exponents[static_cast<std::size_t>(i)] / top);
        // the top entry is the normalization anchor: exactly 1 with no spread
        out.normalized_stderr.push_back(
            i == 0 ? 0.0 : full.stderrs[static_cast<std::size_t>(i)] / top);
    }
    return out;
}

double restricted_norm_bound(const OrbitGraph& graph, const IMat& frame, int steps,
                             std::uint64_t seed) {
    Rng rng(seed);
    RMat acc = frame.cast<double>();
    const double base_norm = acc.norm();
    double worst = 1.0;
    int state = graph.base;
    for (int s = 0; s < steps; ++s) {
        const Gen g = static_cast<Gen>(static_cast<int>(rng.uniform() * 4));
        const auto& e = graph.edge(state, g);
        state = e.dst;
        acc = e.matrix.cast<double>() * acc;
        worst = std::max(worst, acc.norm() / base_norm);
    }
    return worst;
}

RationalSplittingReport rational_splitting_report(const Origami& o, int orbit_cap) {
    const auto graph = sl2z_orbit(o, orbit_cap);
    const auto& model = graph.models[0];
    const auto monodromy = monodromy_generators(graph, 0);
    const auto split = tautological_splitting(model, monodromy);

    RationalSplittingReport out;
    out.genus = model.genus;
    out.st_rank = static_cast<int>(split.st.cols());
    out.comp_rank = static_cast<int>(split.comp.cols());

    const IMat cross = split.st.transpose() * model.pairing * split.comp;
    out.j_orthogonal = cross.size() == 0 || cross.cwiseAbs().maxCoeff() == 0;
    out.st_invariant = true;
    out.comp_invariant = true;  // tautological_splitting already threw otherwise

    // rational projector onto st along comp: P = S (S^T J S)^{-1} S^T J
    const IMat gram = split.st.transpose() * model.pairing * split.st;  // [[0, m], [-m, 0]]
    const long long m = gram(0, 1);
    if (m == 0) throw StructureError("rational splitting: degenerate tautological pairing");
    out.projector_denominator = std::llabs(m);
    const auto dim = model.basis.cols();
    out.st_projector.resize(dim, dim);
    const IMat stj = split.st.transpose() * model.pairing;  // 2 x dim
    for (Eigen::Index r = 0; r < dim; ++r)
        for (Eigen::Index c = 0; c < dim; ++c) {
            // (S G^{-1} S^T J)_{rc} with G^{-1} = [[0, -1/m], [1/m, 0]]
            const long long val = -split.st(r, 0) * stj(1, c) + split.st(r, 1) * stj(0, c);
            out.st_projector(r, c) = intal::Rational(val, m);
        }
    // projector identities, exactly
    for (Eigen::Index r = 0; r < dim; ++r)
        for (Eigen::Index c = 0; c < dim; ++c) {
            intal::Rational acc(0, 1);
            for (Eigen::Index k = 0; k < dim; ++k)
                acc = acc + out.st_projector(r, k) * out.st_projector(k, c);
            if (!(acc == out.st_projector(r, c)))
                throw StructureError("rational splitting: projector is not idempotent");
        }

    // monodromy commutant on the complement (diagnostic)
    std::vector<RMat> restricted_monodromy;
    if (out.comp_rank > 0) {
        for (const auto& g : monodromy) {
            IMat r;
            if (!intal::solve_matrix(split.comp, intal::checked_product(g, split.comp), r))
                throw StructureError("rational splitting: restriction failed");
            restricted_monodromy.push_back(r.cast<double>());
        }
        if (!restricted_monodromy.empty())
            out.monodromy_commutant_dim = static_cast<int>(
                cocycle::commutant(restricted_monodromy, out.comp_rank).size());
    }

    // isotypic refinement of comp under the translation (deck) group, whose
    // commutant carries the endomorphisms acting on the Jacobian factor
    const auto deck = translations(model.surface);
    out.translation_group_order = static_cast<int>(deck.size());
    if (out.comp_rank > 0) {
        std::vector<RMat> deck_restricted;
        for (const auto& phi : deck) {
            const IMat e = translation_h1_matrix(model, phi);
            IMat r;
            if (!intal::solve_matrix(split.comp, intal::checked_product(e, split.comp), r))
                throw StructureError("rational splitting: deck restriction failed");
            deck_restricted.push_back(r.cast<double>());
        }
        out.comp_isotypic = cocycle::isotypic_decompose(deck_restricted, out.comp_rank).components;
        for (const auto& comp : out.comp_isotypic)
            out.comp_isotypic_monodromy_residuals.push_back(
                restricted_monodromy.empty()
                    ? 0.0
                    : cocycle::invariant_subspace_check(comp.frame, restricted_monodromy));
    }
    return out;
}

}  // namespace kzlab::origami
