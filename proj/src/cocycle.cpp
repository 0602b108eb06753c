#include "kzlab/cocycle.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>

#include "kzlab/tensor_ops.hpp"

namespace kzlab::cocycle {

MatrixCocycle::MatrixCocycle(int dim, std::vector<RMat> generators, std::optional<RMat> pairing)
    : dim_(dim), gens_(std::move(generators)), pairing_(std::move(pairing)) {
    if (dim_ <= 0) throw StructureError("cocycle: dimension must be positive");
    for (const auto& g : gens_) {
        if (g.rows() != dim_ || g.cols() != dim_)
            throw StructureError("cocycle: generator shape mismatch");
        if (std::abs(g.determinant()) < 1e-12)
            throw StructureError("cocycle: generator not invertible");
    }
    if (pairing_) {
        if (pairing_->rows() != dim_ || pairing_->cols() != dim_)
            throw StructureError("cocycle: pairing shape mismatch");
        for (const auto& g : gens_) {
            const double res = (g.transpose() * (*pairing_) * g - *pairing_).norm();
            if (res > config().structural_tol * std::max(1.0, pairing_->norm()))
                throw StructureError("cocycle: generator does not preserve the pairing");
        }
    }
}

MatrixCocycle cocycle_from_json(const Json& j) {
    const int dim = j.at("dim").get<int>();
    std::vector<RMat> gens;
    for (const auto& g : j.at("generators")) gens.push_back(rmat_from_json(g));
    std::optional<RMat> pairing;
    if (j.contains("pairing") && !j.at("pairing").is_null())
        pairing = rmat_from_json(j.at("pairing"));
    return MatrixCocycle(dim, std::move(gens), std::move(pairing));
}

Json cocycle_to_json(const MatrixCocycle& c) {
    Json j;
    j["dim"] = c.dim();
    Json gens = Json::array();
    for (const auto& g : c.generators()) gens.push_back(rmat_to_json(g));
    j["generators"] = gens;
    if (c.pairing()) j["pairing"] = rmat_to_json(*c.pairing());
    return j;
}

namespace {

std::vector<double> qr_trial(int dim, const Stepper& step, int n, Rng& rng, int period) {
    RMat q = RMat::Identity(dim, dim);
    RMat acc = q;
    std::vector<double> logs(static_cast<std::size_t>(dim), 0.0);
    int pending = 0;
    bool counting = false;
    const auto flush = [&]() {
        if (pending == 0) return;
        Eigen::HouseholderQR<RMat> qr(acc);
        RMat qq = qr.householderQ();
        const RMat r = qr.matrixQR().triangularView<Eigen::Upper>();
        for (int i = 0; i < dim; ++i) {
            double d = r(i, i);
            if (d < 0) {
                d = -d;
                qq.col(i) *= -1.0;
            }
            if (counting) logs[static_cast<std::size_t>(i)] += std::log(std::max(d, 1e-300));
        }
        q = qq;
        acc = q;
        pending = 0;
    };
    // burn-in: let the QR frame align with the Oseledets flag before
    // accumulating, otherwise the lower exponents inherit an O(1/n) bias
    const int burn = std::min(n / 5, 2000);
    // flush early when the window grows: r_ii carry a relative error of order
    // eps * cond(window), so the window norm is kept below ~1e4
    const double norm_cap = 1e4 * std::sqrt(static_cast<double>(dim));
    for (int s = 0; s < n + burn; ++s) {
        if (s == burn) {
            flush();
            counting = true;
        }
        acc = step(rng) * acc;
        if (++pending >= period || acc.norm() > norm_cap) flush();
    }
    flush();
    for (auto& l : logs) l /= static_cast<double>(n);
    return logs;
}

}  // namespace

LyapunovSpectrum lyapunov_qr(int dim, const StepperFactory& factory, int n, int trials,
                             std::uint64_t seed, int threads) {
    if (n < 100) throw DomainError("lyapunov: n must be >= 100");
    if (trials < 1) throw DomainError("lyapunov: trials must be >= 1");
    const int period = config().qr_renorm_period;

    std::vector<std::vector<double>> per_trial(static_cast<std::size_t>(trials));
    const auto job = [&](int t) {
        Rng rng(derive_seed(seed, static_cast<std::uint64_t>(t)));
        const Stepper step = factory();
        per_trial[static_cast<std::size_t>(t)] = qr_trial(dim, step, n, rng, period);
    };
    if (threads <= 1) {
        for (int t = 0; t < trials; ++t) job(t);
    } else {
        std::atomic<int> next{0};
        std::vector<std::thread> pool;
        for (int w = 0; w < threads; ++w)
            pool.emplace_back([&]() {
                while (true) {
                    const int t = next.fetch_add(1);
                    if (t >= trials) break;
                    job(t);
                }
            });
        for (auto& th : pool) th.join();
    }

    LyapunovSpectrum out;
    for (int i = 0; i < dim; ++i) {
        std::vector<double> vals;
        for (int t = 0; t < trials; ++t)
            vals.push_back(per_trial[static_cast<std::size_t>(t)][static_cast<std::size_t>(i)]);
        const auto ms = mean_stderr(vals);
        out.exponents.push_back(ms.mean);
        out.stderrs.push_back(ms.stderr_);
    }
    // QR already orders by decay rate in practice; enforce sorted output
    std::vector<int> order(static_cast<std::size_t>(dim));
    for (int i = 0; i < dim; ++i) order[static_cast<std::size_t>(i)] = i;
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        return out.exponents[static_cast<std::size_t>(a)] >
               out.exponents[static_cast<std::size_t>(b)];
    });
    LyapunovSpectrum sorted;
    for (int i : order) {
        sorted.exponents.push_back(out.exponents[static_cast<std::size_t>(i)]);
        sorted.stderrs.push_back(out.stderrs[static_cast<std::size_t>(i)]);
    }
    // multiplicity groups: gap below 4 combined standard errors merges
    int group = 0;
    sorted.multiplicity_group.push_back(0);
    for (int i = 1; i < dim; ++i) {
        const double gap = sorted.exponents[static_cast<std::size_t>(i - 1)] -
                           sorted.exponents[static_cast<std::size_t>(i)];
        const double tol = 4.0 * (sorted.stderrs[static_cast<std::size_t>(i - 1)] +
                                  sorted.stderrs[static_cast<std::size_t>(i)]);
        if (gap > tol) ++group;
        sorted.multiplicity_group.push_back(group);
    }
    return sorted;
}

LyapunovSpectrum lyapunov_spectrum(const MatrixCocycle& c, std::vector<double> weights,
                                   int n, int trials, std::uint64_t seed, int threads) {
    const auto& gens = c.generators();
    if (gens.empty()) throw StructureError("lyapunov: no generators");
    if (weights.empty())
        weights.assign(gens.size(), 1.0 / static_cast<double>(gens.size()));
    if (weights.size() != gens.size())
        throw StructureError("lyapunov: weight/generator count mismatch");
    std::vector<double> cumulative;
    double total = 0;
    for (double w : weights) {
        if (w <= 0) throw StructureError("lyapunov: weights must be positive");
        total += w;
        cumulative.push_back(total);
    }
    if (std::abs(total - 1.0) > config().sum_tol)
        throw StructureError("lyapunov: weights must sum to 1");
    cumulative.back() = 1.0;

    const StepperFactory factory = [gens, cumulative]() {
        return Stepper([gens, cumulative](Rng& rng) {
            return gens[static_cast<std::size_t>(rng.categorical(cumulative))];
        });
    };
    return lyapunov_qr(c.dim(), factory, n, trials, seed, threads);
}

bool spectrum_symmetric(const LyapunovSpectrum& s, double factor) {
    const std::size_t d = s.exponents.size();
    for (std::size_t i = 0; i < d; ++i) {
        const std::size_t j = d - 1 - i;
        const double tol = factor * (s.stderrs[i] + s.stderrs[j]) + 1e-12;
        if (std::abs(s.exponents[i] + s.exponents[j]) > tol) return false;
    }
    return true;
}

// ---- tensor functors ----------------------------------------------------------

namespace {

MatrixCocycle map_generators(const MatrixCocycle& c,
                             const std::function<RMat(const RMat&)>& f,
                             const std::function<RMat(const RMat&)>& pairing_map) {
    std::vector<RMat> gens;
    for (const auto& g : c.generators()) gens.push_back(f(g));
    std::optional<RMat> pairing;
    if (c.pairing()) pairing = pairing_map(*c.pairing());
    const int dim = gens.empty() ? 0 : static_cast<int>(gens.front().rows());
    return MatrixCocycle(dim, std::move(gens), std::move(pairing));
}

}  // namespace

MatrixCocycle tensor_power(const MatrixCocycle& c, int k) {
    if (k < 1) throw DomainError("tensor_power: k >= 1");
    return map_generators(
        c, [k](const RMat& g) { return tensor::tensor_power(g, k); },
        [k](const RMat& q) { return tensor::tensor_power(q, k); });
}

MatrixCocycle wedge_power(const MatrixCocycle& c, int k) {
    if (k < 1 || k > c.dim()) throw DomainError("wedge_power: 1 <= k <= dim");
    return map_generators(
        c, [k](const RMat& g) { return tensor::wedge_power(g, k); },
        [k](const RMat& q) { return tensor::wedge_pairing(q, k); });
}

MatrixCocycle sym_power(const MatrixCocycle& c, int k) {
    if (k < 1) throw DomainError("sym_power: k >= 1");
    return map_generators(
        c, [k](const RMat& g) { return tensor::sym_power(g, k); },
        [k](const RMat& q) { return tensor::sym_pairing(q, k); });
}

MatrixCocycle end_cocycle(const MatrixCocycle& c) {
    std::vector<RMat> gens;
    for (const auto& g : c.generators()) gens.push_back(tensor::end_conjugation(g));
    std::optional<RMat> pairing;
    if (c.pairing()) {
        // tr(X^T J Y J^{-1}) in the vec basis
        const RMat jinv = c.pairing()->inverse();
        pairing = tensor::detail::kron(RMat(jinv.transpose()), *c.pairing());
    }
    return MatrixCocycle(c.dim() * c.dim(), std::move(gens), std::move(pairing));
}

// ---- invariant subspaces -------------------------------------------------------

double invariant_subspace_check(const RMat& v, const std::vector<RMat>& generators) {
    if (v.cols() == 0) return 0.0;
    Eigen::ColPivHouseholderQR<RMat> qr(v);
    if (qr.rank() < v.cols())
        throw StructureError("invariant_subspace_check: rank-deficient frame");
    const RMat q = orthonormal_span(v.cast<Complex>()).real();
    double worst = 0.0;
    for (const auto& g : generators) {
        const RMat gv = g * v;
        const RMat defect = gv - q * (q.transpose() * gv);
        worst = std::max(worst, defect.norm());
    }
    return worst;
}

std::vector<RMat> commutant(const std::vector<RMat>& generators, int dim) {
    const int d2 = dim * dim;
    RMat stacked(static_cast<Eigen::Index>(generators.size()) * d2, d2);
    const RMat id = RMat::Identity(dim, dim);
    for (std::size_t i = 0; i < generators.size(); ++i) {
        const RMat& g = generators[i];
        // vec(X g - g X) = (g^T kron I - I kron g) vec(X)
        stacked.block(static_cast<Eigen::Index>(i) * d2, 0, d2, d2) =
            tensor::detail::kron(RMat(g.transpose()), id) - tensor::detail::kron(id, RMat(g));
    }
    const RMat ker = generators.empty() ? RMat::Identity(d2, d2) : nullspace_real(stacked);
    std::vector<RMat> out;
    for (Eigen::Index c = 0; c < ker.cols(); ++c) {
        RMat x(dim, dim);
        for (int j = 0; j < dim; ++j)
            for (int i = 0; i < dim; ++i) x(i, j) = ker(j * dim + i, c);
        out.push_back(x);
    }
    return out;
}

// ---- isotypic decomposition ------------------------------------------------------

namespace {

/// Basis of the center of the span of `xs` (as an algebra of matrices).
std::vector<RMat> algebra_center(const std::vector<RMat>& xs, int dim) {
    if (xs.empty()) return {};
    const auto m = static_cast<Eigen::Index>(xs.size());
    // z = sum a_j xs[j] with [z, xs[i]] = 0 for all i
    RMat sys(static_cast<Eigen::Index>(dim) * dim * m, m);
    for (Eigen::Index j = 0; j < m; ++j)
        for (Eigen::Index i = 0; i < m; ++i) {
            const RMat c = xs[static_cast<std::size_t>(j)] * xs[static_cast<std::size_t>(i)] -
                           xs[static_cast<std::size_t>(i)] * xs[static_cast<std::size_t>(j)];
            for (int col = 0; col < dim; ++col)
                for (int row = 0; row < dim; ++row)
                    sys(i * dim * dim + col * dim + row, j) = c(row, col);
        }
    const RMat ker = nullspace_real(sys);
    std::vector<RMat> out;
    for (Eigen::Index c = 0; c < ker.cols(); ++c) {
        RMat z = RMat::Zero(dim, dim);
        for (Eigen::Index j = 0; j < m; ++j) z += ker(j, c) * xs[static_cast<std::size_t>(j)];
        out.push_back(z);
    }
    return out;
}

/// Invariant blocks from the eigenvalue clusters of a generic central element.
std::vector<RMat> central_blocks(const std::vector<RMat>& center, int dim, Rng& rng) {
    if (center.size() <= 1) return {RMat::Identity(dim, dim)};
    RMat z = RMat::Zero(dim, dim);
    for (const auto& c : center) z += rng.normal() * c;

    Eigen::EigenSolver<RMat> es(z);
    if (es.info() != Eigen::Success)
        throw SemisimplicityError("isotypic: eigensolver failed on a central element");
    std::vector<Complex> evs(static_cast<std::size_t>(dim));
    for (int i = 0; i < dim; ++i) evs[static_cast<std::size_t>(i)] = es.eigenvalues()(i);

    // cluster eigenvalues; conjugate pairs merge into one real block
    const double scale = std::max(1.0, z.norm());
    const double tol = 1e-7 * scale;
    std::vector<Complex> reps;
    for (const auto& ev : evs) {
        bool found = false;
        for (const auto& r : reps)
            if (std::abs(ev - r) < tol || std::abs(std::conj(ev) - r) < tol) found = true;
        if (!found) reps.push_back(ev.imag() < 0 ? std::conj(ev) : ev);
    }

    std::vector<RMat> blocks;
    for (const auto& r : reps) {
        RMat poly;
        if (std::abs(r.imag()) < tol) {
            poly = z - r.real() * RMat::Identity(dim, dim);
        } else {
            poly = z * z - 2 * r.real() * z +
                   std::norm(r) * RMat::Identity(dim, dim);
        }
        const RMat kern = nullspace_real(poly, 1e-8);
        if (kern.cols() == 0)
            throw SemisimplicityError("isotypic: central element has an empty eigenblock");
        blocks.push_back(kern);
    }
    Eigen::Index total = 0;
    for (const auto& b : blocks) total += b.cols();
    if (total != dim)
        throw SemisimplicityError(
            "isotypic: central eigenblocks do not decompose the space (non-semisimple "
            "action, dimension defect " +
            std::to_string(dim - total) + ")");
    return blocks;
}

/// signature defect (n+ - n-) of the trace form tr(XY) on the span of xs
int trace_form_defect(const std::vector<RMat>& xs) {
    const auto m = static_cast<Eigen::Index>(xs.size());
    RMat gram(m, m);
    for (Eigen::Index i = 0; i < m; ++i)
        for (Eigen::Index j = 0; j < m; ++j)
            gram(i, j) = (xs[static_cast<std::size_t>(i)] * xs[static_cast<std::size_t>(j)]).trace();
    Eigen::SelfAdjointEigenSolver<RMat> es(0.5 * (gram + gram.transpose()));
    int defect = 0;
    const double tol = 1e-8 * std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff());
    for (Eigen::Index i = 0; i < m; ++i) {
        if (es.eigenvalues()(i) > tol) ++defect;
        if (es.eigenvalues()(i) < -tol) --defect;
    }
    return defect;
}

}  // namespace

IsotypicDecomposition isotypic_decompose(const std::vector<RMat>& generators, int dim) {
    if (generators.empty()) throw StructureError("isotypic: no generators");
    const auto comm = commutant(generators, dim);
    const auto center = algebra_center(comm, dim);

    // deterministic internal randomness
    Rng rng(0x150f0f1cULL);

    std::vector<RMat> blocks;
    std::string last_error;
    for (int attempt = 0; attempt < 3; ++attempt) {
        try {
            blocks = central_blocks(center, dim, rng);
            break;
        } catch (const SemisimplicityError& e) {
            last_error = e.what();
            blocks.clear();
        }
    }
    if (blocks.empty()) throw SemisimplicityError(last_error);

    IsotypicDecomposition out;
    for (const auto& raw : blocks) {
        IsotypicComponent comp;
        comp.frame = orthonormal_span(raw.cast<Complex>()).real();
        const double inv = invariant_subspace_check(comp.frame, generators);
        if (inv > 1e-8)
            throw SemisimplicityError(
                "isotypic: central block is not generator-invariant (residual " +
                std::to_string(inv) + ")");

        // restrict the action and classify the division algebra
        const int bd = static_cast<int>(comp.frame.cols());
        std::vector<RMat> restricted;
        for (const auto& g : generators)
            restricted.push_back(comp.frame.transpose() * g * comp.frame);
        const auto local_comm = commutant(restricted, bd);
        const auto local_center = algebra_center(local_comm, bd);
        const auto c_dim = static_cast<int>(local_comm.size());

        int a = 0;
        if (local_center.size() == 2) {
            comp.algebra = 'C';
            a = 2;
        } else if (local_center.size() == 1) {
            const int defect = trace_form_defect(local_comm);
            comp.algebra = defect > 0 ? 'R' : 'H';
            a = defect > 0 ? 1 : 4;
        } else {
            throw SemisimplicityError("isotypic: block commutant has center of dimension " +
                                      std::to_string(local_center.size()));
        }
        const double m_exact = std::sqrt(static_cast<double>(c_dim) / a);
        comp.dim_w = static_cast<int>(std::lround(m_exact));
        if (comp.dim_w * comp.dim_w * a != c_dim)
            throw SemisimplicityError("isotypic: commutant dimension " + std::to_string(c_dim) +
                                      " is not m^2 dim(A)");
        if (bd % comp.dim_w != 0)
            throw SemisimplicityError("isotypic: block dimension incompatible with multiplicity");
        comp.simple_dim = bd / comp.dim_w;
        out.components.push_back(std::move(comp));
    }
    std::sort(out.components.begin(), out.components.end(),
              [](const IsotypicComponent& a, const IsotypicComponent& b) {
                  return a.frame.cols() > b.frame.cols();
              });
    return out;
}

// ---- gradings --------------------------------------------------------------------

namespace {

CMat assemble_grading(const std::vector<GradedPiece>& pieces, int space_dim) {
    Eigen::Index total = 0;
    for (const auto& p : pieces) total += p.frame.cols();
    if (total != space_dim)
        throw StructureError("grading: pieces do not span (dimension mismatch)");
    CMat basis(space_dim, space_dim);
    Eigen::Index col = 0;
    for (const auto& p : pieces) {
        if (p.frame.rows() != space_dim) throw StructureError("grading: frame shape mismatch");
        basis.block(0, col, space_dim, p.frame.cols()) = p.frame;
        col += p.frame.cols();
    }
    Eigen::JacobiSVD<CMat> svd(basis);
    if (svd.singularValues()(space_dim - 1) < 1e-10 * svd.singularValues()(0))
        throw StructureError("grading: pieces are not a direct sum");
    return basis;
}

}  // namespace

std::vector<GradedPiece> induce_end_grading(const std::vector<GradedPiece>& w_grading, int n) {
    assemble_grading(w_grading, n);
    std::map<int, std::vector<CVec>> by_degree;
    for (const auto& pa : w_grading)
        for (const auto& pb : w_grading) {
            const int deg = pa.degree - pb.degree;
            for (Eigen::Index i = 0; i < pa.frame.cols(); ++i)
                for (Eigen::Index j = 0; j < pb.frame.cols(); ++j) {
                    // X = u v^*: vec(X) = conj(v) kron u
                    CVec vec(n * n);
                    const CVec u = pa.frame.col(i);
                    const CVec v = pb.frame.col(j);
                    for (int col = 0; col < n; ++col)
                        vec.segment(static_cast<Eigen::Index>(col) * n, n) =
                            std::conj(v(col)) * u;
                    by_degree[deg].push_back(vec);
                }
        }
    std::vector<GradedPiece> out;
    for (auto& [deg, vecs] : by_degree) {
        CMat frame(n * n, static_cast<Eigen::Index>(vecs.size()));
        for (std::size_t i = 0; i < vecs.size(); ++i)
            frame.col(static_cast<Eigen::Index>(i)) = vecs[i];
        out.push_back({deg, orthonormal_span(frame)});
    }
    return out;
}

std::vector<GradedPiece> end_grading_lift(const std::vector<GradedPiece>& end_grading, int n) {
    const int n2 = n * n;
    const CMat basis = assemble_grading(end_grading, n2);

    // verify the multiplicative property of the grading
    std::map<int, CMat> spans;
    for (const auto& p : end_grading) spans[p.degree] = orthonormal_span(p.frame);
    for (const auto& pa : end_grading)
        for (const auto& pb : end_grading) {
            const int deg = pa.degree + pb.degree;
            for (Eigen::Index i = 0; i < pa.frame.cols(); ++i)
                for (Eigen::Index j = 0; j < pb.frame.cols(); ++j) {
                    CMat xa(n, n), xb(n, n);
                    for (int c = 0; c < n; ++c) {
                        xa.col(c) = pa.frame.col(i).segment(static_cast<Eigen::Index>(c) * n, n);
                        xb.col(c) = pb.frame.col(j).segment(static_cast<Eigen::Index>(c) * n, n);
                    }
                    const CMat prod = xa * xb;
                    CVec vec(n2);
                    for (int c = 0; c < n; ++c)
                        vec.segment(static_cast<Eigen::Index>(c) * n, n) = prod.col(c);
                    const double scale = xa.norm() * xb.norm() + 1.0;
                    if (vec.norm() < 1e-9 * scale) continue;
                    const auto it = spans.find(deg);
                    if (it == spans.end())
                        throw StructureError(
                            "end grading: product lands in an absent degree " +
                            std::to_string(deg));
                    if (containment_residual(it->second, vec) > 1e-7 * scale)
                        throw StructureError("end grading: not multiplicative at degree " +
                                             std::to_string(deg));
                }
        }

    // grading operator D(X) = deg(X) X, then solve ad(T) = D
    CMat diag = CMat::Zero(n2, n2);
    Eigen::Index col = 0;
    for (const auto& p : end_grading) {
        for (Eigen::Index i = 0; i < p.frame.cols(); ++i)
            diag(col + i, col + i) = Complex(p.degree, 0);
        col += p.frame.cols();
    }
    const CMat d_op = basis * diag * basis.partialPivLu().inverse();

    // equations: T X_e - X_e T = D(X_e) for the standard matrix units X_e
    CMat sys(static_cast<Eigen::Index>(n2) * n2, n2);
    CVec rhs(static_cast<Eigen::Index>(n2) * n2);
    for (int e = 0; e < n2; ++e) {
        CMat xe = CMat::Zero(n, n);
        xe(e % n, e / n) = 1;
        // vec(T xe - xe T) = (xe^T kron I - I kron xe) vec(T)
        const CMat coeff = tensor::detail::kron(CMat(xe.transpose()), CMat(CMat::Identity(n, n))) -
                           tensor::detail::kron(CMat(CMat::Identity(n, n)), xe);
        sys.block(static_cast<Eigen::Index>(e) * n2, 0, n2, n2) = coeff;
        rhs.segment(static_cast<Eigen::Index>(e) * n2, n2) = d_op.col(e);
    }
    const CVec t_vec = sys.colPivHouseholderQr().solve(rhs);
    const double solve_residual = (sys * t_vec - rhs).norm();
    if (solve_residual > 1e-6 * std::max(1.0, rhs.norm()))
        throw StructureError(
            "end grading: not induced by any grading of W (ad-solve residual " +
            std::to_string(solve_residual) + ")");

    CMat t(n, n);
    for (int c = 0; c < n; ++c) t.col(c) = t_vec.segment(static_cast<Eigen::Index>(c) * n, n);

    Eigen::ComplexEigenSolver<CMat> es(t);
    // T is determined up to a complex scalar; remove the common offset
    Complex offset{0, 0};
    for (int i = 0; i < n; ++i) offset += es.eigenvalues()(i);
    offset /= static_cast<double>(n);
    std::vector<std::pair<double, CVec>> eigs;
    for (int i = 0; i < n; ++i) {
        const Complex ev = es.eigenvalues()(i) - offset;
        if (std::abs(ev.imag()) > 1e-6)
            throw StructureError("end grading: grading operator has non-real spectrum");
        eigs.push_back({ev.real(), es.eigenvectors().col(i)});
    }
    std::sort(eigs.begin(), eigs.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });

    // cluster eigenvalues into integer degrees, lowest normalized to 0
    const double lowest = eigs.front().first;
    std::vector<GradedPiece> out;
    for (const auto& [ev, vec] : eigs) {
        const int deg = static_cast<int>(std::lround(ev - lowest));
        if (std::abs(ev - lowest - deg) > 1e-6)
            throw StructureError("end grading: eigenvalue spacing is not integral");
        if (out.empty() || out.back().degree != deg) {
            GradedPiece p;
            p.degree = deg;
            p.frame = CMat(n, 0);
            out.push_back(std::move(p));
        }
        CMat& f = out.back().frame;
        f.conservativeResize(n, f.cols() + 1);
        f.col(f.cols() - 1) = vec;
    }
    // certificate: the induced grading must reproduce the input dimensions
    const auto induced = induce_end_grading(out, n);
    std::map<int, Eigen::Index> dims_in, dims_out;
    for (const auto& p : end_grading) dims_in[p.degree] += p.frame.cols();
    for (const auto& p : induced) dims_out[p.degree] += p.frame.cols();
    // compare up to the common shift (input degrees may be shifted arbitrarily)
    if (dims_in.size() != dims_out.size())
        throw StructureError("end grading: induced degree multiset mismatch");
    auto it_in = dims_in.begin();
    auto it_out = dims_out.begin();
    const int shift = it_in->first - it_out->first;
    for (; it_in != dims_in.end(); ++it_in, ++it_out)
        if (it_in->first - shift != it_out->first || it_in->second != it_out->second)
            throw StructureError(
                "end grading: dimension certificate failed (simultaneous eigenspace "
                "dimensions do not match the input grading)");
    return out;
}

// ---- rigidity ----------------------------------------------------------------------

int degree_bound(double top_end_exponent, double lambda2) {
    if (lambda2 >= 1.0)
        throw DomainError("degree_bound: lambda2 must be < 1 (no spectral gap)");
    return static_cast<int>(std::floor(top_end_exponent / (1.0 - lambda2)));
}

long long degree_bound_rational(long long ln, long long ld, long long mn, long long md) {
    if (ld <= 0 || md <= 0) throw DomainError("degree_bound_rational: denominators must be > 0");
    if (mn >= md) throw DomainError("degree_bound_rational: lambda2 must be < 1");
    // Lambda / (1 - lambda2) = (ln md) / (ld (md - mn)); floor for nonneg values
    const long long num = ln * md;
    const long long den = ld * (md - mn);
    long long q = num / den;
    if ((num % den != 0) && ((num < 0) != (den < 0))) --q;
    return q;
}

PolyReconstruction bivariate_poly_reconstruct(const std::vector<double>& xs,
                                              const std::vector<double>& ys,
                                              const RMat& values, int degree_cap,
                                              double tol) {
    const int nx = static_cast<int>(xs.size());
    const int ny = static_cast<int>(ys.size());
    const int m = degree_cap + 1;
    if (nx < m || ny < m)
        throw PreconditionError("poly_reconstruct: need at least degree+1 values per axis");
    if (values.rows() != nx || values.cols() != ny)
        throw PreconditionError("poly_reconstruct: value grid shape mismatch");
    for (int i = 0; i < nx; ++i)
        for (int j = 0; j < i; ++j)
            if (xs[static_cast<std::size_t>(i)] == xs[static_cast<std::size_t>(j)])
                throw PreconditionError("poly_reconstruct: duplicate x node");
    for (int i = 0; i < ny; ++i)
        for (int j = 0; j < i; ++j)
            if (ys[static_cast<std::size_t>(i)] == ys[static_cast<std::size_t>(j)])
                throw PreconditionError("poly_reconstruct: duplicate y node");

    const auto vandermonde = [m](const std::vector<double>& nodes, int count) {
        RMat v(count, m);
        for (int i = 0; i < count; ++i) {
            double p = 1.0;
            for (int j = 0; j < m; ++j) {
                v(i, j) = p;
                p *= nodes[static_cast<std::size_t>(i)];
            }
        }
        return v;
    };

    // step 1: x-coefficient vectors on the first m rows of y
    const RMat vx = vandermonde(xs, m);
    const auto lux = RMat(vx.topRows(m)).partialPivLu();
    RMat cx(m, m);  // cx(alpha, j) = alpha-th x-coefficient at y_j
    for (int j = 0; j < m; ++j)
        cx.col(j) = lux.solve(values.block(0, j, m, 1));

    // step 2: fit each coefficient as a polynomial in y
    const RMat vy = vandermonde(ys, m);
    const auto luy = RMat(vy.topRows(m)).partialPivLu();
    PolyReconstruction out;
    out.coefficients.resize(m, m);
    for (int alpha = 0; alpha < m; ++alpha)
        out.coefficients.row(alpha) = luy.solve(cx.row(alpha).transpose()).transpose();

    // residual over the whole grid, held-out points included
    double worst = 0.0;
    for (int i = 0; i < nx; ++i)
        for (int j = 0; j < ny; ++j)
            worst = std::max(worst, std::abs(evaluate_bivariate(
                                        out.coefficients, xs[static_cast<std::size_t>(i)],
                                        ys[static_cast<std::size_t>(j)]) -
                                    values(i, j)));
    out.residual = worst;
    if (worst > tol)
        throw PreconditionError("poly_reconstruct: samples are not polynomial of degree <= " +
                                std::to_string(degree_cap) + " (residual " +
                                std::to_string(worst) + ")");
    return out;
}

double evaluate_bivariate(const RMat& coefficients, double x, double y) {
    double acc = 0.0;
    double xp = 1.0;
    for (Eigen::Index i = 0; i < coefficients.rows(); ++i) {
        double yp = 1.0;
        for (Eigen::Index j = 0; j < coefficients.cols(); ++j) {
            acc += coefficients(i, j) * xp * yp;
            yp *= y;
        }
        xp *= x;
    }
    return acc;
}

bool homogeneous_degree_check(const std::vector<std::pair<WeightedMonomial, double>>& poly) {
    for (const auto& [mono, coeff] : poly) {
        if (coeff == 0.0) continue;
        if (mono.x + mono.y - 2 * mono.inv_area != 0) return false;
    }
    return true;
}

}  // namespace kzlab::cocycle
