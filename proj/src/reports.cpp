#include "kzlab/reports.hpp"

#include <cstdio>
#include <fstream>

namespace kzlab::reports {

std::string fmt_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

namespace {

vhs::PolySection random_section(int p, Eigen::Index piece_dim, Rng& rng) {
    vhs::PolySection phi;
    phi.p = p;
    for (int m = 0; m < 3; ++m) phi.coeffs.push_back(random_complex_vector(piece_dim, rng));
    return phi;
}

RMat default_isotropic_classes(const vhs::VhsFamily& fam, int k) {
    if (fam.weight() != 1)
        throw DomainError("kontsevich-forni: identity requires a weight-1 family");
    if (2 * k > fam.dim())
        throw DomainError("kontsevich-forni: too many classes for this family");
    // e_2, e_4, ...: one flat class per symplectic block; pairwise isotropic
    // for block-diagonal pairings
    RMat c = RMat::Zero(fam.dim(), k);
    for (int i = 0; i < k; ++i) c(2 * i + 1, i) = 1.0;
    return c;
}

}  // namespace

std::vector<VerifyRow> run_verify(const vhs::VhsFamily& fam, const std::string& identity,
                                  const std::vector<Complex>& grid, double h,
                                  std::uint64_t seed) {
    std::vector<VerifyRow> rows;
    Rng rng(seed);
    for (const Complex tau : grid) {
        VerifyRow row;
        row.identity = identity;
        row.tau = tau;
        row.h = h;
        if (identity == "curvature") {
            double lhs = 0, rhs = 0, res = 0;
            for (int p = 0; p <= fam.weight(); ++p) {
                if (fam.filtration_dim(p) == fam.filtration_dim(p + 1)) continue;
                const CMat fd = vhs::curvature_fd(fam, p, tau, h).coeff;
                const CMat formula = vhs::curvature_formula(fam, p, tau).coeff;
                lhs = std::max(lhs, fd.norm());
                rhs = std::max(rhs, formula.norm());
                res = std::max(res, (fd - formula).norm());
            }
            row.lhs = lhs;
            row.rhs = rhs;
            row.residual = res;
        } else if (identity == "second-variation") {
            const vhs::Fiber fib(fam, tau);
            int p = fam.weight();
            while (!fib.has_piece(p)) --p;
            const auto phi = random_section(p, fib.piece(p).hol_frame.cols(), rng);
            const auto r = vhs::second_variation_log(fam, phi, tau, h);
            row.lhs = r.lhs.scalar_value().real();
            row.rhs = r.rhs.scalar_value().real();
            row.residual = r.residual;
        } else if (identity == "norm-laplacian") {
            const vhs::Fiber fib(fam, tau);
            int p = fam.weight();
            while (!fib.has_piece(p)) --p;
            const auto phi = random_section(p, fib.piece(p).hol_frame.cols(), rng);
            const auto r = vhs::norm_laplacian(fam, phi, tau, h);
            row.lhs = r.lhs.scalar_value().real();
            row.rhs = r.rhs.scalar_value().real();
            row.residual = r.residual;
        } else if (identity == "gm-split") {
            row.residual = vhs::gm_split_residual(fam, tau, h);
            row.lhs = row.residual;
            row.rhs = 0.0;
        } else if (identity == "kontsevich-forni") {
            const RMat classes = default_isotropic_classes(fam, 1);
            const auto r = vhs::kontsevich_forni_sides(fam, classes, tau, h);
            row.lhs = r.lhs.scalar_value().real();
            row.rhs = r.rhs.scalar_value().real();
            row.residual = r.residual;
        } else if (identity == "rightmost-negativity") {
            const vhs::Fiber fib(fam, tau);
            const auto& piece = fib.piece(0);
            const CVec e = piece.hol_frame *
                           random_complex_vector(piece.hol_frame.cols(), rng);
            const auto pr = vhs::curvature_pairing(fam, 0, e, e, tau);
            row.lhs = pr.value.real();
            row.rhs = 0.0;
            row.residual = std::max(0.0, pr.value.real());  // positive part violates
        } else {
            throw DomainError("unknown identity: " + identity);
        }
        rows.push_back(row);
    }
    return rows;
}

Json verify_to_json(const std::vector<VerifyRow>& rows) {
    Json arr = Json::array();
    for (const auto& r : rows) {
        Json j;
        j["identity"] = r.identity;
        j["tau"] = Json::array({r.tau.real(), r.tau.imag()});
        j["lhs"] = r.lhs;
        j["rhs"] = r.rhs;
        j["residual"] = r.residual;
        j["h"] = r.h;
        arr.push_back(j);
    }
    Json out;
    out["schema_version"] = kSchemaVersion;
    out["rows"] = arr;
    return out;
}

std::string verify_to_csv(const std::vector<VerifyRow>& rows) {
    std::string out = "identity,tau_re,tau_im,lhs,rhs,residual,h\n";
    for (const auto& r : rows)
        out += r.identity + "," + fmt_double(r.tau.real()) + "," + fmt_double(r.tau.imag()) +
               "," + fmt_double(r.lhs) + "," + fmt_double(r.rhs) + "," +
               fmt_double(r.residual) + "," + fmt_double(r.h) + "\n";
    return out;
}

Json spectrum_to_json(const origami::KzSpectrum& spec) {
    Json out;
    out["schema_version"] = kSchemaVersion;
    out["normalized"] = spec.normalized;
    out["normalized_stderr"] = spec.normalized_stderr;
    out["full_exponents"] = spec.full.exponents;
    out["full_stderrs"] = spec.full.stderrs;
    out["multiplicity_group"] = spec.full.multiplicity_group;
    return out;
}

std::string spectrum_to_csv(const origami::KzSpectrum& spec) {
    std::string out = "index,exponent,stderr,multiplicity_group\n";
    for (std::size_t i = 0; i < spec.normalized.size(); ++i)
        out += std::to_string(i) + "," + fmt_double(spec.normalized[i]) + "," +
               fmt_double(spec.normalized_stderr[i]) + "," +
               std::to_string(spec.full.multiplicity_group[i]) + "\n";
    return out;
}

std::string spectrum_to_csv(const cocycle::LyapunovSpectrum& spec) {
    std::string out = "index,exponent,stderr,multiplicity_group\n";
    for (std::size_t i = 0; i < spec.exponents.size(); ++i)
        out += std::to_string(i) + "," + fmt_double(spec.exponents[i]) + "," +
               fmt_double(spec.stderrs[i]) + "," +
               std::to_string(spec.multiplicity_group[i]) + "\n";
    return out;
}

Json drift_to_json(const randwalk::DriftResult& d) {
    Json out;
    out["schema_version"] = kSchemaVersion;
    out["delta"] = d.delta;
    out["stderr"] = d.stderr_;
    out["ci_halfwidth"] = d.ci_halfwidth;
    out["trials"] = d.per_trial.size();
    return out;
}

Json tracking_to_json(const randwalk::TrackingResult& t) {
    Json out;
    out["schema_version"] = kSchemaVersion;
    out["delta_hyp"] = t.delta_hyp;
    out["terminal"] = t.terminal;
    out["steps"] = t.error.size();
    return out;
}

std::string tracking_to_csv(const randwalk::TrackingResult& t) {
    std::string out = "k,e_k\n";
    for (std::size_t i = 0; i < t.error.size(); ++i)
        out += std::to_string(i + 1) + "," + fmt_double(t.error[i]) + "\n";
    return out;
}

Json subharmonicity_to_json(const randwalk::SubharmonicityReport& r) {
    Json out;
    out["schema_version"] = kSchemaVersion;
    out["classification"] = r.classification;
    out["constancy_forced"] = r.constancy_forced;
    out["min_laplacian"] = r.min_laplacian;
    out["max_laplacian"] = r.max_laplacian;
    out["a_n"] = r.a_n;
    out["a_n_stderr"] = r.a_n_stderr;
    out["reference_rate"] = r.reference_rate;
    out["verdict_basis"] = "empirical";
    return out;
}

Json splitting_to_json(const origami::RationalSplittingReport& r) {
    Json out;
    out["schema_version"] = kSchemaVersion;
    out["genus"] = r.genus;
    out["st_rank"] = r.st_rank;
    out["comp_rank"] = r.comp_rank;
    out["j_orthogonal"] = r.j_orthogonal;
    out["st_invariant"] = r.st_invariant;
    out["comp_invariant"] = r.comp_invariant;
    out["projector_denominator"] = r.projector_denominator;
    Json proj = Json::array();
    for (Eigen::Index i = 0; i < r.st_projector.rows(); ++i) {
        Json row = Json::array();
        for (Eigen::Index j = 0; j < r.st_projector.cols(); ++j)
            row.push_back(r.st_projector(i, j).str());
        proj.push_back(row);
    }
    out["st_projector"] = proj;
    out["translation_group_order"] = r.translation_group_order;
    out["monodromy_commutant_dim"] = r.monodromy_commutant_dim;
    Json comps = Json::array();
    for (std::size_t i = 0; i < r.comp_isotypic.size(); ++i) {
        const auto& c = r.comp_isotypic[i];
        Json jc;
        jc["dim"] = c.frame.cols();
        jc["dim_w"] = c.dim_w;
        jc["simple_dim"] = c.simple_dim;
        jc["algebra"] = std::string(1, c.algebra);
        if (i < r.comp_isotypic_monodromy_residuals.size())
            jc["monodromy_residual"] = r.comp_isotypic_monodromy_residuals[i];
        comps.push_back(jc);
    }
    out["comp_isotypic"] = comps;
    return out;
}

Json isotypic_to_json(const std::vector<cocycle::IsotypicComponent>& components,
                      const std::vector<RMat>& generators) {
    Json out;
    out["schema_version"] = kSchemaVersion;
    Json comps = Json::array();
    for (const auto& c : components) {
        Json jc;
        jc["dim"] = c.frame.cols();
        jc["dim_w"] = c.dim_w;
        jc["simple_dim"] = c.simple_dim;
        jc["algebra"] = std::string(1, c.algebra);
        jc["invariance_residual"] = cocycle::invariant_subspace_check(c.frame, generators);
        comps.push_back(jc);
    }
    out["components"] = comps;
    return out;
}

std::string orbit_edges_to_csv(const origami::OrbitGraph& graph) {
    std::string out = "src,dst,generator,matrix_id\n";
    for (std::size_t i = 0; i < graph.edges.size(); ++i) {
        const auto& e = graph.edges[i];
        out += std::to_string(e.src) + "," + std::to_string(e.dst) + "," +
               origami::gen_name(e.gen) + "," + std::to_string(i) + "\n";
    }
    return out;
}

Json orbit_matrices_to_json(const origami::OrbitGraph& graph) {
    Json out;
    out["schema_version"] = kSchemaVersion;
    Json verts = Json::array();
    for (const auto& v : graph.vertices) verts.push_back(origami::origami_to_json(v));
    out["vertices"] = verts;
    Json mats = Json::array();
    for (const auto& e : graph.edges) {
        Json rows = Json::array();
        for (Eigen::Index i = 0; i < e.matrix.rows(); ++i) {
            Json row = Json::array();
            for (Eigen::Index j = 0; j < e.matrix.cols(); ++j) row.push_back(e.matrix(i, j));
            rows.push_back(row);
        }
        mats.push_back(rows);
    }
    out["matrices"] = mats;
    return out;
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DomainError("cannot open output file: " + path);
    out << content;
}

std::string render(const Json& j) { return j.dump(2) + "\n"; }

}  // namespace kzlab::reports
