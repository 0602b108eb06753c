#pragma once

#include <string>
#include <vector>

#include "kzlab/cocycle.hpp"
#include "kzlab/json_util.hpp"
#include "kzlab/origami.hpp"
#include "kzlab/randwalk.hpp"
#include "kzlab/vhs.hpp"

namespace kzlab::reports {

inline constexpr int kSchemaVersion = 1;

/// Deterministic shortest-round-trip double formatting (%.17g).
std::string fmt_double(double v);

struct VerifyRow {
    std::string identity;
    Complex tau;
    double lhs = 0.0;
    double rhs = 0.0;
    double residual = 0.0;
    double h = 0.0;
};

/// Runs one vhs identity over a tau grid. Known identities: curvature,
/// second-variation, norm-laplacian, gm-split, kontsevich-forni,
/// rightmost-negativity. Throws DomainError for unknown names.
std::vector<VerifyRow> run_verify(const vhs::VhsFamily& fam, const std::string& identity,
                                  const std::vector<Complex>& grid, double h,
                                  std::uint64_t seed = 1);

Json verify_to_json(const std::vector<VerifyRow>& rows);
std::string verify_to_csv(const std::vector<VerifyRow>& rows);

Json spectrum_to_json(const origami::KzSpectrum& spec);
std::string spectrum_to_csv(const origami::KzSpectrum& spec);
std::string spectrum_to_csv(const cocycle::LyapunovSpectrum& spec);

Json drift_to_json(const randwalk::DriftResult& d);
Json tracking_to_json(const randwalk::TrackingResult& t);
std::string tracking_to_csv(const randwalk::TrackingResult& t);
Json subharmonicity_to_json(const randwalk::SubharmonicityReport& r);

Json splitting_to_json(const origami::RationalSplittingReport& r);
Json isotypic_to_json(const std::vector<cocycle::IsotypicComponent>& components,
                      const std::vector<RMat>& generators);

std::string orbit_edges_to_csv(const origami::OrbitGraph& graph);
Json orbit_matrices_to_json(const origami::OrbitGraph& graph);

void write_file(const std::string& path, const std::string& content);
std::string render(const Json& j);

}  // namespace kzlab::reports
