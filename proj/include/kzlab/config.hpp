#pragma once

#include <cstdlib>
#include <string>

namespace kzlab {

/// Central numeric knobs. Every tolerance used by a structural check lives
/// here so tests and the CLI agree on a single source of truth. KZLAB_TOL in
/// the environment overrides `structural_tol`.
struct Config {
    double structural_tol = 1e-10;   // subspace/projector equality, pairing checks
    double sum_tol = 1e-12;          // component-sum and probability-sum checks
    double positivity_tol = 1e-12;   // weak positivity of (1,1)-forms
    double zero_section_tol = 1e-8;  // norm threshold guarding log ||phi||^2
    double fd_step = 1e-4;           // default finite-difference step
    int qr_renorm_period = 20;       // steps between QR renormalizations
    int default_trials = 50;         // Monte-Carlo trials
    double classify_sigmas = 3.0;    // statistical classification threshold

    static Config defaults() {
        Config c;
        if (const char* env = std::getenv("KZLAB_TOL")) {
            char* end = nullptr;
            const double v = std::strtod(env, &end);
            if (end != env && v > 0) c.structural_tol = v;
        }
        return c;
    }
};

inline const Config& config() {
    static const Config c = Config::defaults();
    return c;
}

}  // namespace kzlab
