// kzlab: verification lab for Hodge-bundle curvature identities, random walks
// on SL(2,R), matrix cocycles and square-tiled surfaces.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "kzlab/reports.hpp"

namespace {

using namespace kzlab;

constexpr int kExitOk = 0;
constexpr int kExitMath = 1;
constexpr int kExitUsage = 2;

struct GridSpec {
    int nx = 5;
    int ny = 5;
};

GridSpec parse_grid(const std::string& s) {
    GridSpec g;
    const auto x = s.find('x');
    if (x == std::string::npos) throw CLI::ValidationError("--grid", "expected AxB");
    g.nx = std::stoi(s.substr(0, x));
    g.ny = std::stoi(s.substr(x + 1));
    if (g.nx < 1 || g.ny < 1) throw CLI::ValidationError("--grid", "grid must be positive");
    return g;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DomainError("cannot open input file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

origami::Origami load_origami(const std::string& path) {
    const std::string text = slurp(path);
    for (char c : text) {
        if (std::isspace(static_cast<unsigned char>(c))) continue;
        if (c == '{') return origami::origami_from_json(Json::parse(text));
        break;
    }
    return origami::origami_from_text(text);
}

void emit(const std::string& content, const std::string& out_path) {
    if (out_path.empty())
        std::cout << content;
    else
        reports::write_file(out_path, content);
}

int cmd_verify(const std::string& family, const std::string& identity,
               const std::string& grid_spec, double h, double tol,
               const std::string& out_path, const std::string& format) {
    const auto fam = vhs::family_by_name(family);
    const GridSpec grid = parse_grid(grid_spec);
    const auto taus = vhs::tau_grid(-0.5, 0.5, 1.0, 2.0, grid.nx, grid.ny);
    const auto rows = reports::run_verify(fam, identity, taus, h);
    emit(format == "csv" ? reports::verify_to_csv(rows)
                         : reports::render(reports::verify_to_json(rows)),
         out_path);
    for (const auto& r : rows)
        if (!(r.residual <= tol)) {
            std::cerr << "verify: residual " << r.residual << " above tolerance " << tol
                      << " at tau = (" << r.tau.real() << ", " << r.tau.imag() << ")\n";
            return kExitMath;
        }
    return kExitOk;
}

int cmd_lyapunov(const std::string& path, int n, int trials, std::uint64_t seed, int threads,
                 std::vector<double> weights, const std::string& out_path,
                 const std::string& format) {
    const auto o = load_origami(path);
    const auto graph = origami::sl2z_orbit(o);
    const auto spec = origami::kz_spectrum(graph, std::move(weights), n, trials, seed, threads);
    emit(format == "csv" ? reports::spectrum_to_csv(spec)
                         : reports::render(reports::spectrum_to_json(spec)),
         out_path);
    return kExitOk;
}

int cmd_decompose(const std::string& path, const std::string& out_path) {
    const std::string text = slurp(path);
    Json report;
    bool is_cocycle = false;
    if (!text.empty() && text.find('{') != std::string::npos) {
        const Json j = Json::parse(text);
        if (j.contains("generators")) is_cocycle = true;
    }
    if (is_cocycle) {
        const auto c = cocycle::cocycle_from_json(Json::parse(text));
        const auto dec = cocycle::isotypic_decompose(c.generators(), c.dim());
        report = reports::isotypic_to_json(dec.components, c.generators());
    } else {
        const auto o = load_origami(path);
        report = reports::splitting_to_json(origami::rational_splitting_report(o));
    }
    emit(reports::render(report), out_path);
    return kExitOk;
}

int cmd_walk(const std::string& path, const std::string& test, int n, int trials,
             std::uint64_t seed, int threads, const std::string& space,
             const std::string& function, const std::string& out_path,
             const std::string& format) {
    const auto nu = randwalk::measure_from_json(Json::parse(slurp(path)));

    if (test == "drift") {
        const auto d = randwalk::drift(nu, n, trials, seed, threads);
        emit(reports::render(reports::drift_to_json(d)), out_path);
        return kExitOk;
    }
    if (test == "tracking") {
        const auto t = randwalk::tracking_error(nu, n, seed, trials);
        emit(format == "csv" ? reports::tracking_to_csv(t)
                             : reports::render(reports::tracking_to_json(t)),
             out_path);
        return kExitOk;
    }
    if (test == "birkhoff") {
        const randwalk::SpaceFn<randwalk::ModularSpace> f = [&](const Complex& z) {
            if (function == "constant") return 1.0;
            return std::min(z.imag(), 3.0);
        };
        const double avg = randwalk::birkhoff_average<randwalk::ModularSpace>(
            nu, f, randwalk::ModularSpace::origin(), n, seed);
        Json j;
        j["schema_version"] = reports::kSchemaVersion;
        j["average"] = avg;
        emit(reports::render(j), out_path);
        return kExitOk;
    }
    if (test == "subharmonicity") {
        if (space == "modular") {
            const randwalk::SpaceFn<randwalk::ModularSpace> f = [&](const Complex& z) {
                if (function == "constant") return 1.0;
                return randwalk::hyperbolic_distance(Complex(0, 1), z);
            };
            std::vector<Complex> samples;
            Rng rng(derive_seed(seed, 0xabc));
            for (int i = 0; i < 25; ++i)
                samples.push_back(randwalk::reduce_modular(
                    Complex(rng.uniform(-0.5, 0.5), std::exp(rng.uniform(0.0, 2.0)))));
            const auto r = randwalk::subharmonicity_report<randwalk::ModularSpace>(
                nu, f, samples, n, trials, seed, threads);
            emit(reports::render(reports::subharmonicity_to_json(r)), out_path);
            return kExitOk;
        }
        const randwalk::SpaceFn<randwalk::GroupSpace> f =
            [&](const randwalk::ScaledMatrix& x) {
                if (function == "constant") return 1.0;
                if (function == "capped-distance")
                    return std::min(randwalk::displacement(x), 10.0);
                if (function == "norm") return std::exp(x.log_opnorm());
                return randwalk::displacement(x);
            };
        auto samples = randwalk::sample_group_points(nu, 30, 7, derive_seed(seed, 0xdef));
        const auto r = randwalk::subharmonicity_report<randwalk::GroupSpace>(
            nu, f, samples, n, trials, seed, threads);
        emit(reports::render(reports::subharmonicity_to_json(r)), out_path);
        return kExitOk;
    }
    std::cerr << "unknown walk test: " << test << "\n";
    return kExitUsage;
}

int cmd_orbit(const std::string& path, int cap, const std::string& out_path,
              const std::string& matrices_path) {
    const auto graph = origami::sl2z_orbit(load_origami(path), cap);
    emit(reports::orbit_edges_to_csv(graph), out_path);
    if (!matrices_path.empty())
        reports::write_file(matrices_path,
                            reports::render(reports::orbit_matrices_to_json(graph)));
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"kzlab: curvature, random-walk and square-tiled-surface verification lab"};
    app.set_help_flag("--help", "print help");  // frees -h for the fd-step flag
    app.require_subcommand(1);

    std::string out_path;
    std::string format = "json";
    int threads = 1;
    app.add_option("--out", out_path, "output file (stdout when omitted)");
    app.add_option("--format", format, "json or csv")
        ->check(CLI::IsMember({"json", "csv"}));
    app.add_option("--threads", threads, "parallel trial pool (default 1)")
        ->check(CLI::PositiveNumber);

    // verify
    auto* verify = app.add_subcommand("verify", "run a vhs identity over a tau grid");
    verify->fallthrough();
    verify->set_help_flag("--help", "print help");
    std::string family, identity, grid = "5x5";
    double h = config().fd_step;
    double tol = 1e-4;
    if (const char* env = std::getenv("KZLAB_TOL")) {
        char* end = nullptr;
        const double v = std::strtod(env, &end);
        if (end != env && v > 0) tol = v;
    }
    verify->add_option("family", family, "elliptic | sym:<k>:<name> | sum:<a>,<b> | constant:<file>")
        ->required();
    verify->add_option("identity", identity,
                       "curvature | second-variation | norm-laplacian | gm-split | "
                       "kontsevich-forni | rightmost-negativity")
        ->required();
    verify->add_option("--grid", grid, "AxB grid over re [-0.5,0.5], im [1,2]");
    verify->add_option("--h", h, "finite-difference step");
    verify->add_option("--tol", tol, "pass/fail residual tolerance");

    // lyapunov
    auto* lyap = app.add_subcommand("lyapunov", "kz spectrum of an origami");
    lyap->fallthrough();
    std::string origami_path;
    int n = 100000, trials = 20;
    std::uint64_t seed = 0;
    std::vector<double> weights;
    lyap->add_option("origami", origami_path, "origami file (text cycles or json)")->required();
    lyap->add_option("--n", n, "walk length");
    lyap->add_option("--trials", trials, "number of trials");
    lyap->add_option("--seed", seed, "rng seed (required)")->required();
    lyap->add_option("--weights", weights, "probabilities of T, T^-1, S, S^-1");

    // decompose
    auto* dec = app.add_subcommand("decompose", "splitting / isotypic report");
    dec->fallthrough();
    std::string dec_path;
    dec->add_option("input", dec_path, "origami file or cocycle json")->required();

    // walk
    auto* walk = app.add_subcommand("walk", "random-walk statistics");
    walk->fallthrough();
    std::string measure_path, walk_test, walk_space = "group", walk_function = "distance";
    int wn = 10000, wtrials = 50;
    std::uint64_t wseed = 0;
    walk->add_option("measure", measure_path, "walk measure json")->required();
    walk->add_option("test", walk_test, "drift | tracking | subharmonicity | birkhoff")
        ->required()
        ->check(CLI::IsMember({"drift", "tracking", "subharmonicity", "birkhoff"}));
    walk->add_option("--n", wn, "walk length");
    walk->add_option("--trials", wtrials, "number of trials");
    walk->add_option("--seed", wseed, "rng seed (required)")->required();
    walk->add_option("--space", walk_space, "group | modular")
        ->check(CLI::IsMember({"group", "modular"}));
    walk->add_option("--function", walk_function,
                     "constant | distance | capped-distance | norm");

    // orbit
    auto* orbit = app.add_subcommand("orbit", "enumerate an sl2z orbit");
    orbit->fallthrough();
    std::string orbit_path, matrices_path;
    int cap = 100000;
    orbit->add_option("origami", orbit_path, "origami file")->required();
    orbit->add_option("--cap", cap, "vertex cap");
    orbit->add_option("--matrices-out", matrices_path, "matrix table json path");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (verify->parsed())
            return cmd_verify(family, identity, grid, h, tol, out_path, format);
        if (lyap->parsed())
            return cmd_lyapunov(origami_path, n, trials, seed, threads, weights, out_path,
                                format);
        if (dec->parsed()) return cmd_decompose(dec_path, out_path);
        if (walk->parsed())
            return cmd_walk(measure_path, walk_test, wn, wtrials, wseed, threads, walk_space,
                            walk_function, out_path, format);
        if (orbit->parsed()) return cmd_orbit(orbit_path, cap, out_path, matrices_path);
    } catch (const DomainError& e) {
        // unknown identity / family names are usage errors
        std::cerr << "error: " << e.what() << "\n";
        const std::string what = e.what();
        if (what.find("unknown identity") != std::string::npos ||
            what.find("unknown family") != std::string::npos ||
            what.find("family spec") != std::string::npos)
            return kExitUsage;
        return kExitMath;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitMath;
    }
    return kExitUsage;
}
