#include "doctest.h"

#include <array>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#ifndef KZLAB_BIN
#error "KZLAB_BIN must point at the CLI binary"
#endif

namespace {

struct RunResult {
    int exit_code = -1;
    std::string output;
};

RunResult run(const std::string& args) {
    const std::string cmd = std::string(KZLAB_BIN) + " " + args + " 2>/dev/null";
    std::array<char, 4096> buf{};
    RunResult r;
    FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    while (std::fgets(buf.data(), static_cast<int>(buf.size()), pipe)) r.output += buf.data();
    const int status = pclose(pipe);
    r.exit_code = WEXITSTATUS(status);
    return r;
}

std::string tmpfile_with(const std::string& name, const std::string& content) {
    const std::string path = std::string("/tmp/kzlab_cli_") + name;
    std::ofstream out(path);
    out << content;
    return path;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("verify exit codes") {
    CHECK(run("verify elliptic kontsevich-forni --grid 3x3 --h 1e-4").exit_code == 0);
    CHECK(run("verify elliptic gm-split --grid 2x2 --tol 1e-5").exit_code == 0);
    CHECK(run("verify elliptic no-such-identity").exit_code == 2);
    CHECK(run("verify no-such-family curvature").exit_code == 2);
    // usage error: unknown flag
    CHECK(run("verify elliptic curvature --bogus 1").exit_code == 2);
    // missing subcommand
    CHECK(run("").exit_code == 2);
}

TEST_CASE("verify constant family: gm-split residuals vanish") {
    // the elliptic fiber at tau = 2i, frozen as a constant family
    const std::string hodge_json = tmpfile_with("fiber.json", R"({
        "weight": 1, "dim": 2,
        "pieces": [
            {"p": 1, "q": 0, "frame": [[[1,0]],[[0,2]]]},
            {"p": 0, "q": 1, "frame": [[[1,0]],[[0,-2]]]}
        ],
        "pairing": [[[0,0],[1,0]],[[-1,0],[0,0]]]})");
    const auto r = run("verify constant:" + hodge_json +
                       " gm-split --grid 2x2 --tol 1e-8 --format csv");
    CHECK(r.exit_code == 0);
    CHECK(r.output.find("identity,tau_re") == 0);

    const auto rcsv = run("verify elliptic curvature --grid 2x2 --h 1e-3 --format csv");
    CHECK(rcsv.exit_code == 0);
    CHECK(rcsv.output.find("identity,tau_re") == 0);
}

TEST_CASE("verify covers every identity") {
    for (const std::string id : {"curvature", "second-variation", "norm-laplacian", "gm-split",
                                 "kontsevich-forni", "rightmost-negativity"}) {
        const auto r = run("verify elliptic " + id + " --grid 2x2 --h 1e-4 --tol 1e-3");
        CHECK(r.exit_code == 0);
    }
    // kontsevich-forni needs weight one
    CHECK(run("verify sym:2:elliptic kontsevich-forni --grid 2x2").exit_code == 1);
}

TEST_CASE("lyapunov exit codes and torus output") {
    const std::string torus = tmpfile_with("torus.txt", "h = (1)\nv = (1)\n");
    const auto r = run("lyapunov " + torus + " --n 2000 --trials 3 --seed 7 --format csv");
    CHECK(r.exit_code == 0);
    CHECK(r.output.find("0,1,0,0") != std::string::npos);  // single row (1.0, 0)

    const std::string bad = tmpfile_with("bad.txt", "h = (1 2\nv = (1)\n");
    CHECK(run("lyapunov " + bad + " --seed 1 --n 200 --trials 2").exit_code == 1);
    const std::string disc = tmpfile_with("disc.txt", "h = (1)(2)\nv = (1)(2)\n");
    CHECK(run("lyapunov " + disc + " --seed 1 --n 200 --trials 2").exit_code == 1);
    // --seed is mandatory for stochastic commands
    CHECK(run("lyapunov " + torus + " --n 200").exit_code == 2);
}

TEST_CASE("decompose quaternion origami reports the quaternion algebra") {
    const std::string q = tmpfile_with(
        "quat.json", R"({"n":8,"h":[2,3,1,0,7,6,4,5],"v":[4,5,6,7,1,0,3,2]})");
    const auto r = run("decompose " + q);
    CHECK(r.exit_code == 0);
    CHECK(r.output.find("\"algebra\": \"H\"") != std::string::npos);
    CHECK(r.output.find("\"translation_group_order\": 8") != std::string::npos);
}

TEST_CASE("decompose identity cocycle and non-semisimple rejection") {
    const std::string id3 = tmpfile_with(
        "id3.json", R"({"dim":3,"generators":[[[1,0,0],[0,1,0],[0,0,1]]]})");
    const auto r = run("decompose " + id3);
    CHECK(r.exit_code == 0);
    CHECK(r.output.find("\"algebra\": \"R\"") != std::string::npos);
    CHECK(r.output.find("\"dim_w\": 3") != std::string::npos);

    const std::string unipotent = tmpfile_with(
        "uni.json", R"({"dim":2,"generators":[[[1,1],[0,1]]]})");
    CHECK(run("decompose " + unipotent).exit_code == 1);
}

TEST_CASE("walk commands") {
    const std::string measure = tmpfile_with("measure.json", R"({"support": [
        {"matrix": [[2.718281828459045, 0], [0, 0.36787944117144233]], "prob": 0.5},
        {"matrix": [[1.5430806348152437, 1.1752011936438014],
                    [1.1752011936438014, 1.5430806348152437]], "prob": 0.5}]})");
    const auto drift = run("walk " + measure + " drift --n 2000 --trials 10 --seed 3");
    CHECK(drift.exit_code == 0);
    CHECK(drift.output.find("\"delta\"") != std::string::npos);

    const std::string so2 = tmpfile_with("so2.json", R"({"support": [
        {"matrix": [[0.7648421872844885, -0.6442176872376911],
                    [0.6442176872376911, 0.7648421872844885]], "prob": 1.0}]})");
    CHECK(run("walk " + so2 + " drift --n 200 --trials 3 --seed 1").exit_code == 1);

    const auto sub = run("walk " + measure +
                         " subharmonicity --n 2000 --trials 20 --seed 5 --function constant");
    CHECK(sub.exit_code == 0);
    CHECK(sub.output.find("\"classification\": \"harmonic\"") != std::string::npos);
    CHECK(sub.output.find("\"constancy_forced\": true") != std::string::npos);

    CHECK(run("walk " + measure + " no-such-test --seed 1").exit_code == 2);
}

TEST_CASE("identical command line and seed give byte-identical reports") {
    const std::string l = tmpfile_with("l.txt", "h = (1 2)(3)\nv = (1 3)(2)\n");
    const std::string out1 = "/tmp/kzlab_cli_r1.csv";
    const std::string out2 = "/tmp/kzlab_cli_r2.csv";
    CHECK(run("lyapunov " + l + " --n 20000 --trials 5 --seed 99 --format csv --out " + out1)
              .exit_code == 0);
    CHECK(run("lyapunov " + l + " --n 20000 --trials 5 --seed 99 --format csv --out " + out2)
              .exit_code == 0);
    const std::string a = slurp(out1), b = slurp(out2);
    REQUIRE_FALSE(a.empty());
    CHECK(a == b);

    // threads do not change the bytes (ordered per-trial reduction)
    const std::string out3 = "/tmp/kzlab_cli_r3.csv";
    CHECK(run("lyapunov " + l +
              " --n 20000 --trials 5 --seed 99 --format csv --threads 2 --out " + out3)
              .exit_code == 0);
    CHECK(slurp(out3) == a);
}

TEST_CASE("orbit export") {
    const std::string l = tmpfile_with("l2.txt", "h = (1 2)(3)\nv = (1 3)(2)\n");
    const auto r = run("orbit " + l + " --matrices-out /tmp/kzlab_cli_mats.json");
    CHECK(r.exit_code == 0);
    CHECK(r.output.find("src,dst,generator,matrix_id") == 0);
    // 3 vertices x 4 generators = 12 edges plus header
    int lines = 0;
    for (char c : r.output)
        if (c == '\n') ++lines;
    CHECK(lines == 13);
    CHECK(slurp("/tmp/kzlab_cli_mats.json").find("\"matrices\"") != std::string::npos);
}
