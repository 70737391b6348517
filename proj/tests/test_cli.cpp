#include "doctest.h"

#include "hmflow/commands.hpp"
#include "hmflow/config.hpp"
#include "hmflow/error.hpp"
#include "hmflow/map_field.hpp"

#include "json.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

using namespace hmflow;
namespace fs = std::filesystem;
using Json = nlohmann::json;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("hmflow_cli_test_" + std::to_string(::getpid())) / name;
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

void write_file(const fs::path& p, const std::string& text) {
    std::ofstream out(p);
    out << text;
}

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

struct CliResult {
    int code = -1;
    std::string log;
};

CliResult run_cli(const std::string& args, const fs::path& dir) {
    const fs::path log = dir / "stderr.txt";
    const std::string cmd = std::string(HMFLOW_CLI_PATH) + " " + args + " 2>" + log.string() + " >/dev/null";
    const int status = std::system(cmd.c_str());
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, read_file(log)};
}

Json read_json(const fs::path& p) { return Json::parse(read_file(p)); }

const char* const kForward = R"([source]
family = circle
n_theta = 64

[forward]
horizon = 1.0
dt = 1e-3
n_paths = 20000
dump_paths = 3
)";

}  // namespace

TEST_CASE("config parser is strict") {
    auto parse = [](const std::string& text) {
        std::istringstream is(text);
        return build_config(parse_config_table(is, "test.ini"));
    };
    auto code_and_message = [&](const std::string& text) -> std::pair<ErrorCode, std::string> {
        try {
            (void)parse(text);
        } catch (const Error& e) {
            return {e.code(), e.what()};
        }
        return {ErrorCode::InvalidArgument, ""};
    };
    const auto unknown = code_and_message("[solver]\nhorizn = 0.5\n");
    CHECK(unknown.first == ErrorCode::Config);
    CHECK(unknown.second.find("horizn") != std::string::npos);
    CHECK(unknown.second.find("test.ini:2") != std::string::npos);
    CHECK(code_and_message("[solvers]\n").first == ErrorCode::Config);
    CHECK(code_and_message("seed = 1\n").first == ErrorCode::Config);
    CHECK(code_and_message("[run]\nseed = 1\nseed = 2\n").first == ErrorCode::Config);
    CHECK(code_and_message("[solver]\ndt = fast\n").first == ErrorCode::Config);
    CHECK(code_and_message("[solver]\ndt = -1\n").first == ErrorCode::Config);
    CHECK(code_and_message("[solver]\nbackend = gpu\n").first == ErrorCode::Config);
    CHECK(code_and_message("[terminal]\nbenchmark = nope\n").first == ErrorCode::Config);
    CHECK(code_and_message("[terminal]\nbenchmark = identity_circle\n[source]\nradius = ricci\n").first == ErrorCode::Config);

    const RunConfig c = parse("# comment\n[terminal]\nbenchmark = perturbed_geodesic ; trailing\n[solver]\nhorizon = 0.05\n"
                              "backend = monte-carlo\nmc_paths = 0\n[run]\nseed = 9\nthreads = 2\n");
    CHECK(c.is_benchmark);
    CHECK(c.problem.name == "perturbed_geodesic");
    CHECK(c.solver.initial_horizon == 0.05);
    CHECK(c.solver.bsde.backend == Backend::MonteCarlo);
    CHECK(c.solver.bsde.mc_paths == 0);
    CHECK(c.solver.bsde.seed == 9);
    CHECK(c.solver.bsde.threads == 2);

    const RunConfig o = with_overrides(c, 11, std::string("semigroup"), fs::path("elsewhere"));
    CHECK(o.seed == 11);
    CHECK(o.solver.bsde.backend == Backend::Semigroup);
    CHECK(o.out_dir == fs::path("elsewhere"));
    std::istringstream echo(echo_config(o.table));
    CHECK(parse_config_table(echo, "echo") == o.table);
}

TEST_CASE("exit code mapping") {
    CHECK(exit_code_for(ErrorCode::Config) == 2);
    CHECK(exit_code_for(ErrorCode::Io) == 2);
    CHECK(exit_code_for(ErrorCode::NoContraction) == 3);
    CHECK(exit_code_for(ErrorCode::FieldLeftTube) == 4);
}

TEST_CASE("simulate-forward writes moments and is reproducible") {
    const fs::path dir = scratch("forward");
    write_file(dir / "forward.ini", kForward);
    const auto a = run_cli("simulate-forward --config " + (dir / "forward.ini").string() + " --out " + (dir / "a").string() +
                               " --seed 1",
                           dir);
    REQUIRE(a.code == 0);
    const Json m = read_json(dir / "a" / "moments.json");
    CHECK(m["checks"][0]["name"] == "mean_cos_displacement");
    CHECK(m["checks"][0]["expected"].get<double>() == doctest::Approx(std::exp(-0.5)));
    CHECK(m["checks"][0]["pass"] == true);
    CHECK(fs::exists(dir / "a" / "config.ini"));
    CHECK(read_file(dir / "a" / "config.ini").find("seed = 1") != std::string::npos);

    const auto b = run_cli("simulate-forward --config " + (dir / "forward.ini").string() + " --out " + (dir / "b").string() +
                               " --seed 1",
                           dir);
    REQUIRE(b.code == 0);
    CHECK(read_file(dir / "a" / "paths.csv") == read_file(dir / "b" / "paths.csv"));
    CHECK(read_file(dir / "a" / "moments.json") == read_file(dir / "b" / "moments.json"));
    const auto c = run_cli("simulate-forward --config " + (dir / "forward.ini").string() + " --out " + (dir / "c").string() +
                               " --seed 6",
                           dir);
    REQUIRE(c.code == 0);
    CHECK(read_file(dir / "a" / "paths.csv") != read_file(dir / "c" / "paths.csv"));
}

TEST_CASE("bad configuration and usage exit with code 2") {
    const fs::path dir = scratch("bad");
    write_file(dir / "bad.ini", "[solver]\nhorizn = 0.5\n");
    const auto r = run_cli("solve --config " + (dir / "bad.ini").string() + " --out " + (dir / "o").string(), dir);
    CHECK(r.code == 2);
    CHECK(r.log.find("horizn") != std::string::npos);
    CHECK(run_cli("solve --config " + (dir / "missing.ini").string(), dir).code == 2);
    CHECK(run_cli("solve", dir).code == 2);
    CHECK(run_cli("frobnicate --config x", dir).code == 2);
    write_file(dir / "ok.ini", "[terminal]\nbenchmark = identity_circle\n");
    CHECK(run_cli("solve --config " + (dir / "ok.ini").string() + " --backend gpu", dir).code == 2);
}

TEST_CASE("solve and verify the perturbed geodesic") {
    const fs::path dir = scratch("solve");
    write_file(dir / "pg.ini", "[terminal]\nbenchmark = perturbed_geodesic\n[solver]\nsample_paths = 200\n[run]\nfield_format = csv\n");
    const auto r = run_cli("solve --config " + (dir / "pg.ini").string() + " --out " + (dir / "o").string(), dir);
    REQUIRE(r.code == 0);
    const Json s = read_json(dir / "o" / "summary.json");
    CHECK(s["converged"] == true);
    CHECK(s["sup_error"].get<double>() <= s["benchmark_tolerance"].get<double>());
    CHECK(s["sup_error"].get<double>() <= 5e-3);
    CHECK(s["within_tolerance"] == true);
    for (const char* f : {"field.csv", "iterations.jsonl", "errors.csv", "convergence.svg", "error.svg", "config.ini"})
        CHECK(fs::exists(dir / "o" / f));
    CHECK(read_file(dir / "o" / "errors.csv").rfind("quantity,computed,reference,error\n", 0) == 0);
    CHECK(read_file(dir / "o" / "convergence.svg").find("<svg") != std::string::npos);

    const auto v = run_cli("verify --config " + (dir / "pg.ini").string() + " --out " + (dir / "o").string(), dir);
    CHECK(v.code == 0);
    const Json verdict = read_json(dir / "o" / "verdict.json");
    CHECK(verdict["pass"] == true);
    CHECK(verdict["checks"].size() == 3);
    for (const auto& c : verdict["checks"]) CHECK(c["status"] == "pass");

    // A corrupted field is an IO error.
    write_file(dir / "o" / "field.csv", "n_t,n_nodes,L2,horizon\n2,256,2\n1,2,3\n");
    CHECK(run_cli("verify --config " + (dir / "pg.ini").string() + " --out " + (dir / "o").string(), dir).code == 2);
}

TEST_CASE("identity benchmark reports its terminal map as a fixed point") {
    const fs::path dir = scratch("identity");
    write_file(dir / "id.ini", "[terminal]\nbenchmark = identity_circle\n[solver]\nsample_paths = 0\n[run]\nsvg = false\n");
    REQUIRE(run_cli("solve --config " + (dir / "id.ini").string() + " --out " + (dir / "o").string(), dir).code == 0);
    const Json s = read_json(dir / "o" / "summary.json");
    CHECK(s["terminal_is_fixed_point"] == true);
    CHECK(s["first_delta"].get<double>() <= 1e-4);
    CHECK(!fs::exists(dir / "o" / "convergence.svg"));
}

TEST_CASE("oversized horizons halve or exit 3") {
    const fs::path dir = scratch("halving");
    write_file(dir / "h.ini", "[terminal]\nbenchmark = perturbed_geodesic\n[source]\nn_theta = 64\n[solver]\nhorizon = 3.2\n"
                              "dt = 0.1\nratio_trigger = 0.05\nsample_paths = 0\n");
    const auto r = run_cli("solve --config " + (dir / "h.ini").string() + " --out " + (dir / "o").string(), dir);
    CHECK((r.code == 0 || r.code == 3));
    if (r.code == 0) {
        CHECK(r.log.find("abandoned horizon") != std::string::npos);
        CHECK(!read_json(dir / "o" / "summary.json")["abandoned_horizons"].empty());
    }
    write_file(dir / "never.ini", "[terminal]\nbenchmark = perturbed_geodesic\n[source]\nn_theta = 64\n[solver]\nhorizon = 0.1\n"
                                  "dt = 0.01\nratio_trigger = 1e-9\ntolerance = 1e-300\nsample_paths = 0\n");
    const auto n = run_cli("solve --config " + (dir / "never.ini").string() + " --out " + (dir / "n").string(), dir);
    CHECK(n.code == 3);
    CHECK(n.log.find("NoContraction") != std::string::npos);
}

TEST_CASE("flat target verifies with zero distance") {
    const fs::path dir = scratch("flat");
    write_file(dir / "f.ini", "[terminal]\nbenchmark = flat_circle\n[source]\nn_theta = 64\n[solver]\ndt = 0.01\n"
                              "sample_paths = 100\n[verify]\nsample_paths = 100\n");
    REQUIRE(run_cli("solve --config " + (dir / "f.ini").string() + " --out " + (dir / "o").string(), dir).code == 0);
    REQUIRE(run_cli("verify --config " + (dir / "f.ini").string() + " --out " + (dir / "o").string(), dir).code == 0);
    const Json verdict = read_json(dir / "o" / "verdict.json");
    CHECK(verdict["checks"][1]["name"] == "stay_on_target");
    CHECK(verdict["checks"][1]["value"].get<double>() == 0.0);
}

TEST_CASE("fields outside the tube fail verification with code 4") {
    const fs::path dir = scratch("tube");
    write_file(dir / "t.ini", "[terminal]\nbenchmark = identity_circle\n[source]\nn_theta = 32\n");
    NodalField h(32, 2);
    for (Eigen::Index j = 0; j < 32; ++j) {
        const double th = 2.0 * 3.14159265358979323846 * static_cast<double>(j) / 32.0;
        h(j, 0) = 1.5 * std::cos(th);
        h(j, 1) = 1.5 * std::sin(th);
    }
    fs::create_directories(dir / "o");
    save_map_field(MapField::constant_in_time(h, 10, 0.25), dir / "o" / "field.bin", MapFieldFormat::Binary);
    const auto r = run_cli("verify --config " + (dir / "t.ini").string() + " --out " + (dir / "o").string(), dir);
    CHECK(r.code == 4);
    CHECK(read_json(dir / "o" / "verdict.json")["pass"] == false);

    // A field of the wrong grid size is a configuration error.
    write_file(dir / "g.ini", "[terminal]\nbenchmark = identity_circle\n[source]\nn_theta = 64\n");
    CHECK(run_cli("verify --config " + (dir / "g.ini").string() + " --out " + (dir / "o").string(), dir).code == 2);
}
