// End-to-end tests that spawn the real CLI binary (path in PROXSAMP_CLI_BIN)
// plus config parse/serialize round trips at the library level.

#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "proxsamp/config.hpp"
#include "proxsamp/errors.hpp"

using namespace proxsamp;
namespace fs = std::filesystem;

namespace {

std::string cli_bin() {
    const char* bin = std::getenv("PROXSAMP_CLI_BIN");
    REQUIRE_MESSAGE(bin != nullptr, "PROXSAMP_CLI_BIN must point at the proxsamp binary");
    return bin;
}

struct TempDir {
    fs::path path;
    TempDir() {
        static int counter = 0;
        path = fs::temp_directory_path() /
               ("proxsamp_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        fs::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
};

int run_cli(const std::string& args, const fs::path& dir) {
    const std::string cmd = cli_bin() + " " + args + " >" + (dir / "stdout.txt").string() +
                            " 2>" + (dir / "stderr.txt").string();
    const int status = std::system(cmd.c_str());
    REQUIRE(status != -1);
    return WIFEXITED(status) ? WEXITSTATUS(status) : -2;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void put(const fs::path& p, const std::string& content) {
    std::ofstream out(p, std::ios::binary);
    out << content;
}

const char* kLaplaceConfig = R"(# 1D Laplace target with quadratic regularization
[target]
kind = l1
d = 1
M = 1.0
x0 = 0.0

[schedule]
eps = 0.2
mu = 1.0

[run]
seed = 42
n_samples = 1000
)";

}  // namespace

TEST_CASE("config: parse/serialize round trip is the identity") {
    RunConfig config;
    config.target.kind = "max_affine";
    config.target.d = 2;
    config.target.A = {{1.0, 0.5}, {-1.0, 0.25}};
    config.target.b = {0.0, 0.125};
    config.target.x0 = {0.1, -0.2};
    config.schedule.eps = 0.05;
    config.schedule.mu = 0.7;
    config.schedule.delta = 1e-4;
    config.schedule.c_T = 3.0;
    config.schedule.cut_policy = CutPolicy::full;
    config.schedule.thinning = 4;
    config.seed = 9001;
    config.n_samples = 17;
    config.chains = 2;
    config.out_dir = "somewhere/else";

    const RunConfig reparsed = parse_config_text(serialize_config(config), "roundtrip");
    CHECK(reparsed == config);
}

TEST_CASE("config: errors carry the line number and key") {
    try {
        parse_config_text("[target]\nkind = l1\nbogus = 1\n", "conf");
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("conf:3") != std::string::npos);
        CHECK(msg.find("bogus") != std::string::npos);
    }
    try {
        parse_config_text("[target]\nkind = l1\nd = x\n", "conf");
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("'d'") != std::string::npos);
    }
}

TEST_CASE("config: build_target validates required fields") {
    RunConfig config = parse_config_text("[target]\nkind = l1\nd = 1\n", "conf");
    try {
        build_target(config.target);
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("target.M") != std::string::npos);
    }
}

TEST_CASE("cli sample: deterministic files, exact line count") {
    TempDir dir;
    put(dir.path / "laplace.conf", kLaplaceConfig);
    const std::string base = "sample --config " + (dir.path / "laplace.conf").string();

    REQUIRE(run_cli(base + " --out " + (dir.path / "a").string(), dir.path) == 0);
    REQUIRE(run_cli(base + " --out " + (dir.path / "b").string(), dir.path) == 0);

    const std::string sa = slurp(dir.path / "a" / "samples.csv");
    const std::string sb = slurp(dir.path / "b" / "samples.csv");
    CHECK(!sa.empty());
    CHECK(sa == sb);

    std::size_t lines = 0;
    for (char c : sa)
        if (c == '\n') ++lines;
    CHECK(lines == 1000);

    // summary carries the schedule and statistics keys
    const auto summary = nlohmann::json::parse(slurp(dir.path / "a" / "summary.json"));
    CHECK(summary["schedule"]["mu"] == 1.0);
    CHECK(summary["n_samples"] == 1000);
    CHECK(summary.contains("wall_time_ms"));
    CHECK(summary["total_outer_steps"].get<std::int64_t>() > 1000);
}

TEST_CASE("cli sample: multiple chains still deterministic") {
    TempDir dir;
    std::string conf = kLaplaceConfig;
    conf += "chains = 3\n";
    put(dir.path / "c.conf", conf);
    const std::string base = "sample --config " + (dir.path / "c.conf").string();
    REQUIRE(run_cli(base + " --out " + (dir.path / "a").string(), dir.path) == 0);
    REQUIRE(run_cli(base + " --out " + (dir.path / "b").string(), dir.path) == 0);
    const std::string sa = slurp(dir.path / "a" / "samples.csv");
    CHECK(sa == slurp(dir.path / "b" / "samples.csv"));
    std::size_t lines = 0;
    for (char c : sa)
        if (c == '\n') ++lines;
    CHECK(lines == 1000);
}

TEST_CASE("cli sample: --seed overrides the config") {
    TempDir dir;
    put(dir.path / "c.conf", kLaplaceConfig);
    const std::string base = "sample --config " + (dir.path / "c.conf").string();
    REQUIRE(run_cli(base + " --seed 43 --out " + (dir.path / "a").string(), dir.path) == 0);
    REQUIRE(run_cli(base + " --seed 43 --out " + (dir.path / "b").string(), dir.path) == 0);
    REQUIRE(run_cli(base + " --out " + (dir.path / "c").string(), dir.path) == 0);
    const std::string sa = slurp(dir.path / "a" / "samples.csv");
    CHECK(sa == slurp(dir.path / "b" / "samples.csv"));
    CHECK(sa != slurp(dir.path / "c" / "samples.csv"));  // config seed is 42
}

TEST_CASE("cli sample: n_samples = 0 writes the summary only") {
    TempDir dir;
    std::string conf = kLaplaceConfig;
    conf.replace(conf.find("n_samples = 1000"), 16, "n_samples = 0   ");
    put(dir.path / "c.conf", conf);
    REQUIRE(run_cli("sample --config " + (dir.path / "c.conf").string() + " --out " +
                        (dir.path / "out").string(),
                    dir.path) == 0);
    CHECK_FALSE(fs::exists(dir.path / "out" / "samples.csv"));
    CHECK(fs::exists(dir.path / "out" / "summary.json"));
}

TEST_CASE("cli sample: missing M exits 2 naming the field") {
    TempDir dir;
    put(dir.path / "bad.conf",
        "[target]\nkind = l1\nd = 1\n\n[schedule]\nmu = 1.0\n\n[run]\nseed = 1\nn_samples = 10\n");
    CHECK(run_cli("sample --config " + (dir.path / "bad.conf").string() + " --out " +
                      (dir.path / "out").string(),
                  dir.path) == 2);
    CHECK(slurp(dir.path / "stderr.txt").find("target.M") != std::string::npos);
}

TEST_CASE("cli sample: window violation exits 2") {
    TempDir dir;
    put(dir.path / "bad.conf",
        "[target]\nkind = l1\nd = 1\nM = 1.0\n\n[schedule]\neps = 0.2\nmu = 1.0\neta = 0.5\n"
        "delta = 1e-3\nT = 100\n\n[run]\nseed = 1\nn_samples = 10\n");
    CHECK(run_cli("sample --config " + (dir.path / "bad.conf").string() + " --out " +
                      (dir.path / "out").string(),
                  dir.path) == 2);
}

TEST_CASE("cli verify: default target passes, negative control fails") {
    TempDir dir;
    put(dir.path / "laplace.conf", kLaplaceConfig);
    const std::string base = "verify --config " + (dir.path / "laplace.conf").string() +
                             " --out " + (dir.path / "out").string();
    REQUIRE(run_cli(base, dir.path) == 0);
    const auto report = nlohmann::json::parse(slurp(dir.path / "out" / "report.json"));
    CHECK(report["all_pass"] == true);

    CHECK(run_cli(base + " --negative-control", dir.path) == 1);
}

TEST_CASE("cli verify: KS marked not applicable for d > 1") {
    TempDir dir;
    put(dir.path / "z3.conf",
        "[target]\nkind = zero\nd = 3\n\n[schedule]\neps = 0.2\nmu = 1.0\n\n[run]\nseed = 7\n"
        "n_samples = 0\n");
    REQUIRE(run_cli("verify --config " + (dir.path / "z3.conf").string() + " --out " +
                        (dir.path / "out").string(),
                    dir.path) == 0);
    const auto report = nlohmann::json::parse(slurp(dir.path / "out" / "report.json"));
    bool found = false;
    for (const auto& suite : report["suites"]) {
        if (suite["suite"] == "ks_1d") {
            CHECK(suite["status"] == "not applicable");
            found = true;
        }
    }
    CHECK(found);
}

TEST_CASE("cli minimize: |x| target certified near 2, flat target does not move") {
    TempDir dir;
    put(dir.path / "m.conf",
        "[target]\nkind = l1\nd = 1\nM = 1.0\nx0 = 3.0\n\n[schedule]\neps = 0.2\nmu = 1.0\n\n"
        "[run]\nseed = 1\nn_samples = 0\n");
    REQUIRE(run_cli("minimize --config " + (dir.path / "m.conf").string() + " --out " +
                        (dir.path / "out").string(),
                    dir.path) == 0);
    const auto report = nlohmann::json::parse(slurp(dir.path / "out" / "minimize.json"));
    CHECK(report["certified"] == true);
    const double x = report["minimizer"][0].get<double>();
    const double cert2 = report["certificate_sq"].get<double>();
    CHECK((x - 2.0) * (x - 2.0) <= cert2 + 1e-9);

    put(dir.path / "z.conf",
        "[target]\nkind = zero\nd = 2\nx0 = 0.5, -0.5\n\n[schedule]\neps = 0.2\nmu = 1.0\n\n"
        "[run]\nseed = 1\nn_samples = 0\n");
    REQUIRE(run_cli("minimize --config " + (dir.path / "z.conf").string() + " --out " +
                        (dir.path / "out2").string(),
                    dir.path) == 0);
    const auto rep2 = nlohmann::json::parse(slurp(dir.path / "out2" / "minimize.json"));
    CHECK(rep2["outer_steps"] == 0);
    CHECK(rep2["minimizer"][0].get<double>() == doctest::Approx(0.5));
}

TEST_CASE("cli minimize --trace emits TSV bundle rows") {
    TempDir dir;
    put(dir.path / "m.conf",
        "[target]\nkind = max_affine\nd = 1\nA = 1; -1\nb = 0 0\nx0 = 3.0\n\n"
        "[schedule]\neps = 0.2\nmu = 1.0\n\n[run]\nseed = 1\nn_samples = 0\n");
    REQUIRE(run_cli("minimize --trace --config " + (dir.path / "m.conf").string() + " --out " +
                        (dir.path / "out").string(),
                    dir.path) == 0);
    const std::string out = slurp(dir.path / "stdout.txt");
    bool have_tsv = false;
    std::istringstream lines(out);
    std::string line;
    while (std::getline(lines, line)) {
        std::size_t tabs = 0;
        for (char c : line)
            if (c == '\t') ++tabs;
        if (tabs == 3) have_tsv = true;
    }
    CHECK(have_tsv);
}

TEST_CASE("cli bench: emits the sweep table") {
    TempDir dir;
    put(dir.path / "b.conf", kLaplaceConfig);
    REQUIRE(run_cli("bench --config " + (dir.path / "b.conf").string() + " --out " +
                        (dir.path / "out").string(),
                    dir.path) == 0);
    const std::string csv = slurp(dir.path / "out" / "bench.csv");
    CHECK(csv.find("eta,delta,calls,mean_trials") != std::string::npos);
    std::size_t lines = 0;
    for (char c : csv)
        if (c == '\n') ++lines;
    CHECK(lines >= 4);
}
