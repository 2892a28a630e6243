// proxsamp CLI: sample / verify / minimize / bench.
// Exit codes: 0 ok, 1 verification failure, 2 config error, 3 solver cap.

#include <cstdio>
#include <exception>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "proxsamp/commands.hpp"
#include "proxsamp/errors.hpp"

namespace {

struct CommonArgs {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out_dir;
    bool trace = false;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--config", args.config_path, "configuration file")->required();
    cmd->add_option("--seed", args.seed, "override [run] seed");
    cmd->add_option("--out", args.out_dir, "override [run] out directory");
    cmd->add_flag("--trace", args.trace, "emit one TSV line per bundle iteration");
}

proxsamp::RunConfig load(const CommonArgs& args) {
    proxsamp::RunConfig config = proxsamp::parse_config_file(args.config_path);
    if (args.seed) config.seed = *args.seed;
    if (args.out_dir) config.out_dir = *args.out_dir;
    return config;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"proxsamp: proximal sampling from convex (non-smooth or smooth) potentials"};
    app.require_subcommand(1);

    CommonArgs sample_args, verify_args, minimize_args, bench_args;
    bool negative_control = false;

    CLI::App* sample = app.add_subcommand("sample", "run the sampler and write samples + summary");
    add_common(sample, sample_args);
    CLI::App* verify = app.add_subcommand("verify", "run the diagnostics suites");
    add_common(verify, verify_args);
    verify->add_flag("--negative-control", negative_control,
                     "corrupt the lower envelope to confirm the fuzzer detects it");
    CLI::App* minimize = app.add_subcommand("minimize", "certified minimization of g");
    add_common(minimize, minimize_args);
    CLI::App* bench = app.add_subcommand("bench", "sweep eta/delta and tabulate RGO cost");
    add_common(bench, bench_args);

    CLI11_PARSE(app, argc, argv);

    try {
        if (sample->parsed()) return proxsamp::cmd_sample(load(sample_args), sample_args.trace);
        if (verify->parsed()) return proxsamp::cmd_verify(load(verify_args), negative_control);
        if (minimize->parsed())
            return proxsamp::cmd_minimize(load(minimize_args), minimize_args.trace);
        if (bench->parsed()) return proxsamp::cmd_bench(load(bench_args));
    } catch (const proxsamp::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return proxsamp::kExitConfigError;
    } catch (const proxsamp::SolverCapError& e) {
        std::fprintf(stderr, "solver cap: %s\n", e.what());
        return proxsamp::kExitSolverCap;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return proxsamp::kExitVerifyFailed;
    }
    return 0;
}
