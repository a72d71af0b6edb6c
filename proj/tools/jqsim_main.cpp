#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "jqsim/experiment.hpp"

int main(int argc, char** argv)
{
    CLI::App app{"jqsim: WFQ / Just Queueing single-link simulator"};
    app.require_subcommand(1);

    jqsim::RunManifest manifest;
    std::string scenario;
    std::string out_dir = ".";
    bool paired = false;
    std::uint64_t seed = 0;

    auto* run = app.add_subcommand("run", "run a scenario and write metrics");
    run->add_option("scenario", scenario, "scenario file")->required();
    run->add_option("-o,--out", out_dir, "output directory");
    run->add_flag("--paired", paired, "run WFQ and JQ on the same arrivals");
    run->add_flag("--emit-trace", manifest.emit_trace, "also write the event trace");
    run->add_flag("--check", manifest.check_invariants, "verify trace invariants (exit 1 on failure)");
    auto* seed_opt = run->add_option("--seed", seed, "override the scenario seed");

    std::string trace;
    auto* chk = app.add_subcommand("check", "verify the invariants of a trace file");
    chk->add_option("trace", trace, "trace file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return jqsim::kExitInputError;
    }

    if (*chk)
        return jqsim::execute_check(trace, std::cout, std::cerr);

    manifest.scenario_path = scenario;
    manifest.output_dir = out_dir;
    manifest.mode = paired ? jqsim::RunMode::paired : jqsim::RunMode::single;
    if (*seed_opt)
        manifest.seed_override = seed;
    return jqsim::execute(manifest, std::cout, std::cerr);
}
