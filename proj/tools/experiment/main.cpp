#include "runner.hpp"

#include "pqlab/error.hpp"

#include <CLI11.hpp>

#include <iostream>

using namespace pqlab::experiment;

int main(int argc, char** argv) {
    CLI::App app{"pqlab: variational experiments with (p,q)-growth integrands"};
    app.require_subcommand(1);

    std::string config_path, manifest_path, out;
    std::uint64_t seed = 0;
    double tol_el = 0.0;
    int threads = 1;
    bool quiet = false;

    auto add_run_flags = [&](CLI::App* sub) {
        sub->add_option("config", config_path, "TOML or JSON experiment config")->required();
        sub->add_option("--out", out, "output directory (overrides output.dir)");
        sub->add_option("--seed", seed, "random seed (overrides seed)");
        sub->add_option("--tol-el", tol_el, "relative Euler-Lagrange tolerance (overrides tolerances.tol_el)");
        sub->add_option("--threads", threads, "worker threads for independent solves")->check(CLI::PositiveNumber);
        sub->add_flag("-q,--quiet", quiet, "no progress output");
    };
    CLI::App* run_cmd = app.add_subcommand("run", "run every configured stage");
    add_run_flags(run_cmd);
    CLI::App* sweep_cmd = app.add_subcommand("sweep", "refinement sweep with integrability and V-field scans");
    add_run_flags(sweep_cmd);
    CLI::App* report_cmd = app.add_subcommand("report", "summarize a manifest and verify artifact hashes");
    report_cmd->add_option("manifest", manifest_path, "manifest.json of a finished run")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return ConfigFailure;
    }

    if (report_cmd->parsed()) return report(manifest_path, std::cout);

    RunOptions opt;
    CLI::App* sub = run_cmd->parsed() ? run_cmd : sweep_cmd;
    if (sub->count("--out")) opt.out = out;
    if (sub->count("--seed")) opt.seed = seed;
    if (sub->count("--tol-el")) opt.tol_el = tol_el;
    opt.threads = threads;
    opt.progress = quiet ? nullptr : &std::cerr;

    try {
        const ExperimentConfig cfg = load_config(config_path);
        const RunManifest m = run_cmd->parsed() ? run(cfg, opt) : refinement_sweep(cfg, opt);
        std::cout << (std::filesystem::path(apply_overrides(cfg, opt).output_dir) / "manifest.json").string() << "\n";
        return m.ok() ? Success : NumericFailure;
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return ConfigFailure;
    } catch (const pqlab::DomainError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return ConfigFailure;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return NumericFailure;
    }
}
