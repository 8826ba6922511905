#include "depofrag/cli.hpp"

#include <CLI11.hpp>

#include <string>

int main(int argc, char** argv) {
    CLI::App app{"depolymerisation and fragmentation inverse-problem toolkit"};
    app.require_subcommand(1);

    depofrag::cli::GlobalArgs global;
    std::string config_path, out_dir;
    std::uint64_t seed = 0;
    int threads = 0;
    app.add_option("--config", config_path, "experiment config file")->envname("DEPOFRAG_CONFIG");
    app.add_option("--seed", seed, "seed override");
    app.add_option("--out", out_dir, "output directory override");
    app.add_option("--threads", threads, "worker threads for sweeps");

    std::string moments_file, samples_file;
    CLI::App* gen = app.add_subcommand("gen-synthetic", "generate synthetic observations");
    CLI::App* simd = app.add_subcommand("simulate-depoly", "run the discrete depolymerisation model");
    CLI::App* invd = app.add_subcommand("invert-depoly", "reconstruct u0 from a moment series");
    invd->add_option("moments", moments_file, "moment CSV (t,Mk)")->required();
    CLI::App* simf = app.add_subcommand("simulate-frag", "run the fragmentation forward model");
    CLI::App* estf = app.add_subcommand("estimate-frag", "estimate (alpha, gamma, kappa) from samples");
    estf->add_option("samples", samples_file, "sample CSV (time,size)")->required();
    CLI::App* valf = app.add_subcommand("validate-frag", "validate parameters against samples");
    valf->add_option("samples", samples_file, "sample CSV (time,size)")->required();

    CLI11_PARSE(app, argc, argv);

    if (!config_path.empty()) global.config_path = config_path;
    if (app.count("--seed")) global.seed = seed;
    if (!out_dir.empty()) global.out_dir = out_dir;
    if (app.count("--threads")) global.threads = threads;

    if (gen->parsed()) return depofrag::cli::cmd_gen_synthetic(global);
    if (simd->parsed()) return depofrag::cli::cmd_simulate_depoly(global);
    if (invd->parsed()) return depofrag::cli::cmd_invert_depoly(global, moments_file);
    if (simf->parsed()) return depofrag::cli::cmd_simulate_frag(global);
    if (estf->parsed()) return depofrag::cli::cmd_estimate_frag(global, samples_file);
    if (valf->parsed()) return depofrag::cli::cmd_validate_frag(global, samples_file);
    return depofrag::cli::exit_validation;
}
