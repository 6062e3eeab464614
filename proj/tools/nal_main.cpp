#include <cstdio>
#include <iostream>
#include <optional>

#include <spdlog/spdlog.h>

#include "CLI11.hpp"
#include "nal/cli.hpp"
#include "nal/errors.hpp"

int main(int argc, char** argv) {
    CLI::App app{"nal: nonabelian localization numerics"};
    app.require_subcommand(1, 1);

    std::string config_path;
    std::optional<std::string> out;
    std::optional<int> workers;
    std::optional<unsigned> seed;
    std::optional<double> tolerance;
    bool quiet = false;

    app.add_option("--config", config_path, "INI run configuration")->required()->check(CLI::ExistingFile);
    app.add_option("--out", out, "output directory (overrides [output] dir)");
    app.add_option("--workers", workers, "quadrature worker threads")->check(CLI::PositiveNumber);
    app.add_option("--seed", seed, "random seed");
    app.add_option("--tolerance", tolerance, "relative quadrature tolerance")->check(CLI::PositiveNumber);
    app.add_flag("-q,--quiet", quiet, "warnings and errors only");
    for (const auto& name : nal::command_names()) app.add_subcommand(name)->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    }
    spdlog::set_level(quiet ? spdlog::level::warn : spdlog::level::info);
    spdlog::set_pattern("[%l] %v");

    nal::RunConfig cfg;
    try {
        cfg = nal::load_config(config_path);
    } catch (const nal::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return e.exit_code();
    }
    if (out) cfg.out_dir = *out;
    if (workers) cfg.quadrature.workers = *workers;
    if (seed) cfg.seed = *seed;
    if (tolerance) cfg.quadrature.tolerance = *tolerance;

    std::string cmd = app.get_subcommands().front()->get_name();
    nal::CommandOutcome res = nal::run_command(cmd, cfg);
    if (res.exit_code != 0) std::cerr << "error (exit " << res.exit_code << "): " << res.message << "\n";
    else if (!res.message.empty()) std::cout << res.message << "\n";
    for (const auto& f : res.files) std::cout << cfg.out_dir << "/" << f << "\n";
    return res.exit_code;
}
