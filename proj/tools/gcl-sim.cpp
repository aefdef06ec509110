#include <chrono>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "gcl/expcli.hpp"

int main(int argc, char** argv)
{
    CLI::App app{"Generalized Caldeira-Leggett simulator"};
    app.set_version_flag("--version", GCL_VERSION);
    app.require_subcommand(1);

    std::string config_path, out_dir, family;
    int threads = 1;
    std::vector<std::string> overrides;
    CLI::App* run = app.add_subcommand("run", "run the experiment described by a config file");
    run->add_option("config", config_path, "config file")->required();
    run->add_option("--out", out_dir, "output directory (overrides output.path)");
    run->add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);
    run->add_option("--family", family, "CL, gCL or lindblad (default: both CL and gCL)")
        ->check(CLI::IsMember({"CL", "gCL", "lindblad"}, CLI::ignore_case));
    run->add_option("--override", overrides, "key=value applied after the config file")->take_all();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    std::ifstream in(config_path);
    if (!in) {
        std::cerr << "gcl-sim: cannot read " << config_path << "\n";
        return 2;
    }
    std::stringstream text;
    text << in.rdbuf();
    if (!out_dir.empty()) overrides.push_back("output.path=" + out_dir);
    if (!family.empty()) overrides.push_back("model.family=" + family);

    gcl::exp::ExperimentConfig cfg;
    try {
        cfg = gcl::exp::parse_config(text.str(), overrides);
    } catch (const gcl::Error& e) {
        std::cerr << "gcl-sim: config error: " << e.what() << "\n";
        return 2;
    }

    const auto t0 = std::chrono::steady_clock::now();
    gcl::exp::RunResult result;
    try {
        result = gcl::exp::run_experiment(cfg, threads);
    } catch (const std::exception& e) {
        std::cerr << "gcl-sim: " << e.what() << "\n";
        return 3;
    }
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    try {
        const std::string path = gcl::exp::write_outputs(cfg, result, wall);
        std::cout << path << "\n";
    } catch (const std::exception& e) {
        std::cerr << "gcl-sim: " << e.what() << "\n";
        return 3;
    }
    const int rc = gcl::exp::exit_code(result);
    if (rc != 0) {
        std::cerr << "gcl-sim: " << result.failures << " of " << result.tasks << " tasks failed\n";
    }
    return rc;
}
