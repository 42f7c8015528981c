#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "ttlab/cli.hpp"
#include "ttlab/errors.hpp"

namespace ttlab {

namespace {

ExperimentConfig load_config(const std::string& path) {
    if (path.empty()) return {};
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("config " + path + " is not valid JSON: " + e.what());
    }
    return ExperimentConfig::from_json(j);
}

}  // namespace

int cli_main(int argc, char** argv) {
    CLI::App app{"ttlab: travel-time data laboratory for simple metrics on the disc"};
    app.require_subcommand(1);
    app.fallthrough();
    app.set_version_flag("--version", tool_version);

    std::string config_path;
    std::vector<std::string> metric_flags;
    std::optional<int> m, sources, pairs, workers, m_theta, m_mu;
    std::optional<std::uint64_t> seed;
    std::optional<double> step;
    std::optional<std::string> output, encoding, spacing;
    std::vector<std::string> inputs;

    app.add_option("-c,--config", config_path, "JSON experiment config")->check(CLI::ExistingFile);
    app.add_option("--metric", metric_flags, "metric descriptor as JSON; repeat for a second metric");
    app.add_option("--m", m, "boundary grid size");
    app.add_option("--m-theta", m_theta, "direction grid angles");
    app.add_option("--m-mu", m_mu, "direction grid tangential components");
    app.add_option("--mu-spacing", spacing, "auto, uniform or lens_adapted");
    app.add_option("--sources", sources, "number of interior sources");
    app.add_option("--pairs", pairs, "source pairs sampled by sweep");
    app.add_option("--seed", seed, "generation seed");
    app.add_option("--step", step, "shooting step for data generation");
    app.add_option("-o,--output", output, "output directory");
    app.add_option("--encoding", encoding, "dataset encoding: text or binary");
    app.add_option("--workers", workers, "worker threads (default: TTLAB_WORKERS or all cores)");

    auto* simulate = app.add_subcommand("simulate", "generate travel time, difference and (with pipeline bsr) BSR datasets");
    std::string invert_mode;
    auto* invert = app.add_subcommand("invert", "run a reconstruction pipeline and check its criteria");
    invert->add_option("mode", invert_mode, "ttd, ttdd or bsr")->required()->check(CLI::IsMember({"ttd", "ttdd", "bsr"}));
    auto* compare = app.add_subcommand("compare", "Hausdorff, GH bound and diffeomorphism-invariant distance of two datasets");
    compare->add_option("--input", inputs, "two dataset files; generated from the metrics when omitted");
    auto* check = app.add_subcommand("check-simple", "simplicity report for each metric");
    auto* sweep = app.add_subcommand("sweep", "grid-refinement study of the sampled isometry");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? exit_pass : exit_config_error;
    }

    try {
        ExperimentConfig config = load_config(config_path);
        if (!metric_flags.empty()) {
            config.metrics.clear();
            for (const auto& s : metric_flags) {
                try {
                    config.metrics.push_back(nlohmann::json::parse(s));
                } catch (const nlohmann::json::parse_error& e) {
                    throw ConfigError("--metric: not valid JSON: " + s);
                }
            }
        }
        if (m) config.m = *m;
        if (m_theta) config.m_theta = *m_theta;
        if (m_mu) config.m_mu = *m_mu;
        if (spacing) config.mu_spacing = *spacing;
        if (sources) config.sources = *sources;
        if (pairs) config.pairs = *pairs;
        if (seed) config.seed = *seed;
        if (step) config.step = *step;
        if (output) config.output_dir = *output;
        if (encoding) config.encoding = *encoding;
        if (workers) config.workers = *workers;
        if (!inputs.empty()) config.inputs = inputs;
        if (*invert) config.pipeline = invert_mode;
        config.validate();

        Report report;
        if (*simulate) report = run_simulate(config);
        if (*invert) report = run_invert(config, invert_mode);
        if (*compare) report = run_compare(config);
        if (*check) report = run_check_simple(config);
        if (*sweep) report = run_sweep(config);
        write_report(report, config);
        report.print_summary(std::cout);
        return report.passed() ? exit_pass : exit_criterion_failure;
    } catch (const ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << '\n';
        return exit_config_error;
    } catch (const ParseError& e) {
        std::cerr << "input error: " << e.what() << '\n';
        return exit_config_error;
    } catch (const Error& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return exit_numeric_failure;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_numeric_failure;
    }
}

}  // namespace ttlab
