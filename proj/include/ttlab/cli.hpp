#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "ttlab/inversion.hpp"

namespace ttlab {

inline constexpr const char* tool_version = "0.1.0";
inline constexpr int config_schema_version = 1;

/// Everything a run needs. Loaded from JSON, then overridden by flags.
struct ExperimentConfig {
    int schema_version = config_schema_version;
    std::vector<nlohmann::json> metrics{nlohmann::json{{"kind", "euclidean"}}};

    // grids
    int m = 256;
    int m_theta = 64;
    int m_mu = 31;
    double mu_max = 0.99;
    /// "auto" picks lens_adapted for rotationally symmetric metrics.
    std::string mu_spacing = "auto";
    int s_divisions = 32;
    std::vector<int> sweep_m{64, 128, 256, 512};

    // sources
    int sources = 200;
    std::uint64_t seed = 1;
    double margin = 0.02;
    int boundary_sources = 0;
    int pairs = 500;

    // solvers
    double step = 5e-3;
    double bsr_step = 1e-3;
    double intersection_tolerance = default_intersection_tolerance;
    double jaccard_threshold = 0.05;
    int harmonics = 3;
    int simplicity_dirs = 32;

    // acceptance tolerances
    double isometry_tolerance = 1e-2;
    double stability_slack = 1e-3;
    double bsr_hausdorff_tolerance = 3e-2;
    double coverage_tolerance = 0.05;
    double exit_time_tolerance = 1e-5;
    double resolved_fraction = 0.95;

    std::string output_dir = "ttlab-out";
    std::string encoding = "text";
    std::string pipeline;
    std::vector<std::string> inputs;
    int workers = 0;

    /// Throws ConfigError listing every invalid field.
    static ExperimentConfig from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;
    void validate() const;
    /// FNV-1a over the canonical JSON dump, without output_dir and workers.
    std::uint64_t hash() const;

    std::vector<MetricModel> models() const;
    SourceOptions source_options() const { return {margin, boundary_sources}; }
    SurveyOptions survey_options() const;
};

struct CriterionResult {
    std::string id;
    std::string description;
    double value = 0.0;
    double tolerance = 0.0;
    /// "<=" or ">="
    std::string relation = "<=";
    bool passed = false;
};

CriterionResult check_at_most(std::string id, std::string description, double value, double tolerance);
CriterionResult check_at_least(std::string id, std::string description, double value, double tolerance);

struct Report {
    std::string command;
    nlohmann::json results = nlohmann::json::object();
    std::vector<CriterionResult> criteria;
    std::vector<std::string> warnings;

    bool passed() const;
    nlohmann::json to_json(const ExperimentConfig& config) const;
    void print_summary(std::ostream& out) const;
};

// Pipelines shared by the CLI and the acceptance suite.

struct IsometrySweep {
    std::vector<int> m;
    /// Worst |sup-norm distance - d(p, q)| over the sampled pairs, per m.
    std::vector<double> ttd_error;
    std::vector<double> ttdd_error;
    std::size_t pairs = 0;
    /// Sources and their travel time rows on the finest grid, in source order.
    std::vector<Vec2> sources;
    std::vector<std::vector<double>> rows;

    bool monotone(const std::vector<double>& err) const;
};

/// Generates data at the finest m, subsamples to the others, and compares
/// sup-norm distances with shooting distances on random source pairs.
IsometrySweep isometry_sweep(const MetricModel& model, const ExperimentConfig& config);

DirectionGrid direction_grid_for(const MetricModel& model, const ExperimentConfig& config);

struct BsrPipeline {
    BrokenScatteringTable table;
    RecoveredLensData lens;
    BsrTravelTimeResult travel_times;
    /// E(s₀, z₀) for every reconstructed row.
    std::vector<Vec2> e_points;
};

BsrPipeline run_bsr_pipeline(const MetricModel& model, const ExperimentConfig& config, BsrTruth* truth = nullptr);

Report run_simulate(const ExperimentConfig& config);
Report run_invert(const ExperimentConfig& config, const std::string& mode);
Report run_compare(const ExperimentConfig& config);
Report run_check_simple(const ExperimentConfig& config);
Report run_sweep(const ExperimentConfig& config);

/// Writes report.json and summary.txt into the output directory.
void write_report(const Report& report, const ExperimentConfig& config);

/// Exit codes: 0 pass, 1 criterion failure, 2 configuration error, 3 numerical failure.
enum ExitCode { exit_pass = 0, exit_criterion_failure = 1, exit_config_error = 2, exit_numeric_failure = 3 };

/// Entry point behind the ttlab executable.
int cli_main(int argc, char** argv);

}  // namespace ttlab
