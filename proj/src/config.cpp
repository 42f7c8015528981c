#include <algorithm>
#include <iomanip>
#include <ostream>
#include <set>
#include <sstream>

#include "ttlab/cli.hpp"
#include "ttlab/errors.hpp"

namespace ttlab {

namespace {

using nlohmann::json;

// Reads j[group][key] into `out` when present, collecting type errors.
template <class T>
void read(const json& j, const char* group, const char* key, T& out, std::vector<std::string>& errors) {
    const json* g = &j;
    if (group) {
        if (!j.contains(group)) return;
        g = &j.at(group);
        if (!g->is_object()) {
            errors.push_back(std::string(group) + ": expected an object");
            return;
        }
    }
    if (!g->contains(key)) return;
    try {
        out = g->at(key).get<T>();
    } catch (const json::exception&) {
        errors.push_back((group ? std::string(group) + "." : std::string()) + key + ": wrong type");
    }
}

void reject_unknown(const json& j, const char* group, const std::set<std::string>& known, std::vector<std::string>& errors) {
    const json* g = group ? (j.contains(group) ? &j.at(group) : nullptr) : &j;
    if (!g || !g->is_object()) return;
    for (const auto& [k, v] : g->items()) {
        if (!known.count(k)) errors.push_back((group ? std::string(group) + "." : std::string()) + k + ": unknown field");
    }
}

}  // namespace

ExperimentConfig ExperimentConfig::from_json(const json& j) {
    if (!j.is_object()) throw ConfigError("config: expected a JSON object");
    ExperimentConfig c;
    std::vector<std::string> errors;
    reject_unknown(j, nullptr,
                   {"schema_version", "metrics", "grid", "sources", "solver", "tolerances", "output_dir", "encoding",
                    "pipeline", "inputs", "workers"},
                   errors);
    reject_unknown(j, "grid", {"m", "m_theta", "m_mu", "mu_max", "mu_spacing", "s_divisions", "sweep"}, errors);
    reject_unknown(j, "sources", {"count", "seed", "margin", "boundary", "pairs"}, errors);
    reject_unknown(j, "solver",
                   {"step", "bsr_step", "intersection_tolerance", "jaccard_threshold", "harmonics", "simplicity_dirs"},
                   errors);
    reject_unknown(j, "tolerances",
                   {"isometry", "stability_slack", "bsr_hausdorff", "coverage", "exit_time", "resolved_fraction"}, errors);

    if (!j.contains("schema_version")) errors.push_back("schema_version: missing");
    read(j, nullptr, "schema_version", c.schema_version, errors);
    if (j.contains("metrics")) {
        if (!j["metrics"].is_array()) {
            errors.push_back("metrics: expected an array");
        } else {
            c.metrics.assign(j["metrics"].begin(), j["metrics"].end());
        }
    }
    read(j, "grid", "m", c.m, errors);
    read(j, "grid", "m_theta", c.m_theta, errors);
    read(j, "grid", "m_mu", c.m_mu, errors);
    read(j, "grid", "mu_max", c.mu_max, errors);
    read(j, "grid", "mu_spacing", c.mu_spacing, errors);
    read(j, "grid", "s_divisions", c.s_divisions, errors);
    read(j, "grid", "sweep", c.sweep_m, errors);
    read(j, "sources", "count", c.sources, errors);
    read(j, "sources", "seed", c.seed, errors);
    read(j, "sources", "margin", c.margin, errors);
    read(j, "sources", "boundary", c.boundary_sources, errors);
    read(j, "sources", "pairs", c.pairs, errors);
    read(j, "solver", "step", c.step, errors);
    read(j, "solver", "bsr_step", c.bsr_step, errors);
    read(j, "solver", "intersection_tolerance", c.intersection_tolerance, errors);
    read(j, "solver", "jaccard_threshold", c.jaccard_threshold, errors);
    read(j, "solver", "harmonics", c.harmonics, errors);
    read(j, "solver", "simplicity_dirs", c.simplicity_dirs, errors);
    read(j, "tolerances", "isometry", c.isometry_tolerance, errors);
    read(j, "tolerances", "stability_slack", c.stability_slack, errors);
    read(j, "tolerances", "bsr_hausdorff", c.bsr_hausdorff_tolerance, errors);
    read(j, "tolerances", "coverage", c.coverage_tolerance, errors);
    read(j, "tolerances", "exit_time", c.exit_time_tolerance, errors);
    read(j, "tolerances", "resolved_fraction", c.resolved_fraction, errors);
    read(j, nullptr, "output_dir", c.output_dir, errors);
    read(j, nullptr, "encoding", c.encoding, errors);
    read(j, nullptr, "pipeline", c.pipeline, errors);
    read(j, nullptr, "inputs", c.inputs, errors);
    read(j, nullptr, "workers", c.workers, errors);

    if (!errors.empty()) {
        std::ostringstream os;
        os << "invalid config:";
        for (const auto& e : errors) os << "\n  " << e;
        throw ConfigError(os.str());
    }
    c.validate();
    return c;
}

json ExperimentConfig::to_json() const {
    return {{"schema_version", schema_version},
            {"metrics", metrics},
            {"grid",
             {{"m", m},
              {"m_theta", m_theta},
              {"m_mu", m_mu},
              {"mu_max", mu_max},
              {"mu_spacing", mu_spacing},
              {"s_divisions", s_divisions},
              {"sweep", sweep_m}}},
            {"sources", {{"count", sources}, {"seed", seed}, {"margin", margin}, {"boundary", boundary_sources}, {"pairs", pairs}}},
            {"solver",
             {{"step", step},
              {"bsr_step", bsr_step},
              {"intersection_tolerance", intersection_tolerance},
              {"jaccard_threshold", jaccard_threshold},
              {"harmonics", harmonics},
              {"simplicity_dirs", simplicity_dirs}}},
            {"tolerances",
             {{"isometry", isometry_tolerance},
              {"stability_slack", stability_slack},
              {"bsr_hausdorff", bsr_hausdorff_tolerance},
              {"coverage", coverage_tolerance},
              {"exit_time", exit_time_tolerance},
              {"resolved_fraction", resolved_fraction}}},
            {"output_dir", output_dir},
            {"encoding", encoding},
            {"pipeline", pipeline},
            {"inputs", inputs},
            {"workers", workers}};
}

void ExperimentConfig::validate() const {
    std::vector<std::string> errors;
    auto need = [&](bool ok, const std::string& msg) {
        if (!ok) errors.push_back(msg);
    };
    need(schema_version == config_schema_version, "schema_version: expected " + std::to_string(config_schema_version));
    need(!metrics.empty() && metrics.size() <= 2, "metrics: expected one or two metric descriptors");
    for (std::size_t i = 0; i < metrics.size(); ++i) {
        try {
            (void)MetricModel::from_json(metrics[i]);
        } catch (const Error& e) {
            errors.push_back("metrics[" + std::to_string(i) + "]: " + e.what());
        } catch (const nlohmann::json::exception& e) {
            errors.push_back("metrics[" + std::to_string(i) + "]: " + e.what());
        }
    }
    need(m >= BoundaryGrid::min_size, "grid.m: must be at least 16");
    need(m_theta >= BoundaryGrid::min_size, "grid.m_theta: must be at least 16");
    need(m_mu >= 3, "grid.m_mu: must be at least 3");
    need(mu_max > 0.0 && mu_max <= 0.99, "grid.mu_max: must lie in (0, 0.99]");
    need(mu_spacing == "auto" || mu_spacing == "uniform" || mu_spacing == "lens_adapted",
         "grid.mu_spacing: expected auto, uniform or lens_adapted");
    need(s_divisions >= 2, "grid.s_divisions: must be at least 2");
    need(!sweep_m.empty(), "grid.sweep: must not be empty");
    for (int s : sweep_m) need(s >= BoundaryGrid::min_size, "grid.sweep: every size must be at least 16");
    if (!sweep_m.empty()) {
        const int top = *std::max_element(sweep_m.begin(), sweep_m.end());
        for (int s : sweep_m) need(s > 0 && top % s == 0, "grid.sweep: sizes must divide the largest one");
    }
    need(sources >= 1, "sources.count: must be positive");
    need(margin >= 0.0 && margin < 1.0, "sources.margin: must lie in [0, 1)");
    need(boundary_sources >= 0, "sources.boundary: must be non-negative");
    need(pairs >= 1, "sources.pairs: must be positive");
    need(step > 0.0, "solver.step: must be positive");
    need(bsr_step > 0.0, "solver.bsr_step: must be positive");
    need(intersection_tolerance > 0.0, "solver.intersection_tolerance: must be positive");
    need(jaccard_threshold > 0.0 && jaccard_threshold < 1.0, "solver.jaccard_threshold: must lie in (0, 1)");
    need(harmonics >= 0, "solver.harmonics: must be non-negative");
    need(simplicity_dirs >= 16, "solver.simplicity_dirs: must be at least 16");
    need(isometry_tolerance > 0.0, "tolerances.isometry: must be positive");
    need(stability_slack > 0.0, "tolerances.stability_slack: must be positive");
    need(bsr_hausdorff_tolerance > 0.0, "tolerances.bsr_hausdorff: must be positive");
    need(coverage_tolerance > 0.0, "tolerances.coverage: must be positive");
    need(exit_time_tolerance > 0.0, "tolerances.exit_time: must be positive");
    need(resolved_fraction > 0.0 && resolved_fraction <= 1.0, "tolerances.resolved_fraction: must lie in (0, 1]");
    need(encoding == "text" || encoding == "binary", "encoding: expected text or binary");
    need(!output_dir.empty(), "output_dir: must not be empty");
    need(workers >= 0, "workers: must be non-negative");
    if (!errors.empty()) {
        std::ostringstream os;
        os << "invalid config:";
        for (const auto& e : errors) os << "\n  " << e;
        throw ConfigError(os.str());
    }
}

std::uint64_t ExperimentConfig::hash() const {
    std::uint64_t h = 14695981039346656037ull;
    // where results go and how many threads compute them do not change them
    json j = to_json();
    j.erase("output_dir");
    j.erase("workers");
    for (unsigned char ch : j.dump()) {
        h ^= ch;
        h *= 1099511628211ull;
    }
    return h;
}

std::vector<MetricModel> ExperimentConfig::models() const {
    std::vector<MetricModel> out;
    for (const auto& m : metrics) out.push_back(MetricModel::from_json(m));
    return out;
}

SurveyOptions ExperimentConfig::survey_options() const {
    SurveyOptions o;
    o.connect.step = step;
    o.seed = seed;
    o.workers = workers;
    return o;
}

// Reports ------------------------------------------------------------------------

CriterionResult check_at_most(std::string id, std::string description, double value, double tolerance) {
    return {std::move(id), std::move(description), value, tolerance, "<=", value <= tolerance};
}

CriterionResult check_at_least(std::string id, std::string description, double value, double tolerance) {
    return {std::move(id), std::move(description), value, tolerance, ">=", value >= tolerance};
}

bool Report::passed() const {
    return std::all_of(criteria.begin(), criteria.end(), [](const CriterionResult& c) { return c.passed; });
}

json Report::to_json(const ExperimentConfig& config) const {
    std::ostringstream hash;
    hash << std::hex << std::setw(16) << std::setfill('0') << config.hash();
    json crit = json::array();
    for (const auto& c : criteria) {
        crit.push_back({{"id", c.id},
                        {"description", c.description},
                        {"value", c.value},
                        {"tolerance", c.tolerance},
                        {"relation", c.relation},
                        {"passed", c.passed}});
    }
    return {{"tool", "ttlab"},
            {"tool_version", tool_version},
            {"schema_version", config_schema_version},
            {"command", command},
            {"config_hash", hash.str()},
            {"config", config.to_json()},
            {"criteria", crit},
            {"passed", passed()},
            {"warnings", warnings},
            {"results", results}};
}

void Report::print_summary(std::ostream& out) const {
    out << "ttlab " << tool_version << "  " << command << '\n';
    if (criteria.empty()) out << "  (no criteria)\n";
    std::size_t width = 10;
    for (const auto& c : criteria) width = std::max(width, c.id.size());
    for (const auto& c : criteria) {
        out << "  " << (c.passed ? "PASS" : "FAIL") << "  " << std::left << std::setw(static_cast<int>(width)) << c.id
            << std::right << "  " << std::setw(12) << std::setprecision(5) << std::scientific << c.value << ' '
            << c.relation << ' ' << std::setw(12) << c.tolerance << std::defaultfloat << "  " << c.description << '\n';
    }
    for (const auto& w : warnings) out << "  warning: " << w << '\n';
}

}  // namespace ttlab
