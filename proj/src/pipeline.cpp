#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <random>
#include <sstream>

#include "ttlab/cli.hpp"
#include "ttlab/errors.hpp"
#include "ttlab/parallel.hpp"

namespace ttlab {

namespace {

using nlohmann::json;

std::vector<std::pair<std::size_t, std::size_t>> random_pairs(std::size_t n, int count, std::uint64_t seed) {
    std::vector<std::pair<std::size_t, std::size_t>> out;
    if (n < 2) return out;
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    while (static_cast<int>(out.size()) < count) {
        const std::size_t i = pick(rng), j = pick(rng);
        if (i != j) out.emplace_back(i, j);
    }
    return out;
}

/// Sources for the second metric: when it is a pullback Φ*g of the first, the
/// same physical points Φ⁻¹(p), so both data sets sample one continuum set at
/// corresponding points.
std::vector<Vec2> matched_sources(const MetricModel& first, const MetricModel& second, const std::vector<Vec2>& sources) {
    if (second.kind() != MetricModel::Kind::pullback || second.base()->to_json() != first.to_json()) return sources;
    std::vector<Vec2> out;
    out.reserve(sources.size());
    for (const Vec2& p : sources) out.push_back(second.diffeo()->inverse(p));
    return out;
}

std::string fnv_hex(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::uint64_t h = 14695981039346656037ull;
    char ch;
    while (in.get(ch)) {
        h ^= static_cast<unsigned char>(ch);
        h *= 1099511628211ull;
    }
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << h;
    return os.str();
}

Encoding encoding_of(const ExperimentConfig& c) { return c.encoding == "binary" ? Encoding::binary : Encoding::text; }

std::filesystem::path output_path(const ExperimentConfig& c, const std::string& name) {
    std::filesystem::create_directories(c.output_dir);
    return std::filesystem::path(c.output_dir) / name;
}

json matrix_json(const FiniteMetricSpace& space) {
    json rows = json::array();
    for (std::size_t i = 0; i < space.size(); ++i) {
        json row = json::array();
        for (std::size_t j = 0; j < space.size(); ++j) row.push_back(space(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

// Inward fan from θ = 0: a "# mu <value>" line, then "t x1 x2 v1 v2" rows,
// blocks separated by blank lines. Trapped rays are marked and left empty.
void write_fan(const MetricModel& model, const std::filesystem::path& path, int rays, double mu_max) {
    std::ofstream out(path);
    if (!out) throw Error("cannot open " + path.string() + " for writing");
    const IntegrateOptions io{.step = 1e-3, .max_length = 100.0, .sample_every = 10};
    for (int k = 0; k < rays; ++k) {
        const double mu = -mu_max + 2.0 * mu_max * k / (rays - 1);
        if (k) out << '\n';
        out << "# mu " << std::setprecision(17) << mu << '\n';
        try {
            write_trace_columns(out, integrate_geodesic(model, lift_inward(model, {0.0, mu}), io));
        } catch (const NumericError&) {
            out << "# trapped\n";
        }
    }
}

constexpr int fan_rays = 17;

}  // namespace

bool IsometrySweep::monotone(const std::vector<double>& err) const {
    for (std::size_t i = 1; i < err.size(); ++i) {
        if (err[i] > err[i - 1]) return false;
    }
    return true;
}

IsometrySweep isometry_sweep(const MetricModel& model, const ExperimentConfig& config) {
    IsometrySweep out;
    out.m = config.sweep_m;
    std::sort(out.m.begin(), out.m.end());
    const int top = out.m.back();
    const auto sources = sample_interior_sources(config.seed, config.sources, config.source_options());
    const auto rows = travel_time_rows(model, sources, BoundaryGrid(top), config.survey_options());

    const auto pairs = random_pairs(sources.size(), config.pairs, config.seed ^ 0x9e3779b97f4a7c15ull);
    out.pairs = pairs.size();
    std::vector<double> forward(pairs.size());
    ConnectOptions co;
    co.step = config.step;
    parallel_for(
        pairs.size(),
        [&](std::size_t k) { forward[k] = connect(model, sources[pairs[k].first], sources[pairs[k].second], co).length; },
        config.workers);

    for (int m : out.m) {
        const int stride = top / m;
        double e_ttd = 0.0, e_ttdd = 0.0;
        for (std::size_t k = 0; k < pairs.size(); ++k) {
            const auto& f = rows[pairs[k].first];
            const auto& g = rows[pairs[k].second];
            double sup = 0.0, hi = -1e300, lo = 1e300;
            for (int j = 0; j < top; j += stride) {
                const double d = f[static_cast<std::size_t>(j)] - g[static_cast<std::size_t>(j)];
                sup = std::max(sup, std::abs(d));
                hi = std::max(hi, d);
                lo = std::min(lo, d);
            }
            e_ttd = std::max(e_ttd, std::abs(sup - forward[k]));
            e_ttdd = std::max(e_ttdd, std::abs(0.5 * (hi - lo) - forward[k]));
        }
        out.ttd_error.push_back(e_ttd);
        out.ttdd_error.push_back(e_ttdd);
    }
    out.sources = sources;
    out.rows = rows;
    return out;
}

DirectionGrid direction_grid_for(const MetricModel& model, const ExperimentConfig& config) {
    const bool lens = config.mu_spacing == "lens_adapted" ||
                      (config.mu_spacing == "auto" && model.is_rotationally_symmetric());
    if (lens) return lens_adapted_direction_grid(model, config.m_theta, config.m_mu, config.mu_max, config.bsr_step);
    return uniform_direction_grid(config.m_theta, config.m_mu, config.mu_max);
}

BsrPipeline run_bsr_pipeline(const MetricModel& model, const ExperimentConfig& config, BsrTruth* truth) {
    BsrPipeline p;
    BsrOptions bo;
    bo.integrate.step = config.bsr_step;
    bo.tolerance = config.intersection_tolerance;
    bo.workers = config.workers;
    p.table = make_broken_scattering_data(model, direction_grid_for(model, config), bo, truth);
    p.table.seed = config.seed;
    p.lens = recover_lens(p.table, {config.jaccard_threshold, config.workers});
    p.travel_times = bsr_to_travel_time_data(p.table, p.lens, {config.s_divisions});
    const auto& origins = p.travel_times.origins;
    p.e_points.resize(origins.size());
    parallel_for(
        origins.size(),
        [&](std::size_t r) {
            p.e_points[r] = normal_flow_point(model, p.table.grid().theta(origins[r].first), origins[r].second, config.bsr_step);
        },
        config.workers);
    return p;
}

// Subcommands -------------------------------------------------------------------------

Report run_simulate(const ExperimentConfig& config) {
    Report rep;
    rep.command = "simulate";
    const auto models = config.models();
    const auto sources = sample_interior_sources(config.seed, config.sources, config.source_options());
    json files = json::array();
    for (std::size_t i = 0; i < models.size(); ++i) {
        const auto pts = i == 0 ? sources : matched_sources(models[0], models[i], sources);
        const BoundaryGrid grid(config.m);
        SealedLabels labels;
        const auto ttd = make_travel_time_data(models[i], pts, grid, config.survey_options(), &labels);
        const auto ttdd = to_difference_data(ttd);
        for (const auto& [data, name] : {std::pair{&ttd, "ttd"}, std::pair{&ttdd, "ttdd"}}) {
            const auto path = output_path(config, "metric" + std::to_string(i) + "_" + name + ".dat");
            save_dataset(*data, path, encoding_of(config));
            files.push_back({{"path", path.string()}, {"kind", to_string(data->kind)}, {"rows", data->size()}, {"fnv1a", fnv_hex(path)}});
        }
        // Evaluation-only sidecar: the source behind each row, in row order.
        // Nothing in the inversion pipelines reads it.
        json rows = json::array();
        for (const std::size_t k : labels.source_of_row) rows.push_back({pts[k].x, pts[k].y});
        const auto sidecar = output_path(config, "metric" + std::to_string(i) + "_sources.json");
        std::ofstream(sidecar) << json{{"format", "ttlab-sources"}, {"version", dataset_format_version}, {"sealed", true}, {"rows", rows}}.dump()
                               << '\n';
        files.push_back({{"path", sidecar.string()}, {"kind", "sources"}, {"rows", rows.size()}, {"fnv1a", fnv_hex(sidecar)}});
        if (config.pipeline == "bsr") {
            BsrOptions bo;
            bo.integrate.step = config.bsr_step;
            bo.tolerance = config.intersection_tolerance;
            bo.workers = config.workers;
            auto table = make_broken_scattering_data(models[i], direction_grid_for(models[i], config), bo);
            table.seed = config.seed;
            const auto path = output_path(config, "metric" + std::to_string(i) + "_bsr.dat");
            save_dataset(table, path);
            files.push_back({{"path", path.string()}, {"kind", "broken_scattering"}, {"pairs", table.pair_count()}, {"fnv1a", fnv_hex(path)}});
        }
    }
    rep.results["datasets"] = files;
    return rep;
}

namespace {

std::pair<TravelTimeSet, TravelTimeSet> datasets_for_comparison(const ExperimentConfig& config, DataKind kind) {
    if (config.inputs.size() == 2) {
        auto a = load_travel_time_set(config.inputs[0]);
        auto b = load_travel_time_set(config.inputs[1]);
        if (a.kind != kind && kind == DataKind::travel_time_difference && a.kind == DataKind::travel_time) a = to_difference_data(a);
        if (b.kind != kind && kind == DataKind::travel_time_difference && b.kind == DataKind::travel_time) b = to_difference_data(b);
        return {std::move(a), std::move(b)};
    }
    if (!config.inputs.empty()) throw ConfigError("inputs: expected exactly two dataset files");
    const auto models = config.models();
    const MetricModel& ma = models[0];
    const MetricModel& mb = models.size() > 1 ? models[1] : models[0];
    const auto sources = sample_interior_sources(config.seed, config.sources, config.source_options());
    const BoundaryGrid grid(config.m);
    auto a = make_travel_time_data(ma, sources, grid, config.survey_options());
    SurveyOptions sb = config.survey_options();
    sb.seed = config.seed + 1;
    auto b = make_travel_time_data(mb, matched_sources(ma, mb, sources), grid, sb);
    if (kind == DataKind::travel_time_difference) return {to_difference_data(a), to_difference_data(b)};
    return {std::move(a), std::move(b)};
}

}  // namespace

Report run_invert(const ExperimentConfig& config, const std::string& mode) {
    Report rep;
    rep.command = "invert " + mode;
    if (mode == "ttd" || mode == "ttdd") {
        const DataKind kind = mode == "ttd" ? DataKind::travel_time : DataKind::travel_time_difference;
        const auto [A, B] = datasets_for_comparison(config, kind);
        std::vector<std::string> warnings;
        const auto sa = embed_as_metric_space(A, &warnings, config.workers);
        const auto sb = embed_as_metric_space(B, &warnings, config.workers);
        const auto corr = nearest_neighbor_match(A, B, sa, sb, {1e-6, config.workers});
        const double h = hausdorff_distance(A, B, config.workers);
        const double gh = gh_upper_bound(sa, sb, corr);
        rep.warnings = warnings;
        json table = json::array();
        for (const auto& [i, j] : corr.pairs) table.push_back({i, j});
        rep.results = {{"hausdorff", h},
                       {"distortion", corr.distortion},
                       {"gh_upper_bound", gh},
                       {"boundary_rows", corr.boundary_rows},
                       {"boundary_mismatches", corr.boundary_mismatches},
                       {"correspondence", table},
                       {"space_a", matrix_json(sa)},
                       {"space_b", matrix_json(sb)},
                       {"triangle_violation", std::max(sa.triangle_violation(), sb.triangle_violation())}};
        rep.criteria.push_back(check_at_most("stability_surrogate", "half distortion of the nearest-neighbour match minus Hausdorff distance",
                                             gh - h, config.stability_slack));
        if (kind == DataKind::travel_time && corr.boundary_rows > 0) {
            rep.criteria.push_back(check_at_most("boundary_fixing", "boundary sources matched to a different boundary angle",
                                                 static_cast<double>(corr.boundary_mismatches), 0.0));
        }
        return rep;
    }
    if (mode != "bsr") throw ConfigError("invert: mode must be ttd, ttdd or bsr");

    const auto models = config.models();
    const MetricModel& model = models[0];
    const MetricModel& reference = models.size() > 1 ? models[1] : models[0];
    const auto p = run_bsr_pipeline(model, config);
    const auto& grid = p.table.grid();

    // Exit times against an independent trace of every grid vector.
    std::vector<double> traced(static_cast<std::size_t>(grid.size()));
    IntegrateOptions io{.step = config.bsr_step, .max_length = 100.0, .sample_every = 0};
    parallel_for(
        traced.size(),
        [&](std::size_t v) { traced[v] = integrate_geodesic(model, lift_inward(model, grid.vector(static_cast<int>(v))), io).exit_time; },
        config.workers);
    double exit_err = 0.0;
    for (std::size_t v = 0; v < traced.size(); ++v) exit_err = std::max(exit_err, std::abs(p.lens.exit_time[v] - traced[v]));

    std::size_t involution_failures = 0;
    double tau_sigma = 0.0;
    for (std::size_t v = 0; v < p.lens.scattering.size(); ++v) {
        const int s = p.lens.scattering[v];
        if (s < 0) continue;
        if (p.lens.scattering[static_cast<std::size_t>(s)] != static_cast<int>(v)) ++involution_failures;
        tau_sigma = std::max(tau_sigma, std::abs(p.lens.exit_time[static_cast<std::size_t>(s)] - p.lens.exit_time[v]));
    }

    // Direct travel time data on the reference metric's E-point cloud.
    std::vector<Vec2> e_ref = p.e_points;
    if (&reference != &model) {
        parallel_for(
            e_ref.size(),
            [&](std::size_t r) {
                const auto& o = p.travel_times.origins[r];
                e_ref[r] = normal_flow_point(reference, grid.theta(o.first), o.second, config.bsr_step);
            },
            config.workers);
    }
    const auto direct = make_travel_time_data(reference, e_ref, BoundaryGrid(grid.m_theta), config.survey_options());
    const double h = hausdorff_distance(p.travel_times.data, direct, config.workers);

    json e_points_json = json::array();
    for (const Vec2& e : p.e_points) e_points_json.push_back({e.x, e.y});
    rep.warnings = p.travel_times.warnings;
    rep.results = {{"grid", {{"m_theta", grid.m_theta}, {"m_mu", grid.m_mu}, {"spacing", to_string(grid.spacing)}, {"mu", grid.mu}}},
                   {"table_pairs", p.table.pair_count()},
                   {"resolved_fraction", p.lens.resolved_fraction()},
                   {"involution_failures", involution_failures},
                   {"exit_time_error", exit_err},
                   {"exit_time_symmetry", tau_sigma},
                   {"lens", {{"exit_time", p.lens.exit_time}, {"scattering", p.lens.scattering}}},
                   {"reconstructed_rows", p.travel_times.data.size()},
                   {"gap_fraction", p.travel_times.gap_fraction()},
                   {"coverage", {{"origins", p.travel_times.origins}, {"gaps", p.travel_times.row_gaps}}},
                   {"e_points", e_points_json},
                   {"skipped_pairs", p.travel_times.skipped_pairs},
                   {"hausdorff_to_direct", h}};
    rep.criteria.push_back(check_at_most("bsr_exit_time", "max |tau from diagonal - traced exit time|", exit_err, config.exit_time_tolerance));
    rep.criteria.push_back(check_at_least("bsr_resolved", "fraction of grid vectors with resolved scattering", p.lens.resolved_fraction(),
                                          config.resolved_fraction));
    rep.criteria.push_back(check_at_most("lens_involution", "resolved vectors with sigma(sigma(v)) != v", static_cast<double>(involution_failures), 0.0));
    rep.criteria.push_back(check_at_most("bsr_travel_time_data", "Hausdorff distance to directly generated data on the E-point cloud", h,
                                         config.bsr_hausdorff_tolerance));
    rep.criteria.push_back(check_at_most("bsr_coverage", "fraction of receivers filled across a coverage gap", p.travel_times.gap_fraction(),
                                         config.coverage_tolerance));
    return rep;
}

Report run_compare(const ExperimentConfig& config) {
    Report rep;
    rep.command = "compare";
    json results = json::object();
    for (const DataKind kind : {DataKind::travel_time, DataKind::travel_time_difference}) {
        const auto [A, B] = datasets_for_comparison(config, kind);
        const auto sa = embed_as_metric_space(A, nullptr, config.workers);
        const auto sb = embed_as_metric_space(B, nullptr, config.workers);
        const auto corr = nearest_neighbor_match(A, B, sa, sb, {1e-6, config.workers});
        DiffeoSearchOptions dopt;
        dopt.harmonics = config.harmonics;
        dopt.workers = config.workers;
        const auto diffeo = diffeo_invariant_distance(A, B, dopt);
        results[to_string(kind)] = {{"hausdorff", hausdorff_distance(A, B, config.workers)},
                                    {"gh_upper_bound", gh_upper_bound(sa, sb, corr)},
                                    {"diffeo_invariant", diffeo.value},
                                    {"psi", {{"c", diffeo.psi.c}, {"a", diffeo.psi.a}, {"b", diffeo.psi.b}}}};
    }
    rep.results = results;
    return rep;
}

Report run_check_simple(const ExperimentConfig& config) {
    Report rep;
    rep.command = "check-simple";
    json out = json::array();
    const auto models = config.models();
    for (std::size_t i = 0; i < models.size(); ++i) {
        const auto r = simplicity_report(models[i], config.simplicity_dirs);
        const auto fan = output_path(config, "metric" + std::to_string(i) + "_fan.txt");
        write_fan(models[i], fan, fan_rays, config.mu_max);
        out.push_back({{"metric", models[i].to_json()},
                       {"verdict", to_string(r.verdict)},
                       {"boundary_strictly_convex", r.boundary_strictly_convex},
                       {"min_boundary_curvature", r.min_boundary_curvature},
                       {"conjugate_point_found", r.conjugate_point_found},
                       {"trapped_geodesic_found", r.trapped_geodesic_found},
                       {"max_exit_time", r.max_exit_time},
                       {"geodesics_traced", r.geodesics_traced},
                       {"note", r.note},
                       {"fan", fan.string()}});
        rep.criteria.push_back(check_at_least("simple[" + std::to_string(i) + "]", models[i].describe() + " is simple",
                                              r.verdict == SimplicityReport::Verdict::simple ? 1.0 : 0.0, 1.0));
    }
    rep.results["models"] = out;
    return rep;
}

Report run_sweep(const ExperimentConfig& config) {
    Report rep;
    rep.command = "sweep";
    json out = json::array();
    const auto models = config.models();
    for (std::size_t i = 0; i < models.size(); ++i) {
        const auto s = isometry_sweep(models[i], config);
        out.push_back({{"metric", models[i].to_json()}, {"m", s.m}, {"ttd_error", s.ttd_error}, {"ttdd_error", s.ttdd_error}, {"pairs", s.pairs}});
        const auto at = std::find(s.m.begin(), s.m.end(), config.m);
        const std::string tag = "[" + std::to_string(i) + "]";
        if (at != s.m.end()) {
            const auto k = static_cast<std::size_t>(at - s.m.begin());
            rep.criteria.push_back(check_at_most("isometry_ttd" + tag, "max |sup-norm distance - d(p,q)| at m = " + std::to_string(config.m),
                                                 s.ttd_error[k], config.isometry_tolerance));
            rep.criteria.push_back(check_at_most("isometry_ttdd" + tag, "max |half-difference sup-norm distance - d(p,q)| at m = " + std::to_string(config.m),
                                                 s.ttdd_error[k], config.isometry_tolerance));
        }
        rep.criteria.push_back(check_at_least("monotone_ttd" + tag, "error non-increasing under grid refinement", s.monotone(s.ttd_error) ? 1 : 0, 1));
        rep.criteria.push_back(check_at_least("monotone_ttdd" + tag, "error non-increasing under grid refinement", s.monotone(s.ttdd_error) ? 1 : 0, 1));
    }
    rep.results["sweeps"] = out;
    return rep;
}

void write_report(const Report& report, const ExperimentConfig& config) {
    {
        std::ofstream out(output_path(config, "report.json"));
        out << report.to_json(config).dump(2) << '\n';
        if (!out) throw Error("cannot write report.json in " + config.output_dir);
    }
    std::ofstream out(output_path(config, "summary.txt"));
    report.print_summary(out);
}

}  // namespace ttlab
