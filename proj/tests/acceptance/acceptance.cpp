// Acceptance suite: one PASS/FAIL line per criterion, tolerances pinned below.
// Datasets are generated once and shared between criteria.

#include <chrono>
#include <cstdio>
#include <limits>
#include <map>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "ttlab/cli.hpp"
#include "ttlab/errors.hpp"
#include "ttlab/parallel.hpp"

using namespace ttlab;

namespace {

constexpr double pi = std::numbers::pi;

// criterion tolerances
constexpr double tol_isometry = 1e-2;          // 1, 2
constexpr double tol_gauge = 2e-4;             // 3
constexpr double tol_surrogate = 1e-3;         // 4
constexpr double tol_exact_gh = 1e-6;          // 4
constexpr int exact_gh_points = 6;             // 4
constexpr int exact_gh_samples = 50;           // 4
constexpr double tol_exit_time = 1e-5;         // 5
constexpr double tol_exit_closed_form = 1e-6;  // 5
constexpr double min_resolved = 0.95;          // 6
constexpr int crossing_pairs = 200;            // 7
constexpr double tol_crossing = 1e-5;          // 7
constexpr double tol_bsr_hausdorff = 3e-2;     // 8, 9
constexpr double max_gap_fraction = 0.05;      // 8
constexpr double tol_self = 1e-3;              // 10
constexpr double tol_rotation = 2e-2;          // 10
constexpr double tol_rotation_angle = 1e-2;    // 10
constexpr double min_non_isometric = 0.05;     // 10
constexpr double tol_drift = 1e-8;             // 11
constexpr double min_order_factor = 12.0;      // 11
constexpr double tol_symmetry = 1e-7;          // 11
constexpr double tol_triangle = 1e-6;          // 11

constexpr double gauge_eps = 0.2;
constexpr double rotation_angle = 0.3;

struct Zoo {
    std::string name;
    MetricModel model;
};

std::vector<Zoo> zoo() {
    return {{"euclidean", MetricModel::euclidean()},
            {"K=+0.5", MetricModel::constant_curvature(0.5)},
            {"K=-0.5", MetricModel::constant_curvature(-0.5)},
            {"bump", MetricModel::conformal_bump({0.2, 0.1}, 0.3, 0.35)},
            {"radial_bump pullback", pullback_metric(MetricModel::euclidean(), DiscDiffeo::radial_bump(gauge_eps))}};
}

int failures = 0;

void verdict(int id, bool pass, const std::string& text) {
    if (!pass) ++failures;
    std::printf("%s  criterion %2d  %s\n", pass ? "PASS" : "FAIL", id, text.c_str());
    std::fflush(stdout);
}

void detail(const char* fmt, auto... args) {
    std::printf("      ");
    std::printf(fmt, args...);
    std::printf("\n");
    std::fflush(stdout);
}

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

class Timer {
public:
    double seconds() const { return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count(); }

private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::vector<std::vector<double>> every_other(const std::vector<std::vector<double>>& rows, int stride) {
    std::vector<std::vector<double>> out;
    out.reserve(rows.size());
    for (const auto& r : rows) {
        std::vector<double> c;
        for (std::size_t j = 0; j < r.size(); j += static_cast<std::size_t>(stride)) c.push_back(r[j]);
        out.push_back(std::move(c));
    }
    return out;
}

BoundaryVector analytic_scattering(double K, BoundaryVector v) {
    const Vec2 z = unit_circle(v.theta);
    const Vec2 tangent{-z.y, z.x};
    const Vec2 u = v.mu * tangent + std::sqrt(1.0 - v.mu * v.mu) * (-z);
    const Vec2 e = oracle::constant_curvature_exit(K, z, u);
    return {wrap_angle(std::atan2(e.y, e.x)), -v.mu};
}

int nearest_mu(const DirectionGrid& g, double mu) {
    int best = 0;
    for (int b = 1; b < g.m_mu; ++b) {
        if (std::abs(g.mu[static_cast<std::size_t>(b)] - mu) < std::abs(g.mu[static_cast<std::size_t>(best)] - mu)) best = b;
    }
    return best;
}

struct BsrModelRun {
    std::string name;
    double K;
    MetricModel model;
    BsrTruth truth;
    BsrPipeline pipeline;
    TravelTimeSet direct;
};

}  // namespace

int main() {
    const Timer total;
    ExperimentConfig config;  // desk-scale defaults: m 256, 200 sources, 500 pairs, 64×31 directions
    const auto models = zoo();
    const int m = config.m;
    const int top = *std::max_element(config.sweep_m.begin(), config.sweep_m.end());
    std::printf("acceptance: m=%d, %d sources, %d pairs, %dx%d directions, %d worker(s)\n", m, config.sources, config.pairs,
                config.m_theta, config.m_mu, worker_count(config.workers));

    // 1, 2: isometry of both data maps ------------------------------------------------
    std::vector<IsometrySweep> sweeps;
    {
        const Timer t;
        double worst_ttd = 0.0, worst_ttdd = 0.0;
        bool mono_ttd = true, mono_ttdd = true;
        const auto at = std::find(config.sweep_m.begin(), config.sweep_m.end(), m) - config.sweep_m.begin();
        for (const auto& z : models) {
            sweeps.push_back(isometry_sweep(z.model, config));
            const auto& s = sweeps.back();
            detail("%-22s ttd  %s", z.name.c_str(), [&] {
                std::string o;
                for (std::size_t i = 0; i < s.m.size(); ++i) o += fmt("m=%d:%.2e ", s.m[i], s.ttd_error[i]);
                return o;
            }().c_str());
            detail("%-22s ttdd %s", z.name.c_str(), [&] {
                std::string o;
                for (std::size_t i = 0; i < s.m.size(); ++i) o += fmt("m=%d:%.2e ", s.m[i], s.ttdd_error[i]);
                return o;
            }().c_str());
            worst_ttd = std::max(worst_ttd, s.ttd_error[static_cast<std::size_t>(at)]);
            worst_ttdd = std::max(worst_ttdd, s.ttdd_error[static_cast<std::size_t>(at)]);
            mono_ttd = mono_ttd && s.monotone(s.ttd_error);
            mono_ttdd = mono_ttdd && s.monotone(s.ttdd_error);
        }
        verdict(1, worst_ttd <= tol_isometry && mono_ttd,
                fmt("travel time isometry: worst |sup - d| at m=%d = %.3e (<= %.0e), monotone in m: %s [%.0fs]", m, worst_ttd,
                    tol_isometry, mono_ttd ? "yes" : "no", t.seconds()));
        verdict(2, worst_ttdd <= tol_isometry && mono_ttdd,
                fmt("difference isometry: worst |half sup - d| at m=%d = %.3e (<= %.0e), monotone in m: %s", m, worst_ttdd,
                    tol_isometry, mono_ttdd ? "yes" : "no"));
    }

    // Travel time sets at m, one per zoo metric, shared by 3, 4 and 10.
    std::vector<TravelTimeSet> ttd;
    for (std::size_t i = 0; i < models.size(); ++i) {
        ttd.push_back(assemble_dataset(DataKind::travel_time, every_other(sweeps[i].rows, top / m), m, models[i].model.to_json(),
                                       config.seed + i));
    }
    const auto& sources = sweeps.front().sources;
    const BoundaryGrid grid(m);

    // 3: gauge invariance -------------------------------------------------------------
    {
        const Timer t;
        const DiscDiffeo phi = DiscDiffeo::radial_bump(gauge_eps);
        double worst = 0.0;
        for (std::size_t i = 0; i < models.size(); ++i) {
            const MetricModel pulled = pullback_metric(models[i].model, phi);
            std::vector<Vec2> moved;
            for (const Vec2& p : sources) moved.push_back(phi.inverse(p));
            SurveyOptions so = config.survey_options();
            so.seed = config.seed + 100 + i;
            const auto B = make_travel_time_data(pulled, moved, grid, so);
            const double h_ttd = hausdorff_distance(ttd[i], B);
            const double h_ttdd = hausdorff_distance(to_difference_data(ttd[i]), to_difference_data(B));
            detail("%-22s H_ttd %.3e  H_ttdd %.3e", models[i].name.c_str(), h_ttd, h_ttdd);
            worst = std::max({worst, h_ttd, h_ttdd});
        }
        verdict(3, worst <= tol_gauge,
                fmt("gauge invariance under radial_bump(%.1f): worst Hausdorff = %.3e (<= %.0e) [%.0fs]", gauge_eps, worst, tol_gauge,
                    t.seconds()));
    }

    // 4: stability surrogate ----------------------------------------------------------
    {
        const Timer t;
        double worst_surrogate = -std::numeric_limits<double>::infinity();
        double worst_exact = -std::numeric_limits<double>::infinity();
        std::mt19937_64 rng(config.seed);
        for (const DataKind kind : {DataKind::travel_time, DataKind::travel_time_difference}) {
            std::vector<TravelTimeSet> sets;
            std::vector<FiniteMetricSpace> spaces;
            for (const auto& d : ttd) {
                sets.push_back(kind == DataKind::travel_time ? d : to_difference_data(d));
                spaces.push_back(embed_as_metric_space(sets.back()));
            }
            for (std::size_t i = 0; i < sets.size(); ++i) {
                for (std::size_t j = i + 1; j < sets.size(); ++j) {
                    const auto corr = nearest_neighbor_match(sets[i], sets[j], spaces[i], spaces[j]);
                    const double h = hausdorff_distance(sets[i], sets[j]);
                    const double gh = gh_upper_bound(spaces[i], spaces[j], corr);
                    worst_surrogate = std::max(worst_surrogate, gh - h);
                    double exact_excess = -std::numeric_limits<double>::infinity();
                    for (int s = 0; s < exact_gh_samples; ++s) {
                        std::vector<std::size_t> all(sets[i].size());
                        std::iota(all.begin(), all.end(), std::size_t{0});
                        std::shuffle(all.begin(), all.end(), rng);
                        std::vector<std::size_t> xs(all.begin(), all.begin() + exact_gh_points), ys;
                        for (std::size_t x : xs) {
                            const std::size_t y = corr.pairs[x].second;
                            if (std::find(ys.begin(), ys.end(), y) == ys.end()) ys.push_back(y);
                        }
                        const double g = exact_gromov_hausdorff(spaces[i].subspace(xs), spaces[j].subspace(ys));
                        exact_excess = std::max(exact_excess, g - h);
                    }
                    worst_exact = std::max(worst_exact, exact_excess);
                    detail("%-4s %-9s vs %-22s H %.3e  half-distortion %.3e  max exact GH - H %.3e", to_string(kind) == "travel_time" ? "ttd" : "ttdd",
                           models[i].name.c_str(), models[j].name.c_str(), h, gh, exact_excess);
                }
            }
        }
        verdict(4, worst_surrogate <= tol_surrogate && worst_exact <= tol_exact_gh,
                fmt("stability surrogate: max(half-distortion - H) = %.3e (<= %.0e), max(exact GH - H) = %.3e (<= %.0e) [%.0fs]",
                    worst_surrogate, tol_surrogate, worst_exact, tol_exact_gh, t.seconds()));
    }

    // 5-8: broken scattering inversion on Euclidean and K = 0.5 ---------------------------------
    std::vector<BsrModelRun> bsr;
    bsr.push_back({"euclidean", 0.0, MetricModel::euclidean(), {}, {}, {}});
    bsr.push_back({"K=+0.5", 0.5, MetricModel::constant_curvature(0.5), {}, {}, {}});
    double worst_retrace_drift = 0.0;
    {
        const Timer t;
        double exit_err = 0.0, closed_err = 0.0;
        for (auto& run : bsr) {
            run.pipeline = run_bsr_pipeline(run.model, config, &run.truth);
            const auto& g = run.pipeline.table.grid();
            const auto& lens = run.pipeline.lens;
            std::vector<double> traced(static_cast<std::size_t>(g.size()));
            std::vector<double> drift(traced.size());
            IntegrateOptions io{.step = config.bsr_step, .max_length = 100.0, .sample_every = 1};
            parallel_for(traced.size(), [&](std::size_t v) {
                const auto tr = integrate_geodesic(run.model, lift_inward(run.model, g.vector(static_cast<int>(v))), io);
                traced[v] = tr.exit_time;
                drift[v] = tr.speed_drift;
            });
            double e = 0.0, c = 0.0;
            for (std::size_t v = 0; v < traced.size(); ++v) {
                e = std::max(e, std::abs(lens.exit_time[v] - traced[v]));
                const BoundaryVector bv = g.vector(static_cast<int>(v));
                const Vec2 z = unit_circle(bv.theta);
                const BoundaryVector out = analytic_scattering(run.K, bv);
                const double expected = run.K == 0.0 ? 2.0 * std::sqrt(1.0 - bv.mu * bv.mu)
                                                     : oracle::sphere_distance(run.K, z, unit_circle(out.theta));
                c = std::max(c, std::abs(lens.exit_time[v] - expected));
                worst_retrace_drift = std::max(worst_retrace_drift, drift[v]);
            }
            detail("%-10s grid %s, %zu table pairs, max |tau - traced| %.3e, max |tau - closed form| %.3e", run.name.c_str(),
                   to_string(g.spacing).c_str(), run.pipeline.table.pair_count(), e, c);
            exit_err = std::max(exit_err, e);
            closed_err = std::max(closed_err, c);
        }
        verdict(5, exit_err <= tol_exit_time && closed_err <= tol_exit_closed_form,
                fmt("BSR exit time: max |tau - traced| = %.3e (<= %.0e), max |tau - closed form| = %.3e (<= %.0e) [%.0fs]", exit_err,
                    tol_exit_time, closed_err, tol_exit_closed_form, t.seconds()));
    }
    {
        double min_frac = 1.0;
        std::size_t involution = 0, wrong = 0;
        for (const auto& run : bsr) {
            const auto& g = run.pipeline.table.grid();
            const auto& lens = run.pipeline.lens;
            std::size_t inv = 0, bad = 0;
            double worst_runner = 1.0;
            for (int v = 0; v < g.size(); ++v) {
                const int s = lens.scattering[static_cast<std::size_t>(v)];
                if (s < 0) continue;
                worst_runner = std::min(worst_runner, lens.runner_up[static_cast<std::size_t>(v)]);
                if (lens.scattering[static_cast<std::size_t>(s)] != v) ++inv;
                const BoundaryVector expected = analytic_scattering(run.K, g.vector(v));
                const int ea = static_cast<int>(std::lround(expected.theta / (2.0 * pi / g.m_theta))) % g.m_theta;
                const int eb = nearest_mu(g, expected.mu);
                const int da = std::abs(g.theta_index(s) - ea);
                if (std::min(da, g.m_theta - da) > 1 || std::abs(g.mu_index(s) - eb) > 1) ++bad;
            }
            detail("%-10s resolved %.4f, involution failures %zu, off the analytic reversal by > 1 cell %zu, smallest runner-up Jaccard %.3f",
                   run.name.c_str(), lens.resolved_fraction(), inv, bad, worst_runner);
            min_frac = std::min(min_frac, lens.resolved_fraction());
            involution += inv;
            wrong += bad;
        }
        verdict(6, min_frac >= min_resolved && involution == 0 && wrong == 0,
                fmt("BSR scattering relation: resolved fraction %.4f (>= %.2f), involution failures %zu, analytic mismatches %zu",
                    min_frac, min_resolved, involution, wrong));
    }
    {
        const Timer t;
        double worst = 0.0, worst_sum = 0.0;
        std::size_t attempts = 0;
        for (const auto& run : bsr) {
            const auto& table = run.pipeline.table;
            const auto& lens = run.pipeline.lens;
            std::mt19937_64 rng(config.seed + 7);
            std::uniform_int_distribution<int> pick(0, table.size() - 1);
            IntegrateOptions io{.step = config.bsr_step, .max_length = 100.0, .sample_every = 1};
            int done = 0;
            double e_run = 0.0;
            while (done < crossing_pairs && attempts < 100000) {
                ++attempts;
                const int v1 = pick(rng);
                const auto& row = table.row(v1);
                if (row.empty()) continue;
                const int w = row[std::uniform_int_distribution<std::size_t>(0, row.size() - 1)(rng)].w;
                if (w == v1 || lens.scattering[static_cast<std::size_t>(v1)] == w || lens.scattering[static_cast<std::size_t>(w)] == v1) continue;
                std::pair<double, double> tt;
                try {
                    tt = bsr_travel_times(table, lens, v1, w);
                } catch (const IncompleteTableError&) {
                    continue;
                }
                const auto a = integrate_geodesic(run.model, lift_inward(run.model, table.grid().vector(v1)), io);
                const auto b = integrate_geodesic(run.model, lift_inward(run.model, table.grid().vector(w)), io);
                const Intersection hit = trace_intersection(a, b, config.intersection_tolerance);
                if (hit.kind != Intersection::Kind::point) continue;
                const double T = *table.get(v1, w);
                e_run = std::max({e_run, std::abs(tt.first - hit.t_a), std::abs(tt.second - hit.t_b)});
                worst_sum = std::max(worst_sum, std::abs(tt.first + tt.second - T) / T);
                ++done;
            }
            detail("%-10s %d pairs, max |t - crossing parameter| %.3e", run.name.c_str(), done, e_run);
            if (done < crossing_pairs) e_run = std::numeric_limits<double>::infinity();
            worst = std::max(worst, e_run);
        }
        const double sum_tol = 4.0 * std::numeric_limits<double>::epsilon();
        verdict(7, worst <= tol_crossing && worst_sum <= sum_tol,
                fmt("BSR travel times: max |(t1,t2) - crossing parameters| = %.3e (<= %.0e), max |t1 + t2 - T|/T = %.1e (<= 4 ulp) [%.0fs]",
                    worst, tol_crossing, worst_sum, t.seconds()));
    }
    {
        const Timer t;
        double worst_h = 0.0, worst_gap = 0.0;
        for (auto& run : bsr) {
            const auto& p = run.pipeline;
            run.direct = make_travel_time_data(run.model, p.e_points, BoundaryGrid(p.table.grid().m_theta), config.survey_options());
            const double h = hausdorff_distance(p.travel_times.data, run.direct);
            detail("%-10s %zu E-points, Hausdorff %.3e, filled receivers %.4f, skipped pairs %zu", run.name.c_str(), p.e_points.size(), h,
                   p.travel_times.gap_fraction(), p.travel_times.skipped_pairs);
            worst_h = std::max(worst_h, h);
            worst_gap = std::max(worst_gap, p.travel_times.gap_fraction());
        }
        verdict(8, worst_h <= tol_bsr_hausdorff && worst_gap <= max_gap_fraction,
                fmt("BSR to travel time data: Hausdorff = %.3e (<= %.0e), gap-filled receivers %.4f (<= %.2f) [%.0fs]", worst_h,
                    tol_bsr_hausdorff, worst_gap, max_gap_fraction, t.seconds()));
    }

    // 9: end to end through a boundary-fixing pullback ------------------------------------------
    {
        const Timer t;
        const DiscDiffeo phi = DiscDiffeo::radial_bump(gauge_eps);
        double worst_h = 0.0, worst_tau = 0.0;
        bool lens_ok = true;
        for (const auto& run : bsr) {
            const MetricModel pulled = pullback_metric(run.model, phi);
            const auto p = run_bsr_pipeline(pulled, config);
            const double h = hausdorff_distance(p.travel_times.data, run.direct);
            double tau = 0.0;
            for (std::size_t v = 0; v < p.lens.exit_time.size(); ++v)
                tau = std::max(tau, std::abs(p.lens.exit_time[v] - run.pipeline.lens.exit_time[v]));
            std::size_t inv = 0;
            for (std::size_t v = 0; v < p.lens.scattering.size(); ++v) {
                const int s = p.lens.scattering[v];
                if (s >= 0 && p.lens.scattering[static_cast<std::size_t>(s)] != static_cast<int>(v)) ++inv;
            }
            const bool same_sigma = p.lens.scattering == run.pipeline.lens.scattering;
            detail("pullback of %-10s resolved %.4f, involution failures %zu, same sigma as base %s, max |tau - tau_base| %.3e, Hausdorff %.3e",
                   run.name.c_str(), p.lens.resolved_fraction(), inv, same_sigma ? "yes" : "no", tau, h);
            lens_ok = lens_ok && p.lens.resolved_fraction() >= min_resolved && inv == 0;
            worst_h = std::max(worst_h, h);
            worst_tau = std::max(worst_tau, tau);
        }
        verdict(9, worst_h <= tol_bsr_hausdorff && worst_tau <= tol_exit_time && lens_ok,
                fmt("end to end under radial_bump(%.1f): Hausdorff to base data = %.3e (<= %.0e), max lens exit time change %.3e (<= %.0e) [%.0fs]",
                    gauge_eps, worst_h, tol_bsr_hausdorff, worst_tau, tol_exit_time, t.seconds()));
    }

    // 10: diffeomorphism-invariant distance ----------------------------------------------
    {
        const Timer t;
        DiffeoSearchOptions dso;
        dso.harmonics = config.harmonics;
        auto identity_error = [&](const CircleMap& psi, double shift) {
            double e = 0.0;
            for (int j = 0; j < m; ++j) e = std::max(e, std::abs(wrap_difference(psi(grid.angle(j)) - (grid.angle(j) + shift))));
            return e;
        };
        // same metric, independently shuffled rows
        const std::size_t k = 1;
        const auto self_b = assemble_dataset(DataKind::travel_time, every_other(sweeps[k].rows, top / m), m, models[k].model.to_json(), 999);
        const auto self = diffeo_invariant_distance(ttd[k], self_b, dso);
        const double self_psi = identity_error(self.psi, 0.0);
        detail("%s vs itself: R %.3e, max |psi - id| %.3e", models[k].name.c_str(), self.value, self_psi);

        // rotation pullback at matched sources: B rows are r_p(θ + α), so ψ*(θ) = θ - α
        const DiscDiffeo rot = DiscDiffeo::rotation(rotation_angle);
        const MetricModel rotated = pullback_metric(MetricModel::euclidean(), rot);
        std::vector<Vec2> moved;
        for (const Vec2& p : sources) moved.push_back(rot.inverse(p));
        SurveyOptions so = config.survey_options();
        so.seed = config.seed + 200;
        const auto rot_b = make_travel_time_data(rotated, moved, grid, so);
        const auto rr = diffeo_invariant_distance(ttd[0], rot_b, dso);
        const double rot_psi = identity_error(rr.psi, -rotation_angle);
        detail("euclidean vs rotation(%.2f) pullback: R %.3e, c* %.4f, max |psi - (theta - alpha)| %.3e", rotation_angle, rr.value, rr.psi.c,
               rot_psi);

        const auto far = diffeo_invariant_distance(ttd[0], ttd[1], dso);
        detail("euclidean vs K=+0.5: R %.3e (plain Hausdorff %.3e)", far.value, hausdorff_distance(ttd[0], ttd[1]));

        const bool pass = self.value <= tol_self && self_psi <= tol_rotation_angle && rr.value <= tol_rotation &&
                          rot_psi <= tol_rotation_angle && far.value >= min_non_isometric;
        verdict(10, pass,
                fmt("diffeo-invariant distance: self %.2e (<= %.0e), rotation %.2e (<= %.0e) with psi error %.2e (<= %.0e), "
                    "euclidean vs K=0.5 %.3f (>= %.2f) [%.0fs]",
                    self.value, tol_self, rr.value, tol_rotation, rot_psi, tol_rotation_angle, far.value, min_non_isometric, t.seconds()));
    }

    // 11: numerical hygiene ----------------------------------------------------------
    {
        const Timer t;
        // unit-speed drift on the BSR retraces and on random rays of every zoo metric
        double drift = worst_retrace_drift;
        std::mt19937_64 rng(config.seed + 11);
        std::uniform_real_distribution<double> angle(0.0, 2.0 * pi), mu(-0.99, 0.99);
        for (const auto& z : models) {
            double d = 0.0;
            for (int i = 0; i < 200; ++i) {
                const auto tr = integrate_geodesic(z.model, lift_inward(z.model, {angle(rng), mu(rng)}), IntegrateOptions{});
                d = std::max(d, tr.speed_drift);
            }
            detail("%-22s max unit-speed drift %.3e over 200 random rays", z.name.c_str(), d);
            drift = std::max(drift, d);
        }

        // RK4 order on a pullback of the Euclidean disc: the exit time must equal the chord length
        const MetricModel pulled = pullback_metric(MetricModel::euclidean(), DiscDiffeo::radial_bump(gauge_eps));
        double order = std::numeric_limits<double>::infinity();
        for (const BoundaryVector bv : {BoundaryVector{0.3, 0.4}, BoundaryVector{2.0, -0.7}, BoundaryVector{4.0, 0.1}}) {
            const double exact = 2.0 * std::sqrt(1.0 - bv.mu * bv.mu);
            std::vector<double> err;
            for (double h : {0.1, 0.05, 0.025}) {
                const auto tr = integrate_geodesic(pulled, lift_inward(pulled, bv), IntegrateOptions{.step = h, .sample_every = 0});
                err.push_back(std::abs(tr.exit_time - exact));
            }
            const double f1 = err[0] / err[1], f2 = err[1] / err[2];
            detail("exit-time error at steps 0.1/0.05/0.025: %.2e %.2e %.2e, factors %.1f %.1f", err[0], err[1], err[2], f1, f2);
            order = std::min({order, f1, f2});
        }

        // symmetry and triangle inequality of shooting distances
        double asym = 0.0, triangle = 0.0;
        const auto pts = sample_interior_sources(config.seed + 5, 30, config.source_options());
        for (const auto& z : models) {
            double a_m = 0.0, t_m = -std::numeric_limits<double>::infinity();
            for (std::size_t i = 0; i + 2 < pts.size(); i += 3) {
                const double pq = connect(z.model, pts[i], pts[i + 1]).length;
                const double qp = connect(z.model, pts[i + 1], pts[i]).length;
                const double qr = connect(z.model, pts[i + 1], pts[i + 2]).length;
                const double pr = connect(z.model, pts[i], pts[i + 2]).length;
                a_m = std::max(a_m, std::abs(pq - qp));
                t_m = std::max(t_m, pr - pq - qr);
            }
            detail("%-22s max |d(p,q) - d(q,p)| %.3e, max d(p,r) - d(p,q) - d(q,r) %.3e", z.name.c_str(), a_m, t_m);
            asym = std::max(asym, a_m);
            triangle = std::max(triangle, t_m);
        }
        verdict(11, drift <= tol_drift && order >= min_order_factor && asym <= tol_symmetry && triangle <= tol_triangle,
                fmt("hygiene: drift %.2e (<= %.0e), RK4 halving factor %.1f (>= %.0f), asymmetry %.2e (<= %.0e), triangle excess %.2e (<= %.0e) [%.0fs]",
                    drift, tol_drift, order, min_order_factor, asym, tol_symmetry, triangle, tol_triangle, t.seconds()));
    }

    std::printf("%s: %d of 11 criteria failed [%.0fs]\n", failures ? "FAIL" : "PASS", failures, total.seconds());
    return failures ? 1 : 0;
}
