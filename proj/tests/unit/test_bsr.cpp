#include <doctest.h>

#include <algorithm>
#include <numbers>
#include <random>

#include "oracles.hpp"
#include "ttlab/errors.hpp"
#include "ttlab/inversion.hpp"

using namespace ttlab;

namespace {

constexpr double pi = std::numbers::pi;

DirectionGrid custom_grid(int m_theta, std::vector<double> mu) {
    DirectionGrid g;
    g.m_theta = m_theta;
    g.m_mu = static_cast<int>(mu.size());
    g.mu_max = mu.back();
    g.mu = std::move(mu);
    return g;
}

// diameters and one chord on a 4-angle grid, as in the survey examples
struct SmallTable {
    DirectionGrid grid = custom_grid(4, {-1.0 / std::sqrt(10.0), 0.0, 1.0 / std::sqrt(10.0)});
    BrokenScatteringTable table = make_broken_scattering_data(MetricModel::euclidean(), grid);
    int x_diam = grid.index(0, 1), y_diam = grid.index(1, 1), chord = grid.index(1, 0), west = grid.index(2, 1),
        south = grid.index(3, 1);

    RecoveredLensData lens(bool with_reversals) const {
        RecoveredLensData l;
        const auto n = static_cast<std::size_t>(grid.size());
        l.exit_time.assign(n, 0.0);
        l.scattering.assign(n, -1);
        l.jaccard.assign(n, 1.0);
        l.runner_up.assign(n, 1.0);
        if (with_reversals) {
            for (const auto& [a, b] : {std::pair{x_diam, west}, std::pair{y_diam, south}}) {
                l.scattering[static_cast<std::size_t>(a)] = b;
                l.scattering[static_cast<std::size_t>(b)] = a;
            }
        }
        return l;
    }
};

/// Grid index of the reversed exit vector of a straight line.
int euclidean_reversal(const DirectionGrid& grid, int v) {
    const PhasePoint p = lift_inward(MetricModel::euclidean(), grid.vector(v));
    const Vec2 exit = oracle::constant_curvature_exit(0.0, p.x, p.v);
    const double cell = 2 * pi / grid.m_theta;
    const int a = static_cast<int>(std::lround(wrap_angle(std::atan2(exit.y, exit.x)) / cell)) % grid.m_theta;
    return grid.index(a, grid.m_mu - 1 - grid.mu_index(v));
}

std::vector<std::vector<int>> v_sets(const BrokenScatteringTable& t) {
    std::vector<std::vector<int>> out(static_cast<std::size_t>(t.size()));
    for (int v = 0; v < t.size(); ++v) {
        auto& s = out[static_cast<std::size_t>(v)];
        if (t.diagonal(v)) s.push_back(v);
        for (const auto& e : t.row(v)) s.push_back(e.w);
        std::sort(s.begin(), s.end());
    }
    return out;
}

double jaccard(const std::vector<int>& a, const std::vector<int>& b) {
    std::vector<int> both;
    std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(both));
    const double either = static_cast<double>(a.size() + b.size() - both.size());
    return either > 0 ? 1.0 - static_cast<double>(both.size()) / either : 1.0;
}

}  // namespace

TEST_SUITE("bsr") {
    TEST_CASE("exit times from the diagonal") {
        const auto grid = custom_grid(16, {-0.6, 0.0, 0.6});
        const auto table = make_broken_scattering_data(MetricModel::euclidean(), grid);
        CHECK(bsr_exit_time(table, grid.index(0, 1)) == doctest::Approx(2.0).epsilon(1e-10));
        CHECK(bsr_exit_time(table, grid.index(0, 2)) == doctest::Approx(1.6).epsilon(1e-10));

        const double K = 0.5;
        const auto model = MetricModel::constant_curvature(K);
        const auto g2 = uniform_direction_grid(16, 7, 0.9);
        const auto t2 = make_broken_scattering_data(model, g2);
        for (int v = 0; v < g2.size(); v += 5) {
            const PhasePoint p = lift_inward(model, g2.vector(v));
            const Vec2 exit = oracle::constant_curvature_exit(K, p.x, p.v);
            CHECK(std::abs(bsr_exit_time(t2, v) - oracle::sphere_distance(K, p.x, exit)) <= 1e-5);
        }

        BrokenScatteringTable empty(grid);
        empty.finalize();
        CHECK_THROWS_AS(bsr_exit_time(empty, 0), IncompleteTableError);
    }

    TEST_CASE("scattering relation on a lens-adapted grid") {
        const auto model = MetricModel::euclidean();
        const auto grid = lens_adapted_direction_grid(model, 32, 15, 0.99);
        const auto table = make_broken_scattering_data(model, grid);
        const int centre = grid.m_mu / 2;

        const auto m = bsr_scattering_relation(table, grid.index(0, centre));
        CHECK(m.partner == grid.index(16, centre));

        const auto lens = recover_lens(table);
        MESSAGE("resolved fraction " << lens.resolved_fraction());
        CHECK(lens.resolved_fraction() >= 0.95);
        const auto sets = v_sets(table);
        double runner_min = 1.0, far_min = 1.0;
        for (int v = 0; v < table.size(); ++v) {
            const int s = lens.scattering[static_cast<std::size_t>(v)];
            if (s < 0) continue;
            CHECK(s == euclidean_reversal(grid, v));
            CHECK(lens.scattering[static_cast<std::size_t>(s)] == v);
            runner_min = std::min(runner_min, lens.runner_up[static_cast<std::size_t>(v)]);
            for (int w = 0; w < table.size(); ++w) {
                if (w == v) continue;
                const int da = std::abs(grid.theta_index(w) - grid.theta_index(s));
                const int db = std::abs(grid.mu_index(w) - grid.mu_index(s));
                if (std::min(da, grid.m_theta - da) <= 1 && db <= 1) continue;
                far_min = std::min(far_min, jaccard(sets[static_cast<std::size_t>(v)], sets[static_cast<std::size_t>(w)]));
            }
        }
        MESSAGE("smallest runner-up " << runner_min << ", smallest beyond the reversal's neighbours " << far_min);
        // at this resolution no other vector comes within twice the threshold;
        // on finer grids only the reversal's neighbours close the gap
        CHECK(runner_min >= 2 * ScatteringOptions{}.jaccard_threshold);
        CHECK(far_min >= 2 * ScatteringOptions{}.jaccard_threshold);
    }

    TEST_CASE("scattering of an off-grid chord picks the nearest grid vector") {
        std::vector<double> mu;
        for (int k = -6; k <= 6; ++k) mu.push_back(0.15 * k);
        const auto grid = custom_grid(64, mu);
        const auto table = make_broken_scattering_data(MetricModel::euclidean(), grid);
        const int v = grid.index(0, 10);
        REQUIRE(grid.mu[10] == doctest::Approx(0.6));
        ScatteringOptions loose;
        loose.jaccard_threshold = 0.5;
        const auto m = bsr_scattering_relation(table, v, loose);
        const int expected = euclidean_reversal(grid, v);
        CHECK(grid.mu_index(m.partner) == grid.mu_index(expected));
        const int da = std::abs(grid.theta_index(m.partner) - grid.theta_index(expected));
        CHECK(std::min(da, 64 - da) <= 1);
        CHECK(m.jaccard > 0.0);

        ScatteringOptions strict;
        strict.jaccard_threshold = 1e-9;
        CHECK_THROWS_AS(bsr_scattering_relation(table, v, strict), AmbiguousScatteringError);
    }

    TEST_CASE("travel times from reversals") {
        const SmallTable s;
        const auto lens = s.lens(true);
        const auto [a, b] = bsr_travel_times(s.table, lens, s.x_diam, s.y_diam);
        CHECK(a == doctest::Approx(1.0).epsilon(1e-10));
        CHECK(b == doctest::Approx(1.0).epsilon(1e-10));

        // σ(chord) is off the grid, so the reversal of the x-diameter is used
        const auto [t1, t2] = bsr_travel_times(s.table, lens, s.x_diam, s.chord);
        CHECK(t1 == doctest::Approx(2.0 / 3.0).epsilon(1e-9));
        CHECK(t2 == doctest::Approx(std::sqrt(3.6) / 1.8).epsilon(1e-9));
        const double T = *s.table.get(s.x_diam, s.chord);
        CHECK(std::abs(t1 + t2 - T) <= 4 * std::numeric_limits<double>::epsilon() * T);

        CHECK_THROWS_AS(bsr_travel_times(s.table, lens, s.x_diam, s.west), DomainError);
        CHECK_THROWS_AS(bsr_travel_times(s.table, lens, s.x_diam, s.x_diam), DomainError);
        CHECK_THROWS_AS(bsr_travel_times(s.table, s.lens(false), s.x_diam, s.y_diam), IncompleteTableError);
    }

    TEST_CASE("crossing times agree with direct intersection") {
        const auto model = MetricModel::constant_curvature(0.5);
        const auto grid = lens_adapted_direction_grid(model, 32, 15, 0.99);
        const auto table = make_broken_scattering_data(model, grid);
        const auto lens = recover_lens(table);
        IntegrateOptions fine;
        fine.sample_every = 1;
        std::mt19937_64 rng(5);
        std::uniform_int_distribution<int> pick(0, table.size() - 1);
        int checked = 0;
        while (checked < 50) {
            const int v = pick(rng);
            const auto& row = table.row(v);
            if (row.empty()) continue;
            const int w = row[std::uniform_int_distribution<std::size_t>(0, row.size() - 1)(rng)].w;
            if (lens.scattering[static_cast<std::size_t>(v)] == w || lens.scattering[static_cast<std::size_t>(w)] == v) continue;
            std::pair<double, double> t;
            try {
                t = bsr_travel_times(table, lens, v, w);
            } catch (const IncompleteTableError&) {
                continue;
            }
            const auto a = integrate_geodesic(model, lift_inward(model, grid.vector(v)), fine);
            const auto b = integrate_geodesic(model, lift_inward(model, grid.vector(w)), fine);
            const auto hit = trace_intersection(a, b);
            REQUIRE(hit.kind == Intersection::Kind::point);
            CHECK(std::abs(t.first - hit.t_a) <= 1e-5);
            CHECK(std::abs(t.second - hit.t_b) <= 1e-5);
            ++checked;
        }
    }

    TEST_CASE("normal flow points") {
        CHECK(norm(normal_flow_point(MetricModel::euclidean(), 0.0, 0.5) - Vec2{0.5, 0.0}) <= 1e-12);
        const Vec2 p = normal_flow_point(MetricModel::euclidean(), pi / 2, 0.25);
        CHECK(norm(p - Vec2{0.0, 0.75}) <= 1e-12);
        // on the K = 0.5 sphere the normal geodesic is a diameter
        const auto model = MetricModel::constant_curvature(0.5);
        const Vec2 q = normal_flow_point(model, 0.0, 1.0);
        CHECK(std::abs(q.y) <= 1e-12);
        CHECK(oracle::sphere_distance(0.5, {1.0, 0.0}, q) == doctest::Approx(1.0).epsilon(1e-9));
    }

    TEST_CASE("travel time data from broken scattering") {
        const auto model = MetricModel::euclidean();
        const auto grid = lens_adapted_direction_grid(model, 64, 31, 0.99);
        const auto table = make_broken_scattering_data(model, grid);
        const auto lens = recover_lens(table);
        const auto res = bsr_to_travel_time_data(table, lens);
        CHECK(res.data.m == 64);
        CHECK(res.data.size() == 64 * 31);
        CHECK(res.origins.size() == res.data.size());
        MESSAGE("gap fraction " << res.gap_fraction());
        CHECK(res.gap_fraction() <= 0.05);

        const auto row_at = [&](int a, double s) -> const std::vector<double>& {
            for (std::size_t r = 0; r < res.origins.size(); ++r)
                if (res.origins[r].first == a && std::abs(res.origins[r].second - s) <= 1e-9) return res.data.rows[r];
            FAIL("no row for origin");
            return res.data.rows.front();
        };
        // s = 1 is the centre of the disc
        for (const double t : row_at(0, 1.0)) CHECK(std::abs(t - 1.0) <= 2e-2);
        const auto& half = row_at(0, 0.5);
        const BoundaryGrid bg(64);
        for (int j = 0; j < 64; ++j)
            CHECK(std::abs(half[static_cast<std::size_t>(j)] - norm(unit_circle(bg.angle(j)) - Vec2{0.5, 0.0})) <= 2e-2);

        CHECK_THROWS_AS(bsr_to_travel_time_data(table, lens, {.s_divisions = 1}), DomainError);
        auto broken = lens;
        broken.scattering[static_cast<std::size_t>(grid.index(3, 15))] = -1;
        CHECK_THROWS_AS(bsr_to_travel_time_data(table, broken), IncompleteTableError);
    }

    TEST_CASE("coarse grids leave gaps and say so") {
        const auto model = MetricModel::euclidean();
        const auto grid = lens_adapted_direction_grid(model, 16, 5, 0.99);
        const auto table = make_broken_scattering_data(model, grid);
        const auto res = bsr_to_travel_time_data(table, recover_lens(table), {.s_divisions = 8});
        CHECK(res.gaps > 0);
        REQUIRE_FALSE(res.warnings.empty());
        CHECK(res.warnings.front().find("coverage gaps") != std::string::npos);
        for (const auto& row : res.data.rows)
            for (const double t : row) CHECK(std::isfinite(t));
    }
}
