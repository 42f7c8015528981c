#include <algorithm>
#include <cmath>
#include <limits>
#include <tuple>
#include <sstream>

#include "ttlab/errors.hpp"
#include "ttlab/geodesic.hpp"

namespace ttlab {

namespace {

constexpr double pi = std::numbers::pi;
constexpr double two_pi = 2.0 * std::numbers::pi;
constexpr double boundary_band = 1e-12;

bool on_boundary(Vec2 p) { return norm(p) >= 1.0 - boundary_band; }

/// One-parameter family of rays leaving a fixed source, parametrized so that
/// the (lifted) exit angle increases with the parameter.
class RayFan {
public:
    RayFan(const MetricModel& model, Vec2 source, const ConnectOptions& o) : model_(model), source_(source) {
        io_.step = o.step;
        io_.max_length = o.max_length;
        io_.sample_every = 0;
        boundary_ = on_boundary(source);
        if (boundary_) {
            theta_source_ = wrap_angle(std::atan2(source.y, source.x));
            lo_ = -0.5 * pi;
            hi_ = 0.5 * pi;
        } else {
            lo_ = 0.0;
            hi_ = two_pi;
        }
    }

    bool boundary_source() const { return boundary_; }
    double theta_source() const { return theta_source_; }
    double lo() const { return lo_; }
    double hi() const { return hi_; }

    PhasePoint start(double u) const {
        if (boundary_) return lift_inward(model_, {theta_source_, -std::sin(u)});
        return {source_, normalize_velocity(model_, source_, unit_circle(u))};
    }

    GeodesicTrace trace(double u, int sample_every = 0) const {
        IntegrateOptions io = io_;
        io.sample_every = sample_every;
        return integrate_geodesic(model_, start(u), io);
    }

    /// Exit angle and exit time of ray u.
    std::pair<double, double> exit(double u) const {
        const GeodesicTrace t = trace(u);
        const Vec2 e = t.exit_point();
        return {wrap_angle(std::atan2(e.y, e.x)), t.exit_time};
    }

private:
    const MetricModel& model_;
    Vec2 source_;
    IntegrateOptions io_;
    bool boundary_ = false;
    double theta_source_ = 0.0;
    double lo_ = 0.0, hi_ = 0.0;
};

/// Monotone table of (lifted exit angle, parameter) used to seed shooting.
struct FanTable {
    std::vector<double> u;
    std::vector<double> lifted;  // increasing
    double base = 0.0;           // lifted angle of the first node
};

FanTable build_table(const RayFan& fan, int n) {
    FanTable tab;
    if (fan.boundary_source()) {
        // virtual end nodes: grazing rays exit at the source itself
        tab.u.push_back(fan.lo());
        tab.lifted.push_back(0.0);
        for (int i = 0; i < n; ++i) {
            const double u = fan.lo() + (fan.hi() - fan.lo()) * (i + 0.5) / n;
            const double off = wrap_angle(fan.exit(u).first - fan.theta_source());
            tab.u.push_back(u);
            tab.lifted.push_back(off);
        }
        tab.u.push_back(fan.hi());
        tab.lifted.push_back(two_pi);
    } else {
        double prev = 0.0;
        for (int i = 0; i < n; ++i) {
            const double u = two_pi * i / n;
            const double th = fan.exit(u).first;
            double lifted;
            if (i == 0) {
                lifted = th;
                tab.base = th;
            } else {
                lifted = prev + wrap_angle(th - prev);
            }
            tab.u.push_back(u);
            tab.lifted.push_back(lifted);
            prev = lifted;
        }
        tab.u.push_back(two_pi);
        tab.lifted.push_back(tab.base + two_pi);
    }
    for (std::size_t i = 1; i < tab.lifted.size(); ++i) {
        if (!(tab.lifted[i] > tab.lifted[i - 1]) || tab.lifted[i] - tab.lifted[i - 1] > pi) {
            throw ShootingFailureError("exit-angle map of the ray fan is not monotone; the metric is not simple");
        }
    }
    return tab;
}

/// Local cubic Hermite (Fritsch–Carlson slopes) inverse of the fan table.
/// Returns the seed parameter and du/dlifted at it.
std::pair<double, double> seed_from_table(const FanTable& tab, std::size_t k, double target) {
    const auto& x = tab.lifted;
    const auto& y = tab.u;
    const std::size_t n = x.size();
    auto secant = [&](std::size_t i) { return (y[i + 1] - y[i]) / (x[i + 1] - x[i]); };
    auto node_slope = [&](std::size_t i) {
        if (i == 0) return secant(0);
        if (i == n - 1) return secant(n - 2);
        const double a = secant(i - 1), b = secant(i);
        if (a * b <= 0.0) return 0.0;
        return 2.0 / (1.0 / a + 1.0 / b);  // harmonic mean keeps the cubic monotone
    };
    const double h = x[k + 1] - x[k];
    const double s = (target - x[k]) / h;
    const double m0 = node_slope(k) * h, m1 = node_slope(k + 1) * h;
    const double s2 = s * s, s3 = s2 * s;
    const double u = (2 * s3 - 3 * s2 + 1) * y[k] + (s3 - 2 * s2 + s) * m0 + (-2 * s3 + 3 * s2) * y[k + 1] +
                     (s3 - s2) * m1;
    const double du = ((6 * s2 - 6 * s) * y[k] + (3 * s2 - 4 * s + 1) * m0 + (-6 * s2 + 6 * s) * y[k + 1] +
                       (3 * s2 - 2 * s) * m1) /
                      h;
    return {u, du};
}

struct ShotResult {
    double u = 0.0;
    double time = 0.0;
    double mismatch = 0.0;
    int iterations = 0;
};

/// Safeguarded Newton–secant on F(u) = exit angle - target inside [lo, hi].
ShotResult shoot(const RayFan& fan, const FanTable& tab, double target_theta, const ConnectOptions& o) {
    // lift the target into the table range
    double target;
    if (fan.boundary_source()) {
        target = wrap_angle(target_theta - fan.theta_source());
    } else {
        target = tab.base + wrap_angle(target_theta - tab.base);
    }
    const auto it = std::upper_bound(tab.lifted.begin(), tab.lifted.end(), target);
    std::size_t k = static_cast<std::size_t>(std::max<std::ptrdiff_t>(0, (it - tab.lifted.begin()) - 1));
    k = std::min(k, tab.lifted.size() - 2);

    auto residual = [&](double u) {
        const auto [th, time] = fan.exit(u);
        double f;
        if (fan.boundary_source()) {
            f = wrap_angle(th - fan.theta_source()) - target;
        } else {
            f = wrap_difference(th - target_theta);
        }
        return std::pair{f, time};
    };

    double lo = tab.u[k], hi = tab.u[k + 1];
    double f_lo = tab.lifted[k] - target, f_hi = tab.lifted[k + 1] - target;
    auto [u, du] = seed_from_table(tab, k, target);
    double slope = du > 0.0 ? 1.0 / du : (tab.lifted[k + 1] - tab.lifted[k]) / (hi - lo);
    if (!(u > lo && u < hi)) u = 0.5 * (lo + hi);

    double prev_u = 0.0, prev_f = 0.0;
    bool have_prev = false;
    for (int it_count = 1; it_count <= o.max_iterations; ++it_count) {
        const auto [f, time] = residual(u);
        if (std::abs(f) <= o.tolerance) return {u, time, std::abs(f), it_count};
        if (f < 0.0) {
            lo = u;
            f_lo = f;
        } else {
            hi = u;
            f_hi = f;
        }
        if (have_prev && u != prev_u) {
            const double sec = (f - prev_f) / (u - prev_u);
            if (sec > 0.0 && std::isfinite(sec)) slope = sec;
        }
        double next = u - f / slope;
        if (!(next > lo && next < hi)) {
            next = lo - f_lo * (hi - lo) / (f_hi - f_lo);
            const double w = hi - lo;
            if (!(next > lo + 0.1 * w && next < hi - 0.1 * w)) next = 0.5 * (lo + hi);
        }
        if (!(hi - lo > 0.0)) break;
        prev_u = u;
        prev_f = f;
        have_prev = true;
        u = next;
    }
    std::ostringstream os;
    os << "shooting to boundary angle " << target_theta << " did not converge within " << o.max_iterations
       << " iterations";
    throw ShootingFailureError(os.str());
}

void require_closed_disc(Vec2 p) {
    if (!(norm(p) <= 1.0 + disc_slack)) throw DomainError("connect: endpoint outside the closed disc");
}

Connection reversed(Connection c) {
    std::vector<TraceSample> out;
    out.reserve(c.samples.size());
    for (auto it = c.samples.rbegin(); it != c.samples.rend(); ++it) {
        out.push_back({c.length - it->t, it->x, -it->v});
    }
    c.samples = std::move(out);
    return c;
}

Connection connect_to_boundary(const MetricModel& model, Vec2 x, double theta, const ConnectOptions& o) {
    const RayFan fan(model, x, o);
    const FanTable tab = build_table(fan, std::max(16, o.fan_size / 2));
    const ShotResult shot = shoot(fan, tab, theta, o);
    const GeodesicTrace tr = fan.trace(shot.u, 1);
    Connection c;
    c.samples = tr.samples;
    c.length = tr.exit_time;
    c.mismatch = norm(tr.exit_point() - unit_circle(theta));
    c.iterations = shot.iterations;
    return c;
}

/// Newton on (initial angle, length) for exp_x(length · v(angle)) = y.
/// Returns the final mismatch; alpha and length are updated in place.
double newton_interior(const MetricModel& model, Vec2 x, Vec2 y, double& alpha, double& length, int& iterations,
                       const ConnectOptions& o) {
    auto endpoint = [&](double a, double len) {
        return integrate_to_length(model, {x, normalize_velocity(model, x, unit_circle(a))}, len, o.step);
    };
    PhasePoint end = endpoint(alpha, length);
    double res = norm(end.x - y);
    if (!std::isfinite(res)) return res;
    for (; iterations < o.max_iterations && res > o.tolerance; ++iterations) {
        const double da = 1e-7;
        const Vec2 dxa = (1.0 / da) * (endpoint(alpha + da, length).x - end.x);
        const Mat2 jac{dxa.x, end.v.x, dxa.y, end.v.y};
        if (!(std::abs(jac.det()) > 1e-300)) break;
        const Vec2 step = jac.inverse() * (y - end.x);
        double lambda = 1.0;
        bool improved = false;
        for (int back = 0; back < 30; ++back, lambda *= 0.5) {
            const double a2 = alpha + lambda * step.x;
            const double l2 = length + lambda * step.y;
            if (!(l2 > 0.0)) continue;
            const PhasePoint e2 = endpoint(a2, l2);
            const double r2 = norm(e2.x - y);
            if (r2 < res) {
                alpha = a2;
                length = l2;
                end = e2;
                res = r2;
                improved = true;
                break;
            }
        }
        if (!improved) break;
    }
    return res;
}

/// Seed for interior shooting: the ray of a traced fan from x that passes
/// closest to y, refined once on a finer sub-fan. Rays stop at the boundary,
/// so the seed never relies on the metric outside the disc.
std::pair<double, double> fan_seed(const MetricModel& model, Vec2 x, Vec2 y, const ConnectOptions& o) {
    IntegrateOptions io;
    io.step = o.step;
    io.max_length = o.max_length;
    io.sample_every = 1;
    auto closest = [&](double a) {
        const GeodesicTrace tr = integrate_geodesic(model, {x, normalize_velocity(model, x, unit_circle(a))}, io);
        double best = std::numeric_limits<double>::infinity(), t = 0.0;
        for (const auto& s : tr.samples) {
            const double d = norm(s.x - y);
            if (d < best) {
                best = d;
                t = s.t;
            }
        }
        return std::pair{best, t};
    };
    const int n = std::max(16, o.fan_size);
    double best = std::numeric_limits<double>::infinity(), alpha = 0.0, length = 0.0;
    auto consider = [&](double a) {
        const auto [d, t] = closest(a);
        if (d < best) {
            best = d;
            alpha = a;
            length = t;
        }
    };
    for (int i = 0; i < n; ++i) consider(two_pi * i / n);
    const double centre = alpha, width = two_pi / n;
    for (int i = 1; i < 16; ++i) consider(centre - width + 2.0 * width * i / 16);
    return {alpha, length};
}

Connection connect_interior(const MetricModel& model, Vec2 x, Vec2 y, const ConnectOptions& o) {
    const Vec2 chord = y - x;
    const Mat2 gm = model.metric(0.5 * (x + y));
    double alpha = std::atan2(chord.y, chord.x);
    double length = std::sqrt(inner(gm, chord, chord));
    int it = 0;

    // The chord seed is cheap and usually inside Newton's basin. It may
    // overshoot the boundary, where the extended metric need not be valid;
    // then restart from the fan.
    auto inside = [&](const std::vector<TraceSample>& samples) {
        return std::all_of(samples.begin(), samples.end(), [](const TraceSample& s) { return norm(s.x) <= 1.0 + 1e-9; });
    };
    double res = newton_interior(model, x, y, alpha, length, it, o);
    Connection c;
    if (res <= o.tolerance) {
        integrate_to_length(model, {x, normalize_velocity(model, x, unit_circle(alpha))}, length, o.step, &c.samples);
    }
    if (!(res <= o.tolerance) || !inside(c.samples)) {
        std::tie(alpha, length) = fan_seed(model, x, y, o);
        it = 0;
        res = newton_interior(model, x, y, alpha, length, it, o);
        c.samples.clear();
        if (res <= o.tolerance) {
            integrate_to_length(model, {x, normalize_velocity(model, x, unit_circle(alpha))}, length, o.step, &c.samples);
        }
    }
    if (!(res <= o.tolerance)) {
        std::ostringstream os;
        os << "shooting from (" << x.x << ", " << x.y << ") to (" << y.x << ", " << y.y
           << ") stalled with mismatch " << res;
        throw ShootingFailureError(os.str());
    }
    c.length = length;
    c.mismatch = res;
    c.iterations = it;
    return c;
}

}  // namespace

Connection connect(const MetricModel& model, Vec2 x, Vec2 y, const ConnectOptions& options) {
    require_closed_disc(x);
    require_closed_disc(y);
    if (norm(x - y) == 0.0) throw DomainError("connect: endpoints coincide");
    const bool xb = on_boundary(x), yb = on_boundary(y);
    if (yb) return connect_to_boundary(model, x, std::atan2(y.y, y.x), options);
    if (xb) return reversed(connect_to_boundary(model, y, std::atan2(x.y, x.x), options));
    return connect_interior(model, x, y, options);
}

std::vector<double> boundary_distances(const MetricModel& model, Vec2 p, std::span<const double> angles,
                                       const ConnectOptions& options) {
    require_closed_disc(p);
    const RayFan fan(model, p, options);
    const FanTable tab = build_table(fan, options.fan_size);
    std::vector<double> out;
    out.reserve(angles.size());
    for (double theta : angles) {
        if (fan.boundary_source()) {
            const double off = wrap_angle(theta - fan.theta_source());
            if (off < 1e-12 || two_pi - off < 1e-12) {
                out.push_back(0.0);
                continue;
            }
        }
        out.push_back(shoot(fan, tab, theta, options).time);
    }
    return out;
}

}  // namespace ttlab
