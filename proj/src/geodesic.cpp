#include "ttlab/geodesic.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "ttlab/errors.hpp"

namespace ttlab {

namespace {

struct FlowState {
    Vec2 x;
    Vec2 v;
    double j = 0.0;   // perpendicular Jacobi field
    double jd = 0.0;  // and its derivative
};

FlowState flow_rate(const MetricModel& model, const FlowState& s, bool jacobi) {
    FlowState d;
    d.x = s.v;
    d.v = -model.geodesic_quadratic(s.x, s.v);
    if (jacobi) {
        d.j = s.jd;
        d.jd = -model.gaussian_curvature(s.x) * s.j;
    }
    return d;
}

FlowState axpy(const FlowState& s, double h, const FlowState& d) {
    return {s.x + h * d.x, s.v + h * d.v, s.j + h * d.j, s.jd + h * d.jd};
}

FlowState rk4_step(const MetricModel& model, const FlowState& s, double h, bool jacobi) {
    const FlowState k1 = flow_rate(model, s, jacobi);
    const FlowState k2 = flow_rate(model, axpy(s, 0.5 * h, k1), jacobi);
    const FlowState k3 = flow_rate(model, axpy(s, 0.5 * h, k2), jacobi);
    const FlowState k4 = flow_rate(model, axpy(s, h, k3), jacobi);
    const double w = h / 6.0;
    return {s.x + w * (k1.x + 2.0 * k2.x + 2.0 * k3.x + k4.x),
            s.v + w * (k1.v + 2.0 * k2.v + 2.0 * k3.v + k4.v),
            s.j + w * (k1.j + 2.0 * k2.j + 2.0 * k3.j + k4.j),
            s.jd + w * (k1.jd + 2.0 * k2.jd + 2.0 * k3.jd + k4.jd)};
}

double speed_error(const MetricModel& model, Vec2 x, Vec2 v) {
    return std::abs(std::sqrt(inner(model.metric(x), v, v)) - 1.0);
}

constexpr double boundary_band = 1e-9;

}  // namespace

BoundaryFrame boundary_frame(const MetricModel& model, double theta) {
    BoundaryFrame f;
    f.point = unit_circle(theta);
    const Mat2 g = model.metric(f.point);
    const Vec2 t{-f.point.y, f.point.x};
    f.tangent = (1.0 / std::sqrt(inner(g, t, t))) * t;
    const Vec2 n = -f.point - inner(g, -f.point, f.tangent) * f.tangent;
    f.normal = (1.0 / std::sqrt(inner(g, n, n))) * n;
    return f;
}

PhasePoint lift_inward(const MetricModel& model, BoundaryVector bv) {
    if (!(std::abs(bv.mu) < 1.0)) {
        throw DomainError("lift_inward: tangential component must satisfy |mu| < 1");
    }
    const BoundaryFrame f = boundary_frame(model, bv.theta);
    return {f.point, bv.mu * f.tangent + std::sqrt(1.0 - bv.mu * bv.mu) * f.normal};
}

BoundaryVector project_reversed(const MetricModel& model, Vec2 x, Vec2 v) {
    const double theta = wrap_angle(std::atan2(x.y, x.x));
    const BoundaryFrame f = boundary_frame(model, theta);
    return {theta, inner(model.metric(f.point), -v, f.tangent)};
}

Vec2 normalize_velocity(const MetricModel& model, Vec2 x, Vec2 direction) {
    const double len = std::sqrt(inner(model.metric(x), direction, direction));
    if (!(len > 0.0)) throw DomainError("zero direction");
    return (1.0 / len) * direction;
}

Vec2 GeodesicTrace::position(double t) const {
    if (samples.size() == 1) return samples.front().x;
    t = std::clamp(t, samples.front().t, samples.back().t);
    auto it = std::upper_bound(samples.begin(), samples.end(), t,
                               [](double value, const TraceSample& s) { return value < s.t; });
    if (it == samples.end()) return samples.back().x;
    if (it == samples.begin()) return samples.front().x;
    const TraceSample& b = *it;
    const TraceSample& a = *(it - 1);
    const double dt = b.t - a.t;
    const double s = (t - a.t) / dt;
    const double s2 = s * s, s3 = s2 * s;
    return (2 * s3 - 3 * s2 + 1) * a.x + ((s3 - 2 * s2 + s) * dt) * a.v + (-2 * s3 + 3 * s2) * b.x +
           ((s3 - s2) * dt) * b.v;
}

GeodesicTrace integrate_geodesic(const MetricModel& model, PhasePoint start, double step) {
    IntegrateOptions o;
    o.step = step;
    return integrate_geodesic(model, start, o);
}

GeodesicTrace integrate_geodesic(const MetricModel& model, PhasePoint start, const IntegrateOptions& options) {
    if (!(options.step > 0.0)) throw DomainError("integrate_geodesic: step must be positive");
    const double r0 = norm(start.x);
    if (r0 > 1.0 + boundary_band) throw DomainError("integrate_geodesic: start outside the disc");
    const double drift0 = speed_error(model, start.x, start.v);
    if (drift0 > 1e-9) throw DomainError("integrate_geodesic: start velocity is not g-unit");

    GeodesicTrace trace;
    const bool on_boundary = r0 >= 1.0 - boundary_band;
    if (on_boundary) {
        if (dot(start.v, start.x) >= 0.0) {
            throw DomainError("integrate_geodesic: boundary start must point inward");
        }
        const BoundaryFrame f = boundary_frame(model, std::atan2(start.x.y, start.x.x));
        trace.entry = BoundaryVector{wrap_angle(std::atan2(start.x.y, start.x.x)),
                                     inner(model.metric(f.point), start.v, f.tangent)};
    }

    const bool jacobi = options.track_jacobi;
    FlowState s{start.x, start.v, 0.0, 1.0};
    double t = 0.0;
    double drift = drift0;
    trace.samples.push_back({0.0, s.x, s.v});
    const double h = options.step;

    for (long n = 1;; ++n) {
        if (t > options.max_length) {
            throw TrappedGeodesicError("geodesic exceeded arclength cap " + std::to_string(options.max_length) +
                                       " without exiting");
        }
        FlowState next = rk4_step(model, s, h, jacobi);
        if (norm2(next.x) - 1.0 > 0.0) {
            // the crossing lies inside (0, h]; bisect on the sub-step length
            double lo = 0.0, hi = h;
            while (hi - lo > options.exit_tolerance) {
                const double mid = 0.5 * (lo + hi);
                if (norm2(rk4_step(model, s, mid, jacobi).x) - 1.0 > 0.0) {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            const double sub = 0.5 * (lo + hi);
            next = rk4_step(model, s, sub, jacobi);
            if (jacobi && !trace.conjugate_time && next.j <= 0.0) trace.conjugate_time = t + sub;
            t += sub;
            s = next;
            break;
        }
        if (jacobi && !trace.conjugate_time && next.j <= 0.0) trace.conjugate_time = t + h;
        t += h;
        s = next;
        if (options.sample_every > 0 && n % options.sample_every == 0) {
            trace.samples.push_back({t, s.x, s.v});
            drift = std::max(drift, speed_error(model, s.x, s.v));
        }
    }

    if (trace.samples.back().t >= t) trace.samples.pop_back();
    trace.samples.push_back({t, s.x, s.v});
    drift = std::max(drift, speed_error(model, s.x, s.v));
    trace.exit_time = t;
    trace.speed_drift = drift;
    trace.exit = project_reversed(model, s.x, s.v);
    return trace;
}

PhasePoint integrate_to_length(const MetricModel& model, PhasePoint start, double length, double step,
                               std::vector<TraceSample>* samples) {
    if (!(length >= 0.0)) throw DomainError("integrate_to_length: negative length");
    const long n = std::max<long>(1, static_cast<long>(std::ceil(length / step)));
    const double h = length / static_cast<double>(n);
    FlowState s{start.x, start.v};
    if (samples) samples->push_back({0.0, s.x, s.v});
    for (long i = 1; i <= n; ++i) {
        s = rk4_step(model, s, h, false);
        if (samples) samples->push_back({h * static_cast<double>(i), s.x, s.v});
    }
    return {s.x, s.v};
}

double boundary_geodesic_curvature(const MetricModel& model, double theta) {
    const Vec2 c = unit_circle(theta);
    const Vec2 cd{-c.y, c.x};
    const Vec2 accel = -c + model.christoffel(c).contract(cd);
    const Mat2 g = model.metric(c);
    const BoundaryFrame f = boundary_frame(model, theta);
    return inner(g, accel, f.normal) / inner(g, cd, cd);
}

std::string to_string(SimplicityReport::Verdict v) {
    switch (v) {
        case SimplicityReport::Verdict::simple:
            return "simple";
        case SimplicityReport::Verdict::not_simple:
            return "not-simple";
        case SimplicityReport::Verdict::inconclusive:
            return "inconclusive";
    }
    return "inconclusive";
}

SimplicityReport simplicity_report(const MetricModel& model, int n_dirs, const SimplicityOptions& options) {
    if (n_dirs < 16) throw DomainError("simplicity_report needs n_dirs >= 16");
    SimplicityReport r;

    r.min_boundary_curvature = std::numeric_limits<double>::infinity();
    const int n_boundary = 8 * n_dirs;
    for (int i = 0; i < n_boundary; ++i) {
        const double k = boundary_geodesic_curvature(model, 2.0 * std::numbers::pi * i / n_boundary);
        r.min_boundary_curvature = std::min(r.min_boundary_curvature, k);
    }
    r.boundary_strictly_convex = r.min_boundary_curvature > 0.0;

    IntegrateOptions io = options.integrate;
    io.track_jacobi = true;
    for (int a = 0; a < n_dirs && !r.trapped_geodesic_found; ++a) {
        const double theta = 2.0 * std::numbers::pi * a / n_dirs;
        for (int b = 0; b < n_dirs; ++b) {
            const double mu = -options.mu_max + 2.0 * options.mu_max * b / (n_dirs - 1);
            try {
                const GeodesicTrace tr = integrate_geodesic(model, lift_inward(model, {theta, mu}), io);
                ++r.geodesics_traced;
                r.max_exit_time = std::max(r.max_exit_time, tr.exit_time);
                if (tr.conjugate_time) r.conjugate_point_found = true;
            } catch (const TrappedGeodesicError& e) {
                r.trapped_geodesic_found = true;
                r.note = e.what();
                break;
            }
        }
    }

    if (r.trapped_geodesic_found || r.conjugate_point_found || !r.boundary_strictly_convex) {
        r.verdict = SimplicityReport::Verdict::not_simple;
    } else if (r.min_boundary_curvature < options.convexity_margin) {
        r.verdict = SimplicityReport::Verdict::inconclusive;
        r.note = "boundary curvature below the configured convexity margin";
    } else {
        r.verdict = SimplicityReport::Verdict::simple;
    }
    return r;
}

void write_trace_columns(std::ostream& out, const GeodesicTrace& trace) {
    const auto old = out.precision(17);
    for (const auto& s : trace.samples) {
        out << s.t << ' ' << s.x.x << ' ' << s.x.y << ' ' << s.v.x << ' ' << s.v.y << '\n';
    }
    out.precision(old);
}

}  // namespace ttlab
