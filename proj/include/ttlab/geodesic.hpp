#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ttlab/metric.hpp"

namespace ttlab {

/// A point of the unit sphere bundle: position and g-unit velocity.
struct PhasePoint {
    Vec2 x;
    Vec2 v;
};

/// Element of the boundary unit ball bundle: boundary angle θ and the
/// component μ of the vector along the g-unit counter-clockwise tangent.
struct BoundaryVector {
    double theta = 0.0;
    double mu = 0.0;
};

struct TraceSample {
    double t = 0.0;
    Vec2 x;
    Vec2 v;
};

/// Unit-speed geodesic sampled from its start to its boundary exit.
struct GeodesicTrace {
    std::vector<TraceSample> samples;
    double exit_time = 0.0;
    std::optional<BoundaryVector> entry;
    /// N_out of the reversed outgoing velocity, i.e. the scattering image of entry.
    BoundaryVector exit;
    /// max | |v|_g - 1 | over the recorded samples
    double speed_drift = 0.0;
    /// First zero of the perpendicular Jacobi field, when tracked.
    std::optional<double> conjugate_time;

    Vec2 start_point() const { return samples.front().x; }
    Vec2 exit_point() const { return samples.back().x; }
    /// Cubic Hermite interpolation between samples; t is clamped to [0, exit_time].
    Vec2 position(double t) const;
};

/// g-orthonormal frame at boundary angle θ.
struct BoundaryFrame {
    Vec2 point;
    Vec2 tangent;  // counter-clockwise
    Vec2 normal;   // inward
};

BoundaryFrame boundary_frame(const MetricModel& model, double theta);

/// N_in^{-1}: the inward unit vector at θ with tangential component μ.
PhasePoint lift_inward(const MetricModel& model, BoundaryVector bv);

/// N of the reversed vector -v at a boundary point x.
BoundaryVector project_reversed(const MetricModel& model, Vec2 x, Vec2 v);

/// Rescales a nonzero direction to g-unit length at x.
Vec2 normalize_velocity(const MetricModel& model, Vec2 x, Vec2 direction);

struct IntegrateOptions {
    double step = 1e-3;
    double max_length = 100.0;
    /// Record every n-th step; 0 keeps only the start and exit samples.
    int sample_every = 1;
    double exit_tolerance = 1e-10;
    bool track_jacobi = false;
};

/// Fixed-step RK4 on x'' + Γ(x', x') = 0 until the geodesic leaves the disc.
/// Throws TrappedGeodesicError past options.max_length.
GeodesicTrace integrate_geodesic(const MetricModel& model, PhasePoint start, const IntegrateOptions& options);
GeodesicTrace integrate_geodesic(const MetricModel& model, PhasePoint start, double step);

/// Integrates exactly `length` units of arclength with no exit detection.
PhasePoint integrate_to_length(const MetricModel& model, PhasePoint start, double length, double step,
                               std::vector<TraceSample>* samples = nullptr);

struct ConnectOptions {
    double step = 1e-3;
    double tolerance = 1e-8;
    int max_iterations = 40;
    double max_length = 100.0;
    /// Rays in the seeding fan used for boundary targets.
    int fan_size = 64;
};

/// The unique geodesic segment from x to y and its length.
struct Connection {
    std::vector<TraceSample> samples;
    double length = 0.0;
    double mismatch = 0.0;
    int iterations = 0;
};

/// Two-point shooting. Throws ShootingFailureError when the endpoint mismatch
/// does not drop below options.tolerance within options.max_iterations.
Connection connect(const MetricModel& model, Vec2 x, Vec2 y, const ConnectOptions& options = {});

/// d(p, z(θ)) for every θ in `angles`; p may lie inside the disc or on its boundary.
std::vector<double> boundary_distances(const MetricModel& model, Vec2 p, std::span<const double> angles,
                                       const ConnectOptions& options = {});

struct Intersection {
    enum class Kind { none, point, reversal, coincident };
    Kind kind = Kind::none;
    double t_a = 0.0;
    double t_b = 0.0;
    Vec2 point;

    explicit operator bool() const { return kind != Kind::none; }
};

inline constexpr double default_intersection_tolerance = 1e-4;

/// Interior crossing of two traces of the same metric, or a marker when the
/// traces are one geodesic (reversal) or the same one twice (coincident).
Intersection trace_intersection(const GeodesicTrace& a, const GeodesicTrace& b,
                                double tol = default_intersection_tolerance);

/// Pairwise crossings of many traces, found through a uniform spatial hash.
struct PairIntersection {
    std::size_t a = 0;
    std::size_t b = 0;
    Intersection hit;
};
std::vector<PairIntersection> all_intersections(std::span<const GeodesicTrace> traces,
                                                double tol = default_intersection_tolerance);

/// Geodesic curvature of the boundary circle at θ, positive when the boundary
/// bends toward the interior.
double boundary_geodesic_curvature(const MetricModel& model, double theta);

struct SimplicityReport {
    enum class Verdict { simple, not_simple, inconclusive };

    bool boundary_strictly_convex = false;
    double min_boundary_curvature = 0.0;
    bool conjugate_point_found = false;
    bool trapped_geodesic_found = false;
    double max_exit_time = 0.0;
    int geodesics_traced = 0;
    Verdict verdict = Verdict::inconclusive;
    std::string note;
};

std::string to_string(SimplicityReport::Verdict v);

struct SimplicityOptions {
    IntegrateOptions integrate{.step = 2e-3, .max_length = 100.0, .sample_every = 0};
    /// Minimum boundary curvature below which convexity counts as unresolved.
    double convexity_margin = 1e-3;
    double mu_max = 0.99;
};

/// Checks strict convexity of the boundary and the absence of conjugate
/// points along a fan of n_dirs × n_dirs inward geodesics.
SimplicityReport simplicity_report(const MetricModel& model, int n_dirs, const SimplicityOptions& options = {});

/// Columnar text export: one "t x1 x2 v1 v2" line per sample.
void write_trace_columns(std::ostream& out, const GeodesicTrace& trace);

}  // namespace ttlab
