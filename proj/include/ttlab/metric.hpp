#pragma once

#include <array>
#include <memory>
#include <string>

#include <json.hpp>

#include "ttlab/vec2.hpp"

namespace ttlab {

/// Orientation-preserving self-map of the closed unit disc.
///
/// radial_bump is x -> x(1 + eps(1 - |x|^2)); it fixes the boundary circle
/// pointwise and is injective for |eps| < 1/2. boundary_free composes a
/// rotation with a radial bump, so it maps the circle to itself but not by
/// the identity.
class DiscDiffeo {
public:
    enum class Kind { identity, rotation, radial_bump, boundary_free, compose };

    static DiscDiffeo identity();
    static DiscDiffeo rotation(double angle);
    static DiscDiffeo radial_bump(double eps);
    static DiscDiffeo boundary_free(double angle, double eps);
    /// outer ∘ inner
    static DiscDiffeo compose(const DiscDiffeo& outer, const DiscDiffeo& inner);

    Kind kind() const { return kind_; }
    double angle() const { return angle_; }
    double epsilon() const { return eps_; }

    Vec2 apply(Vec2 x) const;
    Mat2 jacobian(Vec2 x) const;
    Vec2 inverse(Vec2 y) const;
    bool fixes_boundary() const;
    /// True when the map commutes with rotations about the origin.
    bool is_radial() const;

    /// Throws InvalidDiffeoError unless det DΦ > 0 on an n×n grid over the disc.
    void validate(int n = 41) const;
    /// Smallest Jacobian determinant over the verification grid.
    double min_jacobian_det(int n = 41) const;

    nlohmann::json to_json() const;
    static DiscDiffeo from_json(const nlohmann::json& j);

private:
    Kind kind_ = Kind::identity;
    double angle_ = 0.0;
    double eps_ = 0.0;
    std::shared_ptr<const DiscDiffeo> outer_;
    std::shared_ptr<const DiscDiffeo> inner_;
};

/// Christoffel symbols of the second kind, indexed gamma[k][i][j].
struct Christoffel {
    std::array<std::array<std::array<double, 2>, 2>, 2> gamma{};

    double operator()(int k, int i, int j) const { return gamma[k][i][j]; }
    /// Γ^k_ij v^i v^j
    Vec2 contract(Vec2 v) const {
        auto one = [&](int k) {
            const auto& g = gamma[k];
            return g[0][0] * v.x * v.x + 2.0 * g[0][1] * v.x * v.y + g[1][1] * v.y * v.y;
        };
        return {one(0), one(1)};
    }
};

/// A Riemannian metric on the closed unit disc.
///
/// Every base model is conformal, g = scale · e^{2φ} δ; pullbacks wrap another
/// model and a DiscDiffeo. Immutable once built; safe to share across threads.
class MetricModel {
public:
    enum class Kind { euclidean, constant_curvature, conformal_bump, pullback };

    static constexpr double default_fd_step = 1e-4;

    static MetricModel euclidean();
    /// g = 4(1 + K|x|^2)^{-2} δ, the stereographic model of curvature K. Needs -1 < K < 1.
    static MetricModel constant_curvature(double curvature);
    /// g = e^{2φ} δ with φ = amplitude · exp(-|x - center|^2 / (2 width^2)).
    static MetricModel conformal_bump(Vec2 center, double amplitude, double width);

    Kind kind() const { return kind_; }
    double fd_step() const { return fd_step_; }
    double scale() const { return scale_; }
    double curvature_parameter() const { return curvature_; }
    Vec2 bump_center() const { return center_; }
    double bump_amplitude() const { return amplitude_; }
    double bump_width() const { return width_; }
    const MetricModel* base() const { return base_.get(); }
    const DiscDiffeo* diffeo() const { return diffeo_.get(); }

    MetricModel with_fd_step(double h) const;
    /// Multiplies the metric tensor by a constant, stretching all distances by sqrt(s).
    MetricModel scaled(double s) const;

    bool is_conformal() const { return kind_ != Kind::pullback; }
    bool is_rotationally_symmetric() const;

    // Unchecked evaluation. Geodesic integration steps slightly past the
    // boundary while locating the exit, so these accept any point where the
    // formulas are finite.
    Mat2 metric(Vec2 x) const;
    Christoffel christoffel(Vec2 x) const;
    double gaussian_curvature(Vec2 x) const;
    /// Γ^k_ij v^i v^j, the quadratic term of the geodesic equation.
    Vec2 geodesic_quadratic(Vec2 x, Vec2 v) const;

    nlohmann::json to_json() const;
    static MetricModel from_json(const nlohmann::json& j);
    std::string describe() const;

    friend MetricModel pullback_metric(const MetricModel& base, const DiscDiffeo& phi);

private:
    MetricModel() = default;

    // log of the conformal factor without the scale, and its derivatives
    double log_factor(Vec2 x) const;
    Vec2 log_factor_gradient(Vec2 x) const;
    double log_factor_laplacian(Vec2 x) const;

    Christoffel christoffel_fd(Vec2 x) const;

    Kind kind_ = Kind::euclidean;
    double fd_step_ = default_fd_step;
    double scale_ = 1.0;
    double curvature_ = 0.0;
    Vec2 center_{};
    double amplitude_ = 0.0;
    double width_ = 1.0;
    std::shared_ptr<const MetricModel> base_;
    std::shared_ptr<const DiscDiffeo> diffeo_;
};

/// g(x); throws DomainError outside the closed disc.
Mat2 eval_metric(const MetricModel& model, Vec2 x);
/// Γ(x); throws DomainError outside the closed disc, NumericError if g(x) is singular.
Christoffel christoffel(const MetricModel& model, Vec2 x);
double gaussian_curvature(const MetricModel& model, Vec2 x);

/// Φ*g. Throws InvalidDiffeoError when Φ fails its Jacobian check.
MetricModel pullback_metric(const MetricModel& base, const DiscDiffeo& phi);

/// Smallest eigenvalue of g over an n×n grid restricted to the closed disc.
double min_metric_eigenvalue(const MetricModel& model, int n = 101);

/// Tolerance on |x| used to decide whether a point lies in the closed disc.
inline constexpr double disc_slack = 1e-9;

}  // namespace ttlab
