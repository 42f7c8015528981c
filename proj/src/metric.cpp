#include "ttlab/metric.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "ttlab/errors.hpp"

namespace ttlab {

namespace {

Mat2 rotation_matrix(double a) {
    const double c = std::cos(a), s = std::sin(a);
    return {c, -s, s, c};
}

void require_in_disc(Vec2 x, const char* what) {
    if (!(norm(x) <= 1.0 + disc_slack)) {
        std::ostringstream os;
        os << what << ": point (" << x.x << ", " << x.y << ") lies outside the closed unit disc";
        throw DomainError(os.str());
    }
}

}  // namespace

// ---------------------------------------------------------------- DiscDiffeo

DiscDiffeo DiscDiffeo::identity() { return {}; }

DiscDiffeo DiscDiffeo::rotation(double angle) {
    DiscDiffeo d;
    d.kind_ = Kind::rotation;
    d.angle_ = angle;
    return d;
}

DiscDiffeo DiscDiffeo::radial_bump(double eps) {
    if (!(std::abs(eps) < 0.5)) {
        throw InvalidDiffeoError("radial_bump requires |eps| < 1/2, got " + std::to_string(eps));
    }
    DiscDiffeo d;
    d.kind_ = Kind::radial_bump;
    d.eps_ = eps;
    return d;
}

DiscDiffeo DiscDiffeo::boundary_free(double angle, double eps) {
    DiscDiffeo d = radial_bump(eps);
    d.kind_ = Kind::boundary_free;
    d.angle_ = angle;
    return d;
}

DiscDiffeo DiscDiffeo::compose(const DiscDiffeo& outer, const DiscDiffeo& inner) {
    DiscDiffeo d;
    d.kind_ = Kind::compose;
    d.outer_ = std::make_shared<const DiscDiffeo>(outer);
    d.inner_ = std::make_shared<const DiscDiffeo>(inner);
    return d;
}

Vec2 DiscDiffeo::apply(Vec2 x) const {
    switch (kind_) {
        case Kind::identity:
            return x;
        case Kind::rotation:
            return rotation_matrix(angle_) * x;
        case Kind::radial_bump:
            return (1.0 + eps_ * (1.0 - norm2(x))) * x;
        case Kind::boundary_free:
            return rotation_matrix(angle_) * ((1.0 + eps_ * (1.0 - norm2(x))) * x);
        case Kind::compose:
            return outer_->apply(inner_->apply(x));
    }
    return x;
}

Mat2 DiscDiffeo::jacobian(Vec2 x) const {
    auto bump_jacobian = [&](Vec2 p) {
        // D[x f(|x|^2)] = f I + 2 f' x x^T with f = 1 + eps(1 - r^2), f' = -eps
        const double f = 1.0 + eps_ * (1.0 - norm2(p));
        return Mat2{f - 2.0 * eps_ * p.x * p.x, -2.0 * eps_ * p.x * p.y,
                    -2.0 * eps_ * p.x * p.y, f - 2.0 * eps_ * p.y * p.y};
    };
    switch (kind_) {
        case Kind::identity:
            return Mat2::identity();
        case Kind::rotation:
            return rotation_matrix(angle_);
        case Kind::radial_bump:
            return bump_jacobian(x);
        case Kind::boundary_free:
            return rotation_matrix(angle_) * bump_jacobian(x);
        case Kind::compose:
            return outer_->jacobian(inner_->apply(x)) * inner_->jacobian(x);
    }
    return Mat2::identity();
}

Vec2 DiscDiffeo::inverse(Vec2 y) const {
    auto bump_inverse = [&](Vec2 q) {
        const double r = norm(q);
        if (r == 0.0) return q;
        // solve rho (1 + eps (1 - rho^2)) = r; the map is increasing for |eps| < 1/2
        double rho = r;
        for (int it = 0; it < 60; ++it) {
            const double f = rho * (1.0 + eps_ * (1.0 - rho * rho)) - r;
            const double df = 1.0 + eps_ - 3.0 * eps_ * rho * rho;
            const double step = f / df;
            rho -= step;
            if (std::abs(step) < 1e-16) break;
        }
        return (rho / r) * q;
    };
    switch (kind_) {
        case Kind::identity:
            return y;
        case Kind::rotation:
            return rotation_matrix(-angle_) * y;
        case Kind::radial_bump:
            return bump_inverse(y);
        case Kind::boundary_free:
            return bump_inverse(rotation_matrix(-angle_) * y);
        case Kind::compose:
            return inner_->inverse(outer_->inverse(y));
    }
    return y;
}

bool DiscDiffeo::fixes_boundary() const {
    switch (kind_) {
        case Kind::identity:
        case Kind::radial_bump:
            return true;
        case Kind::rotation:
        case Kind::boundary_free:
            return std::abs(wrap_difference(angle_)) == 0.0;
        case Kind::compose: {
            // Checked on a dense sample; both factors map the circle to itself.
            for (int i = 0; i < 720; ++i) {
                const Vec2 z = unit_circle(2.0 * std::numbers::pi * i / 720.0);
                if (norm(apply(z) - z) > 1e-12) return false;
            }
            return true;
        }
    }
    return false;
}

bool DiscDiffeo::is_radial() const {
    switch (kind_) {
        case Kind::identity:
        case Kind::rotation:
        case Kind::radial_bump:
        case Kind::boundary_free:
            return true;
        case Kind::compose:
            return outer_->is_radial() && inner_->is_radial();
    }
    return false;
}

double DiscDiffeo::min_jacobian_det(int n) const {
    double lo = std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            const Vec2 x{-1.0 + 2.0 * i / (n - 1), -1.0 + 2.0 * j / (n - 1)};
            if (norm(x) > 1.0) continue;
            lo = std::min(lo, jacobian(x).det());
        }
    }
    for (int i = 0; i < 4 * n; ++i) {
        lo = std::min(lo, jacobian(unit_circle(2.0 * std::numbers::pi * i / (4 * n))).det());
    }
    return lo;
}

void DiscDiffeo::validate(int n) const {
    const double d = min_jacobian_det(n);
    if (!(d > 0.0)) {
        throw InvalidDiffeoError("diffeomorphism Jacobian determinant is not positive (min " +
                                 std::to_string(d) + ")");
    }
}

nlohmann::json DiscDiffeo::to_json() const {
    switch (kind_) {
        case Kind::identity:
            return {{"kind", "identity"}};
        case Kind::rotation:
            return {{"kind", "rotation"}, {"angle", angle_}};
        case Kind::radial_bump:
            return {{"kind", "radial_bump"}, {"epsilon", eps_}};
        case Kind::boundary_free:
            return {{"kind", "boundary_free"}, {"angle", angle_}, {"epsilon", eps_}};
        case Kind::compose:
            return {{"kind", "compose"}, {"outer", outer_->to_json()}, {"inner", inner_->to_json()}};
    }
    return {};
}

DiscDiffeo DiscDiffeo::from_json(const nlohmann::json& j) {
    try {
        const std::string kind = j.at("kind").get<std::string>();
        if (kind == "identity") return identity();
        if (kind == "rotation") return rotation(j.at("angle").get<double>());
        if (kind == "radial_bump") return radial_bump(j.at("epsilon").get<double>());
        if (kind == "boundary_free")
            return boundary_free(j.at("angle").get<double>(), j.at("epsilon").get<double>());
        if (kind == "compose") return compose(from_json(j.at("outer")), from_json(j.at("inner")));
        throw ConfigError("unknown diffeo kind '" + kind + "'");
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("diffeo descriptor: ") + e.what());
    }
}

// --------------------------------------------------------------- MetricModel

MetricModel MetricModel::euclidean() { return {}; }

MetricModel MetricModel::constant_curvature(double curvature) {
    if (!(curvature > -1.0 && curvature < 1.0)) {
        throw DomainError("constant_curvature requires -1 < K < 1, got " + std::to_string(curvature));
    }
    MetricModel m;
    m.kind_ = Kind::constant_curvature;
    m.curvature_ = curvature;
    return m;
}

MetricModel MetricModel::conformal_bump(Vec2 center, double amplitude, double width) {
    if (!(width > 0.0) || !std::isfinite(amplitude)) {
        throw DomainError("conformal_bump requires width > 0 and finite amplitude");
    }
    MetricModel m;
    m.kind_ = Kind::conformal_bump;
    m.center_ = center;
    m.amplitude_ = amplitude;
    m.width_ = width;
    return m;
}

MetricModel pullback_metric(const MetricModel& base, const DiscDiffeo& phi) {
    phi.validate();
    MetricModel m;
    m.kind_ = MetricModel::Kind::pullback;
    m.fd_step_ = base.fd_step_;
    m.base_ = std::make_shared<const MetricModel>(base);
    m.diffeo_ = std::make_shared<const DiscDiffeo>(phi);
    return m;
}

MetricModel MetricModel::with_fd_step(double h) const {
    if (!(h > 0.0)) throw DomainError("fd_step must be positive");
    MetricModel m = *this;
    m.fd_step_ = h;
    return m;
}

MetricModel MetricModel::scaled(double s) const {
    if (!(s > 0.0)) throw DomainError("metric scale must be positive");
    MetricModel m = *this;
    m.scale_ *= s;
    return m;
}

bool MetricModel::is_rotationally_symmetric() const {
    switch (kind_) {
        case Kind::euclidean:
        case Kind::constant_curvature:
            return true;
        case Kind::conformal_bump:
            return amplitude_ == 0.0 || (center_.x == 0.0 && center_.y == 0.0);
        case Kind::pullback:
            return base_->is_rotationally_symmetric() && diffeo_->is_radial();
    }
    return false;
}

double MetricModel::log_factor(Vec2 x) const {
    switch (kind_) {
        case Kind::constant_curvature:
            return std::log(2.0) - std::log1p(curvature_ * norm2(x));
        case Kind::conformal_bump:
            return amplitude_ * std::exp(-norm2(x - center_) / (2.0 * width_ * width_));
        default:
            return 0.0;
    }
}

Vec2 MetricModel::log_factor_gradient(Vec2 x) const {
    switch (kind_) {
        case Kind::constant_curvature:
            return (-2.0 * curvature_ / (1.0 + curvature_ * norm2(x))) * x;
        case Kind::conformal_bump: {
            const Vec2 d = x - center_;
            const double w2 = width_ * width_;
            const double phi = amplitude_ * std::exp(-norm2(d) / (2.0 * w2));
            return (-phi / w2) * d;
        }
        default:
            return {};
    }
}

double MetricModel::log_factor_laplacian(Vec2 x) const {
    switch (kind_) {
        case Kind::constant_curvature: {
            const double q = 1.0 + curvature_ * norm2(x);
            return -4.0 * curvature_ / (q * q);
        }
        case Kind::conformal_bump: {
            const Vec2 d = x - center_;
            const double w2 = width_ * width_;
            const double phi = amplitude_ * std::exp(-norm2(d) / (2.0 * w2));
            return phi * (norm2(d) / (w2 * w2) - 2.0 / w2);
        }
        default:
            return 0.0;
    }
}

Mat2 MetricModel::metric(Vec2 x) const {
    if (kind_ == Kind::pullback) {
        const Mat2 j = diffeo_->jacobian(x);
        Mat2 g = scale_ * (j.transposed() * base_->metric(diffeo_->apply(x)) * j);
        g.a21 = g.a12;  // rounding in the product breaks exact symmetry
        return g;
    }
    if (kind_ == Kind::euclidean) return Mat2::scalar(scale_);
    return Mat2::scalar(scale_ * std::exp(2.0 * log_factor(x)));
}

Christoffel MetricModel::christoffel(Vec2 x) const {
    if (kind_ == Kind::pullback) return christoffel_fd(x);
    Christoffel c;
    if (kind_ == Kind::euclidean) return c;
    // Γ^k_ij = δ^k_i ∂_j φ + δ^k_j ∂_i φ - δ_ij ∂_k φ
    const Vec2 d = log_factor_gradient(x);
    auto& g = c.gamma;
    g[0][0][0] = d.x;
    g[0][0][1] = g[0][1][0] = d.y;
    g[0][1][1] = -d.x;
    g[1][0][0] = -d.y;
    g[1][0][1] = g[1][1][0] = d.x;
    g[1][1][1] = d.y;
    return c;
}

Christoffel MetricModel::christoffel_fd(Vec2 x) const {
    const double h = fd_step_;
    const Mat2 g = metric(x);
    const double det = g.det();
    if (!(std::abs(det) > 0.0) || !std::isfinite(det)) {
        throw NumericError("singular metric while computing Christoffel symbols");
    }
    const Mat2 ginv = g.inverse();
    // dg[l] = ∂_l g
    const std::array<Mat2, 2> dg = {
        (1.0 / (2.0 * h)) * (metric({x.x + h, x.y}) - metric({x.x - h, x.y})),
        (1.0 / (2.0 * h)) * (metric({x.x, x.y + h}) - metric({x.x, x.y - h})),
    };
    Christoffel c;
    for (int i = 0; i < 2; ++i) {
        for (int j = i; j < 2; ++j) {
            // first kind: Γ_{l,ij} = ½(∂_i g_jl + ∂_j g_il - ∂_l g_ij)
            std::array<double, 2> first{};
            for (int l = 0; l < 2; ++l) {
                first[l] = 0.5 * (dg[i](j, l) + dg[j](i, l) - dg[l](i, j));
            }
            for (int k = 0; k < 2; ++k) {
                const double v = ginv(k, 0) * first[0] + ginv(k, 1) * first[1];
                c.gamma[k][i][j] = v;
                c.gamma[k][j][i] = v;
            }
        }
    }
    return c;
}

Vec2 MetricModel::geodesic_quadratic(Vec2 x, Vec2 v) const {
    switch (kind_) {
        case Kind::euclidean:
            return {};
        case Kind::constant_curvature:
        case Kind::conformal_bump: {
            // Γ(v, v) = 2 (∇φ·v) v - |v|^2 ∇φ
            const Vec2 d = log_factor_gradient(x);
            return 2.0 * dot(d, v) * v - norm2(v) * d;
        }
        case Kind::pullback:
            return christoffel_fd(x).contract(v);
    }
    return {};
}

double MetricModel::gaussian_curvature(Vec2 x) const {
    if (kind_ == Kind::pullback) {
        // curvature is an isometry invariant
        return base_->gaussian_curvature(diffeo_->apply(x)) / scale_;
    }
    if (kind_ == Kind::euclidean) return 0.0;
    return -std::exp(-2.0 * log_factor(x)) * log_factor_laplacian(x) / scale_;
}

nlohmann::json MetricModel::to_json() const {
    nlohmann::json j;
    switch (kind_) {
        case Kind::euclidean:
            j = {{"kind", "euclidean"}};
            break;
        case Kind::constant_curvature:
            j = {{"kind", "constant_curvature"}, {"K", curvature_}};
            break;
        case Kind::conformal_bump:
            j = {{"kind", "conformal_bump"},
                 {"center", {center_.x, center_.y}},
                 {"amplitude", amplitude_},
                 {"width", width_}};
            break;
        case Kind::pullback:
            j = {{"kind", "pullback"}, {"base", base_->to_json()}, {"diffeo", diffeo_->to_json()}};
            break;
    }
    j["fd_step"] = fd_step_;
    if (scale_ != 1.0) j["scale"] = scale_;
    return j;
}

MetricModel MetricModel::from_json(const nlohmann::json& j) {
    try {
        const std::string kind = j.at("kind").get<std::string>();
        MetricModel m;
        if (kind == "euclidean") {
            m = euclidean();
        } else if (kind == "constant_curvature") {
            m = constant_curvature(j.at("K").get<double>());
        } else if (kind == "conformal_bump") {
            const auto& c = j.at("center");
            if (!c.is_array() || c.size() != 2) throw ConfigError("conformal_bump.center must be [x, y]");
            m = conformal_bump({c[0].get<double>(), c[1].get<double>()}, j.at("amplitude").get<double>(),
                               j.at("width").get<double>());
        } else if (kind == "pullback") {
            m = pullback_metric(from_json(j.at("base")), DiscDiffeo::from_json(j.at("diffeo")));
        } else {
            throw ConfigError("unknown metric kind '" + kind + "'");
        }
        if (j.contains("fd_step")) m = m.with_fd_step(j.at("fd_step").get<double>());
        if (j.contains("scale")) m = m.scaled(j.at("scale").get<double>());
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("metric descriptor: ") + e.what());
    }
}

std::string MetricModel::describe() const {
    std::ostringstream os;
    switch (kind_) {
        case Kind::euclidean:
            os << "euclidean";
            break;
        case Kind::constant_curvature:
            os << "constant_curvature(K=" << curvature_ << ")";
            break;
        case Kind::conformal_bump:
            os << "conformal_bump(c=(" << center_.x << "," << center_.y << "), A=" << amplitude_
               << ", w=" << width_ << ")";
            break;
        case Kind::pullback:
            os << "pullback(" << base_->describe() << ", " << diffeo_->to_json().dump() << ")";
            break;
    }
    if (scale_ != 1.0) os << "*" << scale_;
    return os.str();
}

// ------------------------------------------------------------ free functions

Mat2 eval_metric(const MetricModel& model, Vec2 x) {
    require_in_disc(x, "eval_metric");
    return model.metric(x);
}

Christoffel christoffel(const MetricModel& model, Vec2 x) {
    require_in_disc(x, "christoffel");
    const Mat2 g = model.metric(x);
    if (!(g.det() > 0.0)) throw NumericError("singular metric matrix");
    return model.christoffel(x);
}

double gaussian_curvature(const MetricModel& model, Vec2 x) {
    require_in_disc(x, "gaussian_curvature");
    return model.gaussian_curvature(x);
}

double min_metric_eigenvalue(const MetricModel& model, int n) {
    double lo = std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            const Vec2 x{-1.0 + 2.0 * i / (n - 1), -1.0 + 2.0 * j / (n - 1)};
            if (norm(x) > 1.0) continue;
            lo = std::min(lo, min_eigenvalue(model.metric(x)));
        }
    }
    return lo;
}

}  // namespace ttlab
