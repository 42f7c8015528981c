#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <unordered_map>

#include "ttlab/geodesic.hpp"

namespace ttlab {

namespace {

// Crossings closer than this (in arclength) to either end of a trace sit on
// the boundary and do not count as interior intersections.
constexpr double end_margin = 1e-6;

struct Box {
    double x0, x1, y0, y1;
};

bool overlap(const Box& a, const Box& b, double pad) {
    return a.x0 <= b.x1 + pad && b.x0 <= a.x1 + pad && a.y0 <= b.y1 + pad && b.y0 <= a.y1 + pad;
}

/// Box of the Bézier control polygon of the Hermite segment; contains the curve.
Box segment_box(const TraceSample& a, const TraceSample& b) {
    const double dt = b.t - a.t;
    const std::array<Vec2, 4> p{a.x, a.x + (dt / 3.0) * a.v, b.x - (dt / 3.0) * b.v, b.x};
    Box bx{p[0].x, p[0].x, p[0].y, p[0].y};
    for (const Vec2& q : p) {
        bx.x0 = std::min(bx.x0, q.x);
        bx.x1 = std::max(bx.x1, q.x);
        bx.y0 = std::min(bx.y0, q.y);
        bx.y1 = std::max(bx.y1, q.y);
    }
    return bx;
}

Vec2 hermite(const TraceSample& a, const TraceSample& b, double s, Vec2& deriv) {
    const double dt = b.t - a.t;
    const double s2 = s * s, s3 = s2 * s;
    deriv = (6 * s2 - 6 * s) * a.x + ((3 * s2 - 4 * s + 1) * dt) * a.v + (-6 * s2 + 6 * s) * b.x +
            ((3 * s2 - 2 * s) * dt) * b.v;
    return (2 * s3 - 3 * s2 + 1) * a.x + ((s3 - 2 * s2 + s) * dt) * a.v + (-2 * s3 + 3 * s2) * b.x +
           ((s3 - s2) * dt) * b.v;
}

struct SegmentHit {
    double t_a, t_b;
    Vec2 point;
};

/// Newton on A(s) = B(u) for two Hermite segments, seeded by the chord crossing.
bool segment_crossing(const TraceSample& a0, const TraceSample& a1, const TraceSample& b0, const TraceSample& b1,
                      double tol, SegmentHit& hit) {
    const Vec2 da = a1.x - a0.x, db = b1.x - b0.x;
    const double den = cross(da, db);
    double s = 0.5, u = 0.5;
    if (std::abs(den) > 1e-300) {
        const Vec2 w = b0.x - a0.x;
        s = std::clamp(cross(w, db) / den, -0.5, 1.5);
        u = std::clamp(cross(w, da) / den, -0.5, 1.5);
    }
    Vec2 pa, pb, ta, tb;
    double res = 0.0;
    for (int it = 0; it < 20; ++it) {
        pa = hermite(a0, a1, s, ta);
        pb = hermite(b0, b1, u, tb);
        const Vec2 g = pa - pb;
        res = norm(g);
        if (res < 1e-14) break;
        // [ta, -tb] (ds, du) = -g
        const double det = cross(ta, -1.0 * tb);
        if (!(std::abs(det) > 1e-300)) break;
        const double ds = -(g.x * (-tb.y) - (-tb.x) * g.y) / det;
        const double du = -(ta.x * g.y - ta.y * g.x) / det;
        s += ds;
        u += du;
        if (s < -1.0 || s > 2.0 || u < -1.0 || u > 2.0) return false;
        if (std::abs(ds) + std::abs(du) < 1e-15) {
            pa = hermite(a0, a1, s, ta);
            pb = hermite(b0, b1, u, tb);
            res = norm(pa - pb);
            break;
        }
    }
    constexpr double slack = 1e-9;
    if (s < -slack || s > 1.0 + slack || u < -slack || u > 1.0 + slack) return false;
    if (!(res <= tol)) return false;
    s = std::clamp(s, 0.0, 1.0);
    u = std::clamp(u, 0.0, 1.0);
    hit.t_a = a0.t + s * (a1.t - a0.t);
    hit.t_b = b0.t + u * (b1.t - b0.t);
    hit.point = 0.5 * (pa + pb);
    return true;
}

bool interior(const GeodesicTrace& tr, double t) { return t > end_margin && t < tr.exit_time - end_margin; }

Intersection::Kind endpoint_relation(const GeodesicTrace& a, const GeodesicTrace& b, double tol) {
    if (norm(a.start_point() - b.exit_point()) <= tol && norm(a.exit_point() - b.start_point()) <= tol) {
        return Intersection::Kind::reversal;
    }
    if (norm(a.start_point() - b.start_point()) <= tol && norm(a.exit_point() - b.exit_point()) <= tol) {
        return Intersection::Kind::coincident;
    }
    return Intersection::Kind::none;
}

}  // namespace

Intersection trace_intersection(const GeodesicTrace& a, const GeodesicTrace& b, double tol) {
    Intersection out;
    if (const auto rel = endpoint_relation(a, b, tol); rel != Intersection::Kind::none) {
        out.kind = rel;
        return out;
    }
    const auto& sa = a.samples;
    const auto& sb = b.samples;
    std::vector<Box> boxes_b;
    boxes_b.reserve(sb.size());
    for (std::size_t j = 0; j + 1 < sb.size(); ++j) boxes_b.push_back(segment_box(sb[j], sb[j + 1]));

    bool found = false;
    for (std::size_t i = 0; i + 1 < sa.size(); ++i) {
        const Box ba = segment_box(sa[i], sa[i + 1]);
        for (std::size_t j = 0; j + 1 < sb.size(); ++j) {
            if (!overlap(ba, boxes_b[j], tol)) continue;
            SegmentHit h;
            if (!segment_crossing(sa[i], sa[i + 1], sb[j], sb[j + 1], tol, h)) continue;
            if (!interior(a, h.t_a) || !interior(b, h.t_b)) continue;
            if (!found || h.t_a < out.t_a) {
                out.kind = Intersection::Kind::point;
                out.t_a = h.t_a;
                out.t_b = h.t_b;
                out.point = h.point;
                found = true;
            }
        }
    }
    return out;
}

std::vector<PairIntersection> all_intersections(std::span<const GeodesicTrace> traces, double tol) {
    const std::size_t n = traces.size();
    std::unordered_map<std::uint64_t, Intersection> hits;
    auto key = [](std::size_t i, std::size_t j) { return (static_cast<std::uint64_t>(i) << 32) | j; };

    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const auto rel = endpoint_relation(traces[i], traces[j], tol);
            if (rel != Intersection::Kind::none) hits[key(i, j)].kind = rel;
        }
    }

    constexpr int cells = 96;
    const double lo = -1.0 - 1e-3, width = (2.0 + 2e-3) / cells;
    struct Entry {
        std::uint32_t trace;
        std::uint32_t seg;
        Box box;
    };
    std::vector<std::vector<Entry>> grid(static_cast<std::size_t>(cells) * cells);
    auto cell_of = [&](double v) { return std::clamp(static_cast<int>((v - lo) / width), 0, cells - 1); };
    for (std::size_t i = 0; i < n; ++i) {
        const auto& s = traces[i].samples;
        for (std::size_t k = 0; k + 1 < s.size(); ++k) {
            const Box b = segment_box(s[k], s[k + 1]);
            for (int cx = cell_of(b.x0 - tol); cx <= cell_of(b.x1 + tol); ++cx) {
                for (int cy = cell_of(b.y0 - tol); cy <= cell_of(b.y1 + tol); ++cy) {
                    grid[static_cast<std::size_t>(cx) * cells + cy].push_back(
                        {static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(k), b});
                }
            }
        }
    }

    for (const auto& cell : grid) {
        for (std::size_t p = 0; p < cell.size(); ++p) {
            for (std::size_t q = p + 1; q < cell.size(); ++q) {
                const Entry& ep = cell[p];
                const Entry& eq = cell[q];
                if (ep.trace == eq.trace) continue;
                const Entry& e1 = ep.trace < eq.trace ? ep : eq;
                const Entry& e2 = ep.trace < eq.trace ? eq : ep;
                const auto k = key(e1.trace, e2.trace);
                const auto found = hits.find(k);
                if (found != hits.end()) continue;
                if (!overlap(e1.box, e2.box, tol)) continue;
                const auto& s1 = traces[e1.trace].samples;
                const auto& s2 = traces[e2.trace].samples;
                SegmentHit h;
                if (!segment_crossing(s1[e1.seg], s1[e1.seg + 1], s2[e2.seg], s2[e2.seg + 1], tol, h)) continue;
                if (!interior(traces[e1.trace], h.t_a) || !interior(traces[e2.trace], h.t_b)) continue;
                Intersection x;
                x.kind = Intersection::Kind::point;
                x.t_a = h.t_a;
                x.t_b = h.t_b;
                x.point = h.point;
                hits.emplace(k, x);
            }
        }
    }

    std::vector<PairIntersection> out;
    out.reserve(hits.size());
    for (const auto& [k, x] : hits) out.push_back({static_cast<std::size_t>(k >> 32), k & 0xffffffffu, x});
    std::sort(out.begin(), out.end(), [](const auto& l, const auto& r) { return l.a != r.a ? l.a < r.a : l.b < r.b; });
    return out;
}

}  // namespace ttlab
