#include "ttlab/inversion.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "ttlab/errors.hpp"
#include "ttlab/parallel.hpp"

namespace ttlab {

namespace {

constexpr double inf = std::numeric_limits<double>::infinity();
constexpr double two_pi = 2.0 * M_PI;

void require_same_grid(const TravelTimeSet& A, const TravelTimeSet& B) {
    if (A.m != B.m) throw ShapeError("datasets sampled on different grids (" + std::to_string(A.m) + " vs " + std::to_string(B.m) + ")");
    if (A.kind != B.kind) throw ShapeError("cannot compare " + to_string(A.kind) + " with " + to_string(B.kind));
}

/// Sup-norm distance, abandoned as soon as it reaches `bound`.
double bounded_sup(const double* f, const double* g, std::size_t m, DataKind kind, double bound) {
    if (kind == DataKind::travel_time) {
        double s = 0.0;
        for (std::size_t j = 0; j < m; ++j) {
            s = std::max(s, std::abs(f[j] - g[j]));
            if (s >= bound) return s;
        }
        return s;
    }
    double hi = -inf, lo = inf;
    for (std::size_t j = 0; j < m; ++j) {
        const double d = f[j] - g[j];
        hi = std::max(hi, d);
        lo = std::min(lo, d);
        if (hi - lo >= bound) return hi - lo;
    }
    return m ? hi - lo : 0.0;
}

void atomic_max(std::atomic<double>& target, double value) {
    double cur = target.load();
    while (value > cur && !target.compare_exchange_weak(cur, value)) {
    }
}

/// sup_{a ∈ A} inf_{b ∈ B} ‖a - b‖.
double directed_hausdorff(const TravelTimeSet& A, const TravelTimeSet& B, int workers) {
    std::atomic<double> h{0.0};
    const auto m = static_cast<std::size_t>(A.m);
    parallel_for(
        A.size(),
        [&](std::size_t i) {
            const double* f = A.rows[i].data();
            double best = inf;
            for (const auto& row : B.rows) {
                // Once best drops below the running maximum this row cannot raise it.
                best = std::min(best, bounded_sup(f, row.data(), m, A.kind, best));
                if (best <= h.load(std::memory_order_relaxed)) return;
            }
            atomic_max(h, best);
        },
        workers);
    return h.load();
}

}  // namespace

double sup_norm_distance(std::span<const double> f, std::span<const double> g, DataKind kind) {
    if (f.size() != g.size()) throw ShapeError("sup_norm_distance: functions sampled on different grids");
    return bounded_sup(f.data(), g.data(), f.size(), kind, inf);
}

double hausdorff_distance(const TravelTimeSet& A, const TravelTimeSet& B, int workers) {
    if (A.size() == 0 || B.size() == 0) throw DomainError("Hausdorff distance of an empty set");
    require_same_grid(A, B);
    return std::max(directed_hausdorff(A, B, workers), directed_hausdorff(B, A, workers));
}

// Finite metric spaces ------------------------------------------------------------

FiniteMetricSpace FiniteMetricSpace::from_matrix(const std::vector<std::vector<double>>& d) {
    FiniteMetricSpace s(d.size());
    for (std::size_t i = 0; i < d.size(); ++i) {
        if (d[i].size() != d.size()) throw ShapeError("distance matrix is not square");
        if (d[i][i] != 0.0) throw ShapeError("distance matrix has a nonzero diagonal");
        for (std::size_t j = 0; j < d.size(); ++j) {
            if (d[i][j] != d[j][i]) throw ShapeError("distance matrix is not symmetric");
            s.d_[i * s.k_ + j] = d[i][j];
        }
    }
    return s;
}

double FiniteMetricSpace::triangle_violation() const {
    double worst = 0.0;
    for (std::size_t i = 0; i < k_; ++i)
        for (std::size_t j = 0; j < k_; ++j)
            for (std::size_t l = 0; l < k_; ++l) worst = std::max(worst, (*this)(i, l) - (*this)(i, j) - (*this)(j, l));
    return worst;
}

FiniteMetricSpace FiniteMetricSpace::subspace(std::span<const std::size_t> indices) const {
    FiniteMetricSpace s(indices.size());
    for (std::size_t i = 0; i < indices.size(); ++i)
        for (std::size_t j = 0; j < indices.size(); ++j) s.d_[i * s.k_ + j] = (*this)(indices[i], indices[j]);
    return s;
}

FiniteMetricSpace embed_as_metric_space(const TravelTimeSet& data, std::vector<std::string>* warnings, int workers) {
    if (data.size() == 0) throw DomainError("cannot embed an empty dataset");
    FiniteMetricSpace s(data.size());
    parallel_for(
        data.size(),
        [&](std::size_t i) {
            for (std::size_t j = i + 1; j < data.size(); ++j) s.set(i, j, sup_norm_distance(data.rows[i], data.rows[j], data.kind));
        },
        workers);
    if (warnings) {
        const double v = s.triangle_violation();
        if (v > 1e-4) {
            std::ostringstream os;
            os << "inconsistent data: triangle inequality violated by " << v
               << " (grid too coarse or metric not simple)";
            warnings->push_back(os.str());
        }
    }
    return s;
}

double distortion(const FiniteMetricSpace& A, const FiniteMetricSpace& B,
                  std::span<const std::pair<std::size_t, std::size_t>> pairs) {
    double worst = 0.0;
    for (std::size_t p = 0; p < pairs.size(); ++p) {
        for (std::size_t q = p + 1; q < pairs.size(); ++q) {
            worst = std::max(worst, std::abs(A(pairs[p].first, pairs[q].first) - B(pairs[p].second, pairs[q].second)));
        }
    }
    return worst;
}

Correspondence nearest_neighbor_match(const TravelTimeSet& A, const TravelTimeSet& B, const MatchOptions& options) {
    return nearest_neighbor_match(A, B, embed_as_metric_space(A, nullptr, options.workers),
                                  embed_as_metric_space(B, nullptr, options.workers), options);
}

Correspondence nearest_neighbor_match(const TravelTimeSet& A, const TravelTimeSet& B, const FiniteMetricSpace& space_a,
                                      const FiniteMetricSpace& space_b, const MatchOptions& options) {
    if (A.size() == 0 || B.size() == 0) throw DomainError("cannot match an empty dataset");
    require_same_grid(A, B);
    if (space_a.size() != A.size() || space_b.size() != B.size()) throw ShapeError("embedded spaces do not fit the data");

    Correspondence c;
    c.pairs.resize(A.size());
    const auto m = static_cast<std::size_t>(A.m);
    parallel_for(
        A.size(),
        [&](std::size_t i) {
            double best = inf;
            std::size_t arg = 0;
            for (std::size_t j = 0; j < B.size(); ++j) {
                const double d = bounded_sup(A.rows[i].data(), B.rows[j].data(), m, A.kind, best);
                if (d < best) {
                    best = d;
                    arg = j;
                }
            }
            c.pairs[i] = {i, arg};
        },
        options.workers);
    c.distortion = distortion(space_a, space_b, c.pairs);

    if (A.kind == DataKind::travel_time) {
        auto vanishing_index = [&](const std::vector<double>& row) -> std::optional<int> {
            const auto it = std::min_element(row.begin(), row.end());
            if (*it > options.boundary_tolerance) return std::nullopt;
            return static_cast<int>(it - row.begin());
        };
        for (const auto& [i, j] : c.pairs) {
            const auto za = vanishing_index(A.rows[i]);
            if (!za) continue;
            ++c.boundary_rows;
            const auto zb = vanishing_index(B.rows[j]);
            const int gap = zb ? std::abs(*za - *zb) : A.m;
            if (std::min(gap, A.m - gap) > 1) ++c.boundary_mismatches;
        }
        c.boundary_check_passed = c.boundary_mismatches == 0;
    }
    return c;
}

double gh_upper_bound(const FiniteMetricSpace& A, const FiniteMetricSpace& B, const Correspondence& C) {
    std::vector<bool> covered(A.size(), false);
    for (const auto& [i, j] : C.pairs) {
        if (i >= A.size() || j >= B.size()) throw ShapeError("correspondence index out of range");
        covered[i] = true;
    }
    if (std::find(covered.begin(), covered.end(), false) != covered.end()) throw DomainError("correspondence does not cover A");
    return 0.5 * distortion(A, B, C.pairs);
}

namespace {

// Every correspondence contains graph(f) ∪ graph(g)ᵀ for some maps f: A -> B,
// g: B -> A, and distortion is monotone under inclusion, so searching map
// pairs reaches the infimum.
class GhSearch {
public:
    GhSearch(const FiniteMetricSpace& A, const FiniteMetricSpace& B) : A_(A), B_(B) {}

    double run() {
        best_ = inf;
        pairs_.clear();
        descend(0, 0.0);
        return 0.5 * best_;
    }

private:
    void descend(std::size_t var, double current) {
        const std::size_t na = A_.size(), nb = B_.size();
        if (var == na + nb) {
            best_ = current;
            return;
        }
        const bool forward = var < na;
        const std::size_t choices = forward ? nb : na;
        for (std::size_t c = 0; c < choices; ++c) {
            const std::pair<std::size_t, std::size_t> p = forward ? std::pair{var, c} : std::pair{c, var - na};
            double d = current;
            for (const auto& q : pairs_) {
                d = std::max(d, std::abs(A_(p.first, q.first) - B_(p.second, q.second)));
                if (d >= best_) break;
            }
            if (d >= best_) continue;
            pairs_.push_back(p);
            descend(var + 1, d);
            pairs_.pop_back();
        }
    }

    const FiniteMetricSpace& A_;
    const FiniteMetricSpace& B_;
    std::vector<std::pair<std::size_t, std::size_t>> pairs_;
    double best_ = inf;
};

}  // namespace

double exact_gromov_hausdorff(const FiniteMetricSpace& A, const FiniteMetricSpace& B) {
    if (A.size() == 0 || B.size() == 0) throw DomainError("Gromov–Hausdorff distance of an empty space");
    if (A.size() > 8 || B.size() > 8) throw DomainError("exact Gromov–Hausdorff search is limited to 8 points");
    return GhSearch(A, B).run();
}

// Broken scattering ------------------------------------------------------------------

double bsr_exit_time(const BrokenScatteringTable& table, int v) {
    const auto d = table.diagonal(v);
    if (!d) throw IncompleteTableError("no diagonal entry for grid vector " + std::to_string(v));
    return 0.5 * *d;
}

namespace {

using Bitset = std::vector<std::uint64_t>;

std::vector<Bitset> v_sets(const BrokenScatteringTable& table) {
    const auto n = static_cast<std::size_t>(table.size());
    const std::size_t words = (n + 63) / 64;
    std::vector<Bitset> sets(n, Bitset(words, 0));
    for (std::size_t v = 0; v < n; ++v) {
        auto& s = sets[v];
        if (table.diagonal(static_cast<int>(v))) s[v / 64] |= std::uint64_t{1} << (v % 64);
        for (const auto& e : table.row(static_cast<int>(v))) {
            const auto w = static_cast<std::size_t>(e.w);
            s[w / 64] |= std::uint64_t{1} << (w % 64);
        }
    }
    return sets;
}

double jaccard_distance(const Bitset& a, const Bitset& b) {
    std::size_t both = 0, either = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        both += static_cast<std::size_t>(std::popcount(a[i] & b[i]));
        either += static_cast<std::size_t>(std::popcount(a[i] | b[i]));
    }
    return either ? 1.0 - static_cast<double>(both) / static_cast<double>(either) : 1.0;
}

ScatteringMatch best_partner(const std::vector<Bitset>& sets, std::size_t v) {
    ScatteringMatch m;
    for (std::size_t w = 0; w < sets.size(); ++w) {
        if (w == v) continue;
        const double j = jaccard_distance(sets[v], sets[w]);
        if (j < m.jaccard) {
            m.runner_up = m.jaccard;
            m.jaccard = j;
            m.partner = static_cast<int>(w);
        } else {
            m.runner_up = std::min(m.runner_up, j);
        }
    }
    return m;
}

}  // namespace

ScatteringMatch bsr_scattering_relation(const BrokenScatteringTable& table, int v, const ScatteringOptions& options) {
    if (v < 0 || v >= table.size()) throw DomainError("grid vector index out of range");
    const ScatteringMatch m = best_partner(v_sets(table), static_cast<std::size_t>(v));
    if (m.partner < 0 || m.jaccard > options.jaccard_threshold) {
        std::ostringstream os;
        os << "no V-set within Jaccard distance " << options.jaccard_threshold << " of vector " << v << " (best "
           << m.jaccard << ")";
        throw AmbiguousScatteringError(os.str());
    }
    return m;
}

std::size_t RecoveredLensData::resolved() const {
    return static_cast<std::size_t>(std::count_if(scattering.begin(), scattering.end(), [](int s) { return s >= 0; }));
}

double RecoveredLensData::resolved_fraction() const {
    return scattering.empty() ? 0.0 : static_cast<double>(resolved()) / static_cast<double>(scattering.size());
}

RecoveredLensData recover_lens(const BrokenScatteringTable& table, const ScatteringOptions& options) {
    const auto n = static_cast<std::size_t>(table.size());
    const auto sets = v_sets(table);
    RecoveredLensData lens;
    lens.exit_time.assign(n, std::numeric_limits<double>::quiet_NaN());
    lens.scattering.assign(n, -1);
    lens.jaccard.assign(n, 1.0);
    lens.runner_up.assign(n, 1.0);
    parallel_for(
        n,
        [&](std::size_t v) {
            if (const auto d = table.diagonal(static_cast<int>(v))) lens.exit_time[v] = 0.5 * *d;
            const ScatteringMatch m = best_partner(sets, v);
            lens.jaccard[v] = m.jaccard;
            lens.runner_up[v] = m.runner_up;
            if (m.partner >= 0 && m.jaccard <= options.jaccard_threshold) lens.scattering[v] = m.partner;
        },
        options.workers);
    return lens;
}

namespace {

[[noreturn]] void missing(int v, int w, const char* why) {
    throw IncompleteTableError("table has no entry for pair (" + std::to_string(v) + ", " + std::to_string(w) + ")" + why);
}

}  // namespace

std::pair<double, double> bsr_travel_times(const BrokenScatteringTable& table, const RecoveredLensData& lens, int v1,
                                           int v2) {
    if (v1 == v2) throw DomainError("bsr_travel_times needs two distinct vectors");
    const auto T = table.get(v1, v2);
    if (!T) missing(v1, v2, "");
    auto sigma = [&](int v) { return v >= 0 && static_cast<std::size_t>(v) < lens.scattering.size() ? lens.scattering[static_cast<std::size_t>(v)] : -1; };
    if (sigma(v2) == v1 || sigma(v1) == v2) throw DomainError("reversal pairs have no single crossing");

    // t₁ = ½(T(v₁,v₂) - T(v₂,η₂) + T(v₁,η₂))
    if (const int eta2 = sigma(v2); eta2 >= 0) {
        const auto rev = table.get(v2, eta2);
        const auto through = table.get(v1, eta2);
        if (rev && through) {
            const double t1 = 0.5 * (*T - *rev + *through);
            return {t1, *T - t1};
        }
    }
    // t₂ = ½(T(v₁,v₂) - T(v₁,η₁) + T(v₂,η₁))
    const int eta1 = sigma(v1);
    if (eta1 < 0) {
        if (sigma(v2) < 0) throw IncompleteTableError("scattering unresolved for both " + std::to_string(v1) + " and " + std::to_string(v2));
        missing(v1, sigma(v2), " and the scattering image of the first vector is unresolved");
    }
    const auto rev = table.get(v1, eta1);
    if (!rev) missing(v1, eta1, "");
    const auto through = table.get(v2, eta1);
    if (!through) missing(v2, eta1, "");
    const double t2 = 0.5 * (*T - *rev + *through);
    return {*T - t2, t2};
}

Vec2 normal_flow_point(const MetricModel& model, double theta, double s, double step) {
    return integrate_to_length(model, lift_inward(model, {theta, 0.0}), s, step).x;
}

BsrTravelTimeResult bsr_to_travel_time_data(const BrokenScatteringTable& table, const RecoveredLensData& lens,
                                            const BsrTravelTimeOptions& options) {
    const DirectionGrid& grid = table.grid();
    if (options.s_divisions < 2) throw DomainError("s_divisions must be at least 2");
    const auto mid = std::find(grid.mu.begin(), grid.mu.end(), 0.0);
    if (mid == grid.mu.end()) throw DomainError("direction grid lacks the normal direction mu = 0");
    const int b0 = static_cast<int>(mid - grid.mu.begin());
    const int m = grid.m_theta;

    BsrTravelTimeResult out;
    out.data.kind = DataKind::travel_time;
    out.data.m = m;
    out.data.metric = table.metric;
    out.data.seed = table.seed;

    struct Sample {
        double s, t;
    };
    for (int a = 0; a < m; ++a) {
        const int v1 = grid.index(a, b0);
        const int partner = lens.scattering[static_cast<std::size_t>(v1)];
        if (partner < 0) throw IncompleteTableError("scattering of the normal vector at footpoint " + std::to_string(a) + " is unresolved");
        const double tau = bsr_exit_time(table, v1);
        const int far = grid.theta_index(partner);

        std::vector<std::vector<Sample>> by_receiver(static_cast<std::size_t>(m));
        for (const auto& e : table.row(v1)) {
            if (e.w == partner) continue;
            try {
                const auto [s, t] = bsr_travel_times(table, lens, v1, e.w);
                if (s > 0.0 && s < tau && t > 0.0) by_receiver[static_cast<std::size_t>(grid.theta_index(e.w))].push_back({s, t});
            } catch (const IncompleteTableError&) {
                ++out.skipped_pairs;
            }
        }
        // On a lens-adapted grid σ(u) for u at z₀ is a grid vector whose
        // geodesic ends exactly at z₀, giving the limit sample (s = 0, t = τ(u));
        // likewise at the far end of the normal geodesic with s = τ.
        if (grid.spacing == MuSpacing::lens_adapted) {
            for (const auto& [foot, s_end] : {std::pair{a, 0.0}, std::pair{far, tau}}) {
                for (int b = 0; b < grid.m_mu; ++b) {
                    const int u = grid.index(foot, b);
                    const int w = lens.scattering[static_cast<std::size_t>(u)];
                    if (b == b0 || w < 0) continue;
                    const int j = grid.theta_index(w);
                    if (j != a && j != far) by_receiver[static_cast<std::size_t>(j)].push_back({s_end, bsr_exit_time(table, u)});
                }
            }
        }
        for (auto& list : by_receiver) std::sort(list.begin(), list.end(), [](const Sample& x, const Sample& y) { return x.s < y.s; });

        for (int k = 1; k < options.s_divisions; ++k) {
            const double s0 = tau * k / options.s_divisions;
            std::vector<double> row(static_cast<std::size_t>(m), std::numeric_limits<double>::quiet_NaN());
            for (int j = 0; j < m; ++j) {
                if (j == a) {
                    row[static_cast<std::size_t>(j)] = s0;
                    continue;
                }
                if (j == far) {
                    row[static_cast<std::size_t>(j)] = tau - s0;
                    continue;
                }
                const auto& list = by_receiver[static_cast<std::size_t>(j)];
                const auto hi = std::lower_bound(list.begin(), list.end(), s0, [](const Sample& x, double s) { return x.s < s; });
                if (hi == list.end() || hi == list.begin()) {
                    if (hi != list.end() && hi->s == s0) row[static_cast<std::size_t>(j)] = hi->t;
                    continue;
                }
                const auto lo = hi - 1;
                const double w = (s0 - lo->s) / (hi->s - lo->s);
                row[static_cast<std::size_t>(j)] = (1.0 - w) * lo->t + w * hi->t;
            }

            // Gaps: linear interpolation in angle between the nearest covered receivers.
            std::size_t gaps = 0;
            std::vector<double> filled = row;
            for (int j = 0; j < m; ++j) {
                if (!std::isnan(row[static_cast<std::size_t>(j)])) continue;
                ++gaps;
                int left = 1, right = 1;
                while (left < m && std::isnan(row[static_cast<std::size_t>(((j - left) % m + m) % m)])) ++left;
                while (right < m && std::isnan(row[static_cast<std::size_t>((j + right) % m)])) ++right;
                const double fl = row[static_cast<std::size_t>(((j - left) % m + m) % m)];
                const double fr = row[static_cast<std::size_t>((j + right) % m)];
                filled[static_cast<std::size_t>(j)] = (right * fl + left * fr) / (left + right);
            }
            out.receivers += static_cast<std::size_t>(m);
            out.gaps += gaps;
            out.row_gaps.push_back(gaps);
            out.data.rows.push_back(std::move(filled));
            out.origins.emplace_back(a, s0);
        }
    }
    if (out.gaps > 0) {
        std::ostringstream os;
        os << "coverage gaps: " << out.gaps << " of " << out.receivers << " receivers filled by angular interpolation ("
           << 100.0 * out.gap_fraction() << "%)";
        out.warnings.push_back(os.str());
    }
    if (out.skipped_pairs > 0) out.warnings.push_back(std::to_string(out.skipped_pairs) + " crossing pairs skipped for missing entries");
    return out;
}

// Diffeomorphism-invariant distance -------------------------------------------------------

double CircleMap::operator()(double theta) const {
    double psi = theta + c;
    for (std::size_t k = 0; k < a.size(); ++k) psi += a[k] * std::sin((k + 1) * theta);
    for (std::size_t k = 0; k < b.size(); ++k) psi += b[k] * std::cos((k + 1) * theta);
    return psi;
}

bool CircleMap::monotone() const {
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) s += (k + 1) * std::abs(a[k]);
    for (std::size_t k = 0; k < b.size(); ++k) s += (k + 1) * std::abs(b[k]);
    return s < 1.0;
}

TravelTimeSet compose_with_circle_map(const TravelTimeSet& B, const CircleMap& psi) {
    const int m = B.m;
    std::vector<int> i0(static_cast<std::size_t>(m));
    std::vector<double> frac(static_cast<std::size_t>(m));
    for (int j = 0; j < m; ++j) {
        double x = wrap_angle(psi(two_pi * j / m)) / two_pi * m;
        // land exactly on nodes the map hits up to rounding
        if (std::abs(x - std::round(x)) <= 1e-9) x = std::round(x);
        const double fl = std::floor(x);
        i0[static_cast<std::size_t>(j)] = static_cast<int>(fl) % m;
        frac[static_cast<std::size_t>(j)] = x - fl;
    }
    TravelTimeSet out = B;
    for (std::size_t r = 0; r < B.size(); ++r) {
        const auto& src = B.rows[r];
        auto& dst = out.rows[r];
        for (std::size_t j = 0; j < static_cast<std::size_t>(m); ++j) {
            const auto k = static_cast<std::size_t>(i0[j]);
            dst[j] = (1.0 - frac[j]) * src[k] + frac[j] * src[(k + 1) % static_cast<std::size_t>(m)];
        }
    }
    return out;
}

namespace {

CircleMap unpack(const std::vector<double>& p, int K) {
    CircleMap psi;
    psi.c = p[0];
    psi.a.assign(p.begin() + 1, p.begin() + 1 + K);
    psi.b.assign(p.begin() + 1 + K, p.begin() + 1 + 2 * K);
    return psi;
}

struct NelderMead {
    template <class F>
    static std::pair<std::vector<double>, double> minimize(F&& f, std::vector<double> x0, const std::vector<double>& steps,
                                                           int max_evaluations, int& evaluations) {
        const std::size_t n = x0.size();
        std::vector<std::vector<double>> simplex{x0};
        for (std::size_t i = 0; i < n; ++i) {
            auto x = x0;
            x[i] += steps[i];
            simplex.push_back(std::move(x));
        }
        std::vector<double> values;
        for (const auto& x : simplex) values.push_back(f(x));
        evaluations += static_cast<int>(n + 1);

        std::vector<std::size_t> order(n + 1);
        while (evaluations < max_evaluations) {
            std::iota(order.begin(), order.end(), std::size_t{0});
            std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return values[i] < values[j]; });
            const std::size_t best = order.front(), worst = order.back(), second = order[n - 1];
            if (std::abs(values[worst] - values[best]) < 1e-10) {
                double size = 0.0;
                for (std::size_t i = 0; i <= n; ++i)
                    for (std::size_t d = 0; d < n; ++d) size = std::max(size, std::abs(simplex[i][d] - simplex[best][d]));
                if (size < 1e-7) break;
            }
            std::vector<double> centroid(n, 0.0);
            for (std::size_t i = 0; i <= n; ++i) {
                if (i == worst) continue;
                for (std::size_t d = 0; d < n; ++d) centroid[d] += simplex[i][d] / static_cast<double>(n);
            }
            auto along = [&](double t) {
                std::vector<double> x(n);
                for (std::size_t d = 0; d < n; ++d) x[d] = centroid[d] + t * (simplex[worst][d] - centroid[d]);
                return x;
            };
            auto reflected = along(-1.0);
            const double fr = f(reflected);
            ++evaluations;
            if (fr < values[best]) {
                auto expanded = along(-2.0);
                const double fe = f(expanded);
                ++evaluations;
                if (fe < fr) {
                    simplex[worst] = std::move(expanded);
                    values[worst] = fe;
                } else {
                    simplex[worst] = std::move(reflected);
                    values[worst] = fr;
                }
                continue;
            }
            if (fr < values[second]) {
                simplex[worst] = std::move(reflected);
                values[worst] = fr;
                continue;
            }
            auto contracted = fr < values[worst] ? along(-0.5) : along(0.5);
            const double fc = f(contracted);
            ++evaluations;
            if (fc < std::min(fr, values[worst])) {
                simplex[worst] = std::move(contracted);
                values[worst] = fc;
                continue;
            }
            for (std::size_t i = 0; i <= n; ++i) {
                if (i == best) continue;
                for (std::size_t d = 0; d < n; ++d) simplex[i][d] = simplex[best][d] + 0.5 * (simplex[i][d] - simplex[best][d]);
                values[i] = f(simplex[i]);
                ++evaluations;
            }
        }
        const auto best = static_cast<std::size_t>(std::min_element(values.begin(), values.end()) - values.begin());
        return {simplex[best], values[best]};
    }
};

}  // namespace

DiffeoSearchResult diffeo_invariant_distance(const TravelTimeSet& A, const TravelTimeSet& B,
                                             const DiffeoSearchOptions& options) {
    require_same_grid(A, B);
    if (options.harmonics < 0 || options.rotation_seeds < 1 || options.restarts < 1) {
        throw DomainError("invalid diffeomorphism search options");
    }
    const int K = options.harmonics;
    DiffeoSearchResult result;
    auto objective = [&](const std::vector<double>& p) {
        const CircleMap psi = unpack(p, K);
        if (!psi.monotone()) return inf;
        return hausdorff_distance(A, compose_with_circle_map(B, psi), options.workers);
    };

    std::vector<std::pair<double, double>> seeds;
    for (int r = 0; r < options.rotation_seeds; ++r) {
        std::vector<double> p(static_cast<std::size_t>(1 + 2 * K), 0.0);
        p[0] = two_pi * r / options.rotation_seeds;
        seeds.emplace_back(objective(p), p[0]);
        ++result.evaluations;
    }
    std::stable_sort(seeds.begin(), seeds.end());

    std::vector<double> steps(static_cast<std::size_t>(1 + 2 * K), 0.02);
    steps[0] = two_pi / options.rotation_seeds;
    result.value = inf;
    const int starts = std::min<int>(options.restarts, static_cast<int>(seeds.size()));
    for (int s = 0; s < starts; ++s) {
        std::vector<double> x0(static_cast<std::size_t>(1 + 2 * K), 0.0);
        x0[0] = seeds[static_cast<std::size_t>(s)].second;
        int evals = 0;
        auto [x, v] = NelderMead::minimize(objective, x0, steps, options.max_evaluations, evals);
        result.evaluations += evals;
        if (seeds[static_cast<std::size_t>(s)].first < v) {
            x = x0;
            v = seeds[static_cast<std::size_t>(s)].first;
        }
        if (v < result.value) {
            result.value = v;
            result.psi = unpack(x, K);
        }
    }
    result.psi.c = wrap_difference(result.psi.c);
    return result;
}

}  // namespace ttlab
