#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ttlab/survey.hpp"

namespace ttlab {

// Sup-norm geometry ------------------------------------------------------------

/// max_j |f_j - g_j| for travel time rows; for difference rows (potentials)
/// max_{i,j} |(f_i - f_j) - (g_i - g_j)|, which equals max(f - g) - min(f - g).
double sup_norm_distance(std::span<const double> f, std::span<const double> g, DataKind kind = DataKind::travel_time);

/// Hausdorff distance of two sets in the sampled sup norm. Exact; the
/// all-pairs search skips candidates that provably cannot change the result.
double hausdorff_distance(const TravelTimeSet& A, const TravelTimeSet& B, int workers = 0);

/// Symmetric matrix of pairwise distances with zero diagonal.
class FiniteMetricSpace {
public:
    FiniteMetricSpace() = default;
    explicit FiniteMetricSpace(std::size_t k) : k_(k), d_(k * k, 0.0) {}
    /// Throws ShapeError unless `d` is square, symmetric, with zero diagonal.
    static FiniteMetricSpace from_matrix(const std::vector<std::vector<double>>& d);

    std::size_t size() const { return k_; }
    double operator()(std::size_t i, std::size_t j) const { return d_[i * k_ + j]; }
    void set(std::size_t i, std::size_t j, double v) { d_[i * k_ + j] = d_[j * k_ + i] = v; }
    /// max over triples of d(i,k) - d(i,j) - d(j,k), or 0.
    double triangle_violation() const;
    FiniteMetricSpace subspace(std::span<const std::size_t> indices) const;

private:
    std::size_t k_ = 0;
    std::vector<double> d_;
};

/// Pairwise sup-norm distances of the rows. Appends a warning when the
/// triangle inequality fails by more than 1e-4.
FiniteMetricSpace embed_as_metric_space(const TravelTimeSet& data, std::vector<std::string>* warnings = nullptr,
                                        int workers = 0);

struct Correspondence {
    /// pairs[i] = (i, j): row i of A matched to row j of B.
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    double distortion = 0.0;
    /// Rows of A that vanish somewhere on the grid, i.e. boundary sources.
    std::size_t boundary_rows = 0;
    std::size_t boundary_mismatches = 0;
    bool boundary_check_passed = true;
};

/// max over matched pairs (i, j), (i', j') of |d_A(i, i') - d_B(j, j')|.
double distortion(const FiniteMetricSpace& A, const FiniteMetricSpace& B,
                  std::span<const std::pair<std::size_t, std::size_t>> pairs);

struct MatchOptions {
    /// A travel time row at most this small at some angle marks a boundary source.
    double boundary_tolerance = 1e-6;
    int workers = 0;
};

/// Each row of A matched to its sup-norm nearest row of B, lowest index on
/// ties. The boundary-fixing check applies to travel time data only.
Correspondence nearest_neighbor_match(const TravelTimeSet& A, const TravelTimeSet& B, const MatchOptions& options = {});
/// Same, with the induced spaces already embedded.
Correspondence nearest_neighbor_match(const TravelTimeSet& A, const TravelTimeSet& B, const FiniteMetricSpace& space_a,
                                      const FiniteMetricSpace& space_b, const MatchOptions& options = {});

/// ½ distortion(C): an upper bound for the Gromov–Hausdorff distance.
double gh_upper_bound(const FiniteMetricSpace& A, const FiniteMetricSpace& B, const Correspondence& C);

/// Exact Gromov–Hausdorff distance by branch and bound over pairs of maps
/// A -> B, B -> A. Throws DomainError above 8 points per space.
double exact_gromov_hausdorff(const FiniteMetricSpace& A, const FiniteMetricSpace& B);

// Broken scattering inversion ----------------------------------------------------

/// τ(v) = ½ T(v, v). Throws IncompleteTableError when the diagonal is missing.
double bsr_exit_time(const BrokenScatteringTable& table, int v);

struct ScatteringOptions {
    double jaccard_threshold = 0.05;
    int workers = 0;
};

struct ScatteringMatch {
    int partner = -1;
    double jaccard = 1.0;
    /// Best Jaccard distance among the remaining candidates.
    double runner_up = 1.0;
};

/// The grid vector whose V-set is closest to V(v) in Jaccard distance.
/// Throws AmbiguousScatteringError when that distance exceeds the threshold.
ScatteringMatch bsr_scattering_relation(const BrokenScatteringTable& table, int v, const ScatteringOptions& options = {});

struct RecoveredLensData {
    std::vector<double> exit_time;
    /// Grid index of σ(v), or -1 where unresolved.
    std::vector<int> scattering;
    std::vector<double> jaccard;
    std::vector<double> runner_up;

    std::size_t resolved() const;
    double resolved_fraction() const;
};

/// τ and σ for every grid vector.
RecoveredLensData recover_lens(const BrokenScatteringTable& table, const ScatteringOptions& options = {});

/// (t₁, t₂) with t₁ + t₂ = T(v₁, v₂), from the reversal η₂ = σ(v₂), or from
/// η₁ = σ(v₁) when an entry through η₂ is missing. Throws IncompleteTableError
/// naming the missing pair.
std::pair<double, double> bsr_travel_times(const BrokenScatteringTable& table, const RecoveredLensData& lens, int v1,
                                           int v2);

struct BsrTravelTimeOptions {
    /// The s-grid is s_k = k τ(ν(z₀)) / s_divisions, 0 < k < s_divisions.
    int s_divisions = 32;
};

struct BsrTravelTimeResult {
    /// Travel time data over the footpoint grid of the table, one row per
    /// (z₀, s₀) in `origins` order.
    TravelTimeData data;
    /// (θ index of z₀, s₀) per row.
    std::vector<std::pair<int, double>> origins;
    std::size_t receivers = 0;
    std::size_t gaps = 0;
    /// Gap-filled receivers per row.
    std::vector<std::size_t> row_gaps;
    std::size_t skipped_pairs = 0;
    std::vector<std::string> warnings;

    double gap_fraction() const { return receivers ? static_cast<double>(gaps) / static_cast<double>(receivers) : 0.0; }
};

/// Travel time functions of the points E(s₀, z₀) read off the table.
BsrTravelTimeResult bsr_to_travel_time_data(const BrokenScatteringTable& table, const RecoveredLensData& lens,
                                            const BsrTravelTimeOptions& options = {});

/// E(s₀, z₀): the point at distance s₀ along the inward normal geodesic from z₀.
Vec2 normal_flow_point(const MetricModel& model, double theta, double s, double step = 1e-3);

// Diffeomorphism-invariant distance --------------------------------------------------

/// ψ(θ) = θ + c + Σ_{k≤K} (a_k sin kθ + b_k cos kθ).
struct CircleMap {
    double c = 0.0;
    std::vector<double> a;
    std::vector<double> b;

    double operator()(double theta) const;
    /// Σ k(|a_k| + |b_k|) < 1, which makes ψ increasing.
    bool monotone() const;
};

/// Rows of B re-sampled at ψ(θ_j) by periodic linear interpolation.
TravelTimeSet compose_with_circle_map(const TravelTimeSet& B, const CircleMap& psi);

struct DiffeoSearchOptions {
    int harmonics = 3;
    /// Rotations tried before the local search.
    int rotation_seeds = 64;
    /// Local searches started from the best rotations.
    int restarts = 3;
    int max_evaluations = 800;
    int workers = 0;
};

struct DiffeoSearchResult {
    double value = 0.0;
    CircleMap psi;
    int evaluations = 0;
};

/// min over the family of hausdorff_distance(A, B∘ψ), by Nelder–Mead from the
/// best rotation seeds. The value is an upper bound for the infimum over all
/// circle diffeomorphisms.
DiffeoSearchResult diffeo_invariant_distance(const TravelTimeSet& A, const TravelTimeSet& B,
                                             const DiffeoSearchOptions& options = {});

}  // namespace ttlab
