#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "ttlab/geodesic.hpp"

namespace ttlab {

/// Uniform boundary angles θ_j = 2πj/m.
class BoundaryGrid {
public:
    static constexpr int min_size = 16;

    /// Throws DomainError for m < min_size.
    explicit BoundaryGrid(int m);

    int size() const { return m_; }
    double angle(int j) const;
    std::vector<double> angles() const;

private:
    int m_;
};

struct SourceOptions {
    double margin = 0.02;
    /// Extra sources on the circle at angles 2πj/boundary_count. They sit on
    /// the boundary grid whenever m is a multiple of boundary_count.
    int boundary_count = 0;
};

/// Shifted Halton points mapped area-uniformly into |x| <= 1 - margin,
/// followed by the optional boundary sources. Deterministic per seed.
std::vector<Vec2> sample_interior_sources(std::uint64_t seed, int k, const SourceOptions& options = {});

enum class DataKind { travel_time, travel_time_difference };

std::string to_string(DataKind kind);

/// An unlabeled set of sampled boundary functions.
///
/// travel_time rows hold r_p(θ_j). travel_time_difference rows hold the
/// potential u_j = ½(r_p(θ_j) - r_p(θ_0)), so ½D_p(θ_i, θ_j) = u_i - u_j.
/// The potential stores the difference function without its m×m square and
/// keeps antisymmetry and the zero diagonal exact.
struct TravelTimeSet {
    DataKind kind = DataKind::travel_time;
    int m = 0;
    std::vector<std::vector<double>> rows;
    std::uint64_t seed = 0;
    nlohmann::json metric;
    nlohmann::json tolerances = nlohmann::json::object();

    std::size_t size() const { return rows.size(); }
    /// ½D(θ_i, θ_j) of a difference row.
    double difference(std::size_t row, int i, int j) const { return rows[row][i] - rows[row][j]; }
};

using TravelTimeData = TravelTimeSet;
using TravelTimeDifferenceData = TravelTimeSet;

/// Generation-time source labels, for tests only: row r of a generated set
/// came from sources[source_of_row[r]].
struct SealedLabels {
    std::vector<Vec2> sources;
    std::vector<std::size_t> source_of_row;
};

struct SurveyOptions {
    ConnectOptions connect{.step = 5e-3};
    std::uint64_t seed = 0;
    int workers = 0;
};

/// r_p(θ_j) for every source, in source order.
std::vector<std::vector<double>> travel_time_rows(const MetricModel& model, const std::vector<Vec2>& sources,
                                                  const BoundaryGrid& grid, const SurveyOptions& options = {});

/// Travel time data with rows shuffled by options.seed.
TravelTimeData make_travel_time_data(const MetricModel& model, const std::vector<Vec2>& sources,
                                     const BoundaryGrid& grid, const SurveyOptions& options = {},
                                     SealedLabels* labels = nullptr);

TravelTimeDifferenceData make_travel_time_difference_data(const MetricModel& model, const std::vector<Vec2>& sources,
                                                          const BoundaryGrid& grid, const SurveyOptions& options = {},
                                                          SealedLabels* labels = nullptr);

/// Builds a shuffled set of the given kind from rows in source order.
TravelTimeSet assemble_dataset(DataKind kind, std::vector<std::vector<double>> travel_times, int m,
                               const nlohmann::json& metric, std::uint64_t seed, SealedLabels* labels = nullptr);

/// The difference data of a travel time set, row for row.
TravelTimeDifferenceData to_difference_data(const TravelTimeData& data);

/// Restriction to the coarser grid of m_coarse angles; m must be a multiple of m_coarse.
TravelTimeSet subsample(const TravelTimeSet& data, int m_coarse);

enum class MuSpacing {
    uniform,
    /// μ values placed so the scattering relation maps grid vectors onto grid
    /// vectors; needs a rotationally symmetric metric.
    lens_adapted
};

std::string to_string(MuSpacing spacing);

/// Product grid of inward boundary directions (θ_a, μ_b), index a·m_μ + b.
struct DirectionGrid {
    int m_theta = 64;
    int m_mu = 31;
    double mu_max = 0.99;
    MuSpacing spacing = MuSpacing::uniform;
    /// Increasing μ values, symmetric about 0.
    std::vector<double> mu;

    int size() const { return m_theta * m_mu; }
    int index(int a, int b) const { return a * m_mu + b; }
    int theta_index(int v) const { return v / m_mu; }
    int mu_index(int v) const { return v % m_mu; }
    double theta(int a) const;
    BoundaryVector vector(int v) const;
};

/// Uniform μ values on [-mu_max, mu_max].
DirectionGrid uniform_direction_grid(int m_theta, int m_mu, double mu_max);

/// For a rotationally symmetric model, μ values near the uniform ones whose
/// scattering image exit angle is a multiple of 2π/m_theta. Throws DomainError
/// if the model is not rotationally symmetric or the grid degenerates.
DirectionGrid lens_adapted_direction_grid(const MetricModel& model, int m_theta, int m_mu, double mu_max,
                                          double step = 1e-3);

/// Sparse symmetric table of broken scattering times T(v, w).
///
/// Rows are sorted by partner index. T(v, w) and T(w, v) are the same stored
/// double. Each diagonal entry is T(v, v) = 2τ_exit(v).
class BrokenScatteringTable {
public:
    struct Entry {
        int w;
        double T;
    };

    BrokenScatteringTable() = default;
    explicit BrokenScatteringTable(DirectionGrid grid);

    const DirectionGrid& grid() const { return grid_; }
    int size() const { return grid_.size(); }

    /// Inserts T(v, w) = T(w, v) = T, or the diagonal when v == w. T must be positive.
    void set(int v, int w, double T);
    /// Sorts rows; call once after the last set().
    void finalize();

    std::optional<double> get(int v, int w) const;
    std::optional<double> diagonal(int v) const;
    const std::vector<Entry>& row(int v) const { return rows_[static_cast<std::size_t>(v)]; }
    /// Number of stored off-diagonal unordered pairs.
    std::size_t pair_count() const;

    nlohmann::json metric;
    std::uint64_t seed = 0;
    nlohmann::json tolerances = nlohmann::json::object();

private:
    DirectionGrid grid_;
    std::vector<std::vector<Entry>> rows_;
    std::vector<double> diagonal_;
};

/// Test-only record of the forward computation behind a table.
struct BsrTruth {
    std::vector<double> exit_time;
    std::vector<BoundaryVector> scattering;
    /// Crossing time along the row geodesic for each table entry, aligned with table.row(v).
    std::vector<std::vector<double>> crossing_time;
};

struct BsrOptions {
    IntegrateOptions integrate{.step = 1e-3, .max_length = 100.0, .sample_every = 10};
    double tolerance = default_intersection_tolerance;
    int workers = 0;
};

/// Traces every grid direction once and records all pairwise crossings.
BrokenScatteringTable make_broken_scattering_data(const MetricModel& model, const DirectionGrid& grid,
                                                  const BsrOptions& options = {}, BsrTruth* truth = nullptr);

enum class Encoding { text, binary };

using Dataset = std::variant<TravelTimeSet, BrokenScatteringTable>;

/// One JSON header line, then the data block. Text rows use 6 significant
/// digits; binary rows are little-endian float64; BSR lines are "v w T".
void save_dataset(const TravelTimeSet& data, const std::filesystem::path& path, Encoding encoding = Encoding::text);
void save_dataset(const BrokenScatteringTable& table, const std::filesystem::path& path);

/// Throws ParseError naming the line and field of the first defect.
Dataset load_dataset(const std::filesystem::path& path);
TravelTimeSet load_travel_time_set(const std::filesystem::path& path);
BrokenScatteringTable load_broken_scattering_table(const std::filesystem::path& path);

inline constexpr int dataset_format_version = 1;

}  // namespace ttlab
