#include "ttlab/survey.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <unordered_map>

#include "ttlab/errors.hpp"
#include "ttlab/parallel.hpp"

namespace ttlab {

namespace {

constexpr double two_pi = 2.0 * M_PI;

double radical_inverse(std::uint64_t i, unsigned base) {
    double inv = 1.0 / base, f = inv, r = 0.0;
    while (i > 0) {
        r += f * static_cast<double>(i % base);
        i /= base;
        f *= inv;
    }
    return r;
}

}  // namespace

BoundaryGrid::BoundaryGrid(int m) : m_(m) {
    if (m < min_size) throw DomainError("boundary grid needs at least 16 angles, got " + std::to_string(m));
}

double BoundaryGrid::angle(int j) const { return two_pi * j / m_; }

std::vector<double> BoundaryGrid::angles() const {
    std::vector<double> a(static_cast<std::size_t>(m_));
    for (int j = 0; j < m_; ++j) a[static_cast<std::size_t>(j)] = angle(j);
    return a;
}

std::vector<Vec2> sample_interior_sources(std::uint64_t seed, int k, const SourceOptions& options) {
    if (k < 1) throw DomainError("need at least one source");
    if (!(options.margin >= 0.0 && options.margin < 1.0)) throw DomainError("source margin must lie in [0, 1)");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double shift_r = unit(rng), shift_a = unit(rng);
    const double radius = 1.0 - options.margin;

    std::vector<Vec2> out;
    out.reserve(static_cast<std::size_t>(k + std::max(0, options.boundary_count)));
    for (int i = 1; i <= k; ++i) {
        const double u = std::fmod(radical_inverse(static_cast<std::uint64_t>(i), 2) + shift_r, 1.0);
        const double w = std::fmod(radical_inverse(static_cast<std::uint64_t>(i), 3) + shift_a, 1.0);
        const double r = radius * std::sqrt(u);
        out.push_back(r * unit_circle(two_pi * w));
    }
    for (int j = 0; j < options.boundary_count; ++j) out.push_back(unit_circle(two_pi * j / options.boundary_count));
    return out;
}

std::string to_string(DataKind kind) {
    return kind == DataKind::travel_time ? "travel_time" : "travel_time_difference";
}

std::vector<std::vector<double>> travel_time_rows(const MetricModel& model, const std::vector<Vec2>& sources,
                                                  const BoundaryGrid& grid, const SurveyOptions& options) {
    const auto angles = grid.angles();
    std::vector<std::vector<double>> rows(sources.size());
    parallel_for(
        sources.size(),
        [&](std::size_t i) {
            try {
                rows[i] = boundary_distances(model, sources[i], angles, options.connect);
            } catch (const ShootingFailureError& e) {
                std::ostringstream os;
                os << "source " << i << " at (" << sources[i].x << ", " << sources[i].y << "): " << e.what();
                throw ShootingFailureError(os.str());
            }
        },
        options.workers);
    return rows;
}

namespace {

std::vector<double> potential(const std::vector<double>& r) {
    std::vector<double> u(r.size());
    for (std::size_t j = 0; j < r.size(); ++j) u[j] = 0.5 * (r[j] - r[0]);
    return u;
}

}  // namespace

TravelTimeSet assemble_dataset(DataKind kind, std::vector<std::vector<double>> travel_times, int m,
                               const nlohmann::json& metric, std::uint64_t seed, SealedLabels* labels) {
    std::vector<std::size_t> perm(travel_times.size());
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    std::mt19937_64 rng(seed);
    std::shuffle(perm.begin(), perm.end(), rng);

    TravelTimeSet out;
    out.kind = kind;
    out.m = m;
    out.seed = seed;
    out.metric = metric;
    out.rows.reserve(perm.size());
    for (std::size_t r : perm) {
        if (static_cast<int>(travel_times[r].size()) != m) throw ShapeError("row length differs from grid size");
        out.rows.push_back(kind == DataKind::travel_time ? std::move(travel_times[r]) : potential(travel_times[r]));
    }
    if (labels) labels->source_of_row = std::move(perm);
    return out;
}

TravelTimeData make_travel_time_data(const MetricModel& model, const std::vector<Vec2>& sources,
                                     const BoundaryGrid& grid, const SurveyOptions& options, SealedLabels* labels) {
    auto rows = travel_time_rows(model, sources, grid, options);
    if (labels) labels->sources = sources;
    return assemble_dataset(DataKind::travel_time, std::move(rows), grid.size(), model.to_json(), options.seed, labels);
}

TravelTimeDifferenceData make_travel_time_difference_data(const MetricModel& model, const std::vector<Vec2>& sources,
                                                          const BoundaryGrid& grid, const SurveyOptions& options,
                                                          SealedLabels* labels) {
    auto rows = travel_time_rows(model, sources, grid, options);
    if (labels) labels->sources = sources;
    return assemble_dataset(DataKind::travel_time_difference, std::move(rows), grid.size(), model.to_json(),
                            options.seed, labels);
}

TravelTimeDifferenceData to_difference_data(const TravelTimeData& data) {
    if (data.kind != DataKind::travel_time) throw DomainError("to_difference_data expects travel time data");
    TravelTimeSet out = data;
    out.kind = DataKind::travel_time_difference;
    for (auto& row : out.rows) row = potential(row);
    return out;
}

TravelTimeSet subsample(const TravelTimeSet& data, int m_coarse) {
    if (m_coarse < BoundaryGrid::min_size || data.m % m_coarse != 0) {
        throw ShapeError("cannot subsample " + std::to_string(data.m) + " angles to " + std::to_string(m_coarse));
    }
    const int stride = data.m / m_coarse;
    TravelTimeSet out = data;
    out.m = m_coarse;
    for (auto& row : out.rows) {
        std::vector<double> r(static_cast<std::size_t>(m_coarse));
        for (int j = 0; j < m_coarse; ++j) r[static_cast<std::size_t>(j)] = row[static_cast<std::size_t>(j * stride)];
        row = std::move(r);
    }
    return out;
}

// Direction grids -----------------------------------------------------------

std::string to_string(MuSpacing spacing) { return spacing == MuSpacing::uniform ? "uniform" : "lens_adapted"; }

double DirectionGrid::theta(int a) const { return two_pi * a / m_theta; }

BoundaryVector DirectionGrid::vector(int v) const {
    return {theta(theta_index(v)), mu[static_cast<std::size_t>(mu_index(v))]};
}

namespace {

void check_direction_grid(int m_theta, int m_mu, double mu_max) {
    if (m_theta < BoundaryGrid::min_size) throw DomainError("direction grid needs m_theta >= 16");
    if (m_mu < 3) throw DomainError("direction grid needs m_mu >= 3");
    if (!(mu_max > 0.0 && mu_max <= 0.99)) throw DomainError("mu_max must lie in (0, 0.99]");
}

}  // namespace

DirectionGrid uniform_direction_grid(int m_theta, int m_mu, double mu_max) {
    check_direction_grid(m_theta, m_mu, mu_max);
    DirectionGrid g{m_theta, m_mu, mu_max, MuSpacing::uniform, {}};
    g.mu.resize(static_cast<std::size_t>(m_mu));
    for (int b = 0; b < m_mu; ++b) g.mu[static_cast<std::size_t>(b)] = -mu_max + 2.0 * mu_max * b / (m_mu - 1);
    if (m_mu % 2 == 1) g.mu[static_cast<std::size_t>(m_mu / 2)] = 0.0;
    return g;
}

DirectionGrid lens_adapted_direction_grid(const MetricModel& model, int m_theta, int m_mu, double mu_max,
                                          double step) {
    check_direction_grid(m_theta, m_mu, mu_max);
    if (!model.is_rotationally_symmetric()) {
        throw DomainError("lens-adapted direction grid needs a rotationally symmetric metric");
    }
    if (m_theta % 2 != 0 || m_mu % 2 != 1) throw DomainError("lens-adapted grid needs even m_theta and odd m_mu");

    IntegrateOptions io{.step = step, .max_length = 100.0, .sample_every = 0};
    // Angle swept from entry to exit; decreasing in μ, π at μ = 0.
    auto sweep = [&](double mu) {
        const GeodesicTrace tr = integrate_geodesic(model, lift_inward(model, {0.0, mu}), io);
        return wrap_angle(std::atan2(tr.exit_point().y, tr.exit_point().x));
    };
    const double cell = two_pi / m_theta;
    const int half = m_mu / 2;

    DirectionGrid g{m_theta, m_mu, mu_max, MuSpacing::lens_adapted, std::vector<double>(static_cast<std::size_t>(m_mu))};
    // μ > 0 turns the exit k cells short of the antipode. The k values grow
    // quadratically up to the largest one reachable with μ <= mu_max: small k
    // put exits of near-antipodal footpoints exactly on z₀, which the
    // travel-time reconstruction uses as s = 0 anchors.
    const int k_max = static_cast<int>(std::floor((M_PI - sweep(mu_max)) / cell + 1e-9));
    if (k_max < half) throw DomainError("lens-adapted grid: too many mu values for m_theta");
    int previous_k = 0;
    for (int b = 1; b <= half; ++b) {
        const int k = std::max(previous_k + 1, static_cast<int>(std::lround(k_max * std::pow(static_cast<double>(b) / half, 2.0))));
        previous_k = k;
        const double target = M_PI - k * cell;
        double lo = 0.0, hi = mu_max;
        for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
            const double mid = 0.5 * (lo + hi);
            (sweep(mid) > target ? lo : hi) = mid;
        }
        const double mu = 0.5 * (lo + hi);
        g.mu[static_cast<std::size_t>(half + b)] = mu;
        g.mu[static_cast<std::size_t>(half - b)] = -mu;
    }
    g.mu[static_cast<std::size_t>(half)] = 0.0;
    return g;
}

// Broken scattering table ----------------------------------------------------

BrokenScatteringTable::BrokenScatteringTable(DirectionGrid grid)
    : grid_(std::move(grid)),
      rows_(static_cast<std::size_t>(grid_.size())),
      diagonal_(static_cast<std::size_t>(grid_.size()), std::numeric_limits<double>::quiet_NaN()) {}

void BrokenScatteringTable::set(int v, int w, double T) {
    if (v < 0 || w < 0 || v >= size() || w >= size()) throw DomainError("table index out of range");
    if (!(T > 0.0) || !std::isfinite(T)) throw DomainError("broken scattering times must be positive");
    if (v == w) {
        diagonal_[static_cast<std::size_t>(v)] = T;
        return;
    }
    rows_[static_cast<std::size_t>(v)].push_back({w, T});
    rows_[static_cast<std::size_t>(w)].push_back({v, T});
}

void BrokenScatteringTable::finalize() {
    for (auto& r : rows_) std::sort(r.begin(), r.end(), [](const Entry& a, const Entry& b) { return a.w < b.w; });
}

std::optional<double> BrokenScatteringTable::get(int v, int w) const {
    if (v < 0 || w < 0 || v >= size() || w >= size()) return std::nullopt;
    if (v == w) return diagonal(v);
    const auto& r = rows_[static_cast<std::size_t>(v)];
    const auto it = std::lower_bound(r.begin(), r.end(), w, [](const Entry& e, int x) { return e.w < x; });
    if (it == r.end() || it->w != w) return std::nullopt;
    return it->T;
}

std::optional<double> BrokenScatteringTable::diagonal(int v) const {
    if (v < 0 || v >= size()) return std::nullopt;
    const double d = diagonal_[static_cast<std::size_t>(v)];
    if (std::isnan(d)) return std::nullopt;
    return d;
}

std::size_t BrokenScatteringTable::pair_count() const {
    std::size_t n = 0;
    for (const auto& r : rows_) n += r.size();
    return n / 2;
}

BrokenScatteringTable make_broken_scattering_data(const MetricModel& model, const DirectionGrid& grid,
                                                  const BsrOptions& options, BsrTruth* truth) {
    if (!(grid.mu_max <= 0.99)) throw DomainError("mu_max must not exceed 0.99");
    const auto n = static_cast<std::size_t>(grid.size());
    std::vector<GeodesicTrace> traces(n);
    parallel_for(
        n, [&](std::size_t v) { traces[v] = integrate_geodesic(model, lift_inward(model, grid.vector(static_cast<int>(v))), options.integrate); },
        options.workers);

    BrokenScatteringTable table(grid);
    table.metric = model.to_json();
    table.tolerances = {{"intersection", options.tolerance}, {"step", options.integrate.step}};
    for (std::size_t v = 0; v < n; ++v) table.set(static_cast<int>(v), static_cast<int>(v), 2.0 * traces[v].exit_time);

    std::unordered_map<std::uint64_t, double> crossing;
    auto key = [](std::size_t a, std::size_t b) { return (static_cast<std::uint64_t>(a) << 32) | b; };
    for (const auto& p : all_intersections(traces, options.tolerance)) {
        switch (p.hit.kind) {
            case Intersection::Kind::point:
                table.set(static_cast<int>(p.a), static_cast<int>(p.b), p.hit.t_a + p.hit.t_b);
                if (truth) {
                    crossing[key(p.a, p.b)] = p.hit.t_a;
                    crossing[key(p.b, p.a)] = p.hit.t_b;
                }
                break;
            case Intersection::Kind::reversal:
                table.set(static_cast<int>(p.a), static_cast<int>(p.b),
                          0.5 * (traces[p.a].exit_time + traces[p.b].exit_time));
                break;
            default:
                break;
        }
    }
    table.finalize();

    if (truth) {
        truth->exit_time.resize(n);
        truth->scattering.resize(n);
        truth->crossing_time.assign(n, {});
        for (std::size_t v = 0; v < n; ++v) {
            truth->exit_time[v] = traces[v].exit_time;
            truth->scattering[v] = traces[v].exit;
            for (const auto& e : table.row(static_cast<int>(v))) {
                const auto it = crossing.find(key(v, static_cast<std::size_t>(e.w)));
                truth->crossing_time[v].push_back(it == crossing.end() ? std::numeric_limits<double>::quiet_NaN()
                                                                       : it->second);
            }
        }
    }
    return table;
}

// File format ------------------------------------------------------------------

namespace {

static_assert(std::endian::native == std::endian::little, "binary datasets assume a little-endian host");

constexpr const char* format_tag = "ttlab-dataset";

std::string format_real(double x, int digits) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.*g", digits, x);
    return buf;
}

[[noreturn]] void fail(const std::filesystem::path& path, std::size_t line, std::size_t field, const std::string& what) {
    std::ostringstream os;
    os << path.string() << ": line " << line;
    if (field > 0) os << ", field " << field;
    os << ": " << what;
    throw ParseError(os.str());
}

nlohmann::json grid_json(const DirectionGrid& g) {
    return {{"m_theta", g.m_theta}, {"m_mu", g.m_mu}, {"mu_max", g.mu_max}, {"spacing", to_string(g.spacing)}, {"mu", g.mu}};
}

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::istringstream is(line);
    std::string tok;
    while (is >> tok) out.push_back(tok);
    return out;
}

bool parse_double(const std::string& s, double& out) {
    char* end = nullptr;
    out = std::strtod(s.c_str(), &end);
    return end == s.c_str() + s.size() && !s.empty();
}

bool parse_int(const std::string& s, long& out) {
    char* end = nullptr;
    out = std::strtol(s.c_str(), &end, 10);
    return end == s.c_str() + s.size() && !s.empty();
}

template <class T>
T header_field(const nlohmann::json& h, const char* key, const std::filesystem::path& path) {
    if (!h.contains(key)) fail(path, 1, 0, std::string("header lacks \"") + key + "\"");
    try {
        return h.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        fail(path, 1, 0, std::string("header field \"") + key + "\" has the wrong type");
    }
}

}  // namespace

void save_dataset(const TravelTimeSet& data, const std::filesystem::path& path, Encoding encoding) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open " + path.string() + " for writing");
    const nlohmann::json header = {{"format", format_tag},
                                   {"version", dataset_format_version},
                                   {"kind", to_string(data.kind)},
                                   {"metric", data.metric},
                                   {"grid", {{"m", data.m}}},
                                   {"seed", data.seed},
                                   {"tolerances", data.tolerances},
                                   {"encoding", encoding == Encoding::text ? "text" : "binary"},
                                   {"rows", data.rows.size()},
                                   {"cols", data.m}};
    out << header.dump() << '\n';
    for (const auto& row : data.rows) {
        if (static_cast<int>(row.size()) != data.m) throw ShapeError("row length differs from grid size");
        if (encoding == Encoding::binary) {
            out.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size() * sizeof(double)));
        } else {
            for (std::size_t j = 0; j < row.size(); ++j) out << (j ? " " : "") << format_real(row[j], 6);
            out << '\n';
        }
    }
    if (!out) throw Error("write failed: " + path.string());
}

void save_dataset(const BrokenScatteringTable& table, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot open " + path.string() + " for writing");
    std::size_t lines = 0;
    for (int v = 0; v < table.size(); ++v) {
        if (table.diagonal(v)) ++lines;
        for (const auto& e : table.row(v)) lines += e.w > v;
    }
    const nlohmann::json header = {{"format", format_tag},
                                   {"version", dataset_format_version},
                                   {"kind", "broken_scattering"},
                                   {"metric", table.metric},
                                   {"grid", grid_json(table.grid())},
                                   {"seed", table.seed},
                                   {"tolerances", table.tolerances},
                                   {"encoding", "text"},
                                   {"rows", lines},
                                   {"cols", 3}};
    out << header.dump() << '\n';
    for (int v = 0; v < table.size(); ++v) {
        if (const auto d = table.diagonal(v)) out << v << ' ' << v << ' ' << format_real(*d, 17) << '\n';
        for (const auto& e : table.row(v)) {
            if (e.w > v) out << v << ' ' << e.w << ' ' << format_real(e.T, 17) << '\n';
        }
    }
    if (!out) throw Error("write failed: " + path.string());
}

namespace {

nlohmann::json read_header(std::ifstream& in, const std::filesystem::path& path) {
    std::string line;
    if (!std::getline(in, line)) fail(path, 1, 0, "missing header");
    nlohmann::json h;
    try {
        h = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
        fail(path, 1, 0, std::string("header is not JSON: ") + e.what());
    }
    if (!h.is_object() || h.value("format", "") != format_tag) fail(path, 1, 0, "not a ttlab dataset");
    const int version = header_field<int>(h, "version", path);
    if (version != dataset_format_version) fail(path, 1, 0, "unsupported format version " + std::to_string(version));
    return h;
}

TravelTimeSet read_travel_time_body(const nlohmann::json& h, std::ifstream& in, const std::filesystem::path& path) {
    TravelTimeSet data;
    const auto kind = header_field<std::string>(h, "kind", path);
    if (kind == "travel_time") {
        data.kind = DataKind::travel_time;
    } else if (kind == "travel_time_difference") {
        data.kind = DataKind::travel_time_difference;
    } else {
        fail(path, 1, 0, "unknown kind \"" + kind + "\"");
    }
    const auto rows = header_field<std::size_t>(h, "rows", path);
    const auto cols = header_field<int>(h, "cols", path);
    if (!h.contains("grid") || header_field<int>(h["grid"], "m", path) != cols) fail(path, 1, 0, "grid.m differs from cols");
    if (cols < BoundaryGrid::min_size) fail(path, 1, 0, "cols below the minimum grid size");
    data.m = cols;
    data.seed = h.value("seed", std::uint64_t{0});
    data.metric = h.value("metric", nlohmann::json());
    data.tolerances = h.value("tolerances", nlohmann::json::object());
    const auto encoding = header_field<std::string>(h, "encoding", path);
    data.rows.assign(rows, std::vector<double>(static_cast<std::size_t>(cols)));

    if (encoding == "binary") {
        for (std::size_t r = 0; r < rows; ++r) {
            in.read(reinterpret_cast<char*>(data.rows[r].data()), static_cast<std::streamsize>(cols * sizeof(double)));
            if (in.gcount() != static_cast<std::streamsize>(cols * sizeof(double))) {
                fail(path, 2, 0, "binary block truncated in row " + std::to_string(r + 1));
            }
            for (int j = 0; j < cols; ++j) {
                if (!std::isfinite(data.rows[r][static_cast<std::size_t>(j)])) {
                    fail(path, 2, 0, "non-finite value in row " + std::to_string(r + 1));
                }
            }
        }
        if (in.peek() != std::char_traits<char>::eof()) fail(path, 2, 0, "trailing bytes after binary block");
        return data;
    }
    if (encoding != "text") fail(path, 1, 0, "unknown encoding \"" + encoding + "\"");

    std::string line;
    for (std::size_t r = 0; r < rows; ++r) {
        const std::size_t lineno = r + 2;
        if (!std::getline(in, line)) fail(path, lineno, 0, "expected " + std::to_string(rows) + " rows");
        const auto fields = split(line);
        if (fields.size() != static_cast<std::size_t>(cols)) {
            fail(path, lineno, 0, "expected " + std::to_string(cols) + " values, found " + std::to_string(fields.size()));
        }
        for (std::size_t j = 0; j < fields.size(); ++j) {
            double x;
            if (!parse_double(fields[j], x) || !std::isfinite(x)) fail(path, lineno, j + 1, "not a finite real: " + fields[j]);
            if (data.kind == DataKind::travel_time && x < 0.0) fail(path, lineno, j + 1, "negative travel time");
            data.rows[r][j] = x;
        }
    }
    while (std::getline(in, line)) {
        if (!split(line).empty()) fail(path, rows + 2, 0, "unexpected data after the last row");
    }
    return data;
}

BrokenScatteringTable read_bsr_body(const nlohmann::json& h, std::ifstream& in, const std::filesystem::path& path) {
    if (!h.contains("grid") || !h["grid"].is_object()) fail(path, 1, 0, "header lacks \"grid\"");
    const auto& gj = h["grid"];
    DirectionGrid grid;
    grid.m_theta = header_field<int>(gj, "m_theta", path);
    grid.m_mu = header_field<int>(gj, "m_mu", path);
    grid.mu_max = header_field<double>(gj, "mu_max", path);
    const auto spacing = header_field<std::string>(gj, "spacing", path);
    grid.spacing = spacing == "lens_adapted" ? MuSpacing::lens_adapted : MuSpacing::uniform;
    grid.mu = header_field<std::vector<double>>(gj, "mu", path);
    if (grid.m_theta < BoundaryGrid::min_size || grid.m_mu < 1 || grid.mu.size() != static_cast<std::size_t>(grid.m_mu)) {
        fail(path, 1, 0, "inconsistent direction grid");
    }

    BrokenScatteringTable table(grid);
    table.metric = h.value("metric", nlohmann::json());
    table.seed = h.value("seed", std::uint64_t{0});
    table.tolerances = h.value("tolerances", nlohmann::json::object());
    const auto rows = header_field<std::size_t>(h, "rows", path);

    std::string line;
    std::size_t lineno = 1, seen = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto fields = split(line);
        if (fields.empty()) continue;
        if (fields.size() != 3) fail(path, lineno, 0, "expected \"index_v index_w T\"");
        long v, w;
        double T;
        if (!parse_int(fields[0], v) || v < 0 || v >= table.size()) fail(path, lineno, 1, "bad index " + fields[0]);
        if (!parse_int(fields[1], w) || w < 0 || w >= table.size()) fail(path, lineno, 2, "bad index " + fields[1]);
        if (!parse_double(fields[2], T) || !std::isfinite(T)) fail(path, lineno, 3, "not a finite real: " + fields[2]);
        if (T < 0.0) fail(path, lineno, 3, "negative T");
        if (T == 0.0) fail(path, lineno, 3, "T must be positive");
        const bool duplicate = v == w ? table.diagonal(static_cast<int>(v)).has_value() : false;
        if (duplicate) fail(path, lineno, 0, "duplicate diagonal entry");
        table.set(static_cast<int>(v), static_cast<int>(w), T);
        ++seen;
    }
    if (seen != rows) fail(path, lineno, 0, "expected " + std::to_string(rows) + " entries, found " + std::to_string(seen));
    table.finalize();
    for (int v = 0; v < table.size(); ++v) {
        const auto& r = table.row(v);
        for (std::size_t i = 1; i < r.size(); ++i) {
            if (r[i].w == r[i - 1].w) fail(path, 0, 0, "duplicate entry for pair (" + std::to_string(v) + ", " + std::to_string(r[i].w) + ")");
        }
    }
    return table;
}

}  // namespace

Dataset load_dataset(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open " + path.string());
    const nlohmann::json h = read_header(in, path);
    if (h.value("kind", "") == "broken_scattering") return read_bsr_body(h, in, path);
    return read_travel_time_body(h, in, path);
}

TravelTimeSet load_travel_time_set(const std::filesystem::path& path) {
    auto d = load_dataset(path);
    if (auto* p = std::get_if<TravelTimeSet>(&d)) return std::move(*p);
    throw ParseError(path.string() + ": line 1: expected travel time data, found a broken scattering table");
}

BrokenScatteringTable load_broken_scattering_table(const std::filesystem::path& path) {
    auto d = load_dataset(path);
    if (auto* p = std::get_if<BrokenScatteringTable>(&d)) return std::move(*p);
    throw ParseError(path.string() + ": line 1: expected a broken scattering table");
}

}  // namespace ttlab
