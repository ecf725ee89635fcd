#include "kspde/field.hpp"

#include <fftw3.h>

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>
#include <map>
#include <mutex>

namespace kspde {

namespace {

bool is_power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

struct PlanKey {
    int rank;
    int n0;
    int n1;
    int sign;
    bool operator<(const PlanKey& o) const {
        if (rank != o.rank) return rank < o.rank;
        if (n0 != o.n0) return n0 < o.n0;
        if (n1 != o.n1) return n1 < o.n1;
        return sign < o.sign;
    }
};

// FFTW plans are created per thread on a private buffer; creation and
// destruction share the global planner lock, execution does not.
struct PlanEntry {
    fftw_plan plan = nullptr;
    std::vector<std::complex<double>> buf;
};

struct PlanCache {
    std::map<PlanKey, PlanEntry> entries;

    ~PlanCache() {
        std::lock_guard<std::mutex> lock(planner_mutex());
        for (auto& [key, entry] : entries) {
            if (entry.plan) fftw_destroy_plan(entry.plan);
        }
    }

    PlanEntry& get(const PlanKey& key) {
        auto it = entries.find(key);
        if (it != entries.end()) return it->second;
        PlanEntry entry;
        std::size_t total = static_cast<std::size_t>(key.n0) *
                            (key.rank == 2 ? static_cast<std::size_t>(key.n1) : 1);
        entry.buf.resize(total);
        auto* raw = reinterpret_cast<fftw_complex*>(entry.buf.data());
        {
            std::lock_guard<std::mutex> lock(planner_mutex());
            if (key.rank == 1) {
                entry.plan = fftw_plan_dft_1d(key.n0, raw, raw, key.sign, FFTW_ESTIMATE);
            } else {
                entry.plan = fftw_plan_dft_2d(key.n0, key.n1, raw, raw, key.sign, FFTW_ESTIMATE);
            }
        }
        return entries.emplace(key, std::move(entry)).first->second;
    }
};

void dft_exec(const PlanKey& key, std::vector<std::complex<double>>& data) {
    thread_local PlanCache cache;
    PlanEntry& entry = cache.get(key);
    std::copy(data.begin(), data.end(), entry.buf.begin());
    fftw_execute(entry.plan);
    std::copy(entry.buf.begin(), entry.buf.end(), data.begin());
}

}  // namespace

TorusGrid::TorusGrid(int dim_, int points_per_dim_) : dim(dim_), points_per_dim(points_per_dim_) {
    if (dim != 1 && dim != 2) {
        throw std::invalid_argument("TorusGrid: dim must be 1 or 2");
    }
    if (points_per_dim < 8 || !is_power_of_two(points_per_dim)) {
        throw std::invalid_argument("TorusGrid: points_per_dim must be a power of two >= 8");
    }
    spacing = kTwoPi / points_per_dim;
}

std::size_t TorusGrid::size() const {
    std::size_t p = static_cast<std::size_t>(points_per_dim);
    return dim == 1 ? p : p * p;
}

double TorusGrid::cell_volume() const { return dim == 1 ? spacing : spacing * spacing; }

Field::Field(const TorusGrid& g, double fill) : grid(g), values(g.size(), fill) {}

bool Field::all_finite() const {
    for (double v : values) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

double Field::max_abs() const {
    double m = 0.0;
    for (double v : values) m = std::max(m, std::abs(v));
    return m;
}

SpectralField::SpectralField(const TorusGrid& g) : grid(g), coefficients(g.size()) {}

std::size_t SpectralField::index_of(int n) const {
    int p = grid.points_per_dim;
    int i = n >= 0 ? n : n + p;
    return static_cast<std::size_t>(i);
}

std::size_t SpectralField::index_of(int n1, int n2) const {
    int p = grid.points_per_dim;
    int i = n1 >= 0 ? n1 : n1 + p;
    int j = n2 >= 0 ? n2 : n2 + p;
    return static_cast<std::size_t>(i) * p + j;
}

std::complex<double>& SpectralField::at(int n) { return coefficients[index_of(n)]; }
std::complex<double> SpectralField::at(int n) const { return coefficients[index_of(n)]; }
std::complex<double>& SpectralField::at(int n1, int n2) { return coefficients[index_of(n1, n2)]; }
std::complex<double> SpectralField::at(int n1, int n2) const {
    return coefficients[index_of(n1, n2)];
}

double SpectralField::max_abs() const {
    double m = 0.0;
    for (const auto& c : coefficients) m = std::max(m, std::abs(c));
    return m;
}

void dft_1d(std::vector<std::complex<double>>& data, int sign) {
    PlanKey key{1, static_cast<int>(data.size()), 1, sign < 0 ? FFTW_FORWARD : FFTW_BACKWARD};
    dft_exec(key, data);
}

void dft_grid(const TorusGrid& grid, std::vector<std::complex<double>>& data, int sign) {
    int p = grid.points_per_dim;
    PlanKey key{grid.dim, p, p, sign < 0 ? FFTW_FORWARD : FFTW_BACKWARD};
    dft_exec(key, data);
}

SpectralField forward_transform(const Field& f) {
    std::vector<std::complex<double>> data(f.values.begin(), f.values.end());
    dft_grid(f.grid, data, -1);
    double scale = f.grid.cell_volume() / std::pow(kTwoPi, 0.5 * f.grid.dim);
    SpectralField out(f.grid);
    for (std::size_t i = 0; i < data.size(); ++i) out.coefficients[i] = data[i] * scale;
    return out;
}

Field inverse_transform(const SpectralField& g) {
    int p = g.grid.points_per_dim;
    double tol = 1e-8 * std::max(1.0, g.max_abs());
    int half = p / 2;
    auto check_pair = [&](const std::complex<double>& a, const std::complex<double>& b) {
        if (std::abs(a - std::conj(b)) > tol) {
            throw SymmetryViolation("inverse_transform: Hermitian symmetry violated");
        }
    };
    if (g.grid.dim == 1) {
        for (int n = 0; n <= half; ++n) {
            int m = n == half ? half : -n;  // Nyquist pairs with itself
            check_pair(g.coefficients[g.index_of(m)], g.coefficients[g.index_of(n)]);
        }
    } else {
        for (int n1 = -half; n1 < half; ++n1) {
            for (int n2 = -half; n2 < half; ++n2) {
                int m1 = n1 == -half ? -half : -n1;
                int m2 = n2 == -half ? -half : -n2;
                check_pair(g.coefficients[g.index_of(m1, m2)],
                           g.coefficients[g.index_of(n1, n2)]);
            }
        }
    }

    std::vector<std::complex<double>> data = g.coefficients;
    dft_grid(g.grid, data, +1);
    double scale = 1.0 / std::pow(kTwoPi, 0.5 * g.grid.dim);

    Field out(g.grid);
    double max_field = 0.0;
    for (std::size_t i = 0; i < data.size(); ++i) {
        out.values[i] = data[i].real() * scale;
        max_field = std::max(max_field, std::abs(out.values[i]));
    }
    double residue_tol = 1e-10 * std::max(1.0, max_field);
    for (const auto& c : data) {
        if (std::abs(c.imag() * scale) > residue_tol) {
            throw SymmetryViolation("inverse_transform: imaginary residue above tolerance");
        }
    }
    return out;
}

double lp_norm(const Field& f, double p) {
    if (std::isinf(p) && p > 0) {
        return f.max_abs();
    }
    if (!(p >= 1.0)) {
        throw InvalidExponent("lp_norm: p must satisfy p >= 1");
    }
    double acc = 0.0;
    for (double v : f.values) acc += std::pow(std::abs(v), p);
    return std::pow(acc * f.grid.cell_volume(), 1.0 / p);
}

double positive_part_l1(const Field& f, const Field& g) {
    if (f.grid != g.grid) {
        throw GridMismatch("positive_part_l1: fields live on different grids");
    }
    double acc = 0.0;
    for (std::size_t i = 0; i < f.values.size(); ++i) {
        acc += std::max(f.values[i] - g.values[i], 0.0);
    }
    return acc * f.grid.cell_volume();
}

double total_mass(const Field& f) {
    double acc = 0.0;
    for (double v : f.values) acc += v;
    return acc * f.grid.cell_volume();
}

void write_field(const std::string& path, const Field& f) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("write_field: cannot open " + path);
    const char magic[4] = {'K', 'S', 'P', 'D'};
    std::uint32_t version = 1;
    std::uint32_t dim = static_cast<std::uint32_t>(f.grid.dim);
    std::uint32_t points = static_cast<std::uint32_t>(f.grid.points_per_dim);
    out.write(magic, 4);
    out.write(reinterpret_cast<const char*>(&version), 4);
    out.write(reinterpret_cast<const char*>(&dim), 4);
    out.write(reinterpret_cast<const char*>(&points), 4);
    out.write(reinterpret_cast<const char*>(f.values.data()),
              static_cast<std::streamsize>(f.values.size() * sizeof(double)));
    if (!out) throw std::runtime_error("write_field: write failed for " + path);
}

Field read_field(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("read_field: cannot open " + path);
    char magic[4];
    std::uint32_t version = 0, dim = 0, points = 0;
    in.read(magic, 4);
    in.read(reinterpret_cast<char*>(&version), 4);
    in.read(reinterpret_cast<char*>(&dim), 4);
    in.read(reinterpret_cast<char*>(&points), 4);
    if (!in || std::memcmp(magic, "KSPD", 4) != 0) {
        throw std::runtime_error("read_field: bad header in " + path);
    }
    if (version != 1) throw std::runtime_error("read_field: unsupported version");
    Field f(TorusGrid(static_cast<int>(dim), static_cast<int>(points)));
    in.read(reinterpret_cast<char*>(f.values.data()),
            static_cast<std::streamsize>(f.values.size() * sizeof(double)));
    if (!in) throw std::runtime_error("read_field: truncated payload in " + path);
    return f;
}

void write_field_csv(const std::string& path, const Field& f) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_field_csv: cannot open " + path);
    char line[128];
    if (f.grid.dim == 1) {
        out << "x,value\n";
        for (int i = 0; i < f.grid.points_per_dim; ++i) {
            std::snprintf(line, sizeof(line), "%.17g,%.17g\n", f.grid.x(i), f(i));
            out << line;
        }
    } else {
        out << "x,y,value\n";
        for (int i = 0; i < f.grid.points_per_dim; ++i) {
            for (int j = 0; j < f.grid.points_per_dim; ++j) {
                std::snprintf(line, sizeof(line), "%.17g,%.17g,%.17g\n", f.grid.x(i),
                              f.grid.x(j), f(i, j));
                out << line;
            }
        }
    }
}

}  // namespace kspde
