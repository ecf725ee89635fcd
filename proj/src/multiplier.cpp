#include "kspde/multiplier.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace kspde {

namespace {

double smoothstep(double t) {
    if (t <= 0.0) return 0.0;
    if (t >= 1.0) return 1.0;
    return t * t * t * (t * (6.0 * t - 15.0) + 10.0);
}

int dft_frequency(int index, int count) { return 2 * index < count ? index : index - count; }

// Physical time frequency attached to DFT index j on a window of t_count
// samples spaced t_spacing apart.
double time_frequency(int index, int count, double spacing) {
    return 2.0 * M_PI * dft_frequency(index, count) / (count * spacing);
}

std::vector<int> space_modes(const TorusGrid& grid, std::size_t x_index) {
    const int p = grid.points_per_dim;
    if (grid.dim == 1) return {dft_frequency(static_cast<int>(x_index), p)};
    const int i = static_cast<int>(x_index) / p;
    const int j = static_cast<int>(x_index) % p;
    return {dft_frequency(i, p), dft_frequency(j, p)};
}

}  // namespace

void dft_time_space(std::vector<std::complex<double>>& block, int t_count,
                    const TorusGrid& grid, int sign) {
    const std::size_t xsize = grid.size();
    std::vector<std::complex<double>> row(xsize);
    for (int t = 0; t < t_count; ++t) {
        std::copy_n(block.begin() + static_cast<std::ptrdiff_t>(t) * xsize, xsize, row.begin());
        dft_grid(grid, row, sign);
        std::copy_n(row.begin(), xsize, block.begin() + static_cast<std::ptrdiff_t>(t) * xsize);
    }
    std::vector<std::complex<double>> column(static_cast<std::size_t>(t_count));
    for (std::size_t x = 0; x < xsize; ++x) {
        for (int t = 0; t < t_count; ++t)
            column[static_cast<std::size_t>(t)] = block[static_cast<std::size_t>(t) * xsize + x];
        dft_1d(column, sign);
        for (int t = 0; t < t_count; ++t)
            block[static_cast<std::size_t>(t) * xsize + x] = column[static_cast<std::size_t>(t)];
    }
}

double plateau_bump(double z) {
    const double a = std::abs(z);
    if (a <= 1.0) return 1.0;
    if (a >= 2.0) return 0.0;
    return 1.0 - smoothstep(a - 1.0);
}

double psi0(double z) { return plateau_bump(2.0 * z); }

double psi1(double z) { return plateau_bump(z) - plateau_bump(2.0 * z); }

double psi_tilde(double z) {
    const double v = psi1(z);
    if (v == 0.0) return 0.0;
    return v / z;
}

double BumpSpec::operator()(double z) const {
    if (radius <= 0.0) throw std::invalid_argument("bump radius must be positive");
    const double t = (z - center) / radius;
    return annulus ? psi1(t) : plateau_bump(t);
}

SymbolPartition SymbolPartition::for_range(double delta, double sup_symbol) {
    if (delta <= 0.0) throw std::invalid_argument("partition delta must be positive");
    SymbolPartition part;
    part.delta = delta;
    part.levels.push_back(0);
    int k_max = 1;
    while (static_cast<double>(k_max) * delta < std::abs(sup_symbol)) k_max *= 2;
    for (int k = 1; k <= k_max; k *= 2) part.levels.push_back(k);
    return part;
}

double SymbolPartition::weight(int level, double symbol_magnitude) const {
    if (level == 0) return psi0(symbol_magnitude / delta);
    return psi1(symbol_magnitude / (delta * static_cast<double>(level)));
}

double SymbolPartition::weight_sum(double symbol_magnitude) const {
    double sum = 0.0;
    for (int level : levels) sum += weight(level, symbol_magnitude);
    return sum;
}

SpaceTimeSlab::SpaceTimeSlab(int t_count_, double t_spacing_, const TorusGrid& g, const XiGrid& x)
    : t_count(t_count_), t_spacing(t_spacing_), grid(g), xi(x) {
    if (t_count <= 0) throw std::invalid_argument("slab needs at least one time sample");
    if (t_spacing <= 0.0) throw std::invalid_argument("slab time spacing must be positive");
    values.assign(static_cast<std::size_t>(t_count) * grid.size() *
                      static_cast<std::size_t>(xi.cells),
                  0.0);
}

std::vector<double> symbol_magnitude_lattice(const ModelSpec& spec, int t_count,
                                             double t_spacing, const TorusGrid& grid,
                                             double xi) {
    if (t_count <= 0) throw std::invalid_argument("lattice needs at least one time sample");
    const std::size_t xsize = grid.size();
    const int p = grid.points_per_dim;
    std::vector<double> raw(static_cast<std::size_t>(t_count) * xsize);
    for (int t = 0; t < t_count; ++t) {
        const double u = time_frequency(t, t_count, t_spacing);
        for (std::size_t x = 0; x < xsize; ++x)
            raw[static_cast<std::size_t>(t) * xsize + x] =
                std::abs(symbol_eval(spec, u, space_modes(grid, x), xi));
    }
    std::vector<double> magnitude(raw.size());
    for (int t = 0; t < t_count; ++t) {
        const int tr = (t_count - t) % t_count;
        for (std::size_t x = 0; x < xsize; ++x) {
            std::size_t xr;
            if (grid.dim == 1) {
                xr = (static_cast<std::size_t>(p) - x) % static_cast<std::size_t>(p);
            } else {
                const std::size_t i = x / static_cast<std::size_t>(p);
                const std::size_t j = x % static_cast<std::size_t>(p);
                xr = ((static_cast<std::size_t>(p) - i) % static_cast<std::size_t>(p)) *
                         static_cast<std::size_t>(p) +
                     (static_cast<std::size_t>(p) - j) % static_cast<std::size_t>(p);
            }
            magnitude[static_cast<std::size_t>(t) * xsize + x] =
                0.5 * (raw[static_cast<std::size_t>(t) * xsize + x] +
                       raw[static_cast<std::size_t>(tr) * xsize + xr]);
        }
    }
    return magnitude;
}

SymbolSplit dyadic_symbol_split(const SpaceTimeSlab& g, const ModelSpec& spec, double delta) {
    const std::size_t xsize = g.x_size();
    const std::size_t plane = static_cast<std::size_t>(g.t_count) * xsize;

    // Symbol magnitudes over the full (u, n, xi) lattice; their sup fixes the
    // top dyadic level so the weights sum to exactly one everywhere observed.
    std::vector<double> magnitude(plane * static_cast<std::size_t>(g.xi.cells));
    double sup = 0.0;
    for (int c = 0; c < g.xi.cells; ++c) {
        const std::vector<double> plane_mag =
            symbol_magnitude_lattice(spec, g.t_count, g.t_spacing, g.grid, g.xi.center(c));
        for (std::size_t i = 0; i < plane; ++i) {
            magnitude[i * static_cast<std::size_t>(g.xi.cells) + static_cast<std::size_t>(c)] =
                plane_mag[i];
            sup = std::max(sup, plane_mag[i]);
        }
    }

    SymbolSplit split;
    split.partition = SymbolPartition::for_range(delta, sup);
    split.components.assign(split.partition.levels.size(),
                            SpaceTimeSlab(g.t_count, g.t_spacing, g.grid, g.xi));

    std::vector<std::complex<double>> spectrum(plane);
    std::vector<std::complex<double>> filtered(plane);
    const double inv_size = 1.0 / static_cast<double>(plane);
    for (int c = 0; c < g.xi.cells; ++c) {
        for (int t = 0; t < g.t_count; ++t)
            for (std::size_t x = 0; x < xsize; ++x)
                spectrum[static_cast<std::size_t>(t) * xsize + x] = g.at(t, x, c);
        dft_time_space(spectrum, g.t_count, g.grid, -1);

        for (std::size_t lev = 0; lev < split.partition.levels.size(); ++lev) {
            const int level = split.partition.levels[lev];
            for (std::size_t i = 0; i < plane; ++i) {
                const double w = split.partition.weight(
                    level, magnitude[i * static_cast<std::size_t>(g.xi.cells) +
                                     static_cast<std::size_t>(c)]);
                filtered[i] = spectrum[i] * w;
            }
            dft_time_space(filtered, g.t_count, g.grid, +1);
            SpaceTimeSlab& out = split.components[lev];
            for (int t = 0; t < g.t_count; ++t)
                for (std::size_t x = 0; x < xsize; ++x)
                    out.at(t, x, c) =
                        filtered[static_cast<std::size_t>(t) * xsize + x].real() * inv_size;
        }
    }
    return split;
}

double kernel_l1_norm(const std::vector<std::complex<double>>& multiplier,
                      const std::vector<int>& dims) {
    if (dims.empty() || dims.size() > 2)
        throw std::invalid_argument("kernel norms support one or two lattice dimensions");
    std::size_t size = 1;
    for (int d : dims) {
        if (d < 2) throw std::invalid_argument("lattice dimension must be at least 2");
        size *= static_cast<std::size_t>(d);
    }
    if (multiplier.size() != size)
        throw std::invalid_argument("multiplier size does not match the lattice");
    if (dims.size() == 2 && dims[0] != dims[1])
        throw std::invalid_argument("two-dimensional lattices must be square");

    std::vector<std::complex<double>> kernel = multiplier;
    TorusGrid grid(static_cast<int>(dims.size()), dims[0]);
    dft_grid(grid, kernel, +1);
    double norm = 0.0;
    for (const auto& v : kernel) norm += std::abs(v);
    return norm / static_cast<double>(size);
}

void write_split_norms_csv(const std::string& path, const SymbolSplit& split) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path);
    out << "level,l2_norm\n";
    for (std::size_t lev = 0; lev < split.partition.levels.size(); ++lev) {
        const SpaceTimeSlab& slab = split.components[lev];
        double sq = 0.0;
        for (double v : slab.values) sq += v * v;
        const double cell = slab.t_spacing * slab.grid.cell_volume() * slab.xi.spacing();
        char line[64];
        std::snprintf(line, sizeof line, "%d,%.17g\n", split.partition.levels[lev],
                      std::sqrt(sq * cell));
        out << line;
    }
}

}  // namespace kspde
