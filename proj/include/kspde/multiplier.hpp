#pragma once

// Symbol-space kernels shared by the estimator and model layers: quintic
// plateau/annulus bumps forming dyadic partitions of unity, splits of
// (t, x, xi) sample blocks by symbol magnitude, and discrete kernel L1 norms
// bounding Fourier-multiplier operators on the lattice torus.

#include "kspde/errors.hpp"
#include "kspde/field.hpp"
#include "kspde/kinetic.hpp"
#include "kspde/model.hpp"

#include <complex>
#include <cstddef>
#include <string>
#include <vector>

namespace kspde {

// Quintic plateau profile: 1 on |z| <= 1, the smoothstep 6t^5 - 15t^4 + 10t^3
// ramps it down to 0 across 1 <= |z| <= 2; C^2 at both seams.
double plateau_bump(double z);

// Partition pieces. psi0(z) = plateau(2z) covers |z| <= 1; psi1(z) =
// plateau(z) - plateau(2z) lives on the annulus 1/2 <= |z| <= 2; the dyadic
// sum psi0(z) + sum_{K=1,2,4,...,M} psi1(z/K) telescopes to plateau(z/M),
// hence equals 1 for |z| <= M.
double psi0(double z);
double psi1(double z);
double psi_tilde(double z);  // psi1(z)/z, finite on the annulus

// Plateau or annulus profile recentered to `center` and rescaled by `radius`.
struct BumpSpec {
    double center = 0.0;
    double radius = 1.0;
    bool annulus = false;

    double operator()(double z) const;
};

// Dyadic weight family over symbol magnitudes: level 0 carries psi0(s/delta),
// level K >= 1 carries psi1(s/(delta K)). Levels {0, 1, 2, 4, ..., K_max}.
struct SymbolPartition {
    double delta = 1.0;
    std::vector<int> levels;

    // K_max chosen so the weights sum to exactly 1 for all |s| <= sup_symbol.
    static SymbolPartition for_range(double delta, double sup_symbol);

    double weight(int level, double symbol_magnitude) const;
    double weight_sum(double symbol_magnitude) const;
};

// (t, x, xi) sample block, row-major [t][x][xi] with x itself row-major in
// 2D. t_spacing maps the time DFT index to a physical frequency.
struct SpaceTimeSlab {
    int t_count = 0;
    double t_spacing = 1.0;
    TorusGrid grid;
    XiGrid xi;
    std::vector<double> values;

    SpaceTimeSlab() = default;
    SpaceTimeSlab(int t_count_, double t_spacing_, const TorusGrid& g, const XiGrid& x);

    std::size_t x_size() const { return grid.size(); }
    std::size_t index(int t, std::size_t x, int c) const {
        return (static_cast<std::size_t>(t) * grid.size() + x) * static_cast<std::size_t>(xi.cells) +
               static_cast<std::size_t>(c);
    }
    double& at(int t, std::size_t x, int c) { return values[index(t, x, c)]; }
    double at(int t, std::size_t x, int c) const { return values[index(t, x, c)]; }
};

// Symbol magnitudes |L(u, n, xi)| over the (t, x) DFT lattice of a slab,
// averaged with the reflected lattice point. At proper frequencies the
// reflection (u, n) -> (-u, -n) preserves the magnitude exactly, so the
// average is a no-op; on Nyquist columns of an even lattice, where +P/2 and
// -P/2 share one index, it makes conjugate DFT partners receive identical
// weights, keeping filtered spectra of real data Hermitian.
std::vector<double> symbol_magnitude_lattice(const ModelSpec& spec, int t_count,
                                             double t_spacing, const TorusGrid& grid,
                                             double xi);

// One component per partition level; component K is spectrally supported
// where the symbol magnitude lies in [delta K / 2, 2 delta K] (K >= 1), and
// the components sum back to the input block.
struct SymbolSplit {
    SymbolPartition partition;
    std::vector<SpaceTimeSlab> components;
};

SymbolSplit dyadic_symbol_split(const SpaceTimeSlab& g, const ModelSpec& spec, double delta);

// Joint unnormalized DFT over (t, x) of a complex block laid out [t][x];
// sign -1 forward, +1 backward, forward-then-backward scales by the block
// size.
void dft_time_space(std::vector<std::complex<double>>& block, int t_count, const TorusGrid& grid,
                    int sign);

// Discrete L1 -> L1 operator norm of a Fourier multiplier on the lattice
// torus: the l1 norm of its inverse DFT (the circulant column). dims is {P}
// in one dimension or {P, P} in two.
double kernel_l1_norm(const std::vector<std::complex<double>>& multiplier,
                      const std::vector<int>& dims);

// Per-level L2 norms of a split, one row per level: level,l2_norm.
void write_split_norms_csv(const std::string& path, const SymbolSplit& split);

}  // namespace kspde
