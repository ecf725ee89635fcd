#pragma once

#include <complex>
#include <cstdint>
#include <string>
#include <vector>

#include "kspde/errors.hpp"

namespace kspde {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;

// Uniform periodic grid on [0, 2*pi)^dim with power-of-two resolution.
struct TorusGrid {
    int dim = 1;
    int points_per_dim = 8;
    double spacing = kTwoPi / 8.0;

    TorusGrid() = default;
    TorusGrid(int dim_, int points_per_dim_);

    std::size_t size() const;
    double x(int i) const { return spacing * i; }
    double cell_volume() const;

    bool operator==(const TorusGrid& o) const {
        return dim == o.dim && points_per_dim == o.points_per_dim;
    }
    bool operator!=(const TorusGrid& o) const { return !(*this == o); }
};

// Real-valued grid function, row-major in 2D: index = i * points_per_dim + j.
struct Field {
    TorusGrid grid;
    std::vector<double> values;

    Field() = default;
    explicit Field(const TorusGrid& g, double fill = 0.0);

    double& operator()(int i) { return values[static_cast<std::size_t>(i)]; }
    double operator()(int i) const { return values[static_cast<std::size_t>(i)]; }
    double& operator()(int i, int j) {
        return values[static_cast<std::size_t>(i) * grid.points_per_dim + j];
    }
    double operator()(int i, int j) const {
        return values[static_cast<std::size_t>(i) * grid.points_per_dim + j];
    }

    bool all_finite() const;
    double max_abs() const;
};

// Complex Fourier coefficients in DFT layout: along each axis the entry at
// index i carries integer frequency i for i < P/2 and i - P otherwise.
struct SpectralField {
    TorusGrid grid;
    std::vector<std::complex<double>> coefficients;

    SpectralField() = default;
    explicit SpectralField(const TorusGrid& g);

    std::size_t index_of(int n) const;           // 1D frequency -> storage index
    std::size_t index_of(int n1, int n2) const;  // 2D
    std::complex<double>& at(int n);
    std::complex<double> at(int n) const;
    std::complex<double>& at(int n1, int n2);
    std::complex<double> at(int n1, int n2) const;

    double max_abs() const;
};

// coeff(n) = (2*pi)^(-N/2) * sum_j v_j e^{-i n.x_j} * dx^N
SpectralField forward_transform(const Field& f);

// field(x) = (2*pi)^(-N/2) * sum_n w_n e^{i n.x}; requires Hermitian symmetry.
Field inverse_transform(const SpectralField& g);

// Riemann-sum L^p norm; pass std::numeric_limits<double>::infinity() for sup.
double lp_norm(const Field& f, double p);

// Riemann sum of max(f - g, 0).
double positive_part_l1(const Field& f, const Field& g);

// Riemann sum of f (signed), i.e. the conserved total mass.
double total_mass(const Field& f);

// Low-level DFT helpers (unnormalized, FFTW conventions), exposed for the
// analysis module's time-direction transforms. sign: -1 forward, +1 backward.
void dft_1d(std::vector<std::complex<double>>& data, int sign);
void dft_grid(const TorusGrid& grid, std::vector<std::complex<double>>& data, int sign);

// Binary dump: header (magic "KSPD", u32 version, u32 dim, u32 points) then
// little-endian f64 values in row-major order.
void write_field(const std::string& path, const Field& f);
Field read_field(const std::string& path);

// One row per grid point: x[,y],value.
void write_field_csv(const std::string& path, const Field& f);

}  // namespace kspde
