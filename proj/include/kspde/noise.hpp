#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "kspde/field.hpp"

namespace kspde {

enum class SpatialShape { Cosine, Sine, One };

// Truncated multiplicative noise: g_k(x, xi) = alpha_k * c_k(x) * s_k(xi)
// with c_k in {cos(kx), sin(kx), 1} and s_k a bounded C^1 profile. In 2D the
// spatial factor depends on the first coordinate.
struct NoiseModel {
    int mode_count = 0;  // K = 0 means deterministic dynamics
    std::vector<double> alpha;
    std::vector<SpatialShape> shape;
    std::vector<int> wavenumber;
    std::vector<double> spatial_weight;  // scales c_k, e.g. 1/k in the default family
    std::vector<std::function<double(double)>> profile;

    static NoiseModel Deterministic();
    static NoiseModel Additive(std::vector<double> alpha_seq);
    // cos(kx)/max(1,k) * tanh(xi): every bound below holds with constant 1.
    static NoiseModel Default(std::vector<double> alpha_seq);
    // sin(kx) * xi: deliberately breaks the spatial-derivative bound for k > 1.
    static NoiseModel SineLinear(std::vector<double> alpha_seq);

    void validate() const;
    double amplitude() const;  // D = sum alpha_k^2
    double g(int mode, double x, double xi) const;
    double sum_g_squared(double x, double xi) const;  // G^2
};

NoiseModel noise_from_family(const std::string& family, std::vector<double> alpha_seq);

// Counter-based Gaussian stream: the sample is a pure function of
// (key, counter), so ensemble members and steps can be drawn in any order.
double normal_sample(std::uint64_t key, std::uint64_t counter_hi, std::uint64_t counter_lo);

// Truncated cylindrical Wiener increments: mode k over step j is
// Normal(0, dt), independent across (j, k), reproducible from the seed.
struct WienerPath {
    std::uint64_t seed = 0;
    double dt = 0.0;
    int mode_count = 0;
    long max_steps = 0;

    WienerPath() = default;
    WienerPath(std::uint64_t seed_, double dt_, int mode_count_, long max_steps_);

    std::vector<double> at(long step_index) const;
};

std::vector<double> sample_increments(const WienerPath& path, long step_index);

// Euler-Maruyama noise contribution sum_k g_k(x, u(x)) dB_k.
Field apply_noise(const Field& u, const NoiseModel& model,
                  const std::vector<double>& increments);

struct ModeBounds {
    int wavenumber = 0;
    double max_at_zero = 0.0;   // sup_x |g_k(x, 0)|
    double max_dx = 0.0;        // sup |d/dx g_k|
    double max_dxi = 0.0;       // sup |d/dxi g_k|
    double ratio = 0.0;         // worst of the three over alpha_k
    double worst_x = 0.0;
    double worst_xi = 0.0;
};

struct BoundsReport {
    std::vector<ModeBounds> modes;
    double g_squared_ratio = 0.0;  // max G^2 / (2 D (1 + xi^2))
    bool passed = false;
};

// Samples the coefficient bounds |g_k(x,0)|, |dx g_k|, |dxi g_k| <= alpha_k
// and G^2 <= 2D(1+xi^2) over the grid and value range.
BoundsReport verify_bounds(const NoiseModel& model, const TorusGrid& x_grid, double xi_lo,
                           double xi_hi);

// Same check, but throws BoundViolation naming the offending mode and point.
void require_bounds(const NoiseModel& model, const TorusGrid& x_grid, double xi_lo,
                    double xi_hi);

}  // namespace kspde
