#include "kspde/noise.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace kspde {

namespace {

struct Counter4 {
    std::uint32_t v[4];
};

void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
    const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
    hi = static_cast<std::uint32_t>(p >> 32);
    lo = static_cast<std::uint32_t>(p);
}

// Philox4x32-10: ten bijective rounds keyed by the seed; the output block is a
// pure function of (key, counter).
Counter4 philox4x32(std::uint32_t k0, std::uint32_t k1, Counter4 ctr) {
    constexpr std::uint32_t kMul0 = 0xD2511F53u;
    constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
    constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
    constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;
    for (int round = 0; round < 10; ++round) {
        std::uint32_t hi0, lo0, hi1, lo1;
        mulhilo(kMul0, ctr.v[0], hi0, lo0);
        mulhilo(kMul1, ctr.v[2], hi1, lo1);
        ctr = Counter4{{hi1 ^ ctr.v[1] ^ k0, lo1, hi0 ^ ctr.v[3] ^ k1, lo0}};
        k0 += kWeyl0;
        k1 += kWeyl1;
    }
    return ctr;
}

double spatial_factor(SpatialShape shape, int k, double x) {
    switch (shape) {
        case SpatialShape::Cosine: return std::cos(k * x);
        case SpatialShape::Sine: return std::sin(k * x);
        case SpatialShape::One: return 1.0;
    }
    return 0.0;
}

double spatial_factor_dx(SpatialShape shape, int k, double x) {
    switch (shape) {
        case SpatialShape::Cosine: return -k * std::sin(k * x);
        case SpatialShape::Sine: return k * std::cos(k * x);
        case SpatialShape::One: return 0.0;
    }
    return 0.0;
}

}  // namespace

double normal_sample(std::uint64_t key, std::uint64_t counter_hi, std::uint64_t counter_lo) {
    Counter4 ctr{{static_cast<std::uint32_t>(counter_lo),
                  static_cast<std::uint32_t>(counter_lo >> 32),
                  static_cast<std::uint32_t>(counter_hi),
                  static_cast<std::uint32_t>(counter_hi >> 32)}};
    const Counter4 out = philox4x32(static_cast<std::uint32_t>(key),
                                    static_cast<std::uint32_t>(key >> 32), ctr);
    const std::uint64_t a = (static_cast<std::uint64_t>(out.v[0]) << 32) | out.v[1];
    const std::uint64_t b = (static_cast<std::uint64_t>(out.v[2]) << 32) | out.v[3];
    const double u1 = (static_cast<double>(a >> 11) + 1.0) * 0x1p-53;  // (0, 1]
    const double u2 = static_cast<double>(b >> 11) * 0x1p-53;          // [0, 1)
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(kTwoPi * u2);
}

NoiseModel NoiseModel::Deterministic() { return NoiseModel{}; }

NoiseModel NoiseModel::Additive(std::vector<double> alpha_seq) {
    NoiseModel model;
    model.mode_count = static_cast<int>(alpha_seq.size());
    model.alpha = std::move(alpha_seq);
    for (int k = 1; k <= model.mode_count; ++k) {
        model.shape.push_back(SpatialShape::One);
        model.wavenumber.push_back(k);
        model.spatial_weight.push_back(1.0);
        model.profile.push_back([](double) { return 1.0; });
    }
    return model;
}

NoiseModel NoiseModel::Default(std::vector<double> alpha_seq) {
    NoiseModel model;
    model.mode_count = static_cast<int>(alpha_seq.size());
    model.alpha = std::move(alpha_seq);
    for (int k = 1; k <= model.mode_count; ++k) {
        model.shape.push_back(SpatialShape::Cosine);
        model.wavenumber.push_back(k);
        model.spatial_weight.push_back(1.0 / std::max(1, k));
        model.profile.push_back([](double xi) { return std::tanh(xi); });
    }
    return model;
}

NoiseModel NoiseModel::SineLinear(std::vector<double> alpha_seq) {
    NoiseModel model;
    model.mode_count = static_cast<int>(alpha_seq.size());
    model.alpha = std::move(alpha_seq);
    for (int k = 1; k <= model.mode_count; ++k) {
        model.shape.push_back(SpatialShape::Sine);
        model.wavenumber.push_back(k);
        model.spatial_weight.push_back(1.0);
        model.profile.push_back([](double xi) { return xi; });
    }
    return model;
}

NoiseModel noise_from_family(const std::string& family, std::vector<double> alpha_seq) {
    if (family == "additive") return NoiseModel::Additive(std::move(alpha_seq));
    if (family == "multiplicative-default") return NoiseModel::Default(std::move(alpha_seq));
    if (family == "sine-linear") return NoiseModel::SineLinear(std::move(alpha_seq));
    if (family == "deterministic" && alpha_seq.empty()) return NoiseModel::Deterministic();
    throw std::invalid_argument("unknown noise family: " + family);
}

void NoiseModel::validate() const {
    const std::size_t k = static_cast<std::size_t>(mode_count);
    if (mode_count < 0) throw std::invalid_argument("mode count must be >= 0");
    if (alpha.size() != k || shape.size() != k || wavenumber.size() != k ||
        spatial_weight.size() != k || profile.size() != k)
        throw std::invalid_argument("noise model arrays must all have K entries");
    for (double a : alpha)
        if (!(a > 0.0)) throw std::invalid_argument("mode amplitudes must be positive");
    for (int w : wavenumber)
        if (w < 1) throw std::invalid_argument("wavenumbers must be >= 1");
}

double NoiseModel::amplitude() const {
    double d = 0.0;
    for (double a : alpha) d += a * a;
    return d;
}

double NoiseModel::g(int mode, double x, double xi) const {
    return alpha[mode] * spatial_weight[mode] *
           spatial_factor(shape[mode], wavenumber[mode], x) * profile[mode](xi);
}

double NoiseModel::sum_g_squared(double x, double xi) const {
    double acc = 0.0;
    for (int mode = 0; mode < mode_count; ++mode) {
        const double v = g(mode, x, xi);
        acc += v * v;
    }
    return acc;
}

WienerPath::WienerPath(std::uint64_t seed_, double dt_, int mode_count_, long max_steps_)
    : seed(seed_), dt(dt_), mode_count(mode_count_), max_steps(max_steps_) {
    if (!(dt > 0.0)) throw std::invalid_argument("time step must be positive");
    if (mode_count < 0) throw std::invalid_argument("mode count must be >= 0");
    if (max_steps < 0) throw std::invalid_argument("horizon must be >= 0");
}

std::vector<double> WienerPath::at(long step_index) const {
    if (step_index < 0 || (max_steps > 0 && step_index >= max_steps))
        throw HorizonExceeded("step index outside the configured horizon");
    std::vector<double> dB(static_cast<std::size_t>(mode_count));
    const double scale = std::sqrt(dt);
    for (int mode = 0; mode < mode_count; ++mode)
        dB[mode] = scale * normal_sample(seed, static_cast<std::uint64_t>(step_index),
                                         static_cast<std::uint64_t>(mode));
    return dB;
}

std::vector<double> sample_increments(const WienerPath& path, long step_index) {
    return path.at(step_index);
}

Field apply_noise(const Field& u, const NoiseModel& model,
                  const std::vector<double>& increments) {
    if (increments.size() != static_cast<std::size_t>(model.mode_count))
        throw GridMismatch("increment array length differs from the mode count");
    Field out(u.grid);
    const int points = u.grid.points_per_dim;
    if (u.grid.dim == 1) {
        for (int i = 0; i < points; ++i) {
            const double x = u.grid.x(i);
            double acc = 0.0;
            for (int mode = 0; mode < model.mode_count; ++mode)
                acc += model.g(mode, x, u(i)) * increments[mode];
            out(i) = acc;
        }
    } else {
        for (int i = 0; i < points; ++i) {
            const double x = u.grid.x(i);
            for (int j = 0; j < points; ++j) {
                double acc = 0.0;
                for (int mode = 0; mode < model.mode_count; ++mode)
                    acc += model.g(mode, x, u(i, j)) * increments[mode];
                out(i, j) = acc;
            }
        }
    }
    return out;
}

BoundsReport verify_bounds(const NoiseModel& model, const TorusGrid& x_grid, double xi_lo,
                           double xi_hi) {
    model.validate();
    if (!(xi_lo < xi_hi)) throw std::invalid_argument("empty value range");
    constexpr int kXiSamples = 257;
    constexpr double kTol = 1.0 + 1e-6;
    const double h = 1e-6;

    BoundsReport report;
    report.passed = true;
    const double d_total = model.amplitude();

    for (int mode = 0; mode < model.mode_count; ++mode) {
        ModeBounds mb;
        mb.wavenumber = model.wavenumber[mode];
        double worst = 0.0;
        for (int i = 0; i < x_grid.points_per_dim; ++i) {
            const double x = x_grid.x(i);
            const double at_zero = std::abs(model.g(mode, x, 0.0));
            if (at_zero > mb.max_at_zero) mb.max_at_zero = at_zero;
            for (int s = 0; s < kXiSamples; ++s) {
                const double xi = xi_lo + (xi_hi - xi_lo) * s / (kXiSamples - 1);
                const double dx =
                    std::abs(model.g(mode, x + h, xi) - model.g(mode, x - h, xi)) / (2.0 * h);
                const double dxi =
                    std::abs(model.g(mode, x, xi + h) - model.g(mode, x, xi - h)) / (2.0 * h);
                const double local = std::max({at_zero, dx, dxi});
                if (local > worst) {
                    worst = local;
                    mb.worst_x = x;
                    mb.worst_xi = xi;
                }
                if (dx > mb.max_dx) mb.max_dx = dx;
                if (dxi > mb.max_dxi) mb.max_dxi = dxi;
            }
        }
        mb.ratio = worst / model.alpha[mode];
        if (mb.ratio > kTol) report.passed = false;
        report.modes.push_back(mb);
    }

    if (d_total > 0.0) {
        double worst_ratio = 0.0;
        for (int i = 0; i < x_grid.points_per_dim; ++i) {
            const double x = x_grid.x(i);
            for (int s = 0; s < kXiSamples; ++s) {
                const double xi = xi_lo + (xi_hi - xi_lo) * s / (kXiSamples - 1);
                const double ratio =
                    model.sum_g_squared(x, xi) / (2.0 * d_total * (1.0 + xi * xi));
                if (ratio > worst_ratio) worst_ratio = ratio;
            }
        }
        report.g_squared_ratio = worst_ratio;
        if (worst_ratio > kTol) report.passed = false;
    }
    return report;
}

void require_bounds(const NoiseModel& model, const TorusGrid& x_grid, double xi_lo,
                    double xi_hi) {
    const BoundsReport report = verify_bounds(model, x_grid, xi_lo, xi_hi);
    if (report.passed) return;
    const ModeBounds* worst = nullptr;
    for (const ModeBounds& mb : report.modes)
        if (mb.ratio > 1.0 + 1e-6 && (!worst || mb.ratio > worst->ratio)) worst = &mb;
    if (worst) {
        char msg[160];
        std::snprintf(msg, sizeof(msg),
                      "noise coefficient bound violated at mode %d, x=%.6g, xi=%.6g, ratio=%.6g",
                      worst->wavenumber, worst->worst_x, worst->worst_xi, worst->ratio);
        throw BoundViolation(msg);
    }
    throw BoundViolation("noise envelope bound G^2 <= 2D(1+xi^2) violated");
}

}  // namespace kspde
