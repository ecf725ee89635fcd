#include "kspde/kinetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "kspde/errors.hpp"

namespace kspde {

namespace {

// Exact antiderivatives of the positive/negative parts of the truncated flux
// derivative, cut at level e; differences across faces shadow the kinetic
// upwind flux integrated over xi below e.
double pos_flux_cumulative(const ModelSpec& model, double u, double e) {
    return model.flux_pos_integral(std::min(u, e));
}

double neg_flux_cumulative(const ModelSpec& model, double u, double e) {
    return model.flux_neg_integral(std::min(u, e));
}

std::pair<double, double> state_range(const Field& u) {
    double lo = u.values[0], hi = u.values[0];
    for (double v : u.values) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    return {lo, hi};
}

void require_covered(const XiGrid& xi, double lo, double hi) {
    if (!xi.covers(lo, hi)) {
        char msg[160];
        std::snprintf(msg, sizeof(msg),
                      "xi grid [%g, %g] does not cover the solution range [%g, %g] "
                      "with two-cell margin",
                      xi.xi_min, xi.xi_max, lo, hi);
        throw RangeNotCovered(msg);
    }
}

}  // namespace

XiGrid::XiGrid(double lo, double hi, int cell_count) : xi_min(lo), xi_max(hi), cells(cell_count) {
    if (!(hi > lo)) throw std::invalid_argument("xi grid needs xi_max > xi_min");
    if (cell_count < 8) throw std::invalid_argument("xi grid needs at least 8 cells");
}

XiGrid XiGrid::for_envelope(double sup_abs, int cell_count) {
    if (!(sup_abs >= 0.0)) throw std::invalid_argument("envelope must be nonnegative");
    const double target = std::max(1.0, 4.0 * sup_abs);
    const int lmax = static_cast<int>(std::ceil(std::log2(target)));
    const double half = std::ldexp(1.0, lmax + 1);
    return XiGrid(-half, half, cell_count);
}

int XiGrid::cell_of(double v) const {
    const int c = static_cast<int>(std::floor((v - xi_min) / spacing()));
    return std::clamp(c, 0, cells - 1);
}

bool XiGrid::covers(double lo, double hi) const {
    const double margin = 2.0 * spacing();
    return lo >= xi_min + margin && hi <= xi_max - margin;
}

KineticMeasureHistogram::KineticMeasureHistogram(const XiGrid& grid, int x_count, int bin_count,
                                                 MeasureComponent tag)
    : xi(grid), x_cells(x_count), time_bins(bin_count), component(tag) {
    if (x_count < 1 || bin_count < 1)
        throw std::invalid_argument("histogram needs positive cell and bin counts");
    mass.assign(static_cast<std::size_t>(bin_count) * x_count * grid.cells, 0.0);
}

double& KineticMeasureHistogram::at(int bin, int x, int c) {
    return mass[(static_cast<std::size_t>(bin) * x_cells + x) * xi.cells + c];
}

double KineticMeasureHistogram::at(int bin, int x, int c) const {
    return mass[(static_cast<std::size_t>(bin) * x_cells + x) * xi.cells + c];
}

double KineticMeasureHistogram::total() const {
    double acc = 0.0;
    for (double v : mass) acc += v;
    return acc;
}

double KineticMeasureHistogram::shell_mass(double lo_abs, double hi_abs) const {
    double acc = 0.0;
    for (int c = 0; c < xi.cells; ++c) {
        const double a = std::abs(xi.center(c));
        if (a < lo_abs || a >= hi_abs) continue;
        for (int b = 0; b < time_bins; ++b)
            for (int x = 0; x < x_cells; ++x) acc += at(b, x, c);
    }
    return acc;
}

double KineticMeasureHistogram::band_mass(double lo, double hi) const {
    double acc = 0.0;
    for (int c = 0; c < xi.cells; ++c) {
        const double v = xi.center(c);
        if (v < lo || v > hi) continue;
        for (int b = 0; b < time_bins; ++b)
            for (int x = 0; x < x_cells; ++x) acc += at(b, x, c);
    }
    return acc;
}

double KineticMeasureHistogram::x_window_mass(int x_lo, int x_hi) const {
    double acc = 0.0;
    for (int b = 0; b < time_bins; ++b)
        for (int x = x_lo; x <= x_hi; ++x)
            for (int c = 0; c < xi.cells; ++c) acc += at(b, x, c);
    return acc;
}

void KineticMeasureHistogram::merge(const KineticMeasureHistogram& other) {
    if (!(xi == other.xi) || x_cells != other.x_cells || time_bins != other.time_bins ||
        component != other.component)
        throw GridMismatch("histogram layouts differ; cannot merge");
    for (std::size_t i = 0; i < mass.size(); ++i) mass[i] += other.mass[i];
    clipped_negative += other.clipped_negative;
}

void KineticMeasureHistogram::scale(double factor) {
    for (double& v : mass) v *= factor;
    clipped_negative *= factor;
}

void KineticMeasureHistogram::finalize() {
    for (double& v : mass) {
        if (v < 0.0) {
            clipped_negative -= v;
            v = 0.0;
        }
    }
}

std::vector<std::uint8_t> kinetic_function(const Field& u, const XiGrid& xi) {
    auto [lo, hi] = state_range(u);
    require_covered(xi, lo, hi);
    const std::size_t n = u.values.size();
    std::vector<std::uint8_t> f(n * xi.cells);
    for (std::size_t i = 0; i < n; ++i)
        for (int c = 0; c < xi.cells; ++c)
            f[i * xi.cells + c] = u.values[i] > xi.center(c) ? 1 : 0;
    return f;
}

std::vector<std::int8_t> chi_function(const Field& u, const XiGrid& xi) {
    auto [lo, hi] = state_range(u);
    require_covered(xi, lo, hi);
    const std::size_t n = u.values.size();
    std::vector<std::int8_t> chi(n * xi.cells);
    for (int c = 0; c < xi.cells; ++c) {
        const std::int8_t below_zero = 0.0 > xi.center(c) ? 1 : 0;
        for (std::size_t i = 0; i < n; ++i) {
            const std::int8_t above = u.values[i] > xi.center(c) ? 1 : 0;
            chi[i * xi.cells + c] = static_cast<std::int8_t>(above - below_zero);
        }
    }
    return chi;
}

KineticMeasureHistogram accumulate_parabolic_dissipation(const Trajectory& trajectory,
                                                         const ModelSpec& model, const XiGrid& xi,
                                                         int time_bins) {
    if (trajectory.states.size() < 2)
        throw std::invalid_argument("trajectory needs at least two snapshots");
    const int transitions = static_cast<int>(trajectory.states.size()) - 1;
    const TorusGrid& grid = trajectory.states.front().grid;
    const int p = grid.points_per_dim;
    KineticMeasureHistogram hist(xi, static_cast<int>(trajectory.states.front().values.size()),
                                 std::min(time_bins, transitions), MeasureComponent::Parabolic);
    if (!model.diffusion_on()) return hist;  // no parabolic component without A

    for (int s = 0; s < transitions; ++s) {
        const Field& u = trajectory.states[s];
        const double dt = trajectory.times[s + 1] - trajectory.times[s];
        auto [lo, hi] = state_range(u);
        require_covered(xi, lo, hi);
        const int bin = static_cast<int>((static_cast<long>(s) * hist.time_bins) / transitions);

        std::vector<double> psi(u.values.size());
        for (std::size_t i = 0; i < u.values.size(); ++i)
            psi[i] = model.sigma_reg_antiderivative(u.values[i]);

        const double inv2dx = 1.0 / (2.0 * grid.spacing);
        const double volume = grid.cell_volume();
        if (grid.dim == 1) {
            for (int i = 0; i < p; ++i) {
                const double g = (psi[(i + 1) % p] - psi[(i + p - 1) % p]) * inv2dx;
                hist.at(bin, i, xi.cell_of(u.values[i])) += g * g * volume * dt;
            }
        } else {
            auto idx = [p](int i, int j) {
                return static_cast<std::size_t>((i + p) % p) * p + (j + p) % p;
            };
            for (int i = 0; i < p; ++i)
                for (int j = 0; j < p; ++j) {
                    const double gx = (psi[idx(i + 1, j)] - psi[idx(i - 1, j)]) * inv2dx;
                    const double gy = (psi[idx(i, j + 1)] - psi[idx(i, j - 1)]) * inv2dx;
                    hist.at(bin, static_cast<int>(idx(i, j)),
                            xi.cell_of(u.values[idx(i, j)])) += (gx * gx + gy * gy) * volume * dt;
                }
        }
    }
    hist.finalize();
    return hist;
}

KineticMeasureHistogram accumulate_entropy_defect(const Trajectory& trajectory,
                                                  const ModelSpec& model, const XiGrid& xi,
                                                  int time_bins) {
    if (trajectory.states.size() < 2)
        throw std::invalid_argument("trajectory needs at least two snapshots");
    const int transitions = static_cast<int>(trajectory.states.size()) - 1;
    const TorusGrid& grid = trajectory.states.front().grid;
    const int p = grid.points_per_dim;
    const double dx = grid.spacing;
    const double volume = grid.cell_volume();
    const double dxi = xi.spacing();
    KineticMeasureHistogram hist(xi, static_cast<int>(trajectory.states.front().values.size()),
                                 std::min(time_bins, transitions),
                                 MeasureComponent::EntropyDefect);
    const bool convect = model.flux_on();
    const bool diffuse = model.diffusion_on();

    for (int s = 0; s < transitions; ++s) {
        const Field& uo = trajectory.states[s];
        const Field& un = trajectory.states[s + 1];
        const double dt = trajectory.times[s + 1] - trajectory.times[s];
        auto [lo0, hi0] = state_range(uo);
        auto [lo1, hi1] = state_range(un);
        require_covered(xi, std::min(lo0, lo1), std::max(hi0, hi1));
        const int bin = static_cast<int>((static_cast<long>(s) * hist.time_bins) / transitions);

        std::vector<double> areg;
        if (diffuse) {
            areg.resize(uo.values.size());
            for (std::size_t i = 0; i < uo.values.size(); ++i)
                areg[i] = model.A_reg(uo.values[i]);
        }

        // Cumulative residual at level e, times dt: the time term is exact,
        // the flux terms use the pre-step state like the splitting scheme.
        auto deposit_cell = [&](int flat, double u_old, double u_new,
                                const std::vector<std::size_t>& nb, double band_lo,
                                double band_hi) {
            const int c_lo = std::max(0, xi.cell_of(band_lo) - 1);
            const int c_hi = std::min(xi.cells - 1, xi.cell_of(band_hi) + 1);
            for (int c = c_lo; c <= c_hi; ++c) {
                const double e = xi.center(c);
                double r = std::min(u_new, e) - std::min(u_old, e);
                if (convect) {
                    double div = 0.0;
                    // nb holds direction pairs (plus, minus)
                    for (std::size_t d = 0; d + 1 < nb.size(); d += 2) {
                        const double flux_r = pos_flux_cumulative(model, u_old, e) +
                                              neg_flux_cumulative(model, uo.values[nb[d]], e);
                        const double flux_l =
                            pos_flux_cumulative(model, uo.values[nb[d + 1]], e) +
                            neg_flux_cumulative(model, u_old, e);
                        div += flux_r - flux_l;
                    }
                    r += dt * div / dx;
                }
                if (diffuse) {
                    double div = 0.0;
                    for (std::size_t d = 0; d + 1 < nb.size(); d += 2) {
                        const double a_r = 0.5 * (areg[flat] + areg[nb[d]]);
                        const double a_l = 0.5 * (areg[nb[d + 1]] + areg[flat]);
                        div += a_r * (std::min(uo.values[nb[d]], e) - std::min(u_old, e)) -
                               a_l * (std::min(u_old, e) - std::min(uo.values[nb[d + 1]], e));
                    }
                    r -= dt * div / (dx * dx);
                }
                hist.at(bin, flat, c) += r * dxi * volume;
            }
        };

        if (grid.dim == 1) {
            for (int i = 0; i < p; ++i) {
                const std::vector<std::size_t> nb = {static_cast<std::size_t>((i + 1) % p),
                                                     static_cast<std::size_t>((i + p - 1) % p)};
                double band_lo = std::min(uo.values[i], un.values[i]);
                double band_hi = std::max(uo.values[i], un.values[i]);
                for (std::size_t k : nb) {
                    band_lo = std::min(band_lo, uo.values[k]);
                    band_hi = std::max(band_hi, uo.values[k]);
                }
                deposit_cell(i, uo.values[i], un.values[i], nb, band_lo, band_hi);
            }
        } else {
            auto idx = [p](int i, int j) {
                return static_cast<std::size_t>((i + p) % p) * p + (j + p) % p;
            };
            for (int i = 0; i < p; ++i)
                for (int j = 0; j < p; ++j) {
                    const std::size_t flat = idx(i, j);
                    const std::vector<std::size_t> nb = {idx(i + 1, j), idx(i - 1, j),
                                                         idx(i, j + 1), idx(i, j - 1)};
                    double band_lo = std::min(uo.values[flat], un.values[flat]);
                    double band_hi = std::max(uo.values[flat], un.values[flat]);
                    for (std::size_t k : nb) {
                        band_lo = std::min(band_lo, uo.values[k]);
                        band_hi = std::max(band_hi, uo.values[k]);
                    }
                    deposit_cell(static_cast<int>(flat), uo.values[flat], un.values[flat], nb,
                                 band_lo, band_hi);
                }
        }
    }
    hist.finalize();
    return hist;
}

DecayProfile measure_decay_profile(const KineticMeasureHistogram& histogram,
                                   const std::vector<int>& levels) {
    if (levels.empty()) throw std::invalid_argument("need at least one dyadic level");
    DecayProfile profile;
    profile.levels = levels;
    for (int ell : levels) {
        const double lo = std::ldexp(1.0, ell);
        const double hi = std::ldexp(1.0, ell + 1);
        if (histogram.xi.xi_max < hi || -histogram.xi.xi_min < hi) {
            char msg[128];
            std::snprintf(msg, sizeof(msg), "xi grid does not reach the dyadic shell [%g, %g]",
                          lo, hi);
            throw RangeNotCovered(msg);
        }
        profile.scaled_mass.push_back(std::ldexp(1.0, -ell) * histogram.shell_mass(lo, hi));
    }
    for (double v : profile.scaled_mass) profile.total_scaled += v;

    bool ok = true;
    const std::size_t n = profile.scaled_mass.size();
    const std::size_t first = n > 3 ? n - 3 : 0;
    for (std::size_t i = first; i + 1 < n; ++i)
        if (profile.scaled_mass[i + 1] > profile.scaled_mass[i] + 1e-15) ok = false;
    if (profile.total_scaled > 0.0 && profile.scaled_mass.back() > 0.01 * profile.total_scaled)
        ok = false;
    profile.passed = ok;
    return profile;
}

double cutoff_eval(const CutoffFamily& family, double xi) {
    const double a = std::abs(xi);
    switch (family.kind) {
        case CutoffKind::Plateau: {
            const double scale = std::ldexp(1.0, static_cast<int>(family.parameter));
            if (a <= scale) return 1.0;
            if (a >= 2.0 * scale) return 0.0;
            return (2.0 * scale - a) / scale;  // slope exactly 2^-ell
        }
        case CutoffKind::BandIndicator:
            return a <= family.parameter ? 1.0 : 0.0;
        case CutoffKind::BandSecondPrimitive: {
            const double k = family.parameter;
            if (a <= k) return 0.5 * xi * xi;
            return k * a - 0.5 * k * k;
        }
        case CutoffKind::ScaledBump:
        case CutoffKind::Mollifier: {
            const double d = family.parameter;
            if (!(d > 0.0)) throw std::invalid_argument("bump scale must be positive");
            const double z = xi / d;
            if (std::abs(z) >= 1.0) return 0.0;
            const double w = 1.0 - z * z;
            return (35.0 / 32.0) * w * w * w / d;
        }
    }
    throw std::invalid_argument("unknown cutoff kind");
}

void write_histogram_csv(const std::string& path, const KineticMeasureHistogram& histogram) {
    std::FILE* f = std::fopen(path.c_str(), "w");
    if (!f) throw std::runtime_error("cannot open histogram csv for writing: " + path);
    std::fprintf(f, "t_bin,x_cell,xi_cell,mass,component\n");
    const char* tag =
        histogram.component == MeasureComponent::Parabolic ? "parabolic" : "entropy-defect";
    for (int b = 0; b < histogram.time_bins; ++b)
        for (int x = 0; x < histogram.x_cells; ++x)
            for (int c = 0; c < histogram.xi.cells; ++c) {
                const double v = histogram.at(b, x, c);
                if (v != 0.0) std::fprintf(f, "%d,%d,%d,%.17g,%s\n", b, x, c, v, tag);
            }
    std::fclose(f);
}

void write_decay_csv(const std::string& path, const DecayProfile& profile) {
    std::FILE* f = std::fopen(path.c_str(), "w");
    if (!f) throw std::runtime_error("cannot open decay csv for writing: " + path);
    std::fprintf(f, "ell,scaled_mass\n");
    for (std::size_t i = 0; i < profile.levels.size(); ++i)
        std::fprintf(f, "%d,%.17g\n", profile.levels[i], profile.scaled_mass[i]);
    std::fclose(f);
}

}  // namespace kspde
