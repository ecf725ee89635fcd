#include "kspde/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace kspde {

namespace {

void require_same_layout(const Trajectory& a, const Trajectory& b) {
    if (a.states.empty() || b.states.empty())
        throw std::invalid_argument("trajectories must carry at least one state");
    if (a.states.front().grid != b.states.front().grid)
        throw GridMismatch("trajectories live on different grids");
    if (a.times.size() != b.times.size())
        throw std::invalid_argument("trajectories record different numbers of snapshots");
    for (std::size_t i = 0; i < a.times.size(); ++i)
        if (std::abs(a.times[i] - b.times[i]) > 1e-12 * std::max(1.0, std::abs(a.times[i])))
            throw std::invalid_argument("trajectories record different snapshot times");
}

// Least-squares slope of y against x.
double fit_slope(const std::vector<double>& x, const std::vector<double>& y) {
    const double n = static_cast<double>(x.size());
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxx = 0.0;
    double sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    if (sxx == 0.0) throw DegenerateFit("slope fit needs at least two distinct abscissae");
    return sxy / sxx;
}

}  // namespace

EnsembleResult EnsembleResult::from_members(std::vector<double> times,
                                            std::vector<std::vector<double>> series) {
    if (series.empty()) throw std::invalid_argument("ensemble needs at least one member");
    for (const auto& member : series)
        if (member.size() != times.size())
            throw std::invalid_argument("member series length differs from the time axis");

    EnsembleResult result;
    result.member_count = static_cast<int>(series.size());
    result.times = std::move(times);
    result.member_series = std::move(series);
    const std::size_t steps = result.times.size();
    const double m = static_cast<double>(result.member_count);
    result.mean.assign(steps, 0.0);
    result.stderr_of_mean.assign(steps, 0.0);
    for (std::size_t t = 0; t < steps; ++t) {
        double sum = 0.0;
        for (const auto& member : result.member_series) sum += member[t];
        result.mean[t] = sum / m;
        if (result.member_count > 1) {
            double sq = 0.0;
            for (const auto& member : result.member_series) {
                const double d = member[t] - result.mean[t];
                sq += d * d;
            }
            result.stderr_of_mean[t] = std::sqrt(sq / (m - 1.0)) / std::sqrt(m);
        }
    }
    return result;
}

std::vector<double> contraction_gap(const Trajectory& a, const Trajectory& b) {
    require_same_layout(a, b);
    if (a.noise_seed && b.noise_seed && *a.noise_seed != *b.noise_seed)
        throw CouplingMismatch("contraction gap requires a shared noise path");
    std::vector<double> gap(a.times.size());
    for (std::size_t i = 0; i < a.times.size(); ++i)
        gap[i] = positive_part_l1(a.states[i], b.states[i]);
    return gap;
}

MomentReport lp_moment_check(const std::vector<Trajectory>& ensemble, double p, double q) {
    if (ensemble.empty()) throw std::invalid_argument("moment check needs at least one member");
    if (p < 1.0 || q < 1.0) throw InvalidExponent("moment exponents must satisfy p, q >= 1");

    MomentReport report;
    report.p = p;
    report.q = q;
    double sup_sum = 0.0;
    double datum_sum = 0.0;
    for (const auto& member : ensemble) {
        if (member.states.empty())
            throw std::invalid_argument("moment check members must carry states");
        double sup = 0.0;
        for (const auto& state : member.states)
            sup = std::max(sup, std::pow(lp_norm(state, p), p * q));
        sup_sum += sup;
        datum_sum += std::pow(lp_norm(member.states.front(), p), p * q);
    }
    const double m = static_cast<double>(ensemble.size());
    report.sup_moment = sup_sum / m;
    report.datum_moment = 1.0 + datum_sum / m;
    report.ratio = report.sup_moment / report.datum_moment;
    return report;
}

double fractional_sobolev_seminorm(const Field& f, double s, double r) {
    if (!(s > 0.0) || !(s < 1.0)) throw InvalidExponent("fractional order must lie in (0, 1)");
    if (!(r >= 1.0)) throw InvalidExponent("integrability exponent must be >= 1");

    const int p = f.grid.points_per_dim;
    const double dx = f.grid.spacing;
    const int dim = f.grid.dim;
    const double exponent = dim + s * r;

    if (dim == 1) {
        // Torus distances depend only on the index offset; tabulate weights.
        std::vector<double> weight(static_cast<std::size_t>(p), 0.0);
        for (int k = 1; k < p; ++k) {
            const double d = dx * std::min(k, p - k);
            weight[static_cast<std::size_t>(k)] = std::pow(d, -exponent);
        }
        double sum = 0.0;
        for (int i = 0; i < p; ++i)
            for (int k = 1; k < p; ++k) {
                const int j = (i + k) % p;
                sum += std::pow(std::abs(f.values[static_cast<std::size_t>(i)] -
                                         f.values[static_cast<std::size_t>(j)]),
                                r) *
                       weight[static_cast<std::size_t>(k)];
            }
        return sum * dx * dx;
    }

    std::vector<double> weight(static_cast<std::size_t>(p) * p, 0.0);
    for (int ki = 0; ki < p; ++ki)
        for (int kj = 0; kj < p; ++kj) {
            if (ki == 0 && kj == 0) continue;
            const double di = dx * std::min(ki, p - ki);
            const double dj = dx * std::min(kj, p - kj);
            weight[static_cast<std::size_t>(ki) * p + kj] = std::pow(std::hypot(di, dj), -exponent);
        }
    double sum = 0.0;
    for (int i = 0; i < p; ++i)
        for (int j = 0; j < p; ++j) {
            const double v = f(i, j);
            for (int ki = 0; ki < p; ++ki)
                for (int kj = 0; kj < p; ++kj) {
                    const double w = weight[static_cast<std::size_t>(ki) * p + kj];
                    if (w == 0.0) continue;
                    sum += std::pow(std::abs(v - f((i + ki) % p, (j + kj) % p)), r) * w;
                }
        }
    return sum * std::pow(dx, 2.0 * dim);
}

DyadicBlocks littlewood_paley_blocks(const Field& f) {
    const SpectralField spectrum = forward_transform(f);
    const int p = f.grid.points_per_dim;
    const double max_mode = f.grid.dim == 1 ? p / 2.0 : std::sqrt(2.0) * (p / 2.0);
    int k_max = 1;
    while (static_cast<double>(k_max) < max_mode) k_max *= 2;

    DyadicBlocks blocks;
    blocks.levels.push_back(0);
    for (int k = 1; k <= k_max; k *= 2) blocks.levels.push_back(k);

    for (int level : blocks.levels) {
        SpectralField filtered(f.grid);
        for (int n1 = -p / 2; n1 < p / 2; ++n1) {
            if (f.grid.dim == 1) {
                const double a = std::abs(static_cast<double>(n1));
                const double w = level == 0 ? psi0(a) : psi1(a / level);
                filtered.at(n1) = spectrum.at(n1) * w;
            } else {
                for (int n2 = -p / 2; n2 < p / 2; ++n2) {
                    const double a = std::hypot(static_cast<double>(n1), static_cast<double>(n2));
                    const double w = level == 0 ? psi0(a) : psi1(a / level);
                    filtered.at(n1, n2) = spectrum.at(n1, n2) * w;
                }
            }
        }
        blocks.blocks.push_back(inverse_transform(filtered));
    }
    return blocks;
}

RegularityReport regularity_exponent_fit(const std::vector<Trajectory>& ensemble,
                                         const Localization& loc, double s_bound, double r) {
    if (ensemble.empty()) throw std::invalid_argument("regularity fit needs an ensemble");
    if (!(r >= 1.0)) throw InvalidExponent("integrability exponent must be >= 1");
    if (ensemble.front().states.empty())
        throw std::invalid_argument("members must carry states");
    const TorusGrid grid = ensemble.front().states.front().grid;

    std::vector<int> levels;
    std::vector<double> accum;  // mean over snapshots of int |block|^r dx
    std::size_t snapshots = 0;
    for (const auto& member : ensemble) {
        if (member.states.empty()) throw std::invalid_argument("members must carry states");
        for (const auto& state : member.states) {
            if (state.grid != grid) throw GridMismatch("ensemble states on mixed grids");
            Field g(state.grid);
            for (std::size_t i = 0; i < state.values.size(); ++i)
                g.values[i] = loc.eta_bar(state.values[i]);
            DyadicBlocks blocks = littlewood_paley_blocks(g);
            if (levels.empty()) {
                levels = blocks.levels;
                accum.assign(levels.size(), 0.0);
            }
            for (std::size_t lev = 0; lev < levels.size(); ++lev)
                accum[lev] += std::pow(lp_norm(blocks.blocks[lev], r), r);
            ++snapshots;
        }
    }
    for (double& a : accum) a /= static_cast<double>(snapshots);

    // Drop level 0 (DC), the lowest dyadic level, and the grid-cutoff level;
    // fit the middle of the scale range.
    RegularityReport report;
    report.r = r;
    report.s_bound = s_bound;
    std::vector<double> log_j;
    std::vector<double> log_norm;
    for (std::size_t lev = 1; lev + 1 < levels.size(); ++lev) {
        if (levels[lev] == 1) continue;
        const double norm = std::pow(accum[lev], 1.0 / r);
        if (!(norm > 0.0)) continue;
        report.levels_fit.push_back(levels[lev]);
        report.block_norms.push_back(norm);
        log_j.push_back(std::log2(static_cast<double>(levels[lev])));
        log_norm.push_back(std::log2(norm));
    }
    if (log_j.size() < 4)
        throw InsufficientResolution("regularity fit needs at least four dyadic levels");
    report.slope = fit_slope(log_j, log_norm);
    report.s_emp = -report.slope;
    report.passed = report.s_emp >= 0.9 * s_bound;
    return report;
}

std::vector<double> averaged_multiplier_apply(const SpaceTimeSlab& f, const BumpSpec& psi,
                                              const ModelSpec& spec, double delta,
                                              bool window_time) {
    if (delta <= 0.0) throw std::invalid_argument("filter width must be positive");
    const std::size_t xsize = f.x_size();
    const std::size_t plane = static_cast<std::size_t>(f.t_count) * xsize;

    std::vector<double> window(static_cast<std::size_t>(f.t_count), 1.0);
    if (window_time)
        for (int t = 0; t < f.t_count; ++t)
            window[static_cast<std::size_t>(t)] =
                0.5 - 0.5 * std::cos(2.0 * M_PI * t / f.t_count);

    std::vector<std::complex<double>> slice(plane);
    std::vector<std::complex<double>> accum(plane, {0.0, 0.0});
    for (int c = 0; c < f.xi.cells; ++c) {
        for (int t = 0; t < f.t_count; ++t)
            for (std::size_t x = 0; x < xsize; ++x)
                slice[static_cast<std::size_t>(t) * xsize + x] =
                    f.at(t, x, c) * window[static_cast<std::size_t>(t)];
        dft_time_space(slice, f.t_count, f.grid, -1);
        const std::vector<double> mags = symbol_magnitude_lattice(
            spec, f.t_count, f.t_spacing, f.grid, f.xi.center(c));
        for (std::size_t i = 0; i < plane; ++i)
            accum[i] += slice[i] * (psi(mags[i] / delta) * f.xi.spacing());
    }
    dft_time_space(accum, f.t_count, f.grid, +1);
    std::vector<double> out(plane);
    for (std::size_t i = 0; i < plane; ++i)
        out[i] = accum[i].real() / static_cast<double>(plane);
    return out;
}

double filter_support_measure(const SpaceTimeSlab& layout, const BumpSpec& psi,
                              const ModelSpec& spec, double delta) {
    if (delta <= 0.0) throw std::invalid_argument("filter width must be positive");
    const std::size_t xsize = layout.x_size();
    const std::size_t plane = static_cast<std::size_t>(layout.t_count) * xsize;
    std::vector<double> measure(plane, 0.0);
    for (int c = 0; c < layout.xi.cells; ++c) {
        const std::vector<double> mags = symbol_magnitude_lattice(
            spec, layout.t_count, layout.t_spacing, layout.grid, layout.xi.center(c));
        for (std::size_t i = 0; i < plane; ++i)
            if (psi(mags[i] / delta) != 0.0) measure[i] += layout.xi.spacing();
    }
    return *std::max_element(measure.begin(), measure.end());
}

TruncationTable truncation_property_probe(const ModelSpec& spec, const BumpSpec& psi,
                                          const std::vector<double>& deltas,
                                          const std::vector<double>& xis, int points, int dim) {
    if (deltas.empty() || xis.empty())
        throw std::invalid_argument("probe needs at least one delta and one xi");
    if (points < 8) throw std::invalid_argument("probe lattice needs at least 8 points");
    if (dim != 1 && dim != 2) throw std::invalid_argument("dimension must be 1 or 2");

    TruncationTable table;
    table.deltas = deltas;
    table.xis = xis;
    table.max_norm = 0.0;
    table.min_norm = std::numeric_limits<double>::infinity();

    const std::vector<int> dims = dim == 1 ? std::vector<int>{points}
                                           : std::vector<int>{points, points};
    const std::size_t size = dim == 1 ? static_cast<std::size_t>(points)
                                      : static_cast<std::size_t>(points) * points;
    std::vector<std::complex<double>> multiplier(size);
    for (double delta : deltas) {
        if (delta <= 0.0) throw std::invalid_argument("probe widths must be positive");
        for (double xi : xis) {
            for (std::size_t idx = 0; idx < size; ++idx) {
                std::vector<int> n;
                if (dim == 1) {
                    const int raw = static_cast<int>(idx);
                    n = {raw < points / 2 ? raw : raw - points};
                } else {
                    const int i = static_cast<int>(idx) / points;
                    const int j = static_cast<int>(idx) % points;
                    n = {i < points / 2 ? i : i - points, j < points / 2 ? j : j - points};
                }
                const double parabolic = symbol_eval(spec, 0.0, n, xi).real();
                multiplier[idx] = psi(parabolic / delta);
            }
            const double norm = kernel_l1_norm(multiplier, dims);
            table.norms.push_back(norm);
            table.max_norm = std::max(table.max_norm, norm);
            table.min_norm = std::min(table.min_norm, norm);
        }
    }
    table.uniform = table.min_norm > 0.0 && table.max_norm < 10.0 * table.min_norm;
    return table;
}

void write_ensemble_csv(const std::string& path, const EnsembleResult& ensemble) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path);
    out << "t,mean,stderr\n";
    for (std::size_t i = 0; i < ensemble.times.size(); ++i) {
        char line[128];
        std::snprintf(line, sizeof line, "%.17g,%.17g,%.17g\n", ensemble.times[i],
                      ensemble.mean[i], ensemble.stderr_of_mean[i]);
        out << line;
    }
}

void write_blocks_csv(const std::string& path, const RegularityReport& report) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path);
    out << "J,block_norm\n";
    for (std::size_t i = 0; i < report.levels_fit.size(); ++i) {
        char line[80];
        std::snprintf(line, sizeof line, "%d,%.17g\n", report.levels_fit[i],
                      report.block_norms[i]);
        out << line;
    }
}

void write_truncation_csv(const std::string& path, const TruncationTable& table) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path);
    out << "delta,xi,kernel_l1_norm\n";
    std::size_t idx = 0;
    for (double delta : table.deltas)
        for (double xi : table.xis) {
            char line[128];
            std::snprintf(line, sizeof line, "%.17g,%.17g,%.17g\n", delta, xi,
                          table.norms[idx++]);
            out << line;
        }
}

}  // namespace kspde
