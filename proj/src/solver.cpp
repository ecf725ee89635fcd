#include "kspde/solver.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <utility>

#include "kspde/errors.hpp"

namespace kspde {

namespace {

// Wraps a cell index onto the periodic lattice.
inline int wrap(int i, int p) { return (i + p) % p; }

void check_cfl(double dt, double admissible, const char* what) {
    if (dt > admissible * (1.0 + 1e-12)) {
        char msg[160];
        std::snprintf(msg, sizeof(msg), "%s step dt=%.6g exceeds admissible dt=%.6g", what, dt,
                      admissible);
        throw CflViolation(msg, admissible);
    }
}

// Solves sub[i] x[i-1] + diag[i] x[i] + sup[i] x[i+1] = rhs[i] with periodic
// wrap-around via Thomas elimination plus a Sherman-Morrison corner fold.
std::vector<double> solve_cyclic_tridiagonal(const std::vector<double>& sub,
                                             const std::vector<double>& diag,
                                             const std::vector<double>& sup,
                                             const std::vector<double>& rhs) {
    const std::size_t n = diag.size();
    const double gamma = -diag[0];
    std::vector<double> d(diag);
    d[0] = diag[0] - gamma;
    d[n - 1] = diag[n - 1] - sup[n - 1] * sub[0] / gamma;

    auto thomas = [&](const std::vector<double>& b) {
        std::vector<double> c(n, 0.0), x(n, 0.0);
        double pivot = d[0];
        if (std::abs(pivot) < 1e-300) throw LinearSolveFailure("tridiagonal pivot vanished", 0, 0.0);
        c[0] = sup[0] / pivot;
        x[0] = b[0] / pivot;
        for (std::size_t i = 1; i < n; ++i) {
            pivot = d[i] - sub[i] * c[i - 1];
            if (std::abs(pivot) < 1e-300)
                throw LinearSolveFailure("tridiagonal pivot vanished", static_cast<int>(i), 0.0);
            c[i] = sup[i] / pivot;
            x[i] = (b[i] - sub[i] * x[i - 1]) / pivot;
        }
        for (std::size_t i = n - 1; i-- > 0;) x[i] -= c[i] * x[i + 1];
        return x;
    };

    std::vector<double> y = thomas(rhs);
    std::vector<double> corner(n, 0.0);
    corner[0] = gamma;
    corner[n - 1] = sup[n - 1];
    std::vector<double> z = thomas(corner);
    const double denom = 1.0 + z[0] + sub[0] * z[n - 1] / gamma;
    if (std::abs(denom) < 1e-300)
        throw LinearSolveFailure("rank-one correction degenerate", 0, 0.0);
    const double factor = (y[0] + sub[0] * y[n - 1] / gamma) / denom;
    for (std::size_t i = 0; i < n; ++i) y[i] -= factor * z[i];
    return y;
}

// Jacobi-preconditioned conjugate gradient for the symmetric positive
// definite implicit-diffusion system on the 2d torus.
std::vector<double> solve_cg_2d(const std::vector<double>& wx, const std::vector<double>& wy,
                                const std::vector<double>& rhs, int p) {
    const std::size_t n = rhs.size();
    auto idx = [p](int i, int j) { return static_cast<std::size_t>(wrap(i, p)) * p + wrap(j, p); };
    std::vector<double> diag(n);
    for (int i = 0; i < p; ++i)
        for (int j = 0; j < p; ++j)
            diag[idx(i, j)] = 1.0 + wx[idx(i, j)] + wx[idx(i - 1, j)] + wy[idx(i, j)] +
                              wy[idx(i, j - 1)];
    auto apply = [&](const std::vector<double>& x, std::vector<double>& out) {
        for (int i = 0; i < p; ++i)
            for (int j = 0; j < p; ++j) {
                const std::size_t c = idx(i, j);
                out[c] = diag[c] * x[c] - wx[c] * x[idx(i + 1, j)] - wx[idx(i - 1, j)] * x[idx(i - 1, j)] -
                         wy[c] * x[idx(i, j + 1)] - wy[idx(i, j - 1)] * x[idx(i, j - 1)];
            }
    };
    auto dot = [&](const std::vector<double>& a, const std::vector<double>& b) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
        return s;
    };

    std::vector<double> x(rhs), r(n), z(n), pdir(n), ap(n);
    apply(x, ap);
    for (std::size_t i = 0; i < n; ++i) r[i] = rhs[i] - ap[i];
    const double rhs_norm = std::sqrt(dot(rhs, rhs));
    const double tol = 1e-13 * std::max(rhs_norm, 1e-30);
    for (std::size_t i = 0; i < n; ++i) z[i] = r[i] / diag[i];
    pdir = z;
    double rz = dot(r, z);
    const int max_iterations = 10000;
    for (int it = 0; it < max_iterations; ++it) {
        double rnorm = std::sqrt(dot(r, r));
        if (rnorm <= tol) return x;
        apply(pdir, ap);
        const double alpha = rz / dot(pdir, ap);
        for (std::size_t i = 0; i < n; ++i) {
            x[i] += alpha * pdir[i];
            r[i] -= alpha * ap[i];
        }
        for (std::size_t i = 0; i < n; ++i) z[i] = r[i] / diag[i];
        const double rz_next = dot(r, z);
        const double beta = rz_next / rz;
        rz = rz_next;
        for (std::size_t i = 0; i < n; ++i) pdir[i] = z[i] + beta * pdir[i];
    }
    const double residual = std::sqrt(dot(r, r)) / std::max(rhs_norm, 1e-30);
    throw LinearSolveFailure("implicit diffusion solve did not converge", max_iterations, residual);
}

std::pair<double, double> value_range(const Field& u) {
    double lo = u.values[0], hi = u.values[0];
    for (double v : u.values) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    return {lo, hi};
}

}  // namespace

void SolverConfig::validate() const {
    model.validate();
    noise.validate();
    if (!(dt > 0.0)) throw ConfigError("dt must be positive");
    if (!(t_end >= 0.0)) throw ConfigError("t_end must be nonnegative");
    if (!(cfl_safety > 0.0 && cfl_safety < 1.0)) throw ConfigError("cfl_safety must lie in (0,1)");
    if (record_every < 1) throw ConfigError("record_every must be at least 1");
    if (!(norm_exponent >= 1.0)) throw ConfigError("norm_exponent must be at least 1");
}

long SolverConfig::step_count() const {
    const double ratio = t_end / dt;
    const long steps = std::lround(ratio);
    if (steps < 0 || std::abs(steps * dt - t_end) > 1e-9 * std::max(1.0, std::abs(t_end)))
        throw ConfigError("t_end must be an integer multiple of dt; adjust dt rather than relying "
                          "on silent rounding");
    return steps;
}

Field smooth_initial_datum(const Field& u0, double kappa) {
    if (!(kappa > 0.0)) throw std::invalid_argument("smoothing scale kappa must be positive");
    const double cutoff = 1.0 / kappa;
    SpectralField hat = forward_transform(u0);
    const int p = u0.grid.points_per_dim;
    auto weight = [cutoff](double n) {
        return std::clamp(2.0 - 2.0 * n / cutoff, 0.0, 1.0);  // plateau below cutoff/2
    };
    if (u0.grid.dim == 1) {
        for (int i = 0; i < p; ++i) {
            const int n = i < p / 2 ? i : i - p;
            hat.coefficients[i] *= weight(std::abs(n));
        }
    } else {
        for (int i = 0; i < p; ++i)
            for (int j = 0; j < p; ++j) {
                const int n1 = i < p / 2 ? i : i - p;
                const int n2 = j < p / 2 ? j : j - p;
                hat.coefficients[static_cast<std::size_t>(i) * p + j] *=
                    weight(std::hypot(n1, n2));
            }
    }
    Field out = inverse_transform(hat);
    for (double& v : out.values) v = std::clamp(v, -cutoff, cutoff);
    return out;
}

Field convection_substep(const Field& u, const ModelSpec& model, double dt, double cfl_safety,
                         FluxScheme scheme) {
    if (!model.flux_on()) return u;
    const int p = u.grid.points_per_dim;
    const int dim = u.grid.dim;
    const double dx = u.grid.spacing;
    auto [lo, hi] = value_range(u);
    const double max_speed = model.max_abs_b_tau(lo, hi);
    if (max_speed > 0.0) {
        // The unsplit multi-d update stays monotone when the advective Courant
        // numbers of all directions sum below cfl_safety.
        check_cfl(dt, cfl_safety * dx / (dim * max_speed), "convection");
    }

    const std::size_t n = u.values.size();
    std::vector<double> left(n), right(n);  // per-cell flux splitting or raw flux
    if (scheme == FluxScheme::EngquistOsher) {
        for (std::size_t c = 0; c < n; ++c) {
            left[c] = model.flux_pos_integral(u.values[c]);
            right[c] = model.flux_neg_integral(u.values[c]);
        }
    } else {
        for (std::size_t c = 0; c < n; ++c) left[c] = model.B_tau(u.values[c]);
    }
    auto face_flux = [&](std::size_t a, std::size_t b) {
        if (scheme == FluxScheme::EngquistOsher) return left[a] + right[b];
        return 0.5 * (left[a] + left[b]) - 0.5 * max_speed * (u.values[b] - u.values[a]);
    };

    Field out(u.grid);
    const double lambda = dt / dx;
    if (dim == 1) {
        for (int i = 0; i < p; ++i) {
            const double f_right = face_flux(i, wrap(i + 1, p));
            const double f_left = face_flux(wrap(i - 1, p), i);
            out.values[i] = u.values[i] - lambda * (f_right - f_left);
        }
    } else {
        auto idx = [p](int i, int j) {
            return static_cast<std::size_t>(wrap(i, p)) * p + wrap(j, p);
        };
        for (int i = 0; i < p; ++i)
            for (int j = 0; j < p; ++j) {
                const double fx = face_flux(idx(i, j), idx(i + 1, j)) -
                                  face_flux(idx(i - 1, j), idx(i, j));
                const double fy = face_flux(idx(i, j), idx(i, j + 1)) -
                                  face_flux(idx(i, j - 1), idx(i, j));
                out.values[idx(i, j)] = u.values[idx(i, j)] - lambda * (fx + fy);
            }
    }
    return out;
}

Field diffusion_substep(const Field& u, const ModelSpec& model, double dt, double cfl_safety,
                        DiffusionScheme scheme) {
    if (!model.diffusion_on()) return u;
    const int p = u.grid.points_per_dim;
    const int dim = u.grid.dim;
    const double dx = u.grid.spacing;
    const double r = dt / (dx * dx);
    auto [lo, hi] = value_range(u);
    const double max_a = model.max_a_reg(lo, hi);
    if (max_a <= 0.0) return u;

    const std::size_t n = u.values.size();
    std::vector<double> a(n);
    for (std::size_t c = 0; c < n; ++c) a[c] = model.A_reg(u.values[c]);

    if (scheme == DiffusionScheme::Explicit) {
        check_cfl(dt, cfl_safety * dx * dx / (2.0 * dim * max_a), "explicit diffusion");
        Field out(u.grid);
        if (dim == 1) {
            for (int i = 0; i < p; ++i) {
                const int ip = wrap(i + 1, p), im = wrap(i - 1, p);
                const double a_r = 0.5 * (a[i] + a[ip]);
                const double a_l = 0.5 * (a[im] + a[i]);
                out.values[i] = u.values[i] + r * (a_r * (u.values[ip] - u.values[i]) -
                                                   a_l * (u.values[i] - u.values[im]));
            }
        } else {
            auto idx = [p](int i, int j) {
                return static_cast<std::size_t>(wrap(i, p)) * p + wrap(j, p);
            };
            for (int i = 0; i < p; ++i)
                for (int j = 0; j < p; ++j) {
                    const std::size_t c = idx(i, j);
                    double acc = 0.0;
                    const std::size_t nb[4] = {idx(i + 1, j), idx(i - 1, j), idx(i, j + 1),
                                               idx(i, j - 1)};
                    for (std::size_t k = 0; k < 4; ++k) {
                        const double a_face = 0.5 * (a[c] + a[nb[k]]);
                        acc += a_face * (u.values[nb[k]] - u.values[c]);
                    }
                    out.values[c] = u.values[c] + r * acc;
                }
        }
        return out;
    }

    // Semi-implicit: coefficient faces frozen at the current state, so each
    // step costs one symmetric M-matrix solve and no Newton iteration.
    Field out(u.grid);
    if (dim == 1) {
        std::vector<double> sub(p), diag(p), sup(p);
        for (int i = 0; i < p; ++i) {
            const double a_r = 0.5 * (a[i] + a[wrap(i + 1, p)]);
            const double a_l = 0.5 * (a[wrap(i - 1, p)] + a[i]);
            sub[i] = -r * a_l;
            sup[i] = -r * a_r;
            diag[i] = 1.0 + r * (a_l + a_r);
        }
        out.values = solve_cyclic_tridiagonal(sub, diag, sup, u.values);
    } else {
        auto idx = [p](int i, int j) {
            return static_cast<std::size_t>(wrap(i, p)) * p + wrap(j, p);
        };
        std::vector<double> wx(n), wy(n);
        for (int i = 0; i < p; ++i)
            for (int j = 0; j < p; ++j) {
                wx[idx(i, j)] = r * 0.5 * (a[idx(i, j)] + a[idx(i + 1, j)]);
                wy[idx(i, j)] = r * 0.5 * (a[idx(i, j)] + a[idx(i, j + 1)]);
            }
        out.values = solve_cg_2d(wx, wy, u.values, p);
    }
    return out;
}

Field step(const Field& u, const SolverConfig& config, const WienerPath& path, long step_index) {
    if (u.grid != config.grid) throw GridMismatch("state grid does not match solver grid");
    Field v = convection_substep(u, config.model, config.dt, config.cfl_safety,
                                 config.flux_scheme);
    v = diffusion_substep(v, config.model, config.dt, config.cfl_safety,
                          config.diffusion_scheme);
    if (config.noise.mode_count > 0) {
        if (path.mode_count != config.noise.mode_count)
            throw CouplingMismatch("Wiener path mode count does not match the noise model");
        const std::vector<double> db = path.at(step_index);
        const Field kick = apply_noise(v, config.noise, db);
        for (std::size_t c = 0; c < v.values.size(); ++c) v.values[c] += kick.values[c];
    }
    if (!v.all_finite()) {
        char msg[96];
        std::snprintf(msg, sizeof(msg), "state became non-finite at step %ld", step_index);
        throw NonFinite(msg);
    }
    return v;
}

Trajectory solve(const SolverConfig& config, const Field& u0, const WienerPath& path) {
    config.validate();
    if (u0.grid != config.grid) throw GridMismatch("initial datum grid does not match solver grid");
    const long steps = config.step_count();
    if (config.noise.mode_count > 0) {
        if (path.mode_count != config.noise.mode_count)
            throw CouplingMismatch("Wiener path mode count does not match the noise model");
        if (std::abs(path.dt - config.dt) > 1e-12 * std::max(1.0, config.dt))
            throw CouplingMismatch("Wiener path dt does not match solver dt");
        if (path.max_steps != 0 && path.max_steps < steps)
            throw CouplingMismatch("Wiener path horizon is shorter than the requested run");
    }

    Trajectory traj;
    auto record = [&](double t, const Field& state) {
        traj.times.push_back(t);
        traj.states.push_back(state);
        traj.l1.push_back(lp_norm(state, 1.0));
        traj.l2.push_back(lp_norm(state, 2.0));
        traj.lp.push_back(lp_norm(state, config.norm_exponent));
        traj.mass.push_back(total_mass(state));
    };
    Field u = u0;
    record(0.0, u);
    for (long s = 0; s < steps; ++s) {
        u = step(u, config, path, s);
        if ((s + 1) % config.record_every == 0 || s + 1 == steps)
            record((s + 1) * config.dt, u);
    }
    return traj;
}

Trajectory solve(const SolverConfig& config, const Field& u0, std::uint64_t seed) {
    const long steps = config.step_count();
    WienerPath path(seed, config.dt, config.noise.mode_count, steps);
    Trajectory traj = solve(config, u0, path);
    traj.noise_seed = seed;
    return traj;
}

CauchyReport vanishing_viscosity_ladder(const SolverConfig& config, const Field& u0,
                                        std::uint64_t seed, const std::vector<double>& kappa_list,
                                        int ensemble_members) {
    if (kappa_list.size() < 2)
        throw std::invalid_argument("viscosity ladder needs at least two rungs");
    for (std::size_t i = 0; i < kappa_list.size(); ++i) {
        if (!(kappa_list[i] > 0.0))
            throw std::invalid_argument("viscosity ladder rungs must be positive");
        if (i > 0 && !(kappa_list[i] < kappa_list[i - 1]))
            throw std::invalid_argument("viscosity ladder must be strictly decreasing");
    }
    if (ensemble_members < 1) throw std::invalid_argument("ensemble needs at least one member");

    SolverConfig base = config;
    base.record_every = 1;
    const long steps = base.step_count();
    const double dt = base.dt;

    auto time_l1_gap = [dt](const Trajectory& a, const Trajectory& b) {
        double acc = 0.0;
        for (std::size_t s = 0; s < a.times.size(); ++s) {
            Field diff = a.states[s];
            for (std::size_t c = 0; c < diff.values.size(); ++c)
                diff.values[c] -= b.states[s].values[c];
            const double w = (s == 0 || s + 1 == a.times.size()) ? 0.5 : 1.0;
            acc += w * dt * lp_norm(diff, 1.0);
        }
        return acc;
    };

    CauchyReport report;
    report.kappa = kappa_list;
    report.consecutive_l1.assign(kappa_list.size() - 1, 0.0);
    for (int m = 0; m < ensemble_members; ++m) {
        const WienerPath path(seed + static_cast<std::uint64_t>(m), dt,
                              base.noise.mode_count, steps);
        Trajectory previous;
        for (std::size_t k = 0; k < kappa_list.size(); ++k) {
            SolverConfig rung = base;
            rung.model.viscosity = kappa_list[k];
            const Field u0k = smooth_initial_datum(u0, kappa_list[k]);
            Trajectory current = solve(rung, u0k, path);
            if (k > 0)
                report.consecutive_l1[k - 1] += time_l1_gap(previous, current) / ensemble_members;
            previous = std::move(current);
        }
    }
    report.nonincreasing = true;
    for (std::size_t i = 0; i + 1 < report.consecutive_l1.size(); ++i)
        if (report.consecutive_l1[i + 1] > 1.1 * report.consecutive_l1[i] + 1e-15)
            report.nonincreasing = false;
    return report;
}

void write_trajectory_csv(const std::string& path, const Trajectory& trajectory) {
    std::FILE* f = std::fopen(path.c_str(), "w");
    if (!f) throw std::runtime_error("cannot open trajectory csv for writing: " + path);
    std::fprintf(f, "t,l1,l2,lp,mass\n");
    for (std::size_t s = 0; s < trajectory.times.size(); ++s)
        std::fprintf(f, "%.17g,%.17g,%.17g,%.17g,%.17g\n", trajectory.times[s], trajectory.l1[s],
                     trajectory.l2[s], trajectory.lp[s], trajectory.mass[s]);
    std::fclose(f);
}

}  // namespace kspde
