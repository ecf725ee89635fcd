#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "kspde/field.hpp"
#include "kspde/model.hpp"
#include "kspde/noise.hpp"

namespace kspde {

enum class DiffusionScheme { Explicit, SemiImplicit };
enum class FluxScheme { EngquistOsher, LaxFriedrichs };

// Operator-splitting integrator: monotone finite-volume convection, then
// (semi-)implicit face-averaged diffusion, then an Euler-Maruyama noise add.
struct SolverConfig {
    ModelSpec model;
    NoiseModel noise;
    TorusGrid grid;
    double dt = 1e-3;
    double t_end = 1.0;
    double cfl_safety = 0.9;
    DiffusionScheme diffusion_scheme = DiffusionScheme::Explicit;
    FluxScheme flux_scheme = FluxScheme::EngquistOsher;
    int record_every = 1;
    double norm_exponent = 4.0;  // the extra L^p tracked alongside L^1 and L^2

    void validate() const;
    long step_count() const;  // t_end / dt; refuses non-integer step counts
};

struct Trajectory {
    std::vector<double> times;
    std::vector<Field> states;
    std::vector<double> l1, l2, lp, mass;
    std::optional<std::uint64_t> noise_seed;  // set when solved from a seed
};

struct CauchyReport {
    std::vector<double> kappa;
    std::vector<double> consecutive_l1;  // E int_0^T |u_k - u_{k+1}|_1 dt per rung
    bool nonincreasing = false;          // within 10% slack
};

// Plateau low-pass at frequency cutoff ~ 1/kappa followed by an amplitude
// clamp at 1/kappa; smooth bounded data passes through unchanged as kappa -> 0.
Field smooth_initial_datum(const Field& u0, double kappa);

// Conservative monotone flux update; refuses dt beyond the advective bound.
Field convection_substep(const Field& u, const ModelSpec& model, double dt, double cfl_safety,
                         FluxScheme scheme);

// Divergence-form update with arithmetic face averages of the regularized
// coefficient; explicit mode refuses dt beyond dx^2/(2 N max A).
Field diffusion_substep(const Field& u, const ModelSpec& model, double dt, double cfl_safety,
                        DiffusionScheme scheme);

// One full splitting step: convection, diffusion, then noise.
Field step(const Field& u, const SolverConfig& config, const WienerPath& path, long step_index);

Trajectory solve(const SolverConfig& config, const Field& u0, const WienerPath& path);
Trajectory solve(const SolverConfig& config, const Field& u0, std::uint64_t seed);

// Couples runs over decreasing viscosities with one shared Wiener path per
// ensemble member and reports consecutive L^1_{t,x} gaps.
CauchyReport vanishing_viscosity_ladder(const SolverConfig& config, const Field& u0,
                                        std::uint64_t seed, const std::vector<double>& kappa_list,
                                        int ensemble_members = 4);

// One row per recorded time: t,l1,l2,lp,mass.
void write_trajectory_csv(const std::string& path, const Trajectory& trajectory);

}  // namespace kspde
