#pragma once

// Estimators that map trajectories and ensembles to the quantities the
// qualitative theory constrains: coupled contraction gaps, L^p moment
// ratios, Gagliardo seminorms, dyadic frequency blocks and the regularity
// exponents fitted from their decay, velocity-averaged symbol filters, and
// kernel-norm uniformity tables.

#include "kspde/errors.hpp"
#include "kspde/field.hpp"
#include "kspde/model.hpp"
#include "kspde/multiplier.hpp"
#include "kspde/solver.hpp"

#include <string>
#include <vector>

namespace kspde {

// Scalar time series over an ensemble with its pointwise mean and standard
// error of the mean (sample std / sqrt(M)).
struct EnsembleResult {
    int member_count = 0;
    std::vector<double> times;
    std::vector<std::vector<double>> member_series;  // [member][time]
    std::vector<double> mean;
    std::vector<double> stderr_of_mean;

    static EnsembleResult from_members(std::vector<double> times,
                                       std::vector<std::vector<double>> series);
};

// Per-time L1 norm of the positive part (a - b)^+ for two trajectories
// driven by the same noise path. Refuses mismatched grids, times, or seeds:
// the contraction statement only holds for coupled realizations.
std::vector<double> contraction_gap(const Trajectory& a, const Trajectory& b);

// E sup_t ||u(t)||_p^{pq} against 1 + E ||u_0||_p^{pq} over an ensemble.
struct MomentReport {
    double p = 2.0;
    double q = 2.0;
    double sup_moment = 0.0;
    double datum_moment = 1.0;
    double ratio = 0.0;
};
MomentReport lp_moment_check(const std::vector<Trajectory>& ensemble, double p, double q);

// Discrete Gagliardo double sum over the torus,
//   sum_{x != y} |f(x) - f(y)|^r / d(x,y)^{N + s r} dx^{2N},
// with d the flat torus metric. Requires 0 < s < 1 and r >= 1.
double fractional_sobolev_seminorm(const Field& f, double s, double r);

// Dyadic frequency decomposition: level 0 carries psi0(|n|), level J >= 1
// carries psi1(|n| / J); blocks sum back to the field and block J is
// spectrally supported in J/2 <= |n| <= 2J.
struct DyadicBlocks {
    std::vector<int> levels;
    std::vector<Field> blocks;
};
DyadicBlocks littlewood_paley_blocks(const Field& f);

// Fit of the block-norm decay ||(eta_bar(u))_J||_{L^r(omega,t,x)} ~ J^{-s}.
// The lowest and highest resolvable levels are dropped (DC and grid-cutoff
// contamination); at least four levels must remain. The pass criterion is
// one-sided: the fitted regularity must reach 0.9 of the predicted bound.
struct RegularityReport {
    std::vector<int> levels_fit;
    std::vector<double> block_norms;
    double slope = 0.0;
    double s_emp = 0.0;
    double s_bound = 0.0;
    double r = 2.0;
    bool passed = false;
};
RegularityReport regularity_exponent_fit(const std::vector<Trajectory>& ensemble,
                                         const Localization& loc, double s_bound, double r);

// Velocity average of the symbol-filtered slab: per xi slice apply the
// (t, x) Fourier multiplier psi(|L(u, n, xi)| / delta), integrate over xi.
// window_time tapers the finite horizon with a Hann window first. Output is
// laid out [t][x].
std::vector<double> averaged_multiplier_apply(const SpaceTimeSlab& f, const BumpSpec& psi,
                                              const ModelSpec& spec, double delta,
                                              bool window_time = false);

// Largest xi-measure of {psi(|L(u, n, .)| / delta) != 0} over the (u, n)
// lattice of the slab; by Plancherel and Cauchy-Schwarz its square root
// dominates the L2 -> L2 norm of the averaging above.
double filter_support_measure(const SpaceTimeSlab& layout, const BumpSpec& psi,
                              const ModelSpec& spec, double delta);

// Kernel L1 norms of n -> psi(Re L(0, n, xi) / delta) tabulated over (delta,
// xi); near-constant tables are evidence of the uniform truncation bound.
struct TruncationTable {
    std::vector<double> deltas;
    std::vector<double> xis;
    std::vector<double> norms;  // row-major over (delta, xi)
    double max_norm = 0.0;
    double min_norm = 0.0;
    bool uniform = false;  // max / min < 10
};
TruncationTable truncation_property_probe(const ModelSpec& spec, const BumpSpec& psi,
                                          const std::vector<double>& deltas,
                                          const std::vector<double>& xis, int points, int dim);

// One row per time: t,mean,stderr.
void write_ensemble_csv(const std::string& path, const EnsembleResult& ensemble);
// One row per fitted level: J,block_norm.
void write_blocks_csv(const std::string& path, const RegularityReport& report);
// One row per (delta, xi) pair: delta,xi,kernel_l1_norm.
void write_truncation_csv(const std::string& path, const TruncationTable& table);

}  // namespace kspde
