#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "kspde/field.hpp"
#include "kspde/model.hpp"
#include "kspde/solver.hpp"

namespace kspde {

// Uniform velocity-variable grid; coverage checks demand two spare cells on
// each side of the running solution range so boundary deposits never clip.
struct XiGrid {
    double xi_min = -1.0;
    double xi_max = 1.0;
    int cells = 256;

    XiGrid() = default;
    XiGrid(double lo, double hi, int cell_count);

    // Dyadic headroom: span +-2^(lmax+1) with 2^lmax >= 4 * sup_abs.
    static XiGrid for_envelope(double sup_abs, int cell_count = 256);

    double spacing() const { return (xi_max - xi_min) / cells; }
    double center(int c) const { return xi_min + (c + 0.5) * spacing(); }
    double edge(int c) const { return xi_min + c * spacing(); }
    int cell_of(double v) const;
    bool covers(double lo, double hi) const;

    bool operator==(const XiGrid& o) const {
        return xi_min == o.xi_min && xi_max == o.xi_max && cells == o.cells;
    }
};

enum class MeasureComponent { Parabolic, EntropyDefect };

// Nonnegative (time-bin, x-cell, xi-cell) masses after finalize(); negative
// residual mass removed by clipping is kept on the side for auditing.
struct KineticMeasureHistogram {
    XiGrid xi;
    int x_cells = 0;
    int time_bins = 0;
    MeasureComponent component = MeasureComponent::EntropyDefect;
    std::vector<double> mass;
    double clipped_negative = 0.0;

    KineticMeasureHistogram() = default;
    KineticMeasureHistogram(const XiGrid& grid, int x_count, int bin_count,
                            MeasureComponent tag);

    double& at(int bin, int x, int c);
    double at(int bin, int x, int c) const;
    double total() const;
    double shell_mass(double lo_abs, double hi_abs) const;  // |xi_center| in [lo, hi)
    double band_mass(double lo, double hi) const;           // xi_center in [lo, hi]
    double x_window_mass(int x_lo, int x_hi) const;         // inclusive x-cell window
    void merge(const KineticMeasureHistogram& other);       // commutative addition
    void scale(double factor);
    void finalize();  // clip negatives, accumulate their magnitude
};

// f(x, xi) = 1 iff u(x) > xi_center; row-major [x][xi], nonincreasing in xi.
std::vector<std::uint8_t> kinetic_function(const Field& u, const XiGrid& xi);

// chi(x, xi) = 1_{u>xi} - 1_{0>xi}, valued in {-1, 0, 1}.
std::vector<std::int8_t> chi_function(const Field& u, const XiGrid& xi);

// |grad_h of the diffusion antiderivative|^2 per cell and step, deposited as
// a point mass in the xi-cell holding u(x). Assumes consecutive snapshots.
KineticMeasureHistogram accumulate_parabolic_dissipation(const Trajectory& trajectory,
                                                         const ModelSpec& model, const XiGrid& xi,
                                                         int time_bins = 8);

// Signed residual of the discrete kinetic identity (exact truncated
// cumulatives of the time, convective-flux, and diffusive-flux terms),
// restricted to the locally occupied xi band, then clipped nonnegative.
// Snapshots must be one solver step apart (record_every = 1).
KineticMeasureHistogram accumulate_entropy_defect(const Trajectory& trajectory,
                                                  const ModelSpec& model, const XiGrid& xi,
                                                  int time_bins = 8);

// 2^-ell * mass of the dyadic shell 2^ell <= |xi| < 2^(ell+1) per level.
// Passes when the top three levels are nonincreasing and the last level
// carries under 1% of the summed scaled mass (identically zero also passes).
struct DecayProfile {
    std::vector<int> levels;
    std::vector<double> scaled_mass;
    double total_scaled = 0.0;
    bool passed = false;
};

DecayProfile measure_decay_profile(const KineticMeasureHistogram& histogram,
                                   const std::vector<int>& levels);

// Cutoff/mollifier family evaluated pointwise.
//  Plateau(l):             1 on |xi|<=2^l, 0 off |xi|>=2^(l+1), linear ramp
//                          between, so |K'| equals 2^-l exactly on the ramp.
//  BandIndicator(k):       1_{|xi|<=k}.
//  BandSecondPrimitive(k): double primitive of the indicator, xi^2/2 inside,
//                          k|xi| - k^2/2 outside.
//  ScaledBump(d):          (35/32)(1-z^2)^3 / d with z = xi/d, unit mass.
//  Mollifier(e):           same bump shape at scale e.
enum class CutoffKind { Plateau, BandIndicator, BandSecondPrimitive, ScaledBump, Mollifier };

struct CutoffFamily {
    CutoffKind kind = CutoffKind::Plateau;
    double parameter = 0.0;
};

double cutoff_eval(const CutoffFamily& family, double xi);

// Nonzero rows only: t_bin,x_cell,xi_cell,mass,component.
void write_histogram_csv(const std::string& path, const KineticMeasureHistogram& histogram);
// Rows: ell,scaled_mass.
void write_decay_csv(const std::string& path, const DecayProfile& profile);

}  // namespace kspde
