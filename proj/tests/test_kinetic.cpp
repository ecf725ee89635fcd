#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "kspde/kinetic.hpp"
#include "kspde/solver.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

using namespace kspde;

namespace {

ModelSpec burgers() {
    ModelSpec spec;
    spec.flux_exponent = 2;
    spec.diffusion_exponent.reset();
    spec.viscosity = 0.0;
    return spec;
}

Field wave(const TorusGrid& grid, double amplitude, int mode) {
    Field u(grid);
    if (grid.dim == 1) {
        for (std::size_t i = 0; i < u.values.size(); ++i)
            u.values[i] = amplitude * std::sin(mode * grid.spacing * static_cast<double>(i));
    } else {
        const std::size_t p = static_cast<std::size_t>(grid.points_per_dim);
        for (std::size_t i = 0; i < p; ++i)
            for (std::size_t j = 0; j < p; ++j)
                u.values[i * p + j] =
                    amplitude * std::sin(mode * grid.spacing * static_cast<double>(i)) *
                    std::cos(mode * grid.spacing * static_cast<double>(j));
    }
    return u;
}

// Front position of the 0.5-level crossing is not needed here; the shock tests
// work with an x-cell window around the initial interface instead.

}  // namespace

TEST_CASE("xi grid geometry and coverage") {
    XiGrid grid(-2.0, 2.0, 64);
    CHECK(grid.spacing() == doctest::Approx(4.0 / 64).epsilon(1e-14));
    CHECK(grid.center(0) == doctest::Approx(-2.0 + 0.5 * grid.spacing()).epsilon(1e-14));
    CHECK(grid.edge(0) == -2.0);
    CHECK(grid.edge(64) == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(grid.cell_of(grid.center(17)) == 17);
    CHECK(grid.cell_of(-100.0) == 0);   // clamped
    CHECK(grid.cell_of(100.0) == 63);   // clamped

    // Coverage requires a two-cell margin on both sides.
    CHECK(grid.covers(-1.0, 1.0));
    CHECK(!grid.covers(-2.0, 1.0));
    CHECK(!grid.covers(-1.0, 2.0 - 0.5 * grid.spacing()));

    // Envelope construction spans a dyadic shell pair beyond four times the sup.
    XiGrid small = XiGrid::for_envelope(0.25);
    CHECK(small.xi_min == doctest::Approx(-2.0));
    CHECK(small.xi_max == doctest::Approx(2.0));
    XiGrid unit = XiGrid::for_envelope(1.0);
    CHECK(unit.xi_min == doctest::Approx(-8.0));
    CHECK(unit.xi_max == doctest::Approx(8.0));
    XiGrid wide = XiGrid::for_envelope(3.0);
    CHECK(wide.xi_max == doctest::Approx(32.0));
    CHECK(wide.cells == 256);

    CHECK_THROWS_AS(XiGrid(1.0, -1.0, 64), std::invalid_argument);
    CHECK_THROWS_AS(XiGrid(-1.0, 1.0, 4), std::invalid_argument);
}

TEST_CASE("kinetic and chi functions") {
    TorusGrid grid(1, 8);
    XiGrid xi(-4.0, 4.0, 64);

    SUBCASE("indicator of zero state matches sign of xi") {
        Field u(grid);
        auto f = kinetic_function(u, xi);
        for (int c = 0; c < xi.cells; ++c) {
            const std::uint8_t expected = xi.center(c) < 0.0 ? 1 : 0;
            for (int i = 0; i < grid.points_per_dim; ++i)
                CHECK(f[static_cast<std::size_t>(i) * 64 + static_cast<std::size_t>(c)] ==
                      expected);
        }
    }

    SUBCASE("layer cake reconstruction") {
        Field u(grid);
        for (std::size_t i = 0; i < u.values.size(); ++i)
            u.values[i] = -1.3 + 0.4 * static_cast<double>(i);
        auto chi = chi_function(u, xi);
        for (std::size_t i = 0; i < u.values.size(); ++i) {
            double rebuilt = 0.0;
            for (int c = 0; c < xi.cells; ++c)
                rebuilt += xi.spacing() * chi[i * 64 + static_cast<std::size_t>(c)];
            CHECK(std::abs(rebuilt - u.values[i]) <= xi.spacing() + 1e-12);
        }
    }

    SUBCASE("chi bands are exact for cell-edge states") {
        Field u(grid);
        u.values.assign(u.values.size(), 2.0);
        auto chi = chi_function(u, xi);
        double integral = 0.0;
        for (int c = 0; c < xi.cells; ++c) {
            const double xic = xi.center(c);
            const int expected = (xic > 0.0 && xic < 2.0) ? 1 : 0;
            CHECK(static_cast<int>(chi[static_cast<std::size_t>(c)]) == expected);
            integral += xi.spacing() * chi[static_cast<std::size_t>(c)];
        }
        CHECK(integral == doctest::Approx(2.0).epsilon(1e-14));

        u.values.assign(u.values.size(), -1.0);
        chi = chi_function(u, xi);
        integral = 0.0;
        for (int c = 0; c < xi.cells; ++c) {
            const double xic = xi.center(c);
            const int expected = (xic > -1.0 && xic < 0.0) ? -1 : 0;
            CHECK(static_cast<int>(chi[static_cast<std::size_t>(c)]) == expected);
            integral += xi.spacing() * chi[static_cast<std::size_t>(c)];
        }
        CHECK(integral == doctest::Approx(-1.0).epsilon(1e-14));
    }

    SUBCASE("velocity average quadrature matches the eta antiderivative") {
        Localization loc = Localization::Bump(0.0, 3.0);
        Field u(grid);
        for (std::size_t i = 0; i < u.values.size(); ++i)
            u.values[i] = -1.7 + 0.45 * static_cast<double>(i);
        auto chi = chi_function(u, xi);
        for (std::size_t i = 0; i < u.values.size(); ++i) {
            double quad = 0.0;
            for (int c = 0; c < xi.cells; ++c)
                quad += loc.eta(xi.center(c)) * chi[i * 64 + static_cast<std::size_t>(c)] *
                        xi.spacing();
            CHECK(std::abs(quad - loc.eta_bar(u.values[i])) <= 2.5 * xi.spacing());
        }
    }

    SUBCASE("states too close to the grid edge are rejected") {
        Field u(grid);
        u.values.assign(u.values.size(), 3.9);
        CHECK_THROWS_AS(kinetic_function(u, xi), RangeNotCovered);
        u.values.assign(u.values.size(), -3.9);
        CHECK_THROWS_AS(chi_function(u, xi), RangeNotCovered);
    }
}

TEST_CASE("parabolic dissipation histogram") {
    ModelSpec heat;
    heat.flux_exponent.reset();
    heat.diffusion_exponent.reset();
    heat.viscosity = 1.0;

    TorusGrid grid(1, 64);
    const double dx = grid.spacing;

    SUBCASE("frozen snapshot pair reproduces the discrete gradient energy") {
        // Two identical cosine snapshots dt apart: the accumulated mass must be
        // dt * sum_i |D_c psi(u)|^2 dx with psi the sigma antiderivative, which
        // for unit viscosity is psi(u) = u, so the total is
        // dt * pi * (sin dx / dx)^2 on the 2pi torus.
        const double dt = 1e-3;
        Trajectory traj;
        traj.times = {0.0, dt};
        Field u(grid);
        for (std::size_t i = 0; i < u.values.size(); ++i)
            u.values[i] = std::cos(dx * static_cast<double>(i));
        traj.states = {u, u};

        XiGrid xi = XiGrid::for_envelope(1.0);
        auto hist = accumulate_parabolic_dissipation(traj, heat, xi, 4);
        const double expected = dt * M_PI * std::pow(std::sin(dx) / dx, 2.0);
        CHECK(hist.total() == doctest::Approx(expected).epsilon(1e-12));
        CHECK(hist.total() == doctest::Approx(dt * M_PI).epsilon(5e-4));
        CHECK(hist.clipped_negative == 0.0);

        // Mass can only sit in xi cells actually visited by the state.
        CHECK(hist.shell_mass(1.0 + xi.spacing(), 8.0) == 0.0);
    }

    SUBCASE("constant states and pure transport deposit nothing") {
        Trajectory traj;
        traj.times = {0.0, 0.5};
        Field u(grid);
        u.values.assign(u.values.size(), 0.7);
        traj.states = {u, u};
        XiGrid xi = XiGrid::for_envelope(1.0);
        auto hist = accumulate_parabolic_dissipation(traj, heat, xi, 2);
        CHECK(hist.total() == 0.0);

        auto conv = accumulate_parabolic_dissipation(traj, burgers(), xi, 2);
        CHECK(conv.total() == 0.0);
    }

    SUBCASE("merge over split trajectories matches the full accumulation") {
        SolverConfig config;
        config.model = heat;
        config.grid = grid;
        config.dt = 1e-4;
        config.t_end = 0.02;
        config.record_every = 1;
        Field u0 = wave(grid, 0.8, 1);
        Trajectory traj = solve(config, u0, 99u);

        XiGrid xi = XiGrid::for_envelope(1.0);
        auto whole = accumulate_parabolic_dissipation(traj, heat, xi, 1);

        const std::size_t half = traj.states.size() / 2;
        Trajectory front, back;
        front.times.assign(traj.times.begin(), traj.times.begin() + half + 1);
        front.states.assign(traj.states.begin(), traj.states.begin() + half + 1);
        back.times.assign(traj.times.begin() + half, traj.times.end());
        back.states.assign(traj.states.begin() + half, traj.states.end());

        auto a = accumulate_parabolic_dissipation(front, heat, xi, 1);
        auto b = accumulate_parabolic_dissipation(back, heat, xi, 1);
        a.merge(b);
        CHECK(a.total() == doctest::Approx(whole.total()).epsilon(1e-10));

        a.scale(2.0);
        CHECK(a.total() == doctest::Approx(2.0 * whole.total()).epsilon(1e-10));
    }

    SUBCASE("degenerate models contribute no parabolic mass") {
        Trajectory traj;
        traj.times = {0.0, 0.1};
        Field a = wave(grid, 0.5, 1);
        Field b = wave(grid, 0.4, 1);
        traj.states = {a, b};
        XiGrid xi = XiGrid::for_envelope(1.0);
        auto hist = accumulate_parabolic_dissipation(traj, burgers(), xi, 2);
        CHECK(hist.total() == 0.0);
    }

    SUBCASE("histograms with mismatched layout refuse to merge") {
        XiGrid xi(-2.0, 2.0, 32);
        KineticMeasureHistogram a(xi, 8, 2, MeasureComponent::Parabolic);
        KineticMeasureHistogram b(xi, 8, 3, MeasureComponent::Parabolic);
        CHECK_THROWS_AS(a.merge(b), GridMismatch);
        KineticMeasureHistogram c(XiGrid(-2.0, 2.0, 64), 8, 2, MeasureComponent::Parabolic);
        CHECK_THROWS_AS(a.merge(c), GridMismatch);
    }

    SUBCASE("fewer than two snapshots is an error") {
        Trajectory traj;
        traj.times = {0.0};
        traj.states = {Field(grid)};
        XiGrid xi = XiGrid::for_envelope(1.0);
        CHECK_THROWS_AS(accumulate_parabolic_dissipation(traj, heat, xi, 2),
                        std::invalid_argument);
    }
}

TEST_CASE("entropy defect vanishes before shock formation") {
    // Smooth Burgers data stays smooth up to t = 1/max|u0'| = 4; on [0, 0.25]
    // the residual of the truncated conservation laws is pure discretization
    // noise and must be tiny relative to the later shock rate of order one.
    SolverConfig config;
    config.model = burgers();
    config.grid = TorusGrid(1, 256);
    config.dt = 0.0025;
    config.t_end = 0.25;
    config.record_every = 1;

    Field u0 = wave(config.grid, 0.25, 1);
    Trajectory traj = solve(config, u0, 7u);

    XiGrid xi = XiGrid::for_envelope(0.25);
    auto hist = accumulate_entropy_defect(traj, config.model, xi, 4);
    CHECK(hist.total() >= 0.0);
    CHECK(hist.total() < 1e-3);
    CHECK(hist.clipped_negative <= 0.05 * std::max(hist.total(), 1e-6));
}

TEST_CASE("entropy defect of a settled shock") {
    // Riemann data +1 / -1 forms a stationary shock. Once the discrete profile
    // settles, the defect measure collects mass at rate
    //   d/dt m_tot = (B(u_r) - B(u_l)) integrated against the chord gap
    //              = int_{-1}^{1} (1 - xi^2)/2 dxi = 2/3
    // per unit time, with density (1 - xi^2)/2 across the jump interval.
    SolverConfig config;
    config.model = burgers();
    config.grid = TorusGrid(1, 256);
    config.dt = 0.0025;
    config.t_end = 0.5;
    config.record_every = 200;

    const double dx = config.grid.spacing;
    Field u0(config.grid);
    for (std::size_t i = 0; i < u0.values.size(); ++i)
        u0.values[i] = (dx * static_cast<double>(i) < M_PI) ? 1.0 : -1.0;

    // Phase one: let the discrete shock profile settle.
    Trajectory settle = solve(config, u0, 11u);

    // Phase two: accumulate the defect over a unit time window.
    SolverConfig run = config;
    run.t_end = 1.0;
    run.record_every = 1;
    Trajectory traj = solve(run, settle.states.back(), 11u);

    XiGrid xi = XiGrid::for_envelope(1.0);
    auto hist = accumulate_entropy_defect(traj, run.model, xi, 8);

    // Mass concentrated near the standing shock at x = pi; the wrap-around
    // rarefaction at x = 0 stays outside this window for t <= 1.5.
    const int i_lo = static_cast<int>(std::ceil((M_PI - 0.5) / dx));
    const int i_hi = static_cast<int>(std::floor((M_PI + 0.5) / dx));
    const double window = hist.x_window_mass(i_lo, i_hi);
    const double rate = window / run.t_end;
    CHECK(rate == doctest::Approx(2.0 / 3.0).epsilon(0.02));

    // Nearly all mass lives at the shock; the fan contributes a small rest.
    CHECK(window >= 0.9 * hist.total());
    CHECK(hist.clipped_negative <= 0.02 * hist.total());

    // Pointwise density in xi matches the parabola (1 - xi^2)/2.
    for (double target : {-0.5, 0.0, 0.5}) {
        const int c = xi.cell_of(target);
        double column = 0.0;
        for (int bin = 0; bin < hist.time_bins; ++bin)
            for (int i = i_lo; i <= i_hi; ++i) column += hist.at(bin, i, c);
        const double density = column / (run.t_end * xi.spacing());
        const double exact = 0.5 * (1.0 - xi.center(c) * xi.center(c));
        CHECK(density == doctest::Approx(exact).epsilon(0.10));
    }

    // No mass beyond the state envelope (band restriction plus clipping).
    CHECK(hist.shell_mass(1.0 + 2.0 * xi.spacing(), 8.0) == 0.0);

    // Time bins partition the total.
    double binned = 0.0;
    for (int bin = 0; bin < hist.time_bins; ++bin)
        for (int i = 0; i < config.grid.points_per_dim; ++i)
            for (int c = 0; c < xi.cells; ++c) binned += hist.at(bin, i, c);
    CHECK(binned == doctest::Approx(hist.total()).epsilon(1e-12));

    // Band masses grow at most linearly in the band radius once saturated.
    const double band1 = hist.band_mass(-1.0, 1.0);
    const double band2 = hist.band_mass(-2.0, 2.0);
    CHECK(band2 <= 2.0 * band1 + 1e-12);
    CHECK(band1 <= hist.total() + 1e-12);
}

TEST_CASE("dyadic decay profile") {
    SUBCASE("states inside the unit ball leave upper shells empty") {
        SolverConfig config;
        config.model = burgers();
        config.grid = TorusGrid(1, 128);
        config.dt = 0.005;
        config.t_end = 0.3;
        config.record_every = 1;
        Field u0 = wave(config.grid, 0.9, 1);
        Trajectory traj = solve(config, u0, 3u);

        XiGrid xi = XiGrid::for_envelope(1.0);
        auto hist = accumulate_entropy_defect(traj, config.model, xi, 4);
        auto profile = measure_decay_profile(hist, {1, 2});
        REQUIRE(profile.scaled_mass.size() == 2);
        CHECK(profile.scaled_mass[0] == 0.0);
        CHECK(profile.scaled_mass[1] == 0.0);
        CHECK(profile.passed);

        CHECK_THROWS_AS(measure_decay_profile(hist, {3}), RangeNotCovered);
        CHECK_THROWS_AS(measure_decay_profile(hist, std::vector<int>{}),
                        std::invalid_argument);
    }

    SUBCASE("synthetic histograms exercise the pass and fail rules") {
        XiGrid xi(-16.0, 16.0, 128);
        KineticMeasureHistogram good(xi, 1, 1, MeasureComponent::EntropyDefect);
        good.at(0, 0, xi.cell_of(1.5)) = 1.0;    // shell l=0, scaled 1.0
        good.at(0, 0, xi.cell_of(3.0)) = 1.0;    // shell l=1, scaled 0.5
        good.at(0, 0, xi.cell_of(6.0)) = 0.016;  // shell l=2, scaled 0.004
        auto ok = measure_decay_profile(good, {0, 1, 2});
        CHECK(ok.passed);
        CHECK(ok.scaled_mass[0] == doctest::Approx(1.0));
        CHECK(ok.scaled_mass[1] == doctest::Approx(0.5));
        CHECK(ok.scaled_mass[2] == doctest::Approx(0.004));
        CHECK(ok.total_scaled == doctest::Approx(1.504));

        KineticMeasureHistogram bad(xi, 1, 1, MeasureComponent::EntropyDefect);
        bad.at(0, 0, xi.cell_of(1.5)) = 0.1;
        bad.at(0, 0, xi.cell_of(3.0)) = 0.4;   // scaled 0.2: grows
        bad.at(0, 0, xi.cell_of(6.0)) = 1.6;   // scaled 0.4: grows again
        auto fail = measure_decay_profile(bad, {0, 1, 2});
        CHECK(!fail.passed);

        KineticMeasureHistogram heavy(xi, 1, 1, MeasureComponent::EntropyDefect);
        heavy.at(0, 0, xi.cell_of(1.5)) = 1.0;
        heavy.at(0, 0, xi.cell_of(3.0)) = 1.0;
        heavy.at(0, 0, xi.cell_of(6.0)) = 0.8;  // monotone but heavy tail
        auto tail = measure_decay_profile(heavy, {0, 1, 2});
        CHECK(!tail.passed);
    }
}

TEST_CASE("cutoff family shapes and slope bounds") {
    SUBCASE("plateau ramps obey the dyadic slope bound") {
        for (int ell : {0, 2}) {
            CutoffFamily family{CutoffKind::Plateau, static_cast<double>(ell)};
            const double lo = std::ldexp(1.0, ell);
            const double hi = std::ldexp(1.0, ell + 1);
            CHECK(cutoff_eval(family, 0.0) == 1.0);
            CHECK(cutoff_eval(family, lo) == 1.0);
            CHECK(cutoff_eval(family, -lo) == 1.0);
            CHECK(cutoff_eval(family, hi) == 0.0);
            CHECK(cutoff_eval(family, -hi) == 0.0);
            CHECK(cutoff_eval(family, 0.5 * (lo + hi)) == doctest::Approx(0.5));

            const double bound = std::ldexp(1.0, -ell);
            const double h = 1e-6 * lo;
            for (int k = -400; k <= 400; ++k) {
                const double x = 1.1 * hi * static_cast<double>(k) / 400.0;
                const double slope =
                    (cutoff_eval(family, x + h) - cutoff_eval(family, x - h)) / (2.0 * h);
                CHECK(std::abs(slope) <= bound * (1.0 + 1e-6));
            }
        }
    }

    SUBCASE("band indicator and its second primitive") {
        const double k = 2.0;
        CutoffFamily theta{CutoffKind::BandIndicator, k};
        CutoffFamily Theta{CutoffKind::BandSecondPrimitive, k};
        CHECK(cutoff_eval(theta, 1.5) == 1.0);
        CHECK(cutoff_eval(theta, -2.5) == 0.0);
        CHECK(cutoff_eval(Theta, 1.0) == doctest::Approx(0.5));
        CHECK(cutoff_eval(Theta, 3.0) == doctest::Approx(4.0));
        CHECK(cutoff_eval(Theta, -3.0) == doctest::Approx(4.0));

        // Second finite difference of the primitive recovers the indicator
        // away from the corners at |xi| = k.
        const double h = 1e-4;
        for (double x : {-3.0, -1.2, 0.0, 0.7, 1.9, 2.6, 4.0}) {
            const double fd2 = (cutoff_eval(Theta, x + h) - 2.0 * cutoff_eval(Theta, x) +
                                cutoff_eval(Theta, x - h)) /
                               (h * h);
            CHECK(fd2 == doctest::Approx(cutoff_eval(theta, x)).epsilon(1e-6));
        }
    }

    SUBCASE("scaled bump integrates to one and peaks like 1/delta") {
        for (double delta : {0.25, 1.0, 4.0}) {
            CutoffFamily bump{CutoffKind::ScaledBump, delta};
            CHECK(cutoff_eval(bump, 0.0) == doctest::Approx((35.0 / 32.0) / delta));
            CHECK(cutoff_eval(bump, delta) == 0.0);
            CHECK(cutoff_eval(bump, 1.0001 * delta) == 0.0);
            double mass = 0.0;
            const int n = 20000;
            const double dxq = 2.0 * delta / n;
            for (int i = 0; i < n; ++i)
                mass += cutoff_eval(bump, -delta + (i + 0.5) * dxq) * dxq;
            CHECK(mass == doctest::Approx(1.0).epsilon(1e-6));
        }
        CutoffFamily moll{CutoffKind::Mollifier, 0.5};
        CHECK(cutoff_eval(moll, 0.0) == doctest::Approx((35.0 / 32.0) / 0.5));
        CHECK_THROWS_AS(cutoff_eval(CutoffFamily{CutoffKind::ScaledBump, 0.0}, 0.0),
                        std::invalid_argument);
    }
}

TEST_CASE("chain rule consistency of truncated cumulatives") {
    // Discrete analogue of div int_0^u phi1 phi2 sigma = phi1(u) div int_0^u
    // phi2 sigma + first-order commutator: the mismatch of the two sides
    // shrinks linearly under mesh refinement for smooth states.
    auto phi1 = [](double z) { return 1.0 - z * z / 9.0; };
    auto psi12 = [](double z) {
        return z * z + std::pow(z, 3) / 9.0 - std::pow(z, 4) / 18.0 -
               std::pow(z, 5) / 135.0;
    };
    auto psi2 = [](double z) { return z * z + std::pow(z, 3) / 9.0; };

    auto mismatch = [&](int points) {
        TorusGrid grid(1, points);
        Field u = wave(grid, 0.8, 1);
        const double dx = grid.spacing;
        const std::size_t p = u.values.size();
        double worst = 0.0;
        for (std::size_t i = 0; i < p; ++i) {
            const std::size_t l = (i + p - 1) % p;
            const std::size_t r = (i + 1) % p;
            const double lhs = (psi12(u.values[r]) - psi12(u.values[l])) / (2.0 * dx);
            const double rhs =
                phi1(u.values[i]) * (psi2(u.values[r]) - psi2(u.values[l])) / (2.0 * dx);
            worst = std::max(worst, std::abs(lhs - rhs));
        }
        return worst;
    };

    const double coarse = mismatch(64);
    const double fine = mismatch(128);
    CHECK(coarse < 0.1);
    CHECK(fine <= 0.6 * coarse + 1e-12);
}

TEST_CASE("histogram csv exports") {
    XiGrid xi(-2.0, 2.0, 16);
    KineticMeasureHistogram hist(xi, 4, 2, MeasureComponent::EntropyDefect);
    hist.at(0, 1, 3) = 0.25;
    hist.at(1, 2, 7) = 0.5;

    const std::string hist_path = "kinetic_hist_test.csv";
    write_histogram_csv(hist_path, hist);
    std::ifstream in(hist_path);
    REQUIRE(in.good());
    std::string line;
    std::getline(in, line);
    CHECK(line == "t_bin,x_cell,xi_cell,mass,component");
    int rows = 0;
    while (std::getline(in, line))
        if (!line.empty()) ++rows;
    CHECK(rows == 2);
    in.close();
    std::remove(hist_path.c_str());

    DecayProfile profile;
    profile.levels = {0, 1};
    profile.scaled_mass = {0.5, 0.25};
    const std::string decay_path = "kinetic_decay_test.csv";
    write_decay_csv(decay_path, profile);
    std::ifstream din(decay_path);
    REQUIRE(din.good());
    std::getline(din, line);
    CHECK(line == "ell,scaled_mass");
    rows = 0;
    while (std::getline(din, line))
        if (!line.empty()) ++rows;
    CHECK(rows == 2);
    din.close();
    std::remove(decay_path.c_str());
}
