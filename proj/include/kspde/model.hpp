#pragma once

#include <complex>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "kspde/errors.hpp"

namespace kspde {

// Closed-form nonlinearities: B(xi) = xi^k/k with b = B', A(xi) = |xi|^(m-1)
// with sigma = A^(1/2), plus the (kappa, tau) regularizations used by the
// approximation ladder. Custom scalar callables may override b and sigma.
struct ModelSpec {
    std::optional<int> flux_exponent = 2;       // k >= 2; empty disables convection
    std::optional<double> diffusion_exponent;   // m > 2; empty disables degenerate diffusion
    double viscosity = 0.0;                     // kappa >= 0
    double truncation = 0.0;                    // tau >= 0, 0 means no truncation
    std::function<double(double)> custom_b;
    std::function<double(double)> custom_sigma;

    void validate() const;

    bool flux_on() const { return flux_exponent.has_value() || static_cast<bool>(custom_b); }
    bool diffusion_on() const {
        return diffusion_exponent.has_value() || static_cast<bool>(custom_sigma) ||
               viscosity > 0.0;
    }

    double b(double xi) const;
    double b_prime(double xi) const;
    double B(double xi) const;
    double sigma(double xi) const;
    double A(double xi) const;

    // Flux with derivative clamped outside |xi| <= 1/tau (linear continuation).
    double b_tau(double xi) const;
    double b_tau_prime(double xi) const;
    double B_tau(double xi) const;

    // sigma_reg = sqrt(kappa) + sigma clamped at |xi| = 1/tau; A_reg = sigma_reg^2.
    double sigma_reg(double xi) const;
    double A_reg(double xi) const;
    double sigma_reg_antiderivative(double xi) const;  // int_0^xi sigma_reg

    // int_0^u max(b_tau, 0) and int_0^u min(b_tau, 0); the Engquist-Osher split.
    double flux_pos_integral(double u) const;
    double flux_neg_integral(double u) const;

    // Extrema over a value interval, used by CFL checks.
    double max_abs_b_tau(double lo, double hi) const;
    double max_a_reg(double lo, double hi) const;
};

// Velocity localization eta (identity or compactly supported bump) and the
// weight theta >= 1 entering the regularity functionals.
struct Localization {
    bool identity = true;
    double center = 0.0;
    double radius = 1.0;
    std::vector<double> theta_coeffs = {1.0};  // theta(xi) = max(1, sum c_i xi^i)

    static Localization Identity();
    static Localization Bump(double center, double radius);

    double eta(double xi) const;
    double eta_abs_derivative(double xi) const;
    double eta_antiderivative(double xi) const;  // int_0^xi eta
    double eta_bar(double u) const { return eta_antiderivative(u); }
    double theta(double xi) const;
    double support_lo() const;
    double support_hi() const;
};

struct NondegeneracyFit {
    double alpha = 0.0;
    double beta = 0.0;
    double fit_residual = 0.0;
    double predicted_s = 0.0;  // 0.95 x the open regularity bound
    double predicted_r = 0.0;  // 0.95 x the open integrability bound
};

struct RegularityPrediction {
    double s_bound = 0.0;
    double theta = 0.0;
    double r_bound = 0.0;
};

struct OmegaWindow {
    double lo = -1.0;
    double hi = 1.0;
    int cells = 4096;
};

struct ExponentTable {
    std::vector<int> J;
    std::vector<double> delta;
    std::vector<double> omega;  // row-major over (J, delta) pairs when tabulated
};

// L(iu, in, xi) = i(u + b(xi) . n) + n^T (A(xi) + kappa) n with n in Z^N.
std::complex<double> symbol_eval(const ModelSpec& spec, double u, const std::vector<int>& n,
                                 double xi);

// Brute-force sup over sampled u and lattice n with J/2 <= |n| <= 2J of the
// Lebesgue measure of {xi in supp eta : |L| <= delta}.
double omega_measure(const ModelSpec& spec, const Localization& loc, int J, double delta,
                     int dim = 1, const OmegaWindow& window = {});

NondegeneracyFit fit_exponents_from_table(const ExponentTable& table);

NondegeneracyFit fit_exponents(const ModelSpec& spec, const Localization& loc,
                               const std::vector<int>& J_list,
                               const std::vector<double>& delta_list, int dim = 1,
                               const OmegaWindow& window = {},
                               ExponentTable* table_out = nullptr);

std::pair<double, double> closed_form_exponents(int k, std::optional<double> m);

RegularityPrediction predicted_regularity(double alpha, double beta);

double regularized_sigma(const ModelSpec& spec, double kappa, double tau, double xi);
double truncated_flux_derivative(const ModelSpec& spec, double tau, double xi);

void write_exponent_report(const std::string& csv_path, const std::string& json_path,
                           const ExponentTable& table, const NondegeneracyFit& fit);

}  // namespace kspde
