#include "kspde/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>

namespace kspde {

namespace {

// x^n for n >= 0 by repeated multiplication; exact for small integer powers.
double ipow(double x, int n) {
    double acc = 1.0;
    for (int i = 0; i < n; ++i) acc *= x;
    return acc;
}

// Composite Simpson rule; signed when b < a. panels must be even.
double simpson(const std::function<double(double)>& f, double a, double b, int panels) {
    if (a == b) return 0.0;
    const double h = (b - a) / panels;
    double acc = f(a) + f(b);
    for (int i = 1; i < panels; ++i) acc += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
    return acc * h / 3.0;
}

double clamp(double x, double lo, double hi) { return std::min(std::max(x, lo), hi); }

}  // namespace

void ModelSpec::validate() const {
    if (flux_exponent && *flux_exponent < 2) throw InvalidModel("flux exponent must be >= 2");
    if (diffusion_exponent && *diffusion_exponent <= 2.0)
        throw InvalidModel("diffusion exponent must be > 2");
    if (viscosity < 0.0) throw InvalidModel("viscosity must be >= 0");
    if (truncation < 0.0) throw InvalidModel("truncation must be >= 0");
}

double ModelSpec::b(double xi) const {
    if (custom_b) return custom_b(xi);
    if (flux_exponent) return ipow(xi, *flux_exponent - 1);
    return 0.0;
}

double ModelSpec::b_prime(double xi) const {
    if (custom_b) {
        const double h = 1e-6 * std::max(1.0, std::abs(xi));
        return (custom_b(xi + h) - custom_b(xi - h)) / (2.0 * h);
    }
    if (flux_exponent) return (*flux_exponent - 1) * ipow(xi, *flux_exponent - 2);
    return 0.0;
}

double ModelSpec::B(double xi) const {
    if (custom_b) return simpson([this](double z) { return custom_b(z); }, 0.0, xi, 256);
    if (flux_exponent) return ipow(xi, *flux_exponent) / *flux_exponent;
    return 0.0;
}

double ModelSpec::sigma(double xi) const {
    if (custom_sigma) return custom_sigma(xi);
    if (diffusion_exponent) return std::pow(std::abs(xi), (*diffusion_exponent - 1.0) / 2.0);
    return 0.0;
}

double ModelSpec::A(double xi) const {
    const double s = sigma(xi);
    return s * s;
}

double ModelSpec::b_tau(double xi) const {
    if (truncation <= 0.0) return b(xi);
    const double r = 1.0 / truncation;
    if (std::abs(xi) <= r) return b(xi);
    const double seam = xi > 0.0 ? r : -r;
    return b(seam) + b_prime(seam) * (xi - seam);
}

double ModelSpec::b_tau_prime(double xi) const {
    if (truncation <= 0.0) return b_prime(xi);
    const double r = 1.0 / truncation;
    return b_prime(clamp(xi, -r, r));
}

double ModelSpec::B_tau(double xi) const {
    if (truncation <= 0.0) return B(xi);
    const double r = 1.0 / truncation;
    if (std::abs(xi) <= r) return B(xi);
    const double seam = xi > 0.0 ? r : -r;
    const double d = xi - seam;
    return B(seam) + b(seam) * d + 0.5 * b_prime(seam) * d * d;
}

double ModelSpec::sigma_reg(double xi) const {
    const double base = std::sqrt(viscosity);
    if (truncation <= 0.0) return base + sigma(xi);
    const double r = 1.0 / truncation;
    return base + sigma(clamp(xi, -r, r));
}

double ModelSpec::A_reg(double xi) const {
    const double s = sigma_reg(xi);
    return s * s;
}

double ModelSpec::sigma_reg_antiderivative(double xi) const {
    double acc = std::sqrt(viscosity) * xi;
    if (custom_sigma) {
        const double r = truncation > 0.0 ? 1.0 / truncation : 0.0;
        auto f = [&](double z) {
            return truncation > 0.0 ? custom_sigma(clamp(z, -r, r)) : custom_sigma(z);
        };
        return acc + simpson(f, 0.0, xi, 256);
    }
    if (!diffusion_exponent) return acc;
    // int_0^x z^p dz = x^(p+1)/(p+1) up to the seam, then a linear tail.
    const double p = (*diffusion_exponent - 1.0) / 2.0;
    const double ax = std::abs(xi);
    const double sign = xi >= 0.0 ? 1.0 : -1.0;
    if (truncation <= 0.0) return acc + sign * std::pow(ax, p + 1.0) / (p + 1.0);
    const double r = 1.0 / truncation;
    if (ax <= r) return acc + sign * std::pow(ax, p + 1.0) / (p + 1.0);
    return acc + sign * (std::pow(r, p + 1.0) / (p + 1.0) + std::pow(r, p) * (ax - r));
}

double ModelSpec::flux_pos_integral(double u) const {
    if (!flux_on()) return 0.0;
    if (custom_b) {
        auto f = [this](double z) { return std::max(b_tau(z), 0.0); };
        return simpson(f, 0.0, u, 512);
    }
    // k odd: b_tau >= 0 everywhere. k even: b_tau has the sign of xi.
    if (*flux_exponent % 2 == 1) return B_tau(u);
    return u > 0.0 ? B_tau(u) : 0.0;
}

double ModelSpec::flux_neg_integral(double u) const {
    if (!flux_on()) return 0.0;
    if (custom_b) {
        auto f = [this](double z) { return std::min(b_tau(z), 0.0); };
        return simpson(f, 0.0, u, 512);
    }
    if (*flux_exponent % 2 == 1) return 0.0;
    return u < 0.0 ? B_tau(u) : 0.0;
}

double ModelSpec::max_abs_b_tau(double lo, double hi) const {
    if (lo > hi) std::swap(lo, hi);
    double best = 0.0;
    if (custom_b) {
        const int samples = 2048;
        for (int i = 0; i <= samples; ++i) {
            const double xi = lo + (hi - lo) * i / samples;
            best = std::max(best, std::abs(b_tau(xi)));
        }
        return best;
    }
    // |b_tau| is nondecreasing in |xi|; endpoints, origin and seams cover the sup.
    std::vector<double> candidates = {lo, hi};
    if (lo <= 0.0 && 0.0 <= hi) candidates.push_back(0.0);
    if (truncation > 0.0) {
        candidates.push_back(clamp(1.0 / truncation, lo, hi));
        candidates.push_back(clamp(-1.0 / truncation, lo, hi));
    }
    for (double c : candidates) best = std::max(best, std::abs(b_tau(c)));
    return best;
}

double ModelSpec::max_a_reg(double lo, double hi) const {
    if (lo > hi) std::swap(lo, hi);
    double best = 0.0;
    if (custom_sigma) {
        const int samples = 2048;
        for (int i = 0; i <= samples; ++i) {
            const double xi = lo + (hi - lo) * i / samples;
            best = std::max(best, A_reg(xi));
        }
        return best;
    }
    std::vector<double> candidates = {lo, hi};
    if (lo <= 0.0 && 0.0 <= hi) candidates.push_back(0.0);
    if (truncation > 0.0) {
        candidates.push_back(clamp(1.0 / truncation, lo, hi));
        candidates.push_back(clamp(-1.0 / truncation, lo, hi));
    }
    for (double c : candidates) best = std::max(best, A_reg(c));
    return best;
}

Localization Localization::Identity() { return Localization{}; }

Localization Localization::Bump(double center, double radius) {
    if (radius <= 0.0) throw std::invalid_argument("bump radius must be positive");
    Localization loc;
    loc.identity = false;
    loc.center = center;
    loc.radius = radius;
    return loc;
}

double Localization::eta(double xi) const {
    if (identity) return 1.0;
    const double z = (xi - center) / radius;
    if (std::abs(z) >= 1.0) return 0.0;
    const double w = 1.0 - z * z;
    return w * w * w;
}

double Localization::eta_abs_derivative(double xi) const {
    if (identity) return 0.0;
    const double z = (xi - center) / radius;
    if (std::abs(z) >= 1.0) return 0.0;
    const double w = 1.0 - z * z;
    return 6.0 * std::abs(z) * w * w / radius;
}

namespace {

// int_0^z (1 - s^2)^3 ds on [-1, 1], held constant at +-16/35 outside.
double bump_primitive(double z) {
    const double zc = clamp(z, -1.0, 1.0);
    const double z2 = zc * zc;
    return zc * (1.0 + z2 * (-1.0 + z2 * (0.6 - z2 / 7.0)));
}

}  // namespace

double Localization::eta_antiderivative(double xi) const {
    if (identity) return xi;
    const double z1 = (xi - center) / radius;
    const double z0 = (0.0 - center) / radius;
    return radius * (bump_primitive(z1) - bump_primitive(z0));
}

double Localization::theta(double xi) const {
    double poly = 0.0;
    double power = 1.0;
    for (double c : theta_coeffs) {
        poly += c * power;
        power *= xi;
    }
    return std::max(1.0, poly);
}

double Localization::support_lo() const {
    return identity ? -std::numeric_limits<double>::infinity() : center - radius;
}

double Localization::support_hi() const {
    return identity ? std::numeric_limits<double>::infinity() : center + radius;
}

std::complex<double> symbol_eval(const ModelSpec& spec, double u, const std::vector<int>& n,
                                 double xi) {
    if (n.empty()) throw std::invalid_argument("frequency vector must be nonempty");
    double sum_n = 0.0;
    double norm_sq = 0.0;
    for (int ni : n) {
        sum_n += ni;
        norm_sq += static_cast<double>(ni) * ni;
    }
    const double real = (spec.A(xi) + spec.viscosity) * norm_sq;
    const double imag = u + spec.b(xi) * sum_n;
    return {real, imag};
}

namespace {

// Lattice frequencies n with J/2 <= |n| <= 2J, as (sum n_i, |n|^2) pairs.
std::vector<std::pair<double, double>> shell_lattice(int J, int dim) {
    const double lo2 = 0.25 * J * J;
    const double hi2 = 4.0 * J * J;
    std::vector<std::pair<double, double>> shell;
    if (dim == 1) {
        for (int n = -2 * J; n <= 2 * J; ++n) {
            const double q = static_cast<double>(n) * n;
            if (q >= lo2 && q <= hi2) shell.emplace_back(n, q);
        }
    } else {
        for (int n1 = -2 * J; n1 <= 2 * J; ++n1) {
            for (int n2 = -2 * J; n2 <= 2 * J; ++n2) {
                const double q = static_cast<double>(n1) * n1 + static_cast<double>(n2) * n2;
                if (q >= lo2 && q <= hi2) shell.emplace_back(n1 + n2, q);
            }
        }
    }
    if (shell.empty()) throw EmptyFrequencyShell("no lattice point in dyadic shell");
    return shell;
}

}  // namespace

double omega_measure(const ModelSpec& spec, const Localization& loc, int J, double delta,
                     int dim, const OmegaWindow& window) {
    spec.validate();
    if (J < 1) throw std::invalid_argument("shell index must be >= 1");
    if (delta <= 0.0) throw std::invalid_argument("degeneracy threshold must be positive");
    if (dim != 1 && dim != 2) throw std::invalid_argument("dimension must be 1 or 2");
    if (window.cells < 8 || window.lo >= window.hi)
        throw std::invalid_argument("bad sampling window");
    if (!loc.identity &&
        (loc.support_lo() < window.lo - 1e-12 || loc.support_hi() > window.hi + 1e-12))
        throw RangeNotCovered("sampling window does not cover the localization support");

    const double width = (window.hi - window.lo) / window.cells;
    std::vector<double> b_c(window.cells), a_c(window.cells);
    std::vector<char> mask(window.cells);
    double max_abs_b = 0.0;
    for (int i = 0; i < window.cells; ++i) {
        const double xi = window.lo + (i + 0.5) * width;
        mask[i] = loc.eta(xi) > 0.0 ? 1 : 0;
        b_c[i] = spec.b(xi);
        a_c[i] = spec.A(xi) + spec.viscosity;
        if (mask[i]) max_abs_b = std::max(max_abs_b, std::abs(b_c[i]));
    }

    // Moving samples chase u = -b(xi*) sum(n) so the level set lands in the support.
    const double span_lo = std::max(window.lo, loc.support_lo());
    const double span_hi = std::min(window.hi, loc.support_hi());
    if (span_lo >= span_hi) return 0.0;

    const auto shell = shell_lattice(J, dim);

    const int global_samples = 65;
    const int moving_samples = 9;
    const double u_span = 2.0 * J * max_abs_b;
    const double delta_sq = delta * delta;

    double sup = 0.0;
    std::vector<double> u_values;
    u_values.reserve(global_samples + moving_samples);
    for (const auto& [sum_n, norm_sq] : shell) {
        u_values.clear();
        for (int s = 0; s < global_samples; ++s)
            u_values.push_back(-u_span + 2.0 * u_span * s / (global_samples - 1));
        for (int s = 0; s < moving_samples; ++s) {
            const double xi = span_lo + (span_hi - span_lo) * (s + 0.5) / moving_samples;
            u_values.push_back(-spec.b(xi) * sum_n);
        }
        for (double u : u_values) {
            int count = 0;
            for (int i = 0; i < window.cells; ++i) {
                if (!mask[i]) continue;
                const double im = u + b_c[i] * sum_n;
                const double re = a_c[i] * norm_sq;
                if (im * im + re * re <= delta_sq) ++count;
            }
            sup = std::max(sup, count * width);
        }
    }
    return sup;
}

namespace {

// Solve the 3x3 system M x = rhs by Gaussian elimination with partial pivoting.
void solve3(double M[3][3], double rhs[3], double x[3]) {
    int perm[3] = {0, 1, 2};
    for (int col = 0; col < 3; ++col) {
        int pivot = col;
        for (int row = col + 1; row < 3; ++row)
            if (std::abs(M[perm[row]][col]) > std::abs(M[perm[pivot]][col])) pivot = row;
        std::swap(perm[col], perm[pivot]);
        const double diag = M[perm[col]][col];
        if (std::abs(diag) < 1e-12) throw DegenerateFit("singular normal equations");
        for (int row = col + 1; row < 3; ++row) {
            const double factor = M[perm[row]][col] / diag;
            for (int k = col; k < 3; ++k) M[perm[row]][k] -= factor * M[perm[col]][k];
            rhs[perm[row]] -= factor * rhs[perm[col]];
        }
    }
    for (int col = 2; col >= 0; --col) {
        double acc = rhs[perm[col]];
        for (int k = col + 1; k < 3; ++k) acc -= M[perm[col]][k] * x[k];
        x[col] = acc / M[perm[col]][col];
    }
}

}  // namespace

NondegeneracyFit fit_exponents_from_table(const ExponentTable& table) {
    const std::size_t nj = table.J.size();
    const std::size_t nd = table.delta.size();
    std::vector<double> log_j, log_d, log_w;
    if (nj >= 1 && nd >= 1 && table.omega.size() == nj * nd) {
        for (std::size_t i = 0; i < nj; ++i) {
            for (std::size_t j = 0; j < nd; ++j) {
                log_j.push_back(std::log(static_cast<double>(table.J[i])));
                log_d.push_back(std::log(table.delta[j]));
                log_w.push_back(table.omega[i * nd + j]);
            }
        }
    } else if (nj == nd && nj == table.omega.size() && nj >= 3) {
        for (std::size_t i = 0; i < nj; ++i) {
            log_j.push_back(std::log(static_cast<double>(table.J[i])));
            log_d.push_back(std::log(table.delta[i]));
            log_w.push_back(table.omega[i]);
        }
    } else {
        throw std::invalid_argument("exponent table is neither a grid nor a triple list");
    }
    for (double& w : log_w) {
        if (!(w > 0.0)) throw DegenerateFit("vanishing degeneracy measure in fit");
        w = std::log(w);
    }

    // Least squares for log w = alpha log delta + gamma log J + c.
    double M[3][3] = {};
    double rhs[3] = {};
    for (std::size_t i = 0; i < log_w.size(); ++i) {
        const double row[3] = {log_d[i], log_j[i], 1.0};
        for (int a = 0; a < 3; ++a) {
            for (int b = 0; b < 3; ++b) M[a][b] += row[a] * row[b];
            rhs[a] += row[a] * log_w[i];
        }
    }
    double x[3];
    solve3(M, rhs, x);
    const double alpha = x[0];
    const double gamma = x[1];
    if (!(alpha > 1e-12)) throw DegenerateFit("nonpositive alpha exponent");

    double worst = 0.0;
    for (std::size_t i = 0; i < log_w.size(); ++i) {
        const double predicted = alpha * log_d[i] + gamma * log_j[i] + x[2];
        worst = std::max(worst, std::abs(predicted - log_w[i]));
    }

    NondegeneracyFit fit;
    // Sublevel measures cannot shrink slower than linearly in delta, so slopes
    // marginally above 1 are sampling noise; cap at the linear rate.
    fit.alpha = std::min(alpha, 1.0);
    fit.beta = -gamma / fit.alpha;
    fit.fit_residual = worst;
    if (!(fit.beta > 0.0)) throw DegenerateFit("nonpositive beta exponent");
    const RegularityPrediction pred = predicted_regularity(fit.alpha, fit.beta);
    fit.predicted_s = 0.95 * pred.s_bound;
    fit.predicted_r = 0.95 * pred.r_bound;
    return fit;
}

NondegeneracyFit fit_exponents(const ModelSpec& spec, const Localization& loc,
                               const std::vector<int>& J_list,
                               const std::vector<double>& delta_list, int dim,
                               const OmegaWindow& window, ExponentTable* table_out) {
    if (J_list.size() < 3 || delta_list.size() < 3)
        throw std::invalid_argument("need at least three shells and three thresholds");
    ExponentTable table;
    table.J = J_list;
    table.delta = delta_list;
    table.omega.reserve(J_list.size() * delta_list.size());
    for (int J : J_list)
        for (double delta : delta_list)
            table.omega.push_back(omega_measure(spec, loc, J, delta, dim, window));
    if (table_out) *table_out = table;
    return fit_exponents_from_table(table);
}

std::pair<double, double> closed_form_exponents(int k, std::optional<double> m) {
    if (k < 2) throw InvalidModel("flux exponent must be >= 2");
    if (m) {
        if (*m <= 2.0) throw InvalidModel("diffusion exponent must be > 2");
        return {1.0 / (*m - 1.0), 2.0};
    }
    return {1.0 / (k - 1.0), 1.0};
}

RegularityPrediction predicted_regularity(double alpha, double beta) {
    if (!(alpha > 0.0) || alpha > 1.0) throw InvalidExponent("alpha must lie in (0, 1]");
    if (!(beta > 0.0)) throw InvalidExponent("beta must be positive");
    RegularityPrediction pred;
    pred.s_bound = alpha * alpha * beta / (6.0 * (1.0 + 2.0 * alpha));
    pred.theta = alpha / (4.0 + alpha);
    pred.r_bound = 1.0 / ((1.0 - pred.theta) / 2.0 + pred.theta);
    return pred;
}

double regularized_sigma(const ModelSpec& spec, double kappa, double tau, double xi) {
    if (kappa < 0.0 || tau < 0.0) throw InvalidModel("regularization must be nonnegative");
    ModelSpec reg = spec;
    reg.viscosity = kappa;
    reg.truncation = tau;
    return reg.sigma_reg(xi);
}

double truncated_flux_derivative(const ModelSpec& spec, double tau, double xi) {
    if (tau < 0.0) throw InvalidModel("truncation must be nonnegative");
    ModelSpec reg = spec;
    reg.truncation = tau;
    return reg.b_tau_prime(xi);
}

void write_exponent_report(const std::string& csv_path, const std::string& json_path,
                           const ExponentTable& table, const NondegeneracyFit& fit) {
    FILE* csv = std::fopen(csv_path.c_str(), "w");
    if (!csv) throw std::runtime_error("cannot open " + csv_path);
    std::fprintf(csv, "J,delta,omega\n");
    const std::size_t nj = table.J.size();
    const std::size_t nd = table.delta.size();
    if (nj >= 1 && nd >= 1 && table.omega.size() == nj * nd) {
        for (std::size_t i = 0; i < nj; ++i)
            for (std::size_t j = 0; j < nd; ++j)
                std::fprintf(csv, "%d,%.17g,%.17g\n", table.J[i], table.delta[j],
                             table.omega[i * nd + j]);
    } else {
        for (std::size_t i = 0; i < table.omega.size(); ++i)
            std::fprintf(csv, "%d,%.17g,%.17g\n", table.J[i], table.delta[i], table.omega[i]);
    }
    std::fclose(csv);

    FILE* json = std::fopen(json_path.c_str(), "w");
    if (!json) throw std::runtime_error("cannot open " + json_path);
    std::fprintf(json,
                 "{\n  \"alpha\": %.17g,\n  \"beta\": %.17g,\n  \"fit_residual\": %.17g,\n"
                 "  \"predicted_s\": %.17g,\n  \"predicted_r\": %.17g\n}\n",
                 fit.alpha, fit.beta, fit.fit_residual, fit.predicted_s, fit.predicted_r);
    std::fclose(json);
}

}  // namespace kspde
