#pragma once

#include <stdexcept>
#include <string>

namespace kspde {

struct SymmetryViolation : std::runtime_error {
    explicit SymmetryViolation(const std::string& msg) : std::runtime_error(msg) {}
};

struct InvalidExponent : std::runtime_error {
    explicit InvalidExponent(const std::string& msg) : std::runtime_error(msg) {}
};

struct GridMismatch : std::runtime_error {
    explicit GridMismatch(const std::string& msg) : std::runtime_error(msg) {}
};

struct EmptyFrequencyShell : std::runtime_error {
    explicit EmptyFrequencyShell(const std::string& msg) : std::runtime_error(msg) {}
};

struct DegenerateFit : std::runtime_error {
    explicit DegenerateFit(const std::string& msg) : std::runtime_error(msg) {}
};

struct InvalidModel : std::runtime_error {
    explicit InvalidModel(const std::string& msg) : std::runtime_error(msg) {}
};

struct HorizonExceeded : std::runtime_error {
    explicit HorizonExceeded(const std::string& msg) : std::runtime_error(msg) {}
};

struct BoundViolation : std::runtime_error {
    explicit BoundViolation(const std::string& msg) : std::runtime_error(msg) {}
};

// Refused time step; carries the largest step the stability analysis admits.
struct CflViolation : std::runtime_error {
    double admissible_dt;
    CflViolation(const std::string& msg, double admissible)
        : std::runtime_error(msg), admissible_dt(admissible) {}
};

struct LinearSolveFailure : std::runtime_error {
    int iterations;
    double residual;
    LinearSolveFailure(const std::string& msg, int iters, double res)
        : std::runtime_error(msg), iterations(iters), residual(res) {}
};

struct NonFinite : std::runtime_error {
    explicit NonFinite(const std::string& msg) : std::runtime_error(msg) {}
};

struct RangeNotCovered : std::runtime_error {
    explicit RangeNotCovered(const std::string& msg) : std::runtime_error(msg) {}
};

struct CouplingMismatch : std::runtime_error {
    explicit CouplingMismatch(const std::string& msg) : std::runtime_error(msg) {}
};

struct InsufficientResolution : std::runtime_error {
    explicit InsufficientResolution(const std::string& msg) : std::runtime_error(msg) {}
};

struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace kspde
