#pragma once

// Canned experiment suite: named end-to-end runs that exercise the solver,
// kinetic estimators, and multiplier machinery against their quantitative
// verdicts, with JSON-configurable parameters, reproducible per-member
// seeds, a worker pool over ensemble members, and CSV/JSON artifacts.

#include "kspde/errors.hpp"
#include "kspde/solver.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace kspde {

// Flat experiment description. Every canned experiment reads the generic
// knobs it needs and pins the rest internally; default_config() returns the
// canonical parameters the verdicts were calibrated on.
struct ExperimentConfig {
    std::string experiment = "heat-exact";
    int members = 8;
    std::uint64_t seed_base = 1;
    std::string out_dir;  // empty: run without writing artifacts
    int points = 128;
    int dim = 1;
    double dt = 1e-3;
    double t_end = 0.5;
    double kappa = 0.0;       // added uniform viscosity
    double truncation = 0.0;  // coefficient clamp scale tau, 0 = off
    std::optional<int> flux_exponent;
    std::optional<int> diffusion_exponent;
    std::string noise = "none";  // none | default | additive
    std::vector<double> noise_alpha;
    double amplitude = 1.0;  // datum scale

    void validate() const;  // throws ConfigError
    bool operator==(const ExperimentConfig& o) const = default;
};

ExperimentConfig default_config(const std::string& experiment);

// Strict JSON round trip: unknown keys are rejected, missing keys fall back
// to the defaults above. Objects serialize with sorted keys, so the dump is
// canonical and hashable.
std::string config_to_json(const ExperimentConfig& config);
ExperimentConfig config_from_json(const std::string& text);

// FNV-1a over the canonical JSON dump.
std::uint64_t config_hash(const ExperimentConfig& config);

// Solver setup for the model, noise, grid, and stepping fields of a config;
// the entry point for driving solve() directly with a custom datum.
SolverConfig solver_config_from(const ExperimentConfig& config);

// One named check inside an experiment. The pass flag is authoritative;
// measured/bound document the comparison it encodes.
struct VerdictRow {
    std::string name;
    bool pass = false;
    double measured = 0.0;
    double bound = 0.0;
    double stderr_est = 0.0;
};

struct RunRecord {
    ExperimentConfig config;
    std::uint64_t hash = 0;
    std::vector<std::uint64_t> member_seeds;
    double wall_seconds = 0.0;
    std::vector<std::string> artifacts;
    std::vector<VerdictRow> verdicts;

    bool all_passed() const;
};

// Name plus one-line description for every canned experiment.
std::vector<std::pair<std::string, std::string>> list_experiments();

// Runs the named experiment over the member pool, writes artifacts when
// out_dir is set, and returns the verdicts. Member failures are rethrown
// with the offending seed named. Given the same config the numeric outputs
// are bit-identical, independent of the worker count.
RunRecord run_experiment(const ExperimentConfig& config);

// Worker count for ensemble loops: KSPDE_THREADS when set, otherwise the
// hardware concurrency, clamped to [1, members].
int worker_count(int members);

// Runs job(0..members-1) on the worker pool; the first exception wins and is
// rethrown after all workers drain. Jobs must write only to their own slots.
void for_each_member(int members, const std::function<void(int)>& job);

// One row per verdict: name,pass,measured,bound,stderr.
void write_verdicts_csv(const std::string& path, const RunRecord& record);

}  // namespace kspde
