// Python bindings for the experiment harness and the direct solver entry
// point. Configs cross the boundary as canonical JSON strings; field data
// crosses as numpy arrays.
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "kspde/analysis.hpp"
#include "kspde/field.hpp"
#include "kspde/harness.hpp"
#include "kspde/solver.hpp"

#include <cstdio>
#include <string>
#include <vector>

namespace py = pybind11;

namespace {

py::dict record_to_dict(const kspde::RunRecord& record) {
    py::dict out;
    out["experiment"] = record.config.experiment;
    out["config"] = kspde::config_to_json(record.config);
    char hex[32];
    std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(record.hash));
    out["config_hash"] = std::string(hex);
    out["member_seeds"] = record.member_seeds;
    out["wall_seconds"] = record.wall_seconds;
    out["artifacts"] = record.artifacts;
    py::list verdicts;
    bool all = !record.verdicts.empty();
    for (const auto& row : record.verdicts) {
        py::dict v;
        v["name"] = row.name;
        v["pass"] = row.pass;
        v["measured"] = row.measured;
        v["bound"] = row.bound;
        v["stderr"] = row.stderr_est;
        verdicts.append(v);
        all = all && row.pass;
    }
    out["verdicts"] = verdicts;
    out["all_passed"] = all;
    return out;
}

kspde::Field field_from_array(const kspde::TorusGrid& grid, const py::array_t<double>& data) {
    auto buffer = data.request();
    kspde::Field u(grid);
    if (static_cast<std::size_t>(buffer.size) != u.values.size())
        throw kspde::ConfigError("initial datum size does not match the grid");
    const double* ptr = static_cast<const double*>(buffer.ptr);
    std::copy(ptr, ptr + buffer.size, u.values.begin());
    return u;
}

py::array_t<double> array_from_field(const kspde::Field& u) {
    py::array_t<double> out(static_cast<py::ssize_t>(u.values.size()));
    std::copy(u.values.begin(), u.values.end(), static_cast<double*>(out.request().ptr));
    return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "stochastic conservation law laboratory";

    m.def("list_experiments", &kspde::list_experiments,
          "name/description pairs of the canned experiments");

    m.def(
        "default_config",
        [](const std::string& name) { return kspde::config_to_json(kspde::default_config(name)); },
        py::arg("experiment"), "canonical JSON config of a canned experiment");

    m.def(
        "config_hash",
        [](const std::string& text) {
            char hex[32];
            std::snprintf(hex, sizeof hex, "%016llx",
                          static_cast<unsigned long long>(
                              kspde::config_hash(kspde::config_from_json(text))));
            return std::string(hex);
        },
        py::arg("config_json"), "FNV-1a hash of the canonical config dump, as hex");

    m.def(
        "run_experiment",
        [](const std::string& config_json) {
            const kspde::ExperimentConfig config = kspde::config_from_json(config_json);
            kspde::RunRecord record;
            {
                py::gil_scoped_release release;
                record = kspde::run_experiment(config);
            }
            return record_to_dict(record);
        },
        py::arg("config_json"), "run one experiment; returns verdicts and provenance");

    m.def(
        "solve",
        [](const std::string& config_json, const py::array_t<double>& u0, std::uint64_t seed,
           int record_every) {
            const kspde::ExperimentConfig config = kspde::config_from_json(config_json);
            kspde::SolverConfig solver = kspde::solver_config_from(config);
            solver.record_every =
                record_every > 0
                    ? record_every
                    : std::max(1, static_cast<int>(solver.step_count() / 10));
            const kspde::Field datum = field_from_array(solver.grid, u0);
            kspde::Trajectory traj;
            {
                py::gil_scoped_release release;
                traj = kspde::solve(solver, datum, seed);
            }
            py::dict out;
            out["times"] = traj.times;
            out["l1"] = traj.l1;
            out["l2"] = traj.l2;
            out["lp"] = traj.lp;
            out["mass"] = traj.mass;
            out["final_state"] = array_from_field(traj.states.back());
            return out;
        },
        py::arg("config_json"), py::arg("u0"), py::arg("seed") = 1, py::arg("record_every") = 0,
        "advance one trajectory from a numpy datum; returns norm histories");

    py::register_exception<kspde::ConfigError>(m, "ConfigError", PyExc_ValueError);
}
