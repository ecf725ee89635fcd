// Acceptance gate: runs every canned experiment and prints one verdict line
// per numbered criterion. Exit status is the number of failed criteria, so
// a zero exit means the whole contract holds under the pinned tolerances.
#include "kspde/harness.hpp"

#include <chrono>
#include <cstdio>
#include <string>
#include <vector>

int main() {
    using namespace kspde;
    const std::vector<std::pair<std::string, std::vector<std::string>>> criteria = {
        {"01 exact diffusion benchmark", {"heat-exact"}},
        {"02 shock speed and entropy inequality", {"burgers-shock"}},
        {"03 deterministic comparison principle", {"comparison-deterministic"}},
        {"04 coupled-path L1 contraction", {"contraction-coupled"}},
        {"05 moment bounds under noise", {"lp-moments"}},
        {"06 entropy defect shell decay", {"measure-decay"}},
        {"07 nondegeneracy exponent recovery", {"nondegeneracy-fit"}},
        {"08 block regularity gain", {"regularity-burgers", "regularity-porous"}},
        {"09 vanishing viscosity Cauchy property", {"vanishing-viscosity-cauchy"}},
        {"10 uniform multiplier bounds", {"multiplier-uniformity"}},
        {"11 structural invariants", {"structural-invariants"}},
    };

    int failures = 0;
    for (const auto& [label, experiments] : criteria) {
        const auto start = std::chrono::steady_clock::now();
        bool pass = true;
        std::vector<VerdictRow> rows;
        std::string error;
        for (const std::string& name : experiments) {
            try {
                RunRecord record = run_experiment(default_config(name));
                pass = pass && record.all_passed();
                rows.insert(rows.end(), record.verdicts.begin(), record.verdicts.end());
            } catch (const std::exception& e) {
                pass = false;
                error = e.what();
            }
        }
        const double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        std::printf("criterion %s: %s  [%.1fs]\n", label.c_str(), pass ? "PASS" : "FAIL", secs);
        for (const VerdictRow& row : rows)
            std::printf("    %-28s %s  measured=%.6g bound=%.6g\n", row.name.c_str(),
                        row.pass ? "pass" : "FAIL", row.measured, row.bound);
        if (!error.empty()) std::printf("    error: %s\n", error.c_str());
        if (!pass) ++failures;
        std::fflush(stdout);
    }
    std::printf("%d of %zu criteria failed\n", failures, criteria.size());
    return failures;
}
