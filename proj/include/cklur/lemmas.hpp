#pragma once

#include <string>
#include <vector>

#include "cklur/analysis.hpp"
#include "cklur/instance.hpp"
#include "cklur/norm.hpp"

namespace cklur {

// One named property check.  `skipped` marks checks that do not apply to the
// instance kind (for example exhaustive pair enumeration over a symbolic
// family); a skipped check never counts as a failure.
struct CheckResult {
    std::string name;
    bool pass = true;
    bool skipped = false;
    std::string note;
};

// Suite 3: index-sequence order and derived-family calculus over one covering.
std::vector<CheckResult> suite_families(DerivedTable& table);
// Suite 5: extremum-split statistics and strong attainment for one function.
std::vector<CheckResult> suite_choices(DerivedTable& table, const RealFunction& f, double eps,
                                       double strict_tol);
// Suite 6: selection harness over the solve tables (finite discrete spaces).
std::vector<CheckResult> suite_selection(Solver& solver, const RealFunction& f, int level);
// Suite 7: splitting tree shape, leaf cover, and leaf oscillation.
std::vector<CheckResult> suite_decomposition(DerivedTable& table, const RealFunction& f,
                                             double eps, const NormParams& params);

// Runs one suite over every covering (and, where applicable, every function)
// of the instance.  Valid suite ids: 3, 5, 6, 7.
std::vector<CheckResult> run_suite(const Instance& inst, int suite, double eps,
                                   const NormParams& params);

bool all_pass(const std::vector<CheckResult>& results);

}  // namespace cklur
