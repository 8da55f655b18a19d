#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cklur/families.hpp"
#include "cklur/norm.hpp"
#include "cklur/rng.hpp"
#include "cklur/space.hpp"

namespace cklur {

// ── Level selection and oscillation ─────────────────────────────────────────

// Minimal l >= 1 such that d(t,u) <= 2^-l forces |f(t)-f(u)| <= eps/3.
// Exhaustive over explicit pairs; the tail is handled by closed forms.
int uc_level(const TopSpace& space, const RealFunction& f, double eps);

struct OscillationReport {
    bool ok = true;
    int family = -1, member = -1;  // first offending member when !ok
    double osc = 0.0;              // its oscillation over the member's closure
};

// Checks osc(f over cl(N)) <= eps/3 for every member N of the covering.
OscillationReport oscillation_check(const LevelCovering& cov, const RealFunction& f, double eps);

// ── Good choices ────────────────────────────────────────────────────────────

struct GoodChoiceStats {
    double A = 0, a = 0, alpha = 0, beta = 0, b = 0, B = 0;
    // L minus the guarded open set is empty on that side; the stat is then
    // reported as A (resp. B) and the side counts as satisfied, since no
    // competing member can meet L there.
    bool degenerate_lo = false;  // alpha side
    bool degenerate_hi = false;  // beta side
    bool good = false;
};

// Stats of a candidate pair (M = min side, N = max side) of type
// (|M|, |N|, i, j) on L; validates that the pair is a legal candidate.
GoodChoiceStats good_choice_stats(DerivedTable& table, const RealFunction& f, PointSet L,
                                  const IndexSeq& i, const IndexSeq& j,
                                  const std::vector<PointSet>& M,
                                  const std::vector<PointSet>& N, double strict_tol);

struct GoodChoice {
    IndexSeq i, j;
    std::vector<PointSet> M, N;  // min side, max side
    GoodChoiceStats stats;
};

// The canonical good choice on L built from the extremum bands (values within
// strict_tol of max/min over L) via the minimal-index search.  Returns nothing
// when osc(f over L) < eps.  Throws ValidationError when the constructed pair
// fails its guarantees (the covering is too coarse for this eps).
std::optional<GoodChoice> find_good_choice(DerivedTable& table, const RealFunction& f,
                                           PointSet L, double eps, double strict_tol);

// Margin by which the gap value of the good pair beats every other candidate
// pair of the same type; +infinity when it is the only candidate.
double check_strong_attainment(DerivedTable& table, const RealFunction& f, PointSet L,
                               const GoodChoice& choice, double strict_tol);

// ── Selection harness (finite stand-in for the limit argument) ──────────────

struct DevilleInput {
    // Index set I of size k; rows are steps r of the approximating sequence.
    std::vector<double> phi_x, psi_x;                    // values at x       [k]
    std::vector<std::vector<double>> phi_r, psi_r;       // values at x_r     [R][k]
    std::vector<std::vector<double>> phi_mid, psi_mid;   // at (x + x_r)/2    [R][k]
    int p_max = 8;
    double margin = 1e-9;  // strong-attainment margin on the phi sup at x
};

struct DevilleReport {
    std::vector<int> selected;               // per step: index with the largest
                                             // aggregated theta at the midpoint
    bool strongly_attained = false;
    int attained_at = -1;
    bool eventually_constant = false;        // selected == attained_at from some step on
    int constant_from = -1;
    std::vector<double> theta_discrepancy;   // convexity defect of theta per step
    std::vector<double> psi_j_discrepancy;   // same for psi at the attained index
};

DevilleReport deville_harness(const DevilleInput& in);

// ── Decomposition tree ──────────────────────────────────────────────────────

struct ScheduleType {
    int m = 1, n = 1;
    IndexSeq i, j;
};

// Deterministic cycle through the candidate types (m, n, i, j) of one table,
// diagonal-first.  The cycle length is the number of distinct types.
std::vector<ScheduleType> schedule_cycle(DerivedTable& table, const NormParams& params);

struct DecompNode {
    PointSet L;
    int s = 0;
    int rule = 0;  // 1 leaf, 2 split, 3 pass
    int parent = -1;
    int child_x = -1, child_y = -1;  // rule 2 (rule 3 reuses child_x)
    std::optional<GoodChoice> choice;  // rule 2 payload
};

struct DecompositionTree {
    std::vector<DecompNode> nodes;  // node 0 is the root (K, 0)
    std::vector<int> leaves;
    int max_depth = 0;
    int cycle_length = 0;
};

// Builds the splitting tree for (f, eps): leaves have oscillation < eps, a
// node splits when the canonical good choice matches the scheduled type, and
// passes otherwise.  Terminates within the computed depth cap or throws.
DecompositionTree build_decomposition(DerivedTable& table, const RealFunction& f, double eps,
                                      const NormParams& params);

// ── Empirical convexity probe ───────────────────────────────────────────────

struct ModulusReport {
    double eps = 0;
    double delta_estimate = 0;  // smallest convexity defect found (evidence, not proof)
    RealFunction witness;
    long long evals = 0;  // defect evaluations spent (two solves each)
    int restarts = 0;
    std::uint64_t seed = 0;
    double f_norm = 0;
    std::vector<double> restart_best;  // per-restart minimum, for the trace
};

// Minimizes 0.5|f|^2 + 0.5|g|^2 - |(f+g)/2|^2 over g with |f-g|_inf >= eps by
// anchored random restarts plus coordinate descent.  Restarts run in parallel
// with derived seeds; the result is independent of the thread count.
ModulusReport lur_probe(Solver& solver, const RealFunction& f, double eps, long long budget,
                        std::uint64_t seed);

// Convexity defect of the squared norm between f and g: always >= 0 up to
// roundoff, and 0 at g = f.
double norm_lur_discrepancy(Solver& solver, const RealFunction& f, const RealFunction& g);
// Same defect for one squared table entry over L at `level`.
double omega_lur_discrepancy(Solver& solver, int level, const RealFunction& f,
                             const RealFunction& g, PointSet L);
double psi_lur_discrepancy(Solver& solver, int level, const RealFunction& f,
                           const RealFunction& g, PointSet L,
                           const std::vector<PointSet>& M, const std::vector<PointSet>& N);

}  // namespace cklur
