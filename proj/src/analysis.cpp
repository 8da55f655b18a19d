#include "cklur/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <string>
#include <tuple>
#include <utility>

#include "cklur/errors.hpp"

namespace cklur {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_eps(double eps) {
    if (!(eps > 0.0) || !std::isfinite(eps))
        throw ValidationError("eps must be positive and finite");
}

void check_tol(double tol) {
    if (!(tol >= 0.0) || !std::isfinite(tol))
        throw ValidationError("the strict-inequality tolerance must be nonnegative and finite");
}

bool is_member_of(const Family& fam, PointSet S) {
    if (fam.symbolic)
        return S.tail == Tail::none && S.explicit_count() == 1 && S.subset_of(fam.domain);
    for (const PointSet& m : fam.members)
        if (m == S) return true;
    return false;
}

bool has_duplicates(std::vector<PointSet> v) {
    std::sort(v.begin(), v.end());
    return std::adjacent_find(v.begin(), v.end()) != v.end();
}

// Points of L whose value is on the given side of the threshold.  Tail points
// and the limit carry the same value, so the result is closed whenever L is.
PointSet band(const TopSpace& space, const RealFunction& f, PointSet L, double thresh, bool leq) {
    PointSet out;
    for_each_explicit(L, [&](int id) {
        double v = value_at(space, f, id);
        if (leq ? v <= thresh : v >= thresh) out = out.unite(PointSet::single(id));
    });
    if (L.tail != Tail::none && (leq ? f.tail_value <= thresh : f.tail_value >= thresh))
        out.tail = L.tail;
    return out;
}

RealFunction midpoint(const RealFunction& a, const RealFunction& b) {
    RealFunction m;
    m.values.resize(a.values.size());
    for (std::size_t i = 0; i < a.values.size(); ++i) m.values[i] = 0.5 * (a.values[i] + b.values[i]);
    m.tail_value = 0.5 * (a.tail_value + b.tail_value);
    return m;
}

}  // namespace

// ── Level selection and oscillation ─────────────────────────────────────────

int uc_level(const TopSpace& space, const RealFunction& f, double eps) {
    check_eps(eps);
    validate_function(space, f);
    const double bound = eps / 3.0;
    double min_d = kInf;
    auto offend = [&](double d) {
        if (!(d > 0.0))
            throw ValidationError("two points at distance zero carry values more than eps/3 apart");
        min_d = std::min(min_d, d);
    };
    if (space.kind() == SpaceKind::finite) {
        int n = space.explicit_points();
        for (int t = 0; t < n; ++t)
            for (int u = t + 1; u < n; ++u)
                if (std::fabs(value_at(space, f, t) - value_at(space, f, u)) > bound)
                    offend(space.dist(t, u));
    } else {
        int c = space.cutoff();
        for (int t = 0; t < c; ++t)
            for (int u = t + 1; u < c; ++u)
                if (std::fabs(f.values[t] - f.values[u]) > bound) offend(space.dist(t, u));
        // Beyond the cutoff every point takes the tail value, so the only other
        // constraints come from a head against the nearest tail point.
        for (int t = 0; t < c; ++t)
            if (std::fabs(f.values[t] - f.tail_value) > bound)
                offend(space.embed(t) - space.embed_tail_point(c));
    }
    int l = 1;
    while (l < 1100 && std::ldexp(1.0, -l) >= min_d) ++l;
    if (std::ldexp(1.0, -l) >= min_d) throw InternalError("level search failed to terminate");
    return l;
}

OscillationReport oscillation_check(const LevelCovering& cov, const RealFunction& f, double eps) {
    check_eps(eps);
    const TopSpace& space = cov.space();
    validate_function(space, f);
    OscillationReport rep;
    for (int fi = 0; fi < cov.family_count(); ++fi) {
        const Family& fam = cov.family(fi);
        if (fam.symbolic) continue;  // singleton members: zero oscillation
        for (int mi = 0; mi < static_cast<int>(fam.members.size()); ++mi) {
            double o = osc_over(space, f, space.closure(fam.members[mi]));
            if (o > eps / 3.0) {
                rep.ok = false;
                rep.family = fi;
                rep.member = mi;
                rep.osc = o;
                return rep;
            }
        }
    }
    return rep;
}

// ── Good choices ────────────────────────────────────────────────────────────

GoodChoiceStats good_choice_stats(DerivedTable& table, const RealFunction& f, PointSet L,
                                  const IndexSeq& i, const IndexSeq& j,
                                  const std::vector<PointSet>& M,
                                  const std::vector<PointSet>& N, double strict_tol) {
    const TopSpace& space = table.space();
    validate_function(space, f);
    check_tol(strict_tol);
    if (L.empty()) throw ValidationError("the base set is empty");
    if (!space.is_closed(L)) throw ValidationError("the base set must be closed");
    if (M.empty() || N.empty())
        throw ValidationError("a candidate pair needs at least one member on each side");
    if (has_duplicates(M) || has_duplicates(N))
        throw ValidationError("a candidate side lists the same member twice");

    const Family& fam_i = table.derive(i).fam;
    const Family& fam_j = table.derive(j).fam;
    PointSet mu, nu;
    for (const PointSet& s : M) {
        if (!is_member_of(fam_i, s))
            throw ValidationError("a min-side set is not a member of the derived family");
        if (!space.closure(s).intersects(L))
            throw ValidationError("a min-side member's closure misses the base set");
        mu = mu.unite(s);
    }
    for (const PointSet& s : N) {
        if (!is_member_of(fam_j, s))
            throw ValidationError("a max-side set is not a member of the derived family");
        if (!space.closure(s).intersects(L))
            throw ValidationError("a max-side member's closure misses the base set");
        nu = nu.unite(s);
    }
    if (space.closure(mu).intersects(space.closure(nu)))
        throw ValidationError("the candidate sides do not have disjoint closures");

    GoodChoiceStats st;
    Extrema ex = extrema_over(space, f, L);
    st.A = ex.min;
    st.B = ex.max;
    st.a = -kInf;
    for (const PointSet& s : M)
        st.a = std::max(st.a, min_over(space, f, L.intersect(space.closure(s))));
    st.b = kInf;
    for (const PointSet& s : N)
        st.b = std::min(st.b, max_over(space, f, L.intersect(space.closure(s))));

    PointSet lo = L.minus(open_G(table, i, M));
    PointSet hi = L.minus(open_G(table, j, N));
    if (lo.empty()) {
        st.degenerate_lo = true;
        st.alpha = st.A;
    } else {
        st.alpha = min_over(space, f, lo);
    }
    if (hi.empty()) {
        st.degenerate_hi = true;
        st.beta = st.B;
    } else {
        st.beta = max_over(space, f, hi);
    }

    double rhs = (st.B - st.b) + (st.a - st.A);
    int m = static_cast<int>(M.size()), n = static_cast<int>(N.size());
    bool lo_ok = st.degenerate_lo || (st.alpha - st.A) / m > rhs + strict_tol;
    bool hi_ok = st.degenerate_hi || (st.B - st.beta) / n > rhs + strict_tol;
    st.good = lo_ok && hi_ok;
    return st;
}

std::optional<GoodChoice> find_good_choice(DerivedTable& table, const RealFunction& f,
                                           PointSet L, double eps, double strict_tol) {
    const TopSpace& space = table.space();
    validate_function(space, f);
    check_eps(eps);
    check_tol(strict_tol);
    if (L.empty()) throw ValidationError("the base set is empty");
    if (!space.is_closed(L)) throw ValidationError("good choices are defined on closed sets");

    Extrema ex = extrema_over(space, f, L);
    if (ex.max - ex.min < eps) return std::nullopt;

    PointSet h_lo = band(space, f, L, ex.min + strict_tol, true);
    PointSet h_hi = band(space, f, L, ex.max - strict_tol, false);
    if (!space.is_closed(h_lo) || !space.is_closed(h_hi))
        throw InternalError("an extremum band of a closed set is not closed");

    MinimalIndexResult lo = minimal_index(table, h_lo);
    MinimalIndexResult hi = minimal_index(table, h_hi);
    GoodChoice gc;
    gc.i = lo.j;
    gc.M = lo.M;
    gc.j = hi.j;
    gc.N = hi.M;
    gc.stats = good_choice_stats(table, f, L, gc.i, gc.j, gc.M, gc.N, strict_tol);
    if (!gc.stats.good)
        throw ValidationError(
            "the extremum split is not a good choice at this tolerance; "
            "the covering is too coarse for this eps");
    return gc;
}

double check_strong_attainment(DerivedTable& table, const RealFunction& f, PointSet L,
                               const GoodChoice& choice, double strict_tol) {
    const TopSpace& space = table.space();
    GoodChoiceStats st =
        good_choice_stats(table, f, L, choice.i, choice.j, choice.M, choice.N, strict_tol);
    if (!st.good)
        throw ValidationError("strong attainment is only guaranteed for good choices");

    int m = static_cast<int>(choice.M.size());
    int n = static_cast<int>(choice.N.size());
    std::vector<BPair> pairs = enumerate_B(table, L, m, n, choice.i, choice.j);
    auto key = [](std::vector<PointSet> v) {
        std::sort(v.begin(), v.end());
        return v;
    };
    const auto mkey = key(choice.M), nkey = key(choice.N);

    bool found = false;
    double phi_good = 0.0, best_other = -kInf;
    for (const BPair& pr : pairs) {
        double ph = phi_gap(space, f, L, pr.M, pr.N);
        if (key(pr.M) == mkey && key(pr.N) == nkey) {
            found = true;
            phi_good = ph;
        } else {
            best_other = std::max(best_other, ph);
        }
    }
    if (!found) throw InternalError("the good pair is missing from its own candidate table");
    if (best_other == -kInf) return kInf;
    double gap = phi_good - best_other;
    if (!(gap > 0.0)) throw InternalError("strong attainment failed for a validated good choice");
    return gap;
}

// ── Selection harness ───────────────────────────────────────────────────────

namespace {

double theta_sq_agg(double phi, double psi, int p_max) {
    double acc = 0.0;
    for (int p = 1; p <= p_max; ++p) acc += std::ldexp(0.5 * (phi * phi + psi * psi / p), -p);
    return acc;
}

void check_row(const std::vector<double>& row, std::size_t k, const char* what) {
    if (row.size() != k) throw ValidationError(std::string(what) + " has a row of the wrong width");
    for (double v : row)
        if (!std::isfinite(v) || v < 0.0)
            throw ValidationError(std::string(what) + " must be finite and nonnegative");
}

}  // namespace

DevilleReport deville_harness(const DevilleInput& in) {
    std::size_t k = in.phi_x.size();
    if (k == 0) throw ValidationError("the selection harness needs at least one index");
    if (in.p_max < 1 || in.p_max > 60)
        throw ValidationError("p_max must lie in [1, 60]");
    if (!(in.margin >= 0.0) || !std::isfinite(in.margin))
        throw ValidationError("the attainment margin must be nonnegative and finite");
    check_row(in.phi_x, k, "phi at x");
    check_row(in.psi_x, k, "psi at x");
    std::size_t steps = in.phi_r.size();
    if (in.psi_r.size() != steps || in.phi_mid.size() != steps || in.psi_mid.size() != steps)
        throw ValidationError("the step tables must all have the same length");
    for (std::size_t r = 0; r < steps; ++r) {
        check_row(in.phi_r[r], k, "phi at a step");
        check_row(in.psi_r[r], k, "psi at a step");
        check_row(in.phi_mid[r], k, "phi at a midpoint");
        check_row(in.psi_mid[r], k, "psi at a midpoint");
    }

    DevilleReport rep;
    int att = 0;
    for (std::size_t i = 1; i < k; ++i)
        if (in.phi_x[i] > in.phi_x[att]) att = static_cast<int>(i);
    double second = -kInf;
    for (std::size_t i = 0; i < k; ++i)
        if (static_cast<int>(i) != att) second = std::max(second, in.phi_x[i]);
    rep.attained_at = att;
    rep.strongly_attained = (k == 1) || in.phi_x[att] > second + in.margin;

    rep.selected.resize(steps);
    rep.theta_discrepancy.resize(steps);
    rep.psi_j_discrepancy.resize(steps);
    for (std::size_t r = 0; r < steps; ++r) {
        int sel = 0;
        double best = -kInf;
        for (std::size_t i = 0; i < k; ++i) {
            double t = theta_sq_agg(in.phi_mid[r][i], in.psi_mid[r][i], in.p_max);
            if (t > best) {
                best = t;
                sel = static_cast<int>(i);
            }
        }
        rep.selected[r] = sel;
        double tx = theta_sq_agg(in.phi_x[sel], in.psi_x[sel], in.p_max);
        double tr = theta_sq_agg(in.phi_r[r][sel], in.psi_r[r][sel], in.p_max);
        rep.theta_discrepancy[r] = 0.5 * tx + 0.5 * tr - best;
        double px = in.psi_x[att], pr = in.psi_r[r][att], pm = in.psi_mid[r][att];
        rep.psi_j_discrepancy[r] = 0.5 * px * px + 0.5 * pr * pr - pm * pm;
    }

    std::size_t from = steps;
    while (from > 0 && rep.selected[from - 1] == att) --from;
    if (steps > 0 && from < steps) {
        rep.eventually_constant = true;
        rep.constant_from = static_cast<int>(from);
    }
    return rep;
}

// ── Decomposition tree ──────────────────────────────────────────────────────

std::vector<ScheduleType> schedule_cycle(DerivedTable& table, const NormParams& params) {
    params.validate();
    int nfam = table.family_count();
    int span = nfam <= 6 ? nfam : std::max(params.i_max, 6);
    const std::vector<IndexSeq>& seqs = table.sigma_sorted(span);

    // Member-count budget per sequence: a closed set can meet a symbolic
    // family only in explicit singletons.
    std::vector<int> cnt(seqs.size(), 0);
    for (std::size_t r = 0; r < seqs.size(); ++r) {
        const Family& fam = table.derive(seqs[r]).fam;
        if (fam.symbolic)
            cnt[r] = fam.domain.explicit_count();
        else
            cnt[r] = static_cast<int>(fam.members.size());
    }

    struct Keyed {
        long long diag;
        int ir, jr, m, n;
    };
    std::vector<Keyed> keys;
    for (std::size_t ir = 0; ir < seqs.size(); ++ir)
        for (std::size_t jr = 0; jr < seqs.size(); ++jr)
            for (int m = 1; m <= cnt[ir]; ++m)
                for (int n = 1; n <= cnt[jr]; ++n)
                    keys.push_back({m + n + static_cast<long long>(ir) + static_cast<long long>(jr),
                                    static_cast<int>(ir), static_cast<int>(jr), m, n});
    std::sort(keys.begin(), keys.end(), [](const Keyed& a, const Keyed& b) {
        return std::tie(a.diag, a.ir, a.jr, a.m, a.n) < std::tie(b.diag, b.ir, b.jr, b.m, b.n);
    });
    if (keys.empty()) throw InternalError("the covering yields no schedulable split types");

    std::vector<ScheduleType> cycle;
    cycle.reserve(keys.size());
    for (const Keyed& kk : keys) cycle.push_back({kk.m, kk.n, seqs[kk.ir], seqs[kk.jr]});
    return cycle;
}

DecompositionTree build_decomposition(DerivedTable& table, const RealFunction& f, double eps,
                                      const NormParams& params) {
    const TopSpace& space = table.space();
    validate_function(space, f);
    check_eps(eps);
    std::vector<ScheduleType> cycle = schedule_cycle(table, params);

    using TypeKey = std::tuple<int, int, std::vector<int>, std::vector<int>>;
    std::map<TypeKey, char> known;
    for (const ScheduleType& t : cycle)
        known[{t.m, t.n, t.i.entries, t.j.entries}] = 1;

    // A chain revisits a set only through passes, and every pass chain ends
    // within one full schedule cycle, so depth is bounded by the number of
    // closed sets times the cycle length.
    long long chain_sets;
    if (space.kind() == SpaceKind::finite) {
        int n = space.explicit_points();
        if (n <= 16) {
            chain_sets = 0;
            for (std::uint64_t m = 0; m < (std::uint64_t{1} << n); ++m)
                if (space.is_closed(PointSet{m, Tail::none})) ++chain_sets;
        } else {
            chain_sets = n + 2ll;  // every split drops at least one point
        }
    } else {
        chain_sets = 5ll << space.cutoff();
    }
    long long depth_cap = (chain_sets + 1) * static_cast<long long>(cycle.size());

    DecompositionTree tree;
    tree.cycle_length = static_cast<int>(cycle.size());
    tree.nodes.push_back({space.universe(), 0, 0, -1, -1, -1, std::nullopt});
    std::vector<int> frontier = {0};
    PointSet settled;  // union of the leaf sets found so far

    for (int s = 0; !frontier.empty(); ++s) {
        if (s > depth_cap)
            throw InternalError("the splitting scheme failed to terminate within the closed-set budget");
        tree.max_depth = s;
        PointSet covered = settled;
        for (int id : frontier) covered = covered.unite(tree.nodes[id].L);
        if (covered != space.universe())
            throw InternalError("the split frontier no longer covers the space");

        const ScheduleType& tau = cycle[s % tree.cycle_length];
        std::vector<int> next;
        for (int id : frontier) {
            PointSet L = tree.nodes[id].L;
            std::optional<GoodChoice> gc;
            if (!L.empty()) gc = find_good_choice(table, f, L, eps, params.strict_tol);
            if (!gc) {  // oscillation below eps (or nothing left): a leaf
                tree.nodes[id].rule = 1;
                tree.leaves.push_back(id);
                settled = settled.unite(L);
                continue;
            }
            TypeKey tk{static_cast<int>(gc->M.size()), static_cast<int>(gc->N.size()),
                       gc->i.entries, gc->j.entries};
            if (!known.count(tk))
                throw UnsupportedError(
                    "the canonical split type falls outside the schedule; raise the sequence budget");
            bool fire = static_cast<int>(gc->M.size()) == tau.m &&
                        static_cast<int>(gc->N.size()) == tau.n && gc->i == tau.i &&
                        gc->j == tau.j;
            if (fire) {
                Separators sep = separators(space, gc->M, gc->N);
                PointSet lx = L.intersect(sep.X), ly = L.intersect(sep.Y);
                if (lx == L || ly == L)
                    throw InternalError("a split failed to shrink its set");
                int cx = static_cast<int>(tree.nodes.size());
                tree.nodes.push_back({lx, s + 1, 0, id, -1, -1, std::nullopt});
                int cy = static_cast<int>(tree.nodes.size());
                tree.nodes.push_back({ly, s + 1, 0, id, -1, -1, std::nullopt});
                tree.nodes[id].rule = 2;
                tree.nodes[id].child_x = cx;
                tree.nodes[id].child_y = cy;
                tree.nodes[id].choice = std::move(gc);
                next.push_back(cx);
                next.push_back(cy);
            } else {
                int c = static_cast<int>(tree.nodes.size());
                tree.nodes.push_back({L, s + 1, 0, id, -1, -1, std::nullopt});
                tree.nodes[id].rule = 3;
                tree.nodes[id].child_x = c;
                next.push_back(c);
            }
        }
        frontier = std::move(next);
    }
    return tree;
}

// ── Empirical convexity probe ───────────────────────────────────────────────

namespace {

// One convexity-defect evaluation: two fresh norm solves (g and the midpoint).
double defect(Solver& solver, double f_sq, const RealFunction& f, const RealFunction& g) {
    double g_sq = solver.norm(g).value_sq;
    double m_sq = solver.norm(midpoint(f, g)).value_sq;
    return 0.5 * f_sq + 0.5 * g_sq - m_sq;
}

struct RestartResult {
    double best = kInf;
    RealFunction g;
    long long evals = 0;
};

RestartResult probe_restart(Solver& solver, const RealFunction& f, double f_sq, double eps,
                            long long budget, std::uint64_t seed, int restart) {
    const int n = static_cast<int>(f.values.size());
    Rng rng(Rng::derive_seed(seed, static_cast<std::uint64_t>(restart)));
    const int anchor = restart % n;
    const double sign = (restart / n) % 2 == 0 ? 1.0 : -1.0;
    auto clamp_anchor = [&](double v) {
        // Keep the competitor at sup-distance at least eps from f.
        if (std::fabs(v - f.values[anchor]) < eps) return f.values[anchor] + sign * eps;
        return v;
    };

    RestartResult out;
    out.g = f;
    for (int t = 0; t < n; ++t) out.g.values[t] = f.values[t] + eps * (2.0 * rng.next_double() - 1.0);
    out.g.values[anchor] = f.values[anchor] + sign * eps * (1.0 + rng.next_double());
    out.best = defect(solver, f_sq, f, out.g);
    ++out.evals;

    double step = eps / 2.0;
    while (step >= eps / 1024.0 && out.evals < budget) {
        bool improved = false;
        for (int t = 0; t < n && out.evals < budget; ++t) {
            for (double dir : {+1.0, -1.0}) {
                if (out.evals >= budget) break;
                RealFunction cand = out.g;
                double v = cand.values[t] + dir * step;
                cand.values[t] = t == anchor ? clamp_anchor(v) : v;
                if (cand.values[t] == out.g.values[t]) continue;
                double d = defect(solver, f_sq, f, cand);
                ++out.evals;
                if (d < out.best) {
                    out.best = d;
                    out.g = cand;
                    improved = true;
                }
            }
        }
        if (!improved) step /= 2.0;
    }
    return out;
}

}  // namespace

ModulusReport lur_probe(Solver& solver, const RealFunction& f, double eps, long long budget,
                        std::uint64_t seed) {
    const TopSpace& space = solver.space();
    validate_function(space, f);
    check_eps(eps);
    if (budget < 1) throw ValidationError("the probe budget must be positive");

    // Solving for f up front also warms every per-level skeleton, so the
    // parallel restarts below only ever read shared state.
    NormResult base = solver.norm(f);

    ModulusReport rep;
    rep.eps = eps;
    rep.seed = seed;
    rep.f_norm = base.value;
    rep.restarts = static_cast<int>(std::clamp<long long>(budget / 64, 1, 16));
    rep.restart_best.assign(rep.restarts, kInf);
    const long long per = budget / rep.restarts;

    std::vector<RestartResult> results(rep.restarts);
    if (solver.params().parallel) {
#pragma omp parallel for schedule(dynamic, 1)
        for (int r = 0; r < rep.restarts; ++r)
            results[r] = probe_restart(solver, f, base.value_sq, eps, per, seed, r);
    } else {
        for (int r = 0; r < rep.restarts; ++r)
            results[r] = probe_restart(solver, f, base.value_sq, eps, per, seed, r);
    }

    int best = 0;
    for (int r = 0; r < rep.restarts; ++r) {
        rep.restart_best[r] = results[r].best;
        rep.evals += results[r].evals;
        if (results[r].best < results[best].best) best = r;
    }
    rep.delta_estimate = results[best].best;
    rep.witness = std::move(results[best].g);
    return rep;
}

double norm_lur_discrepancy(Solver& solver, const RealFunction& f, const RealFunction& g) {
    double f_sq = solver.norm(f).value_sq;
    return defect(solver, f_sq, f, g);
}

double omega_lur_discrepancy(Solver& solver, int level, const RealFunction& f,
                             const RealFunction& g, PointSet L) {
    SolveSession sf = solver.session(f, level);
    SolveSession sg = solver.session(g, level);
    SolveSession sm = solver.session(midpoint(f, g), level);
    return 0.5 * sf.omega_sq(L) + 0.5 * sg.omega_sq(L) - sm.omega_sq(L);
}

double psi_lur_discrepancy(Solver& solver, int level, const RealFunction& f,
                           const RealFunction& g, PointSet L,
                           const std::vector<PointSet>& M, const std::vector<PointSet>& N) {
    SolveSession sf = solver.session(f, level);
    SolveSession sg = solver.session(g, level);
    SolveSession sm = solver.session(midpoint(f, g), level);
    return 0.5 * sf.psi_sq(L, M, N) + 0.5 * sg.psi_sq(L, M, N) - sm.psi_sq(L, M, N);
}

}  // namespace cklur
