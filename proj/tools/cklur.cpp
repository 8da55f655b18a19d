#include <algorithm>
#include <cstdio>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "cklur/analysis.hpp"
#include "cklur/errors.hpp"
#include "cklur/families.hpp"
#include "cklur/instance.hpp"
#include "cklur/lemmas.hpp"
#include "cklur/norm.hpp"
#include "cklur/report.hpp"
#include "cklur/space.hpp"

using namespace cklur;

namespace {

// ── Shared options ──────────────────────────────────────────────────────────

struct Common {
    std::string path;
    std::string fname;
    bool machine = false;
    bool serial = false;
    int covering = -1;  // -1: all (where iterating) or the solver default
    std::vector<std::string> weight_specs;
    NormParams params;
};

void add_common(CLI::App* cmd, Common& c, bool with_func) {
    cmd->add_option("instance", c.path, "instance file")->required();
    cmd->add_flag("--machine", c.machine, "emit line-oriented key=value output");
    if (with_func) cmd->add_option("--f", c.fname, "function name from the instance");
    cmd->add_option("--lmax", c.params.l_max, "metric levels entering the norm");
    cmd->add_option("--imax", c.params.i_max, "index range for sequence truncation");
    cmd->add_option("--mnmax", c.params.mn_max, "member-count cap in the pair sums");
    cmd->add_option("--pmax", c.params.p_max, "dyadic regularization depth");
    cmd->add_option("--fptol", c.params.fp_tol, "fixed-point residual target");
    cmd->add_option("--stricttol", c.params.strict_tol, "strict-inequality margin");
    cmd->add_option("--seed", c.params.seed, "deterministic seed");
    cmd->add_option("--sweeps", c.params.max_sweeps, "sweep limit per solve");
    cmd->add_flag("--serial", c.serial, "disable the parallel sweep");
    cmd->add_option("--weight", c.weight_specs,
                    "override one sequence weight, e.g. --weight 0,1=0.25 (repeatable; "
                    "sequences not mentioned get weight zero)");
}

std::vector<int> parse_int_list(const std::string& s) {
    std::vector<int> out;
    std::istringstream is(s);
    std::string tok;
    while (std::getline(is, tok, ',')) {
        try {
            std::size_t used = 0;
            out.push_back(std::stoi(tok, &used));
            if (used != tok.size()) throw std::invalid_argument(tok);
        } catch (...) {
            throw ValidationError("bad index list '" + s + "'");
        }
    }
    if (out.empty()) throw ValidationError("empty index list '" + s + "'");
    return out;
}

void finish_params(Common& c) {
    c.params.parallel = !c.serial;
    for (const std::string& spec : c.weight_specs) {
        std::size_t eq = spec.find('=');
        if (eq == std::string::npos)
            throw ValidationError("bad weight override '" + spec + "' (expected SEQ=VALUE)");
        std::vector<int> seq = parse_int_list(spec.substr(0, eq));
        double w = 0;
        try {
            w = std::stod(spec.substr(eq + 1));
        } catch (...) {
            throw ValidationError("bad weight value in '" + spec + "'");
        }
        c.params.weight_override[seq] = w;
    }
    c.params.validate();
}

const RealFunction& pick_function(const Instance& inst, const std::string& fname) {
    if (!fname.empty()) return inst.function(fname);
    if (inst.functions.empty())
        throw ValidationError("instance '" + inst.name + "' declares no functions");
    return inst.functions.front().second;
}

std::string picked_name(const Instance& inst, const std::string& fname) {
    if (!fname.empty()) return fname;
    if (inst.functions.empty()) return "";
    return inst.functions.front().first;
}

const LevelCovering& pick_covering(const Instance& inst, int idx) {
    if (inst.coverings.empty())
        throw ValidationError("instance '" + inst.name + "' declares no coverings");
    int use = idx < 0 ? 0 : idx;
    if (use >= static_cast<int>(inst.coverings.size()))
        throw ValidationError("covering index " + std::to_string(use) + " out of range (have " +
                              std::to_string(inst.coverings.size()) + ")");
    return *inst.coverings[use];
}

Solver make_solver(const Instance& inst, const NormParams& params) {
    Solver solver(inst.top(), params);
    for (const auto& cov : inst.coverings) solver.add_covering(*cov);
    return solver;
}

std::string setlist(const TopSpace& sp, const std::vector<PointSet>& v) {
    std::string out = "{";
    for (std::size_t k = 0; k < v.size(); ++k) {
        if (k) out += ",";
        out += sp.set_to_string(v[k]);
    }
    return out + "}";
}

std::string family_str(const TopSpace& sp, const Family& fam) {
    if (fam.symbolic) return "singletons " + sp.set_to_string(fam.domain);
    return setlist(sp, fam.members);
}

// ── validate ────────────────────────────────────────────────────────────────

struct Checker {
    bool machine;
    Report rep;
    bool ok = true;

    void item(const std::string& slug, bool pass, const std::string& witness = "") {
        ok = ok && pass;
        if (machine) {
            rep.add("check." + slug, pass ? "pass" : "fail");
            if (!pass && !witness.empty()) rep.add("witness." + slug, witness);
        } else if (pass) {
            std::cout << "  ok   " << slug << "\n";
        } else {
            std::cout << "  FAIL " << slug << (witness.empty() ? "" : ": " + witness) << "\n";
        }
    }
};

int cmd_validate(const Common& c) {
    Checker ck{c.machine, {}, true};
    std::optional<Instance> inst;
    try {
        inst = parse_instance_file(c.path);
    } catch (const ValidationError& e) {
        ck.item("parse", false, e.what());
        if (c.machine) {
            ck.rep.add("ok", false);
            std::cout << ck.rep.str();
        } else {
            std::cout << "invalid\n";
        }
        return 1;
    }
    const TopSpace& sp = inst->top();
    const int n = sp.explicit_points();
    if (c.machine) {
        ck.rep.add("instance", inst->name);
        ck.rep.add("kind", sp.kind() == SpaceKind::finite ? "finite" : "sequence");
        ck.rep.add("points", n);
        ck.rep.add("functions", static_cast<int>(inst->functions.size()));
        ck.rep.add("coverings", static_cast<int>(inst->coverings.size()));
    } else {
        std::cout << inst->name << ": " << (sp.kind() == SpaceKind::finite ? "finite" : "sequence")
                  << " space, " << n << " explicit points, " << inst->functions.size()
                  << " functions, " << inst->coverings.size() << " coverings\n";
    }
    ck.item("parse", true);

    {
        bool pass = true;
        std::string w;
        for (int t = 0; t < n && pass; ++t) {
            PointSet v = sp.min_nbhd(t);
            if (!v.contains(t) || !sp.is_open(v)) {
                pass = false;
                w = "minimal neighborhood of " + sp.point_name(t) + " is not an open set around it";
                break;
            }
            for (int u = 0; u < n; ++u)
                if (v.contains(u) && !sp.min_nbhd(u).subset_of(v)) {
                    pass = false;
                    w = "neighborhood of " + sp.point_name(u) + " escapes the one of " +
                        sp.point_name(t);
                    break;
                }
        }
        ck.item("neighborhood-base", pass, w);
    }
    {
        bool sym = true, sep = true, tri = true;
        std::string ws, wp, wt;
        for (int a = 0; a < n; ++a) {
            if (sp.dist(a, a) != 0.0 && sep) {
                sep = false;
                wp = "d(" + sp.point_name(a) + "," + sp.point_name(a) + ") is not zero";
            }
            for (int b = 0; b < n; ++b) {
                if (sp.dist(a, b) != sp.dist(b, a) && sym) {
                    sym = false;
                    ws = "metric symmetry (" + sp.point_name(a) + "," + sp.point_name(b) + ")";
                }
                if (a != b && sp.dist(a, b) <= 0.0 && sep) {
                    sep = false;
                    wp = "d(" + sp.point_name(a) + "," + sp.point_name(b) + ") is not positive";
                }
                for (int d = 0; d < n && tri; ++d)
                    if (sp.dist(a, d) > sp.dist(a, b) + sp.dist(b, d) + 1e-12) {
                        tri = false;
                        wt = "triangle (" + sp.point_name(a) + "," + sp.point_name(b) + "," +
                             sp.point_name(d) + ")";
                    }
            }
        }
        ck.item("metric-symmetry", sym, ws);
        ck.item("metric-separation", sep, wp);
        ck.item("metric-triangle", tri, wt);
    }
    for (const auto& [fname, f] : inst->functions) {
        bool pass = true;
        std::string w;
        try {
            validate_function(sp, f);
        } catch (const ValidationError& e) {
            pass = false;
            w = e.what();
        }
        ck.item("function-" + fname, pass, w);
    }
    for (std::size_t k = 0; k < inst->coverings.size(); ++k) {
        const LevelCovering& cov = *inst->coverings[k];
        std::string pre = "covering-" + std::to_string(k) + "-";
        {
            bool pass = true;
            std::string w;
            for (int i = 0; i < cov.family_count() && pass; ++i) {
                IsolationReport rep = check_isolated(sp, cov.family(i));
                if (!rep.isolated) {
                    pass = false;
                    w = "family " + std::to_string(i) + " member " +
                        std::to_string(rep.member_index) + " meets " + sp.set_to_string(rep.witness);
                }
            }
            ck.item(pre + "isolated", pass, w);
        }
        {
            bool pass = true;
            std::string w;
            for (int i = 0; i < cov.family_count() && pass; ++i) {
                const Family& fam = cov.family(i);
                Family reg = regularize(sp, fam);
                bool same = fam.symbolic == reg.symbolic;
                if (same && !fam.symbolic) {
                    same = fam.members.size() == reg.members.size();
                    for (std::size_t q = 0; same && q < fam.members.size(); ++q)
                        same = fam.members[q] == reg.members[q];
                } else if (same) {
                    same = fam.domain == reg.domain;
                }
                if (!same) {
                    pass = false;
                    w = "family " + std::to_string(i) + " is not regular";
                }
            }
            ck.item(pre + "regular", pass, w);
        }
        {
            bool pass = true;
            std::string w;
            double bound = cov.all_levels() ? 0.0 : std::ldexp(1.0, -cov.level());
            for (int i = 0; i < cov.family_count() && pass; ++i) {
                if (cov.family(i).symbolic) continue;  // singleton witnesses have diameter 0
                const std::vector<PointSet>& ws = cov.witnesses(i);
                for (std::size_t q = 0; q < ws.size(); ++q)
                    if (sp.diameter(ws[q]) > bound) {
                        pass = false;
                        w = "witness " + sp.set_to_string(ws[q]) + " exceeds the level bound";
                        break;
                    }
            }
            ck.item(pre + "witness-diameters", pass, w);
        }
        {
            PointSet covered;
            for (int i = 0; i < cov.family_count(); ++i)
                covered = covered.unite(cov.family(i).union_all());
            bool pass = covered == sp.universe();
            std::string w;
            if (!pass) w = "uncovered: " + sp.set_to_string(sp.universe().minus(covered));
            ck.item(pre + "covers", pass, w);
        }
    }
    if (c.machine) {
        ck.rep.add("ok", ck.ok);
        std::cout << ck.rep.str();
    } else {
        std::cout << (ck.ok ? "valid" : "invalid") << "\n";
    }
    return ck.ok ? 0 : 1;
}

// ── derive ──────────────────────────────────────────────────────────────────

int cmd_derive(const Common& c, const std::string& seq_str) {
    Instance inst = parse_instance_file(c.path);
    DerivedTable table(pick_covering(inst, c.covering));
    const TopSpace& sp = inst.top();
    IndexSeq seq = IndexSeq::of(parse_int_list(seq_str));
    const DerivedEntry& e = table.derive(seq);
    Report rep;
    rep.add("seq", seq.to_string());
    rep.add("family", family_str(sp, e.fam));
    rep.add("I", sp.set_to_string(e.I));
    rep.add("J", sp.set_to_string(e.J));
    rep.add("closure_I", sp.set_to_string(table.closure_of_I(seq)));
    rep.add("union_closures_before", sp.set_to_string(union_closures_before(table, seq)));
    if (c.machine) {
        std::cout << rep.str();
    } else {
        std::cout << "derived family at " << seq.to_string() << ": " << family_str(sp, e.fam)
                  << "\n  union I = " << sp.set_to_string(e.I)
                  << "\n  boundary J = " << sp.set_to_string(e.J)
                  << "\n  closure of I = " << sp.set_to_string(table.closure_of_I(seq))
                  << "\n  union of earlier closures = "
                  << sp.set_to_string(union_closures_before(table, seq)) << "\n";
    }
    return 0;
}

// ── norm ────────────────────────────────────────────────────────────────────

void add_norm_lines(Report& rep, const NormResult& res) {
    rep.add("value", res.value);
    rep.add("error_bound", res.error_bound);
    rep.add("value_sq", res.value_sq);
    rep.add("lo_sq", res.lo_sq);
    rep.add("hi_sq", res.hi_sq);
    for (const LevelReport& lr : res.levels) {
        std::string pre = "level." + std::to_string(lr.level) + ".";
        rep.add(pre + "omega_K", lr.omega_k);
        rep.add(pre + "residual", lr.residual);
        rep.add(pre + "sweeps", lr.sweeps);
        rep.add(pre + "truncation_delta", lr.delta);
    }
}

int cmd_norm(const Common& c) {
    Instance inst = parse_instance_file(c.path);
    const RealFunction& f = pick_function(inst, c.fname);
    Solver solver = make_solver(inst, c.params);
    NormResult res = solver.norm(f);
    Report rep;
    rep.add("f", picked_name(inst, c.fname));
    rep.add("sup_norm", sup_abs_over(inst.top(), f, inst.top().universe()));
    add_norm_lines(rep, res);
    if (c.machine) {
        std::cout << rep.str();
    } else {
        std::cout << "norm(" << picked_name(inst, c.fname) << ") = " << format_g17(res.value)
                  << "  (certified within " << format_g17(res.error_bound) << ")\n";
        for (const LevelReport& lr : res.levels)
            std::cout << "  level " << lr.level << ": omega_K = " << format_g17(lr.omega_k)
                      << ", residual " << format_g17(lr.residual) << " after " << lr.sweeps
                      << " sweeps\n";
    }
    return 0;
}

// ── tables ──────────────────────────────────────────────────────────────────

int cmd_tables(const Common& c) {
    Instance inst = parse_instance_file(c.path);
    const TopSpace& sp = inst.top();
    Report rep;
    rep.add("instance", inst.name);
    for (std::size_t ci = 0; ci < inst.coverings.size(); ++ci) {
        if (c.covering >= 0 && static_cast<int>(ci) != c.covering) continue;
        DerivedTable table(*inst.coverings[ci]);
        std::string pre = "covering." + std::to_string(ci) + ".";
        rep.add(pre + "families", table.family_count());
        int cap = std::min(table.family_count(), c.params.i_max);
        for (const IndexSeq& s : table.sigma_sorted(cap)) {
            const DerivedEntry& e = table.derive(s);
            std::string sp2 = pre + "derived." + s.to_string() + ".";
            rep.add(sp2 + "family", family_str(sp, e.fam));
            rep.add(sp2 + "I", sp.set_to_string(e.I));
            rep.add(sp2 + "J", sp.set_to_string(e.J));
        }
    }
    if (!c.fname.empty()) {
        const RealFunction& f = pick_function(inst, c.fname);
        Solver solver = make_solver(inst, c.params);
        rep.add("f", c.fname);
        for (int level = 1; level <= c.params.l_max; ++level) {
            SolveSession ses = solver.session(f, level);
            const Skeleton& sk = ses.skeleton();
            std::string pre = "level." + std::to_string(level) + ".";
            rep.add(pre + "omega.K", ses.omega(sp.universe()));
            rep.add(pre + "sweeps", ses.sweeps());
            rep.add(pre + "residual", ses.final_residual());
            for (int id = 0; id < sk.node_count(); ++id) {
                std::string np = pre + "node." + std::to_string(id) + ".";
                rep.add(np + "set", sp.set_to_string(PointSet{sk.node(id).mask, Tail::none}));
                rep.add(np + "omega_sq", ses.omega_sq_at(id));
            }
            for (int sid = 0; sid < sk.slot_count(); ++sid) {
                const PairSlot& sl = sk.slot(sid);
                std::string lp = pre + "slot." + std::to_string(sid) + ".";
                rep.add(lp + "M", setlist(sp, sl.M));
                rep.add(lp + "N", setlist(sp, sl.N));
                rep.add(lp + "phi", ses.phi_at(sid));
                rep.add(lp + "psi_sq", ses.psi_sq_at(sid));
            }
        }
        NormResult res = solver.norm(f);
        add_norm_lines(rep, res);
    }
    std::cout << rep.str();
    return 0;
}

// ── decompose ───────────────────────────────────────────────────────────────

int cmd_decompose(const Common& c, double eps) {
    Instance inst = parse_instance_file(c.path);
    const TopSpace& sp = inst.top();
    const RealFunction& f = pick_function(inst, c.fname);
    DerivedTable table(pick_covering(inst, c.covering));
    DecompositionTree tree = build_decomposition(table, f, eps, c.params);
    Report rep;
    rep.add("f", picked_name(inst, c.fname));
    rep.add("eps", eps);
    rep.add("cycle_length", tree.cycle_length);
    rep.add("nodes", static_cast<int>(tree.nodes.size()));
    rep.add("leaves", static_cast<int>(tree.leaves.size()));
    rep.add("max_depth", tree.max_depth);
    double max_osc = 0;
    for (int id : tree.leaves)
        max_osc = std::max(max_osc, osc_over(sp, f, tree.nodes[id].L));
    rep.add("max_leaf_osc", max_osc);
    const char* rules[] = {"", "leaf", "split", "pass"};
    for (std::size_t id = 0; id < tree.nodes.size(); ++id) {
        const DecompNode& nd = tree.nodes[id];
        std::string pre = "node." + std::to_string(id) + ".";
        rep.add(pre + "set", sp.set_to_string(nd.L));
        rep.add(pre + "s", nd.s);
        rep.add(pre + "rule", rules[nd.rule]);
        if (nd.rule == 2) {
            rep.add(pre + "i", nd.choice->i.to_string());
            rep.add(pre + "j", nd.choice->j.to_string());
            rep.add(pre + "M", setlist(sp, nd.choice->M));
            rep.add(pre + "N", setlist(sp, nd.choice->N));
            rep.add(pre + "children",
                    std::to_string(nd.child_x) + "," + std::to_string(nd.child_y));
        } else if (nd.rule == 3) {
            rep.add(pre + "child", nd.child_x);
        }
    }
    if (c.machine) {
        std::cout << rep.str();
        return 0;
    }
    std::cout << "splitting tree for eps = " << format_g17(eps) << ": " << tree.nodes.size()
              << " nodes, " << tree.leaves.size() << " leaves, depth " << tree.max_depth
              << ", cycle length " << tree.cycle_length << "\n";
    std::vector<int> depth(tree.nodes.size(), 0);
    for (std::size_t id = 0; id < tree.nodes.size(); ++id) {
        const DecompNode& nd = tree.nodes[id];
        if (nd.parent >= 0) depth[id] = depth[nd.parent] + 1;
        if (nd.rule == 3) continue;  // silent pass chain
        std::cout << std::string(2 * static_cast<std::size_t>(depth[id] > 0), ' ')
                  << (nd.rule == 1 ? "leaf  " : "split ") << sp.set_to_string(nd.L);
        if (nd.rule == 2)
            std::cout << "  via (" << nd.choice->M.size() << "," << nd.choice->N.size() << ","
                      << nd.choice->i.to_string() << "," << nd.choice->j.to_string() << ")";
        std::cout << "\n";
    }
    std::cout << "max leaf oscillation " << format_g17(max_osc) << "\n";
    return 0;
}

// ── probe ───────────────────────────────────────────────────────────────────

int cmd_probe(const Common& c, double eps, long long budget, std::uint64_t seed) {
    Instance inst = parse_instance_file(c.path);
    const TopSpace& sp = inst.top();
    const RealFunction& f = pick_function(inst, c.fname);
    Solver solver = make_solver(inst, c.params);
    ModulusReport mr = lur_probe(solver, f, eps, budget, seed);
    double gap = 0;
    for (int t = 0; t < sp.explicit_points(); ++t)
        gap = std::max(gap, std::fabs(value_at(sp, f, t) - value_at(sp, mr.witness, t)));
    Report rep;
    rep.add("f", picked_name(inst, c.fname));
    rep.add("eps", mr.eps);
    rep.add("budget", budget);
    rep.add("seed", static_cast<long long>(mr.seed));
    rep.add("restarts", mr.restarts);
    rep.add("evals", mr.evals);
    rep.add("f_norm", mr.f_norm);
    rep.add("delta_estimate", mr.delta_estimate);
    rep.add("witness_distance", gap);
    for (std::size_t r = 0; r < mr.restart_best.size(); ++r)
        rep.add("restart." + std::to_string(r) + ".best", mr.restart_best[r]);
    for (int t = 0; t < sp.explicit_points(); ++t)
        rep.add("witness." + sp.point_name(t), value_at(sp, mr.witness, t));
    if (c.machine) {
        std::cout << rep.str();
    } else {
        std::cout << "convexity evidence at eps = " << format_g17(eps) << ": delta_estimate = "
                  << format_g17(mr.delta_estimate) << " (smallest defect over " << mr.evals
                  << " evaluations, " << mr.restarts << " restarts)\n"
                  << "worst witness at sup distance " << format_g17(gap) << " from f\n"
                  << "evidence only: a probe bounds the modulus from above, never below\n";
    }
    return 0;
}

// ── lemma-check ─────────────────────────────────────────────────────────────

int cmd_lemma_check(const Common& c, int suite, double eps) {
    Instance inst = parse_instance_file(c.path);
    std::vector<CheckResult> rs = run_suite(inst, suite, eps, c.params);
    bool ok = all_pass(rs);
    if (c.machine) {
        Report rep;
        rep.add("suite", suite);
        rep.add("eps", eps);
        rep.add("checks", static_cast<int>(rs.size()));
        for (const CheckResult& r : rs) {
            rep.add("check." + r.name, r.skipped ? "skip" : (r.pass ? "pass" : "fail"));
            if (!r.note.empty()) rep.add("note." + r.name, r.note);
        }
        rep.add("ok", ok);
        std::cout << rep.str();
    } else {
        int passed = 0, skipped = 0;
        for (const CheckResult& r : rs) {
            if (r.skipped) {
                ++skipped;
                std::cout << "  skip " << r.name << (r.note.empty() ? "" : ": " + r.note) << "\n";
            } else if (r.pass) {
                ++passed;
                std::cout << "  ok   " << r.name << "\n";
            } else {
                std::cout << "  FAIL " << r.name << (r.note.empty() ? "" : ": " + r.note) << "\n";
            }
        }
        std::cout << "suite " << suite << ": " << passed << " passed, " << skipped
                  << " skipped, " << (rs.size() - passed - skipped) << " failed\n";
    }
    return ok ? 0 : 3;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"analysis and norm computations for finitely presented compact spaces"};
    app.require_subcommand(1);

    Common c;
    std::string seq_str = "0";
    double eps = 0.5;
    long long budget = 10000;
    std::uint64_t probe_seed = 1;
    int suite = 3;

    CLI::App* validate = app.add_subcommand("validate", "check space, metric, function and "
                                                        "covering axioms with witnesses");
    add_common(validate, c, false);

    CLI::App* derive = app.add_subcommand("derive", "derived family, union and boundary at one "
                                                    "index sequence");
    add_common(derive, c, false);
    derive->add_option("--seq", seq_str, "index sequence, e.g. 0,1")->required();
    derive->add_option("--covering", c.covering, "covering index (default 0)");

    CLI::App* norm = app.add_subcommand("norm", "solve the fixed-point tables and report the "
                                                "norm with its certified bound");
    add_common(norm, c, true);

    CLI::App* tables = app.add_subcommand("tables", "dump derived-family tables and, with --f, "
                                                    "the solve tables per level");
    add_common(tables, c, true);
    tables->add_option("--covering", c.covering, "restrict the derived dump to one covering");

    CLI::App* decompose = app.add_subcommand("decompose", "build the splitting tree for (f, eps)");
    add_common(decompose, c, true);
    decompose->add_option("--eps", eps, "oscillation target")->required();
    decompose->add_option("--covering", c.covering, "covering index (default 0)");

    CLI::App* probe = app.add_subcommand("probe", "search for the smallest convexity defect at "
                                                  "sup distance eps (evidence, not proof)");
    add_common(probe, c, true);
    probe->add_option("--eps", eps, "sup-norm distance kept from f")->required();
    probe->add_option("--budget", budget, "defect evaluations to spend");
    probe->add_option("--probe-seed", probe_seed, "seed for the restart streams");

    CLI::App* lemma = app.add_subcommand("lemma-check", "run one property suite over the "
                                                        "instance");
    add_common(lemma, c, false);
    lemma->add_option("--suite", suite, "suite id: 3, 5, 6 or 7")->required();
    lemma->add_option("--eps", eps, "oscillation threshold for suites 5 and 7");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    }

    try {
        finish_params(c);
        if (validate->parsed()) return cmd_validate(c);
        if (derive->parsed()) return cmd_derive(c, seq_str);
        if (norm->parsed()) return cmd_norm(c);
        if (tables->parsed()) return cmd_tables(c);
        if (decompose->parsed()) return cmd_decompose(c, eps);
        if (probe->parsed()) return cmd_probe(c, eps, budget, probe_seed);
        if (lemma->parsed()) return cmd_lemma_check(c, suite, eps);
    } catch (const UnsupportedError& e) {
        std::cerr << "unsupported kind: " << e.what() << "\n";
        return 2;
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const InternalError& e) {
        std::cerr << "internal: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
