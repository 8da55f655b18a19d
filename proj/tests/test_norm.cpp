#include "doctest.h"

#include <cmath>

#include "cklur/errors.hpp"
#include "cklur/gen.hpp"
#include "cklur/norm.hpp"
#include "oracle.hpp"

using namespace cklur;

namespace {

struct Fixture {
    Instance inst;
    Fixture(std::vector<std::vector<PointSet>> fams, int n) {
        std::vector<std::string> names;
        std::vector<PointSet> nb;
        std::vector<std::vector<double>> d(n, std::vector<double>(n, 1.0));
        for (int i = 0; i < n; ++i) {
            names.push_back(std::string(1, static_cast<char>('a' + i)));
            nb.push_back(PointSet::single(i));
            d[i][i] = 0.0;
        }
        inst.space = std::make_unique<TopSpace>(TopSpace::make_finite(names, nb, d));
        std::vector<Family> fs;
        for (auto& m : fams) fs.push_back(make_explicit_family(*inst.space, std::move(m)));
        inst.coverings.push_back(std::make_unique<LevelCovering>(
            build_covering(*inst.space, 0, true, std::move(fs))));
    }
    const TopSpace& sp() const { return *inst.space; }
    const LevelCovering& cov() const { return *inst.coverings[0]; }
    Solver solver(NormParams pr = {}) const {
        Solver sv(sp(), pr);
        sv.add_covering(cov());
        return sv;
    }
};

Fixture one_point() { return Fixture({{PointSet::single(0)}}, 1); }
Fixture two_point() { return Fixture({{PointSet::single(0), PointSet::single(1)}}, 2); }
Fixture three_point() {
    return Fixture({{PointSet::single(0), PointSet::single(1)}, {PointSet::single(2)}}, 3);
}

RealFunction fn(std::vector<double> v) {
    RealFunction f;
    f.values = std::move(v);
    return f;
}

RealFunction scaled(const RealFunction& f, double c) {
    RealFunction g = f;
    for (double& v : g.values) v *= c;
    g.tail_value *= c;
    return g;
}

}  // namespace

TEST_CASE("sequence weights: dyadic rule, overrides, and validation") {
    CHECK(default_weight(IndexSeq::of({0})) == 0.5);
    CHECK(default_weight(IndexSeq::of({1})) == 0.25);
    CHECK(default_weight(IndexSeq::of({0, 1})) == 0.125);
    CHECK(default_weight(IndexSeq::of({2})) == 0.0625);
    CHECK(default_weight(IndexSeq::of({0, 1, 2})) == std::ldexp(1.0, -7));

    NormParams pr;
    CHECK(weight_of(pr, IndexSeq::of({0, 1})) == 0.125);
    pr.weight_override[{0}] = 0.3;
    CHECK(weight_of(pr, IndexSeq::of({0})) == 0.3);
    CHECK(weight_of(pr, IndexSeq::of({1})) == 0.0);  // outside the support
    pr.validate();

    NormParams bad;
    bad.l_max = 0;
    CHECK_THROWS_AS(bad.validate(), ValidationError);
    bad = NormParams{};
    bad.weight_override[{0}] = 0.6;
    bad.weight_override[{1}] = 0.6;
    CHECK_THROWS_AS(bad.validate(), ValidationError);  // mass above 1
    bad = NormParams{};
    bad.weight_override[{1, 0}] = 0.1;
    CHECK_THROWS_AS(bad.validate(), ValidationError);  // not increasing
}

TEST_CASE("phi gap: averaged positive part of the extreme spread") {
    Fixture fx = three_point();
    RealFunction f = fn({0.0, 0.5, 1.0});
    PointSet K = fx.sp().universe();
    auto S = [](std::vector<int> ids) {
        std::vector<PointSet> out;
        for (int i : ids) out.push_back(PointSet::single(i));
        return out;
    };
    CHECK(phi_gap(fx.sp(), f, K, S({0}), S({2})) == 0.5);
    CHECK(phi_gap(fx.sp(), f, K, S({2}), S({0})) == 0.0);  // negative spread clips
    CHECK(phi_gap(fx.sp(), f, K, S({0, 1}), S({2})) == 0.375);
    CHECK_THROWS_AS(phi_gap(fx.sp(), f, PointSet::single(0), S({1}), S({2})),
                    ValidationError);  // min side misses L
    CHECK_THROWS_AS(phi_gap(fx.sp(), f, K, {}, S({2})), ValidationError);
}

TEST_CASE("pair enumeration: caps, disjointness, and the L filter") {
    Fixture fx = three_point();
    Solver sv = fx.solver();
    auto skel = sv.skeleton_for(fx.cov());
    DerivedTable& table = skel->table();
    PointSet K = fx.sp().universe();
    IndexSeq s0 = IndexSeq::of({0}), s1 = IndexSeq::of({1});

    CHECK(enumerate_B(table, K, 1, 1, s0, s0).size() == 2);  // {a}|{b} and {b}|{a}
    CHECK(enumerate_B(table, K, 1, 1, s0, s1).size() == 2);  // {a}|{c} and {b}|{c}
    CHECK(enumerate_B(table, K, 2, 1, s0, s1).size() == 1);  // {a,b}|{c}
    CHECK(enumerate_B(table, K, 2, 2, s0, s1).empty());      // family 1 has one member
    CHECK(enumerate_B(table, {0b101, Tail::none}, 1, 1, s0, s1).size() == 1);
    CHECK(enumerate_B(table, K, 1, 1, s1, s1).empty());      // unions must be disjoint

    const std::vector<BPair> ps = enumerate_B(table, K, 1, 1, s0, s1);
    CHECK(ps[0].M[0] == PointSet::single(0));
    CHECK(ps[0].N[0] == PointSet::single(2));

    // Symbolic families with infinitely many members meeting L are refused.
    TopSpace seq = TopSpace::make_sequence(8, MetricRule::dyadic);
    std::vector<Family> fams;
    fams.push_back(make_symbolic_family(seq, seq.universe().minus(PointSet::single(8))));
    fams.push_back(make_explicit_family(seq, {PointSet::single(8)}));
    LevelCovering cov = build_covering(seq, 0, true, std::move(fams));
    DerivedTable st(cov);
    CHECK_THROWS_AS(enumerate_B(st, seq.universe(), 1, 1, s0, s1), UnsupportedError);
}

TEST_CASE("one-point space: the whole solve in closed form") {
    Fixture fx = one_point();
    NormParams pr;
    pr.l_max = 12;
    Solver sv = fx.solver(pr);
    RealFunction one = fn({1.0});

    SolveSession s = sv.session(one, 1);
    CHECK(s.sweeps() == 2);
    CHECK(s.residual_history()[0] == 1.0 / 6.0);
    CHECK(s.residual_history()[1] == 0.0);
    CHECK(s.omega_sq(fx.sp().universe()) == 1.0 / 6.0);
    CHECK(s.truncation_delta() == 0.0);
    CHECK(s.sup_norm() == 1.0);

    NormResult r = sv.norm(one);
    double expect = (0.5 - std::ldexp(1.0, -13)) / 6.0;
    CHECK(r.value_sq == doctest::Approx(expect).epsilon(1e-15));
    CHECK(r.lo_sq == r.value_sq);
    CHECK(r.hi_sq == doctest::Approx(expect + std::ldexp(1.0, -13)).epsilon(1e-15));
    CHECK(std::abs(r.value - 1.0 / std::sqrt(12.0)) <= r.error_bound);
    CHECK(r.error_bound <= 1e-3);
    REQUIRE(r.levels.size() == 12);
    CHECK(r.levels[0].omega_k == std::sqrt(1.0 / 6.0));
    CHECK(r.levels[0].delta == 0.0);

    NormResult z = sv.norm(fn({0.0}));
    CHECK(z.value == 0.0);
    CHECK(z.error_bound == 0.0);
}

TEST_CASE("solver value matches a dense reference implementation") {
    NormParams pr;
    GenOptions opt;
    opt.min_points = 2;
    opt.max_points = 5;
    opt.functions = 2;
    for (std::uint64_t seed : {11ull, 12ull, 13ull, 14ull}) {
        Instance inst = random_discrete_instance(seed, opt);
        Solver sv(inst.top(), pr);
        sv.add_covering(*inst.coverings[0]);
        refsolve::DenseOmega oracle(inst.top(), *inst.coverings[0], inst.functions[0].second, pr);
        NormResult r = sv.norm(inst.functions[0].second);
        CHECK(std::abs(r.value_sq - oracle.norm_sq(pr.l_max)) <= 1e-8);
        SolveSession s = sv.session(inst.functions[0].second, 1);
        CHECK(std::abs(s.omega_sq(inst.top().universe()) - oracle.omega_sq_universe()) <= 1e-8);
    }
}

TEST_CASE("weights outside the override support silence their pairs") {
    Fixture fx = two_point();
    RealFunction step = fn({0.0, 1.0});

    NormParams quiet;
    quiet.weight_override[{2}] = 0.5;  // the only present sequence (0) gets weight 0
    Solver sq = fx.solver(quiet);
    NormResult rq = sq.norm(step);
    double expect = (2.0 / 6.0) * (0.5 - std::ldexp(1.0, -(quiet.l_max + 1)));
    CHECK(rq.value_sq == doctest::Approx(expect).epsilon(1e-14));

    Solver sd = fx.solver();
    CHECK(sd.norm(step).value_sq > rq.value_sq);  // the pair {a}|{b} contributes
}

TEST_CASE("negation leaves every table bitwise unchanged") {
    Fixture fx = three_point();
    Solver sv = fx.solver();
    Rng rng(Rng::derive_seed(99, 1));
    for (int trial = 0; trial < 4; ++trial) {
        RealFunction f = random_function(rng, fx.sp(), -1.0, 1.0);
        RealFunction g = scaled(f, -1.0);
        NormResult rf = sv.norm(f), rg = sv.norm(g);
        CHECK(rf.value == rg.value);
        CHECK(rf.value_sq == rg.value_sq);
        CHECK(rf.error_bound == rg.error_bound);

        SolveSession a = sv.session(f, 1), b = sv.session(g, 1);
        REQUIRE(a.sweeps() == b.sweeps());
        for (int id = 0; id < a.skeleton().node_count(); ++id)
            CHECK(a.omega_sq_at(id) == b.omega_sq_at(id));

        PointSet K = fx.sp().universe();
        IndexSeq s0 = IndexSeq::of({0}), s1 = IndexSeq::of({1});
        CHECK(a.theta(K, s0, s1, 1, 1) == b.theta(K, s1, s0, 1, 1));
        CHECK(a.theta(K, s0, s0, 2, 1) == b.theta(K, s0, s0, 1, 2));
        CHECK(a.theta(K, s0, s1, 2, 1) == b.theta(K, s1, s0, 1, 2));
    }
}

TEST_CASE("theta decomposes over the regularization index") {
    Fixture fx = three_point();
    Solver sv = fx.solver();
    SolveSession s = sv.session(fn({0.0, 0.5, 1.0}), 1);
    PointSet K = fx.sp().universe();
    IndexSeq s0 = IndexSeq::of({0}), s1 = IndexSeq::of({1});

    double acc = 0.0;
    for (int p = 1; p <= sv.params().p_max; ++p) {
        double tp = s.theta_p(p, K, s0, s1, 1, 1);
        acc += std::ldexp(tp * tp, -p);
    }
    double th = s.theta(K, s0, s1, 1, 1);
    CHECK(th * th == doctest::Approx(acc).epsilon(1e-12));

    // Per-pair value at p: half of (gap squared plus damped split term).
    std::vector<PointSet> M = {PointSet::single(0)}, N = {PointSet::single(2)};
    double tpp = s.theta_p_pair(3, K, M, N);
    double ph = phi_gap(fx.sp(), s.function(), K, M, N);
    CHECK(tpp * tpp ==
          doctest::Approx(0.5 * (ph * ph + s.psi_sq(K, M, N) / 3.0)).epsilon(1e-12));
    CHECK_THROWS_AS(s.psi_sq(K, {PointSet{0b011, Tail::none}}, N), ValidationError);
}

TEST_CASE("homogeneity and convexity hold within the certified bounds") {
    Fixture fx = three_point();
    Solver sv = fx.solver();
    RealFunction f = fn({0.2, -0.7, 0.4});
    RealFunction g = fn({-0.5, 0.1, 0.9});
    NormResult rf = sv.norm(f), rg = sv.norm(g);

    for (double c : {2.0, -0.5, 3.0}) {
        NormResult rc = sv.norm(scaled(f, c));
        CHECK(std::abs(rc.value - std::abs(c) * rf.value) <=
              rc.error_bound + std::abs(c) * rf.error_bound + 1e-12);
    }

    RealFunction mid = f;
    for (std::size_t i = 0; i < mid.values.size(); ++i)
        mid.values[i] = 0.5 * (f.values[i] + g.values[i]);
    NormResult rm = sv.norm(mid);
    CHECK(rm.value <= 0.5 * rf.value + 0.5 * rg.value + rm.error_bound +
                          0.5 * rf.error_bound + 0.5 * rg.error_bound + 1e-12);
}

TEST_CASE("residual ratios contract at two thirds") {
    Fixture fx = three_point();
    Solver sv = fx.solver();
    SolveSession s = sv.session(fn({0.3, -0.9, 0.6}), 1);
    const auto& h = s.residual_history();
    REQUIRE(h.size() >= 2);
    for (std::size_t t = 1; t < h.size(); ++t) {
        if (h[t - 1] > 0.0)
            CHECK(h[t] / h[t - 1] <= 0.67);
        else
            CHECK(h[t] == 0.0);
    }
}

TEST_CASE("initialization does not matter beyond the contraction bound") {
    Fixture fx = three_point();
    Solver sv = fx.solver();
    RealFunction f = fn({0.1, 0.8, -0.4});
    SolveSession a = sv.session(f, 1, InitMode::zero);
    SolveSession b = sv.session(f, 1, InitMode::sup);
    double bound = 2.0 * (a.final_residual() + b.final_residual()) + 1e-15;
    for (int id = 0; id < a.skeleton().node_count(); ++id)
        CHECK(std::abs(a.omega_sq_at(id) - b.omega_sq_at(id)) <= bound);
    for (int sid = 0; sid < a.skeleton().slot_count(); ++sid)
        CHECK(std::abs(a.psi_sq_at(sid) - b.psi_sq_at(sid)) <= bound);
}

TEST_CASE("truncation accounting: dropped mass widens the certificate") {
    Fixture fx = three_point();
    RealFunction f = fn({0.0, 0.5, 1.0});

    NormParams full;
    Solver sf = fx.solver(full);
    auto skf = sf.skeleton_for(fx.cov());
    CHECK(!skf->truncation_dropped());
    CHECK(skf->mass_full() == skf->mass_kept());

    NormParams narrow;
    narrow.i_max = 1;  // the second family falls outside the index range
    Solver sn = fx.solver(narrow);
    auto skn = sn.skeleton_for(fx.cov());
    CHECK(skn->truncation_dropped());
    CHECK(skn->mass_kept() < skn->mass_full());
    SolveSession sess = sn.session(f, 1);
    CHECK(sess.truncation_delta() > 0.0);
    NormResult r = sn.norm(f);
    CHECK(r.lo_sq <= r.value_sq);
    CHECK(r.value_sq <= r.hi_sq);
    CHECK(std::abs(r.value - sf.norm(f).value) <= r.error_bound + sf.norm(f).error_bound);
}

TEST_CASE("solver construction and run guards") {
    NormParams pr;
    TopSpace seq = TopSpace::make_sequence(4, MetricRule::dyadic);
    CHECK_THROWS_AS(Solver(seq, pr), UnsupportedError);

    std::vector<PointSet> nb = {PointSet::single(0), {0b11, Tail::none}};
    TopSpace sk = TopSpace::make_finite({"x", "y"}, nb, {{0, 1}, {1, 0}});
    CHECK_THROWS_AS(Solver(sk, pr), UnsupportedError);

    Fixture fx = three_point();
    NormParams capped;
    capped.max_sweeps = 1;
    Solver sv = fx.solver(capped);
    CHECK_THROWS_AS(sv.session(fn({0.3, -0.9, 0.6}), 1), InternalError);

    Solver ok = fx.solver();
    CHECK_THROWS_AS(ok.covering_for_level(0), ValidationError);
    CHECK(&ok.covering_for_level(7) == &fx.cov());  // valid at every level
}
