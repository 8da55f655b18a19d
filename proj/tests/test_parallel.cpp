#include "doctest.h"

#include "cklur/analysis.hpp"
#include "cklur/gen.hpp"
#include "cklur/norm.hpp"

using namespace cklur;

TEST_CASE("parallel sweeps are bit-identical to the serial reference") {
    GenOptions opt;
    opt.min_points = 3;
    opt.max_points = 6;
    opt.functions = 2;
    for (std::uint64_t seed : {101ull, 102ull, 103ull}) {
        Instance inst = random_discrete_instance(seed, opt);
        NormParams serial, parallel;
        serial.parallel = false;
        parallel.parallel = true;
        Solver ss(inst.top(), serial), sp(inst.top(), parallel);
        ss.add_covering(*inst.coverings[0]);
        sp.add_covering(*inst.coverings[0]);

        for (const auto& [name, f] : inst.functions) {
            NormResult a = ss.norm(f), b = sp.norm(f);
            CHECK(a.value == b.value);
            CHECK(a.value_sq == b.value_sq);
            CHECK(a.lo_sq == b.lo_sq);
            CHECK(a.hi_sq == b.hi_sq);
            CHECK(a.error_bound == b.error_bound);
            REQUIRE(a.levels.size() == b.levels.size());
            for (std::size_t l = 0; l < a.levels.size(); ++l) {
                CHECK(a.levels[l].omega_k == b.levels[l].omega_k);
                CHECK(a.levels[l].sweeps == b.levels[l].sweeps);
                CHECK(a.levels[l].residual == b.levels[l].residual);
            }

            SolveSession xa = ss.session(f, 1), xb = sp.session(f, 1);
            REQUIRE(xa.sweeps() == xb.sweeps());
            CHECK(xa.residual_history() == xb.residual_history());
            for (int id = 0; id < xa.skeleton().node_count(); ++id)
                CHECK(xa.omega_sq_at(id) == xb.omega_sq_at(id));
            for (int sid = 0; sid < xa.skeleton().slot_count(); ++sid) {
                CHECK(xa.psi_sq_at(sid) == xb.psi_sq_at(sid));
                CHECK(xa.phi_at(sid) == xb.phi_at(sid));
            }
        }
    }
}

TEST_CASE("parallel probe restarts match the serial result bit for bit") {
    GenOptions opt;
    opt.min_points = 2;
    opt.max_points = 4;
    opt.functions = 1;
    Instance inst = random_discrete_instance(7, opt);
    NormParams serial, parallel;
    serial.parallel = false;
    parallel.parallel = true;
    Solver ss(inst.top(), serial), sp(inst.top(), parallel);
    ss.add_covering(*inst.coverings[0]);
    sp.add_covering(*inst.coverings[0]);

    const RealFunction& f = inst.functions[0].second;
    ModulusReport a = lur_probe(ss, f, 0.4, 400, 9);
    ModulusReport b = lur_probe(sp, f, 0.4, 400, 9);
    CHECK(a.delta_estimate == b.delta_estimate);
    CHECK(a.evals == b.evals);
    CHECK(a.restarts == b.restarts);
    CHECK(a.restart_best == b.restart_best);
    CHECK(a.witness.values == b.witness.values);
    CHECK(a.witness.tail_value == b.witness.tail_value);
}
