// Times the parallel sweep against the serial reference on generated
// instances and checks that both paths produce bit-identical tables.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdint>
#include <string>

#include "CLI11.hpp"
#include "cklur/errors.hpp"
#include "cklur/gen.hpp"
#include "cklur/instance.hpp"
#include "cklur/norm.hpp"

using namespace cklur;

namespace {

double time_norm(Solver& solver, const RealFunction& f, int reps, NormResult* out) {
    double best = 1e300;
    for (int r = 0; r < reps; ++r) {
        auto t0 = std::chrono::steady_clock::now();
        *out = solver.norm(f);
        auto t1 = std::chrono::steady_clock::now();
        best = std::min(best, std::chrono::duration<double, std::milli>(t1 - t0).count());
    }
    return best;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"serial-vs-parallel sweep benchmark with bitwise equality check"};
    int points = 8, instances = 3, reps = 3, l_max = 4;
    std::uint64_t seed = 1;
    app.add_option("--points", points, "points per generated space (2..16)");
    app.add_option("--instances", instances, "number of generated instances");
    app.add_option("--reps", reps, "timing repetitions (best of)");
    app.add_option("--lmax", l_max, "metric levels in the norm");
    app.add_option("--seed", seed, "generator seed");
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) ? 1 : 0;
    }

    GenOptions opt;
    opt.min_points = opt.max_points = points;
    opt.functions = 2;

    std::printf("%-10s %-4s %12s %12s %9s  %s\n", "instance", "f", "serial(ms)", "parallel(ms)",
                "speedup", "equal");
    bool all_equal = true;
    double tot_s = 0, tot_p = 0;
    try {
        for (int k = 0; k < instances; ++k) {
            Instance inst = random_discrete_instance(seed + static_cast<std::uint64_t>(k), opt);
            NormParams ps;
            ps.l_max = l_max;
            ps.parallel = false;
            NormParams pp = ps;
            pp.parallel = true;
            Solver serial(inst.top(), ps), parallel(inst.top(), pp);
            for (const auto& cov : inst.coverings) {
                serial.add_covering(*cov);
                parallel.add_covering(*cov);
            }
            for (const auto& [fname, f] : inst.functions) {
                NormResult rs, rp;
                double ts = time_norm(serial, f, reps, &rs);
                double tp = time_norm(parallel, f, reps, &rp);
                tot_s += ts;
                tot_p += tp;
                bool eq = rs.value_sq == rp.value_sq && rs.lo_sq == rp.lo_sq &&
                          rs.hi_sq == rp.hi_sq;
                for (std::size_t l = 0; eq && l < rs.levels.size(); ++l)
                    eq = rs.levels[l].omega_k == rp.levels[l].omega_k &&
                         rs.levels[l].sweeps == rp.levels[l].sweeps;
                all_equal = all_equal && eq;
                std::printf("%-10s %-4s %12.3f %12.3f %8.2fx  %s\n", inst.name.c_str(),
                            fname.c_str(), ts, tp, ts / tp, eq ? "yes" : "NO");
            }
        }
    } catch (const Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return static_cast<int>(e.code());
    }
    std::printf("total best-of times: serial %.3f ms, parallel %.3f ms (%.2fx)\n", tot_s, tot_p,
                tot_s / tot_p);
    if (!all_equal) {
        std::fprintf(stderr, "internal: parallel sweep diverged from the serial reference\n");
        return 3;
    }
    return 0;
}
