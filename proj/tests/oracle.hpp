#pragma once

// Independent dense reference for the norm tables on small finite discrete
// spaces: a full 2^n table iterated straight from the defining relations,
// with pair candidates re-enumerated from the covering on every evaluation.
// No skeleton graph, no slot sharing, no grouped sums — deliberately a
// different implementation shape from src/norm.cpp.

#include <cmath>
#include <cstdint>
#include <functional>
#include <vector>

#include "cklur/families.hpp"
#include "cklur/norm.hpp"
#include "cklur/space.hpp"

namespace refsolve {

using namespace cklur;

class DenseOmega {
public:
    DenseOmega(const TopSpace& sp, const LevelCovering& cov, const RealFunction& f,
               const NormParams& pr)
        : sp_(sp), f_(f), pr_(pr), n_(sp.explicit_points()) {
        int k = std::min(cov.family_count(), pr.i_max);
        for (int i = 0; i < k; ++i) {
            const Family& fam = cov.family(i);
            std::vector<std::uint64_t> ms;
            for (const PointSet& m : fam.members) ms.push_back(m.bits);
            fams_.push_back(std::move(ms));
            weight_.push_back(weight_of(pr, IndexSeq::of({i})));
        }
        solve();
    }

    double omega_sq(std::uint64_t mask) const { return table_[mask]; }
    double omega_sq_universe() const { return table_.back(); }

    // Sum over the levels, all served by the same covering.
    double norm_sq(int l_max) const {
        double acc = 0.0;
        for (int l = 1; l <= l_max; ++l) acc += std::ldexp(omega_sq_universe(), -(l + 1));
        return acc;
    }

private:
    double fmax(std::uint64_t mask) const {
        double best = -1e300;
        for (int t = 0; t < n_; ++t)
            if (mask >> t & 1) best = std::max(best, f_.values[t]);
        return best;
    }
    double fmin(std::uint64_t mask) const {
        double best = 1e300;
        for (int t = 0; t < n_; ++t)
            if (mask >> t & 1) best = std::min(best, f_.values[t]);
        return best;
    }
    double fsup(std::uint64_t mask) const {
        double best = 0.0;
        for (int t = 0; t < n_; ++t)
            if (mask >> t & 1) best = std::max(best, std::fabs(f_.values[t]));
        return best;
    }

    double phi(std::uint64_t lmask, const std::vector<std::uint64_t>& M,
               const std::vector<std::uint64_t>& N) const {
        double u = 0.0, v = 0.0;
        for (std::uint64_t x : N) u += fmax(x & lmask);
        for (std::uint64_t x : M) v += fmin(x & lmask);
        double d = u / static_cast<double>(N.size()) - v / static_cast<double>(M.size());
        return d > 0.0 ? 0.5 * d : 0.0;
    }

    // All size-`want` subsets of the members of family `fi` that meet lmask.
    std::vector<std::vector<std::uint64_t>> combos(int fi, int want,
                                                   std::uint64_t lmask) const {
        std::vector<std::uint64_t> pool;
        for (std::uint64_t m : fams_[fi])
            if (m & lmask) pool.push_back(m);
        std::vector<std::vector<std::uint64_t>> out;
        std::vector<std::uint64_t> cur;
        std::function<void(std::size_t)> rec = [&](std::size_t at) {
            if (static_cast<int>(cur.size()) == want) {
                out.push_back(cur);
                return;
            }
            if (at >= pool.size()) return;
            cur.push_back(pool[at]);
            rec(at + 1);
            cur.pop_back();
            rec(at + 1);
        };
        rec(0);
        return out;
    }

    double update(std::uint64_t lmask, const std::vector<double>& old) const {
        if (!lmask) return 0.0;
        double s = fsup(lmask), o = fmax(lmask) - fmin(lmask);
        double tsum = 0.0;
        int k = static_cast<int>(fams_.size());
        for (int a = 0; a < k; ++a) {
            for (int b = 0; b < k; ++b) {
                for (int m = 1; m <= pr_.mn_max; ++m) {
                    for (int n = 1; n <= pr_.mn_max; ++n) {
                        // Candidate pairs: (M, N) with disjoint unions (the
                        // space is discrete, so closures are the sets).
                        std::vector<std::pair<std::vector<std::uint64_t>,
                                              std::vector<std::uint64_t>>> pairs;
                        for (const auto& M : combos(a, m, lmask))
                            for (const auto& N : combos(b, n, lmask)) {
                                std::uint64_t um = 0, un = 0;
                                for (std::uint64_t x : M) um |= x;
                                for (std::uint64_t x : N) un |= x;
                                if ((um & un) == 0) pairs.emplace_back(M, N);
                            }
                        if (pairs.empty()) continue;
                        double theta = 0.0;
                        for (int p = 1; p <= pr_.p_max; ++p) {
                            double best = 0.0;
                            for (const auto& [M, N] : pairs) {
                                std::uint64_t um = 0, un = 0;
                                for (std::uint64_t x : M) um |= x;
                                for (std::uint64_t x : N) un |= x;
                                double ph = phi(lmask, M, N);
                                double psi = (old[lmask & ~un] + old[lmask & ~um]) / 3.0;
                                best = std::max(best, 0.5 * (ph * ph + psi / p));
                            }
                            theta += std::ldexp(best, -p);
                        }
                        tsum += weight_[a] * weight_[b] * std::ldexp(theta, -(m + n));
                    }
                }
            }
        }
        return (s * s + o * o + tsum) / 6.0;
    }

    void solve() {
        table_.assign(std::uint64_t{1} << n_, 0.0);
        std::vector<double> next(table_.size());
        for (int sweep = 0; sweep < 4000; ++sweep) {
            double res = 0.0;
            for (std::uint64_t mask = 0; mask < table_.size(); ++mask) {
                next[mask] = update(mask, table_);
                res = std::max(res, std::fabs(next[mask] - table_[mask]));
            }
            table_.swap(next);
            if (res <= 1e-14) return;
        }
    }

    const TopSpace& sp_;
    RealFunction f_;
    NormParams pr_;
    int n_;
    std::vector<std::vector<std::uint64_t>> fams_;
    std::vector<double> weight_;
    std::vector<double> table_;
};

}  // namespace refsolve
