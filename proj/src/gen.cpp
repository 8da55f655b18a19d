#include "cklur/gen.hpp"

#include <cmath>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "cklur/errors.hpp"
#include "cklur/families.hpp"

namespace cklur {

RealFunction random_function(Rng& rng, const TopSpace& space, double lo, double hi) {
    if (!(lo < hi) || !std::isfinite(lo) || !std::isfinite(hi))
        throw ValidationError("the value range must be a finite interval");
    RealFunction f;
    int heads = space.kind() == SpaceKind::finite ? space.explicit_points() : space.cutoff();
    f.values.resize(heads);
    for (double& v : f.values) v = lo + (hi - lo) * rng.next_double();
    if (space.kind() == SpaceKind::sequence) f.tail_value = lo + (hi - lo) * rng.next_double();
    return f;
}

Instance random_discrete_instance(std::uint64_t seed, const GenOptions& opt) {
    if (opt.min_points < 1 || opt.max_points < opt.min_points || opt.max_points > 16)
        throw ValidationError("point counts must satisfy 1 <= min <= max <= 16");
    if (opt.max_families < 1) throw ValidationError("at least one family is required");
    if (opt.functions < 1) throw ValidationError("at least one function is required");
    if (!(opt.lo < opt.hi) || !std::isfinite(opt.lo) || !std::isfinite(opt.hi))
        throw ValidationError("the value range must be a finite interval");

    Rng rng(Rng::derive_seed(seed, 0));
    int n = rng.next_int(opt.min_points, opt.max_points);

    std::vector<std::string> names;
    names.reserve(n);
    for (int i = 0; i < n; ++i) names.push_back("p" + std::to_string(i));
    std::vector<PointSet> nbhds;
    for (int i = 0; i < n; ++i) nbhds.push_back(PointSet::single(i));
    std::vector<std::vector<double>> dist(n, std::vector<double>(n, 1.0));
    for (int i = 0; i < n; ++i) dist[i][i] = 0.0;

    Instance inst;
    inst.name = "random-" + std::to_string(seed);
    inst.space = std::make_unique<TopSpace>(TopSpace::make_finite(names, nbhds, dist));

    // Partition the points into singleton-member families.
    int k = rng.next_int(1, std::min(opt.max_families, n));
    std::vector<int> fam_of(n);
    for (int i = 0; i < n; ++i) fam_of[i] = i < k ? i : rng.next_int(0, k - 1);
    for (int i = n - 1; i > 0; --i) std::swap(fam_of[i], fam_of[rng.next_int(0, i)]);
    std::vector<std::vector<PointSet>> members(k);
    for (int i = 0; i < n; ++i) members[fam_of[i]].push_back(PointSet::single(i));
    std::vector<Family> fams;
    for (int j = 0; j < k; ++j) fams.push_back(make_explicit_family(*inst.space, members[j]));
    inst.coverings.push_back(std::make_unique<LevelCovering>(
        build_covering(*inst.space, 0, true, std::move(fams))));

    for (int fi = 0; fi < opt.functions; ++fi)
        inst.functions.emplace_back("f" + std::to_string(fi),
                                    random_function(rng, *inst.space, opt.lo, opt.hi));
    return inst;
}

}  // namespace cklur
