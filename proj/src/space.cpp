#include "cklur/space.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "cklur/errors.hpp"

namespace cklur {

namespace {

// First index of the tail block compatible with the parity mask.  The tail
// starts at `cutoff`; an even/odd restriction may shift the first element by
// one.  Only meaningful for tail != none.
long long first_tail_index(int cutoff, Tail tail) {
    switch (tail) {
        case Tail::full:
            return cutoff;
        case Tail::even:
            return cutoff % 2 == 0 ? cutoff : cutoff + 1;
        case Tail::odd:
            return cutoff % 2 == 1 ? cutoff : cutoff + 1;
        default:
            return cutoff;
    }
}

}  // namespace

TopSpace TopSpace::make_finite(std::vector<std::string> names,
                               std::vector<PointSet> min_nbhds,
                               std::vector<std::vector<double>> dist) {
    const std::size_t n = names.size();
    if (n == 0) throw ValidationError("space must have at least one point");
    if (n > 64) throw ValidationError("finite spaces are limited to 64 points");
    {
        std::set<std::string> seen;
        for (const auto& name : names) {
            if (name.empty()) throw ValidationError("empty point name");
            if (!seen.insert(name).second)
                throw ValidationError("duplicate point name '" + name + "'");
        }
    }

    TopSpace sp;
    sp.kind_ = SpaceKind::finite;
    sp.n_ = static_cast<int>(n);
    sp.universe_ = {n == 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << n) - 1, Tail::none};
    sp.names_ = std::move(names);

    if (min_nbhds.size() != n)
        throw ValidationError("need one minimal neighborhood per point");
    for (std::size_t t = 0; t < n; ++t) {
        const PointSet& nb = min_nbhds[t];
        if (nb.tail != Tail::none || !nb.subset_of(sp.universe_))
            throw ValidationError("neighborhood of '" + sp.names_[t] + "' is not a subset of the space");
        if (!nb.contains(static_cast<int>(t)))
            throw ValidationError("closure axiom violated: '" + sp.names_[t] +
                                  "' is missing from its own minimal neighborhood");
    }
    // Idempotence of the induced closure operator: minimal neighborhoods must
    // be nested (u in N(t) implies N(u) subset of N(t)).
    for (std::size_t t = 0; t < n; ++t) {
        for_each_explicit(min_nbhds[t], [&](int u) {
            if (!min_nbhds[u].subset_of(min_nbhds[t]))
                throw ValidationError("closure axiom violated: neighborhood of '" + sp.names_[u] +
                                      "' is not contained in the neighborhood of '" +
                                      sp.names_[t] + "' although the points are adjacent");
        });
    }
    sp.min_nbhd_ = std::move(min_nbhds);

    if (dist.size() != n)
        throw ValidationError("distance table must have one row per point");
    for (std::size_t a = 0; a < n; ++a)
        if (dist[a].size() != n)
            throw ValidationError("distance table row for '" + sp.names_[a] + "' has wrong length");
    double scale = 0.0;
    for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = 0; b < n; ++b) scale = std::max(scale, std::abs(dist[a][b]));
    const double tol = 1e-12 * (1.0 + scale);
    for (std::size_t a = 0; a < n; ++a) {
        if (dist[a][a] != 0.0)
            throw ValidationError("metric axiom violated: d(" + sp.names_[a] + "," + sp.names_[a] +
                                  ") must be 0");
        for (std::size_t b = 0; b < n; ++b) {
            if (!std::isfinite(dist[a][b]))
                throw ValidationError("metric entry d(" + sp.names_[a] + "," + sp.names_[b] +
                                      ") is not finite");
            if (a != b && !(dist[a][b] > 0.0))
                throw ValidationError("metric axiom violated: d(" + sp.names_[a] + "," +
                                      sp.names_[b] + ") must be positive");
            if (std::abs(dist[a][b] - dist[b][a]) > tol)
                throw ValidationError("metric axiom violated: metric symmetry (" + sp.names_[a] +
                                      "," + sp.names_[b] + ")");
        }
    }
    for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = 0; b < n; ++b)
            for (std::size_t c = 0; c < n; ++c)
                if (dist[a][c] > dist[a][b] + dist[b][c] + tol)
                    throw ValidationError("metric axiom violated: triangle inequality fails on (" +
                                          sp.names_[a] + "," + sp.names_[b] + "," + sp.names_[c] +
                                          ")");
    sp.dist_ = std::move(dist);

    sp.discrete_ = true;
    for (std::size_t t = 0; t < n; ++t)
        if (sp.min_nbhd_[t].explicit_count() != 1) sp.discrete_ = false;
    // A finite space is Hausdorff exactly when it is discrete.
    sp.hausdorff_ = sp.discrete_;
    return sp;
}

TopSpace TopSpace::make_sequence(int cutoff, MetricRule rule) {
    if (cutoff < 1) throw ValidationError("sequence cutoff must be at least 1");
    if (cutoff > 62) throw ValidationError("sequence cutoff is limited to 62");
    if (rule == MetricRule::table)
        throw ValidationError("sequence spaces use a metric rule (dyadic or harmonic), not a table");
    TopSpace sp;
    sp.kind_ = SpaceKind::sequence;
    sp.cutoff_ = cutoff;
    sp.n_ = cutoff + 1;  // heads plus the limit point
    sp.rule_ = rule;
    sp.universe_ = {(std::uint64_t{1} << (cutoff + 1)) - 1, Tail::full};
    sp.hausdorff_ = true;
    sp.discrete_ = false;
    sp.names_.reserve(sp.n_);
    for (int i = 0; i < cutoff; ++i) sp.names_.push_back(std::to_string(i));
    sp.names_.push_back("inf");
    return sp;
}

PointSet TopSpace::closure(PointSet s) const {
    if (kind_ == SpaceKind::finite) {
        PointSet out;
        for (int t = 0; t < n_; ++t)
            if (min_nbhd_[t].intersects(s)) out.bits |= std::uint64_t{1} << t;
        return out;
    }
    // Heads and tail points are isolated; the limit point is in the closure
    // exactly when the set has an infinite (tail) part or already contains it.
    PointSet out = s;
    if (s.tail != Tail::none) out.bits |= std::uint64_t{1} << limit_id();
    return out;
}

PointSet TopSpace::minimal_open_superset(PointSet s) const {
    if (kind_ == SpaceKind::finite) {
        PointSet out;
        for_each_explicit(s, [&](int t) { out = out.unite(min_nbhd_[t]); });
        return out;
    }
    PointSet out = s;
    if (s.contains(limit_id())) out.tail = Tail::full;
    return out;
}

PointSet TopSpace::min_nbhd(int id) const {
    if (kind_ == SpaceKind::finite) return min_nbhd_[id];
    PointSet out = PointSet::single(id);
    if (id == limit_id()) out.tail = Tail::full;
    return out;
}

double TopSpace::embed(int id) const {
    if (id == limit_id()) return 0.0;
    return rule_ == MetricRule::dyadic ? std::ldexp(1.0, -id) : 1.0 / (id + 1);
}

double TopSpace::embed_tail_point(long long index) const {
    return rule_ == MetricRule::dyadic ? std::ldexp(1.0, static_cast<int>(-index))
                                       : 1.0 / static_cast<double>(index + 1);
}

double TopSpace::dist(int a, int b) const {
    if (kind_ == SpaceKind::finite) return dist_[a][b];
    return std::abs(embed(a) - embed(b));
}

double TopSpace::diameter(PointSet s) const {
    if (s.empty()) return 0.0;
    if (kind_ == SpaceKind::finite) {
        double best = 0.0;
        for_each_explicit(s, [&](int a) {
            for_each_explicit(s, [&](int b) { best = std::max(best, dist_[a][b]); });
        });
        return best;
    }
    // diameter = sup g - inf g along the metric embedding.
    double sup = 0.0, inf = 0.0;
    bool have = false;
    for_each_explicit(s, [&](int id) {
        double v = embed(id);
        if (!have) {
            sup = inf = v;
            have = true;
        } else {
            sup = std::max(sup, v);
            inf = std::min(inf, v);
        }
    });
    if (s.tail != Tail::none) {
        double v = embed_tail_point(first_tail_index(cutoff_, s.tail));
        sup = have ? std::max(sup, v) : v;
        inf = 0.0;  // the tail block accumulates at the limit, so inf g = 0
        have = true;
    }
    return sup - inf;
}

int TopSpace::point_index(const std::string& name) const {
    for (int i = 0; i < n_; ++i)
        if (names_[i] == name) return i;
    return -1;
}

std::string TopSpace::set_to_string(PointSet s) const {
    std::string out = "{";
    bool first = true;
    auto push = [&](const std::string& tok) {
        if (!first) out += ",";
        out += tok;
        first = false;
    };
    if (kind_ == SpaceKind::finite) {
        for_each_explicit(s, [&](int id) { push(names_[id]); });
    } else {
        for_each_explicit(s, [&](int id) {
            if (id != limit_id()) push(names_[id]);
        });
        if (s.tail == Tail::full) push("tail");
        if (s.tail == Tail::even) push("tail-even");
        if (s.tail == Tail::odd) push("tail-odd");
        if (s.contains(limit_id())) push("inf");
    }
    out += "}";
    return out;
}

void validate_function(const TopSpace& space, const RealFunction& f) {
    const int heads = space.kind() == SpaceKind::sequence ? space.cutoff() : space.explicit_points();
    if (static_cast<int>(f.values.size()) != heads)
        throw ValidationError("function has " + std::to_string(f.values.size()) +
                              " values, expected " + std::to_string(heads));
    for (double v : f.values)
        if (!std::isfinite(v)) throw ValidationError("function value is not finite");
    if (!std::isfinite(f.tail_value)) throw ValidationError("function tail value is not finite");
    if (space.kind() == SpaceKind::finite) {
        // Continuity on a finite space: constant on every minimal neighborhood.
        for (int t = 0; t < space.explicit_points(); ++t) {
            bool bad = false;
            int witness = t;
            for_each_explicit(space.min_nbhd(t), [&](int u) {
                if (f.values[u] != f.values[t] && !bad) {
                    bad = true;
                    witness = u;
                }
            });
            if (bad)
                throw ValidationError("function is not continuous: points '" +
                                      space.point_name(t) + "' and '" + space.point_name(witness) +
                                      "' are topologically inseparable but carry different values");
        }
    }
    // Sequence kind needs no extra check: heads and tail points are isolated
    // and the tail value extends continuously to the limit by construction.
}

double value_at(const TopSpace& space, const RealFunction& f, int id) {
    if (space.kind() == SpaceKind::finite) return f.values[id];
    return id < space.cutoff() ? f.values[id] : f.tail_value;
}

Extrema extrema_over(const TopSpace& space, const RealFunction& f, PointSet s) {
    Extrema e;
    for_each_explicit(s, [&](int id) {
        double v = value_at(space, f, id);
        if (!e.present) {
            e.min = e.max = v;
            e.present = true;
        } else {
            e.min = std::min(e.min, v);
            e.max = std::max(e.max, v);
        }
    });
    if (s.tail != Tail::none) {
        if (!e.present) {
            e.min = e.max = f.tail_value;
            e.present = true;
        } else {
            e.min = std::min(e.min, f.tail_value);
            e.max = std::max(e.max, f.tail_value);
        }
    }
    return e;
}

double max_over(const TopSpace& space, const RealFunction& f, PointSet s) {
    return extrema_over(space, f, s).max;
}

double min_over(const TopSpace& space, const RealFunction& f, PointSet s) {
    return extrema_over(space, f, s).min;
}

double sup_abs_over(const TopSpace& space, const RealFunction& f, PointSet s) {
    Extrema e = extrema_over(space, f, s);
    if (!e.present) return 0.0;
    return std::max(std::abs(e.min), std::abs(e.max));
}

double osc_over(const TopSpace& space, const RealFunction& f, PointSet s) {
    Extrema e = extrema_over(space, f, s);
    if (!e.present) return 0.0;
    return e.max - e.min;
}

}  // namespace cklur
