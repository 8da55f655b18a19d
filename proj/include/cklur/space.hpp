#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace cklur {

// ── Point sets ──────────────────────────────────────────────────────────────
//
// A subset of a space is stored as a bitmask over the explicit points plus a
// symbolic "tail" component for sequence-kind spaces.  Explicit points are
// the named points of a finite space, or the heads 0..cutoff-1 and the limit
// point (id = cutoff) of a sequence space.  The tail stands for the infinite
// block of isolated points beyond the cutoff; it is never enumerated.  Storing
// the tail as a two-bit parity mask (even | odd) makes union / intersection /
// difference exact lattice operations while still letting families split the
// tail by parity.

enum class Tail : std::uint8_t {
    none = 0,
    even = 1,  // tail points of even index
    odd = 2,   // tail points of odd index
    full = 3,
};

inline Tail tail_union(Tail a, Tail b) {
    return static_cast<Tail>(static_cast<std::uint8_t>(a) | static_cast<std::uint8_t>(b));
}
inline Tail tail_intersect(Tail a, Tail b) {
    return static_cast<Tail>(static_cast<std::uint8_t>(a) & static_cast<std::uint8_t>(b));
}
inline Tail tail_minus(Tail a, Tail b) {
    return static_cast<Tail>(static_cast<std::uint8_t>(a) & ~static_cast<std::uint8_t>(b) & 3u);
}

struct PointSet {
    std::uint64_t bits = 0;
    Tail tail = Tail::none;

    bool empty() const { return bits == 0 && tail == Tail::none; }
    bool infinite() const { return tail != Tail::none; }
    bool contains(int id) const { return (bits >> id) & 1u; }
    int explicit_count() const { return __builtin_popcountll(bits); }

    PointSet unite(PointSet o) const { return {bits | o.bits, tail_union(tail, o.tail)}; }
    PointSet intersect(PointSet o) const { return {bits & o.bits, tail_intersect(tail, o.tail)}; }
    PointSet minus(PointSet o) const { return {bits & ~o.bits, tail_minus(tail, o.tail)}; }
    bool subset_of(PointSet o) const {
        return (bits & ~o.bits) == 0 && tail_minus(tail, o.tail) == Tail::none;
    }
    bool intersects(PointSet o) const {
        return (bits & o.bits) != 0 || tail_intersect(tail, o.tail) != Tail::none;
    }

    bool operator==(const PointSet& o) const { return bits == o.bits && tail == o.tail; }
    bool operator!=(const PointSet& o) const { return !(*this == o); }
    bool operator<(const PointSet& o) const {  // arbitrary total order, used for canonical sorting
        return bits != o.bits ? bits < o.bits
                              : static_cast<int>(tail) < static_cast<int>(o.tail);
    }

    static PointSet single(int id) { return {std::uint64_t{1} << id, Tail::none}; }
};

struct PointSetHash {
    std::size_t operator()(const PointSet& s) const {
        std::uint64_t z = s.bits ^ (static_cast<std::uint64_t>(s.tail) << 62);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        return static_cast<std::size_t>(z ^ (z >> 31));
    }
};

template <typename Fn>
void for_each_explicit(PointSet s, Fn&& fn) {
    std::uint64_t b = s.bits;
    while (b) {
        int id = __builtin_ctzll(b);
        fn(id);
        b &= b - 1;
    }
}

// ── Spaces ──────────────────────────────────────────────────────────────────

enum class SpaceKind { finite, sequence };

// How distances between explicit points are obtained.
enum class MetricRule { table, dyadic, harmonic };

// A compact space presented finitely: either a finite topological space given
// by minimal neighborhoods plus a metric table, or a convergent-sequence space
// (points 0,1,2,... and a limit) cut off after `cutoff` heads, with the later
// isolated points kept symbolically as the tail.
class TopSpace {
public:
    // Throws ValidationError when the neighborhood system violates the
    // closure axioms or the metric table violates the metric axioms.
    static TopSpace make_finite(std::vector<std::string> names,
                                std::vector<PointSet> min_nbhds,
                                std::vector<std::vector<double>> dist);
    static TopSpace make_sequence(int cutoff, MetricRule rule);

    SpaceKind kind() const { return kind_; }
    MetricRule metric_rule() const { return rule_; }
    bool hausdorff() const { return hausdorff_; }
    bool discrete() const { return discrete_; }
    // Number of explicitly represented points (bits in a PointSet).
    int explicit_points() const { return n_; }
    int cutoff() const { return cutoff_; }
    int limit_id() const { return cutoff_; }  // sequence kind: id of the limit point

    PointSet universe() const { return universe_; }
    PointSet closure(PointSet s) const;
    bool is_closed(PointSet s) const { return closure(s) == s; }
    bool is_open(PointSet s) const { return is_closed(complement(s)); }
    PointSet complement(PointSet s) const { return universe_.minus(s); }
    // Smallest open set containing s; every open superset of s contains it.
    PointSet minimal_open_superset(PointSet s) const;
    PointSet min_nbhd(int id) const;

    double dist(int a, int b) const;
    double diameter(PointSet s) const;
    // Sequence kind: metric embedding g with d(x,y) = |g(x) - g(y)|,
    // g(limit) = 0.  Defined for explicit ids.
    double embed(int id) const;
    double embed_tail_point(long long index) const;  // g at tail point `index` (>= cutoff)

    const std::string& point_name(int id) const { return names_[id]; }
    int point_index(const std::string& name) const;  // -1 when absent
    std::string set_to_string(PointSet s) const;

private:
    TopSpace() = default;

    SpaceKind kind_ = SpaceKind::finite;
    int n_ = 0;       // explicit point count
    int cutoff_ = 0;  // sequence kind only
    MetricRule rule_ = MetricRule::table;
    bool hausdorff_ = false;
    bool discrete_ = false;
    PointSet universe_;
    std::vector<std::string> names_;
    std::vector<PointSet> min_nbhd_;       // finite kind
    std::vector<std::vector<double>> dist_;  // finite kind
};

// ── Functions ───────────────────────────────────────────────────────────────

// A continuous real function.  Finite kind: one value per point.  Sequence
// kind: one value per head; tail_value is the value on every tail point and,
// by continuity, at the limit.
struct RealFunction {
    std::vector<double> values;
    double tail_value = 0.0;
};

// Throws ValidationError if sizes are wrong or the function fails the
// continuity requirement (it must be constant on each minimal neighborhood).
void validate_function(const TopSpace& space, const RealFunction& f);

double value_at(const TopSpace& space, const RealFunction& f, int id);

struct Extrema {
    double min = 0.0;
    double max = 0.0;
    bool present = false;  // false over the empty set; min/max are then 0
};

Extrema extrema_over(const TopSpace& space, const RealFunction& f, PointSet s);
double max_over(const TopSpace& space, const RealFunction& f, PointSet s);
double min_over(const TopSpace& space, const RealFunction& f, PointSet s);
// sup |f| over s; 0 on the empty set.
double sup_abs_over(const TopSpace& space, const RealFunction& f, PointSet s);
// max f - min f over s; 0 on the empty set.
double osc_over(const TopSpace& space, const RealFunction& f, PointSet s);

}  // namespace cklur
