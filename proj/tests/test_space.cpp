#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "cklur/errors.hpp"
#include "cklur/space.hpp"

using namespace cklur;

namespace {

TopSpace discrete3() {
    std::vector<PointSet> nb = {PointSet::single(0), PointSet::single(1), PointSet::single(2)};
    std::vector<std::vector<double>> d = {{0, 1, 1}, {1, 0, 1}, {1, 1, 0}};
    return TopSpace::make_finite({"a", "b", "c"}, nb, d);
}

TopSpace sierpinski() {
    std::vector<PointSet> nb = {PointSet::single(0), {0b11, Tail::none}};
    std::vector<std::vector<double>> d = {{0, 1}, {1, 0}};
    return TopSpace::make_finite({"x", "y"}, nb, d);
}

}  // namespace

TEST_CASE("point-set lattice operations are exact") {
    PointSet a{0b1010, Tail::even};
    PointSet b{0b0110, Tail::odd};
    CHECK(a.unite(b) == PointSet{0b1110, Tail::full});
    CHECK(a.intersect(b) == PointSet{0b0010, Tail::none});
    CHECK(a.minus(b) == PointSet{0b1000, Tail::even});
    CHECK(b.minus(a) == PointSet{0b0100, Tail::odd});
    CHECK(a.subset_of(a.unite(b)));
    CHECK(!a.subset_of(b));
    CHECK(a.intersects(b));
    CHECK(!PointSet{0b1, Tail::none}.intersects(PointSet{0b10, Tail::full}));
    CHECK(PointSet{0, Tail::odd}.infinite());
    CHECK(PointSet::single(3).contains(3));
    CHECK(PointSet{0b1011, Tail::none}.explicit_count() == 3);
    CHECK(PointSet{}.empty());
}

TEST_CASE("discrete space: every set is clopen") {
    TopSpace sp = discrete3();
    CHECK(sp.discrete());
    CHECK(sp.hausdorff());
    PointSet s{0b101, Tail::none};
    CHECK(sp.closure(s) == s);
    CHECK(sp.is_closed(s));
    CHECK(sp.is_open(s));
    CHECK(sp.complement(s) == PointSet{0b010, Tail::none});
    CHECK(sp.minimal_open_superset(s) == s);
    CHECK(sp.diameter(sp.universe()) == 1.0);
    CHECK(sp.point_index("c") == 2);
    CHECK(sp.set_to_string(s) == "{a,c}");
}

TEST_CASE("non-discrete finite space: closure and openness") {
    TopSpace sp = sierpinski();
    CHECK(!sp.discrete());
    CHECK(!sp.hausdorff());
    PointSet x = PointSet::single(0), y = PointSet::single(1);
    CHECK(sp.closure(x) == PointSet{0b11, Tail::none});  // y is in the closure of x
    CHECK(sp.closure(y) == y);
    CHECK(sp.is_open(x));
    CHECK(!sp.is_closed(x));
    CHECK(sp.is_closed(y));
    CHECK(!sp.is_open(y));
    CHECK(sp.minimal_open_superset(y) == sp.universe());
}

TEST_CASE("finite space constructors validate their axioms") {
    std::vector<PointSet> nb = {PointSet::single(0), PointSet::single(1)};
    CHECK_THROWS_AS(TopSpace::make_finite({"a", "a"}, nb, {{0, 1}, {1, 0}}), ValidationError);
    CHECK_THROWS_AS(TopSpace::make_finite({"a", "b"}, nb, {{0, 1}, {2, 0}}), ValidationError);
    CHECK_THROWS_AS(TopSpace::make_finite({"a", "b"}, nb, {{0, 0}, {0, 0}}), ValidationError);
    CHECK_THROWS_AS(
        TopSpace::make_finite({"a", "b"}, nb, {{0, 1, 0}, {1, 0, 0}, {0, 0, 0}}),
        ValidationError);
    // A neighborhood that skips its own point violates the closure axioms.
    std::vector<PointSet> bad = {PointSet::single(1), PointSet::single(1)};
    CHECK_THROWS_AS(TopSpace::make_finite({"a", "b"}, bad, {{0, 1}, {1, 0}}), ValidationError);
    // Triangle violation.
    CHECK_THROWS_AS(
        TopSpace::make_finite({"a", "b", "c"},
                              {PointSet::single(0), PointSet::single(1), PointSet::single(2)},
                              {{0, 1, 5}, {1, 0, 1}, {5, 1, 0}}),
        ValidationError);
}

TEST_CASE("sequence space: tail calculus and metric embedding") {
    TopSpace sp = TopSpace::make_sequence(4, MetricRule::dyadic);
    CHECK(sp.kind() == SpaceKind::sequence);
    CHECK(sp.explicit_points() == 5);
    CHECK(sp.limit_id() == 4);
    CHECK(sp.universe() == PointSet{0b11111, Tail::full});

    PointSet evens{0, Tail::even};
    CHECK(!sp.is_closed(evens));  // the tail block accumulates at the limit
    CHECK(sp.closure(evens) == PointSet{std::uint64_t{1} << 4, Tail::even});
    CHECK(sp.is_closed(sp.closure(evens)));
    CHECK(sp.is_closed(PointSet::single(2)));
    CHECK(sp.is_open(PointSet::single(2)));
    CHECK(!sp.is_open(PointSet::single(4)));
    CHECK(sp.min_nbhd(4) == PointSet{std::uint64_t{1} << 4, Tail::full});
    CHECK(sp.min_nbhd(1) == PointSet::single(1));

    CHECK(sp.embed(0) == 1.0);
    CHECK(sp.embed(4) == 0.0);
    CHECK(sp.dist(0, 1) == 0.5);
    CHECK(sp.dist(0, 4) == 1.0);
    CHECK(sp.embed_tail_point(5) == std::ldexp(1.0, -5));
    CHECK(sp.diameter(sp.universe()) == 1.0);
    CHECK(sp.set_to_string(sp.closure(evens)) == "{tail-even,inf}");
    CHECK(sp.point_index("inf") == 4);

    TopSpace hp = TopSpace::make_sequence(3, MetricRule::harmonic);
    CHECK(hp.embed(0) == 1.0);
    CHECK(hp.embed(2) == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("functions: extrema respect the tail and continuity is enforced") {
    TopSpace sp = TopSpace::make_sequence(3, MetricRule::dyadic);
    RealFunction f;
    f.values = {1.0, -2.0, 0.5};
    f.tail_value = 0.25;
    validate_function(sp, f);
    CHECK(value_at(sp, f, 1) == -2.0);
    CHECK(value_at(sp, f, 3) == 0.25);  // the limit takes the tail value

    PointSet s{0b0001, Tail::odd};
    Extrema e = extrema_over(sp, f, s);
    CHECK(e.present);
    CHECK(e.min == 0.25);
    CHECK(e.max == 1.0);
    CHECK(osc_over(sp, f, s) == 0.75);
    CHECK(sup_abs_over(sp, f, PointSet{0b0010, Tail::none}) == 2.0);
    CHECK(!extrema_over(sp, f, PointSet{}).present);
    CHECK(osc_over(sp, f, PointSet{}) == 0.0);

    RealFunction bad;
    bad.values = {1.0, -2.0};
    CHECK_THROWS_AS(validate_function(sp, bad), ValidationError);

    TopSpace sk = sierpinski();
    RealFunction g;
    g.values = {0.0, 1.0};  // differs on the minimal neighborhood of y
    CHECK_THROWS_AS(validate_function(sk, g), ValidationError);
    g.values = {1.0, 1.0};
    validate_function(sk, g);
}
