#pragma once

#include <cstdint>

#include "cklur/instance.hpp"
#include "cklur/rng.hpp"
#include "cklur/space.hpp"

namespace cklur {

struct GenOptions {
    int min_points = 2;
    int max_points = 6;
    int max_families = 3;
    int functions = 3;
    double lo = -1.0, hi = 1.0;
};

// Uniform values in [lo, hi) on every point (and on the tail block for
// sequence spaces).
RealFunction random_function(Rng& rng, const TopSpace& space, double lo, double hi);

// A discrete finite space with named points, one covering valid at every level
// (a random partition of the points into singleton-member families), and
// random functions.  Fully determined by the seed.
Instance random_discrete_instance(std::uint64_t seed, const GenOptions& opt = {});

}  // namespace cklur
