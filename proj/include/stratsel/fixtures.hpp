#pragma once

#include <cstdint>

#include "stratsel/population.hpp"

// Built-in benchmark distributions: a two-dimensional naturals/gamers mix and
// its ten-dimensional analogue. Both draw type parameters from fixed uniform
// ranges, deterministically in the seed.

namespace stratsel {

// d = 2, sigma = 3.30. Five "natural" types (high raw covariates, expensive
// modification) and five "gamer" types (lower raw covariates, first
// coordinate cheap to manipulate). y1 = z_1, y0 = 0. Gamer first-coordinate
// weights are redrawn until every type satisfies the solver's uniqueness
// requirement sigma^2 > 1/(alpha sqrt(2 pi e)) with a small margin.
TypeDistribution make_toy_distribution(std::uint64_t seed = 3);

// d = 10, sigma = 1.10. Naturals expensive everywhere; gamers cheap on the
// first half of the coordinates. y1 = sum of the first d/2 raw covariates.
TypeDistribution make_highdim_distribution(std::uint64_t seed = 2);

}  // namespace stratsel
