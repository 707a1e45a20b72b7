#include "stratsel/fixtures.hpp"

#include "stratsel/gauss.hpp"
#include "stratsel/rng.hpp"

namespace stratsel {

TypeDistribution make_toy_distribution(std::uint64_t seed) {
  const double sigma = 3.30;
  // Every type must satisfy sigma^2 > 1/(2 g_min sqrt(2 pi e)); with margin.
  const double g_floor =
      1.15 / (2.0 * sigma * sigma * sqrt_two_pi_e());

  Rng rng = Rng::substream(seed, 0, 0, 0x70Fu);
  TypeDistribution dist;
  dist.noise.sigma = sigma;
  dist.box = CovariateBox::centered(2);

  for (int k = 0; k < 5; ++k) {
    AgentType t;
    t.z = Vec(2);
    t.z << rng.next_uniform(5.0, 7.0), rng.next_uniform(5.0, 7.0);
    t.cost.g = Vec(2);
    t.cost.g << rng.next_uniform(10.0, 20.0), rng.next_uniform(10.0, 20.0);
    t.y0 = 0.0;
    t.y1 = t.z[0];
    dist.types.push_back(std::move(t));
    dist.tags.push_back({"natural"});
  }
  for (int k = 0; k < 5; ++k) {
    AgentType t;
    t.z = Vec(2);
    t.z << rng.next_uniform(3.0, 5.0), rng.next_uniform(3.0, 5.0);
    double g1 = rng.next_uniform(0.01, 0.02);
    while (g1 < g_floor) g1 = rng.next_uniform(0.01, 0.02);
    t.cost.g = Vec(2);
    t.cost.g << g1, rng.next_uniform(10.0, 20.0);
    t.y0 = 0.0;
    t.y1 = t.z[0];
    dist.types.push_back(std::move(t));
    dist.tags.push_back({"gamer"});
  }
  dist.probs = Vec::Constant(10, 0.1);
  dist.validate();
  return dist;
}

TypeDistribution make_highdim_distribution(std::uint64_t seed) {
  const int d = 10;
  Rng rng = Rng::substream(seed, 0, 0, 0x71Du);
  TypeDistribution dist;
  dist.noise.sigma = 1.10;
  dist.box = CovariateBox::centered(d);

  auto outcome = [&](const Vec& z) {
    double acc = 0.0;
    for (int j = 0; j < d / 2; ++j) acc += z[j];
    return acc;
  };

  for (int k = 0; k < 5; ++k) {
    AgentType t;
    t.z = Vec(d);
    t.cost.g = Vec(d);
    for (int j = 0; j < d; ++j) {
      t.z[j] = rng.next_uniform(5.0, 7.0);
      t.cost.g[j] = rng.next_uniform(1.0, 2.0);
    }
    t.y0 = 0.0;
    t.y1 = outcome(t.z);
    dist.types.push_back(std::move(t));
    dist.tags.push_back({"natural"});
  }
  for (int k = 0; k < 5; ++k) {
    AgentType t;
    t.z = Vec(d);
    t.cost.g = Vec(d);
    for (int j = 0; j < d; ++j) {
      t.z[j] = rng.next_uniform(3.0, 5.0);
      t.cost.g[j] = j < d / 2 ? rng.next_uniform(0.1, 0.2)
                              : rng.next_uniform(1.0, 2.0);
    }
    t.y0 = 0.0;
    t.y1 = outcome(t.z);
    dist.types.push_back(std::move(t));
    dist.tags.push_back({"gamer"});
  }
  dist.probs = Vec::Constant(10, 0.1);
  dist.validate();
  return dist;
}

}  // namespace stratsel
