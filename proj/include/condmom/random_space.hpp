#pragma once

// Seed-deterministic randomized test instances: finite spaces with labeled
// maps, and a small RNG wrapper whose draws are pinned to the mt19937_64
// bit stream (no library-defined distributions), so identical seeds give
// identical instances everywhere.

#include <cstdint>
#include <random>

#include "condmom/finite_space.hpp"

namespace condmom {

// Default seed for reproducible runs.
inline constexpr std::uint64_t kDefaultSeed = 20170655;

// splitmix64 step; used to derive independent streams from (seed, index).
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

class Rng {
  public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t bits() { return gen_(); }
    double uniform();                       // [0, 1)
    double uniform(double a, double b);     // [a, b)
    std::uint64_t below(std::uint64_t n);   // [0, n)
    double normal();                        // standard normal (Box-Muller)
    double rademacher();                    // +-1 with equal probability
    double exponential();                   // rate 1

  private:
    std::mt19937_64 gen_;
    double cached_normal_ = 0.0;
    bool has_cached_normal_ = false;
};

struct RandomSpaceConfig {
    int min_outcomes = 2;
    int max_outcomes = 12;
    bool binary_x = false;           // X in {0, 1} instead of a small real alphabet
    double zero_prob_rate = 0.15;    // chance of zeroing one outcome's probability
    int z_alphabet_max = 3;
};

// Space with probabilities from a normalized exponential (Dirichlet(1)) draw
// and maps drawn from small alphabets.
FiniteSpace sample_finite_space(Rng& rng, const RandomSpaceConfig& cfg);

RandomMap sample_real_map(Rng& rng, std::size_t n, bool binary01);
RandomMap sample_label_map(Rng& rng, std::size_t n, int alphabet_max);

struct RandomInstance {
    FiniteSpace space;
    RandomMap x;
    RandomMap y;
    RandomMap z;
};

RandomInstance sample_instance(Rng& rng, const RandomSpaceConfig& cfg);

// (z, x, y) built as an explicit product measure per z-cell, so that x and y
// are conditionally independent given z by construction.
RandomInstance sample_conditionally_independent_instance(Rng& rng);

} // namespace condmom
