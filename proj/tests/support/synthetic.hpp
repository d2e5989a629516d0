#pragma once

#include <cmath>
#include <vector>

#include <Eigen/Core>

#include "bargain/preference.hpp"
#include "bargain/rng.hpp"

namespace testsupport {

// Samples preference pairs from a known coefficient vector with logistic
// choice noise: components uniform on [0,1], choice 1 with probability
// sigmoid(gen . delta). Independent of the fit implementation.
inline std::vector<bargain::PreferencePair> synthetic_pairs(
    const Eigen::Vector3d& generator, int n, std::uint64_t seed) {
  bargain::SplitMix64 rng(seed);
  std::vector<bargain::PreferencePair> pairs;
  pairs.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    bargain::PreferencePair p;
    p.b1 = {rng.uniform(), rng.uniform(), rng.uniform()};
    p.b2 = {rng.uniform(), rng.uniform(), rng.uniform()};
    const double score = generator[0] * (p.b1.cs - p.b2.cs) +
                         generator[1] * (p.b1.np - p.b2.np) +
                         generator[2] * (p.b1.ar - p.b2.ar);
    const double prob = 1.0 / (1.0 + std::exp(-score));
    p.choice = rng.uniform() < prob ? 1 : 2;
    pairs.push_back(std::move(p));
  }
  return pairs;
}

}  // namespace testsupport
