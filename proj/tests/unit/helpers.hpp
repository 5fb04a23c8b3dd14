#pragma once

#include <gtest/gtest.h>

#include "risocc/risocc.hpp"

namespace risocc::test {

inline CMat random_matrix(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  CMat m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = complex_normal(rng);
  return m;
}

inline CVec random_vector(Eigen::Index n, Rng& rng) { return random_matrix(n, 1, rng).col(0); }

/// Scene with Gaussian H and users in front of a square RIS.
inline ChannelSet random_channels(int m, int side, int k, std::uint64_t seed, double noise = 1e-3) {
  Rng rng{seed};
  const auto geom = RisGeometry::make(side, side, 0.15, 0.15, 0.3);
  std::vector<UeState> ues;
  for (int i = 0; i < k; ++i) {
    ues.push_back({uniform(rng, 1.0, 20.0), uniform(rng, -1.0, 1.0), uniform(rng, -1.0, 1.0), 1.0});
  }
  return make_channel_set(random_matrix(m, geom.size(), rng), ues, geom, noise);
}

}  // namespace risocc::test
