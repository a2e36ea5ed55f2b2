#pragma once

#include <cstdint>

#include "robustq/mdp.hpp"

namespace robustq {

struct GridWorldOptions {
  std::uint64_t seed = 0;
  /// Per-pair Gaussian reward noise variance.
  double noise_variance = 1.0;
  /// Probability that the chosen move is replaced by one of the other three.
  double slip = 0.1;
  double gamma = 0.5;
  std::size_t side = 5;
  double reward_max = 10.0;
};

struct GridWorld {
  MdpSpec mdp;
  Policy policy;
};

/// side×side grid, actions up/down/left/right. The chosen move happens with
/// probability 1-slip, each other move with slip/3; moves off the grid stay
/// put. Mean rewards are U[0, reward_max]; R̄ is declared as reward_max.
/// The behavior policy is uniform, so the induced state chain is symmetric
/// and π is uniform.
GridWorld generate_grid_world(const GridWorldOptions& options);
GridWorld generate_grid_world(std::uint64_t seed);

}  // namespace robustq
