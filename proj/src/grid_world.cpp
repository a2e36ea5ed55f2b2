#include "robustq/grid_world.hpp"

#include <cmath>
#include <utility>
#include <vector>

#include "robustq/errors.hpp"
#include "robustq/rng.hpp"

namespace robustq {

namespace {

constexpr int kRowStep[4] = {-1, 1, 0, 0};
constexpr int kColStep[4] = {0, 0, -1, 1};

}  // namespace

GridWorld generate_grid_world(const GridWorldOptions& options) {
  if (options.side < 2) throw InvalidArgument("grid side must be at least 2");
  if (!(options.slip >= 0.0 && options.slip < 1.0)) throw InvalidArgument("slip must lie in [0, 1)");
  if (!(options.noise_variance >= 0.0) || !std::isfinite(options.noise_variance)) {
    throw InvalidArgument("noise variance must be finite and non-negative");
  }
  if (!(options.reward_max > 0.0) || !std::isfinite(options.reward_max)) {
    throw InvalidArgument("reward_max must be positive");
  }
  const std::size_t n = options.side;
  const std::size_t S = n * n;
  const std::size_t A = 4;

  std::vector<double> transition(S * A * S, 0.0);
  for (std::size_t s = 0; s < S; ++s) {
    const auto row = static_cast<int>(s / n);
    const auto col = static_cast<int>(s % n);
    for (std::size_t a = 0; a < A; ++a) {
      for (std::size_t m = 0; m < A; ++m) {
        const double p = m == a ? 1.0 - options.slip : options.slip / 3.0;
        if (p == 0.0) continue;
        int r = row + kRowStep[m];
        int c = col + kColStep[m];
        if (r < 0 || c < 0 || r >= static_cast<int>(n) || c >= static_cast<int>(n)) {
          r = row;
          c = col;
        }
        transition[(s * A + a) * S + static_cast<std::size_t>(r) * n + static_cast<std::size_t>(c)] += p;
      }
    }
  }

  Rng rng(options.seed);
  std::vector<double> rewards(S * A);
  for (double& r : rewards) r = options.reward_max * rng.uniform();

  const NoiseSpec noise = options.noise_variance > 0.0
                              ? NoiseSpec::gaussian(std::sqrt(options.noise_variance))
                              : NoiseSpec::none();
  MdpSpec mdp(S, A, std::move(transition), std::move(rewards), std::vector<NoiseSpec>(S * A, noise), options.gamma,
              options.reward_max);
  return {std::move(mdp), Policy::uniform(S, A)};
}

GridWorld generate_grid_world(std::uint64_t seed) {
  GridWorldOptions options;
  options.seed = seed;
  return generate_grid_world(options);
}

}  // namespace robustq
