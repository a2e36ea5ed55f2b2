#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <queue>
#include <string>

#include "robustq/errors.hpp"
#include "robustq/mdp.hpp"

namespace robustq {

namespace {

std::vector<std::size_t> bfs_levels(std::span<const double> chain, std::size_t n, bool reverse) {
  constexpr auto kUnreached = static_cast<std::size_t>(-1);
  std::vector<std::size_t> level(n, kUnreached);
  std::queue<std::size_t> frontier;
  level[0] = 0;
  frontier.push(0);
  while (!frontier.empty()) {
    const std::size_t u = frontier.front();
    frontier.pop();
    for (std::size_t v = 0; v < n; ++v) {
      const double p = reverse ? chain[v * n + u] : chain[u * n + v];
      if (p > 0.0 && level[v] == kUnreached) {
        level[v] = level[u] + 1;
        frontier.push(v);
      }
    }
  }
  return level;
}

// Triple chain Z_t = (s_t, a_t, s_{t+1}) restricted to triples of positive
// stationary mass. From a triple ending in s', the next triple is
// (s', a', s'') with probability μ(a'|s') P(s''|s',a').
class TripleChain {
 public:
  TripleChain(const MdpSpec& mdp, const Policy& mu, std::span<const double> stationary)
      : num_states_(mdp.num_states()), outgoing_(mdp.num_states()) {
    for (std::size_t s = 0; s < num_states_; ++s) {
      for (std::size_t a = 0; a < mdp.num_actions(); ++a) {
        const double pa = mu.prob(s, a);
        if (pa <= 0.0) continue;
        const auto row = mdp.transition(s, a);
        for (std::size_t sp = 0; sp < num_states_; ++sp) {
          if (row[sp] <= 0.0) continue;
          outgoing_[s].push_back(first_.size());
          first_.push_back(s);
          last_.push_back(sp);
          weight_.push_back(pa * row[sp]);
          stationary_.push_back(stationary[s] * pa * row[sp]);
        }
      }
    }
  }

  std::size_t size() const { return first_.size(); }

  // max over initial triples of TV(δ_z, ρ).
  double initial_distance() const {
    double min_mass = 1.0;
    for (double r : stationary_) min_mass = std::min(min_mass, r);
    return 1.0 - min_mass;
  }

  // Distinct last states of triples; initial triples sharing a last state
  // have identical laws for every t >= 1.
  std::vector<std::size_t> distinct_last_states() const {
    std::vector<std::size_t> states(last_.begin(), last_.end());
    std::sort(states.begin(), states.end());
    states.erase(std::unique(states.begin(), states.end()), states.end());
    return states;
  }

  // Law of Z_1 given s_1 = state.
  std::vector<double> law_after_one_step(std::size_t state) const {
    std::vector<double> law(size(), 0.0);
    for (std::size_t z : outgoing_[state]) law[z] = weight_[z];
    return law;
  }

  void advance(std::vector<double>& law, std::vector<double>& scratch) const {
    std::vector<double> mass(num_states_, 0.0);
    for (std::size_t z = 0; z < size(); ++z) mass[last_[z]] += law[z];
    scratch.assign(size(), 0.0);
    for (std::size_t s = 0; s < num_states_; ++s) {
      if (mass[s] == 0.0) continue;
      for (std::size_t z : outgoing_[s]) scratch[z] = mass[s] * weight_[z];
    }
    law.swap(scratch);
  }

  double distance(std::span<const double> law) const {
    double total = 0.0;
    for (std::size_t z = 0; z < size(); ++z) total += std::abs(law[z] - stationary_[z]);
    return 0.5 * total;
  }

 private:
  std::size_t num_states_;
  std::vector<std::vector<std::size_t>> outgoing_;
  std::vector<std::size_t> first_;
  std::vector<std::size_t> last_;
  std::vector<double> weight_;
  std::vector<double> stationary_;
};

// Walks d_mix(1), d_mix(2), ... on the triple chain.
class MixingScan {
 public:
  MixingScan(const MdpSpec& mdp, const Policy& mu, std::span<const double> stationary)
      : chain_(mdp, mu, stationary) {
    for (std::size_t s : chain_.distinct_last_states()) laws_.push_back(chain_.law_after_one_step(s));
  }

  double initial_distance() const { return chain_.initial_distance(); }

  // d_mix at the current step (starts at t = 1).
  double distance() const {
    double worst = 0.0;
    for (const auto& law : laws_) worst = std::max(worst, chain_.distance(law));
    return worst;
  }

  void step() {
    for (auto& law : laws_) chain_.advance(law, scratch_);
  }

 private:
  TripleChain chain_;
  std::vector<std::vector<double>> laws_;
  std::vector<double> scratch_;
};

void check_shapes(const MdpSpec& mdp, const Policy& mu, std::span<const double> stationary) {
  if (mu.num_states() != mdp.num_states() || mu.num_actions() != mdp.num_actions()) {
    throw InvalidArgument("policy shape does not match the MDP");
  }
  if (stationary.size() != mdp.num_states()) {
    throw InvalidArgument("stationary distribution has the wrong length");
  }
}

}  // namespace

std::vector<double> policy_state_chain(const MdpSpec& mdp, const Policy& mu) {
  if (mu.num_states() != mdp.num_states() || mu.num_actions() != mdp.num_actions()) {
    throw InvalidArgument("policy shape does not match the MDP");
  }
  const std::size_t n = mdp.num_states();
  std::vector<double> chain(n * n, 0.0);
  for (std::size_t s = 0; s < n; ++s) {
    for (std::size_t a = 0; a < mdp.num_actions(); ++a) {
      const auto row = mdp.transition(s, a);
      for (std::size_t sp = 0; sp < n; ++sp) chain[s * n + sp] += mu.prob(s, a) * row[sp];
    }
  }
  return chain;
}

bool is_irreducible(std::span<const double> chain, std::size_t n) {
  constexpr auto kUnreached = static_cast<std::size_t>(-1);
  const auto forward = bfs_levels(chain, n, false);
  const auto backward = bfs_levels(chain, n, true);
  return std::none_of(forward.begin(), forward.end(), [](std::size_t l) { return l == kUnreached; }) &&
         std::none_of(backward.begin(), backward.end(), [](std::size_t l) { return l == kUnreached; });
}

std::size_t chain_period(std::span<const double> chain, std::size_t n) {
  const auto level = bfs_levels(chain, n, false);
  std::size_t period = 0;
  for (std::size_t u = 0; u < n; ++u) {
    for (std::size_t v = 0; v < n; ++v) {
      if (chain[u * n + v] <= 0.0) continue;
      const auto diff = static_cast<long long>(level[u]) + 1 - static_cast<long long>(level[v]);
      period = std::gcd(period, static_cast<std::size_t>(std::llabs(diff)));
    }
  }
  return period;
}

std::vector<double> stationary_distribution(std::span<const double> chain, std::size_t n) {
  if (chain.size() != n * n || n == 0) {
    throw InvalidArgument("chain must be an n×n matrix");
  }
  // (Pᵀ - I) π = 0 with the last equation replaced by Σ π = 1.
  Eigen::MatrixXd system(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      system(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          chain[j * n + i] - (i == j ? 1.0 : 0.0);
    }
  }
  system.row(static_cast<Eigen::Index>(n - 1)).setOnes();
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
  rhs(static_cast<Eigen::Index>(n - 1)) = 1.0;
  const Eigen::VectorXd pi = system.fullPivLu().solve(rhs);
  if (!pi.allFinite()) {
    throw NumericFailure("stationary system is singular");
  }
  return {pi.data(), pi.data() + pi.size()};
}

std::vector<double> mixing_profile(const MdpSpec& mdp, const Policy& mu,
                                   std::span<const double> stationary, std::int64_t t_max) {
  check_shapes(mdp, mu, stationary);
  if (t_max < 0) {
    throw InvalidArgument("t_max must be non-negative");
  }
  MixingScan scan(mdp, mu, stationary);
  std::vector<double> profile{scan.initial_distance()};
  for (std::int64_t t = 1; t <= t_max; ++t) {
    if (t > 1) scan.step();
    profile.push_back(scan.distance());
  }
  return profile;
}

double mixing_distance(const MdpSpec& mdp, const Policy& mu, std::span<const double> stationary,
                       std::int64_t t) {
  return mixing_profile(mdp, mu, stationary, t).back();
}

std::int64_t mixing_time(const MdpSpec& mdp, const Policy& mu, std::span<const double> stationary,
                         std::int64_t cap) {
  check_shapes(mdp, mu, stationary);
  MixingScan scan(mdp, mu, stationary);
  for (std::int64_t t = 1; t <= cap; ++t) {
    if (t > 1) scan.step();
    if (scan.distance() <= 0.25) return t;
  }
  throw NumericFailure("mixing time exceeds " + std::to_string(cap) +
                       " steps; the chain is close to periodic");
}

ChainAnalysis analyze_chain(const MdpSpec& mdp, const Policy& mu, int ell_max) {
  if (ell_max < 1) {
    throw InvalidArgument("ell_max must be a positive integer");
  }
  const std::size_t n = mdp.num_states();
  const auto chain = policy_state_chain(mdp, mu);
  if (!is_irreducible(chain, n)) {
    throw AssumptionViolated("behavior chain is reducible");
  }
  if (const std::size_t period = chain_period(chain, n); period != 1) {
    throw AssumptionViolated("behavior chain is periodic with period " + std::to_string(period));
  }

  ChainAnalysis out;
  out.stationary = stationary_distribution(chain, n);
  out.stationary_cdf = make_cumulative(out.stationary);
  out.visitation.resize(mdp.num_pairs());
  for (std::size_t s = 0; s < n; ++s) {
    for (std::size_t a = 0; a < mdp.num_actions(); ++a) {
      out.visitation[mdp.pair_index(s, a)] = out.stationary[s] * mu.prob(s, a);
    }
  }
  out.lambda_min = *std::min_element(out.visitation.begin(), out.visitation.end());
  if (!(out.lambda_min > 0.0)) {
    throw AssumptionViolated("some state-action pair has zero visitation probability");
  }
  out.mixing_time = mixing_time(mdp, mu, out.stationary);
  const auto profile = mixing_profile(mdp, mu, out.stationary, ell_max * out.mixing_time);
  for (int ell = 1; ell <= ell_max; ++ell) {
    out.block_profile.push_back(profile[static_cast<std::size_t>(ell * out.mixing_time)]);
  }
  return out;
}

}  // namespace robustq
