#pragma once

// Independent reference computations used by the unit and acceptance tests.

#include <cmath>
#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "robustq/mdp.hpp"
#include "robustq/rng.hpp"

namespace robustq::oracle {

/// Random dense MDP; rows are normalised uniforms, rewards U[-reward_scale, reward_scale].
inline MdpSpec random_mdp(Rng& rng, std::size_t S, std::size_t A, double gamma,
                          double reward_scale = 5.0) {
  std::vector<double> p(S * A * S);
  for (std::size_t k = 0; k < S * A; ++k) {
    double sum = 0.0;
    for (std::size_t j = 0; j < S; ++j) {
      p[k * S + j] = rng.uniform() + 1e-3;
      sum += p[k * S + j];
    }
    for (std::size_t j = 0; j < S; ++j) p[k * S + j] /= sum;
  }
  std::vector<double> r(S * A);
  for (double& x : r) x = reward_scale * (2.0 * rng.uniform() - 1.0);
  return MdpSpec(S, A, std::move(p), std::move(r), std::vector<NoiseSpec>(S * A), gamma);
}

/// Q* by enumerating all |A|^|S| deterministic stationary policies and
/// solving (I - γP_π)V = R_π exactly for each; Q* is the entrywise max of Q^π.
inline QTable brute_force_q_star(const MdpSpec& mdp) {
  const std::size_t S = mdp.num_states();
  const std::size_t A = mdp.num_actions();
  const double g = mdp.gamma();
  std::size_t count = 1;
  for (std::size_t s = 0; s < S; ++s) count *= A;

  QTable best(S, A, -INFINITY);
  std::vector<std::size_t> pick(S, 0);
  for (std::size_t code = 0; code < count; ++code) {
    std::size_t c = code;
    for (std::size_t s = 0; s < S; ++s) {
      pick[s] = c % A;
      c /= A;
    }
    Eigen::MatrixXd M = Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(S), static_cast<Eigen::Index>(S));
    Eigen::VectorXd R(static_cast<Eigen::Index>(S));
    for (std::size_t s = 0; s < S; ++s) {
      const auto row = mdp.transition(s, pick[s]);
      for (std::size_t j = 0; j < S; ++j) {
        M(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(j)) -= g * row[j];
      }
      R(static_cast<Eigen::Index>(s)) = mdp.mean_reward(s, pick[s]);
    }
    const Eigen::VectorXd V = M.partialPivLu().solve(R);
    for (std::size_t s = 0; s < S; ++s) {
      for (std::size_t a = 0; a < A; ++a) {
        const auto row = mdp.transition(s, a);
        double q = mdp.mean_reward(s, a);
        for (std::size_t j = 0; j < S; ++j) q += g * row[j] * V(static_cast<Eigen::Index>(j));
        best(s, a) = std::max(best(s, a), q);
      }
    }
  }
  return best;
}

/// π by power iteration on the state chain (a different method from the
/// linear solve in the library).
inline std::vector<double> power_stationary(const std::vector<double>& P, std::size_t n,
                                            int iterations = 200000) {
  std::vector<double> pi(n, 1.0 / static_cast<double>(n));
  std::vector<double> next(n);
  for (int it = 0; it < iterations; ++it) {
    std::fill(next.begin(), next.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) next[j] += pi[i] * P[i * n + j];
    }
    double diff = 0.0;
    for (std::size_t j = 0; j < n; ++j) diff += std::abs(next[j] - pi[j]);
    pi.swap(next);
    if (diff < 1e-15) break;
  }
  return pi;
}

/// d_mix(t) for t >= 1 via the state chain: from any initial triple
/// (s, a, s'), Z_t's law is that of (s_t, a_t, s_{t+1}) with s_t ~ e_{s'} P^{t-1},
/// and both laws share the (a, s') kernel, so the TV reduces to the state marginal.
inline double state_chain_dmix(const std::vector<double>& P, const std::vector<double>& pi,
                               std::size_t n, long t) {
  double worst = 0.0;
  for (std::size_t start = 0; start < n; ++start) {
    std::vector<double> law(n, 0.0), next(n);
    law[start] = 1.0;
    for (long k = 1; k < t; ++k) {
      std::fill(next.begin(), next.end(), 0.0);
      for (std::size_t i = 0; i < n; ++i) {
        if (law[i] == 0.0) continue;
        for (std::size_t j = 0; j < n; ++j) next[j] += law[i] * P[i * n + j];
      }
      law.swap(next);
    }
    double tv = 0.0;
    for (std::size_t j = 0; j < n; ++j) tv += std::abs(law[j] - pi[j]);
    worst = std::max(worst, 0.5 * tv);
  }
  return worst;
}

/// Two-state, one-action MDP whose only chain is P.
inline MdpSpec two_state_chain(double p01, double p10, double gamma = 0.5) {
  return MdpSpec(2, 1, {1.0 - p01, p01, p10, 1.0 - p10}, {1.0, -1.0}, std::vector<NoiseSpec>(2), gamma);
}

}  // namespace robustq::oracle
