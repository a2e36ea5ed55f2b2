#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "robustq/rng.hpp"

namespace robustq {

enum class NoiseKind { none, gaussian, uniform, two_point };

std::string_view to_string(NoiseKind kind);
NoiseKind parse_noise_kind(std::string_view name);

/// Zero-mean additive reward noise with a closed-form second moment.
class NoiseSpec {
 public:
  NoiseSpec() = default;

  static NoiseSpec none();
  static NoiseSpec gaussian(double sigma);
  static NoiseSpec uniform(double half_width);
  /// `value` with probability `prob`, otherwise -prob*value/(1-prob).
  static NoiseSpec two_point(double value, double prob);

  NoiseKind kind() const { return kind_; }
  /// Constructor arguments in order (empty for `none`).
  std::vector<double> params() const;
  double variance() const;
  double sample(Rng& rng) const;

  friend bool operator==(const NoiseSpec&, const NoiseSpec&) = default;

 private:
  NoiseSpec(NoiseKind kind, double a, double b) : kind_(kind), a_(a), b_(b) {}

  NoiseKind kind_ = NoiseKind::none;
  double a_ = 0.0;
  double b_ = 0.0;
};

/// Finite discounted MDP. Immutable after construction; the constructor
/// enforces every row-stochastic, bound and discount invariant.
///
/// Layouts are row-major: transition is [s][a][s'], rewards and noise are [s][a].
class MdpSpec {
 public:
  /// `reward_bound` (R̄) defaults to max(1, max |R|); `sigma_bound` (σ̄)
  /// defaults to max(1, max noise std). Explicit bounds are checked.
  MdpSpec(std::size_t num_states, std::size_t num_actions, std::vector<double> transition,
          std::vector<double> mean_reward, std::vector<NoiseSpec> noise, double gamma,
          std::optional<double> reward_bound = std::nullopt,
          std::optional<double> sigma_bound = std::nullopt);

  std::size_t num_states() const { return num_states_; }
  std::size_t num_actions() const { return num_actions_; }
  std::size_t num_pairs() const { return num_states_ * num_actions_; }
  std::size_t pair_index(std::size_t s, std::size_t a) const { return s * num_actions_ + a; }
  double gamma() const { return gamma_; }

  std::span<const double> transition(std::size_t s, std::size_t a) const;
  double mean_reward(std::size_t s, std::size_t a) const { return mean_reward_[pair_index(s, a)]; }
  const NoiseSpec& noise(std::size_t s, std::size_t a) const { return noise_[pair_index(s, a)]; }

  std::span<const double> transitions() const { return transition_; }
  std::span<const double> mean_rewards() const { return mean_reward_; }
  std::span<const NoiseSpec> noises() const { return noise_; }

  /// R̄
  double reward_bound() const { return reward_bound_; }
  /// σ̄
  double sigma_bound() const { return sigma_bound_; }
  /// σ̃ = max(R̄, σ̄)
  double sigma_tilde() const;

  std::size_t sample_next_state(std::size_t s, std::size_t a, Rng& rng) const;
  /// R(s,a) + n with n drawn from the pair's noise spec.
  double sample_reward(std::size_t s, std::size_t a, Rng& rng) const;

 private:
  std::size_t num_states_;
  std::size_t num_actions_;
  std::vector<double> transition_;
  std::vector<double> transition_cdf_;
  std::vector<double> mean_reward_;
  std::vector<NoiseSpec> noise_;
  double gamma_;
  double reward_bound_;
  double sigma_bound_;
};

/// Stochastic behavior policy μ(a|s), row-major [s][a].
class Policy {
 public:
  /// Rows must sum to 1 within 1e-12. With `require_full_support` every
  /// entry must also be strictly positive, which λ_min > 0 depends on.
  Policy(std::size_t num_states, std::size_t num_actions, std::vector<double> probs,
         bool require_full_support = true);

  static Policy uniform(std::size_t num_states, std::size_t num_actions);

  std::size_t num_states() const { return num_states_; }
  std::size_t num_actions() const { return num_actions_; }
  double prob(std::size_t s, std::size_t a) const { return probs_[s * num_actions_ + a]; }
  std::span<const double> row(std::size_t s) const;
  std::span<const double> probs() const { return probs_; }
  bool full_support() const;

  std::size_t sample_action(std::size_t s, Rng& rng) const;

 private:
  std::size_t num_states_;
  std::size_t num_actions_;
  std::vector<double> probs_;
  std::vector<double> cdf_;
};

/// Dense |S|×|A| table of action values.
class QTable {
 public:
  QTable() = default;
  QTable(std::size_t num_states, std::size_t num_actions, double fill = 0.0);
  QTable(std::size_t num_states, std::size_t num_actions, std::vector<double> values);

  std::size_t num_states() const { return num_states_; }
  std::size_t num_actions() const { return num_actions_; }

  double& operator()(std::size_t s, std::size_t a) { return values_[s * num_actions_ + a]; }
  double operator()(std::size_t s, std::size_t a) const { return values_[s * num_actions_ + a]; }

  std::span<const double> values() const { return values_; }
  std::span<double> values() { return values_; }
  std::span<const double> row(std::size_t s) const;

  double max_value(std::size_t s) const;
  /// Argmax over actions, ties broken toward the lowest index.
  std::size_t greedy_action(std::size_t s) const;
  std::vector<std::size_t> greedy_policy() const;

  double inf_norm() const;
  bool all_finite() const;

  friend bool operator==(const QTable&, const QTable&) = default;

 private:
  std::size_t num_states_ = 0;
  std::size_t num_actions_ = 0;
  std::vector<double> values_;
};

/// max |a - b| over entries. Throws InvalidArgument on shape mismatch.
double inf_distance(const QTable& a, const QTable& b);

/// (𝒯Q)(s,a) = R(s,a) + γ Σ_{s'} P(s'|s,a) max_{a'} Q(s',a').
QTable bellman_apply(const QTable& q, const MdpSpec& mdp);

/// Iteration cap used by compute_q_star:
/// ceil(log(‖R‖∞ / ((1-γ)² tol)) / log(1/γ)) + 10, floored at 10.
std::size_t value_iteration_cap(const MdpSpec& mdp, double tol);

/// Value iteration from zero until ‖𝒯Q - Q‖∞ ≤ tol·(1-γ), so ‖Q - Q*‖∞ ≤ tol.
/// Throws NumericFailure if the cap is reached first.
QTable compute_q_star(const MdpSpec& mdp, double tol);

/// Prefix sums of a probability vector.
std::vector<double> make_cumulative(std::span<const double> probs);

struct ChainAnalysis {
  /// π over states.
  std::vector<double> stationary;
  /// λ(s,a) = π(s)·μ(a|s), row-major [s][a].
  std::vector<double> visitation;
  double lambda_min = 0.0;
  /// τ̄ of the triple chain Z_t = (s_t, a_t, s_{t+1}).
  std::int64_t mixing_time = 0;
  /// d_mix(ℓ·τ̄) for ℓ = 1..ell_max.
  std::vector<double> block_profile;
  /// Cumulative form of `stationary`, for sampling.
  std::vector<double> stationary_cdf;
};

/// P_μ(s, s') = Σ_a μ(a|s) P(s'|s,a), row-major.
std::vector<double> policy_state_chain(const MdpSpec& mdp, const Policy& mu);

bool is_irreducible(std::span<const double> chain, std::size_t n);
/// Period of an irreducible chain (1 means aperiodic).
std::size_t chain_period(std::span<const double> chain, std::size_t n);

/// Exact stationary distribution: πP = π with one equation replaced by Σπ = 1.
std::vector<double> stationary_distribution(std::span<const double> chain, std::size_t n);

/// Exact d_mix(t) = max over initial triples of TV(law(Z_t | Z_0), ρ) for
/// t = 0..t_max on the triple chain, where ρ(s,a,s') = π(s)μ(a|s)P(s'|s,a).
std::vector<double> mixing_profile(const MdpSpec& mdp, const Policy& mu,
                                   std::span<const double> stationary, std::int64_t t_max);

/// d_mix(t) for a single t.
double mixing_distance(const MdpSpec& mdp, const Policy& mu, std::span<const double> stationary,
                       std::int64_t t);

/// Smallest t with d_mix(t) ≤ 1/4, scanning t = 1, 2, ...
/// Throws NumericFailure beyond `cap` steps.
std::int64_t mixing_time(const MdpSpec& mdp, const Policy& mu, std::span<const double> stationary,
                         std::int64_t cap = 1'000'000);

/// Stationary distribution, visitation map, λ_min and mixing time.
/// Throws AssumptionViolated if the induced chain is reducible or periodic,
/// or if some λ(s,a) is zero.
ChainAnalysis analyze_chain(const MdpSpec& mdp, const Policy& mu, int ell_max = 4);

struct SampleStep {
  std::size_t state;
  std::size_t action;
  std::size_t next_state;
};

/// s ~ π, a ~ μ(·|s), s' ~ P(·|s,a).
SampleStep sample_step_iid(const MdpSpec& mdp, const Policy& mu, const ChainAnalysis& analysis,
                           Rng& rng);

/// As sample_step_iid, but s is the caller-threaded current state.
SampleStep sample_step_markov(std::size_t current_state, const MdpSpec& mdp, const Policy& mu,
                              Rng& rng);

/// Running visit frequencies. An empirical stand-in for λ when the
/// kernel is not available; no finite-sample guarantee is attached.
class EmpiricalVisitation {
 public:
  EmpiricalVisitation(std::size_t num_states, std::size_t num_actions);

  void record(std::size_t s, std::size_t a);
  std::int64_t total() const { return total_; }
  std::int64_t count(std::size_t s, std::size_t a) const { return counts_[s * num_actions_ + a]; }
  std::vector<double> frequencies() const;
  double lambda_min() const;

 private:
  std::size_t num_actions_;
  std::vector<std::int64_t> counts_;
  std::int64_t total_ = 0;
};

}  // namespace robustq
