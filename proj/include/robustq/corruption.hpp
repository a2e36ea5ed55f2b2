#pragma once

#include <array>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "robustq/mdp.hpp"
#include "robustq/rng.hpp"

namespace robustq {

/// What an attack may look at when choosing its disturbance z_t.
struct AttackContext {
  /// Most recent observations on the channel, oldest first (at most 1024).
  std::span<const double> history;
  std::size_t state = 0;
  std::size_t action = 0;
  std::int64_t step = 0;
  double true_sample = 0.0;
};

enum class AttackKind { constant_bias, scaled_spike, sign_flip, history_dependent };

std::string_view to_string(AttackKind kind);
AttackKind parse_attack_kind(std::string_view name);

/// Adversarial distribution 𝒬. Values are never clipped.
///   constant_bias(b)      z = b
///   scaled_spike(m)       z = m · true_sample
///   sign_flip             z = -true_sample
///   history_dependent(f)  z = f(context)
class AttackSpec {
 public:
  using Callback = std::function<double(const AttackContext&)>;

  static AttackSpec constant_bias(double value);
  static AttackSpec scaled_spike(double magnitude);
  static AttackSpec sign_flip();
  static AttackSpec history_dependent(Callback callback);

  AttackKind kind() const { return kind_; }
  double parameter() const { return parameter_; }
  double value(const AttackContext& context) const;

 private:
  AttackSpec(AttackKind kind, double parameter, Callback callback = {})
      : kind_(kind), parameter_(parameter), callback_(std::move(callback)) {}

  AttackKind kind_;
  double parameter_;
  Callback callback_;
};

/// Huber corruption: each observation is replaced by an attack draw with probability ε.
class CorruptionConfig {
 public:
  /// Throws InvalidArgument unless 0 <= epsilon < 1/2.
  CorruptionConfig(double epsilon, AttackSpec attack);

  static CorruptionConfig clean();

  double epsilon() const { return epsilon_; }
  const AttackSpec& attack() const { return attack_; }

 private:
  double epsilon_;
  AttackSpec attack_;
};

struct CorruptedSample {
  double observed;
  /// Outcome of the corruption coin. Diagnostics only; learners never see it.
  bool was_corrupted;
};

template <class G>
concept UnitIntervalSource = requires(G& g) {
  { g.uniform() } -> std::convertible_to<double>;
};

/// y = (1 - Y) r + Y z with Y ~ Bern(ε). The coin is one uniform draw
/// (Y = 1 iff u < ε); the attack value consumes no randomness.
template <UnitIntervalSource G>
CorruptedSample corrupt(double true_sample, const CorruptionConfig& config,
                        const AttackContext& context, G& rng) {
  if (static_cast<double>(rng.uniform()) < config.epsilon()) {
    AttackContext ctx = context;
    ctx.true_sample = true_sample;
    return {config.attack().value(ctx), true};
  }
  return {true_sample, false};
}

/// Per-run corruption channel: owns the observation history handed to
/// history-dependent attacks. One observation out per observation in.
class CorruptionChannel {
 public:
  static constexpr std::size_t kHistoryCap = 1024;

  explicit CorruptionChannel(CorruptionConfig config);

  CorruptedSample observe(double true_sample, std::size_t state, std::size_t action,
                          std::int64_t step, Rng& rng);

  std::span<const double> history() const;
  std::int64_t observations() const { return observations_; }
  std::int64_t corrupted() const { return corrupted_; }
  const CorruptionConfig& config() const { return config_; }

 private:
  CorruptionConfig config_;
  std::vector<double> buffer_;
  std::int64_t observations_ = 0;
  std::int64_t corrupted_ = 0;
};

using Rational = boost::multiprecision::cpp_rational;

/// Exact value of a double (every finite double is a dyadic rational).
Rational exact_rational(double x);
/// Parses "0.04", "1/25" or "4e-2" exactly.
Rational parse_rational(std::string_view text);
double to_double(const Rational& r);

/// PMF on the three points (-σ̄/√ε, 0, +σ̄/√ε).
struct ThreePointPmf {
  std::array<double, 3> support{};
  std::array<Rational, 3> probs;

  std::array<double, 3> probabilities() const;
  double mean() const;
  double variance() const;
};

/// Two single-state, single-action MDPs whose Huber-corrupted reward laws
/// coincide while their optimal values differ by order σ̄√ε/(1-γ).
struct LowerBoundInstance {
  double sigma_bar = 0.0;
  Rational epsilon;
  double gamma = 0.0;
  /// σ̄/√ε
  double spike = 0.0;
  std::pair<MdpSpec, MdpSpec> mdp_pair;
  std::array<ThreePointPmf, 2> reward_pmfs;
  std::array<ThreePointPmf, 2> attack_pmfs;
  std::array<ThreePointPmf, 2> observed_pmfs;
  std::array<double, 2> mean_rewards{};
  std::array<double, 2> q_star{};
  /// |Q₁* - Q₂*| = σ̄√ε / (2(1-ε)(1-γ))
  double q_star_gap = 0.0;
  /// σ̄√ε / (2(1-γ))
  double gap_lower_bound = 0.0;
  /// σ̄²/(4(1-ε)), the closed-form bound on Var(ℛᵢ).
  double variance_bound = 0.0;

  bool observed_pmfs_identical() const;
};

/// Requires σ̄ >= 1, ε in (0, 1/2), γ in (0, 1).
LowerBoundInstance build_lower_bound_instance(double sigma_bar, const Rational& epsilon,
                                              double gamma);
LowerBoundInstance build_lower_bound_instance(double sigma_bar, double epsilon, double gamma);

}  // namespace robustq
