#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "robustq/corruption.hpp"
#include "robustq/mdp.hpp"
#include "robustq/robust_estimation.hpp"

namespace robustq {

/// One transition as the learner sees it: the reward is the (possibly corrupted) y_t.
struct Observation {
  std::size_t state;
  std::size_t action;
  std::size_t next_state;
  double reward;
};

/// T̄ = ceil((104 / (3 λ_min)) · log(8 |S| |A| T / δ₁)).
std::int64_t burn_in(double lambda_min, double delta1, std::size_t num_states,
                     std::size_t num_actions, std::int64_t horizon);

/// τ = max(1, floor(ℓ · τ̄)) with ℓ = ceil(log(2T/δ) / log 2).
std::int64_t block_parameter(std::int64_t tau_bar, std::int64_t horizon, double delta);

/// δ₁ = δ / (4T), for the known-statistics threshold.
double known_delta1(double delta, std::int64_t horizon);
/// δ₁ = δ² / (512 |S|² |A|² T^(2p+3)), for the reward-agnostic threshold.
/// Evaluated in log space; throws InvalidArgument if it underflows.
double agnostic_delta1(double delta, std::size_t num_states, std::size_t num_actions,
                       std::int64_t horizon, int p);

enum class ThresholdVariant { known, agnostic };

/// Adaptive threshold on robust reward estimates. Zero up to and including
/// the burn-in step; afterwards
///   m · (𝒞 (sqrt(4 log(8/δ₁) / (3 λ_min t)) + sqrt(ε)) + 1)
/// with m = σ̃ (known) or m = t^p (agnostic).
class ThresholdSchedule {
 public:
  static ThresholdSchedule known(double sigma_tilde, std::int64_t burn_in, double c_const,
                                 double lambda_min, double delta1, double epsilon);
  static ThresholdSchedule agnostic(int p, std::int64_t burn_in, double c_const, double lambda_min,
                                    double delta1, double epsilon);

  double value(std::int64_t t) const;
  double operator()(std::int64_t t) const { return value(t); }
  /// σ̃ or t^p.
  double scale(std::int64_t t) const;

  ThresholdVariant variant() const { return variant_; }
  double sigma_tilde() const { return sigma_tilde_; }
  int p() const { return p_; }
  std::int64_t burn_in() const { return burn_in_; }
  double c_const() const { return c_const_; }
  double lambda_min() const { return lambda_min_; }
  double delta1() const { return delta1_; }
  double epsilon() const { return epsilon_; }

 private:
  ThresholdSchedule() = default;
  void validate() const;

  ThresholdVariant variant_ = ThresholdVariant::known;
  double sigma_tilde_ = 1.0;
  int p_ = 1;
  std::int64_t burn_in_ = 0;
  double c_const_ = 1.0;
  double lambda_min_ = 1.0;
  double delta1_ = 0.5;
  double epsilon_ = 0.0;
};

struct StepSize {
  enum class Kind { constant, inverse_time };

  Kind kind = Kind::constant;
  double value = 0.1;

  /// α in (0, 1].
  static StepSize constant(double alpha);
  /// α = log T / (λ_min (1-γ) T), held constant. Must not exceed 1.
  static StepSize theory(double lambda_min, double gamma, std::int64_t horizon);
  /// α_t = scale / (t + 1) for zero-based t.
  static StepSize inverse_time(double scale);

  double at(std::int64_t t) const;
};

enum class LearnerKind { vanilla, robust_q, robust_raq, robust_q_m, robust_raq_m };
enum class Sampling { iid, markov };

std::string_view to_string(LearnerKind kind);
LearnerKind parse_learner_kind(std::string_view name);
Sampling sampling_for(LearnerKind kind);
bool uses_agnostic_threshold(LearnerKind kind);

/// Caller-facing knobs; derived quantities are filled in by configure_learner.
struct LearnerParams {
  LearnerKind kind = LearnerKind::robust_q;
  StepSize alpha = StepSize::constant(0.1);
  /// Corruption fraction handed to TRIM.
  double epsilon = 0.0;
  double delta = 0.05;
  std::int64_t horizon = 0;
  double c_const = 1.0;
  int p = 5;
  /// Defaults to the MDP's σ̃ = max(R̄, σ̄).
  std::optional<double> sigma_tilde;
  /// Markov kinds only; derived from the mixing time when absent.
  std::optional<std::int64_t> subsample_tau;
};

struct LearnerConfig {
  LearnerKind kind = LearnerKind::robust_q;
  StepSize alpha;
  double epsilon = 0.0;
  double delta = 0.05;
  std::int64_t horizon = 0;
  /// Confidence handed to TRIM (0 for vanilla).
  double delta1 = 0.0;
  /// Absent for vanilla.
  std::optional<ThresholdSchedule> threshold;
  std::optional<std::int64_t> subsample_tau;

  std::int64_t burn_in() const { return threshold ? threshold->burn_in() : 0; }
  /// ‖Q_t‖∞ bound: 3𝒞σ̃/(1-γ) (known) or 3𝒞T^p/(1-γ) (agnostic); +inf for vanilla.
  double iterate_bound(double gamma) const;
};

/// Derives δ₁, T̄, the threshold and (for Markov kinds) τ. Throws
/// InvalidArgument on inconsistent input, e.g. a subsample gap on an i.i.d. kind.
LearnerConfig configure_learner(const LearnerParams& params, const MdpSpec& mdp,
                                const ChainAnalysis& analysis);

/// Q(s,a) ← (1-α) Q(s,a) + α (y + γ max_a' Q(s',a')), all other entries unchanged.
void vanilla_q_step(QTable& q, const Observation& obs, double alpha, double gamma);

struct LearnerState {
  LearnerState(std::size_t num_states, std::size_t num_actions);

  QTable q;
  /// One buffer per pair, row-major [s][a].
  std::vector<RewardBuffer> buffers;
  /// Global step index t.
  std::int64_t t = 0;
};

struct StepDiag {
  /// r̄_t; NaN when the buffer cannot be trimmed yet.
  double robust_estimate = std::numeric_limits<double>::quiet_NaN();
  /// r̃_t, the reward the update used.
  double proxy_reward = 0.0;
  double threshold = 0.0;
  bool triggered = false;
};

/// One robust update at step state.t: append y to the pair's buffer,
/// r̄ = TRIM[buffer, ε, δ₁], r̃ = 0 if the buffer is not trimmable or
/// |r̄| > threshold(t), else r̄; then the Q update with r̃. Advances state.t.
StepDiag robust_step(LearnerState& state, const Observation& obs, const LearnerConfig& config,
                     double gamma);

/// Everything a run reads but never mutates.
struct Environment {
  const MdpSpec& mdp;
  const Policy& policy;
  const ChainAnalysis& analysis;
  const QTable& q_star;
};

struct RunOptions {
  /// Record E_t every `error_stride` steps. 0 picks 1 for i.i.d. runs and τ
  /// for Markov runs (E_t only changes on accepted steps there).
  std::int64_t error_stride = 0;
  /// Throw NumericFailure the moment a boundedness check fails.
  bool strict_invariants = false;
};

/// Per-step record of one run. Row i describes step steps[i]; with a stride
/// above 1 each recorded value stands for the steps up to the next row.
struct RunTrace {
  std::uint64_t seed = 0;
  std::string config_digest;
  LearnerKind kind = LearnerKind::vanilla;
  std::int64_t horizon = 0;
  std::int64_t burn_in = 0;
  std::int64_t stride = 1;
  std::int64_t subsample_tau = 1;

  std::vector<std::int64_t> steps;
  /// E_t = ‖Q_{t+1} - Q*‖∞ after the step-t update.
  std::vector<double> errors;
  std::vector<std::uint8_t> triggered;
  std::vector<std::uint8_t> accepted;
  /// Visits of (s_t, a_t) up to and including step t.
  std::vector<std::int64_t> visit_counts;

  std::int64_t updates = 0;
  std::int64_t updates_after_burn_in = 0;
  std::int64_t triggers_after_burn_in = 0;
  std::int64_t corrupted_observations = 0;

  double iterate_bound = std::numeric_limits<double>::infinity();
  double max_iterate_norm = 0.0;
  std::int64_t iterate_bound_violations = 0;
  std::int64_t proxy_bound_violations = 0;

  QTable final_q;
  std::vector<std::int64_t> pair_visits;

  double final_error() const { return errors.empty() ? 0.0 : errors.back(); }
  /// Mean of E_t over the final ceil(T/100) steps.
  double steady_state_error() const;
  /// Fraction of updates with t > T̄ whose estimate was discarded.
  double post_burn_in_trigger_rate() const;
};

/// Number of steps in the steady-state window: ceil(T / 100).
std::int64_t steady_state_window(std::int64_t horizon);

/// Mean over steps [T - window, T) of a piecewise-constant series whose
/// value at steps[i] holds until steps[i+1].
double window_mean(std::span<const std::int64_t> steps, std::span<const double> values,
                   std::int64_t horizon, std::int64_t window);

std::string config_digest(const LearnerConfig& config, const CorruptionConfig& corruption,
                          Sampling sampling);

/// Runs T environment steps. Under Markov sampling only steps with
/// t mod τ = 0 touch the buffers and Q; the others advance the chain.
/// The seed is split into an environment stream and a corruption stream.
RunTrace run_learner(const Environment& env, const CorruptionConfig& corruption,
                     const LearnerConfig& config, Sampling sampling, std::uint64_t seed,
                     const RunOptions& options = {});

}  // namespace robustq
