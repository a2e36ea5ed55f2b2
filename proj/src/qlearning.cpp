#include "robustq/qlearning.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>

#include "robustq/errors.hpp"

namespace robustq {

namespace {

// Absorbs rounding in cases where the exact value is an integer.
std::int64_t ceil_tolerant(double x) {
  return static_cast<std::int64_t>(std::ceil(x - 1e-12 * std::max(1.0, std::abs(x))));
}

std::int64_t floor_tolerant(double x) {
  return static_cast<std::int64_t>(std::floor(x + 1e-12 * std::max(1.0, std::abs(x))));
}

void require_positive(double x, const char* what) {
  if (!(x > 0.0) || !std::isfinite(x)) {
    throw InvalidArgument(std::string(what) + " must be positive and finite");
  }
}

}  // namespace

std::int64_t burn_in(double lambda_min, double delta1, std::size_t num_states,
                     std::size_t num_actions, std::int64_t horizon) {
  require_positive(lambda_min, "lambda_min");
  require_positive(delta1, "delta1");
  if (num_states == 0 || num_actions == 0 || horizon <= 0) {
    throw InvalidArgument("burn_in: sizes and horizon must be positive");
  }
  const double log_term = std::log(8.0 * static_cast<double>(num_states) *
                                   static_cast<double>(num_actions) *
                                   static_cast<double>(horizon) / delta1);
  return std::max<std::int64_t>(0, ceil_tolerant((104.0 / (3.0 * lambda_min)) * log_term));
}

std::int64_t block_parameter(std::int64_t tau_bar, std::int64_t horizon, double delta) {
  if (tau_bar <= 0 || horizon <= 0) {
    throw InvalidArgument("block_parameter: tau_bar and horizon must be positive");
  }
  require_positive(delta, "delta");
  const double ell = static_cast<double>(
      ceil_tolerant(std::log(2.0 * static_cast<double>(horizon) / delta) / std::log(2.0)));
  return std::max<std::int64_t>(1, floor_tolerant(ell * static_cast<double>(tau_bar)));
}

double known_delta1(double delta, std::int64_t horizon) {
  if (!(delta > 0.0 && delta < 1.0)) throw InvalidArgument("delta must lie in (0, 1)");
  if (horizon <= 0) throw InvalidArgument("horizon must be positive");
  return delta / (4.0 * static_cast<double>(horizon));
}

double agnostic_delta1(double delta, std::size_t num_states, std::size_t num_actions,
                       std::int64_t horizon, int p) {
  if (!(delta > 0.0 && delta < 1.0)) throw InvalidArgument("delta must lie in (0, 1)");
  if (horizon <= 0 || num_states == 0 || num_actions == 0) {
    throw InvalidArgument("sizes and horizon must be positive");
  }
  if (p < 1) throw InvalidArgument("p must be a positive integer");
  const double log_d1 = 2.0 * std::log(delta) - std::log(512.0) -
                        2.0 * std::log(static_cast<double>(num_states)) -
                        2.0 * std::log(static_cast<double>(num_actions)) -
                        (2.0 * p + 3.0) * std::log(static_cast<double>(horizon));
  const double d1 = std::exp(log_d1);
  if (!std::isnormal(d1)) {
    throw InvalidArgument("agnostic delta1 underflows double precision; lower p or T");
  }
  return d1;
}

ThresholdSchedule ThresholdSchedule::known(double sigma_tilde, std::int64_t burn_in,
                                           double c_const, double lambda_min, double delta1,
                                           double epsilon) {
  ThresholdSchedule g;
  g.variant_ = ThresholdVariant::known;
  g.sigma_tilde_ = sigma_tilde;
  g.burn_in_ = burn_in;
  g.c_const_ = c_const;
  g.lambda_min_ = lambda_min;
  g.delta1_ = delta1;
  g.epsilon_ = epsilon;
  g.validate();
  return g;
}

ThresholdSchedule ThresholdSchedule::agnostic(int p, std::int64_t burn_in, double c_const,
                                              double lambda_min, double delta1, double epsilon) {
  ThresholdSchedule g;
  g.variant_ = ThresholdVariant::agnostic;
  g.p_ = p;
  g.burn_in_ = burn_in;
  g.c_const_ = c_const;
  g.lambda_min_ = lambda_min;
  g.delta1_ = delta1;
  g.epsilon_ = epsilon;
  g.validate();
  return g;
}

void ThresholdSchedule::validate() const {
  if (variant_ == ThresholdVariant::known && !(sigma_tilde_ >= 1.0 && std::isfinite(sigma_tilde_))) {
    throw InvalidArgument("threshold: sigma_tilde must be finite and at least 1");
  }
  if (variant_ == ThresholdVariant::agnostic && p_ < 1) {
    throw InvalidArgument("threshold: p must be a positive integer");
  }
  if (burn_in_ < 0) throw InvalidArgument("threshold: burn-in must be non-negative");
  if (!(c_const_ >= 1.0 && std::isfinite(c_const_))) {
    throw InvalidArgument("threshold: the constant C must be finite and at least 1");
  }
  require_positive(lambda_min_, "threshold: lambda_min");
  if (!(delta1_ > 0.0 && delta1_ < 1.0)) throw InvalidArgument("threshold: delta1 must lie in (0, 1)");
  if (!(epsilon_ >= 0.0 && epsilon_ < 0.5)) {
    throw InvalidArgument("threshold: epsilon must lie in [0, 1/2)");
  }
}

double ThresholdSchedule::scale(std::int64_t t) const {
  if (variant_ == ThresholdVariant::known) return sigma_tilde_;
  return std::pow(static_cast<double>(t), p_);
}

double ThresholdSchedule::value(std::int64_t t) const {
  if (t <= burn_in_) return 0.0;
  const double m = scale(t);
  const double conc =
      std::sqrt(4.0 * std::log(8.0 / delta1_) / (3.0 * lambda_min_ * static_cast<double>(t)));
  return c_const_ * m * (conc + std::sqrt(epsilon_)) + m;
}

StepSize StepSize::constant(double alpha) {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw InvalidArgument("step size must lie in (0, 1]");
  return {Kind::constant, alpha};
}

StepSize StepSize::theory(double lambda_min, double gamma, std::int64_t horizon) {
  require_positive(lambda_min, "lambda_min");
  if (!(gamma > 0.0 && gamma < 1.0)) throw InvalidArgument("gamma must lie in (0, 1)");
  if (horizon < 2) throw InvalidArgument("theory step size needs T >= 2");
  const double t = static_cast<double>(horizon);
  const double alpha = std::log(t) / (lambda_min * (1.0 - gamma) * t);
  if (!(alpha <= 1.0)) {
    throw InvalidArgument("theory step size log T/(lambda_min (1-gamma) T) = " +
                          std::to_string(alpha) + " exceeds 1; increase T");
  }
  return {Kind::constant, alpha};
}

StepSize StepSize::inverse_time(double scale) {
  if (!(scale > 0.0 && scale <= 1.0)) throw InvalidArgument("1/t scale must lie in (0, 1]");
  return {Kind::inverse_time, scale};
}

double StepSize::at(std::int64_t t) const {
  if (kind == Kind::constant) return value;
  return value / static_cast<double>(t + 1);
}

std::string_view to_string(LearnerKind kind) {
  switch (kind) {
    case LearnerKind::vanilla:
      return "vanilla";
    case LearnerKind::robust_q:
      return "robust-q";
    case LearnerKind::robust_raq:
      return "robust-raq";
    case LearnerKind::robust_q_m:
      return "robust-q-m";
    case LearnerKind::robust_raq_m:
      return "robust-raq-m";
  }
  return "vanilla";
}

LearnerKind parse_learner_kind(std::string_view name) {
  std::string key(name);
  std::replace(key.begin(), key.end(), '_', '-');
  std::transform(key.begin(), key.end(), key.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (key == "vanilla" || key == "q") return LearnerKind::vanilla;
  if (key == "robust-q" || key == "robust") return LearnerKind::robust_q;
  if (key == "robust-raq" || key == "raq") return LearnerKind::robust_raq;
  if (key == "robust-q-m") return LearnerKind::robust_q_m;
  if (key == "robust-raq-m" || key == "raq-m") return LearnerKind::robust_raq_m;
  throw InvalidArgument("unknown learner kind '" + std::string(name) + "'");
}

Sampling sampling_for(LearnerKind kind) {
  return kind == LearnerKind::robust_q_m || kind == LearnerKind::robust_raq_m ? Sampling::markov
                                                                                : Sampling::iid;
}

bool uses_agnostic_threshold(LearnerKind kind) {
  return kind == LearnerKind::robust_raq || kind == LearnerKind::robust_raq_m;
}

double LearnerConfig::iterate_bound(double gamma) const {
  if (!threshold) return std::numeric_limits<double>::infinity();
  const double m = threshold->variant() == ThresholdVariant::known
                       ? threshold->sigma_tilde()
                       : std::pow(static_cast<double>(horizon), threshold->p());
  return 3.0 * threshold->c_const() * m / (1.0 - gamma);
}

LearnerConfig configure_learner(const LearnerParams& params, const MdpSpec& mdp,
                                const ChainAnalysis& analysis) {
  if (params.horizon <= 0) throw InvalidArgument("horizon T must be positive");
  if (!(params.delta > 0.0 && params.delta < 1.0)) throw InvalidArgument("delta must lie in (0, 1)");
  if (!(params.epsilon >= 0.0 && params.epsilon < 0.5)) {
    throw InvalidArgument("epsilon must lie in [0, 1/2)");
  }
  if (params.alpha.kind == StepSize::Kind::constant &&
      !(params.alpha.value > 0.0 && params.alpha.value <= 1.0)) {
    throw InvalidArgument("constant step size must lie in (0, 1]");
  }
  if (params.alpha.kind == StepSize::Kind::inverse_time &&
      !(params.alpha.value > 0.0 && params.alpha.value <= 1.0)) {
    throw InvalidArgument("1/t scale must lie in (0, 1]");
  }

  LearnerConfig config;
  config.kind = params.kind;
  config.alpha = params.alpha;
  config.epsilon = params.epsilon;
  config.delta = params.delta;
  config.horizon = params.horizon;

  const Sampling sampling = sampling_for(params.kind);
  if (sampling == Sampling::iid && params.subsample_tau) {
    throw InvalidArgument("subsample_tau only applies to the Markov learners");
  }
  if (sampling == Sampling::markov) {
    if (params.subsample_tau) {
      if (*params.subsample_tau <= 0) throw InvalidArgument("subsample_tau must be positive");
      config.subsample_tau = *params.subsample_tau;
    } else {
      if (analysis.mixing_time <= 0) {
        throw InvalidArgument("Markov learner needs a mixing time or an explicit subsample_tau");
      }
      config.subsample_tau = block_parameter(analysis.mixing_time, params.horizon, params.delta);
    }
  }

  if (params.kind == LearnerKind::vanilla) return config;

  const std::size_t S = mdp.num_states();
  const std::size_t A = mdp.num_actions();
  if (uses_agnostic_threshold(params.kind)) {
    config.delta1 = agnostic_delta1(params.delta, S, A, params.horizon, params.p);
    const std::int64_t tb = burn_in(analysis.lambda_min, config.delta1, S, A, params.horizon);
    config.threshold = ThresholdSchedule::agnostic(params.p, tb, params.c_const, analysis.lambda_min,
                                                   config.delta1, params.epsilon);
  } else {
    config.delta1 = known_delta1(params.delta, params.horizon);
    const std::int64_t tb = burn_in(analysis.lambda_min, config.delta1, S, A, params.horizon);
    const double sigma_tilde = params.sigma_tilde.value_or(mdp.sigma_tilde());
    config.threshold = ThresholdSchedule::known(sigma_tilde, tb, params.c_const,
                                                analysis.lambda_min, config.delta1, params.epsilon);
  }
  return config;
}

void vanilla_q_step(QTable& q, const Observation& obs, double alpha, double gamma) {
  const double target = obs.reward + gamma * q.max_value(obs.next_state);
  double& entry = q(obs.state, obs.action);
  entry = (1.0 - alpha) * entry + alpha * target;
}

LearnerState::LearnerState(std::size_t num_states, std::size_t num_actions)
    : q(num_states, num_actions), buffers(num_states * num_actions) {}

StepDiag robust_step(LearnerState& state, const Observation& obs, const LearnerConfig& config,
                     double gamma) {
  if (!config.threshold) throw InvalidArgument("robust_step needs a threshold schedule");
  const std::int64_t t = state.t;
  RewardBuffer& buffer = state.buffers[obs.state * state.q.num_actions() + obs.action];
  buffer.push(obs.reward);

  StepDiag diag;
  diag.threshold = config.threshold->value(t);
  if (buffer.admits_trim()) {
    diag.robust_estimate = trim(buffer, config.epsilon, config.delta1);
    diag.triggered = !(std::abs(diag.robust_estimate) <= diag.threshold);
  } else {
    diag.triggered = true;
  }
  diag.proxy_reward = diag.triggered ? 0.0 : diag.robust_estimate;

  vanilla_q_step(state.q, {obs.state, obs.action, obs.next_state, diag.proxy_reward},
                 config.alpha.at(t), gamma);
  ++state.t;
  return diag;
}

std::int64_t steady_state_window(std::int64_t horizon) {
  if (horizon <= 0) return 0;
  return (horizon + 99) / 100;
}

double window_mean(std::span<const std::int64_t> steps, std::span<const double> values,
                   std::int64_t horizon, std::int64_t window) {
  if (steps.size() != values.size() || steps.empty()) {
    throw InvalidArgument("window_mean: steps and values must be non-empty and aligned");
  }
  window = std::clamp<std::int64_t>(window, 1, horizon);
  const std::int64_t start = horizon - window;
  double sum = 0.0;
  for (std::size_t i = 0; i < steps.size(); ++i) {
    const std::int64_t lo = std::max(steps[i], start);
    const std::int64_t hi = i + 1 < steps.size() ? steps[i + 1] : horizon;
    if (hi > lo) sum += static_cast<double>(hi - lo) * values[i];
  }
  return sum / static_cast<double>(window);
}

double RunTrace::steady_state_error() const {
  if (errors.empty()) return 0.0;
  return window_mean(steps, errors, horizon, steady_state_window(horizon));
}

double RunTrace::post_burn_in_trigger_rate() const {
  if (updates_after_burn_in == 0) return 0.0;
  return static_cast<double>(triggers_after_burn_in) / static_cast<double>(updates_after_burn_in);
}

std::string config_digest(const LearnerConfig& config, const CorruptionConfig& corruption,
                          Sampling sampling) {
  std::string text;
  auto add = [&](const std::string& key, const std::string& value) {
    text += key;
    text += '=';
    text += value;
    text += ';';
  };
  auto num = [](double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return std::string(buf);
  };
  add("kind", std::string(to_string(config.kind)));
  add("sampling", sampling == Sampling::iid ? "iid" : "markov");
  add("alpha", (config.alpha.kind == StepSize::Kind::constant ? "c" : "inv") + num(config.alpha.value));
  add("eps", num(config.epsilon));
  add("delta", num(config.delta));
  add("T", std::to_string(config.horizon));
  add("delta1", num(config.delta1));
  if (config.threshold) {
    add("burn_in", std::to_string(config.threshold->burn_in()));
    add("C", num(config.threshold->c_const()));
    add("scale", config.threshold->variant() == ThresholdVariant::known
                     ? num(config.threshold->sigma_tilde())
                     : "t^" + std::to_string(config.threshold->p()));
  }
  if (config.subsample_tau) add("tau", std::to_string(*config.subsample_tau));
  add("corruption", num(corruption.epsilon()));
  add("attack", std::string(to_string(corruption.attack().kind())) + num(corruption.attack().parameter()));

  // FNV-1a, 64 bit.
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char out[17];
  std::snprintf(out, sizeof out, "%016llx", static_cast<unsigned long long>(h));
  return out;
}

RunTrace run_learner(const Environment& env, const CorruptionConfig& corruption,
                     const LearnerConfig& config, Sampling sampling, std::uint64_t seed,
                     const RunOptions& options) {
  const MdpSpec& mdp = env.mdp;
  const std::size_t S = mdp.num_states();
  const std::size_t A = mdp.num_actions();
  if (env.policy.num_states() != S || env.policy.num_actions() != A ||
      env.q_star.num_states() != S || env.q_star.num_actions() != A ||
      env.analysis.stationary.size() != S) {
    throw InvalidArgument("run_learner: environment shapes disagree");
  }
  if (config.horizon <= 0) throw InvalidArgument("run_learner: horizon must be positive");
  if (sampling_for(config.kind) == Sampling::markov && sampling != Sampling::markov) {
    throw InvalidArgument("Markov learners need Markov sampling");
  }
  if (sampling == Sampling::markov && !config.subsample_tau) {
    throw InvalidArgument("Markov sampling requires subsample_tau");
  }
  if (config.kind != LearnerKind::vanilla && !config.threshold) {
    throw InvalidArgument("robust learner configured without a threshold");
  }
  if (options.error_stride < 0) throw InvalidArgument("error_stride must be non-negative");

  const std::int64_t T = config.horizon;
  const std::int64_t tau = sampling == Sampling::markov ? *config.subsample_tau : 1;
  const double gamma = mdp.gamma();
  const bool robust = config.kind != LearnerKind::vanilla;

  RunTrace trace;
  trace.seed = seed;
  trace.config_digest = config_digest(config, corruption, sampling);
  trace.kind = config.kind;
  trace.horizon = T;
  trace.burn_in = config.burn_in();
  trace.subsample_tau = tau;
  trace.stride = options.error_stride > 0 ? options.error_stride : tau;
  trace.iterate_bound = config.iterate_bound(gamma);
  trace.pair_visits.assign(S * A, 0);

  const std::size_t rows = static_cast<std::size_t>((T - 1) / trace.stride + 2);
  trace.steps.reserve(rows);
  trace.errors.reserve(rows);
  trace.triggered.reserve(rows);
  trace.accepted.reserve(rows);
  trace.visit_counts.reserve(rows);

  Rng root(seed);
  Rng env_rng = root.split();
  Rng adv_rng = root.split();
  CorruptionChannel channel(corruption);
  LearnerState state(S, A);

  std::size_t current = 0;
  if (sampling == Sampling::markov) current = env_rng.categorical(env.analysis.stationary_cdf);

  for (std::int64_t t = 0; t < T; ++t) {
    const SampleStep step = sampling == Sampling::markov
                                ? sample_step_markov(current, mdp, env.policy, env_rng)
                                : sample_step_iid(mdp, env.policy, env.analysis, env_rng);
    current = step.next_state;
    const std::size_t pair = step.state * A + step.action;
    const std::int64_t visits = ++trace.pair_visits[pair];

    const bool accepted = t % tau == 0;
    bool triggered = false;
    if (accepted) {
      const double r = mdp.sample_reward(step.state, step.action, env_rng);
      const double y = channel.observe(r, step.state, step.action, t, adv_rng).observed;
      const Observation obs{step.state, step.action, step.next_state, y};
      state.t = t;
      if (robust) {
        const StepDiag diag = robust_step(state, obs, config, gamma);
        triggered = diag.triggered;
        if (!(std::abs(diag.proxy_reward) <= diag.threshold)) {
          ++trace.proxy_bound_violations;
          if (options.strict_invariants) {
            throw NumericFailure("proxy reward exceeds the threshold at step " + std::to_string(t));
          }
        }
        if (t > trace.burn_in) {
          ++trace.updates_after_burn_in;
          if (triggered) ++trace.triggers_after_burn_in;
        }
      } else {
        vanilla_q_step(state.q, obs, config.alpha.at(t), gamma);
      }
      ++trace.updates;

      // Only (s,a) moved, so its magnitude decides whether the norm grew.
      const double moved = std::abs(state.q(step.state, step.action));
      if (!std::isfinite(moved)) {
        throw NumericFailure("Q iterate became non-finite at step " + std::to_string(t));
      }
      trace.max_iterate_norm = std::max(trace.max_iterate_norm, moved);
      if (moved > trace.iterate_bound) {
        ++trace.iterate_bound_violations;
        if (options.strict_invariants) {
          throw NumericFailure("iterate bound exceeded at step " + std::to_string(t));
        }
      }
    }

    if (t % trace.stride == 0 || t == T - 1) {
      trace.steps.push_back(t);
      trace.errors.push_back(inf_distance(state.q, env.q_star));
      trace.triggered.push_back(triggered ? 1 : 0);
      trace.accepted.push_back(accepted ? 1 : 0);
      trace.visit_counts.push_back(visits);
    }
  }

  trace.corrupted_observations = channel.corrupted();
  trace.final_q = state.q;
  return trace;
}

}  // namespace robustq
