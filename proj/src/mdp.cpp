#include "robustq/mdp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <string>

#include "robustq/errors.hpp"

namespace robustq {

namespace {

constexpr double kRowTolerance = 1e-12;

void check_distribution(std::span<const double> row, bool strictly_positive, const char* what) {
  double total = 0.0;
  for (double p : row) {
    if (!std::isfinite(p) || p < 0.0 || (strictly_positive && p <= 0.0)) {
      throw InvalidArgument(std::string(what) + ": entries must be " +
                            (strictly_positive ? "strictly positive" : "non-negative"));
    }
    total += p;
  }
  if (std::abs(total - 1.0) > kRowTolerance) {
    std::ostringstream msg;
    msg.precision(17);
    msg << what << ": row sums to " << total << ", expected 1";
    throw InvalidArgument(msg.str());
  }
}

}  // namespace

std::string_view to_string(NoiseKind kind) {
  switch (kind) {
    case NoiseKind::none:
      return "none";
    case NoiseKind::gaussian:
      return "gaussian";
    case NoiseKind::uniform:
      return "uniform";
    case NoiseKind::two_point:
      return "two_point";
  }
  return "none";
}

NoiseKind parse_noise_kind(std::string_view name) {
  if (name == "none") return NoiseKind::none;
  if (name == "gaussian") return NoiseKind::gaussian;
  if (name == "uniform") return NoiseKind::uniform;
  if (name == "two_point" || name == "two-point" || name == "two-point-heavy-tail") {
    return NoiseKind::two_point;
  }
  throw InvalidArgument("unknown noise kind '" + std::string(name) + "'");
}

NoiseSpec NoiseSpec::none() { return {}; }

NoiseSpec NoiseSpec::gaussian(double sigma) {
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) {
    throw InvalidArgument("gaussian noise: sigma must be finite and non-negative");
  }
  return {NoiseKind::gaussian, sigma, 0.0};
}

NoiseSpec NoiseSpec::uniform(double half_width) {
  if (!(half_width >= 0.0) || !std::isfinite(half_width)) {
    throw InvalidArgument("uniform noise: half-width must be finite and non-negative");
  }
  return {NoiseKind::uniform, half_width, 0.0};
}

NoiseSpec NoiseSpec::two_point(double value, double prob) {
  if (!std::isfinite(value) || !(prob > 0.0 && prob < 1.0)) {
    throw InvalidArgument("two-point noise: value must be finite and prob in (0,1)");
  }
  return {NoiseKind::two_point, value, prob};
}

std::vector<double> NoiseSpec::params() const {
  switch (kind_) {
    case NoiseKind::none:
      return {};
    case NoiseKind::gaussian:
    case NoiseKind::uniform:
      return {a_};
    case NoiseKind::two_point:
      return {a_, b_};
  }
  return {};
}

double NoiseSpec::variance() const {
  switch (kind_) {
    case NoiseKind::none:
      return 0.0;
    case NoiseKind::gaussian:
      return a_ * a_;
    case NoiseKind::uniform:
      return a_ * a_ / 3.0;
    case NoiseKind::two_point:
      return b_ * a_ * a_ / (1.0 - b_);
  }
  return 0.0;
}

double NoiseSpec::sample(Rng& rng) const {
  switch (kind_) {
    case NoiseKind::none:
      return 0.0;
    case NoiseKind::gaussian:
      return a_ * rng.normal();
    case NoiseKind::uniform:
      return a_ * (2.0 * rng.uniform() - 1.0);
    case NoiseKind::two_point:
      return rng.uniform() < b_ ? a_ : -b_ * a_ / (1.0 - b_);
  }
  return 0.0;
}

std::vector<double> make_cumulative(std::span<const double> probs) {
  std::vector<double> cdf(probs.size());
  std::partial_sum(probs.begin(), probs.end(), cdf.begin());
  return cdf;
}

MdpSpec::MdpSpec(std::size_t num_states, std::size_t num_actions, std::vector<double> transition,
                 std::vector<double> mean_reward, std::vector<NoiseSpec> noise, double gamma,
                 std::optional<double> reward_bound, std::optional<double> sigma_bound)
    : num_states_(num_states),
      num_actions_(num_actions),
      transition_(std::move(transition)),
      mean_reward_(std::move(mean_reward)),
      noise_(std::move(noise)),
      gamma_(gamma) {
  if (num_states_ == 0 || num_actions_ == 0) {
    throw InvalidArgument("MDP needs at least one state and one action");
  }
  const std::size_t pairs = num_states_ * num_actions_;
  if (transition_.size() != pairs * num_states_) {
    throw InvalidArgument("transition kernel must have |S|*|A|*|S| entries");
  }
  if (mean_reward_.size() != pairs) {
    throw InvalidArgument("mean reward table must have |S|*|A| entries");
  }
  if (noise_.size() != pairs) {
    throw InvalidArgument("noise table must have |S|*|A| entries");
  }
  if (!(gamma_ > 0.0 && gamma_ < 1.0)) {
    throw InvalidArgument("gamma must lie strictly inside (0,1)");
  }

  transition_cdf_.resize(transition_.size());
  for (std::size_t p = 0; p < pairs; ++p) {
    const std::span<const double> row(transition_.data() + p * num_states_, num_states_);
    check_distribution(row, false, "transition");
    std::partial_sum(row.begin(), row.end(), transition_cdf_.begin() + p * num_states_);
  }

  double max_reward = 0.0;
  double max_variance = 0.0;
  for (std::size_t p = 0; p < pairs; ++p) {
    if (!std::isfinite(mean_reward_[p])) {
      throw InvalidArgument("mean rewards must be finite");
    }
    max_reward = std::max(max_reward, std::abs(mean_reward_[p]));
    max_variance = std::max(max_variance, noise_[p].variance());
  }
  reward_bound_ = reward_bound.value_or(std::max(1.0, max_reward));
  sigma_bound_ = sigma_bound.value_or(std::max(1.0, std::sqrt(max_variance)));
  if (!(reward_bound_ >= max_reward) || !std::isfinite(reward_bound_)) {
    throw InvalidArgument("a mean reward exceeds the declared reward bound");
  }
  if (!(sigma_bound_ * sigma_bound_ * (1.0 + 1e-12) >= max_variance) ||
      !std::isfinite(sigma_bound_)) {
    throw InvalidArgument("a noise variance exceeds the declared sigma bound");
  }
}

std::span<const double> MdpSpec::transition(std::size_t s, std::size_t a) const {
  return {transition_.data() + pair_index(s, a) * num_states_, num_states_};
}

double MdpSpec::sigma_tilde() const { return std::max(reward_bound_, sigma_bound_); }

std::size_t MdpSpec::sample_next_state(std::size_t s, std::size_t a, Rng& rng) const {
  const std::span<const double> cdf(transition_cdf_.data() + pair_index(s, a) * num_states_,
                                     num_states_);
  return rng.categorical(cdf);
}

double MdpSpec::sample_reward(std::size_t s, std::size_t a, Rng& rng) const {
  const std::size_t p = pair_index(s, a);
  return mean_reward_[p] + noise_[p].sample(rng);
}

Policy::Policy(std::size_t num_states, std::size_t num_actions, std::vector<double> probs,
               bool require_full_support)
    : num_states_(num_states), num_actions_(num_actions), probs_(std::move(probs)) {
  if (num_states_ == 0 || num_actions_ == 0 || probs_.size() != num_states_ * num_actions_) {
    throw InvalidArgument("policy must have |S|*|A| entries");
  }
  cdf_.resize(probs_.size());
  for (std::size_t s = 0; s < num_states_; ++s) {
    const auto r = row(s);
    check_distribution(r, require_full_support, "policy");
    std::partial_sum(r.begin(), r.end(), cdf_.begin() + s * num_actions_);
  }
}

Policy Policy::uniform(std::size_t num_states, std::size_t num_actions) {
  return {num_states, num_actions,
          std::vector<double>(num_states * num_actions, 1.0 / static_cast<double>(num_actions))};
}

std::span<const double> Policy::row(std::size_t s) const {
  return {probs_.data() + s * num_actions_, num_actions_};
}

bool Policy::full_support() const {
  return std::all_of(probs_.begin(), probs_.end(), [](double p) { return p > 0.0; });
}

std::size_t Policy::sample_action(std::size_t s, Rng& rng) const {
  return rng.categorical({cdf_.data() + s * num_actions_, num_actions_});
}

QTable::QTable(std::size_t num_states, std::size_t num_actions, double fill)
    : num_states_(num_states), num_actions_(num_actions), values_(num_states * num_actions, fill) {}

QTable::QTable(std::size_t num_states, std::size_t num_actions, std::vector<double> values)
    : num_states_(num_states), num_actions_(num_actions), values_(std::move(values)) {
  if (values_.size() != num_states_ * num_actions_) {
    throw InvalidArgument("Q-table values must have |S|*|A| entries");
  }
}

std::span<const double> QTable::row(std::size_t s) const {
  return {values_.data() + s * num_actions_, num_actions_};
}

double QTable::max_value(std::size_t s) const {
  const auto r = row(s);
  return *std::max_element(r.begin(), r.end());
}

std::size_t QTable::greedy_action(std::size_t s) const {
  const auto r = row(s);
  // max_element returns the first maximum, i.e. the lowest index on ties.
  return static_cast<std::size_t>(std::max_element(r.begin(), r.end()) - r.begin());
}

std::vector<std::size_t> QTable::greedy_policy() const {
  std::vector<std::size_t> actions(num_states_);
  for (std::size_t s = 0; s < num_states_; ++s) {
    actions[s] = greedy_action(s);
  }
  return actions;
}

double QTable::inf_norm() const {
  double m = 0.0;
  for (double v : values_) {
    m = std::max(m, std::abs(v));
  }
  return m;
}

bool QTable::all_finite() const {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

double inf_distance(const QTable& a, const QTable& b) {
  if (a.num_states() != b.num_states() || a.num_actions() != b.num_actions()) {
    throw InvalidArgument("Q-table shapes differ");
  }
  const auto va = a.values();
  const auto vb = b.values();
  double m = 0.0;
  for (std::size_t i = 0; i < va.size(); ++i) {
    m = std::max(m, std::abs(va[i] - vb[i]));
  }
  return m;
}

QTable bellman_apply(const QTable& q, const MdpSpec& mdp) {
  if (q.num_states() != mdp.num_states() || q.num_actions() != mdp.num_actions()) {
    throw InvalidArgument("Q-table shape does not match the MDP");
  }
  const std::size_t n = mdp.num_states();
  std::vector<double> next_value(n);
  for (std::size_t s = 0; s < n; ++s) {
    next_value[s] = q.max_value(s);
  }
  QTable out(n, mdp.num_actions());
  for (std::size_t s = 0; s < n; ++s) {
    for (std::size_t a = 0; a < mdp.num_actions(); ++a) {
      const auto row = mdp.transition(s, a);
      double expectation = 0.0;
      for (std::size_t sp = 0; sp < n; ++sp) {
        expectation += row[sp] * next_value[sp];
      }
      out(s, a) = mdp.mean_reward(s, a) + mdp.gamma() * expectation;
    }
  }
  return out;
}

std::size_t value_iteration_cap(const MdpSpec& mdp, double tol) {
  double reward_norm = 0.0;
  for (double r : mdp.mean_rewards()) {
    reward_norm = std::max(reward_norm, std::abs(r));
  }
  const double gamma = mdp.gamma();
  if (reward_norm == 0.0) {
    return 10;
  }
  const double ratio = reward_norm / ((1.0 - gamma) * (1.0 - gamma) * tol);
  const double iterations = std::max(0.0, std::ceil(std::log(ratio) / std::log(1.0 / gamma)));
  return static_cast<std::size_t>(iterations) + 10;
}

QTable compute_q_star(const MdpSpec& mdp, double tol) {
  if (!(tol > 0.0) || !std::isfinite(tol)) {
    throw InvalidArgument("tolerance must be positive");
  }
  const double target = tol * (1.0 - mdp.gamma());
  const std::size_t cap = value_iteration_cap(mdp, tol);
  QTable q(mdp.num_states(), mdp.num_actions());
  for (std::size_t k = 0; k <= cap; ++k) {
    QTable next = bellman_apply(q, mdp);
    if (inf_distance(next, q) <= target) {
      return q;
    }
    q = std::move(next);
  }
  throw NumericFailure("value iteration did not reach tolerance within " + std::to_string(cap) +
                       " iterations");
}

SampleStep sample_step_iid(const MdpSpec& mdp, const Policy& mu, const ChainAnalysis& analysis,
                           Rng& rng) {
  const std::size_t s = rng.categorical(analysis.stationary_cdf);
  const std::size_t a = mu.sample_action(s, rng);
  return {s, a, mdp.sample_next_state(s, a, rng)};
}

SampleStep sample_step_markov(std::size_t current_state, const MdpSpec& mdp, const Policy& mu,
                              Rng& rng) {
  const std::size_t a = mu.sample_action(current_state, rng);
  return {current_state, a, mdp.sample_next_state(current_state, a, rng)};
}

EmpiricalVisitation::EmpiricalVisitation(std::size_t num_states, std::size_t num_actions)
    : num_actions_(num_actions), counts_(num_states * num_actions, 0) {}

void EmpiricalVisitation::record(std::size_t s, std::size_t a) {
  ++counts_[s * num_actions_ + a];
  ++total_;
}

std::vector<double> EmpiricalVisitation::frequencies() const {
  std::vector<double> out(counts_.size(), 0.0);
  if (total_ == 0) {
    return out;
  }
  for (std::size_t i = 0; i < counts_.size(); ++i) {
    out[i] = static_cast<double>(counts_[i]) / static_cast<double>(total_);
  }
  return out;
}

double EmpiricalVisitation::lambda_min() const {
  const auto f = frequencies();
  return *std::min_element(f.begin(), f.end());
}

}  // namespace robustq
