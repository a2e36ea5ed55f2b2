#include "robustq/corruption.hpp"

#include <cctype>
#include <cmath>
#include <string>

#include "robustq/errors.hpp"

namespace robustq {

std::string_view to_string(AttackKind kind) {
  switch (kind) {
    case AttackKind::constant_bias:
      return "constant_bias";
    case AttackKind::scaled_spike:
      return "scaled_spike";
    case AttackKind::sign_flip:
      return "sign_flip";
    case AttackKind::history_dependent:
      return "history_dependent";
  }
  return "constant_bias";
}

AttackKind parse_attack_kind(std::string_view name) {
  if (name == "constant_bias" || name == "constant-bias" || name == "bias") {
    return AttackKind::constant_bias;
  }
  if (name == "scaled_spike" || name == "scaled-spike" || name == "spike") {
    return AttackKind::scaled_spike;
  }
  if (name == "sign_flip" || name == "sign-flip") return AttackKind::sign_flip;
  if (name == "history_dependent" || name == "history-dependent") {
    return AttackKind::history_dependent;
  }
  throw InvalidArgument("unknown attack kind '" + std::string(name) + "'");
}

AttackSpec AttackSpec::constant_bias(double value) {
  if (!std::isfinite(value)) throw InvalidArgument("attack bias must be finite");
  return {AttackKind::constant_bias, value};
}

AttackSpec AttackSpec::scaled_spike(double magnitude) {
  if (!std::isfinite(magnitude)) throw InvalidArgument("spike magnitude must be finite");
  return {AttackKind::scaled_spike, magnitude};
}

AttackSpec AttackSpec::sign_flip() { return {AttackKind::sign_flip, -1.0}; }

AttackSpec AttackSpec::history_dependent(Callback callback) {
  if (!callback) throw InvalidArgument("history-dependent attack needs a callback");
  return {AttackKind::history_dependent, 0.0, std::move(callback)};
}

double AttackSpec::value(const AttackContext& context) const {
  switch (kind_) {
    case AttackKind::constant_bias:
      return parameter_;
    case AttackKind::scaled_spike:
      return parameter_ * context.true_sample;
    case AttackKind::sign_flip:
      return -context.true_sample;
    case AttackKind::history_dependent:
      return callback_(context);
  }
  return parameter_;
}

CorruptionConfig::CorruptionConfig(double epsilon, AttackSpec attack)
    : epsilon_(epsilon), attack_(std::move(attack)) {
  if (!(epsilon_ >= 0.0 && epsilon_ < 0.5)) {
    throw InvalidArgument("corruption fraction must lie in [0, 1/2)");
  }
}

CorruptionConfig CorruptionConfig::clean() { return {0.0, AttackSpec::constant_bias(0.0)}; }

CorruptionChannel::CorruptionChannel(CorruptionConfig config) : config_(std::move(config)) {
  buffer_.reserve(2 * kHistoryCap);
}

CorruptedSample CorruptionChannel::observe(double true_sample, std::size_t state, std::size_t action,
                                           std::int64_t step, Rng& rng) {
  const AttackContext context{history(), state, action, step, true_sample};
  const CorruptedSample out = corrupt(true_sample, config_, context, rng);
  if (buffer_.size() == 2 * kHistoryCap) {
    buffer_.erase(buffer_.begin(), buffer_.begin() + static_cast<std::ptrdiff_t>(kHistoryCap));
  }
  buffer_.push_back(out.observed);
  ++observations_;
  if (out.was_corrupted) ++corrupted_;
  return out;
}

std::span<const double> CorruptionChannel::history() const {
  const std::size_t n = std::min(buffer_.size(), kHistoryCap);
  return {buffer_.data() + (buffer_.size() - n), n};
}

Rational exact_rational(double x) {
  if (!std::isfinite(x)) throw InvalidArgument("cannot convert a non-finite value to a rational");
  if (x == 0.0) return Rational(0);
  int exponent = 0;
  const double mantissa = std::frexp(x, &exponent);
  // mantissa * 2^53 is an integer for every double.
  const auto scaled = static_cast<long long>(std::ldexp(mantissa, 53));
  exponent -= 53;
  Rational r(scaled);
  const boost::multiprecision::cpp_int power = boost::multiprecision::cpp_int(1) << std::abs(exponent);
  if (exponent >= 0) {
    r *= Rational(power);
  } else {
    r /= Rational(power);
  }
  return r;
}

namespace {

Rational parse_decimal(std::string_view text) {
  using boost::multiprecision::cpp_int;
  std::size_t i = 0;
  bool negative = false;
  if (i < text.size() && (text[i] == '+' || text[i] == '-')) {
    negative = text[i] == '-';
    ++i;
  }
  cpp_int mantissa = 0;
  int scale = 0;
  bool digits = false;
  bool fraction = false;
  for (; i < text.size(); ++i) {
    const char c = text[i];
    if (std::isdigit(static_cast<unsigned char>(c))) {
      mantissa = mantissa * 10 + (c - '0');
      digits = true;
      if (fraction) ++scale;
    } else if (c == '.' && !fraction) {
      fraction = true;
    } else {
      break;
    }
  }
  if (!digits) throw InvalidArgument("not a number: '" + std::string(text) + "'");
  if (i < text.size()) {
    if (text[i] != 'e' && text[i] != 'E') {
      throw InvalidArgument("not a number: '" + std::string(text) + "'");
    }
    const std::string exponent_text(text.substr(i + 1));
    std::size_t used = 0;
    int exponent = 0;
    try {
      exponent = std::stoi(exponent_text, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != exponent_text.size() || exponent_text.empty()) {
      throw InvalidArgument("bad exponent in '" + std::string(text) + "'");
    }
    scale -= exponent;
  }
  Rational r(mantissa);
  const cpp_int power = boost::multiprecision::pow(cpp_int(10), static_cast<unsigned>(std::abs(scale)));
  if (scale >= 0) {
    r /= Rational(power);
  } else {
    r *= Rational(power);
  }
  return negative ? Rational(-r) : r;
}

ThreePointPmf make_pmf(double spike, const Rational& low, const Rational& mid, const Rational& high) {
  ThreePointPmf pmf;
  pmf.support = {-spike, 0.0, spike};
  pmf.probs = {low, mid, high};
  return pmf;
}

ThreePointPmf mix(const ThreePointPmf& clean, const ThreePointPmf& attack, const Rational& eps) {
  ThreePointPmf out;
  out.support = clean.support;
  for (std::size_t k = 0; k < 3; ++k) {
    out.probs[k] = (Rational(1) - eps) * clean.probs[k] + eps * attack.probs[k];
  }
  return out;
}

}  // namespace

Rational parse_rational(std::string_view text) {
  if (const auto slash = text.find('/'); slash != std::string_view::npos) {
    const Rational den = parse_decimal(text.substr(slash + 1));
    if (den == 0) throw InvalidArgument("zero denominator in '" + std::string(text) + "'");
    return parse_decimal(text.substr(0, slash)) / den;
  }
  return parse_decimal(text);
}

double to_double(const Rational& r) { return r.convert_to<double>(); }

std::array<double, 3> ThreePointPmf::probabilities() const {
  return {to_double(probs[0]), to_double(probs[1]), to_double(probs[2])};
}

double ThreePointPmf::mean() const {
  const auto p = probabilities();
  return p[0] * support[0] + p[1] * support[1] + p[2] * support[2];
}

double ThreePointPmf::variance() const {
  const auto p = probabilities();
  const double m = mean();
  double v = 0.0;
  for (std::size_t k = 0; k < 3; ++k) v += p[k] * (support[k] - m) * (support[k] - m);
  return v;
}

bool LowerBoundInstance::observed_pmfs_identical() const {
  return observed_pmfs[0].probs == observed_pmfs[1].probs &&
         observed_pmfs[0].support == observed_pmfs[1].support;
}

LowerBoundInstance build_lower_bound_instance(double sigma_bar, const Rational& epsilon,
                                              double gamma) {
  if (!(sigma_bar >= 1.0) || !std::isfinite(sigma_bar)) {
    throw InvalidArgument("sigma_bar must be finite and at least 1");
  }
  if (!(epsilon > 0 && epsilon < Rational(1, 2))) {
    throw InvalidArgument("epsilon must lie in (0, 1/2)");
  }
  if (!(gamma > 0.0 && gamma < 1.0)) {
    throw InvalidArgument("gamma must lie in (0, 1)");
  }

  const double eps = to_double(epsilon);
  const double spike = sigma_bar / std::sqrt(eps);
  // Probability of the spike in each true reward law.
  const Rational q = epsilon / (4 * (Rational(1) - epsilon));
  const Rational quarter(1, 4);
  const Rational half(1, 2);

  const double reward = sigma_bar * std::sqrt(eps) / (4.0 * (1.0 - eps));
  // r = ±spike w.p. q, else 0; as zero-mean noise around R that is
  // ±spike(1-q) w.p. q and ∓spike·q otherwise.
  const double q_value = to_double(q);
  const double jump = spike * (1.0 - q_value);

  LowerBoundInstance out{
      .sigma_bar = sigma_bar,
      .epsilon = epsilon,
      .gamma = gamma,
      .spike = spike,
      .mdp_pair = {MdpSpec(1, 1, {1.0}, {reward}, {NoiseSpec::two_point(jump, q_value)}, gamma,
                           std::nullopt, sigma_bar),
                   MdpSpec(1, 1, {1.0}, {-reward}, {NoiseSpec::two_point(-jump, q_value)}, gamma,
                           std::nullopt, sigma_bar)},
      .reward_pmfs = {},
      .attack_pmfs = {},
      .observed_pmfs = {},
  };
  out.reward_pmfs = {make_pmf(spike, Rational(0), Rational(1) - q, q),
                     make_pmf(spike, q, Rational(1) - q, Rational(0))};
  out.attack_pmfs = {make_pmf(spike, half, quarter, quarter), make_pmf(spike, quarter, quarter, half)};
  for (std::size_t i = 0; i < 2; ++i) {
    out.observed_pmfs[i] = mix(out.reward_pmfs[i], out.attack_pmfs[i], epsilon);
  }

  out.mean_rewards = {reward, -reward};
  out.q_star = {reward / (1.0 - gamma), -reward / (1.0 - gamma)};
  out.q_star_gap = sigma_bar * std::sqrt(eps) / (2.0 * (1.0 - eps) * (1.0 - gamma));
  out.gap_lower_bound = sigma_bar * std::sqrt(eps) / (2.0 * (1.0 - gamma));
  out.variance_bound = sigma_bar * sigma_bar / (4.0 * (1.0 - eps));
  return out;
}

LowerBoundInstance build_lower_bound_instance(double sigma_bar, double epsilon, double gamma) {
  if (!std::isfinite(epsilon)) throw InvalidArgument("epsilon must be finite");
  return build_lower_bound_instance(sigma_bar, exact_rational(epsilon), gamma);
}

}  // namespace robustq
