#include "robustq/robust_estimation.hpp"

#include <algorithm>
#include <cmath>

#include "robustq/errors.hpp"

namespace robustq {

namespace {

void insert_sorted(std::vector<double>& sorted, double value) {
  sorted.insert(std::upper_bound(sorted.begin(), sorted.end(), value), value);
}

std::size_t clamp_rank(double rank, std::size_t n) {
  if (!(rank >= 1.0)) return 1;
  if (rank >= static_cast<double>(n)) return n;
  return static_cast<std::size_t>(rank);
}

}  // namespace

void RewardBuffer::push(double value) {
  if (half_one_.size() == half_two_.size()) {
    half_one_.push_back(value);
    insert_sorted(sorted_one_, value);
  } else {
    half_two_.push_back(value);
    insert_sorted(sorted_two_, value);
  }
}

TrimWindow trim_window(const RewardBuffer& buffer, double eps_frac, double delta) {
  if (!(eps_frac >= 0.0 && eps_frac < 0.5)) {
    throw InvalidArgument("trim_sc: corruption fraction must lie in [0, 1/2)");
  }
  if (!(delta > 0.0 && delta < 1.0)) {
    throw InvalidArgument("trim_sc: delta must lie in (0, 1)");
  }
  if (!buffer.admits_trim()) {
    throw InsufficientData("trim_sc: both halves of the buffer need at least one sample");
  }

  const auto total = static_cast<double>(buffer.total_count());
  return window_for_zeta(buffer, 8.0 * eps_frac + 24.0 * std::log(4.0 / delta) / total);
}

TrimWindow window_for_zeta(const RewardBuffer& buffer, double zeta) {
  if (!buffer.admits_trim()) {
    throw InsufficientData("trim_sc: both halves of the buffer need at least one sample");
  }
  const auto sorted = buffer.sorted_half_one();
  const std::size_t n1 = sorted.size();

  TrimWindow w;
  w.zeta = zeta;
  if (w.zeta < 0.5) {
    w.lower_rank = clamp_rank(std::floor(w.zeta * static_cast<double>(n1)), n1);
    w.upper_rank = clamp_rank(std::ceil((1.0 - w.zeta) * static_cast<double>(n1)), n1);
  } else {
    w.collapsed = true;
    w.lower_rank = (n1 + 1) / 2;
    w.upper_rank = n1 / 2 + 1;
  }
  w.lower = sorted[w.lower_rank - 1];
  w.upper = sorted[w.upper_rank - 1];
  return w;
}

double clipped_mean(const RewardBuffer& buffer, const TrimWindow& w) {
  if (w.collapsed) {
    return 0.5 * (w.lower + w.upper);
  }
  // half_two is sorted, so clipping only touches its two tails.
  const auto values = buffer.sorted_half_two();
  if (values.empty()) throw InsufficientData("trim_sc: half_two is empty");
  const auto first_inside = std::lower_bound(values.begin(), values.end(), w.lower);
  const auto first_above = std::upper_bound(first_inside, values.end(), w.upper);
  double sum = static_cast<double>(first_inside - values.begin()) * w.lower;
  for (auto it = first_inside; it != first_above; ++it) sum += *it;
  sum += static_cast<double>(values.end() - first_above) * w.upper;
  return sum / static_cast<double>(values.size());
}

double trim_sc(const RewardBuffer& buffer, double eps_frac, double delta) {
  return clipped_mean(buffer, trim_window(buffer, eps_frac, delta));
}

HuberTrimParameters huber_trim_parameters(std::size_t total_count, double epsilon, double delta) {
  if (!(epsilon >= 0.0 && epsilon < 0.5)) {
    throw InvalidArgument("trim: corruption fraction must lie in [0, 1/2)");
  }
  if (!(delta > 0.0 && delta < 1.0)) {
    throw InvalidArgument("trim: delta must lie in (0, 1)");
  }
  if (total_count == 0) {
    throw InsufficientData("trim: empty buffer");
  }
  HuberTrimParameters p;
  p.inflated_epsilon =
      epsilon + (32.0 / (3.0 * static_cast<double>(total_count))) * std::log(4.0 / delta);
  p.eps_frac = std::min(0.499, 1.5 * p.inflated_epsilon);
  p.inner_delta = delta / 2.0;
  return p;
}

double trim(const RewardBuffer& buffer, double epsilon, double delta) {
  const HuberTrimParameters p = huber_trim_parameters(buffer.total_count(), epsilon, delta);
  return trim_sc(buffer, p.eps_frac, p.inner_delta);
}

double median_estimate(const RewardBuffer& buffer) {
  const std::size_t n = buffer.total_count();
  if (n == 0) {
    throw InsufficientData("median of an empty buffer");
  }
  const auto a = buffer.sorted_half_one();
  const auto b = buffer.sorted_half_two();
  // Lower median: the element of 0-based rank (n-1)/2 in the merged order.
  std::size_t k = (n - 1) / 2;
  std::size_t i = 0;
  std::size_t j = 0;
  while (true) {
    const bool take_a = j == b.size() || (i < a.size() && a[i] <= b[j]);
    const double v = take_a ? a[i++] : b[j++];
    if (k == 0) return v;
    --k;
  }
}

}  // namespace robustq
