#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace robustq {

/// Reward history of one state-action pair, split for the trimmed mean.
///
/// Arrivals alternate: the 1st, 3rd, 5th, ... go to half_one (used to place
/// the clipping window), the 2nd, 4th, ... to half_two (averaged). Sorted
/// copies of both halves are kept alongside the arrival-ordered lists.
class RewardBuffer {
 public:
  void push(double value);

  std::span<const double> half_one() const { return half_one_; }
  std::span<const double> half_two() const { return half_two_; }
  std::span<const double> sorted_half_one() const { return sorted_one_; }
  std::span<const double> sorted_half_two() const { return sorted_two_; }

  std::size_t total_count() const { return half_one_.size() + half_two_.size(); }
  bool empty() const { return half_one_.empty(); }
  /// Both halves hold at least one sample.
  bool admits_trim() const { return !half_two_.empty(); }

 private:
  std::vector<double> half_one_;
  std::vector<double> half_two_;
  std::vector<double> sorted_one_;
  std::vector<double> sorted_two_;
};

/// Clipping window chosen from half_one.
struct TrimWindow {
  /// ζ = 8·eps_frac + 24·log(4/δ)/M
  double zeta = 0.0;
  /// 1-based ranks into sorted half_one.
  std::size_t lower_rank = 1;
  std::size_t upper_rank = 1;
  double lower = 0.0;
  double upper = 0.0;
  /// ζ >= 1/2: the window has shrunk to the central order statistics of half_one.
  bool collapsed = false;
};

/// Window of trim_sc. Ranks are floor(ζ·n₁) and ceil((1-ζ)·n₁) clamped into
/// [1, n₁], with n₁ = |half_one|. When ζ >= 1/2 both ends move to the
/// central order statistics (ranks floor((n₁+1)/2) and ceil((n₁+1)/2)).
/// Throws InsufficientData if either half is empty, InvalidArgument if
/// eps_frac ∉ [0, 1/2) or δ ∉ (0, 1).
TrimWindow trim_window(const RewardBuffer& buffer, double eps_frac, double delta);

/// The same window for a given ζ (no eps_frac/δ validation). Throws
/// InsufficientData if either half is empty.
TrimWindow window_for_zeta(const RewardBuffer& buffer, double zeta);

/// Mean over half_two of each value clipped into the window; the window
/// midpoint when collapsed.
double clipped_mean(const RewardBuffer& buffer, const TrimWindow& window);

/// Trimmed mean for a strongly contaminated sample: the mean over half_two
/// of each value clipped into the trim_window. In the collapsed case this
/// is the midpoint of the window, i.e. the median of half_one.
double trim_sc(const RewardBuffer& buffer, double eps_frac, double delta);

/// Parameters trim() hands to trim_sc under Huber contamination.
struct HuberTrimParameters {
  /// ε' = ε + (32/(3M))·log(4/δ)
  double inflated_epsilon = 0.0;
  /// min(0.499, 1.5·ε')
  double eps_frac = 0.0;
  /// δ/2
  double inner_delta = 0.0;
};

HuberTrimParameters huber_trim_parameters(std::size_t total_count, double epsilon, double delta);

/// TRIM[𝒟, ε, δ]: trim_sc with the inflated corruption fraction.
double trim(const RewardBuffer& buffer, double epsilon, double delta);

/// Median over both halves; the lower median for even counts.
/// Throws InsufficientData on an empty buffer.
double median_estimate(const RewardBuffer& buffer);

}  // namespace robustq
