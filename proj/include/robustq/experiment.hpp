#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "robustq/corruption.hpp"
#include "robustq/grid_world.hpp"
#include "robustq/mdp.hpp"
#include "robustq/qlearning.hpp"

namespace robustq {

struct MdpSource {
  enum class Kind { grid, file, inline_doc };

  Kind kind = Kind::grid;
  GridWorldOptions grid;
  /// Kind::file
  std::filesystem::path path;
  /// Kind::inline_doc, an MDP document as read by mdp_from_json.
  nlohmann::json doc;
};

/// "0.1" (constant), "theory" (log T/(λ_min(1-γ)T)), "1/t" or "0.001/t".
struct AlphaRule {
  enum class Kind { constant, theory, inverse_time };

  Kind kind = Kind::constant;
  /// α for constant, the numerator for 1/t; unused for theory.
  double value = 0.1;

  static AlphaRule parse(std::string_view text);
  std::string to_string() const;
  StepSize resolve(double lambda_min, double gamma, std::int64_t horizon) const;
};

/// Config file keys (JSON), all optional:
///
///   name, learner, horizon, seeds, master_seed, jobs, alpha, delta,
///   c_const, p, sigma_tilde, subsample_tau, learner_epsilon, error_stride,
///   mdp:        {"generator": "grid25", "seed", "noise_variance", "slip", "gamma"}
///             | {"file": "path.json"} | {"inline": {...MDP document...}},
///   policy:     [[μ(a|s), ...], ...],
///   corruption: {"epsilon", "attack": "constant_bias", "value"},
///   output:     {"csv": "path", "svg": "path"}
struct ExperimentConfig {
  std::string name = "run";
  MdpSource mdp;
  /// Row-major μ. Defaults to the MDP document's policy, else uniform.
  std::optional<std::vector<double>> policy;
  LearnerKind learner = LearnerKind::robust_q;
  double epsilon = 0.0;
  AttackKind attack = AttackKind::constant_bias;
  double attack_value = -1e4;
  /// ε handed to TRIM and the threshold; defaults to `epsilon`.
  std::optional<double> learner_epsilon;
  std::int64_t horizon = 250000;
  int seeds = 50;
  std::uint64_t master_seed = 1;
  AlphaRule alpha;
  double delta = 0.05;
  double c_const = 1.0;
  int p = 5;
  std::optional<double> sigma_tilde;
  std::optional<std::int64_t> subsample_tau;
  std::int64_t error_stride = 0;
  int jobs = 1;
  std::optional<std::filesystem::path> csv_path;
  std::optional<std::filesystem::path> svg_path;

  /// Throws InvalidArgument on out-of-range or inconsistent settings.
  void validate() const;
  CorruptionConfig corruption() const;
};

/// Relative paths in the document resolve against `base_dir`.
ExperimentConfig experiment_config_from_json(const nlohmann::json& doc,
                                             const std::filesystem::path& base_dir = {});
nlohmann::json experiment_config_to_json(const ExperimentConfig& config);
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

struct PreparedEnvironment {
  MdpSpec mdp;
  Policy policy;
  ChainAnalysis analysis;
  QTable q_star;

  Environment view() const { return {mdp, policy, analysis, q_star}; }
};

/// Builds the MDP and policy, checks the chain assumptions and solves for Q*.
PreparedEnvironment prepare_environment(const MdpSource& source,
                                        const std::optional<std::vector<double>>& policy = {},
                                        double q_star_tol = 1e-10);

LearnerConfig learner_config_for(const ExperimentConfig& config, const PreparedEnvironment& env);

struct AggregateResult {
  std::string name;
  std::string config_digest;
  LearnerKind learner = LearnerKind::vanilla;
  double epsilon = 0.0;
  std::int64_t horizon = 0;
  std::int64_t burn_in = 0;
  std::int64_t subsample_tau = 1;
  double iterate_bound = 0.0;

  std::vector<std::int64_t> steps;
  std::vector<double> mean_error;
  std::vector<double> min_error;
  std::vector<double> max_error;
  /// Fraction of seeds whose update at this step was thresholded.
  std::vector<double> trigger_rate;

  std::vector<std::uint64_t> seeds;
  std::vector<double> final_errors;
  std::vector<double> steady_state_errors;
  std::vector<double> trigger_rates;

  /// Mean E_t (across seeds) over the final ceil(T/100) steps.
  double steady_state_error = 0.0;
  /// Per-seed post-burn-in trigger rates, averaged.
  double post_burn_in_trigger_rate = 0.0;
  std::int64_t updates_per_seed = 0;
  std::int64_t iterate_bound_violations = 0;
  std::int64_t proxy_bound_violations = 0;
  double max_iterate_norm = 0.0;
};

/// Folds traces in the order they are added. Callers add them in seed
/// order so the floating-point sums do not depend on thread timing.
class Aggregator {
 public:
  void add(const RunTrace& trace);
  AggregateResult finish(std::string name, double epsilon) &&;
  std::size_t count() const { return result_.seeds.size(); }

 private:
  AggregateResult result_;
  std::vector<double> error_sum_;
  std::vector<std::int64_t> trigger_count_;
  double trigger_rate_sum_ = 0.0;
};

/// Per-run seed i is derive_seed(master_seed, i). Up to `jobs` seeds run at
/// once; their traces are folded in seed order after each batch. Progress
/// lines go to `log` when given.
AggregateResult run_experiment(const ExperimentConfig& config, const PreparedEnvironment& env,
                               std::ostream* log = nullptr);
/// Prepares the environment, runs, and writes the configured CSV/SVG.
AggregateResult run_experiment(const ExperimentConfig& config, std::ostream* log = nullptr);

void write_artifacts(const ExperimentConfig& config, const AggregateResult& result);

struct SuiteOptions {
  std::filesystem::path out_dir = "suite_out";
  std::int64_t horizon = 250000;
  /// Horizon of the Markov-sampled runs (experiments 2 and 4).
  std::int64_t markov_horizon = 25'000'000;
  int seeds = 50;
  int jobs = 1;
  std::uint64_t master_seed = 1;
  std::uint64_t grid_seed = 0;
  double attack_bias = -1e4;
  bool svg = true;
  /// Subset of {1, 2, 3, 4}; empty runs all.
  std::vector<int> experiments;
};

struct SuiteEntry {
  int experiment = 0;
  std::string label;
  ExperimentConfig config;
  AggregateResult result;
};

/// Experiments 1-4 on the grid world:
///   1  vanilla, α=0.1: clean σ² ∈ {1,5,15}; σ²=1 with ε ∈ {0.001,0.005,0.01}
///   2  robust-q, α=0.1: σ² ∈ {1,5} × ε ∈ {0,0.001,0.005,0.01};
///      robust-q-m at the Markov horizon, σ²=1, ε ∈ {0.001,0.005,0.01}
///   3  robust-raq, α_t=0.001/t, ε=0.01: p ∈ {1,2,5} × σ² ∈ {1,5}
///   4  robust-raq-m at the Markov horizon, α=0.1, p=5, σ²=1, ε ∈ {0.001,0.005,0.01}
/// Writes <out>/expN/<label>.csv, <out>/expN/plot.svg and <out>/summary.csv.
std::vector<SuiteEntry> run_suite(const SuiteOptions& options, std::ostream* log = nullptr);

}  // namespace robustq
