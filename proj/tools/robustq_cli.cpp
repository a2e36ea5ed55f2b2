// robustq: command-line front end for the robust Q-learning library.
//
// Exit codes: 0 ok, 1 invalid config or I/O error, 2 assumption violated,
// 3 numeric failure.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "robustq/corruption.hpp"
#include "robustq/errors.hpp"
#include "robustq/experiment.hpp"
#include "robustq/mdp_io.hpp"
#include "robustq/qlearning.hpp"
#include "robustq/report.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace robustq;

namespace {

struct EnvArgs {
  std::string config;
  std::string mdp_file;
  std::uint64_t grid_seed = 0;
  double noise_variance = 1.0;
};

void add_env_flags(CLI::App* cmd, EnvArgs& a) {
  cmd->add_option("--config", a.config, "Experiment config (JSON); its mdp section is used");
  cmd->add_option("--mdp", a.mdp_file, "MDP document (JSON) instead of the grid world");
  cmd->add_option("--grid-seed", a.grid_seed, "Seed of the generated grid world");
  cmd->add_option("--noise-variance", a.noise_variance, "Reward noise variance of the grid world");
}

PreparedEnvironment load_env(const EnvArgs& a) {
  if (!a.config.empty()) {
    const ExperimentConfig c = load_experiment_config(a.config);
    return prepare_environment(c.mdp, c.policy);
  }
  MdpSource src;
  if (!a.mdp_file.empty()) {
    src.kind = MdpSource::Kind::file;
    src.path = a.mdp_file;
  } else {
    src.grid.seed = a.grid_seed;
    src.grid.noise_variance = a.noise_variance;
  }
  return prepare_environment(src);
}

std::string sanitize(std::string name) {
  for (char& c : name) {
    if (c == '/' || c == '\\' || c == ' ') c = '_';
  }
  return name;
}

int cmd_qstar(const EnvArgs& env_args, const std::string& out) {
  const PreparedEnvironment env = load_env(env_args);
  const QTable& q = env.q_star;
  std::printf("Q* (|S|=%zu, |A|=%zu, gamma=%g)\n", q.num_states(), q.num_actions(), env.mdp.gamma());
  for (std::size_t s = 0; s < q.num_states(); ++s) {
    std::printf("s=%-3zu", s);
    for (std::size_t a = 0; a < q.num_actions(); ++a) std::printf(" %12.6f", q(s, a));
    std::printf("   greedy=%zu\n", q.greedy_action(s));
  }
  if (!out.empty()) {
    json doc;
    doc["states"] = q.num_states();
    doc["actions"] = q.num_actions();
    json rows = json::array();
    for (std::size_t s = 0; s < q.num_states(); ++s) {
      rows.push_back(std::vector<double>(q.row(s).begin(), q.row(s).end()));
    }
    doc["q_star"] = rows;
    doc["greedy_policy"] = q.greedy_policy();
    write_text_file(fs::path(out) / "qstar.json", doc.dump(2) + "\n");
  }
  return 0;
}

int cmd_analyze(const EnvArgs& env_args, const std::string& out, std::int64_t horizon, double delta) {
  const PreparedEnvironment env = load_env(env_args);
  const ChainAnalysis& a = env.analysis;
  const std::size_t S = env.mdp.num_states();
  const std::size_t A = env.mdp.num_actions();
  std::printf("stationary pi:");
  for (double p : a.stationary) std::printf(" %.6g", p);
  std::printf("\nlambda_min: %.10g\nmixing time tau_bar: %lld\n", a.lambda_min,
              static_cast<long long>(a.mixing_time));
  for (std::size_t l = 0; l < a.block_profile.size(); ++l) {
    std::printf("d_mix(%zu*tau_bar) = %.6g  (2^-%zu = %.6g)\n", l + 1, a.block_profile[l], l + 1,
                std::ldexp(1.0, -static_cast<int>(l + 1)));
  }
  const double d1 = known_delta1(delta, horizon);
  const std::int64_t tb = burn_in(a.lambda_min, d1, S, A, horizon);
  const std::int64_t tau = block_parameter(a.mixing_time, horizon, delta);
  std::printf("T=%lld delta=%g: delta1=%.6g burn_in=%lld block tau=%lld\n",
              static_cast<long long>(horizon), delta, d1, static_cast<long long>(tb),
              static_cast<long long>(tau));
  if (!out.empty()) {
    json doc;
    doc["stationary"] = a.stationary;
    doc["visitation"] = a.visitation;
    doc["lambda_min"] = a.lambda_min;
    doc["mixing_time"] = a.mixing_time;
    doc["block_profile"] = a.block_profile;
    doc["horizon"] = horizon;
    doc["delta"] = delta;
    doc["delta1"] = d1;
    doc["burn_in"] = tb;
    doc["block_parameter"] = tau;
    write_text_file(fs::path(out) / "analysis.json", doc.dump(2) + "\n");
  }
  return 0;
}

struct RunArgs {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<int> jobs;
  std::string out = "robustq_out";
  std::optional<std::string> learner;
  std::optional<double> epsilon;
  std::optional<double> attack_bias;
  std::optional<std::string> alpha;
  std::optional<int> p;
  std::optional<std::int64_t> horizon;
  std::optional<int> seeds;
  std::optional<std::uint64_t> grid_seed;
  std::optional<double> noise_variance;
  bool csv = false;
  bool svg = false;
};

int cmd_run(const RunArgs& r) {
  ExperimentConfig c = r.config.empty() ? ExperimentConfig{} : load_experiment_config(r.config);
  if (r.seed) c.master_seed = *r.seed;
  if (r.jobs) c.jobs = *r.jobs;
  if (r.learner) c.learner = parse_learner_kind(*r.learner);
  if (r.epsilon) c.epsilon = *r.epsilon;
  if (r.attack_bias) {
    c.attack = AttackKind::constant_bias;
    c.attack_value = *r.attack_bias;
  }
  if (r.alpha) c.alpha = AlphaRule::parse(*r.alpha);
  if (r.p) c.p = *r.p;
  if (r.horizon) c.horizon = *r.horizon;
  if (r.seeds) c.seeds = *r.seeds;
  if (r.grid_seed) c.mdp.grid.seed = *r.grid_seed;
  if (r.noise_variance) c.mdp.grid.noise_variance = *r.noise_variance;
  if (r.csv) c.csv_path = fs::path(r.out) / (sanitize(c.name) + ".csv");
  if (r.svg) c.svg_path = fs::path(r.out) / (sanitize(c.name) + ".svg");
  c.validate();

  const PreparedEnvironment env = prepare_environment(c.mdp, c.policy);
  const AggregateResult result = run_experiment(c, env, &std::cerr);
  write_artifacts(c, result);
  std::printf("%s\n", summary_line(result).c_str());
  if (c.csv_path) std::printf("csv: %s\n", c.csv_path->string().c_str());
  if (c.svg_path) std::printf("svg: %s\n", c.svg_path->string().c_str());
  return 0;
}

int cmd_lowerbound(double sigma_bar, const std::string& epsilon_text, double gamma,
                   const std::string& out) {
  const Rational eps = parse_rational(epsilon_text);
  const LowerBoundInstance inst = build_lower_bound_instance(sigma_bar, eps, gamma);
  const bool identical = inst.observed_pmfs_identical();
  const bool gap_ok = inst.q_star_gap >= inst.gap_lower_bound;
  const bool var_ok = inst.variance_bound < 0.5 * sigma_bar * sigma_bar;

  std::printf("lower-bound instance: sigma_bar=%g epsilon=%s gamma=%g\n", sigma_bar,
              eps.str().c_str(), gamma);
  std::printf("support: {%.10g, 0, %.10g}\n", -inst.spike, inst.spike);
  for (int i = 0; i < 2; ++i) {
    const auto& o = inst.observed_pmfs[static_cast<std::size_t>(i)];
    std::printf("observed pmf %d: (%s, %s, %s)\n", i + 1, o.probs[0].str().c_str(),
                o.probs[1].str().c_str(), o.probs[2].str().c_str());
  }
  std::printf("Q1* = %.12g  Q2* = %.12g  gap = %.12g  bound = %.12g\n", inst.q_star[0],
              inst.q_star[1], inst.q_star_gap, inst.gap_lower_bound);
  std::printf("observed laws identical: %s\n", identical ? "yes" : "no");
  std::printf("gap >= sigma_bar*sqrt(eps)/(2(1-gamma)): %s\n", gap_ok ? "yes" : "no");
  std::printf("Var bound sigma_bar^2/(4(1-eps)) = %.10g < sigma_bar^2/2: %s\n", inst.variance_bound,
              var_ok ? "yes" : "no");

  if (!out.empty()) {
    json doc;
    doc["sigma_bar"] = sigma_bar;
    doc["epsilon"] = eps.str();
    doc["gamma"] = gamma;
    doc["spike"] = inst.spike;
    auto pmf_json = [](const ThreePointPmf& p) {
      return json{{"support", p.support},
                  {"probs", {p.probs[0].str(), p.probs[1].str(), p.probs[2].str()}}};
    };
    for (int i = 0; i < 2; ++i) {
      const auto k = static_cast<std::size_t>(i);
      json m;
      m["mdp"] = mdp_to_json(i == 0 ? inst.mdp_pair.first : inst.mdp_pair.second);
      m["reward_pmf"] = pmf_json(inst.reward_pmfs[k]);
      m["attack_pmf"] = pmf_json(inst.attack_pmfs[k]);
      m["observed_pmf"] = pmf_json(inst.observed_pmfs[k]);
      m["q_star"] = inst.q_star[k];
      doc["instances"].push_back(m);
    }
    doc["q_star_gap"] = inst.q_star_gap;
    doc["gap_lower_bound"] = inst.gap_lower_bound;
    doc["variance_bound"] = inst.variance_bound;
    doc["observed_identical"] = identical;
    write_text_file(fs::path(out) / "lowerbound.json", doc.dump(2) + "\n");
  }
  return identical && gap_ok && var_ok ? 0 : 3;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"robustq: robust asynchronous Q-learning under reward corruption"};
  app.require_subcommand(1);

  EnvArgs q_env;
  std::string q_out;
  auto* qstar = app.add_subcommand("qstar", "Print the value-iteration oracle Q*");
  add_env_flags(qstar, q_env);
  qstar->add_option("--out", q_out, "Directory for qstar.json");

  EnvArgs a_env;
  std::string a_out;
  std::int64_t a_horizon = 250000;
  double a_delta = 0.05;
  auto* analyze = app.add_subcommand("analyze", "Stationary law, lambda_min, mixing time, burn-in");
  add_env_flags(analyze, a_env);
  analyze->add_option("--out", a_out, "Directory for analysis.json");
  analyze->add_option("--T", a_horizon, "Horizon for burn-in and block parameter");
  analyze->add_option("--delta", a_delta, "Failure probability");

  RunArgs r;
  auto* run = app.add_subcommand("run", "Run one multi-seed experiment");
  run->add_option("--config", r.config, "Experiment config (JSON)");
  run->add_option("--seed", r.seed, "Master seed");
  run->add_option("--jobs", r.jobs, "Seeds run concurrently");
  run->add_option("--out", r.out, "Output directory for --csv/--svg");
  run->add_option("--learner", r.learner, "vanilla|robust-q|robust-raq|robust-q-m|robust-raq-m");
  run->add_option("--epsilon", r.epsilon, "Corruption fraction");
  run->add_option("--attack-bias", r.attack_bias, "Constant-bias attack value");
  run->add_option("--alpha", r.alpha, "Step size: F, theory or 1/t (also F/t)");
  run->add_option("--p", r.p, "Exponent of the reward-agnostic threshold");
  run->add_option("--T", r.horizon, "Horizon");
  run->add_option("--seeds", r.seeds, "Number of seeds");
  run->add_option("--grid-seed", r.grid_seed, "Seed of the generated grid world");
  run->add_option("--noise-variance", r.noise_variance, "Reward noise variance of the grid world");
  run->add_flag("--csv", r.csv, "Write <out>/<name>.csv");
  run->add_flag("--svg", r.svg, "Write <out>/<name>.svg");

  SuiteOptions so;
  bool no_svg = false;
  std::optional<std::uint64_t> suite_seed;
  auto* suite = app.add_subcommand("suite", "Experiments 1-4 on the grid world");
  suite->add_option("--out", so.out_dir, "Output directory");
  suite->add_option("--seeds", so.seeds, "Seeds per configuration");
  suite->add_option("--jobs", so.jobs, "Seeds run concurrently");
  suite->add_option("--T", so.horizon, "Horizon of i.i.d. runs");
  suite->add_option("--markov-T", so.markov_horizon, "Horizon of Markov-sampled runs");
  suite->add_option("--seed", suite_seed, "Master seed");
  suite->add_option("--grid-seed", so.grid_seed, "Seed of the generated grid world");
  suite->add_option("--attack-bias", so.attack_bias, "Constant-bias attack value");
  suite->add_option("--experiments", so.experiments, "Subset of 1 2 3 4")->check(CLI::Range(1, 4));
  suite->add_flag("--no-svg", no_svg, "Skip the SVG plots");
  suite->add_flag("--csv", "Accepted for symmetry; CSVs are always written");
  suite->add_flag("--svg", "Accepted for symmetry; SVGs are written unless --no-svg");

  double lb_sigma = 1.0;
  std::string lb_eps = "0.04";
  double lb_gamma = 0.5;
  std::string lb_out;
  auto* lowerbound = app.add_subcommand("lowerbound", "Emit and verify the two-MDP lower-bound instance");
  lowerbound->add_option("--sigma-bar", lb_sigma, "Noise scale sigma_bar >= 1");
  lowerbound->add_option("--epsilon", lb_eps, "Corruption fraction, decimal or p/q");
  lowerbound->add_option("--gamma", lb_gamma, "Discount factor");
  lowerbound->add_option("--out", lb_out, "Directory for lowerbound.json");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (*qstar) return cmd_qstar(q_env, q_out);
    if (*analyze) return cmd_analyze(a_env, a_out, a_horizon, a_delta);
    if (*run) return cmd_run(r);
    if (*suite) {
      so.svg = !no_svg;
      if (suite_seed) so.master_seed = *suite_seed;
      run_suite(so, &std::cerr);
      std::printf("summary: %s\n", (so.out_dir / "summary.csv").string().c_str());
      return 0;
    }
    if (*lowerbound) return cmd_lowerbound(lb_sigma, lb_eps, lb_gamma, lb_out);
  } catch (const AssumptionViolated& e) {
    std::fprintf(stderr, "assumption violated: %s\n", e.what());
    return 2;
  } catch (const NumericFailure& e) {
    std::fprintf(stderr, "numeric failure: %s\n", e.what());
    return 3;
  } catch (const InsufficientData& e) {
    std::fprintf(stderr, "numeric failure: %s\n", e.what());
    return 3;
  } catch (const IoError& e) {
    std::fprintf(stderr, "io error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "invalid configuration: %s\n", e.what());
    return 1;
  }
  return 1;
}
