#include "robustq/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <map>
#include <ostream>
#include <thread>
#include <utility>

#include "robustq/errors.hpp"
#include "robustq/mdp_io.hpp"
#include "robustq/report.hpp"

namespace robustq {

namespace {

using nlohmann::json;

double parse_double(std::string_view text, const char* what) {
  const std::string s(text);
  std::size_t used = 0;
  double x = 0.0;
  try {
    x = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (s.empty() || used != s.size()) {
    throw InvalidArgument(std::string("bad ") + what + ": '" + s + "'");
  }
  return x;
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  if (path.is_relative() && !base.empty()) return base / path;
  return path;
}

}  // namespace

AlphaRule AlphaRule::parse(std::string_view text) {
  if (text == "theory") return {Kind::theory, 0.0};
  if (text.size() >= 2 && text.substr(text.size() - 2) == "/t") {
    const std::string_view head = text.substr(0, text.size() - 2);
    const double scale = head.empty() ? 1.0 : parse_double(head, "step-size scale");
    if (!(scale > 0.0 && scale <= 1.0)) throw InvalidArgument("1/t scale must lie in (0, 1]");
    return {Kind::inverse_time, scale};
  }
  const double alpha = parse_double(text, "step size");
  if (!(alpha > 0.0 && alpha <= 1.0)) throw InvalidArgument("step size must lie in (0, 1]");
  return {Kind::constant, alpha};
}

std::string AlphaRule::to_string() const {
  switch (kind) {
    case Kind::constant:
      return format_number(value);
    case Kind::theory:
      return "theory";
    case Kind::inverse_time:
      return format_number(value) + "/t";
  }
  return "theory";
}

StepSize AlphaRule::resolve(double lambda_min, double gamma, std::int64_t horizon) const {
  switch (kind) {
    case Kind::constant:
      return StepSize::constant(value);
    case Kind::theory:
      return StepSize::theory(lambda_min, gamma, horizon);
    case Kind::inverse_time:
      return StepSize::inverse_time(value);
  }
  return StepSize::constant(value);
}

void ExperimentConfig::validate() const {
  if (horizon <= 0) throw InvalidArgument("horizon T must be positive");
  if (seeds <= 0) throw InvalidArgument("number of seeds must be positive");
  if (jobs <= 0) throw InvalidArgument("jobs must be positive");
  if (!(epsilon >= 0.0 && epsilon < 0.5)) throw InvalidArgument("epsilon must lie in [0, 1/2)");
  if (learner_epsilon && !(*learner_epsilon >= 0.0 && *learner_epsilon < 0.5)) {
    throw InvalidArgument("learner_epsilon must lie in [0, 1/2)");
  }
  if (!(delta > 0.0 && delta < 1.0)) throw InvalidArgument("delta must lie in (0, 1)");
  if (!(c_const >= 1.0)) throw InvalidArgument("c_const must be at least 1");
  if (p < 1) throw InvalidArgument("p must be a positive integer");
  if (error_stride < 0) throw InvalidArgument("error_stride must be non-negative");
  if (attack == AttackKind::history_dependent) {
    throw InvalidArgument("history-dependent attacks need code, not a config file");
  }
  if (!std::isfinite(attack_value)) throw InvalidArgument("attack value must be finite");
  if (subsample_tau && sampling_for(learner) != Sampling::markov) {
    throw InvalidArgument("subsample_tau only applies to the Markov learners");
  }
  if (subsample_tau && *subsample_tau <= 0) throw InvalidArgument("subsample_tau must be positive");
}

CorruptionConfig ExperimentConfig::corruption() const {
  switch (attack) {
    case AttackKind::constant_bias:
      return {epsilon, AttackSpec::constant_bias(attack_value)};
    case AttackKind::scaled_spike:
      return {epsilon, AttackSpec::scaled_spike(attack_value)};
    case AttackKind::sign_flip:
      return {epsilon, AttackSpec::sign_flip()};
    case AttackKind::history_dependent:
      break;
  }
  throw InvalidArgument("history-dependent attacks need code, not a config file");
}

ExperimentConfig experiment_config_from_json(const json& doc, const std::filesystem::path& base_dir) {
  if (!doc.is_object()) throw InvalidArgument("experiment config must be a JSON object");
  static const std::vector<std::string> known = {
      "name",     "mdp",   "policy",      "learner",       "corruption",      "horizon",
      "seeds",    "alpha", "delta",       "c_const",       "p",               "sigma_tilde",
      "jobs",     "output", "master_seed", "subsample_tau", "learner_epsilon", "error_stride"};
  for (const auto& item : doc.items()) {
    if (std::find(known.begin(), known.end(), item.key()) == known.end()) {
      throw InvalidArgument("unknown experiment config key '" + item.key() + "'");
    }
  }

  ExperimentConfig c;
  try {
    c.name = doc.value("name", c.name);
    if (doc.contains("mdp")) {
      const json& m = doc.at("mdp");
      if (m.contains("file")) {
        c.mdp.kind = MdpSource::Kind::file;
        c.mdp.path = resolve(base_dir, m.at("file").get<std::string>());
      } else if (m.contains("inline")) {
        c.mdp.kind = MdpSource::Kind::inline_doc;
        c.mdp.doc = m.at("inline");
      } else {
        const std::string gen = m.value("generator", std::string("grid25"));
        if (gen != "grid25" && gen != "grid") {
          throw InvalidArgument("unknown MDP generator '" + gen + "'");
        }
        c.mdp.kind = MdpSource::Kind::grid;
        c.mdp.grid.seed = m.value("seed", c.mdp.grid.seed);
        c.mdp.grid.noise_variance = m.value("noise_variance", c.mdp.grid.noise_variance);
        c.mdp.grid.slip = m.value("slip", c.mdp.grid.slip);
        c.mdp.grid.gamma = m.value("gamma", c.mdp.grid.gamma);
      }
    }
    if (doc.contains("policy")) {
      std::vector<double> flat;
      // Nested [s][a] rows or an already flattened list.
      for (const auto& row : doc.at("policy")) {
        if (row.is_array()) {
          for (const auto& v : row) flat.push_back(v.get<double>());
        } else {
          flat.push_back(row.get<double>());
        }
      }
      c.policy = std::move(flat);
    }
    if (doc.contains("learner")) c.learner = parse_learner_kind(doc.at("learner").get<std::string>());
    if (doc.contains("corruption")) {
      const json& k = doc.at("corruption");
      c.epsilon = k.value("epsilon", c.epsilon);
      if (k.contains("attack")) c.attack = parse_attack_kind(k.at("attack").get<std::string>());
      c.attack_value = k.value("value", c.attack_value);
    }
    c.horizon = doc.value("horizon", c.horizon);
    c.seeds = doc.value("seeds", c.seeds);
    c.master_seed = doc.value("master_seed", c.master_seed);
    c.jobs = doc.value("jobs", c.jobs);
    if (doc.contains("alpha")) {
      const json& a = doc.at("alpha");
      c.alpha = a.is_string() ? AlphaRule::parse(a.get<std::string>())
                              : AlphaRule::parse(format_number(a.get<double>(), 17));
    }
    c.delta = doc.value("delta", c.delta);
    c.c_const = doc.value("c_const", c.c_const);
    c.p = doc.value("p", c.p);
    if (doc.contains("sigma_tilde")) c.sigma_tilde = doc.at("sigma_tilde").get<double>();
    if (doc.contains("subsample_tau")) c.subsample_tau = doc.at("subsample_tau").get<std::int64_t>();
    if (doc.contains("learner_epsilon")) c.learner_epsilon = doc.at("learner_epsilon").get<double>();
    c.error_stride = doc.value("error_stride", c.error_stride);
    if (doc.contains("output")) {
      const json& o = doc.at("output");
      if (o.contains("csv")) c.csv_path = resolve(base_dir, o.at("csv").get<std::string>());
      if (o.contains("svg")) c.svg_path = resolve(base_dir, o.at("svg").get<std::string>());
    }
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("experiment config: ") + e.what());
  }
  c.validate();
  return c;
}

json experiment_config_to_json(const ExperimentConfig& c) {
  json doc;
  doc["name"] = c.name;
  switch (c.mdp.kind) {
    case MdpSource::Kind::grid:
      doc["mdp"] = {{"generator", "grid25"},
                    {"seed", c.mdp.grid.seed},
                    {"noise_variance", c.mdp.grid.noise_variance},
                    {"slip", c.mdp.grid.slip},
                    {"gamma", c.mdp.grid.gamma}};
      break;
    case MdpSource::Kind::file:
      doc["mdp"] = {{"file", c.mdp.path.string()}};
      break;
    case MdpSource::Kind::inline_doc:
      doc["mdp"] = {{"inline", c.mdp.doc}};
      break;
  }
  if (c.policy) doc["policy"] = *c.policy;
  doc["learner"] = std::string(to_string(c.learner));
  doc["corruption"] = {{"epsilon", c.epsilon},
                       {"attack", std::string(to_string(c.attack))},
                       {"value", c.attack_value}};
  doc["horizon"] = c.horizon;
  doc["seeds"] = c.seeds;
  doc["master_seed"] = c.master_seed;
  doc["jobs"] = c.jobs;
  doc["alpha"] = c.alpha.to_string();
  doc["delta"] = c.delta;
  doc["c_const"] = c.c_const;
  doc["p"] = c.p;
  if (c.sigma_tilde) doc["sigma_tilde"] = *c.sigma_tilde;
  if (c.subsample_tau) doc["subsample_tau"] = *c.subsample_tau;
  if (c.learner_epsilon) doc["learner_epsilon"] = *c.learner_epsilon;
  doc["error_stride"] = c.error_stride;
  if (c.csv_path) doc["output"]["csv"] = c.csv_path->string();
  if (c.svg_path) doc["output"]["svg"] = c.svg_path->string();
  return doc;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  return experiment_config_from_json(read_json_file(path), path.parent_path());
}

PreparedEnvironment prepare_environment(const MdpSource& source,
                                        const std::optional<std::vector<double>>& policy,
                                        double q_star_tol) {
  auto finish = [&](MdpSpec mdp, Policy mu) {
    if (policy) mu = Policy(mdp.num_states(), mdp.num_actions(), *policy);
    ChainAnalysis analysis = analyze_chain(mdp, mu);
    QTable q_star = compute_q_star(mdp, q_star_tol);
    return PreparedEnvironment{std::move(mdp), std::move(mu), std::move(analysis), std::move(q_star)};
  };
  auto from_doc = [&](const json& doc) {
    MdpSpec mdp = mdp_from_json(doc);
    std::optional<Policy> mu = policy_from_json(doc, mdp);
    Policy p = mu ? std::move(*mu) : Policy::uniform(mdp.num_states(), mdp.num_actions());
    return finish(std::move(mdp), std::move(p));
  };
  switch (source.kind) {
    case MdpSource::Kind::grid: {
      GridWorld g = generate_grid_world(source.grid);
      return finish(std::move(g.mdp), std::move(g.policy));
    }
    case MdpSource::Kind::file:
      return from_doc(read_json_file(source.path));
    case MdpSource::Kind::inline_doc:
      return from_doc(source.doc);
  }
  throw InvalidArgument("unknown MDP source");
}

LearnerConfig learner_config_for(const ExperimentConfig& config, const PreparedEnvironment& env) {
  LearnerParams params;
  params.kind = config.learner;
  params.alpha = config.alpha.resolve(env.analysis.lambda_min, env.mdp.gamma(), config.horizon);
  params.epsilon = config.learner_epsilon.value_or(config.epsilon);
  params.delta = config.delta;
  params.horizon = config.horizon;
  params.c_const = config.c_const;
  params.p = config.p;
  params.sigma_tilde = config.sigma_tilde;
  params.subsample_tau = config.subsample_tau;
  return configure_learner(params, env.mdp, env.analysis);
}

void Aggregator::add(const RunTrace& trace) {
  AggregateResult& r = result_;
  if (r.seeds.empty()) {
    r.config_digest = trace.config_digest;
    r.learner = trace.kind;
    r.horizon = trace.horizon;
    r.burn_in = trace.burn_in;
    r.subsample_tau = trace.subsample_tau;
    r.iterate_bound = trace.iterate_bound;
    r.updates_per_seed = trace.updates;
    r.steps = trace.steps;
    r.min_error = trace.errors;
    r.max_error = trace.errors;
    error_sum_.assign(trace.errors.size(), 0.0);
    trigger_count_.assign(trace.errors.size(), 0);
  } else if (trace.steps != r.steps || trace.config_digest != r.config_digest) {
    throw InvalidArgument("aggregated traces must share a configuration");
  }
  for (std::size_t i = 0; i < trace.errors.size(); ++i) {
    const double e = trace.errors[i];
    error_sum_[i] += e;
    r.min_error[i] = std::min(r.min_error[i], e);
    r.max_error[i] = std::max(r.max_error[i], e);
    trigger_count_[i] += trace.triggered[i];
  }
  r.seeds.push_back(trace.seed);
  r.final_errors.push_back(trace.final_error());
  r.steady_state_errors.push_back(trace.steady_state_error());
  r.trigger_rates.push_back(trace.post_burn_in_trigger_rate());
  trigger_rate_sum_ += trace.post_burn_in_trigger_rate();
  r.iterate_bound_violations += trace.iterate_bound_violations;
  r.proxy_bound_violations += trace.proxy_bound_violations;
  r.max_iterate_norm = std::max(r.max_iterate_norm, trace.max_iterate_norm);
}

AggregateResult Aggregator::finish(std::string name, double epsilon) && {
  AggregateResult r = std::move(result_);
  if (r.seeds.empty()) throw InvalidArgument("no traces to aggregate");
  r.name = std::move(name);
  r.epsilon = epsilon;
  const auto n = static_cast<double>(r.seeds.size());
  r.mean_error.resize(error_sum_.size());
  r.trigger_rate.resize(error_sum_.size());
  for (std::size_t i = 0; i < error_sum_.size(); ++i) {
    r.mean_error[i] = error_sum_[i] / n;
    r.trigger_rate[i] = static_cast<double>(trigger_count_[i]) / n;
  }
  r.steady_state_error =
      window_mean(r.steps, r.mean_error, r.horizon, steady_state_window(r.horizon));
  r.post_burn_in_trigger_rate = trigger_rate_sum_ / n;
  return r;
}

AggregateResult run_experiment(const ExperimentConfig& config, const PreparedEnvironment& env,
                               std::ostream* log) {
  config.validate();
  const LearnerConfig learner = learner_config_for(config, env);
  const CorruptionConfig corruption = config.corruption();
  const Sampling sampling = sampling_for(config.learner);
  RunOptions options;
  options.error_stride = config.error_stride;
  const Environment view = env.view();

  Aggregator agg;
  const int n = config.seeds;
  const int jobs = std::max(1, config.jobs);
  for (int start = 0; start < n; start += jobs) {
    const int batch = std::min(jobs, n - start);
    std::vector<std::optional<RunTrace>> traces(static_cast<std::size_t>(batch));
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(batch));
    auto work = [&](int k) {
      try {
        const std::uint64_t seed =
            derive_seed(config.master_seed, static_cast<std::uint64_t>(start + k));
        traces[static_cast<std::size_t>(k)] =
            run_learner(view, corruption, learner, sampling, seed, options);
      } catch (...) {
        errors[static_cast<std::size_t>(k)] = std::current_exception();
      }
    };
    if (batch == 1) {
      work(0);
    } else {
      std::vector<std::thread> pool;
      pool.reserve(static_cast<std::size_t>(batch));
      for (int k = 0; k < batch; ++k) pool.emplace_back(work, k);
      for (auto& th : pool) th.join();
    }
    for (int k = 0; k < batch; ++k) {
      if (errors[static_cast<std::size_t>(k)]) std::rethrow_exception(errors[static_cast<std::size_t>(k)]);
      agg.add(*traces[static_cast<std::size_t>(k)]);
    }
    if (log) {
      *log << "  [" << config.name << "] seeds " << agg.count() << "/" << n << "\n" << std::flush;
    }
  }
  return std::move(agg).finish(config.name, config.epsilon);
}

AggregateResult run_experiment(const ExperimentConfig& config, std::ostream* log) {
  config.validate();
  const PreparedEnvironment env = prepare_environment(config.mdp, config.policy);
  AggregateResult result = run_experiment(config, env, log);
  write_artifacts(config, result);
  return result;
}

void write_artifacts(const ExperimentConfig& config, const AggregateResult& result) {
  if (config.csv_path) write_text_file(*config.csv_path, aggregate_csv(result));
  if (config.svg_path) {
    const PlotSeries series[] = {{config.name, &result}};
    write_text_file(*config.svg_path, line_plot_svg(series, config.name));
  }
}

namespace {

std::string eps_label(double eps) { return format_number(eps, 6); }

struct Planned {
  int experiment;
  std::string label;
  ExperimentConfig config;
};

}  // namespace

std::vector<SuiteEntry> run_suite(const SuiteOptions& options, std::ostream* log) {
  if (options.horizon <= 0 || options.markov_horizon <= 0 || options.seeds <= 0) {
    throw InvalidArgument("suite horizons and seed count must be positive");
  }
  auto wanted = [&](int k) {
    return options.experiments.empty() ||
           std::find(options.experiments.begin(), options.experiments.end(), k) !=
               options.experiments.end();
  };
  auto base = [&](LearnerKind kind, double variance, double eps, std::int64_t horizon) {
    ExperimentConfig c;
    c.mdp.kind = MdpSource::Kind::grid;
    c.mdp.grid.seed = options.grid_seed;
    c.mdp.grid.noise_variance = variance;
    c.learner = kind;
    c.epsilon = eps;
    c.attack = AttackKind::constant_bias;
    c.attack_value = options.attack_bias;
    c.horizon = horizon;
    c.seeds = options.seeds;
    c.master_seed = options.master_seed;
    c.jobs = options.jobs;
    c.alpha = {AlphaRule::Kind::constant, 0.1};
    return c;
  };
  const std::vector<double> eps_levels = {0.001, 0.005, 0.01};

  std::vector<Planned> plan;
  auto add = [&](int exp, std::string label, ExperimentConfig c) {
    c.name = "exp" + std::to_string(exp) + "/" + label;
    plan.push_back({exp, std::move(label), std::move(c)});
  };
  if (wanted(1)) {
    for (double var : {1.0, 5.0, 15.0}) {
      add(1, "vanilla_var" + format_number(var) + "_eps0", base(LearnerKind::vanilla, var, 0.0, options.horizon));
    }
    for (double eps : eps_levels) {
      add(1, "vanilla_var1_eps" + eps_label(eps), base(LearnerKind::vanilla, 1.0, eps, options.horizon));
    }
  }
  if (wanted(2)) {
    for (double var : {1.0, 5.0}) {
      for (double eps : {0.0, 0.001, 0.005, 0.01}) {
        add(2, "robust-q_var" + format_number(var) + "_eps" + eps_label(eps),
            base(LearnerKind::robust_q, var, eps, options.horizon));
      }
    }
    for (double eps : eps_levels) {
      add(2, "robust-q-m_var1_eps" + eps_label(eps),
          base(LearnerKind::robust_q_m, 1.0, eps, options.markov_horizon));
    }
  }
  if (wanted(3)) {
    for (int p : {1, 2, 5}) {
      for (double var : {1.0, 5.0}) {
        ExperimentConfig c = base(LearnerKind::robust_raq, var, 0.01, options.horizon);
        c.p = p;
        c.alpha = {AlphaRule::Kind::inverse_time, 0.001};
        add(3, "robust-raq_p" + std::to_string(p) + "_var" + format_number(var) + "_eps0.01", c);
      }
    }
  }
  if (wanted(4)) {
    for (double eps : eps_levels) {
      ExperimentConfig c = base(LearnerKind::robust_raq_m, 1.0, eps, options.markov_horizon);
      c.p = 5;
      add(4, "robust-raq-m_p5_var1_eps" + eps_label(eps), c);
    }
  }

  std::map<double, PreparedEnvironment> envs;
  std::vector<SuiteEntry> entries;
  for (Planned& item : plan) {
    const double var = item.config.mdp.grid.noise_variance;
    auto it = envs.find(var);
    if (it == envs.end()) it = envs.emplace(var, prepare_environment(item.config.mdp)).first;
    const std::filesystem::path dir = options.out_dir / ("exp" + std::to_string(item.experiment));
    item.config.csv_path = dir / (item.label + ".csv");
    if (log) *log << "running " << item.config.name << "\n" << std::flush;
    AggregateResult result = run_experiment(item.config, it->second, log);
    write_artifacts(item.config, result);
    if (log) *log << summary_line(result) << "\n" << std::flush;
    entries.push_back({item.experiment, item.label, item.config, std::move(result)});
  }

  for (int exp = 1; exp <= 4; ++exp) {
    std::vector<PlotSeries> series;
    for (const SuiteEntry& e : entries) {
      if (e.experiment == exp) series.push_back({e.label, &e.result});
    }
    if (options.svg && !series.empty()) {
      write_text_file(options.out_dir / ("exp" + std::to_string(exp)) / "plot.svg",
                      line_plot_svg(series, "Experiment " + std::to_string(exp) + ": mean E_t"));
    }
  }

  std::string summary =
      "experiment,label,learner,epsilon,noise_variance,p,horizon,seeds,burn_in,subsample_tau,"
      "steady_state_error,post_burn_in_trigger_rate,max_iterate_norm,iterate_bound,"
      "iterate_bound_violations,proxy_bound_violations\n";
  for (const SuiteEntry& e : entries) {
    const AggregateResult& r = e.result;
    summary += std::to_string(e.experiment) + "," + e.label + "," + std::string(to_string(r.learner)) +
               "," + format_number(r.epsilon) + "," + format_number(e.config.mdp.grid.noise_variance) +
               "," + std::to_string(e.config.p) + "," + std::to_string(r.horizon) + "," +
               std::to_string(r.seeds.size()) + "," + std::to_string(r.burn_in) + "," +
               std::to_string(r.subsample_tau) + "," + format_number(r.steady_state_error) + "," +
               format_number(r.post_burn_in_trigger_rate) + "," + format_number(r.max_iterate_norm) +
               "," + format_number(r.iterate_bound) + "," + std::to_string(r.iterate_bound_violations) +
               "," + std::to_string(r.proxy_bound_violations) + "\n";
  }
  write_text_file(options.out_dir / "summary.csv", summary);
  return entries;
}

}  // namespace robustq
