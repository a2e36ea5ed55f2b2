#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "robustq/errors.hpp"
#include "robustq/experiment.hpp"
#include "robustq/mdp_io.hpp"
#include "robustq/report.hpp"

using namespace robustq;
using nlohmann::json;

namespace {

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

ExperimentConfig small_config(LearnerKind kind, double eps, std::int64_t T, int seeds) {
  ExperimentConfig c;
  c.name = "small";
  c.learner = kind;
  c.epsilon = eps;
  c.horizon = T;
  c.seeds = seeds;
  return c;
}

}  // namespace

TEST(AlphaRule, Parse) {
  EXPECT_EQ(AlphaRule::parse("0.1").kind, AlphaRule::Kind::constant);
  EXPECT_EQ(AlphaRule::parse("theory").kind, AlphaRule::Kind::theory);
  const AlphaRule inv = AlphaRule::parse("1/t");
  EXPECT_EQ(inv.kind, AlphaRule::Kind::inverse_time);
  EXPECT_EQ(inv.value, 1.0);
  EXPECT_EQ(AlphaRule::parse("0.001/t").value, 0.001);
  EXPECT_THROW(AlphaRule::parse("fast"), InvalidArgument);
  EXPECT_EQ(AlphaRule::parse(AlphaRule::parse("0.001/t").to_string()).value, 0.001);
}

TEST(ExperimentConfig, ParsesFullDocument) {
  const json doc = json::parse(R"({
    "name": "exp", "learner": "robust-raq", "horizon": 1000, "seeds": 3, "master_seed": 9,
    "mdp": {"generator": "grid25", "seed": 2, "noise_variance": 5},
    "corruption": {"epsilon": 0.01, "attack": "constant_bias", "value": -500},
    "alpha": "0.001/t", "p": 2, "delta": 0.1, "jobs": 2,
    "output": {"csv": "out/a.csv"}
  })");
  const ExperimentConfig c = experiment_config_from_json(doc, "/tmp/base");
  EXPECT_EQ(c.learner, LearnerKind::robust_raq);
  EXPECT_EQ(c.horizon, 1000);
  EXPECT_EQ(c.seeds, 3);
  EXPECT_EQ(c.master_seed, 9u);
  EXPECT_EQ(c.mdp.grid.seed, 2u);
  EXPECT_EQ(c.mdp.grid.noise_variance, 5.0);
  EXPECT_EQ(c.attack_value, -500.0);
  EXPECT_EQ(c.p, 2);
  EXPECT_EQ(*c.csv_path, std::filesystem::path("/tmp/base/out/a.csv"));
  const ExperimentConfig back = experiment_config_from_json(experiment_config_to_json(c), "/tmp/base");
  EXPECT_EQ(experiment_config_to_json(back).dump(), experiment_config_to_json(c).dump());
}

TEST(ExperimentConfig, RejectsBadInput) {
  EXPECT_THROW(experiment_config_from_json(json::parse(R"({"bogus": 1})")), InvalidArgument);
  EXPECT_THROW(experiment_config_from_json(json::parse(R"({"learner": "sarsa"})")), InvalidArgument);
  EXPECT_THROW(experiment_config_from_json(json::parse(R"({"horizon": "long"})")), InvalidArgument);
  EXPECT_THROW(experiment_config_from_json(json::parse(R"({"corruption": {"epsilon": 0.7}})")),
               InvalidArgument);
  EXPECT_THROW(experiment_config_from_json(json::parse(R"({"seeds": 0})")), InvalidArgument);
  EXPECT_THROW(load_experiment_config("/nonexistent/config.json"), IoError);
}

TEST(ExperimentConfig, InlineMdpAndPolicy) {
  const json doc = json::parse(R"({
    "learner": "vanilla", "horizon": 50, "seeds": 1,
    "mdp": {"inline": {"states": 2, "actions": 1, "gamma": 0.5,
                       "transition": [[[0.5, 0.5]], [[0.5, 0.5]]], "mean_reward": [[1], [2]]}},
    "policy": [[1.0], [1.0]]
  })");
  const ExperimentConfig c = experiment_config_from_json(doc);
  const PreparedEnvironment env = prepare_environment(c.mdp, c.policy);
  EXPECT_EQ(env.mdp.num_states(), 2u);
  EXPECT_NEAR(env.q_star(0, 0), 1.0 + 0.5 * 1.5 / 0.5, 1e-9);
  EXPECT_NO_THROW(run_experiment(c, env));
}

TEST(ExperimentConfig, AssumptionViolationSurfaces) {
  const json doc = json::parse(R"({
    "learner": "vanilla", "horizon": 50, "seeds": 1,
    "mdp": {"inline": {"states": 2, "actions": 1, "gamma": 0.5,
                       "transition": [[[0, 1]], [[1, 0]]], "mean_reward": [[1], [2]]}}
  })");
  const ExperimentConfig c = experiment_config_from_json(doc);
  EXPECT_THROW(prepare_environment(c.mdp, c.policy), AssumptionViolated);
}

TEST(RunExperiment, SmokeCsvTenRows) {
  const ExperimentConfig c = small_config(LearnerKind::vanilla, 0.0, 10, 1);
  const AggregateResult r = run_experiment(c);
  const auto lines = lines_of(aggregate_csv(r));
  ASSERT_EQ(lines.size(), 11u);
  EXPECT_EQ(lines[0], "step,mean_error,min_error,max_error,trigger_rate");
  for (std::size_t i = 0; i < r.mean_error.size(); ++i) {
    EXPECT_TRUE(std::isfinite(r.mean_error[i]));
    EXPECT_LE(r.min_error[i], r.mean_error[i]);
    EXPECT_LE(r.mean_error[i], r.max_error[i]);
  }
}

TEST(RunExperiment, JobsDoNotChangeOutput) {
  // The robust horizon runs past its burn-in (about 121k steps) so thresholding is exercised.
  for (ExperimentConfig c : {small_config(LearnerKind::vanilla, 0.01, 3000, 5),
                             small_config(LearnerKind::robust_q, 0.01, 150000, 4)}) {
    c.error_stride = 100;
    c.jobs = 1;
    const std::string one = aggregate_csv(run_experiment(c));
    c.jobs = 3;
    const std::string three = aggregate_csv(run_experiment(c));
    EXPECT_EQ(one, three);
    EXPECT_EQ(one, aggregate_csv(run_experiment(c)));
  }
}

TEST(RunExperiment, MeanMatchesIndependentRecomputation) {
  ExperimentConfig c = small_config(LearnerKind::vanilla, 0.01, 2000, 4);
  const PreparedEnvironment env = prepare_environment(c.mdp, c.policy);
  const AggregateResult r = run_experiment(c, env);
  const LearnerConfig lc = learner_config_for(c, env);
  std::vector<RunTrace> traces;
  for (int i = 0; i < c.seeds; ++i) {
    traces.push_back(run_learner(env.view(), c.corruption(), lc, Sampling::iid,
                                 derive_seed(c.master_seed, static_cast<std::uint64_t>(i))));
  }
  ASSERT_EQ(r.seeds.size(), 4u);
  for (std::size_t k = 0; k < r.steps.size(); k += 97) {
    double sum = 0.0;
    for (const RunTrace& t : traces) sum += t.errors[k];
    EXPECT_NEAR(r.mean_error[k], sum / 4.0, 1e-12 * (1 + std::abs(sum)));
  }
  double ss = 0.0;
  for (const RunTrace& t : traces) {
    double s = 0.0;
    for (std::int64_t j = c.horizon - 20; j < c.horizon; ++j) s += t.errors[static_cast<std::size_t>(j)];
    ss += s / 20.0;
  }
  EXPECT_NEAR(r.steady_state_error, ss / 4.0, 1e-9 * (1 + ss));
  EXPECT_EQ(steady_state_window(c.horizon), 20);
}

TEST(RunExperiment, AggregatorRejectsMismatchedTraces) {
  ExperimentConfig a = small_config(LearnerKind::vanilla, 0.0, 100, 1);
  ExperimentConfig b = small_config(LearnerKind::vanilla, 0.0, 200, 1);
  const PreparedEnvironment env = prepare_environment(a.mdp, a.policy);
  Aggregator agg;
  agg.add(run_learner(env.view(), a.corruption(), learner_config_for(a, env), Sampling::iid, 1));
  EXPECT_THROW(agg.add(run_learner(env.view(), b.corruption(), learner_config_for(b, env), Sampling::iid, 1)),
               InvalidArgument);
}

TEST(Artifacts, CsvAndSvgWritten) {
  const auto dir = std::filesystem::temp_directory_path() / "robustq_harness_test";
  std::filesystem::remove_all(dir);
  ExperimentConfig c = small_config(LearnerKind::robust_q, 0.01, 500, 2);
  c.csv_path = dir / "nested" / "r.csv";
  c.svg_path = dir / "nested" / "r.svg";
  const AggregateResult r = run_experiment(c);
  ASSERT_TRUE(std::filesystem::exists(*c.csv_path));
  ASSERT_TRUE(std::filesystem::exists(*c.svg_path));
  std::ifstream in(*c.csv_path);
  std::stringstream buf;
  buf << in.rdbuf();
  EXPECT_EQ(buf.str(), aggregate_csv(r));
  std::ifstream svg(*c.svg_path);
  std::string first;
  std::getline(svg, first);
  EXPECT_NE(first.find("<svg"), std::string::npos);
  std::filesystem::remove_all(dir);
}

TEST(Report, SvgHasOneCurvePerSeries) {
  const AggregateResult a = run_experiment(small_config(LearnerKind::vanilla, 0.0, 300, 1));
  const AggregateResult b = run_experiment(small_config(LearnerKind::vanilla, 0.01, 300, 1));
  const std::vector<PlotSeries> series = {{"clean", &a}, {"eps=0.01", &b}};
  const std::string svg = line_plot_svg(series, "test <plot>");
  std::size_t paths = 0;
  for (std::size_t pos = svg.find("<polyline"); pos != std::string::npos; pos = svg.find("<polyline", pos + 1)) ++paths;
  EXPECT_EQ(paths, 2u);
  EXPECT_NE(svg.find("&lt;plot&gt;"), std::string::npos);
  EXPECT_NE(summary_line(a).find("vanilla"), std::string::npos);
}

TEST(Report, FormatNumber) {
  EXPECT_EQ(format_number(0.5), "0.5");
  EXPECT_EQ(format_number(1e-12), "1e-12");
  EXPECT_EQ(format_number(123456789012.0), "1.23456789e+11");
}
