#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "oracles.hpp"
#include "robustq/errors.hpp"
#include "robustq/grid_world.hpp"
#include "robustq/qlearning.hpp"

using namespace robustq;

namespace {

struct Bundle {
  MdpSpec mdp;
  Policy policy;
  ChainAnalysis analysis;
  QTable q_star;
  Environment view() const { return {mdp, policy, analysis, q_star}; }
};

Bundle bundle_of(MdpSpec mdp) {
  Policy mu = Policy::uniform(mdp.num_states(), mdp.num_actions());
  ChainAnalysis a = analyze_chain(mdp, mu);
  QTable q = compute_q_star(mdp, 1e-12);
  return {std::move(mdp), std::move(mu), std::move(a), std::move(q)};
}

// Noise-free 2-state, 2-action test MDP with constant rewards.
MdpSpec two_state_mdp() {
  return MdpSpec(2, 2, {0.6, 0.4, 0.2, 0.8, 0.5, 0.5, 0.9, 0.1}, {1.0, 2.0, 0.5, 3.0},
                 std::vector<NoiseSpec>(4), 0.5);
}

}  // namespace

TEST(BurnIn, ForcedValueOne) {
  // λ_min = 104/3 and log(8·S·A·T/δ₁) = 1 give T̄ = ceil(1) = 1.
  const double delta1 = 8.0 / std::exp(1.0);
  EXPECT_EQ(burn_in(104.0 / 3.0, delta1, 1, 1, 1), 1);
}

TEST(BurnIn, GridWorldDirectEvaluation) {
  const GridWorld g = generate_grid_world(0);
  const ChainAnalysis a = analyze_chain(g.mdp, g.policy);
  const std::int64_t T = 250000;
  const double d1 = known_delta1(0.05, T);
  EXPECT_DOUBLE_EQ(d1, 0.05 / (4.0 * T));
  const double expected = std::ceil((104.0 / (3.0 * a.lambda_min)) * std::log(8.0 * 25 * 4 * T / d1));
  EXPECT_EQ(burn_in(a.lambda_min, d1, 25, 4, T), static_cast<std::int64_t>(expected));
  EXPECT_EQ(burn_in(0.01, d1, 25, 4, T), 124541);
}

TEST(BurnIn, Monotone) {
  std::int64_t prev = std::numeric_limits<std::int64_t>::max();
  for (double lam = 0.001; lam < 1.0; lam *= 1.7) {
    const std::int64_t v = burn_in(lam, 1e-6, 4, 3, 1000);
    EXPECT_LE(v, prev);
    prev = v;
  }
  prev = 0;
  for (std::int64_t T = 1; T < 100000000; T *= 3) {
    const std::int64_t v = burn_in(0.05, 1e-6, 4, 3, T);
    EXPECT_GE(v, prev);
    prev = v;
  }
  EXPECT_THROW(burn_in(0.0, 0.1, 1, 1, 1), InvalidArgument);
}

TEST(BlockParameter, Examples) {
  EXPECT_EQ(block_parameter(1, 1, 1.0), 1);
  EXPECT_EQ(block_parameter(10, 25000000, 0.05), 300);
  EXPECT_EQ(block_parameter(13, 250000, 0.05), 13 * 24);
}

TEST(BlockParameter, Monotone) {
  std::int64_t prev = 0;
  for (std::int64_t T = 1; T < 1000000000; T *= 5) {
    const std::int64_t v = block_parameter(7, T, 0.05);
    EXPECT_GE(v, prev);
    prev = v;
  }
  prev = 0;
  for (std::int64_t tb = 1; tb < 100; ++tb) {
    const std::int64_t v = block_parameter(tb, 1000, 0.05);
    EXPECT_GE(v, prev);
    prev = v;
  }
}

TEST(Delta1, KnownAndAgnostic) {
  EXPECT_DOUBLE_EQ(known_delta1(0.05, 250000), 5e-8);
  const double d = agnostic_delta1(0.05, 2, 3, 10, 1);
  EXPECT_NEAR(d, 0.0025 / (512.0 * 4 * 9 * std::pow(10.0, 5)), 1e-12 * d);
  const double big = agnostic_delta1(0.05, 25, 4, 250000, 5);
  const double log_expected = 2 * std::log(0.05) - std::log(512.0 * 625 * 16) - 13 * std::log(250000.0);
  EXPECT_NEAR(std::log(big), log_expected, 1e-9);
}

TEST(Threshold, ZeroThroughBurnInThenFormula) {
  const ThresholdSchedule g = ThresholdSchedule::known(11.0, 100, 1.0, 0.01, 1e-6, 0.01);
  EXPECT_EQ(g(0), 0.0);
  EXPECT_EQ(g(100), 0.0);
  const double t = 101;
  const double expected = 11.0 * (std::sqrt(4 * std::log(8e6) / (3 * 0.01 * t)) + 0.1) + 11.0;
  EXPECT_NEAR(g(101), expected, 1e-12);
  EXPECT_GT(g(101), g(1000));
  const ThresholdSchedule h = ThresholdSchedule::agnostic(2, 10, 1.0, 0.1, 1e-3, 0.0);
  EXPECT_NEAR(h(20), 400.0 * std::sqrt(4 * std::log(8e3) / (3 * 0.1 * 20)) + 400.0, 1e-9);
}

TEST(StepSize, Rules) {
  EXPECT_EQ(StepSize::constant(0.1).at(999), 0.1);
  EXPECT_EQ(StepSize::inverse_time(0.5).at(0), 0.5);
  EXPECT_EQ(StepSize::inverse_time(0.5).at(4), 0.1);
  EXPECT_THROW(StepSize::constant(0.0), InvalidArgument);
  EXPECT_THROW(StepSize::theory(0.01, 0.5, 100), InvalidArgument);
  const double th = StepSize::theory(0.01, 0.5, 10000000).value;
  EXPECT_NEAR(th, std::log(1e7) / (0.01 * 0.5 * 1e7), 1e-15);
}

TEST(LearnerKind, ParseAndClassify) {
  EXPECT_EQ(parse_learner_kind("robust-q"), LearnerKind::robust_q);
  EXPECT_EQ(parse_learner_kind("robust-raq-m"), LearnerKind::robust_raq_m);
  EXPECT_THROW(parse_learner_kind("sarsa"), InvalidArgument);
  EXPECT_EQ(sampling_for(LearnerKind::robust_q_m), Sampling::markov);
  EXPECT_EQ(sampling_for(LearnerKind::vanilla), Sampling::iid);
  EXPECT_TRUE(uses_agnostic_threshold(LearnerKind::robust_raq));
  EXPECT_FALSE(uses_agnostic_threshold(LearnerKind::robust_q_m));
}

TEST(VanillaStep, Examples) {
  QTable q(2, 2, 0.0);
  q(0, 0) = 3.0;
  q(1, 1) = 5.0;
  const QTable before = q;
  vanilla_q_step(q, {0, 0, 1, 7.0}, 0.0, 0.5);
  EXPECT_EQ(inf_distance(q, before), 0.0);
  vanilla_q_step(q, {0, 0, 1, 7.0}, 1.0, 0.0);
  EXPECT_EQ(q(0, 0), 7.0);
  vanilla_q_step(q, {1, 0, 1, 1.0}, 0.5, 0.5);
  EXPECT_DOUBLE_EQ(q(1, 0), 0.5 * 0.0 + 0.5 * (1.0 + 0.5 * 5.0));
}

TEST(VanillaStep, SinglePairConvergesToGeometricLimit) {
  const MdpSpec m(1, 1, {1.0}, {2.0}, {NoiseSpec()}, 0.5);
  QTable q(1, 1);
  for (int i = 0; i < 1000; ++i) vanilla_q_step(q, {0, 0, 0, 2.0}, 0.1, 0.5);
  EXPECT_NEAR(q(0, 0), 4.0, 1e-6);
  EXPECT_NEAR(q(0, 0), compute_q_star(m, 1e-12)(0, 0), 1e-6);
}

TEST(VanillaStep, OnlyOneEntryChanges) {
  Rng rng(9);
  QTable q(4, 3);
  for (double& v : q.values()) v = rng.normal();
  for (int i = 0; i < 1000; ++i) {
    const QTable before = q;
    const Observation obs{rng.below(4), rng.below(3), rng.below(4), rng.normal()};
    vanilla_q_step(q, obs, rng.uniform(), 0.7);
    int changed = 0;
    for (std::size_t k = 0; k < 12; ++k) changed += q.values()[k] != before.values()[k];
    ASSERT_LE(changed, 1);
  }
}

TEST(RobustStep, BurnInForcesZeroReward) {
  const Bundle b = bundle_of(two_state_mdp());
  LearnerParams p;
  p.kind = LearnerKind::robust_q;
  p.horizon = 1000;
  const LearnerConfig c = configure_learner(p, b.mdp, b.analysis);
  ASSERT_GT(c.burn_in(), 10);
  LearnerState st(2, 2);
  for (int i = 0; i < 10; ++i) {
    const StepDiag d = robust_step(st, {0, 0, 0, 1e6}, c, 0.5);
    EXPECT_EQ(d.threshold, 0.0);
    EXPECT_EQ(d.proxy_reward, 0.0);
  }
  // All updates used reward 0 from Q = 0, so Q stays 0.
  EXPECT_EQ(st.q.inf_norm(), 0.0);
  EXPECT_EQ(st.t, 10);
}

TEST(RobustStep, LargeEstimateIsDiscardedAfterBurnIn) {
  const Bundle b = bundle_of(two_state_mdp());
  LearnerConfig c;
  c.kind = LearnerKind::robust_q;
  c.alpha = StepSize::constant(0.5);
  c.horizon = 100;
  c.delta1 = 0.01;
  c.threshold = ThresholdSchedule::known(1.0, 0, 1.0, 1.0, 0.01, 0.0);
  LearnerState st(2, 2);
  st.t = 50;
  robust_step(st, {0, 0, 0, 1e3}, c, 0.5);
  const StepDiag d = robust_step(st, {0, 0, 0, 1e3}, c, 0.5);
  EXPECT_TRUE(d.triggered);
  EXPECT_EQ(d.robust_estimate, 1e3);
  EXPECT_EQ(d.proxy_reward, 0.0);
  EXPECT_GT(d.threshold, 0.0);
}

TEST(RobustStep, CleanConstantRewardPassesThrough) {
  const Bundle b = bundle_of(two_state_mdp());
  LearnerConfig c;
  c.kind = LearnerKind::robust_q;
  c.alpha = StepSize::constant(0.1);
  c.horizon = 100000;
  c.delta1 = 0.01;
  c.threshold = ThresholdSchedule::known(3.0, 0, 1.0, 0.1, 0.01, 0.0);
  LearnerState st(2, 2);
  st.t = 1;
  const StepDiag first = robust_step(st, {1, 1, 0, 3.0}, c, 0.5);
  EXPECT_TRUE(first.triggered);  // one sample: half_two is empty
  EXPECT_TRUE(std::isnan(first.robust_estimate));
  for (int i = 0; i < 20; ++i) {
    const StepDiag d = robust_step(st, {1, 1, 0, 3.0}, c, 0.5);
    ASSERT_FALSE(d.triggered);
    ASSERT_EQ(d.proxy_reward, 3.0);
  }
}

TEST(ConfigureLearner, DerivesDelta1AndTau) {
  const Bundle b = bundle_of(two_state_mdp());
  LearnerParams p;
  p.horizon = 5000;
  p.kind = LearnerKind::robust_q;
  LearnerConfig c = configure_learner(p, b.mdp, b.analysis);
  EXPECT_DOUBLE_EQ(c.delta1, known_delta1(0.05, 5000));
  EXPECT_FALSE(c.subsample_tau.has_value());
  EXPECT_NEAR(c.iterate_bound(0.5), 3.0 * b.mdp.sigma_tilde() / 0.5, 1e-12);

  p.kind = LearnerKind::robust_raq_m;
  p.p = 2;
  c = configure_learner(p, b.mdp, b.analysis);
  EXPECT_DOUBLE_EQ(c.delta1, agnostic_delta1(0.05, 2, 2, 5000, 2));
  EXPECT_EQ(*c.subsample_tau, block_parameter(b.analysis.mixing_time, 5000, 0.05));
  EXPECT_NEAR(c.iterate_bound(0.5), 3.0 * 25e6 / 0.5, 1e-3);

  p.kind = LearnerKind::robust_q;
  p.subsample_tau = 4;
  EXPECT_THROW(configure_learner(p, b.mdp, b.analysis), InvalidArgument);
  p.subsample_tau.reset();
  p.epsilon = 0.5;
  EXPECT_THROW(configure_learner(p, b.mdp, b.analysis), InvalidArgument);
}

TEST(RunLearner, CleanConvergenceOnTwoStateMdp) {
  const Bundle b = bundle_of(two_state_mdp());
  LearnerParams p;
  p.kind = LearnerKind::vanilla;
  p.horizon = 100000;
  const LearnerConfig c = configure_learner(p, b.mdp, b.analysis);
  const RunTrace tr = run_learner(b.view(), CorruptionConfig::clean(), c, Sampling::iid, 3);
  EXPECT_LT(tr.final_error(), 0.05 * b.q_star.inf_norm());
  EXPECT_EQ(tr.updates, 100000);
}

TEST(RunLearner, RobustCleanConvergenceOnTwoStateMdp) {
  const Bundle b = bundle_of(two_state_mdp());
  LearnerParams p;
  p.kind = LearnerKind::robust_q;
  p.horizon = 100000;
  const LearnerConfig c = configure_learner(p, b.mdp, b.analysis);
  ASSERT_LT(c.burn_in(), 50000);
  const RunTrace tr = run_learner(b.view(), CorruptionConfig::clean(), c, Sampling::iid, 3, {0, true});
  EXPECT_LT(tr.final_error(), 0.05 * b.q_star.inf_norm());
  EXPECT_EQ(tr.triggers_after_burn_in, 0);
  EXPECT_EQ(tr.iterate_bound_violations, 0);
  EXPECT_EQ(tr.proxy_bound_violations, 0);
}

TEST(RunLearner, MarkovUpdateCount) {
  const Bundle b = bundle_of(two_state_mdp());
  for (std::int64_t tau : {1, 3, 7, 10}) {
    for (std::int64_t T : {1, 10, 99, 1000}) {
      LearnerParams p;
      p.kind = LearnerKind::robust_q_m;
      p.horizon = T;
      p.subsample_tau = tau;
      const LearnerConfig c = configure_learner(p, b.mdp, b.analysis);
      const RunTrace tr = run_learner(b.view(), CorruptionConfig::clean(), c, Sampling::markov, 1);
      ASSERT_EQ(tr.updates, (T - 1) / tau + 1);
      std::int64_t accepted_rows = 0;
      for (std::size_t i = 0; i < tr.steps.size(); ++i) {
        ASSERT_EQ(tr.accepted[i] == 1, tr.steps[i] % tau == 0);
        accepted_rows += tr.accepted[i];
      }
      EXPECT_GT(accepted_rows, 0);
    }
  }
}

TEST(RunLearner, MarkovLearnerRejectsIidSampling) {
  const Bundle b = bundle_of(two_state_mdp());
  LearnerParams p;
  p.kind = LearnerKind::robust_q_m;
  p.horizon = 100;
  const LearnerConfig c = configure_learner(p, b.mdp, b.analysis);
  EXPECT_THROW(run_learner(b.view(), CorruptionConfig::clean(), c, Sampling::iid, 1), InvalidArgument);
}

TEST(RunLearner, DeterministicForSeed) {
  const Bundle b = bundle_of(two_state_mdp());
  LearnerParams p;
  p.kind = LearnerKind::robust_q;
  p.horizon = 3000;
  p.epsilon = 0.1;
  const LearnerConfig c = configure_learner(p, b.mdp, b.analysis);
  const CorruptionConfig corr(0.1, AttackSpec::constant_bias(-1e4));
  const RunTrace x = run_learner(b.view(), corr, c, Sampling::iid, 42);
  const RunTrace y = run_learner(b.view(), corr, c, Sampling::iid, 42);
  const RunTrace z = run_learner(b.view(), corr, c, Sampling::iid, 43);
  EXPECT_EQ(x.errors, y.errors);
  EXPECT_EQ(x.config_digest, y.config_digest);
  EXPECT_EQ(x.pair_visits, y.pair_visits);
  EXPECT_NE(x.pair_visits, z.pair_visits);
  EXPECT_GT(x.corrupted_observations, 0);
}

TEST(RunLearner, TraceShapeAndFiniteness) {
  const Bundle b = bundle_of(two_state_mdp());
  LearnerParams p;
  p.kind = LearnerKind::vanilla;
  p.horizon = 10;
  const LearnerConfig c = configure_learner(p, b.mdp, b.analysis);
  const RunTrace tr = run_learner(b.view(), CorruptionConfig::clean(), c, Sampling::iid, 0);
  ASSERT_EQ(tr.steps.size(), 10u);
  for (std::size_t i = 0; i < 10; ++i) {
    EXPECT_EQ(tr.steps[i], static_cast<std::int64_t>(i));
    EXPECT_TRUE(std::isfinite(tr.errors[i]));
  }
  const RunTrace strided = run_learner(b.view(), CorruptionConfig::clean(), c, Sampling::iid, 0, {4, false});
  EXPECT_EQ(strided.steps, (std::vector<std::int64_t>{0, 4, 8, 9}));
  EXPECT_EQ(strided.errors.back(), tr.errors.back());
}

TEST(SteadyState, WindowDefinition) {
  EXPECT_EQ(steady_state_window(250000), 2500);
  EXPECT_EQ(steady_state_window(10), 1);
  EXPECT_EQ(steady_state_window(101), 2);
  const std::vector<std::int64_t> steps = {0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
  const std::vector<double> vals = {9, 9, 9, 9, 9, 9, 9, 9, 1, 3};
  EXPECT_EQ(window_mean(steps, vals, 10, 2), 2.0);
  // Piecewise-constant reading of a strided trace.
  const std::vector<std::int64_t> s2 = {0, 5, 9};
  const std::vector<double> v2 = {4, 2, 6};
  EXPECT_DOUBLE_EQ(window_mean(s2, v2, 10, 3), (2 + 2 + 6) / 3.0);
}

TEST(ConfigDigest, SensitiveToSettings) {
  const Bundle b = bundle_of(two_state_mdp());
  LearnerParams p;
  p.horizon = 1000;
  const LearnerConfig c = configure_learner(p, b.mdp, b.analysis);
  const CorruptionConfig a(0.01, AttackSpec::constant_bias(-1e4));
  const CorruptionConfig d(0.01, AttackSpec::constant_bias(-2e4));
  EXPECT_EQ(config_digest(c, a, Sampling::iid), config_digest(c, a, Sampling::iid));
  EXPECT_NE(config_digest(c, a, Sampling::iid), config_digest(c, d, Sampling::iid));
  EXPECT_NE(config_digest(c, a, Sampling::iid), config_digest(c, a, Sampling::markov));
}
