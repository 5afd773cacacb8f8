#include <gtest/gtest.h>

#include "atgrpo/trainer.hpp"

using namespace atgrpo;

namespace {

ValidatedConfig small_game(std::size_t m, std::size_t k = 4, std::size_t steps = 3, std::size_t envs = 8) {
  GameConfig cfg;
  cfg.n_policies = m;
  cfg.branches = k;
  cfg.n_envs = envs;
  cfg.total_steps = steps;
  cfg.seed = 21;
  cfg.eval_seeds = default_eval_seeds(21, 20);
  return validate_config(cfg, m == 1 ? RoleMapping::role_sharing(2) : RoleMapping::role_specialized(2));
}

TrainOptions plan_path_options() {
  TrainOptions o;
  o.spec = InstanceSpec{EnvKind::plan_path, 1, 0};
  o.schedule = preset_schedule(EnvKind::plan_path);
  o.eval_every = 2;
  return o;
}

Group keyed_group(std::uint32_t e, std::uint32_t agent) {
  Group g;
  g.key = GroupKey{e, agent, 0, 0};
  return g;
}

std::vector<std::string> all_lines(const ValidatedConfig& game, TrainOptions o) {
  std::vector<std::string> lines;
  o.metrics_sink = [&lines](const std::string& l) { lines.push_back(l); };
  train(game, o);
  return lines;
}

}  // namespace

TEST(Rollout, SolvedAtTurnTwoEmitsTwoGroupsPerAgent) {
  const auto game = small_game(1, 2, 3, 64);
  const auto optimal = scripted_policy(ScriptedKind::plan_path_optimal, EnvKind::plan_path);
  const Policy* table[] = {optimal.get()};
  const auto schedule = preset_schedule(EnvKind::plan_path);
  const RolloutContext ctx{game, InstanceSpec{EnvKind::plan_path, 1, 0}, schedule, {}, SamplingMode::tree, 0, true};
  bool found = false;
  for (std::size_t e = 0; e < game.config.n_envs && !found; ++e) {
    const auto s = std::get<plan_path::State>(generate(ctx.spec, training_instance_seed(21, 0, e)));
    if (s.d_now != 2) continue;
    found = true;
    Rng rng(1);
    const auto out = rollout_env(e, table, ctx, rng);
    EXPECT_EQ(out.groups_by_agent[0].size() + out.groups_by_agent[1].size(), 2u * 2u);
    EXPECT_EQ(out.records.size(), 2u);
    EXPECT_EQ(out.solved, 1u);
    EXPECT_EQ(out.turn_sum, 2u);
  }
  EXPECT_TRUE(found);
}

TEST(Rollout, GreedyRuleAndDeterminism) {
  const auto game = small_game(2, 4, 3, 8);
  auto p0 = std::make_shared<const PolicyParams>(PolicyParams::zeros(PolicyId{0}, plan_path::kFeatureDim));
  auto p1 = std::make_shared<const PolicyParams>(PolicyParams::zeros(PolicyId{1}, plan_path::kFeatureDim));
  const SoftmaxPolicy a(p0), b(p1);
  const Policy* table[] = {&a, &b};
  const auto schedule = preset_schedule(EnvKind::plan_path);
  const RolloutContext ctx{game, InstanceSpec{EnvKind::plan_path, 2, 0}, schedule, {}, SamplingMode::tree, 1, true};
  for (std::size_t e = 0; e < 8; ++e) {
    Rng r1(derive_seed(5, {e})), r2(derive_seed(5, {e}));
    const auto x = rollout_env(e, table, ctx, r1);
    const auto y = rollout_env(e, table, ctx, r2);
    ASSERT_EQ(x.records.size(), y.records.size());
    for (std::size_t i = 0; i < x.records.size(); ++i) {
      ASSERT_EQ(rollout_dump_line(1, x.records[i]), rollout_dump_line(1, y.records[i]));
      for (const auto& agent : x.records[i].agents) {
        const auto& r = agent.rewards;
        const auto first_max = static_cast<std::size_t>(std::max_element(r.begin(), r.end()) - r.begin());
        ASSERT_EQ(agent.chosen, first_max);
      }
    }
  }
}

TEST(Rollout, ParallelModeOnlyInitialPromptFormsAGroup) {
  const auto game = small_game(2, 4, 1, 16);
  auto p0 = std::make_shared<const PolicyParams>(PolicyParams::zeros(PolicyId{0}, plan_path::kFeatureDim));
  auto p1 = std::make_shared<const PolicyParams>(PolicyParams::zeros(PolicyId{1}, plan_path::kFeatureDim));
  const SoftmaxPolicy a(p0), b(p1);
  const Policy* table[] = {&a, &b};
  const auto schedule = preset_schedule(EnvKind::plan_path);
  const RolloutContext ctx{game, InstanceSpec{EnvKind::plan_path, 2, 0}, schedule, {}, SamplingMode::parallel, 0,
                           false};
  for (std::size_t e = 0; e < 16; ++e) {
    Rng rng(e);
    const auto out = rollout_env(e, table, ctx, rng);
    EXPECT_EQ(out.usable_by_turn[0], 1u);
    for (std::size_t t = 1; t < out.usable_by_turn.size(); ++t) EXPECT_EQ(out.usable_by_turn[t], 0u);
    EXPECT_TRUE(out.groups_by_agent[1].empty());
    EXPECT_EQ(out.episodes, 4u);
  }
}

TEST(Route, SharingUnionsAllAgents) {
  std::vector<std::vector<Group>> d(2);
  for (std::uint32_t e = 0; e < 8; ++e) d[0].push_back(keyed_group(e, 0));
  for (std::uint32_t e = 0; e < 6; ++e) d[1].push_back(keyed_group(e, 1));
  const auto batches = route(d, RoleMapping::role_sharing(2), 1);
  ASSERT_EQ(batches.size(), 1u);
  EXPECT_EQ(batches[0].groups.size(), 14u);
  EXPECT_NO_THROW(check_routing(d, batches, RoleMapping::role_sharing(2)));
}

TEST(Route, IdentityMappingKeepsDatasetsApart) {
  std::vector<std::vector<Group>> d(2);
  d[0].push_back(keyed_group(0, 0));
  d[1].push_back(keyed_group(0, 1));
  d[1].push_back(keyed_group(1, 1));
  const auto batches = route(d, RoleMapping::role_specialized(2), 2);
  EXPECT_EQ(batches[0].groups.size(), 1u);
  EXPECT_EQ(batches[1].groups.size(), 2u);
  EXPECT_EQ(batches[1].groups[1].key, d[1][1].key);
}

TEST(Route, MisroutedGroupIsAViolation) {
  std::vector<std::vector<Group>> d(2);
  d[0].push_back(keyed_group(0, 0));
  d[1].push_back(keyed_group(0, 1));
  auto batches = route(d, RoleMapping::role_specialized(2), 2);
  batches[0].groups.push_back(batches[1].groups.back());
  batches[1].groups.clear();
  EXPECT_THROW(check_routing(d, batches, RoleMapping::role_specialized(2)), ContractViolation);
  auto dropped = route(d, RoleMapping::role_specialized(2), 2);
  dropped[1].groups.clear();
  EXPECT_THROW(check_routing(d, dropped, RoleMapping::role_specialized(2)), ContractViolation);
}

TEST(Route, UnmappedAgent) {
  std::vector<std::vector<Group>> d(3);
  EXPECT_THROW(route(d, RoleMapping::role_specialized(2), 2), ContractViolation);
}

TEST(TrainStep, EveryPolicyAdvancesOneVersion) {
  auto state = RunState::fresh(small_game(2), EnvKind::plan_path);
  const auto m = train_step(state, plan_path_options());
  EXPECT_EQ(m.step, 1u);
  EXPECT_EQ(m.episodes, 8u);
  for (const auto& p : state.params) EXPECT_EQ(p->version, 1u);
  ASSERT_EQ(m.policies.size(), 2u);
  EXPECT_EQ(m.policies[1].version, 1u);
  // Tree mode: every (env, agent) at every reached turn forms a usable group.
  EXPECT_EQ(m.usable_groups_by_turn[0], 8u * 2u);
  EXPECT_GE(m.success_rate, 0.0);
  EXPECT_LE(m.success_rate, 1.0);
  EXPECT_GE(m.avg_turns, 1.0);
  EXPECT_LE(m.avg_turns, 4.0);
}

TEST(TrainStep, SingleBranchLeavesWeightsButBumpsVersion) {
  auto state = RunState::fresh(small_game(2, 1), EnvKind::plan_path);
  const auto before = *state.params[0];
  const auto m = train_step(state, plan_path_options());
  EXPECT_EQ(m.usable_groups, 0u);
  EXPECT_EQ(state.params[0]->weights, before.weights);
  EXPECT_EQ(state.params[0]->version, 1u);
}

TEST(Train, OneRecordPerStepAndPolicyPlusEvaluations) {
  const auto result = train(small_game(2), plan_path_options());
  EXPECT_EQ(result.steps.size(), 3u);
  // Step 0, step 2 (cadence) and step 3 (final).
  ASSERT_EQ(result.evals.size(), 3u);
  EXPECT_EQ(result.evals[0].step, 0u);
  EXPECT_EQ(result.evals[2].step, 3u);
  EXPECT_EQ(result.params[0].version, 3u);
}

TEST(Train, IdenticalSeedsGiveIdenticalLogsAcrossWorkerCounts) {
  auto o = plan_path_options();
  const auto game = small_game(2, 4, 4, 16);
  o.workers = 1;
  const auto one = all_lines(game, o);
  o.workers = 4;
  EXPECT_EQ(one, all_lines(game, o));
  o.workers = 1;
  EXPECT_EQ(one, all_lines(game, o));
  EXPECT_EQ(one.size(), 4u * 2u + 3u);
}

TEST(Evaluate, OptimalPolicySolvesEverySeed) {
  const auto optimal = scripted_policy(ScriptedKind::plan_path_optimal, EnvKind::plan_path);
  const Policy* table[] = {optimal.get()};
  const auto seeds = default_eval_seeds(3, 50);
  const auto r = evaluate(table, RoleMapping::role_sharing(2), InstanceSpec{EnvKind::plan_path, 2, 0}, seeds, 20);
  EXPECT_EQ(r.success_rate, 1.0);
  EXPECT_EQ(r.episodes, 50u);
}

TEST(Evaluate, RejectsEmptyAndTrainingSeeds) {
  const auto optimal = scripted_policy(ScriptedKind::plan_path_optimal, EnvKind::plan_path);
  const Policy* table[] = {optimal.get()};
  const InstanceSpec spec{EnvKind::plan_path, 1, 0};
  EXPECT_THROW(evaluate(table, RoleMapping::role_sharing(2), spec, {}, 4), ContractViolation);
  const std::uint64_t train_seed[] = {training_instance_seed(1, 0, 0)};
  EXPECT_THROW(evaluate(table, RoleMapping::role_sharing(2), spec, train_seed, 4), ContractViolation);
}

TEST(Evaluate, RandomPolicyOnSudokuIsReported) {
  const auto random = scripted_policy(ScriptedKind::random, EnvKind::sudoku);
  const Policy* table[] = {random.get()};
  const auto r = evaluate(table, RoleMapping::role_sharing(2), InstanceSpec{EnvKind::sudoku, 1, 0},
                          default_eval_seeds(4, 100), 6);
  std::cout << "[ info ] random 4x4 sudoku success " << r.success_rate << '\n';
  EXPECT_GE(r.success_rate, 0.0);
  EXPECT_LE(r.success_rate, 1.0);
}

TEST(Swap, IdentityPermutationChangesNothing) {
  const auto result = train(small_game(2), plan_path_options());
  const std::size_t identity[] = {0, 1};
  const auto swapped = swap_policies(result.params, identity);
  const auto seeds = default_eval_seeds(21, 20);
  const InstanceSpec spec{EnvKind::plan_path, 1, 0};
  const auto a = evaluate_params(result.params, RoleMapping::role_specialized(2), spec, seeds, 4);
  const auto b = evaluate_params(swapped, RoleMapping::role_specialized(2), spec, seeds, 4);
  EXPECT_EQ(a.success_rate, b.success_rate);
  EXPECT_EQ(a.avg_turns, b.avg_turns);
}

TEST(Swap, NeedsAtLeastTwoPolicies) {
  const std::vector<PolicyParams> one{PolicyParams::zeros(PolicyId{0}, 3)};
  const std::size_t perm[] = {0};
  EXPECT_THROW(swap_policies(one, perm), ConfigError);
  const std::vector<PolicyParams> two{PolicyParams::zeros(PolicyId{0}, 3), PolicyParams::zeros(PolicyId{1}, 3)};
  const std::size_t bad[] = {0, 0};
  EXPECT_THROW(swap_policies(two, bad), ConfigError);
}

TEST(Ablation, DropDegenerateRemovesZeroVarianceGroups) {
  auto o = plan_path_options();
  auto state = RunState::fresh(small_game(2), EnvKind::plan_path);
  auto dropped_state = state;
  const auto kept = train_step(state, o);
  o.advantage.degenerate_policy = DegeneratePolicy::drop_group;
  const auto dropped = train_step(dropped_state, o);
  EXPECT_LE(dropped.usable_groups, kept.usable_groups);
  for (const auto& p : dropped.policies) EXPECT_GT(p.mean_abs_advantage, 0.0);
}

TEST(Ablation, OtherEnvironmentsTrain) {
  for (EnvKind env : {EnvKind::sokoban, EnvKind::sudoku}) {
    TrainOptions o;
    o.spec = InstanceSpec{env, 1, 0};
    o.schedule = preset_schedule(env);
    o.eval_every = 0;
    const auto r = train(small_game(2, 4, 2, 4), o);
    EXPECT_EQ(r.steps.size(), 2u);
    EXPECT_EQ(r.params[0].weights.size(), feature_dim(env));
  }
}
