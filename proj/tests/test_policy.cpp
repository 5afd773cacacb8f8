#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "atgrpo/policy.hpp"
#include "atgrpo/trainer.hpp"

using namespace atgrpo;

namespace {

std::shared_ptr<const CandidateMenu> random_menu(Rng& rng, std::size_t n, std::size_t dim) {
  auto menu = std::make_shared<CandidateMenu>();
  menu->feature_dim = dim;
  for (std::size_t j = 0; j < n; ++j) {
    menu->entries.push_back(MacroAction{j, Move::up, false});
    for (std::size_t d = 0; d < dim; ++d) menu->features.push_back(rng.uniform() * 2.0 - 1.0);
  }
  return menu;
}

PerPolicyBatch one_group_batch(std::shared_ptr<const CandidateMenu> menu, std::vector<std::size_t> picks,
                               std::vector<double> advantages, std::uint64_t version = 0) {
  Group g;
  g.observation.state_encoding = "o";
  g.menu = menu;
  for (auto j : picks) g.candidates.push_back(Candidate{menu->entries[j], 0.0, 0.0, version, "o"});
  g.advantages = std::move(advantages);
  return PerPolicyBatch{PolicyId{0}, {g}, version, 1.0};
}

const Observation kObs{Role::planner, "o", TurnIndex{0}, {}};

}  // namespace

TEST(SampleK, UniformWeightsGiveQuarterProbability) {
  Rng rng(1);
  const auto menu = random_menu(rng, 4, 3);
  const auto params = PolicyParams::zeros(PolicyId{0}, 3);
  for (const auto& s : sample_k(params, kObs, *menu, 1.0, 16, rng)) EXPECT_NEAR(s.logprob, std::log(0.25), 1e-12);
  for (const auto& e : menu->entries) EXPECT_NEAR(logprob(params, kObs, *menu, e, 1.0), -1.3862943611198906, 1e-12);
}

TEST(SampleK, TemperatureZeroIsArgmax) {
  Rng rng(2);
  const auto menu = random_menu(rng, 5, 4);
  PolicyParams params{{0.3, -1.0, 2.0, 0.5}, 0, PolicyId{0}};
  const auto lp = menu_log_probs(params.weights, *menu, 1.0);
  const auto best = static_cast<std::size_t>(std::max_element(lp.begin(), lp.end()) - lp.begin());
  for (const auto& s : sample_k(params, kObs, *menu, 0.0, 10, rng)) {
    EXPECT_EQ(s.action.menu_index, best);
    EXPECT_EQ(s.logprob, 0.0);
  }
}

TEST(SampleK, TiesAtTemperatureZeroGoToSmallestIndex) {
  Rng rng(3);
  const auto menu = random_menu(rng, 4, 2);
  const auto params = PolicyParams::zeros(PolicyId{0}, 2);
  EXPECT_EQ(sample_k(params, kObs, *menu, 0.0, 1, rng)[0].action.menu_index, 0u);
}

TEST(SampleK, FixedSeedReproduces) {
  Rng menu_rng(4);
  const auto menu = random_menu(menu_rng, 6, 3);
  PolicyParams params{{0.2, 0.1, -0.4}, 3, PolicyId{0}};
  Rng a(77), b(77);
  const auto x = sample_k(params, kObs, *menu, 1.0, 32, a);
  const auto y = sample_k(params, kObs, *menu, 1.0, 32, b);
  for (std::size_t i = 0; i < x.size(); ++i) {
    EXPECT_EQ(x[i].action, y[i].action);
    EXPECT_EQ(x[i].sampled_version, 3u);
    EXPECT_DOUBLE_EQ(x[i].logprob, logprob(params, kObs, *menu, x[i].action, 1.0));
  }
}

TEST(SampleK, EmptyMenuAndNegativeTemperatureRejected) {
  CandidateMenu empty;
  empty.feature_dim = 2;
  Rng rng(1);
  const auto params = PolicyParams::zeros(PolicyId{0}, 2);
  EXPECT_THROW(sample_k(params, kObs, empty, 1.0, 1, rng), ContractViolation);
  const auto menu = random_menu(rng, 3, 2);
  EXPECT_THROW(sample_k(params, kObs, *menu, -1.0, 1, rng), ContractViolation);
}

TEST(Logprob, NormalizesAndMatchesScaleIdentity) {
  Rng rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    const auto menu = random_menu(rng, 2 + rng.index(8), 4);
    std::vector<double> w(4);
    for (auto& x : w) x = rng.uniform() * 6.0 - 3.0;
    const double tau = 0.1 + rng.uniform() * 3.0;
    const auto lp = menu_log_probs(w, *menu, tau);
    double total = 0.0;
    for (double l : lp) total += std::exp(l);
    ASSERT_NEAR(total, 1.0, 1e-9);
    std::vector<double> doubled = w;
    for (auto& x : doubled) x *= 2.0;
    const auto lp2 = menu_log_probs(doubled, *menu, 2.0 * tau);
    for (std::size_t j = 0; j < lp.size(); ++j) ASSERT_NEAR(lp[j], lp2[j], 1e-12);
  }
}

TEST(Logprob, ActionNotInMenuRejected) {
  Rng rng(6);
  const auto menu = random_menu(rng, 3, 2);
  EXPECT_THROW(logprob(PolicyParams::zeros(PolicyId{0}, 2), kObs, *menu, MacroAction{7, Move::up, false}, 1.0),
               ContractViolation);
}

TEST(Loss, SymmetricAdvantagesCancelUnderUniformPolicy) {
  Rng rng(7);
  const auto menu = random_menu(rng, 2, 3);
  const auto report = loss(PolicyParams::zeros(PolicyId{0}, 3), one_group_batch(menu, {0, 1}, {1.0, -1.0}));
  EXPECT_NEAR(report.loss, 0.0, 1e-15);
}

TEST(Loss, ZeroAdvantagesGiveZeroLossAndGradient) {
  Rng rng(8);
  const auto menu = random_menu(rng, 4, 3);
  PolicyParams params{{1.0, -2.0, 0.5}, 0, PolicyId{0}};
  const auto report = loss(params, one_group_batch(menu, {0, 1, 3, 3}, {0, 0, 0, 0}));
  EXPECT_EQ(report.loss, 0.0);
  for (double g : report.gradient) EXPECT_EQ(g, 0.0);
}

TEST(Loss, GradientMatchesCentralDifferences) {
  Rng rng(9);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t dim = 5;
    PerPolicyBatch batch{PolicyId{0}, {}, 0, 0.5 + rng.uniform()};
    for (int g = 0; g < 3; ++g) {
      Group group;
      group.observation.state_encoding = "o";
      group.menu = random_menu(rng, 3 + rng.index(4), dim);
      for (int c = 0; c < 4; ++c) {
        group.candidates.push_back(
            Candidate{group.menu->entries[rng.index(group.menu->size())], 0.0, 0.0, 0, "o"});
        group.advantages.push_back(rng.uniform() * 2.0 - 1.0);
      }
      batch.groups.push_back(group);
    }
    PolicyParams params{std::vector<double>(dim), 0, PolicyId{0}};
    for (auto& w : params.weights) w = rng.uniform() * 2.0 - 1.0;
    const auto report = loss(params, batch);
    for (std::size_t d = 0; d < dim; ++d) {
      auto plus = params, minus = params;
      plus.weights[d] += 1e-5;
      minus.weights[d] -= 1e-5;
      const double fd = (loss(plus, batch).loss - loss(minus, batch).loss) / 2e-5;
      ASSERT_NEAR(report.gradient[d], fd, 1e-6);
    }
  }
}

TEST(Loss, StaleBatchIsAnOnPolicyViolation) {
  Rng rng(10);
  const auto menu = random_menu(rng, 3, 2);
  PolicyParams params{{0.0, 0.0}, 5, PolicyId{0}};
  EXPECT_THROW(loss(params, one_group_batch(menu, {0, 1}, {1, -1}, 4)), ContractViolation);
  auto batch = one_group_batch(menu, {0, 1}, {1, -1}, 5);
  batch.groups[0].candidates[1].sampled_version = 4;
  EXPECT_THROW(update(params, batch, 0.1), ContractViolation);
}

TEST(Update, RaisesProbabilityOfPositiveAdvantageAction) {
  Rng rng(11);
  const auto menu = random_menu(rng, 4, 3);
  const auto params = PolicyParams::zeros(PolicyId{0}, 3);
  const auto batch = one_group_batch(menu, {2, 0}, {1.0, -1.0});
  const auto next = update(params, batch, 0.1);
  EXPECT_GT(logprob(next, kObs, *menu, menu->entries[2], 1.0), logprob(params, kObs, *menu, menu->entries[2], 1.0));
  EXPECT_EQ(next.version, 1u);
  EXPECT_EQ(params.version, 0u);
}

TEST(Update, ZeroLearningRateStillBumpsVersion) {
  Rng rng(12);
  const auto menu = random_menu(rng, 4, 3);
  PolicyParams params{{0.1, 0.2, 0.3}, 0, PolicyId{0}};
  const auto next = update(params, one_group_batch(menu, {1, 3}, {1, -1}), 0.0);
  EXPECT_EQ(next.weights, params.weights);
  EXPECT_EQ(next.version, 1u);
}

TEST(Update, TwoStepsDifferFromOneDoubledStep) {
  Rng rng(13);
  const auto menu = random_menu(rng, 4, 3);
  const auto params = PolicyParams::zeros(PolicyId{0}, 3);
  const auto first = update(params, one_group_batch(menu, {1, 3}, {1, -0.5}, 0), 0.5);
  const auto second = update(first, one_group_batch(menu, {1, 3}, {1, -0.5}, 1), 0.5);
  const auto doubled = update(params, one_group_batch(menu, {1, 3}, {1, -0.5}, 0), 1.0);
  double diff = 0.0;
  for (std::size_t d = 0; d < 3; ++d) diff += std::abs(second.weights[d] - doubled.weights[d]);
  EXPECT_GT(diff, 1e-6);
}

TEST(Scripted, KindEnvMismatch) {
  EXPECT_THROW(scripted_policy(ScriptedKind::sudoku_backtrack, EnvKind::plan_path), ConfigError);
  EXPECT_THROW(parse_scripted_kind("oracle"), ConfigError);
  EXPECT_NO_THROW(scripted_policy(ScriptedKind::random, EnvKind::sokoban));
}

TEST(Scripted, PlanPathOptimalTakesExactlyTheShortestPath) {
  const auto policy = scripted_policy(ScriptedKind::plan_path_optimal, EnvKind::plan_path);
  Rng rng(0);
  for (int goal_r = 0; goal_r < 5; ++goal_r) {
    EnvState s = plan_path::make_state(OccupancyGrid(5, 5), {0, 0}, {goal_r, 4});
    const int expected = *bfs_distance(OccupancyGrid(5, 5), {0, 0}, {goal_r, 4});
    int turns = 0;
    TerminationFlag term;
    while (!term.done) {
      for (Role role : {Role::planner, Role::tool}) {
        const auto obs = observe(s, role);
        const auto menu = legal_menu(s, role);
        s = act(s, role, policy->sample({s, role, obs, menu}, 0.0, 1, rng)[0].action);
      }
      auto r = finish_turn(s, 20);
      s = r.next;
      term = r.term;
      ++turns;
    }
    EXPECT_EQ(term.cause, TerminationCause::solved);
    EXPECT_EQ(turns, expected);
  }
}

TEST(Scripted, SudokuBacktrackSolvesGeneratedInstances) {
  const auto policy = scripted_policy(ScriptedKind::sudoku_backtrack, EnvKind::sudoku);
  const Policy* table[] = {policy.get()};
  std::vector<std::uint64_t> seeds;
  for (std::uint64_t s = 0; s < 30; ++s) seeds.push_back(s);
  const auto r = evaluate(table, RoleMapping::role_sharing(2), InstanceSpec{EnvKind::sudoku, 3, 0}, seeds, 10);
  EXPECT_EQ(r.success_rate, 1.0);
}

TEST(Scripted, SokobanGreedySolvesEasyInstances) {
  const auto policy = scripted_policy(ScriptedKind::sokoban_greedy, EnvKind::sokoban);
  const Policy* table[] = {policy.get()};
  std::vector<std::uint64_t> seeds;
  for (std::uint64_t s = 0; s < 30; ++s) seeds.push_back(s);
  const auto r = evaluate(table, RoleMapping::role_sharing(2), InstanceSpec{EnvKind::sokoban, 1, 0}, seeds, 4);
  EXPECT_EQ(r.success_rate, 1.0);
}

TEST(Scripted, RandomIsFarBelowOptimalOnLargeGrids) {
  const auto random = scripted_policy(ScriptedKind::random, EnvKind::plan_path);
  const auto optimal = scripted_policy(ScriptedKind::plan_path_optimal, EnvKind::plan_path);
  std::vector<std::uint64_t> seeds;
  for (std::uint64_t s = 0; s < 100; ++s) seeds.push_back(s);
  const InstanceSpec spec{EnvKind::plan_path, 3, 0};
  const Policy* rt[] = {random.get()};
  const Policy* ot[] = {optimal.get()};
  const auto r = evaluate(rt, RoleMapping::role_sharing(2), spec, seeds, 100);
  const auto o = evaluate(ot, RoleMapping::role_sharing(2), spec, seeds, 100);
  std::cout << "[ info ] 10x10 plan-path success: random " << r.success_rate << ", optimal " << o.success_rate
            << '\n';
  EXPECT_EQ(o.success_rate, 1.0);
}

TEST(Checkpoint, BinaryRoundTripAndText) {
  const auto dir = std::filesystem::temp_directory_path() / "atgrpo_ckpt_test";
  std::filesystem::create_directories(dir);
  PolicyParams p{{1.5, -0.25, 1e-300, -0.0}, 42, PolicyId{1}};
  save_checkpoint(dir / "p.ckpt", p);
  EXPECT_EQ(load_checkpoint(dir / "p.ckpt"), p);
  EXPECT_EQ(std::filesystem::file_size(dir / "p.ckpt"), 8u + 4u + 8u + 8u + 4u * 8u);
  EXPECT_NE(export_text(p).find("version 42"), std::string::npos);
}

TEST(Checkpoint, BadMagicRejected) {
  const auto path = std::filesystem::temp_directory_path() / "atgrpo_bad.ckpt";
  std::ofstream(path, std::ios::binary) << "NOTACKPT0000000000000000";
  EXPECT_THROW(load_checkpoint(path), ContractViolation);
}
