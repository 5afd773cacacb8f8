#pragma once

// Rollouts with tree-structured sampling, routing of groups to per-policy
// batches, per-policy updates, evaluation and the ablation modes.

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "atgrpo/advantage.hpp"
#include "atgrpo/core.hpp"
#include "atgrpo/environment.hpp"
#include "atgrpo/policy.hpp"
#include "atgrpo/reward.hpp"

namespace atgrpo {

/// Training instances use seeds with the top bit set; evaluation seeds must
/// leave it clear so the two sets never overlap.
inline constexpr std::uint64_t kTrainSeedBit = 1ULL << 63;

std::uint64_t training_instance_seed(std::uint64_t master, std::size_t step, std::size_t env);

/// `count` held-out evaluation seeds derived from `master`.
std::vector<std::uint64_t> default_eval_seeds(std::uint64_t master, std::size_t count);

struct AgentTurnRecord {
  std::uint32_t agent = 0;
  std::uint64_t obs_digest = 0;
  std::vector<double> rewards;
  std::vector<double> advantages;
  std::size_t chosen = 0;
  std::string chosen_action;
};

struct RolloutRecord {
  std::size_t env_id = 0;
  std::size_t trajectory = 0;  // always 0 in tree mode
  std::size_t turn = 0;
  std::vector<AgentTurnRecord> agents;
  TerminationFlag term;
};

std::string rollout_dump_line(std::size_t step, const RolloutRecord& record);

struct RolloutContext {
  const ValidatedConfig& game;
  InstanceSpec spec;
  const RewardSchedule& schedule;
  AdvantageConfig advantage;
  SamplingMode mode = SamplingMode::tree;
  std::size_t step = 0;
  bool keep_records = false;
};

struct EnvRollout {
  std::vector<std::vector<Group>> groups_by_agent;  // this env's share of each D_i
  std::vector<double> reward_sum_by_agent;           // over every sampled candidate
  std::vector<std::size_t> reward_count_by_agent;
  std::vector<std::size_t> usable_by_turn;
  std::vector<RolloutRecord> records;
  std::size_t episodes = 0;
  std::size_t solved = 0;
  std::size_t turn_sum = 0;
};

/// One environment's rollout at `ctx.step`. `policies` is indexed by policy
/// id. In tree mode every agent branches K candidates at every turn, each
/// scored on a speculative turn, and the best one (smallest index on ties)
/// is executed. In parallel mode K independent trajectories start from the
/// same instance and only the initial prompt forms a K-group.
EnvRollout rollout_env(std::size_t e, std::span<const Policy* const> policies, const RolloutContext& ctx, Rng& rng);

/// B_m = union of D_i over agents with sigma(i) = m. Throws ContractViolation
/// when `datasets` does not have one entry per mapped agent.
std::vector<PerPolicyBatch> route(const std::vector<std::vector<Group>>& datasets, const RoleMapping& mapping,
                                  std::size_t n_policies);

/// Throws ContractViolation("routing violation ...") unless every group of
/// every D_i appears exactly once, in the batch of sigma(producing agent).
void check_routing(const std::vector<std::vector<Group>>& datasets, std::span<const PerPolicyBatch> batches,
                   const RoleMapping& mapping);

struct PolicyStepStats {
  PolicyId policy_id;
  std::uint64_t version = 0;  // after the update
  double mean_reward = 0.0;
  double mean_abs_advantage = 0.0;
  std::size_t groups = 0;
};

struct StepMetrics {
  std::size_t step = 0;  // 1-based count of completed updates
  std::vector<PolicyStepStats> policies;
  double success_rate = 0.0;
  double avg_turns = 0.0;
  std::size_t episodes = 0;
  std::size_t usable_groups = 0;
  std::vector<std::size_t> usable_groups_by_turn;
  double wall_ms = 0.0;
};

struct EvalResult {
  double success_rate = 0.0;
  double avg_turns = 0.0;
  std::size_t episodes = 0;
};

struct EvalRecord {
  std::size_t step = 0;
  EvalResult result;
};

std::vector<std::string> metrics_lines(const StepMetrics& metrics);
std::string eval_line(const EvalRecord& record);

using LineSink = std::function<void(const std::string&)>;

struct TrainOptions {
  InstanceSpec spec;
  RewardSchedule schedule;
  double learning_rate = 0.05;
  SamplingMode mode = SamplingMode::tree;
  AdvantageConfig advantage;
  std::size_t workers = 1;
  std::size_t eval_every = 10;  // 0 disables periodic evaluation
  bool record_wall_time = false;
  LineSink metrics_sink;  // JSON lines, in order
  LineSink rollout_sink;  // rollout debug dump; unset disables it
};

struct RunState {
  ValidatedConfig game;
  std::vector<std::shared_ptr<const PolicyParams>> params;  // indexed by policy id
  std::size_t step = 0;

  /// Zero-initialised parameters for every policy of `game`.
  static RunState fresh(ValidatedConfig game, EnvKind env);
};

/// E rollouts against the current snapshots, routing, one update per policy.
/// Installs the new snapshots and advances `state.step`.
StepMetrics train_step(RunState& state, const TrainOptions& options);

struct TrainResult {
  std::vector<PolicyParams> params;
  std::vector<StepMetrics> steps;
  std::vector<EvalRecord> evals;
};

/// total_steps train_steps. Evaluates on game.config.eval_seeds before the
/// first update, every eval_every updates, and after the last one.
TrainResult train(const ValidatedConfig& game, const TrainOptions& options);

/// Greedy (temperature 0), single trajectory per seed, no learning.
/// `policies` is indexed by policy id.
EvalResult evaluate(std::span<const Policy* const> policies, const RoleMapping& mapping, const InstanceSpec& spec,
                    std::span<const std::uint64_t> seeds, std::size_t horizon, std::size_t workers = 1);

EvalResult evaluate_params(std::span<const PolicyParams> params, const RoleMapping& mapping, const InstanceSpec& spec,
                           std::span<const std::uint64_t> seeds, std::size_t horizon, std::size_t workers = 1);

/// result[j] = snapshots[permutation[j]], restamped with policy id j. Throws
/// ConfigError for fewer than two policies or an invalid permutation.
std::vector<PolicyParams> swap_policies(std::span<const PolicyParams> snapshots,
                                        std::span<const std::size_t> permutation);

}  // namespace atgrpo
