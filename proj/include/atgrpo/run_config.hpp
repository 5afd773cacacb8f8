#pragma once

// Run configuration: a JSON document resolved against defaults, with every
// effective value echoed back so a run can be reproduced from its echo.
//
// Schema (all keys optional; unknown keys are rejected):
//   env            "plan-path" | "sudoku" | "sokoban"
//   difficulty     1..3
//   grid_size      0 = difficulty default; plan-path side 3..32, sudoku 4 or 9, sokoban 6
//   role_mode      "specialized" | "shared"
//   n_agents       2
//   branches       K >= 1
//   turns          T >= 1
//   n_envs         E >= 1
//   steps          S >= 1
//   temperature    sampling temperature >= 0
//   mixer          "appendix" | "main-text"
//   alpha          main-text team weight
//   lambda         appendix team weight; null keeps the environment preset
//   learning_rate  > 0
//   seed           master seed
//   eval_every     evaluation cadence in steps; 0 evaluates only at start and end
//   eval_count     number of held-out seeds derived from seed when eval_seeds is empty
//   eval_seeds     explicit evaluation seeds (top bit clear)
//   sampling       "tree" | "parallel"
//   degenerate     "zero" | "drop"
//   std_divisor    "sample" | "population"
//   norm_epsilon   > 0
//   workers        0 = machine parallelism
//   wall_time      record wall-clock milliseconds in metrics
//   out            output directory

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "atgrpo/core.hpp"
#include "atgrpo/trainer.hpp"

namespace atgrpo {

enum class RoleMode : std::uint8_t { specialized, shared };

struct RunConfig {
  EnvKind env = EnvKind::plan_path;
  int difficulty = 1;
  int grid_size = 0;
  RoleMode role_mode = RoleMode::specialized;
  std::size_t n_agents = 2;
  std::size_t branches = 4;
  std::size_t turns = 4;
  std::size_t n_envs = 64;
  std::size_t steps = 100;
  double temperature = 1.0;
  MixerForm mixer = MixerForm::appendix;
  double alpha = 1.0;
  std::optional<double> lambda;
  double learning_rate = 0.05;
  std::uint64_t seed = 0;
  std::size_t eval_every = 10;
  std::size_t eval_count = 200;
  std::vector<std::uint64_t> eval_seeds;
  SamplingMode sampling = SamplingMode::tree;
  DegeneratePolicy degenerate = DegeneratePolicy::zero_advantages;
  StdDivisor std_divisor = StdDivisor::sample;
  double norm_epsilon = 1e-8;
  std::size_t workers = 0;
  bool wall_time = false;
  std::string out = "runs/latest";
};

/// Parses a JSON document over the defaults. Throws ConfigError naming the
/// offending key.
RunConfig parse_run_config(std::string_view json_text, RunConfig base = {});
RunConfig load_run_config(const std::string& path, RunConfig base = {});

/// Every field, with eval_seeds expanded, as pretty-printed JSON.
std::string echo_run_config(const RunConfig& cfg);

struct ResolvedRun {
  ValidatedConfig game;
  InstanceSpec spec;
  RewardSchedule schedule;
  AdvantageConfig advantage;
  RunConfig config;  // with eval_seeds filled in
};

/// Applies every invariant (including env-specific size bounds) and builds
/// the trainer inputs. Throws ConfigError.
ResolvedRun resolve(const RunConfig& cfg);

TrainOptions train_options(const ResolvedRun& run);

}  // namespace atgrpo
