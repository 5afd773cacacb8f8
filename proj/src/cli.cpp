#include "atgrpo/cli.hpp"

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>

#include "atgrpo/policy.hpp"
#include "atgrpo/run_config.hpp"
#include "atgrpo/trainer.hpp"

namespace atgrpo {
namespace {

namespace fs = std::filesystem;

// Flag values are optional so that only flags actually given override the
// config file.
struct RunFlags {
  std::string config_path;
  std::optional<std::string> env, role_mode, mixer, out;
  std::optional<std::size_t> steps, k, turns, n_envs, eval_every, workers, eval_count;
  std::optional<std::uint64_t> seed;
  std::optional<double> alpha, lambda, lr, temperature;
  std::optional<int> difficulty, grid;
  std::optional<std::uint64_t> dump_instance;
  bool dump_rollouts = false;
  bool print_schedule = false;
  bool wall_time = false;
};

void add_game_flags(CLI::App& cmd, RunFlags& f) {
  cmd.add_option("--config", f.config_path, "JSON run configuration");
  cmd.add_option("--env", f.env, "plan-path | sudoku | sokoban");
  cmd.add_option("--difficulty", f.difficulty, "instance difficulty 1..3");
  cmd.add_option("--grid", f.grid, "grid size override");
  cmd.add_option("--turns", f.turns, "turn horizon T");
  cmd.add_option("--seed", f.seed, "master seed");
  cmd.add_option("--role-mode", f.role_mode, "specialized | shared");
  cmd.add_option("--eval-count", f.eval_count, "number of held-out evaluation seeds");
  cmd.add_option("--workers", f.workers, "worker threads (0 = machine parallelism)");
  cmd.add_option("--out", f.out, "output directory");
}

void add_train_flags(CLI::App& cmd, RunFlags& f) {
  add_game_flags(cmd, f);
  cmd.add_option("--steps", f.steps, "training steps S");
  cmd.add_option("--k", f.k, "branches per agent and turn K");
  cmd.add_option("--n-envs", f.n_envs, "environments per step E");
  cmd.add_option("--mixer", f.mixer, "appendix | main-text");
  cmd.add_option("--alpha", f.alpha, "team weight for the main-text mixer");
  cmd.add_option("--lambda", f.lambda, "team weight for the appendix mixer");
  cmd.add_option("--lr", f.lr, "learning rate");
  cmd.add_option("--temperature", f.temperature, "sampling temperature");
  cmd.add_option("--eval-every", f.eval_every, "evaluation cadence in steps");
  cmd.add_flag("--dump-rollouts", f.dump_rollouts, "write rollouts.jsonl");
  cmd.add_option("--dump-instance", f.dump_instance, "print the instance for this seed and exit");
  cmd.add_flag("--print-schedule", f.print_schedule, "print the reward schedule and exit");
  cmd.add_flag("--wall-time", f.wall_time, "record wall-clock time in metrics");
}

RunConfig build_config(const RunFlags& f) {
  RunConfig cfg = f.config_path.empty() ? RunConfig{} : load_run_config(f.config_path);
  if (f.env) cfg.env = parse_env_kind(*f.env);
  if (f.difficulty) cfg.difficulty = *f.difficulty;
  if (f.grid) cfg.grid_size = *f.grid;
  if (f.turns) cfg.turns = *f.turns;
  if (f.seed) cfg.seed = *f.seed;
  if (f.role_mode) {
    if (*f.role_mode == "shared") {
      cfg.role_mode = RoleMode::shared;
    } else if (*f.role_mode == "specialized") {
      cfg.role_mode = RoleMode::specialized;
    } else {
      throw ConfigError("role_mode", "unknown role mode '" + *f.role_mode + "'");
    }
  }
  if (f.eval_count) {
    cfg.eval_count = *f.eval_count;
    cfg.eval_seeds.clear();
  }
  if (f.workers) cfg.workers = *f.workers;
  if (f.out) cfg.out = *f.out;
  if (f.steps) cfg.steps = *f.steps;
  if (f.k) cfg.branches = *f.k;
  if (f.n_envs) cfg.n_envs = *f.n_envs;
  if (f.mixer) cfg.mixer = parse_mixer_form(*f.mixer);
  if (f.alpha) cfg.alpha = *f.alpha;
  if (f.lambda) cfg.lambda = *f.lambda;
  if (f.lr) cfg.learning_rate = *f.lr;
  if (f.temperature) cfg.temperature = *f.temperature;
  if (f.eval_every) cfg.eval_every = *f.eval_every;
  if (f.wall_time) cfg.wall_time = true;
  return cfg;
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw ConfigError("out", "cannot write " + path.string());
  return os;
}

std::string format_eval(const EvalResult& r) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(6) << "success_rate " << r.success_rate << " avg_turns " << r.avg_turns
     << " episodes " << r.episodes;
  return os.str();
}

int do_train(const RunFlags& flags, std::optional<std::string> ablation, std::ostream& out) {
  RunConfig cfg = build_config(flags);
  if (ablation) {
    if (*ablation == "parallel-sampling") {
      cfg.sampling = SamplingMode::parallel;
    } else if (*ablation == "drop-degenerate") {
      cfg.degenerate = DegeneratePolicy::drop_group;
    } else {
      throw ConfigError("mode", "unknown ablation mode '" + *ablation + "'");
    }
  }
  const ResolvedRun run = resolve(cfg);

  if (flags.print_schedule) {
    out << format_schedule(run.schedule);
    return kExitOk;
  }
  if (flags.dump_instance) {
    out << dump_instance(generate(run.spec, *flags.dump_instance)) << '\n';
    return kExitOk;
  }

  const fs::path dir = run.config.out;
  fs::create_directories(dir);
  open_out(dir / "config.json") << echo_run_config(run.config);
  auto metrics = open_out(dir / "metrics.jsonl");
  std::ofstream rollouts;
  TrainOptions options = train_options(run);
  options.metrics_sink = [&metrics](const std::string& line) { metrics << line << '\n'; };
  if (flags.dump_rollouts) {
    rollouts = open_out(dir / "rollouts.jsonl");
    options.rollout_sink = [&rollouts](const std::string& line) { rollouts << line << '\n'; };
  }

  const auto result = train(run.game, options);
  for (const auto& p : result.params) {
    const auto stem = "policy_" + std::to_string(p.policy_id.value);
    save_checkpoint(dir / (stem + ".ckpt"), p);
    open_out(dir / (stem + ".txt")) << export_text(p);
  }
  if (!result.evals.empty()) {
    out << "first eval: " << format_eval(result.evals.front().result) << '\n';
    out << "final eval: " << format_eval(result.evals.back().result) << '\n';
  }
  out << "wrote " << (dir / "metrics.jsonl").string() << '\n';
  return kExitOk;
}

struct EvalFlags {
  RunFlags run;
  std::vector<std::string> checkpoints;
  std::optional<std::string> policy;
  std::vector<std::uint64_t> seeds;
  bool swap = false;
};

int do_eval(const EvalFlags& flags, std::ostream& out) {
  RunConfig cfg = build_config(flags.run);
  if (!flags.seeds.empty()) cfg.eval_seeds = flags.seeds;
  if (flags.checkpoints.empty() == !flags.policy.has_value()) {
    throw ConfigError("checkpoint", "give either --checkpoint paths or --policy, not both");
  }
  if (flags.policy) cfg.role_mode = RoleMode::shared;
  if (!flags.checkpoints.empty()) {
    cfg.role_mode = flags.checkpoints.size() == 1 ? RoleMode::shared : RoleMode::specialized;
  }
  const ResolvedRun run = resolve(cfg);
  const auto& game = run.game.config;

  EvalResult result;
  if (flags.policy) {
    if (flags.swap) throw ConfigError("swap", "swapping needs a role-specialized run with at least 2 policies");
    const auto policy = scripted_policy(parse_scripted_kind(*flags.policy), run.spec.kind);
    const Policy* table[] = {policy.get()};
    result = evaluate(table, run.game.mapping, run.spec, game.eval_seeds, game.turn_horizon, run.config.workers);
  } else {
    std::vector<PolicyParams> params;
    for (std::size_t m = 0; m < flags.checkpoints.size(); ++m) {
      if (!fs::exists(flags.checkpoints[m])) {
        throw ConfigError("checkpoint", "checkpoint not found: " + flags.checkpoints[m]);
      }
      params.push_back(load_checkpoint(flags.checkpoints[m]));
      if (params.back().weights.size() != feature_dim(run.spec.kind)) {
        throw ContractViolation("checkpoint " + flags.checkpoints[m] + " has dimension " +
                                std::to_string(params.back().weights.size()) + ", env " +
                                std::string(to_string(run.spec.kind)) + " needs " +
                                std::to_string(feature_dim(run.spec.kind)));
      }
      params.back().policy_id = PolicyId{static_cast<std::uint32_t>(m)};
    }
    if (flags.swap) {
      std::vector<std::size_t> perm(params.size());
      for (std::size_t j = 0; j < perm.size(); ++j) perm[j] = (j + 1) % perm.size();
      params = swap_policies(params, perm);
    }
    result = evaluate_params(params, run.game.mapping, run.spec, game.eval_seeds, game.turn_horizon,
                             run.config.workers);
  }
  out << format_eval(result) << '\n';
  if (flags.run.out) {
    fs::create_directories(*flags.run.out);
    std::ofstream log(fs::path(*flags.run.out) / "eval.jsonl", std::ios::app);
    log << eval_line(EvalRecord{0, result}) << '\n';
  }
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Multi-agent group-relative policy optimization on grid puzzles", "atgrpo"};
  app.require_subcommand(1);

  RunFlags train_flags;
  auto* train_cmd = app.add_subcommand("train", "train policies and write metrics and checkpoints");
  add_train_flags(*train_cmd, train_flags);

  RunFlags ablate_flags;
  std::string ablate_mode;
  auto* ablate_cmd = app.add_subcommand("ablate", "train under an ablation");
  add_train_flags(*ablate_cmd, ablate_flags);
  ablate_cmd->add_option("--mode", ablate_mode, "parallel-sampling | drop-degenerate")->required();

  EvalFlags eval_flags;
  auto* eval_cmd = app.add_subcommand("eval", "greedy evaluation of checkpoints or a scripted policy");
  add_game_flags(*eval_cmd, eval_flags.run);
  eval_cmd->add_option("--checkpoint", eval_flags.checkpoints, "checkpoint per policy, in policy order");
  eval_cmd->add_option("--policy", eval_flags.policy,
                       "scripted policy: random | plan-path-optimal | sokoban-greedy | sudoku-backtrack");
  eval_cmd->add_option("--eval-seeds", eval_flags.seeds, "explicit evaluation seeds");
  eval_cmd->add_flag("--swap", eval_flags.swap, "rotate the policy-to-role binding before evaluating");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (train_cmd->parsed()) return do_train(train_flags, std::nullopt, out);
    if (ablate_cmd->parsed()) return do_train(ablate_flags, ablate_mode, out);
    return do_eval(eval_flags, out);
  } catch (const ConfigError& e) {
    err << "config error [" << e.field() << "]: " << e.what() << '\n';
    return kExitConfig;
  } catch (const ContractViolation& e) {
    err << "contract violation: " << e.what() << '\n';
    return kExitContract;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace atgrpo
