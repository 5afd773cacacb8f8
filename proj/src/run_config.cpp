#include "atgrpo/run_config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>
#include <thread>

namespace atgrpo {
namespace {

using nlohmann::json;

std::string_view to_string(RoleMode m) { return m == RoleMode::shared ? "shared" : "specialized"; }
std::string_view to_string(SamplingMode m) { return m == SamplingMode::parallel ? "parallel" : "tree"; }
std::string_view to_string(DegeneratePolicy p) { return p == DegeneratePolicy::drop_group ? "drop" : "zero"; }
std::string_view to_string(StdDivisor d) { return d == StdDivisor::population ? "population" : "sample"; }

template <class T>
T get_as(const json& j, const std::string& key) {
  try {
    return j.get<T>();
  } catch (const json::exception&) {
    throw ConfigError(key, "config key '" + key + "' has the wrong type");
  }
}

std::size_t get_count(const json& j, const std::string& key) {
  if (!j.is_number_integer() || j.get<long long>() < 0) {
    throw ConfigError(key, "config key '" + key + "' must be a non-negative integer");
  }
  return j.get<std::size_t>();
}

std::string get_string(const json& j, const std::string& key) { return get_as<std::string>(j, key); }

template <class E>
E parse_choice(const std::string& key, const std::string& text, std::initializer_list<std::pair<const char*, E>> options) {
  for (const auto& [name, value] : options)
    if (text == name) return value;
  throw ConfigError(key, "unknown value '" + text + "' for '" + key + "'");
}

}  // namespace

RunConfig parse_run_config(std::string_view json_text, RunConfig cfg) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError("config", std::string("config is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ConfigError("config", "config must be a JSON object");

  for (const auto& [key, v] : doc.items()) {
    if (key == "env") {
      cfg.env = parse_env_kind(get_string(v, key));
    } else if (key == "difficulty") {
      cfg.difficulty = get_as<int>(v, key);
    } else if (key == "grid_size") {
      cfg.grid_size = get_as<int>(v, key);
    } else if (key == "role_mode") {
      cfg.role_mode = parse_choice<RoleMode>(key, get_string(v, key),
                                             {{"specialized", RoleMode::specialized}, {"shared", RoleMode::shared}});
    } else if (key == "n_agents") {
      cfg.n_agents = get_count(v, key);
    } else if (key == "branches") {
      cfg.branches = get_count(v, key);
    } else if (key == "turns") {
      cfg.turns = get_count(v, key);
    } else if (key == "n_envs") {
      cfg.n_envs = get_count(v, key);
    } else if (key == "steps") {
      cfg.steps = get_count(v, key);
    } else if (key == "temperature") {
      cfg.temperature = get_as<double>(v, key);
    } else if (key == "mixer") {
      cfg.mixer = parse_mixer_form(get_string(v, key));
    } else if (key == "alpha") {
      cfg.alpha = get_as<double>(v, key);
    } else if (key == "lambda") {
      cfg.lambda = v.is_null() ? std::nullopt : std::optional<double>(get_as<double>(v, key));
    } else if (key == "learning_rate") {
      cfg.learning_rate = get_as<double>(v, key);
    } else if (key == "seed") {
      cfg.seed = get_as<std::uint64_t>(v, key);
    } else if (key == "eval_every") {
      cfg.eval_every = get_count(v, key);
    } else if (key == "eval_count") {
      cfg.eval_count = get_count(v, key);
    } else if (key == "eval_seeds") {
      cfg.eval_seeds = get_as<std::vector<std::uint64_t>>(v, key);
    } else if (key == "sampling") {
      cfg.sampling = parse_choice<SamplingMode>(key, get_string(v, key),
                                                {{"tree", SamplingMode::tree}, {"parallel", SamplingMode::parallel}});
    } else if (key == "degenerate") {
      cfg.degenerate = parse_choice<DegeneratePolicy>(
          key, get_string(v, key), {{"zero", DegeneratePolicy::zero_advantages}, {"drop", DegeneratePolicy::drop_group}});
    } else if (key == "std_divisor") {
      cfg.std_divisor = parse_choice<StdDivisor>(
          key, get_string(v, key), {{"sample", StdDivisor::sample}, {"population", StdDivisor::population}});
    } else if (key == "norm_epsilon") {
      cfg.norm_epsilon = get_as<double>(v, key);
    } else if (key == "workers") {
      cfg.workers = get_count(v, key);
    } else if (key == "wall_time") {
      cfg.wall_time = get_as<bool>(v, key);
    } else if (key == "out") {
      cfg.out = get_string(v, key);
    } else {
      throw ConfigError(key, "unknown config key '" + key + "'");
    }
  }
  return cfg;
}

RunConfig load_run_config(const std::string& path, RunConfig base) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config", "cannot read config file " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_run_config(ss.str(), std::move(base));
}

std::string echo_run_config(const RunConfig& cfg) {
  json j;
  j["env"] = std::string(to_string(cfg.env));
  j["difficulty"] = cfg.difficulty;
  j["grid_size"] = cfg.grid_size;
  j["role_mode"] = std::string(to_string(cfg.role_mode));
  j["n_agents"] = cfg.n_agents;
  j["branches"] = cfg.branches;
  j["turns"] = cfg.turns;
  j["n_envs"] = cfg.n_envs;
  j["steps"] = cfg.steps;
  j["temperature"] = cfg.temperature;
  j["mixer"] = std::string(to_string(cfg.mixer));
  j["alpha"] = cfg.alpha;
  j["lambda"] = cfg.lambda ? json(*cfg.lambda) : json(nullptr);
  j["learning_rate"] = cfg.learning_rate;
  j["seed"] = cfg.seed;
  j["eval_every"] = cfg.eval_every;
  j["eval_count"] = cfg.eval_count;
  j["eval_seeds"] = cfg.eval_seeds.empty() ? default_eval_seeds(cfg.seed, cfg.eval_count) : cfg.eval_seeds;
  j["sampling"] = std::string(to_string(cfg.sampling));
  j["degenerate"] = std::string(to_string(cfg.degenerate));
  j["std_divisor"] = std::string(to_string(cfg.std_divisor));
  j["norm_epsilon"] = cfg.norm_epsilon;
  j["workers"] = cfg.workers;
  j["wall_time"] = cfg.wall_time;
  j["out"] = cfg.out;
  return j.dump(2) + "\n";
}

ResolvedRun resolve(const RunConfig& input) {
  RunConfig cfg = input;
  if (cfg.n_agents != kRoleCount) {
    throw ConfigError("n_agents", "every environment has exactly " + std::to_string(kRoleCount) + " roles");
  }
  if (cfg.difficulty < 1 || cfg.difficulty > 3) throw ConfigError("difficulty", "difficulty must be 1, 2 or 3");
  switch (cfg.env) {
    case EnvKind::plan_path:
      if (cfg.grid_size != 0 && (cfg.grid_size < 3 || cfg.grid_size > 32)) {
        throw ConfigError("grid_size", "plan-path grid_size must be 0 or in [3, 32]");
      }
      break;
    case EnvKind::sudoku:
      if (cfg.grid_size != 0 && cfg.grid_size != 4 && cfg.grid_size != 9) {
        throw ConfigError("grid_size", "sudoku grid_size must be 0, 4 or 9");
      }
      break;
    case EnvKind::sokoban:
      if (cfg.grid_size != 0 && cfg.grid_size != sokoban::kSide) {
        throw ConfigError("grid_size", "sokoban grid_size must be 0 or " + std::to_string(sokoban::kSide));
      }
      break;
  }
  if (!(cfg.learning_rate > 0.0) || !std::isfinite(cfg.learning_rate)) {
    throw ConfigError("learning_rate", "learning_rate must be positive and finite");
  }
  if (!(cfg.norm_epsilon > 0.0)) throw ConfigError("norm_epsilon", "norm_epsilon must be positive");
  if (cfg.workers == 0) cfg.workers = std::max(1u, std::thread::hardware_concurrency());
  if (cfg.eval_seeds.empty()) {
    if (cfg.eval_count < 1) throw ConfigError("eval_count", "eval_count must be at least 1");
    cfg.eval_seeds = default_eval_seeds(cfg.seed, cfg.eval_count);
  }
  for (auto s : cfg.eval_seeds) {
    if (s & kTrainSeedBit) throw ConfigError("eval_seeds", "evaluation seeds must have the top bit clear");
  }

  GameConfig game;
  game.n_agents = cfg.n_agents;
  game.n_policies = cfg.role_mode == RoleMode::shared ? 1 : cfg.n_agents;
  game.turn_horizon = cfg.turns;
  game.branches = cfg.branches;
  game.n_envs = cfg.n_envs;
  game.total_steps = cfg.steps;
  game.sample_temperature = cfg.temperature;
  game.mixer = MixerConfig{cfg.mixer, cfg.alpha};
  game.seed = cfg.seed;
  game.eval_seeds = cfg.eval_seeds;
  const auto mapping = cfg.role_mode == RoleMode::shared ? RoleMapping::role_sharing(cfg.n_agents)
                                                         : RoleMapping::role_specialized(cfg.n_agents);

  ResolvedRun run{validate_config(game, mapping), InstanceSpec{cfg.env, cfg.difficulty, cfg.grid_size},
                  preset_schedule(cfg.env), AdvantageConfig{cfg.norm_epsilon, cfg.degenerate, cfg.std_divisor}, cfg};
  if (cfg.lambda) run.schedule.lambda = *cfg.lambda;
  validate_schedule(run.schedule);
  return run;
}

TrainOptions train_options(const ResolvedRun& run) {
  TrainOptions o;
  o.spec = run.spec;
  o.schedule = run.schedule;
  o.learning_rate = run.config.learning_rate;
  o.mode = run.config.sampling;
  o.advantage = run.advantage;
  o.workers = run.config.workers;
  o.eval_every = run.config.eval_every;
  o.record_wall_time = run.config.wall_time;
  return o;
}

}  // namespace atgrpo
