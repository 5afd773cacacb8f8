#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "atgrpo/advantage.hpp"
#include "atgrpo/cli.hpp"
#include "atgrpo/environment.hpp"
#include "atgrpo/policy.hpp"
#include "atgrpo/reward.hpp"
#include "atgrpo/run_config.hpp"
#include "atgrpo/trainer.hpp"

namespace py = pybind11;
using namespace atgrpo;

namespace {

Role parse_role(const std::string& role) {
  if (role == "planner" || role == "reasoner") return Role::planner;
  if (role == "tool") return Role::tool;
  throw ConfigError("role", "role must be planner, reasoner or tool (got '" + role + "')");
}

std::string payload_text(const ActionPayload& payload) {
  if (const auto* m = std::get_if<Move>(&payload)) {
    switch (*m) {
      case Move::up: return "up";
      case Move::down: return "down";
      case Move::left: return "left";
      case Move::right: return "right";
    }
  }
  if (const auto* f = std::get_if<FillStep>(&payload))
    return "fill " + std::to_string(f->row) + " " + std::to_string(f->col) + " " + std::to_string(f->value);
  return "submit";
}

py::dict eval_dict(const EvalResult& r) {
  py::dict d;
  d["success_rate"] = r.success_rate;
  d["avg_turns"] = r.avg_turns;
  d["episodes"] = r.episodes;
  return d;
}

std::vector<std::string> menu(const std::string& env, const std::string& board, const std::string& role) {
  const EnvState s = load_instance(parse_env_kind(env), board);
  std::vector<std::string> out;
  for (const auto& e : legal_menu(s, parse_role(role)).entries) out.push_back(payload_text(e.payload));
  return out;
}

// Scores the menu entry at `index` for `role` on a fresh instance, as a
// speculative turn.
py::dict score(const std::string& env, const std::string& board, const std::string& role, std::size_t index,
               std::size_t horizon) {
  const EnvKind kind = parse_env_kind(env);
  const Role r = parse_role(role);
  const EnvState s = load_instance(kind, board);
  const auto entries = legal_menu(s, r).entries;
  if (index >= entries.size()) throw ConfigError("index", "menu index out of range");
  const auto outcome = speculate(s, r, entries[index], horizon);
  const auto scored = score_transition(preset_schedule(kind), MixerConfig{}, r, s, entries[index], outcome);
  py::dict components;
  for (const auto& c : scored.components.scores) components[py::str(c.name)] = c.value;
  py::dict d;
  d["team"] = scored.team;
  d["local"] = scored.local;
  d["mixed"] = scored.mixed;
  d["components"] = components;
  d["done"] = outcome.term.done;
  return d;
}

std::vector<double> advantages(const std::vector<double>& rewards, const std::string& divisor,
                               const std::string& degenerate) {
  AdvantageConfig cfg;
  if (divisor == "population") cfg.divisor = StdDivisor::population;
  else if (divisor != "sample") throw ConfigError("std_divisor", "std_divisor must be sample or population");
  if (degenerate == "drop") cfg.degenerate_policy = DegeneratePolicy::drop_group;
  else if (degenerate != "zero") throw ConfigError("degenerate", "degenerate must be zero or drop");
  return compute_advantages(rewards, cfg).values;
}

py::dict evaluate_scripted(const std::string& policy, const std::string& env, int difficulty, std::size_t count,
                           std::uint64_t seed, std::size_t turns) {
  const EnvKind kind = parse_env_kind(env);
  const auto p = scripted_policy(parse_scripted_kind(policy), kind);
  const Policy* table[] = {p.get()};
  const auto seeds = default_eval_seeds(seed, count);
  EvalResult r;
  {
    py::gil_scoped_release release;
    r = evaluate(table, RoleMapping::role_sharing(2), InstanceSpec{kind, difficulty, 0}, seeds, turns);
  }
  return eval_dict(r);
}

py::dict train_json(const std::string& config_json) {
  const auto run = resolve(parse_run_config(config_json));
  std::vector<std::string> lines;
  auto options = train_options(run);
  options.metrics_sink = [&lines](const std::string& line) { lines.push_back(line); };
  TrainResult result;
  {
    py::gil_scoped_release release;
    result = train(run.game, options);
  }
  py::list evals;
  for (const auto& e : result.evals) {
    auto d = eval_dict(e.result);
    d["step"] = e.step;
    evals.append(d);
  }
  py::list weights;
  for (const auto& p : result.params) weights.append(p.weights);
  py::dict d;
  d["evals"] = evals;
  d["metrics"] = lines;
  d["weights"] = weights;
  d["config"] = echo_run_config(run.config);
  return d;
}

py::tuple cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  int status = 0;
  {
    py::gil_scoped_release release;
    status = run_cli(args, out, err);
  }
  return py::make_tuple(status, out.str(), err.str());
}

}  // namespace

PYBIND11_MODULE(_atgrpo, m) {
  m.doc() = "Multi-agent group-relative policy optimisation on grid games.";

  static py::exception<ConfigError> config_error(m, "ConfigError", PyExc_ValueError);
  static py::exception<ContractViolation> contract_violation(m, "ContractViolation", PyExc_RuntimeError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const ConfigError& e) {
      PyErr_SetString(config_error.ptr(), e.what());
    } catch (const ContractViolation& e) {
      PyErr_SetString(contract_violation.ptr(), e.what());
    }
  });

  m.def(
      "generate",
      [](const std::string& env, std::uint64_t seed, int difficulty, int size) {
        return dump_instance(generate(InstanceSpec{parse_env_kind(env), difficulty, size}, seed));
      },
      py::arg("env"), py::arg("seed"), py::arg("difficulty") = 1, py::arg("size") = 0,
      "Instance text for (env, seed, difficulty).");
  m.def("menu", &menu, py::arg("env"), py::arg("board"), py::arg("role"), "Menu entries offered to a role.");
  m.def("score", &score, py::arg("env"), py::arg("board"), py::arg("role"), py::arg("index"),
        py::arg("horizon") = 8, "Team, local and mixed reward of one menu entry.");
  m.def("compute_advantages", &advantages, py::arg("rewards"), py::arg("divisor") = "sample",
        py::arg("degenerate") = "zero", "Group-relative advantages of one reward group.");
  m.def("evaluate_scripted", &evaluate_scripted, py::arg("policy"), py::arg("env"), py::arg("difficulty") = 1,
        py::arg("count") = 100, py::arg("seed") = 0, py::arg("turns") = 4,
        "Greedy success rate of a scripted policy on held-out seeds.");
  m.def("train_json", &train_json, py::arg("config_json"), "Runs training from a JSON configuration.");
  m.def("run_cli", &cli, py::arg("args"), "Runs the command-line tool; returns (status, stdout, stderr).");
}
