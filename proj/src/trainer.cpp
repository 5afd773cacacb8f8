#include "atgrpo/trainer.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <nlohmann/json.hpp>
#include <set>
#include <thread>

namespace atgrpo {
namespace {

template <class F>
void parallel_for(std::size_t n, std::size_t workers, F&& body) {
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto run = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        body(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  workers = std::clamp<std::size_t>(workers, 1, std::max<std::size_t>(n, 1));
  if (workers == 1) {
    run();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(run);
  }
  // Report the lowest-index failure so the error does not depend on scheduling.
  for (auto& err : errors)
    if (err) std::rethrow_exception(err);
}

std::string hex_digest(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::size_t greedy_index(const std::vector<Candidate>& candidates) {
  std::size_t best = 0;
  for (std::size_t c = 1; c < candidates.size(); ++c)
    if (candidates[c].reward > candidates[best].reward) best = c;
  return best;
}

class Collector {
 public:
  Collector(const RolloutContext& ctx, std::size_t e) : ctx_(ctx), e_(e) {
    const auto& cfg = ctx.game.config;
    out_.groups_by_agent.resize(cfg.n_agents);
    out_.reward_sum_by_agent.assign(cfg.n_agents, 0.0);
    out_.reward_count_by_agent.assign(cfg.n_agents, 0);
    out_.usable_by_turn.assign(cfg.turn_horizon, 0);
    bounds_ = KeyBounds{cfg.n_envs, cfg.n_agents, cfg.turn_horizon, cfg.total_steps};
  }

  Group open(std::size_t agent, std::size_t turn, const EnvState& cur, Role role) const {
    Group g{group_key(e_, agent, turn, ctx_.step, bounds_), observe(cur, role), nullptr, {}, {}};
    g.menu = std::make_shared<const CandidateMenu>(legal_menu(cur, role));
    return g;
  }

  Candidate score(const EnvState& cur, Role role, const Group& g, const SampleResult& sample) {
    g.menu->require_offered(sample.action);
    const auto outcome = speculate(cur, role, sample.action, ctx_.game.config.turn_horizon);
    const auto r = score_transition(ctx_.schedule, ctx_.game.config.mixer, role, cur, sample.action, outcome);
    const std::size_t agent = g.key.agent;
    out_.reward_sum_by_agent[agent] += r.mixed;
    ++out_.reward_count_by_agent[agent];
    return Candidate{sample.action, r.mixed, sample.logprob, sample.sampled_version, g.observation.state_encoding};
  }

  /// Computes advantages and keeps the group if it can carry a gradient
  /// signal under the configured degenerate policy. Returns the advantages.
  std::vector<double> finalize(Group group) {
    const auto status = assert_group_valid(group, ctx_.game.config.branches, ctx_.mode);
    if (status != GroupStatus::usable) return {};
    std::vector<double> rewards;
    for (const auto& c : group.candidates) rewards.push_back(c.reward);
    auto adv = compute_advantages(rewards, ctx_.advantage);
    if (adv.values.empty()) return {};
    group.advantages = std::move(adv.values);
    ++out_.usable_by_turn[group.key.turn];
    auto copy = group.advantages;
    out_.groups_by_agent[group.key.agent].push_back(std::move(group));
    return copy;
  }

  void end_episode(std::size_t turns, const TerminationFlag& term) {
    ++out_.episodes;
    out_.turn_sum += turns;
    if (term.cause == TerminationCause::solved) ++out_.solved;
  }

  void record(RolloutRecord rec) {
    if (ctx_.keep_records) out_.records.push_back(std::move(rec));
  }

  EnvRollout take() { return std::move(out_); }

 private:
  const RolloutContext& ctx_;
  std::size_t e_;
  KeyBounds bounds_;
  EnvRollout out_;
};

AgentTurnRecord agent_record(const Group& group, std::size_t chosen) {
  AgentTurnRecord rec;
  rec.agent = group.key.agent;
  rec.obs_digest = fnv1a64(group.observation.state_encoding);
  for (const auto& c : group.candidates) rec.rewards.push_back(c.reward);
  rec.chosen = chosen;
  rec.chosen_action = describe(group.candidates[chosen].action.payload);
  return rec;
}

const Policy& policy_for(std::span<const Policy* const> policies, const RoleMapping& mapping, AgentId agent) {
  const auto m = map_role(mapping, agent).value;
  if (m >= policies.size() || policies[m] == nullptr) {
    throw ContractViolation("no policy loaded for policy " + std::to_string(m + 1));
  }
  return *policies[m];
}

EnvRollout rollout_tree(std::size_t e, std::span<const Policy* const> policies, const RolloutContext& ctx, Rng& rng) {
  const auto& cfg = ctx.game.config;
  Collector out(ctx, e);
  EnvState state = generate(ctx.spec, training_instance_seed(cfg.seed, ctx.step, e));
  TerminationFlag term;
  std::size_t turns = 0;
  for (std::size_t t = 0; t < cfg.turn_horizon && !term.done; ++t) {
    RolloutRecord rec{e, 0, t, {}, {}};
    EnvState cur = state;
    for (std::size_t i = 0; i < cfg.n_agents; ++i) {
      const AgentId agent{static_cast<std::uint32_t>(i)};
      const Role role = role_of_agent(agent);
      const Policy& policy = policy_for(policies, ctx.game.mapping, agent);
      Group group = out.open(i, t, cur, role);
      const DecisionContext dc{cur, role, group.observation, *group.menu};
      for (const auto& sample : policy.sample(dc, cfg.sample_temperature, cfg.branches, rng))
        group.candidates.push_back(out.score(cur, role, group, sample));
      const std::size_t chosen = greedy_index(group.candidates);
      const MacroAction executed = group.candidates[chosen].action;
      auto arec = agent_record(group, chosen);
      arec.advantages = out.finalize(std::move(group));
      rec.agents.push_back(std::move(arec));
      cur = act(cur, role, executed);
    }
    auto result = finish_turn(cur, cfg.turn_horizon);
    state = std::move(result.next);
    term = result.term;
    turns = t + 1;
    rec.term = term;
    out.record(std::move(rec));
  }
  out.end_episode(turns, term);
  return out.take();
}

EnvRollout rollout_parallel(std::size_t e, std::span<const Policy* const> policies, const RolloutContext& ctx,
                            Rng& rng) {
  const auto& cfg = ctx.game.config;
  Collector out(ctx, e);
  const EnvState initial = generate(ctx.spec, training_instance_seed(cfg.seed, ctx.step, e));
  // Only the shared initial prompt can form a group; everything after it is
  // conditioned on a trajectory-specific history.
  Group root = out.open(0, 0, initial, role_of_agent(AgentId{0}));
  std::vector<std::size_t> root_chosen;
  for (std::size_t c = 0; c < cfg.branches; ++c) {
    Rng traj_rng(rng.next_u64());
    EnvState state = initial;
    TerminationFlag term;
    std::size_t turns = 0;
    for (std::size_t t = 0; t < cfg.turn_horizon && !term.done; ++t) {
      RolloutRecord rec{e, c, t, {}, {}};
      EnvState cur = state;
      for (std::size_t i = 0; i < cfg.n_agents; ++i) {
        const AgentId agent{static_cast<std::uint32_t>(i)};
        const Role role = role_of_agent(agent);
        const Policy& policy = policy_for(policies, ctx.game.mapping, agent);
        Group single = out.open(i, t, cur, role);
        const DecisionContext dc{cur, role, single.observation, *single.menu};
        const auto sample = policy.sample(dc, cfg.sample_temperature, 1, traj_rng).at(0);
        single.candidates.push_back(out.score(cur, role, single, sample));
        const MacroAction executed = single.candidates[0].action;
        rec.agents.push_back(agent_record(single, 0));
        if (i == 0 && t == 0) {
          root.candidates.push_back(std::move(single.candidates[0]));
        } else {
          out.finalize(std::move(single));
        }
        cur = act(cur, role, executed);
      }
      auto result = finish_turn(cur, cfg.turn_horizon);
      state = std::move(result.next);
      term = result.term;
      turns = t + 1;
      rec.term = term;
      out.record(std::move(rec));
    }
    out.end_episode(turns, term);
  }
  out.finalize(std::move(root));
  return out.take();
}

nlohmann::json term_json(const TerminationFlag& term) {
  return {{"done", term.done}, {"cause", std::string(to_string(term.cause))}};
}

}  // namespace

std::uint64_t training_instance_seed(std::uint64_t master, std::size_t step, std::size_t env) {
  return derive_seed(master, {step, env, 0}) | kTrainSeedBit;
}

std::vector<std::uint64_t> default_eval_seeds(std::uint64_t master, std::size_t count) {
  std::vector<std::uint64_t> seeds;
  seeds.reserve(count);
  for (std::size_t i = 0; i < count; ++i) seeds.push_back(derive_seed(master ^ 0x5EEDE7A1ULL, {i}) & ~kTrainSeedBit);
  return seeds;
}

std::string rollout_dump_line(std::size_t step, const RolloutRecord& record) {
  nlohmann::json agents = nlohmann::json::array();
  for (const auto& a : record.agents) {
    agents.push_back({{"agent", a.agent},
                      {"obs_digest", hex_digest(a.obs_digest)},
                      {"rewards", a.rewards},
                      {"advantages", a.advantages},
                      {"chosen", a.chosen},
                      {"action", a.chosen_action}});
  }
  nlohmann::json j{{"step", step},
                   {"env", record.env_id},
                   {"trajectory", record.trajectory},
                   {"turn", record.turn},
                   {"agents", std::move(agents)},
                   {"term", term_json(record.term)}};
  return j.dump();
}

EnvRollout rollout_env(std::size_t e, std::span<const Policy* const> policies, const RolloutContext& ctx, Rng& rng) {
  return ctx.mode == SamplingMode::tree ? rollout_tree(e, policies, ctx, rng) : rollout_parallel(e, policies, ctx, rng);
}

std::vector<PerPolicyBatch> route(const std::vector<std::vector<Group>>& datasets, const RoleMapping& mapping,
                                  std::size_t n_policies) {
  if (datasets.size() != mapping.n_agents()) {
    throw ContractViolation("route: " + std::to_string(datasets.size()) + " datasets for " +
                            std::to_string(mapping.n_agents()) + " mapped agents");
  }
  std::vector<PerPolicyBatch> batches(n_policies);
  for (std::size_t m = 0; m < n_policies; ++m) batches[m].policy_id = PolicyId{static_cast<std::uint32_t>(m)};
  for (std::size_t i = 0; i < datasets.size(); ++i) {
    const auto m = map_role(mapping, AgentId{static_cast<std::uint32_t>(i)}).value;
    if (m >= n_policies) throw ContractViolation("agent " + std::to_string(i + 1) + " maps to an unknown policy");
    auto& dst = batches[m].groups;
    dst.insert(dst.end(), datasets[i].begin(), datasets[i].end());
  }
  return batches;
}

void check_routing(const std::vector<std::vector<Group>>& datasets, std::span<const PerPolicyBatch> batches,
                   const RoleMapping& mapping) {
  std::set<GroupKey> produced;
  std::size_t produced_count = 0;
  for (const auto& d : datasets) {
    for (const auto& g : d) produced.insert(g.key);
    produced_count += d.size();
  }
  if (produced.size() != produced_count) throw ContractViolation("routing violation: duplicate group key in datasets");

  std::set<GroupKey> routed;
  std::size_t routed_count = 0;
  for (const auto& batch : batches) {
    for (const auto& g : batch.groups) {
      const auto expected = map_role(mapping, AgentId{g.key.agent});
      if (expected != batch.policy_id) {
        throw ContractViolation("routing violation: group " + g.key.encode() + " from agent " +
                                std::to_string(g.key.agent + 1) + " found in batch of policy " +
                                std::to_string(batch.policy_id.value + 1));
      }
      routed.insert(g.key);
      ++routed_count;
    }
  }
  if (routed_count != produced_count || routed != produced) {
    throw ContractViolation("routing violation: " + std::to_string(produced_count) + " groups produced, " +
                            std::to_string(routed_count) + " routed");
  }
}

std::vector<std::string> metrics_lines(const StepMetrics& metrics) {
  std::vector<std::string> lines;
  for (const auto& p : metrics.policies) {
    nlohmann::json j{{"kind", "train"},
                     {"step", metrics.step},
                     {"policy_id", p.policy_id.value},
                     {"version", p.version},
                     {"mean_reward", p.mean_reward},
                     {"mean_abs_advantage", p.mean_abs_advantage},
                     {"groups", p.groups},
                     {"success_rate", metrics.success_rate},
                     {"avg_turns", metrics.avg_turns},
                     {"usable_groups", metrics.usable_groups},
                     {"usable_groups_by_turn", metrics.usable_groups_by_turn},
                     {"wall_ms", metrics.wall_ms}};
    lines.push_back(j.dump());
  }
  return lines;
}

std::string eval_line(const EvalRecord& record) {
  nlohmann::json j{{"kind", "eval"},
                   {"step", record.step},
                   {"success_rate", record.result.success_rate},
                   {"avg_turns", record.result.avg_turns},
                   {"episodes", record.result.episodes}};
  return j.dump();
}

RunState RunState::fresh(ValidatedConfig game, EnvKind env) {
  RunState st{std::move(game), {}, 0};
  for (std::size_t m = 0; m < st.game.config.n_policies; ++m) {
    st.params.push_back(std::make_shared<const PolicyParams>(
        PolicyParams::zeros(PolicyId{static_cast<std::uint32_t>(m)}, feature_dim(env))));
  }
  return st;
}

StepMetrics train_step(RunState& state, const TrainOptions& options) {
  const auto start = std::chrono::steady_clock::now();
  const auto& cfg = state.game.config;
  if (state.step >= cfg.total_steps) throw ContractViolation("train_step beyond total_steps");

  std::vector<SoftmaxPolicy> softmax;
  softmax.reserve(state.params.size());
  for (const auto& p : state.params) softmax.emplace_back(p);
  std::vector<const Policy*> policies;
  for (const auto& p : softmax) policies.push_back(&p);

  const RolloutContext ctx{state.game,       options.spec, options.schedule, options.advantage, options.mode,
                           state.step, static_cast<bool>(options.rollout_sink)};
  std::vector<EnvRollout> rollouts(cfg.n_envs);
  parallel_for(cfg.n_envs, options.workers, [&](std::size_t e) {
    Rng rng(derive_seed(cfg.seed, {state.step, e, 1}));
    rollouts[e] = rollout_env(e, policies, ctx, rng);
  });

  StepMetrics metrics;
  metrics.step = state.step + 1;
  metrics.usable_groups_by_turn.assign(cfg.turn_horizon, 0);
  std::vector<std::vector<Group>> datasets(cfg.n_agents);
  std::vector<double> reward_sum(cfg.n_policies, 0.0);
  std::vector<std::size_t> reward_count(cfg.n_policies, 0);
  std::size_t solved = 0;
  std::size_t turn_sum = 0;
  for (auto& r : rollouts) {
    for (std::size_t i = 0; i < cfg.n_agents; ++i) {
      auto& src = r.groups_by_agent[i];
      std::move(src.begin(), src.end(), std::back_inserter(datasets[i]));
      const auto m = map_role(state.game.mapping, AgentId{static_cast<std::uint32_t>(i)}).value;
      reward_sum[m] += r.reward_sum_by_agent[i];
      reward_count[m] += r.reward_count_by_agent[i];
    }
    for (std::size_t t = 0; t < cfg.turn_horizon; ++t) metrics.usable_groups_by_turn[t] += r.usable_by_turn[t];
    metrics.episodes += r.episodes;
    solved += r.solved;
    turn_sum += r.turn_sum;
    if (options.rollout_sink)
      for (const auto& rec : r.records) options.rollout_sink(rollout_dump_line(metrics.step, rec));
  }
  for (auto u : metrics.usable_groups_by_turn) metrics.usable_groups += u;
  metrics.success_rate = static_cast<double>(solved) / static_cast<double>(metrics.episodes);
  metrics.avg_turns = static_cast<double>(turn_sum) / static_cast<double>(metrics.episodes);

  auto batches = route(datasets, state.game.mapping, cfg.n_policies);
  check_routing(datasets, batches, state.game.mapping);

  std::vector<std::shared_ptr<const PolicyParams>> next(cfg.n_policies);
  for (std::size_t m = 0; m < cfg.n_policies; ++m) {
    auto& batch = batches[m];
    const auto& params = *state.params[m];
    batch.version = params.version;
    batch.temperature = cfg.sample_temperature;
    next[m] = std::make_shared<const PolicyParams>(update(params, batch, options.learning_rate));

    PolicyStepStats stats;
    stats.policy_id = batch.policy_id;
    stats.version = next[m]->version;
    stats.groups = batch.groups.size();
    stats.mean_reward = reward_count[m] ? reward_sum[m] / static_cast<double>(reward_count[m]) : 0.0;
    double abs_sum = 0.0;
    std::size_t n_adv = 0;
    for (const auto& g : batch.groups) {
      for (double a : g.advantages) abs_sum += std::abs(a);
      n_adv += g.advantages.size();
    }
    stats.mean_abs_advantage = n_adv ? abs_sum / static_cast<double>(n_adv) : 0.0;
    metrics.policies.push_back(stats);
  }
  state.params = std::move(next);
  ++state.step;

  if (options.record_wall_time) {
    metrics.wall_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  }
  return metrics;
}

TrainResult train(const ValidatedConfig& game, const TrainOptions& options) {
  validate_schedule(options.schedule);
  if (options.schedule.env != options.spec.kind) throw ConfigError("env", "reward schedule does not match env");
  RunState state = RunState::fresh(game, options.spec.kind);
  TrainResult result;
  const auto& cfg = game.config;

  auto run_eval = [&] {
    if (cfg.eval_seeds.empty()) return;
    std::vector<PolicyParams> snapshot;
    for (const auto& p : state.params) snapshot.push_back(*p);
    EvalRecord rec{state.step, evaluate_params(snapshot, game.mapping, options.spec, cfg.eval_seeds,
                                               cfg.turn_horizon, options.workers)};
    if (options.metrics_sink) options.metrics_sink(eval_line(rec));
    result.evals.push_back(rec);
  };

  run_eval();
  for (std::size_t s = 0; s < cfg.total_steps; ++s) {
    auto metrics = train_step(state, options);
    if (options.metrics_sink)
      for (const auto& line : metrics_lines(metrics)) options.metrics_sink(line);
    result.steps.push_back(std::move(metrics));
    const bool last = state.step == cfg.total_steps;
    if (last || (options.eval_every != 0 && state.step % options.eval_every == 0)) run_eval();
  }
  for (const auto& p : state.params) result.params.push_back(*p);
  return result;
}

EvalResult evaluate(std::span<const Policy* const> policies, const RoleMapping& mapping, const InstanceSpec& spec,
                    std::span<const std::uint64_t> seeds, std::size_t horizon, std::size_t workers) {
  if (seeds.empty()) throw ContractViolation("evaluate needs at least one seed");
  for (auto seed : seeds) {
    if (seed & kTrainSeedBit) {
      throw ContractViolation("evaluation seed " + std::to_string(seed) + " lies in the training seed space");
    }
  }
  if (horizon == 0) throw ConfigError("turns", "turn horizon must be at least 1");

  std::vector<std::size_t> turns(seeds.size(), 0);
  std::vector<char> solved(seeds.size(), 0);
  parallel_for(seeds.size(), workers, [&](std::size_t k) {
    Rng rng(derive_seed(seeds[k], {0xE7A1}));
    EnvState state = generate(spec, seeds[k]);
    TerminationFlag term;
    std::size_t t = 0;
    while (!term.done && t < horizon) {
      EnvState cur = state;
      for (std::size_t i = 0; i < mapping.n_agents(); ++i) {
        const AgentId agent{static_cast<std::uint32_t>(i)};
        const Role role = role_of_agent(agent);
        const auto obs = observe(cur, role);
        const auto menu = legal_menu(cur, role);
        const auto choice = policy_for(policies, mapping, agent).sample({cur, role, obs, menu}, 0.0, 1, rng).at(0);
        menu.require_offered(choice.action);
        cur = act(cur, role, choice.action);
      }
      auto result = finish_turn(cur, horizon);
      state = std::move(result.next);
      term = result.term;
      ++t;
    }
    turns[k] = t;
    solved[k] = term.cause == TerminationCause::solved ? 1 : 0;
  });

  EvalResult out;
  out.episodes = seeds.size();
  std::size_t n_solved = 0;
  std::size_t turn_sum = 0;
  for (std::size_t k = 0; k < seeds.size(); ++k) {
    n_solved += static_cast<std::size_t>(solved[k]);
    turn_sum += turns[k];
  }
  out.success_rate = static_cast<double>(n_solved) / static_cast<double>(seeds.size());
  out.avg_turns = static_cast<double>(turn_sum) / static_cast<double>(seeds.size());
  return out;
}

EvalResult evaluate_params(std::span<const PolicyParams> params, const RoleMapping& mapping, const InstanceSpec& spec,
                           std::span<const std::uint64_t> seeds, std::size_t horizon, std::size_t workers) {
  std::vector<SoftmaxPolicy> softmax;
  softmax.reserve(params.size());
  for (const auto& p : params) softmax.emplace_back(std::make_shared<const PolicyParams>(p));
  std::vector<const Policy*> policies;
  for (const auto& p : softmax) policies.push_back(&p);
  return evaluate(policies, mapping, spec, seeds, horizon, workers);
}

std::vector<PolicyParams> swap_policies(std::span<const PolicyParams> snapshots,
                                        std::span<const std::size_t> permutation) {
  if (snapshots.size() < 2) throw ConfigError("swap", "swapping needs a role-specialized run with at least 2 policies");
  if (permutation.size() != snapshots.size()) throw ConfigError("swap", "permutation length does not match policies");
  std::vector<char> seen(snapshots.size(), 0);
  std::vector<PolicyParams> out;
  for (std::size_t j = 0; j < permutation.size(); ++j) {
    const auto src = permutation[j];
    if (src >= snapshots.size() || seen[src]) throw ConfigError("swap", "not a permutation");
    seen[src] = 1;
    out.push_back(snapshots[src]);
    out.back().policy_id = PolicyId{static_cast<std::uint32_t>(j)};
  }
  return out;
}

}  // namespace atgrpo
