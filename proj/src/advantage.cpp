#include "atgrpo/advantage.hpp"

#include <cmath>
#include <cstdio>
#include <nlohmann/json.hpp>

namespace atgrpo {

std::string GroupKey::encode() const {
  return "e" + std::to_string(env_id) + ":a" + std::to_string(agent) + ":t" + std::to_string(turn) + ":s" +
         std::to_string(run_step);
}

GroupKey group_key(std::size_t e, std::size_t i, std::size_t t, std::size_t s, const KeyBounds& bounds) {
  if (e >= bounds.n_envs) throw ContractViolation("group key env index " + std::to_string(e) + " out of range");
  if (i >= bounds.n_agents) throw ContractViolation("group key agent index " + std::to_string(i) + " out of range");
  if (t >= bounds.turn_horizon) throw ContractViolation("group key turn index " + std::to_string(t) + " out of range");
  if (s > bounds.total_steps) throw ContractViolation("group key step index " + std::to_string(s) + " out of range");
  return GroupKey{static_cast<std::uint32_t>(e), static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(t),
                  static_cast<std::uint64_t>(s)};
}

GroupStatus assert_group_valid(const Group& group, std::size_t k, SamplingMode mode) {
  for (const auto& c : group.candidates) {
    if (c.observation_encoding != group.observation.state_encoding) {
      throw ContractViolation("mixed-prompt group " + group.key.encode());
    }
  }
  if (mode == SamplingMode::tree && group.candidates.size() != k) {
    throw ContractViolation("incomplete group " + group.key.encode() + ": " + std::to_string(group.candidates.size()) +
                            " of " + std::to_string(k) + " candidates");
  }
  return group.candidates.size() >= 2 ? GroupStatus::usable : GroupStatus::degenerate;
}

Advantages compute_advantages(std::span<const double> rewards, const AdvantageConfig& cfg) {
  if (rewards.empty()) throw ContractViolation("compute_advantages needs at least one reward");
  if (!(cfg.norm_epsilon > 0.0)) throw ContractViolation("norm_epsilon must be positive");
  for (double r : rewards)
    if (!std::isfinite(r)) throw ContractViolation("non-finite reward in group");

  const auto k = static_cast<double>(rewards.size());
  double mean = 0.0;
  for (double r : rewards) mean += r;
  mean /= k;
  double ss = 0.0;
  for (double r : rewards) ss += (r - mean) * (r - mean);
  const double divisor = cfg.divisor == StdDivisor::sample ? k - 1.0 : k;
  const double std_dev = rewards.size() > 1 ? std::sqrt(ss / divisor) : 0.0;

  Advantages out;
  if (rewards.size() == 1 || std_dev <= cfg.norm_epsilon) {
    out.degenerate = true;
    if (cfg.degenerate_policy == DegeneratePolicy::zero_advantages) out.values.assign(rewards.size(), 0.0);
    return out;
  }
  out.values.reserve(rewards.size());
  for (double r : rewards) out.values.push_back((r - mean) / std_dev);
  return out;
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : bytes) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string group_dump_line(const Group& group) {
  char digest[17];
  std::snprintf(digest, sizeof digest, "%016llx",
                static_cast<unsigned long long>(fnv1a64(group.observation.state_encoding)));
  nlohmann::json j;
  j["env"] = group.key.env_id;
  j["agent"] = group.key.agent;
  j["turn"] = group.key.turn;
  j["step"] = group.key.run_step;
  j["obs_digest"] = digest;
  auto rewards = nlohmann::json::array();
  for (const auto& c : group.candidates) rewards.push_back(c.reward);
  j["rewards"] = rewards;
  j["advantages"] = group.advantages;
  return j.dump();
}

}  // namespace atgrpo
