#pragma once

// Agent- and turn-wise groups and group-relative advantages.

#include <compare>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "atgrpo/core.hpp"

namespace atgrpo {

/// (env, agent, turn, step). Compared and ordered as a tuple, so distinct
/// tuples never collide.
struct GroupKey {
  std::uint32_t env_id = 0;
  std::uint32_t agent = 0;
  std::uint32_t turn = 0;
  std::uint64_t run_step = 0;

  auto operator<=>(const GroupKey&) const = default;
  std::string encode() const;
};

struct KeyBounds {
  std::size_t n_envs = 0;
  std::size_t n_agents = 0;
  std::size_t turn_horizon = 0;
  std::size_t total_steps = 0;
};

/// Throws ContractViolation when an index is outside `bounds`. Steps are
/// counted from 0 with an extra slot for the step-0 evaluation, so s may
/// equal total_steps.
GroupKey group_key(std::size_t e, std::size_t i, std::size_t t, std::size_t s, const KeyBounds& bounds);

struct Candidate {
  MacroAction action;
  double reward = 0.0;
  double logprob = 0.0;
  std::uint64_t sampled_version = 0;
  std::string observation_encoding;  // the prompt this candidate was drawn against
};

struct Group {
  GroupKey key;
  Observation observation;
  std::shared_ptr<const CandidateMenu> menu;
  std::vector<Candidate> candidates;
  std::vector<double> advantages;
};

enum class SamplingMode : std::uint8_t { tree, parallel };

enum class GroupStatus : std::uint8_t { usable, degenerate };

/// Throws ContractViolation("mixed-prompt group") when candidates were drawn
/// against different observations and ("incomplete group") when a tree-mode
/// group has fewer than `k` candidates. Groups with a single candidate are
/// reported degenerate.
GroupStatus assert_group_valid(const Group& group, std::size_t k, SamplingMode mode);

enum class DegeneratePolicy : std::uint8_t { zero_advantages, drop_group };
enum class StdDivisor : std::uint8_t { sample, population };

struct AdvantageConfig {
  double norm_epsilon = 1e-8;
  DegeneratePolicy degenerate_policy = DegeneratePolicy::zero_advantages;
  StdDivisor divisor = StdDivisor::sample;
};

struct Advantages {
  std::vector<double> values;  // empty when the group is dropped
  bool degenerate = false;
};

/// (R_k - mean) / std with the sample standard deviation (divisor K - 1 by
/// default). K = 1 or std <= norm_epsilon applies the degenerate policy.
Advantages compute_advantages(std::span<const double> rewards, const AdvantageConfig& cfg);

std::uint64_t fnv1a64(std::string_view bytes);

/// One line-delimited JSON record: key fields, observation digest, K rewards,
/// K advantages.
std::string group_dump_line(const Group& group);

}  // namespace atgrpo
