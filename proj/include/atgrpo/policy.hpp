#pragma once

// Menu-softmax policies over environment-provided feature rows, their exact
// log-probabilities and GRPO-style loss, plus scripted baselines.

#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "atgrpo/advantage.hpp"
#include "atgrpo/core.hpp"
#include "atgrpo/environment.hpp"
#include "atgrpo/random.hpp"

namespace atgrpo {

struct PolicyParams {
  std::vector<double> weights;
  std::uint64_t version = 0;
  PolicyId policy_id;

  static PolicyParams zeros(PolicyId id, std::size_t dim) { return {std::vector<double>(dim, 0.0), 0, id}; }
  bool operator==(const PolicyParams&) const = default;
};

struct SampleResult {
  MacroAction action;
  double logprob = 0.0;
  std::uint64_t sampled_version = 0;
};

/// All groups routed to one policy for one update. Every candidate must carry
/// `version` as its sampled_version.
struct PerPolicyBatch {
  PolicyId policy_id;
  std::vector<Group> groups;
  std::uint64_t version = 0;
  double temperature = 1.0;
};

struct LossReport {
  double loss = 0.0;
  std::vector<double> gradient;
};

/// log softmax(w . f_j / temperature) over the menu. Temperature 0 gives the
/// argmax indicator (0 at the chosen entry, -inf elsewhere) with ties broken
/// towards the smallest index.
std::vector<double> menu_log_probs(std::span<const double> weights, const CandidateMenu& menu, double temperature);

std::vector<SampleResult> sample_k(const PolicyParams& params, const Observation& obs, const CandidateMenu& menu,
                                   double temperature, std::size_t k, Rng& rng);

double logprob(const PolicyParams& params, const Observation& obs, const CandidateMenu& menu,
               const MacroAction& action, double temperature);

/// loss = -mean_g (1/K) sum_c log pi(a_c | o_g) A_c with its closed-form
/// gradient. Throws ContractViolation on a version or policy mismatch.
LossReport loss(const PolicyParams& params, const PerPolicyBatch& batch);

/// weights - learning_rate * gradient, version + 1.
PolicyParams update(const PolicyParams& params, const PerPolicyBatch& batch, double learning_rate);

// ---------------------------------------------------------------------------
// Rollout-facing interface
// ---------------------------------------------------------------------------

struct DecisionContext {
  const EnvState& state;
  Role role;
  const Observation& obs;
  const CandidateMenu& menu;
};

class Policy {
 public:
  virtual ~Policy() = default;
  virtual std::vector<SampleResult> sample(const DecisionContext& ctx, double temperature, std::size_t k,
                                           Rng& rng) const = 0;
  virtual std::string name() const = 0;
};

class SoftmaxPolicy final : public Policy {
 public:
  explicit SoftmaxPolicy(std::shared_ptr<const PolicyParams> params) : params_(std::move(params)) {}

  std::vector<SampleResult> sample(const DecisionContext& ctx, double temperature, std::size_t k,
                                   Rng& rng) const override {
    return sample_k(*params_, ctx.obs, ctx.menu, temperature, k, rng);
  }
  std::string name() const override { return "softmax"; }
  const PolicyParams& params() const { return *params_; }

 private:
  std::shared_ptr<const PolicyParams> params_;
};

enum class ScriptedKind : std::uint8_t { random, plan_path_optimal, sokoban_greedy, sudoku_backtrack };

ScriptedKind parse_scripted_kind(std::string_view text);

/// random: uniform over the menu. plan-path-optimal: first move on a shortest
/// path. sokoban-greedy: first move of a shortest solution found by search.
/// sudoku-backtrack: fills the first empty cell from a backtracking solution.
/// Throws ConfigError when `kind` does not fit `env`.
std::unique_ptr<Policy> scripted_policy(ScriptedKind kind, EnvKind env);

// ---------------------------------------------------------------------------
// Checkpoints
// ---------------------------------------------------------------------------

/// Layout: "ATGRPOCK", u32 policy_id, u64 version, u64 dimension, then
/// dimension IEEE-754 doubles; all little-endian.
void save_checkpoint(const std::filesystem::path& path, const PolicyParams& params);
PolicyParams load_checkpoint(const std::filesystem::path& path);
std::string export_text(const PolicyParams& params);

}  // namespace atgrpo
