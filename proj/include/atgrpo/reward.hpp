#pragma once

// Team rewards, per-role local component scores, their convex combination and
// the team/local mixing. Everything here is a pure function of its inputs.

#include <span>
#include <string>
#include <vector>

#include "atgrpo/core.hpp"
#include "atgrpo/environment.hpp"

namespace atgrpo {

struct Coefficient {
  std::string name;
  double weight = 0.0;
  bool operator==(const Coefficient&) const = default;
};

struct RewardSchedule {
  EnvKind env = EnvKind::plan_path;
  double lambda = 0.5;
  std::vector<Coefficient> planner;  // Reasoner for Sudoku
  std::vector<Coefficient> tool;

  const std::vector<Coefficient>& coefficients(Role role) const { return role == Role::planner ? planner : tool; }
  bool operator==(const RewardSchedule&) const = default;
};

/// Fixed per-environment coefficient tables and mixing weight.
RewardSchedule preset_schedule(EnvKind env);

/// Each role's weights are >= 0 and sum to 1 within 1e-12; lambda in [0, 1].
/// Throws ConfigError otherwise.
void validate_schedule(const RewardSchedule& schedule);

/// Human-readable coefficient tables (one line per role).
std::string format_schedule(const RewardSchedule& schedule);

struct ComponentScore {
  std::string name;
  double value = 0.0;
};

struct LocalComponents {
  std::vector<ComponentScore> scores;
  int mask = 1;

  /// Throws std::out_of_range for an unknown name.
  double score(std::string_view name) const;
};

/// Fault injection for the verifiability mask; the default reflects normal
/// operation where every oracle is computable.
struct ScoringOptions {
  bool oracle_available = true;
};

/// Plan-Path: 1 at goal else max(0, (d_prev - d_next) / d_0).
/// Sokoban: 1 when every box is on a goal else b / B.
/// Sudoku: 1 iff the episode terminated solved.
double team_reward(EnvKind env, const EnvState& prev, const EnvState& next, TerminationFlag term);

/// Per-role component scores for one transition. `prev` is the state the
/// role observed, `next` the state after the (possibly speculative) turn.
LocalComponents component_scores(EnvKind env, Role role, const EnvState& prev, const MacroAction& action,
                                 const EnvState& next, ScoringOptions options = {});

/// sum_l c_l * s_l. Names must match one-to-one, in order; the weights must
/// sum to 1 within 1e-12.
double combine_local(const LocalComponents& components, std::span<const Coefficient> coefficients);

/// main-text: alpha * team + mask * local; appendix: lambda * team +
/// (1 - lambda) * mask * local.
double mix(double team, double local, int mask, const MixerConfig& mixer, const RewardSchedule& schedule);

struct CandidateReward {
  double team = 0.0;
  double local = 0.0;
  double mixed = 0.0;
  LocalComponents components;
};

CandidateReward score_transition(const RewardSchedule& schedule, const MixerConfig& mixer, Role role,
                                 const EnvState& prev, const MacroAction& action, const StepResult& outcome,
                                 ScoringOptions options = {});

}  // namespace atgrpo
