#pragma once

// Shared vocabulary for environments, policies and the trainer: roles, the
// agent-to-policy mapping, observations, macro-actions, run configuration and
// termination.

#include <compare>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace atgrpo {

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

/// A configuration value violates its documented invariant. `field()` names
/// the offending field so front ends can report it.
class ConfigError : public std::invalid_argument {
 public:
  ConfigError(std::string field, const std::string& message)
      : std::invalid_argument(message), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

/// A caller broke an operation's precondition at runtime (stale batch, action
/// not from the offered menu, routing violation, ...).
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

class GenerationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Indices
// ---------------------------------------------------------------------------

// Zero-based throughout; human-facing messages print them one-based.
struct AgentId {
  std::uint32_t value = 0;
  auto operator<=>(const AgentId&) const = default;
};

struct PolicyId {
  std::uint32_t value = 0;
  auto operator<=>(const PolicyId&) const = default;
};

struct TurnIndex {
  std::uint32_t value = 0;
  auto operator<=>(const TurnIndex&) const = default;
};

enum class EnvKind : std::uint8_t { sudoku, plan_path, sokoban };

std::string_view to_string(EnvKind kind);
EnvKind parse_env_kind(std::string_view text);

// Every environment here has two roles. Slot 0 proposes (Planner, or Reasoner
// for Sudoku); slot 1 executes (Tool).
enum class Role : std::uint8_t { planner = 0, tool = 1 };

inline constexpr std::size_t kRoleCount = 2;

std::string_view role_name(EnvKind kind, Role role);
inline Role role_of_agent(AgentId agent) { return static_cast<Role>(agent.value); }

// ---------------------------------------------------------------------------
// Macro-actions
// ---------------------------------------------------------------------------

enum class Move : std::uint8_t { up = 0, down = 1, left = 2, right = 3 };

inline constexpr Move kAllMoves[] = {Move::up, Move::down, Move::left, Move::right};

char move_symbol(Move m);

struct FillStep {
  int row = 0;
  int col = 0;
  int value = 0;
  bool operator==(const FillStep&) const = default;
};

struct SubmitGrid {
  bool operator==(const SubmitGrid&) const = default;
};

using ActionPayload = std::variant<Move, FillStep, SubmitGrid>;

struct MacroAction {
  std::size_t menu_index = 0;
  ActionPayload payload;
  // Fault injection only: marks the payload as unparseable so the fmt score
  // path can be exercised. Menus never produce malformed entries.
  bool malformed = false;

  bool operator==(const MacroAction&) const = default;
};

std::string describe(const ActionPayload& payload);

/// Finite set of proposals offered to one role at one state, with one feature
/// row per entry.
struct CandidateMenu {
  std::vector<MacroAction> entries;
  std::size_t feature_dim = 0;
  std::vector<double> features;  // row-major, entries.size() x feature_dim

  std::size_t size() const { return entries.size(); }
  std::span<const double> row(std::size_t i) const {
    return {features.data() + i * feature_dim, feature_dim};
  }
  /// Throws ContractViolation unless `action` is the entry at its menu_index.
  void require_offered(const MacroAction& action) const;
};

// ---------------------------------------------------------------------------
// Observations and termination
// ---------------------------------------------------------------------------

struct Observation {
  Role role_tag = Role::planner;
  std::string state_encoding;  // canonical bytes of the acting agent's view
  TurnIndex turn;
  std::vector<double> feature_vector;

  // Equality is byte equality of the encoding; nothing else participates.
  friend bool operator==(const Observation& a, const Observation& b) {
    return a.state_encoding == b.state_encoding;
  }
};

enum class TerminationCause : std::uint8_t { none, solved, horizon, dead_end };

std::string_view to_string(TerminationCause cause);

struct TerminationFlag {
  bool done = false;
  TerminationCause cause = TerminationCause::none;
  bool operator==(const TerminationFlag&) const = default;
};

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

enum class MixerForm : std::uint8_t { appendix, main_text };

std::string_view to_string(MixerForm form);
MixerForm parse_mixer_form(std::string_view text);

/// main_text: r = alpha * team + mask * local. appendix: r = lambda * team +
/// (1 - lambda) * mask * local, lambda taken from the reward schedule.
struct MixerConfig {
  MixerForm form = MixerForm::appendix;
  double alpha = 1.0;
};

struct GameConfig {
  std::size_t n_agents = 2;
  std::size_t n_policies = 2;
  std::size_t turn_horizon = 4;
  std::size_t branches = 4;
  std::size_t n_envs = 64;
  std::size_t total_steps = 100;
  double sample_temperature = 1.0;
  MixerConfig mixer;
  std::uint64_t seed = 0;
  std::vector<std::uint64_t> eval_seeds;
};

/// sigma: agent -> policy. Total over agents by construction (one entry per
/// agent); surjectivity is checked by validate_config.
class RoleMapping {
 public:
  RoleMapping() = default;
  explicit RoleMapping(std::vector<PolicyId> assignment) : assignment_(std::move(assignment)) {}

  static RoleMapping role_sharing(std::size_t n_agents);
  static RoleMapping role_specialized(std::size_t n_agents);

  std::size_t n_agents() const { return assignment_.size(); }
  const std::vector<PolicyId>& assignment() const { return assignment_; }
  bool operator==(const RoleMapping&) const = default;

 private:
  std::vector<PolicyId> assignment_;
};

struct ValidatedConfig {
  GameConfig config;
  RoleMapping mapping;
};

/// Returns the pair unchanged iff every invariant holds; otherwise throws
/// ConfigError naming the first violation.
ValidatedConfig validate_config(const GameConfig& cfg, const RoleMapping& mapping);

PolicyId map_role(const RoleMapping& mapping, AgentId agent);

}  // namespace atgrpo
