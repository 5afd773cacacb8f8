#include "atgrpo/policy.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

namespace atgrpo {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr char kMagic[8] = {'A', 'T', 'G', 'R', 'P', 'O', 'C', 'K'};

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

std::size_t argmax_index(std::span<const double> weights, const CandidateMenu& menu) {
  std::size_t best = 0;
  double best_score = dot(weights, menu.row(0));
  for (std::size_t j = 1; j < menu.size(); ++j) {
    const double score = dot(weights, menu.row(j));
    if (score > best_score) {
      best_score = score;
      best = j;
    }
  }
  return best;
}

void check_dims(std::span<const double> weights, const CandidateMenu& menu) {
  if (menu.size() == 0) throw ContractViolation("empty candidate menu");
  if (weights.size() != menu.feature_dim) {
    throw ContractViolation("policy dimension " + std::to_string(weights.size()) + " does not match menu features " +
                            std::to_string(menu.feature_dim));
  }
}

std::size_t find_entry(const CandidateMenu& menu, const ActionPayload& payload) {
  for (std::size_t j = 0; j < menu.size(); ++j)
    if (menu.entries[j].payload == payload) return j;
  return menu.size();
}

SampleResult pick(const CandidateMenu& menu, std::size_t j, double logprob) {
  return SampleResult{menu.entries[j], logprob, 0};
}

class RandomPolicy final : public Policy {
 public:
  std::vector<SampleResult> sample(const DecisionContext& ctx, double, std::size_t k, Rng& rng) const override {
    std::vector<SampleResult> out;
    const double lp = -std::log(static_cast<double>(ctx.menu.size()));
    for (std::size_t c = 0; c < k; ++c) out.push_back(pick(ctx.menu, rng.index(ctx.menu.size()), lp));
    return out;
  }
  std::string name() const override { return "random"; }
};

// Deterministic scripted policies choose one entry and repeat it k times.
class DeterministicPolicy : public Policy {
 public:
  std::vector<SampleResult> sample(const DecisionContext& ctx, double, std::size_t k, Rng&) const override {
    const std::size_t j = choose(ctx);
    return std::vector<SampleResult>(k, pick(ctx.menu, j, 0.0));
  }

 protected:
  virtual std::size_t choose(const DecisionContext& ctx) const = 0;
};

class PlanPathOptimal final : public DeterministicPolicy {
 public:
  std::string name() const override { return "plan-path-optimal"; }

 protected:
  std::size_t choose(const DecisionContext& ctx) const override {
    const auto& s = std::get<plan_path::State>(ctx.state);
    for (std::size_t j = 0; j < ctx.menu.size(); ++j) {
      const Move m = std::get<Move>(ctx.menu.entries[j].payload);
      if (sp_next(s.map->grid, s.position, s.map->goal, m) == 1) return j;
    }
    return 0;
  }
};

class SokobanGreedy final : public DeterministicPolicy {
 public:
  std::string name() const override { return "sokoban-greedy"; }

 protected:
  std::size_t choose(const DecisionContext& ctx) const override {
    const auto& s = std::get<sokoban::State>(ctx.state);
    if (auto m = sokoban::solve_first_move(s, 40)) return find_entry(ctx.menu, *m);
    // No solution in reach: best legal, deadlock-free move by potential.
    std::size_t best = 0;
    double best_potential = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < ctx.menu.size(); ++j) {
      const Move m = std::get<Move>(ctx.menu.entries[j].payload);
      if (!sokoban::move_legal(s, m) || !sokoban::corner_deadlock_free(s, m)) continue;
      const double p = sokoban::box_goal_potential(sokoban::preview(s, ctx.menu.entries[j]));
      if (p > best_potential) {
        best_potential = p;
        best = j;
      }
    }
    return best;
  }
};

class SudokuBacktrack final : public DeterministicPolicy {
 public:
  std::string name() const override { return "sudoku-backtrack"; }

 protected:
  std::size_t choose(const DecisionContext& ctx) const override {
    const auto& s = std::get<sudoku::State>(ctx.state);
    const auto solution = sudoku::solve(s.grid_now, s.size);
    if (solution) {
      for (std::size_t i = 0; i < s.grid_now.size(); ++i) {
        if (s.grid_now[i] != 0) continue;
        const FillStep fill{static_cast<int>(i) / s.size, static_cast<int>(i) % s.size, (*solution)[i]};
        const std::size_t j = find_entry(ctx.menu, fill);
        if (j < ctx.menu.size()) return j;
      }
    }
    const std::size_t submit = find_entry(ctx.menu, SubmitGrid{});
    return submit < ctx.menu.size() ? submit : 0;
  }
};

void put_u64(std::ostream& os, std::uint64_t v) {
  char bytes[8];
  for (int i = 0; i < 8; ++i) bytes[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
  os.write(bytes, 8);
}

std::uint64_t get_u64(std::istream& is) {
  unsigned char bytes[8];
  if (!is.read(reinterpret_cast<char*>(bytes), 8)) throw ContractViolation("truncated checkpoint");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
  return v;
}

}  // namespace

std::vector<double> menu_log_probs(std::span<const double> weights, const CandidateMenu& menu, double temperature) {
  check_dims(weights, menu);
  if (!(temperature >= 0.0)) throw ContractViolation("temperature must be >= 0");
  std::vector<double> out(menu.size(), kNegInf);
  if (temperature == 0.0) {
    out[argmax_index(weights, menu)] = 0.0;
    return out;
  }
  double max_z = kNegInf;
  for (std::size_t j = 0; j < menu.size(); ++j) {
    out[j] = dot(weights, menu.row(j)) / temperature;
    max_z = std::max(max_z, out[j]);
  }
  double sum = 0.0;
  for (double z : out) sum += std::exp(z - max_z);
  const double log_norm = max_z + std::log(sum);
  for (double& z : out) z -= log_norm;
  return out;
}

std::vector<SampleResult> sample_k(const PolicyParams& params, const Observation&, const CandidateMenu& menu,
                                   double temperature, std::size_t k, Rng& rng) {
  const auto lp = menu_log_probs(params.weights, menu, temperature);
  std::vector<SampleResult> out;
  out.reserve(k);
  if (temperature == 0.0) {
    const auto j = static_cast<std::size_t>(std::max_element(lp.begin(), lp.end()) - lp.begin());
    for (std::size_t c = 0; c < k; ++c) out.push_back({menu.entries[j], 0.0, params.version});
    return out;
  }
  std::vector<double> probs(lp.size());
  std::transform(lp.begin(), lp.end(), probs.begin(), [](double x) { return std::exp(x); });
  for (std::size_t c = 0; c < k; ++c) {
    const double u = rng.uniform();
    double acc = 0.0;
    std::size_t j = probs.size() - 1;
    for (std::size_t i = 0; i < probs.size(); ++i) {
      acc += probs[i];
      if (u < acc) {
        j = i;
        break;
      }
    }
    out.push_back({menu.entries[j], lp[j], params.version});
  }
  return out;
}

double logprob(const PolicyParams& params, const Observation&, const CandidateMenu& menu, const MacroAction& action,
               double temperature) {
  menu.require_offered(action);
  return menu_log_probs(params.weights, menu, temperature)[action.menu_index];
}

LossReport loss(const PolicyParams& params, const PerPolicyBatch& batch) {
  if (batch.policy_id != params.policy_id) {
    throw ContractViolation("batch for policy " + std::to_string(batch.policy_id.value + 1) +
                            " given to policy " + std::to_string(params.policy_id.value + 1));
  }
  if (batch.version != params.version) {
    throw ContractViolation("on-policy violation: batch version " + std::to_string(batch.version) +
                            " != parameter version " + std::to_string(params.version));
  }
  const std::size_t dim = params.weights.size();
  LossReport report{0.0, std::vector<double>(dim, 0.0)};
  if (batch.groups.empty()) return report;

  const double tau = batch.temperature;
  std::vector<double> expected(dim);
  for (const auto& group : batch.groups) {
    const auto& menu = *group.menu;
    const double inv_k = 1.0 / static_cast<double>(group.candidates.size());
    if (group.advantages.size() != group.candidates.size()) {
      throw ContractViolation("group " + group.key.encode() + " has no advantages");
    }
    const auto lp = menu_log_probs(params.weights, menu, tau);
    if (tau > 0.0) {
      std::fill(expected.begin(), expected.end(), 0.0);
      for (std::size_t j = 0; j < menu.size(); ++j) {
        const double p = std::exp(lp[j]);
        const auto row = menu.row(j);
        for (std::size_t d = 0; d < dim; ++d) expected[d] += p * row[d];
      }
    }
    for (std::size_t c = 0; c < group.candidates.size(); ++c) {
      const auto& cand = group.candidates[c];
      if (cand.sampled_version != params.version) {
        throw ContractViolation("on-policy violation: sample version " + std::to_string(cand.sampled_version) +
                                " != parameter version " + std::to_string(params.version));
      }
      const double a = group.advantages[c];
      if (a == 0.0) continue;
      menu.require_offered(cand.action);
      const double l = lp[cand.action.menu_index];
      report.loss -= inv_k * l * a;
      if (tau > 0.0) {
        const auto row = menu.row(cand.action.menu_index);
        for (std::size_t d = 0; d < dim; ++d) report.gradient[d] -= inv_k * a * (row[d] - expected[d]) / tau;
      }
    }
  }
  const double inv_g = 1.0 / static_cast<double>(batch.groups.size());
  report.loss *= inv_g;
  for (double& g : report.gradient) g *= inv_g;
  return report;
}

PolicyParams update(const PolicyParams& params, const PerPolicyBatch& batch, double learning_rate) {
  const auto report = loss(params, batch);
  PolicyParams next = params;
  for (std::size_t d = 0; d < next.weights.size(); ++d) {
    if (!std::isfinite(report.gradient[d])) throw ContractViolation("non-finite gradient component");
    next.weights[d] -= learning_rate * report.gradient[d];
  }
  ++next.version;
  return next;
}

ScriptedKind parse_scripted_kind(std::string_view text) {
  if (text == "random") return ScriptedKind::random;
  if (text == "plan-path-optimal") return ScriptedKind::plan_path_optimal;
  if (text == "sokoban-greedy") return ScriptedKind::sokoban_greedy;
  if (text == "sudoku-backtrack") return ScriptedKind::sudoku_backtrack;
  throw ConfigError("policy", "unknown scripted policy '" + std::string(text) + "'");
}

std::unique_ptr<Policy> scripted_policy(ScriptedKind kind, EnvKind env) {
  auto mismatch = [&](std::string_view name) {
    return ConfigError("policy", std::string(name) + " does not support env " + std::string(to_string(env)));
  };
  switch (kind) {
    case ScriptedKind::random: return std::make_unique<RandomPolicy>();
    case ScriptedKind::plan_path_optimal:
      if (env != EnvKind::plan_path) throw mismatch("plan-path-optimal");
      return std::make_unique<PlanPathOptimal>();
    case ScriptedKind::sokoban_greedy:
      if (env != EnvKind::sokoban) throw mismatch("sokoban-greedy");
      return std::make_unique<SokobanGreedy>();
    case ScriptedKind::sudoku_backtrack:
      if (env != EnvKind::sudoku) throw mismatch("sudoku-backtrack");
      return std::make_unique<SudokuBacktrack>();
  }
  throw ConfigError("policy", "unknown scripted policy");
}

void save_checkpoint(const std::filesystem::path& path, const PolicyParams& params) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("cannot write checkpoint " + path.string());
  os.write(kMagic, sizeof kMagic);
  const std::uint32_t id = params.policy_id.value;
  char id_bytes[4];
  for (int i = 0; i < 4; ++i) id_bytes[i] = static_cast<char>((id >> (8 * i)) & 0xFF);
  os.write(id_bytes, 4);
  put_u64(os, params.version);
  put_u64(os, params.weights.size());
  for (double w : params.weights) put_u64(os, std::bit_cast<std::uint64_t>(w));
  if (!os) throw std::runtime_error("failed writing checkpoint " + path.string());
}

PolicyParams load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ContractViolation("cannot open checkpoint " + path.string());
  char magic[8];
  if (!is.read(magic, 8) || std::memcmp(magic, kMagic, 8) != 0) {
    throw ContractViolation("bad checkpoint magic in " + path.string());
  }
  unsigned char id_bytes[4];
  if (!is.read(reinterpret_cast<char*>(id_bytes), 4)) throw ContractViolation("truncated checkpoint");
  PolicyParams p;
  p.policy_id.value = static_cast<std::uint32_t>(id_bytes[0]) | (static_cast<std::uint32_t>(id_bytes[1]) << 8) |
                      (static_cast<std::uint32_t>(id_bytes[2]) << 16) | (static_cast<std::uint32_t>(id_bytes[3]) << 24);
  p.version = get_u64(is);
  const auto dim = get_u64(is);
  if (dim > (1u << 24)) throw ContractViolation("implausible checkpoint dimension");
  p.weights.resize(dim);
  for (auto& w : p.weights) w = std::bit_cast<double>(get_u64(is));
  if (is.peek() != std::char_traits<char>::eof()) throw ContractViolation("trailing bytes in checkpoint");
  return p;
}

std::string export_text(const PolicyParams& params) {
  std::ostringstream os;
  os << "policy_id " << params.policy_id.value << "\nversion " << params.version << "\ndimension "
     << params.weights.size() << '\n';
  os << std::setprecision(17);
  for (std::size_t d = 0; d < params.weights.size(); ++d) os << d << ' ' << params.weights[d] << '\n';
  return os.str();
}

}  // namespace atgrpo
