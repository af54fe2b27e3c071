#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "impulse/grid.hpp"
#include "impulse/problem.hpp"

namespace impulse {

/// Exact finite game: snapped transitions, no interpolation. Tables are
/// indexed [step][state][option]. Jump tables carry n_steps + 1 steps so that
/// jumps at the terminal time are representable.
struct FiniteGame {
  std::size_t n_states = 0;
  std::size_t n_steps = 0;
  std::size_t n_controls = 0;
  std::size_t n_impulses = 0;  // excluding the implicit "none" option

  std::vector<std::vector<std::vector<std::size_t>>> next;     // [k][s][c]
  std::vector<std::vector<std::vector<double>>> stage;         // [k][s][c]
  std::vector<std::vector<std::vector<std::size_t>>> jump;     // [k][s][i], k <= n_steps
  std::vector<std::vector<std::vector<double>>> jump_cost;     // [k][s][i]
  std::vector<double> terminal;
  /// True when `terminal` already includes terminal interventions.
  bool terminal_is_composed = true;
  /// Maximum impulse chain length starting from each state.
  std::vector<std::size_t> jump_cap;
  double alpha = 0.0;

  /// Throws ConfigError when a table is not total or a cost is below alpha.
  void validate() const;
};

/// Which player observes the other within a step.
enum class InformationOrder {
  ImpulseFirst,  // the impulse decision at step k sees controls before k only
  ControlFirst,  // the impulse decision at step k also sees the control at k
};

/// value[k][s] for k = 0..n_steps.
using ValueTable = std::vector<std::vector<double>>;

ValueTable backward_value(const FiniteGame& game,
                          InformationOrder order = InformationOrder::ImpulseFirst);

/// A chain of impulse indices (possibly empty) applied at one step.
using ImpulseChain = std::vector<std::size_t>;

/// Non-anticipative response map: at step k the decision is looked up from
/// the strict control prefix (u_0 .. u_{k-1}) only.
class StrategyTable {
 public:
  StrategyTable(std::size_t n_controls, std::size_t decision_steps);

  std::size_t prefix_count() const { return offsets_.back(); }
  std::size_t decision_steps() const { return offsets_.size() - 1; }

  /// Slot of the prefix of length k = prefix.size().
  std::size_t slot(std::span<const std::size_t> prefix) const;

  const ImpulseChain& decision(std::span<const std::size_t> prefix) const {
    return decisions_[slot(prefix)];
  }
  void set(std::size_t slot, ImpulseChain chain) { decisions_[slot] = std::move(chain); }

 private:
  std::size_t n_controls_;
  std::vector<std::size_t> offsets_;
  std::vector<ImpulseChain> decisions_;
};

struct EnumerationGuard {
  double max_work = 1e7;  // |controls|^n_steps * |strategy tables|
};

/// inf over every StrategyTable of sup over every control sequence of the
/// played-out payoff. Throws GuardExceeded when the space is too large.
double enumerate_value(const FiniteGame& game, std::size_t start_state,
                       const EnumerationGuard& guard = {});

/// Number of strategy tables enumerate_value would visit from `start_state`.
double strategy_space_size(const FiniteGame& game, std::size_t start_state);

/// Play out one (strategy, control sequence) pair; costs are summed from the
/// last term to the first so the result matches the backward recursion.
double play_out(const FiniteGame& game, std::size_t start_state, const StrategyTable& strategy,
                std::span<const std::size_t> controls);

struct FiniteGameSpec {
  GridSpec grid;  // coarse grid; time_steps is n_steps
  std::size_t control_samples = 0;
  /// Indices into spec.impulse_candidates; empty selects all.
  std::vector<std::size_t> impulse_subset;
  double max_table_work = 1e4;  // |states| * n_steps * |controls|
};

/// Snaps Euler transitions and jumps to the nearest node (ties to the lower
/// index). The terminal table is raw G with terminal jump tables, so the
/// terminal intervention is resolved by backward_value itself.
FiniteGame build_finite_game(const ProblemSpec& spec, const FiniteGameSpec& request);

/// Seeded random games with dyadic table entries, so they serialize exactly.
struct CorpusOptions {
  std::size_t games = 12;
  std::size_t states = 2;
  std::size_t steps = 2;
  std::size_t controls = 2;
  std::size_t impulses = 2;
  std::size_t jump_cap = 2;
};

std::vector<FiniteGame> generate_corpus(std::uint64_t seed, const CorpusOptions& options = {});

/// The hand-worked single-step game whose value from state 1 is 0.4.
FiniteGame reference_single_step_game();

}  // namespace impulse
