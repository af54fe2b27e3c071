#include "impulse/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "impulse/impulse_ops.hpp"

namespace impulse {

void FiniteGame::validate() const {
  auto fail = [](const std::string& what) { throw ConfigError("finite game: " + what); };
  if (n_states == 0 || n_controls == 0) fail("needs at least one state and one control");
  if (next.size() != n_steps || stage.size() != n_steps) fail("transition tables need n_steps entries");
  if (jump.size() != n_steps + 1 || jump_cost.size() != n_steps + 1)
    fail("jump tables need n_steps + 1 entries");
  for (std::size_t k = 0; k < n_steps; ++k) {
    if (next[k].size() != n_states || stage[k].size() != n_states) fail("transition table is not total");
    for (std::size_t s = 0; s < n_states; ++s) {
      if (next[k][s].size() != n_controls || stage[k][s].size() != n_controls) fail("transition table is not total");
      for (auto target : next[k][s])
        if (target >= n_states) fail("transition target out of range");
    }
  }
  for (std::size_t k = 0; k <= n_steps; ++k) {
    if (jump[k].size() != n_states || jump_cost[k].size() != n_states) fail("jump table is not total");
    for (std::size_t s = 0; s < n_states; ++s) {
      if (jump[k][s].size() != n_impulses || jump_cost[k][s].size() != n_impulses) fail("jump table is not total");
      for (std::size_t i = 0; i < n_impulses; ++i) {
        if (jump[k][s][i] >= n_states) fail("jump target out of range");
        if (!(jump_cost[k][s][i] >= alpha)) fail("impulse cost below alpha");
      }
    }
  }
  if (!(alpha > 0.0) && n_impulses > 0) fail("alpha must be positive");
  if (terminal.size() != n_states) fail("terminal table is not total");
  if (jump_cap.size() != n_states) fail("jump caps need one entry per state");
}

namespace {

/// min over chains of length <= cap[s] of chain cost + tail(end state),
/// with the chain cost folded from the right.
std::vector<double> chain_min(const FiniteGame& game, std::size_t k, const std::vector<double>& tail) {
  if (game.n_impulses == 0) return tail;
  const std::size_t max_cap = *std::max_element(game.jump_cap.begin(), game.jump_cap.end());
  std::vector<double> w = tail;
  std::vector<double> result(game.n_states);
  for (std::size_t s = 0; s < game.n_states; ++s)
    if (game.jump_cap[s] == 0) result[s] = tail[s];
  for (std::size_t level = 1; level <= max_cap; ++level) {
    std::vector<double> next = w;
    for (std::size_t s = 0; s < game.n_states; ++s)
      for (std::size_t i = 0; i < game.n_impulses; ++i)
        next[s] = std::min(next[s], game.jump_cost[k][s][i] + w[game.jump[k][s][i]]);
    w.swap(next);
    for (std::size_t s = 0; s < game.n_states; ++s)
      if (game.jump_cap[s] == level) result[s] = w[s];
  }
  return result;
}

}  // namespace

ValueTable backward_value(const FiniteGame& game, InformationOrder order) {
  game.validate();
  const std::size_t n = game.n_steps;
  ValueTable v(n + 1);
  v[n] = game.terminal_is_composed ? game.terminal : chain_min(game, n, game.terminal);

  for (std::size_t k = n; k-- > 0;) {
    if (order == InformationOrder::ImpulseFirst) {
      std::vector<double> h(game.n_states, -std::numeric_limits<double>::infinity());
      for (std::size_t s = 0; s < game.n_states; ++s)
        for (std::size_t c = 0; c < game.n_controls; ++c)
          h[s] = std::max(h[s], game.stage[k][s][c] + v[k + 1][game.next[k][s][c]]);
      v[k] = chain_min(game, k, h);
    } else {
      v[k].assign(game.n_states, -std::numeric_limits<double>::infinity());
      for (std::size_t c = 0; c < game.n_controls; ++c) {
        std::vector<double> h(game.n_states);
        for (std::size_t s = 0; s < game.n_states; ++s)
          h[s] = game.stage[k][s][c] + v[k + 1][game.next[k][s][c]];
        const auto best = chain_min(game, k, h);
        for (std::size_t s = 0; s < game.n_states; ++s) v[k][s] = std::max(v[k][s], best[s]);
      }
    }
  }
  return v;
}

// ---------------------------------------------------------------------------
// Strategy enumeration

StrategyTable::StrategyTable(std::size_t n_controls, std::size_t decision_steps)
    : n_controls_(n_controls), offsets_{0} {
  std::size_t width = 1;
  for (std::size_t k = 0; k < decision_steps; ++k) {
    offsets_.push_back(offsets_.back() + width);
    width *= n_controls;
  }
  decisions_.resize(offsets_.back());
}

std::size_t StrategyTable::slot(std::span<const std::size_t> prefix) const {
  std::size_t code = 0;
  for (auto c : prefix) code = code * n_controls_ + c;
  return offsets_[prefix.size()] + code;
}

namespace {

std::size_t decision_steps_of(const FiniteGame& game) {
  return game.n_steps + (game.terminal_is_composed ? 0 : 1);
}

std::vector<ImpulseChain> chains_up_to(std::size_t n_impulses, std::size_t cap) {
  std::vector<ImpulseChain> out{{}};
  if (n_impulses == 0) return out;
  std::size_t begin = 0;
  for (std::size_t len = 1; len <= cap; ++len) {
    const std::size_t end = out.size();
    for (std::size_t j = begin; j < end; ++j)
      for (std::size_t i = 0; i < n_impulses; ++i) {
        ImpulseChain c = out[j];
        c.push_back(i);
        out.push_back(std::move(c));
      }
    begin = end;
  }
  return out;
}

std::size_t apply_chain(const FiniteGame& game, std::size_t k, std::size_t s, const ImpulseChain& chain) {
  for (auto i : chain) s = game.jump[k][s][i];
  return s;
}

}  // namespace

double play_out(const FiniteGame& game, std::size_t start_state, const StrategyTable& strategy,
                std::span<const std::size_t> controls) {
  double terms[256];
  std::size_t count = 0;
  auto push = [&](double v) {
    if (count == std::size(terms)) throw GuardExceeded("play_out: too many cost terms");
    terms[count++] = v;
  };
  std::size_t s = start_state;
  auto intervene = [&](std::size_t k, const ImpulseChain& chain) {
    if (chain.size() > game.jump_cap[s]) throw Error("play_out: chain exceeds the jump cap");
    for (auto i : chain) {
      push(game.jump_cost[k][s][i]);
      s = game.jump[k][s][i];
    }
  };
  for (std::size_t k = 0; k < game.n_steps; ++k) {
    intervene(k, strategy.decision(controls.first(k)));
    const std::size_t c = controls[k];
    push(game.stage[k][s][c]);
    s = game.next[k][s][c];
  }
  if (!game.terminal_is_composed) intervene(game.n_steps, strategy.decision(controls.first(game.n_steps)));
  push(game.terminal[s]);

  double acc = terms[count - 1];
  for (std::size_t i = count - 1; i-- > 0;) acc = terms[i] + acc;
  return acc;
}

double strategy_space_size(const FiniteGame& game, std::size_t start_state) {
  (void)start_state;
  const std::size_t max_cap = game.jump_cap.empty() ? 0 : *std::max_element(game.jump_cap.begin(), game.jump_cap.end());
  const double chains = static_cast<double>(chains_up_to(game.n_impulses, max_cap).size());
  double slots = 0.0, width = 1.0;
  for (std::size_t k = 0; k < decision_steps_of(game); ++k) {
    slots += width;
    width *= static_cast<double>(game.n_controls);
  }
  return std::pow(chains, slots);
}

double enumerate_value(const FiniteGame& game, std::size_t start_state, const EnumerationGuard& guard) {
  game.validate();
  if (start_state >= game.n_states) throw ConfigError("enumerate_value: start state out of range");
  const double sequences = std::pow(static_cast<double>(game.n_controls), static_cast<double>(game.n_steps));
  const double work = sequences * strategy_space_size(game, start_state);
  if (!(work <= guard.max_work))
    throw GuardExceeded("enumerate_value: strategy space too large (" + std::to_string(work) + " plays)");

  const std::size_t steps = decision_steps_of(game);
  StrategyTable table(game.n_controls, steps);
  const std::size_t slots = table.prefix_count();

  // Slots are ordered by prefix length, so a slot's parent is assigned first.
  std::vector<std::size_t> slot_step(slots), slot_parent(slots), slot_control(slots);
  {
    std::size_t idx = 0, width = 1;
    for (std::size_t k = 0; k < steps; ++k, width *= game.n_controls)
      for (std::size_t code = 0; code < width; ++code, ++idx) {
        slot_step[idx] = k;
        if (k > 0) {
          const std::size_t parent_code = code / game.n_controls;
          slot_parent[idx] = (idx - code - width / game.n_controls) + parent_code;
          slot_control[idx] = code % game.n_controls;
        }
      }
  }

  std::vector<std::vector<ImpulseChain>> chains_by_cap;
  auto chains_for = [&](std::size_t cap) -> const std::vector<ImpulseChain>& {
    while (chains_by_cap.size() <= cap) chains_by_cap.push_back(chains_up_to(game.n_impulses, chains_by_cap.size()));
    return chains_by_cap[cap];
  };

  // All control sequences, precomputed once.
  std::vector<std::vector<std::size_t>> sequences_list;
  {
    std::vector<std::size_t> seq(game.n_steps, 0);
    const auto total = static_cast<std::size_t>(sequences);
    for (std::size_t n = 0; n < total; ++n) {
      sequences_list.push_back(seq);
      for (std::size_t k = game.n_steps; k-- > 0;) {
        if (++seq[k] < game.n_controls) break;
        seq[k] = 0;
      }
    }
  }

  std::vector<std::size_t> state_at(slots);  // pre-intervention state at each prefix
  std::vector<const ImpulseChain*> chosen(slots);
  double best = std::numeric_limits<double>::infinity();

  auto evaluate = [&] {
    double worst = -std::numeric_limits<double>::infinity();
    for (const auto& seq : sequences_list) worst = std::max(worst, play_out(game, start_state, table, seq));
    best = std::min(best, worst);
  };

  auto assign = [&](auto&& self, std::size_t slot) -> void {
    if (slot == slots) {
      evaluate();
      return;
    }
    const std::size_t k = slot_step[slot];
    if (k == 0) {
      state_at[slot] = start_state;
    } else {
      const std::size_t parent = slot_parent[slot];
      const std::size_t post = apply_chain(game, k - 1, state_at[parent], *chosen[parent]);
      state_at[slot] = game.next[k - 1][post][slot_control[slot]];
    }
    for (const auto& chain : chains_for(game.jump_cap[state_at[slot]])) {
      chosen[slot] = &chain;
      table.set(slot, chain);
      self(self, slot + 1);
    }
  };
  assign(assign, 0);
  return best;
}

// ---------------------------------------------------------------------------
// Bridges and fixtures

FiniteGame build_finite_game(const ProblemSpec& spec, const FiniteGameSpec& request) {
  const GridSpec& grid = request.grid;
  grid.validate();
  if (grid.dimension() != spec.state_dim) throw ConfigError("build_finite_game: grid dimension mismatch");
  const auto controls = spec.control_set.discretize(request.control_samples);
  std::vector<std::size_t> subset = request.impulse_subset;
  if (subset.empty())
    for (std::size_t i = 0; i < spec.impulse_candidates.size(); ++i) subset.push_back(i);
  for (auto i : subset)
    if (i >= spec.impulse_candidates.size()) throw ConfigError("build_finite_game: impulse index out of range");

  const double table_work = static_cast<double>(grid.node_count()) * static_cast<double>(grid.time_steps) *
                            static_cast<double>(controls.size());
  if (table_work > request.max_table_work)
    throw GuardExceeded("build_finite_game: |states| * n_steps * |controls| exceeds the guard");

  FiniteGame game;
  game.n_states = grid.node_count();
  game.n_steps = grid.time_steps;
  game.n_controls = controls.size();
  game.n_impulses = subset.size();
  game.alpha = spec.alpha;
  game.terminal_is_composed = false;

  Interpolator snap(grid, InterpolationMode::NearestNode);
  const double dt = grid.dt(spec);
  std::vector<Vector> nodes(game.n_states);
  for (std::size_t s = 0; s < game.n_states; ++s) nodes[s] = grid.node(s);

  Vector target(spec.state_dim);
  game.next.assign(game.n_steps, std::vector<std::vector<std::size_t>>(game.n_states));
  game.stage.assign(game.n_steps, std::vector<std::vector<double>>(game.n_states));
  for (std::size_t k = 0; k < game.n_steps; ++k) {
    const double t = grid.time(spec, k);
    for (std::size_t s = 0; s < game.n_states; ++s) {
      const Vector& x = nodes[s];
      for (const auto& u : controls) {
        const Vector f = spec.dynamics(t, x, u);
        for (std::size_t d = 0; d < target.size(); ++d) target[d] = x[d] + f[d] * dt;
        game.next[k][s].push_back(snap.nearest(target));
        game.stage[k][s].push_back(spec.running_cost(t, x, u) * dt);
      }
    }
  }
  game.jump.assign(game.n_steps + 1, std::vector<std::vector<std::size_t>>(game.n_states));
  game.jump_cost.assign(game.n_steps + 1, std::vector<std::vector<double>>(game.n_states));
  for (std::size_t k = 0; k <= game.n_steps; ++k) {
    const double t = grid.time(spec, k);
    for (std::size_t s = 0; s < game.n_states; ++s) {
      const Vector& x = nodes[s];
      for (auto i : subset) {
        const Vector& xi = spec.impulse_candidates[i];
        const Vector g = spec.jump_map(t, x, xi);
        for (std::size_t d = 0; d < target.size(); ++d) target[d] = x[d] + g[d];
        game.jump[k][s].push_back(snap.nearest(target));
        game.jump_cost[k][s].push_back(spec.impulse_cost(t, x, xi));
      }
    }
  }
  for (std::size_t s = 0; s < game.n_states; ++s) {
    game.terminal.push_back(spec.terminal_cost(nodes[s]));
    game.jump_cap.push_back(max_jump_bound(spec, nodes[s]));
  }
  game.validate();
  return game;
}

std::vector<FiniteGame> generate_corpus(std::uint64_t seed, const CorpusOptions& options) {
  std::mt19937_64 rng(seed);
  // Dyadic entries (multiples of 1/64) keep the corpus exactly serializable.
  auto dyadic = [&](int lo, int hi) {
    const auto span = static_cast<std::uint64_t>(hi - lo + 1);
    return static_cast<double>(lo + static_cast<int>(rng() % span)) / 64.0;
  };
  auto pick = [&](std::size_t n) { return static_cast<std::size_t>(rng() % n); };

  std::vector<FiniteGame> corpus;
  for (std::size_t g = 0; g < options.games; ++g) {
    FiniteGame game;
    game.n_states = options.states;
    game.n_steps = options.steps;
    game.n_controls = options.controls;
    game.n_impulses = options.impulses;
    game.alpha = 8.0 / 64.0;
    game.terminal_is_composed = (g % 2 == 0);
    game.next.assign(game.n_steps, std::vector<std::vector<std::size_t>>(game.n_states));
    game.stage.assign(game.n_steps, std::vector<std::vector<double>>(game.n_states));
    for (std::size_t k = 0; k < game.n_steps; ++k)
      for (std::size_t s = 0; s < game.n_states; ++s)
        for (std::size_t c = 0; c < game.n_controls; ++c) {
          game.next[k][s].push_back(pick(game.n_states));
          game.stage[k][s].push_back(dyadic(-64, 64));
        }
    game.jump.assign(game.n_steps + 1, std::vector<std::vector<std::size_t>>(game.n_states));
    game.jump_cost.assign(game.n_steps + 1, std::vector<std::vector<double>>(game.n_states));
    for (std::size_t k = 0; k <= game.n_steps; ++k)
      for (std::size_t s = 0; s < game.n_states; ++s)
        for (std::size_t i = 0; i < game.n_impulses; ++i) {
          game.jump[k][s].push_back(pick(game.n_states));
          game.jump_cost[k][s].push_back(dyadic(8, 72));
        }
    for (std::size_t s = 0; s < game.n_states; ++s) {
      game.terminal.push_back(dyadic(0, 128));
      game.jump_cap.push_back(options.jump_cap);
    }
    game.validate();
    corpus.push_back(std::move(game));
  }
  return corpus;
}

FiniteGame reference_single_step_game() {
  FiniteGame game;
  game.n_states = 2;
  game.n_steps = 1;
  game.n_controls = 2;  // 0 = keep, 1 = flip
  game.n_impulses = 1;  // reset to state 0
  game.alpha = 0.4;
  game.next = {{{0, 1}, {1, 0}}};
  game.stage = {{{0.0, 0.0}, {0.0, 0.0}}};
  game.jump = {{{0}, {0}}, {{0}, {0}}};
  game.jump_cost = {{{0.4}, {0.4}}, {{0.4}, {0.4}}};
  game.terminal = {0.0, 0.4};  // already min{G, N[G]}
  game.terminal_is_composed = true;
  game.jump_cap = {2, 2};
  game.validate();
  return game;
}

}  // namespace impulse
