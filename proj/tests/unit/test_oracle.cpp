#include <gtest/gtest.h>

#include <functional>

#include "fixtures.hpp"
#include "impulse/io.hpp"
#include "impulse/oracle.hpp"

namespace impulse {
namespace {

using testing::adversarial_drift;
using testing::cash_management;
using testing::line_grid;
using testing::null_flow;

constexpr std::uint64_t kCorpusSeed = 20240601;

/// Max over every control sequence with no interventions at all.
double open_loop_max(const FiniteGame& game, std::size_t start) {
  double best = -std::numeric_limits<double>::infinity();
  std::function<void(std::size_t, std::size_t, double)> go = [&](std::size_t k, std::size_t s, double acc) {
    if (k == game.n_steps) {
      best = std::max(best, acc + game.terminal[s]);
      return;
    }
    for (std::size_t c = 0; c < game.n_controls; ++c) go(k + 1, game.next[k][s][c], acc + game.stage[k][s][c]);
  };
  go(0, start, 0.0);
  return best;
}

TEST(ReferenceGame, HandWorkedValue) {
  const FiniteGame game = reference_single_step_game();
  const ValueTable v = backward_value(game);
  EXPECT_DOUBLE_EQ(v[0][1], 0.4);
  EXPECT_EQ(enumerate_value(game, 1), v[0][1]);
  EXPECT_EQ(enumerate_value(game, 0), v[0][0]);
}

TEST(Corpus, EnumerationEqualsBackwardValue) {
  for (std::uint64_t seed : {kCorpusSeed, std::uint64_t{7}}) {
    const auto corpus = generate_corpus(seed);
    ASSERT_EQ(corpus.size(), 12u);
    for (std::size_t g = 0; g < corpus.size(); ++g) {
      const ValueTable v = backward_value(corpus[g]);
      for (std::size_t s = 0; s < corpus[g].n_states; ++s)
        EXPECT_EQ(enumerate_value(corpus[g], s), v[0][s]) << "seed " << seed << " game " << g << " state " << s;
    }
  }
}

TEST(Corpus, GeneratorIsDeterministicAndMixesTerminals) {
  const auto a = generate_corpus(kCorpusSeed);
  const auto b = generate_corpus(kCorpusSeed);
  const auto c = generate_corpus(kCorpusSeed + 1);
  bool composed = false, raw = false;
  for (std::size_t g = 0; g < a.size(); ++g) {
    EXPECT_EQ(io::game_to_json(a[g]), io::game_to_json(b[g]));
    (a[g].terminal_is_composed ? composed : raw) = true;
  }
  EXPECT_TRUE(composed && raw);
  EXPECT_NE(io::game_to_json(a[0]), io::game_to_json(c[0]));
}

TEST(Corpus, StoredCorpusMatchesGenerator) {
  const io::Json stored = io::read_json_file(std::filesystem::path(IMPULSE_TEST_DATA_DIR) / "oracle_corpus" / "corpus.json");
  EXPECT_EQ(stored.at("seed").get<std::uint64_t>(), kCorpusSeed);
  const auto corpus = generate_corpus(kCorpusSeed);
  ASSERT_EQ(stored.at("games").size(), corpus.size());
  for (std::size_t g = 0; g < corpus.size(); ++g) {
    const FiniteGame loaded = io::game_from_json(stored.at("games")[g]);
    EXPECT_EQ(io::game_to_json(loaded), io::game_to_json(corpus[g])) << g;
    const ValueTable v = backward_value(loaded);
    for (std::size_t s = 0; s < loaded.n_states; ++s) EXPECT_EQ(enumerate_value(loaded, s), v[0][s]);
  }
}

TEST(Oracle, ProhibitiveImpulsesReduceToPureMax) {
  for (FiniteGame game : generate_corpus(3)) {
    for (auto& level : game.jump_cost)
      for (auto& row : level)
        for (double& c : row) c = 1e6;
    const ValueTable v = backward_value(game);
    for (std::size_t s = 0; s < game.n_states; ++s) {
      const double expected = open_loop_max(game, s);
      EXPECT_DOUBLE_EQ(v[0][s], expected);
      EXPECT_DOUBLE_EQ(enumerate_value(game, s), expected);
    }
  }
}

TEST(Oracle, ZeroStageCostsAndFlatTerminal) {
  FiniteGame game = generate_corpus(5)[1];
  for (auto& level : game.stage)
    for (auto& row : level)
      for (double& c : row) c = 0.0;
  for (double& g : game.terminal) g = 0.75;
  const ValueTable v = backward_value(game);
  for (const auto& level : v)
    for (double x : level) EXPECT_EQ(x, 0.75);
  EXPECT_EQ(enumerate_value(game, 0), 0.75);
}

TEST(Oracle, NoImpulsesGivesOpenLoopMax) {
  CorpusOptions o;
  o.impulses = 0;
  o.steps = 3;
  o.states = 3;
  for (const FiniteGame& game : generate_corpus(11, o)) {
    const ValueTable v = backward_value(game);
    for (std::size_t s = 0; s < game.n_states; ++s) {
      EXPECT_DOUBLE_EQ(v[0][s], open_loop_max(game, s));
      EXPECT_DOUBLE_EQ(enumerate_value(game, s), open_loop_max(game, s));
    }
  }
}

TEST(Oracle, SeeingTheCurrentControlNeverHurtsTheMinimizer) {
  std::size_t strict = 0;
  for (const FiniteGame& game : generate_corpus(kCorpusSeed)) {
    const ValueTable blind = backward_value(game, InformationOrder::ImpulseFirst);
    const ValueTable sees = backward_value(game, InformationOrder::ControlFirst);
    for (std::size_t s = 0; s < game.n_states; ++s) {
      EXPECT_LE(sees[0][s], blind[0][s]);
      if (sees[0][s] < blind[0][s]) ++strict;
    }
  }
  EXPECT_GT(strict, 0u);
}

TEST(Oracle, MonotoneInTerminalAndCosts) {
  for (const FiniteGame& game : generate_corpus(13)) {
    const ValueTable base = backward_value(game);
    FiniteGame up = game;
    for (double& g : up.terminal) g += 0.25;
    FiniteGame dearer = game;
    for (auto& level : dearer.jump_cost)
      for (auto& row : level)
        for (double& c : row) c += 0.5;
    const ValueTable a = backward_value(up);
    const ValueTable b = backward_value(dearer);
    for (std::size_t s = 0; s < game.n_states; ++s) {
      EXPECT_GE(a[0][s], base[0][s]);
      EXPECT_GE(b[0][s], base[0][s]);
    }
  }
}

TEST(StrategyTable, SlotsDependOnStrictPrefixOnly) {
  StrategyTable table(2, 3);
  EXPECT_EQ(table.prefix_count(), 7u);
  EXPECT_EQ(table.decision_steps(), 3u);
  const std::vector<std::size_t> empty, one{1}, two{1, 0};
  EXPECT_EQ(table.slot(empty), 0u);
  EXPECT_EQ(table.slot(one), 2u);
  EXPECT_EQ(table.slot(two), 5u);

  const FiniteGame game = reference_single_step_game();
  StrategyTable s(game.n_controls, game.n_steps);
  s.set(0, {0});
  const std::vector<std::size_t> keep{0}, flip{1};
  EXPECT_DOUBLE_EQ(play_out(game, 1, s, keep), 0.4);
  EXPECT_DOUBLE_EQ(play_out(game, 1, s, flip), 0.8);
  s.set(0, {0, 0, 0});
  EXPECT_THROW(play_out(game, 1, s, keep), Error);
}

TEST(Oracle, GuardsRejectLargeSpaces) {
  CorpusOptions o;
  o.steps = 6;
  o.games = 1;
  const FiniteGame big = generate_corpus(1, o)[0];
  EXPECT_GT(strategy_space_size(big, 0), 1e7);
  EXPECT_THROW(enumerate_value(big, 0), GuardExceeded);
  EXPECT_THROW(enumerate_value(reference_single_step_game(), 0, {1.0}), GuardExceeded);
  FiniteGameSpec req{line_grid(-3.0, 3.0, 61, 50), 0, {}, 100.0};
  EXPECT_THROW(build_finite_game(adversarial_drift(), req), GuardExceeded);
}

TEST(FiniteGameValidation, RejectsMalformedTables) {
  FiniteGame game = reference_single_step_game();
  game.alpha = 0.0;
  EXPECT_THROW(game.validate(), ConfigError);
  game = reference_single_step_game();
  game.jump_cost[0][0][0] = 0.1;
  EXPECT_THROW(game.validate(), ConfigError);
  game = reference_single_step_game();
  game.next[0][1][0] = 5;
  EXPECT_THROW(game.validate(), ConfigError);
  game = reference_single_step_game();
  game.jump.pop_back();
  EXPECT_THROW(game.validate(), ConfigError);
}

TEST(BuildFiniteGame, NullFlowTransitionsAreIdentity) {
  const FiniteGame game = build_finite_game(null_flow(0.5, 1.0, 2.0), {line_grid(-2.0, 2.0, 5, 2), 0, {}, 1e4});
  ASSERT_EQ(game.n_controls, 1u);
  for (std::size_t k = 0; k < 2; ++k)
    for (std::size_t s = 0; s < 5; ++s) {
      EXPECT_EQ(game.next[k][s][0], s);
      EXPECT_EQ(game.stage[k][s][0], 0.0);
    }
  EXPECT_FALSE(game.terminal_is_composed);
  EXPECT_EQ(game.terminal, (std::vector<double>{2.0, 1.0, 0.0, 1.0, 2.0}));
  EXPECT_EQ(game.jump.size(), 3u);
}

TEST(BuildFiniteGame, HalfNodeMovesSnapToLowerNeighbour) {
  const FiniteGame game =
      build_finite_game(adversarial_drift(0.3, 0.1), {line_grid(-3.0, 3.0, 7, 2), 3, {}, 1e4});
  ASSERT_EQ(game.n_controls, 3u);
  for (std::size_t k = 0; k < 2; ++k)
    for (std::size_t s = 0; s < 7; ++s) {
      EXPECT_EQ(game.next[k][s][0], s == 0 ? 0 : s - 1);
      EXPECT_EQ(game.next[k][s][1], s);
      EXPECT_EQ(game.next[k][s][2], s);
    }
}

TEST(BuildFiniteGame, CashManagementTables) {
  const ProblemSpec spec = cash_management(0.2, 0.1, 0.5, 1.0);
  const FiniteGame game = build_finite_game(spec, {line_grid(-3.0, 3.0, 61, 50), 0, {1, 6}, 1e4});
  ASSERT_EQ(game.n_impulses, 2u);
  EXPECT_EQ(spec.impulse_candidates[1], Vector{-1.5});
  EXPECT_EQ(spec.impulse_candidates[6], Vector{1.5});
  EXPECT_NEAR(game.stage[0][40][0], 1.0 * 0.02, 1e-15);
  EXPECT_EQ(game.next[0][40][0], 40u);
  EXPECT_EQ(game.jump[0][40][0], 25u);
  EXPECT_EQ(game.jump[50][40][1], 55u);
  EXPECT_EQ(game.jump[0][5][0], 0u);
  EXPECT_DOUBLE_EQ(game.jump_cost[0][40][0], 0.35);
  EXPECT_EQ(game.jump_cap[30], max_jump_bound(spec, Vector{0.0}));
  EXPECT_EQ(game.terminal[0], 3.0);
}

}  // namespace
}  // namespace impulse
