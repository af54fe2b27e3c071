#include "impulse/cli/commands.hpp"

#include <algorithm>
#include <fstream>
#include <ostream>

#include "impulse/oracle.hpp"
#include "impulse/solver.hpp"
#include "impulse/verifier.hpp"

namespace impulse::cli {

namespace {

constexpr const char* kToolName = "impulse_qvi";

const std::vector<std::string> kTopLevelKeys = {"problem", "grid",   "solve", "simulate",
                                                "verify",  "oracle", "seed",  "output"};

io::Json manifest_for(const RunConfig& config, const std::string& command) {
  return {{"tool", kToolName},
          {"version", version()},
          {"command", command},
          {"seed", config.seed},
          {"no_verify", config.no_verify},
          {"config", config.doc}};
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write '" + path.string() + "'");
  return out;
}

const io::Json& section(const RunConfig& config, const std::string& key) {
  if (!config.doc.contains(key)) throw ConfigError("config: missing section '" + key + "'");
  return config.doc.at(key);
}

SolveOptions solve_options(const RunConfig& config) {
  SolveOptions options;
  if (config.doc.contains("solve")) options = io::solve_options_from_json(config.doc.at("solve"));
  options.validation_seed = config.seed;
  return options;
}

void print_structural(std::ostream& log, const ResidualReport& r) {
  log << "obstacle check: " << (r.obstacle_violations.empty() ? "pass" : "FAIL") << " ("
      << r.obstacle_violations.size() << " violations)\n";
  log << "growth envelope: " << (r.growth_violations.empty() ? "pass" : "FAIL") << " (lower "
      << io::format_double(r.lower_bound_at_t0) << ", C_v " << io::format_double(r.growth_const_v) << ", "
      << r.growth_violations.size() << " violations)\n";
  log << "terminal limit: " << (r.terminal_ok ? "pass" : "FAIL") << " (gap " << io::format_double(r.terminal_gap)
      << ", bound L dt " << io::format_double(r.terminal_bound) << " + 1e-9)\n";
}

}  // namespace

RunConfig load_run_config(const RunOptions& options) {
  io::Json doc = io::read_json_file(options.config);
  if (!doc.is_object()) throw ConfigError(options.config.string() + ": config must be a JSON object");
  if (doc.contains("tool") && doc.contains("config")) {
    if (doc.at("tool") != kToolName) throw ConfigError(options.config.string() + ": manifest from another tool");
    io::Json inner = doc.at("config");
    doc = std::move(inner);
  }
  io::Section top(doc, "");
  for (const auto& key : kTopLevelKeys) top.has(key);
  top.finish();

  RunConfig config;
  config.seed = top.has("seed") ? top.count("seed") : kDefaultSeed;
  if (options.seed) config.seed = *options.seed;
  if (options.out) config.out = *options.out;
  else if (top.has("output")) config.out = top.text("output");
  else throw ConfigError("config: no output directory (set 'output' or pass --out)");
  config.no_verify = options.no_verify;

  doc["seed"] = config.seed;
  doc["output"] = config.out.string();
  config.doc = std::move(doc);
  std::filesystem::create_directories(config.out);
  return config;
}

int run_solve(const RunConfig& config, std::ostream& log) {
  const ProblemSpec spec = io::problem_from_json(section(config, "problem"));
  const GridSpec grid = io::grid_from_json(section(config, "grid"));
  SolveOptions options = solve_options(config);

  io::Json manifest = manifest_for(config, "solve");
  if (grid.dimension() != spec.state_dim) throw ConfigError("grid: dimension does not match the problem");

  const ValidationReport validation = validate_spec(spec, options.validation_budget, {options.validation_seed});
  io::write_json_file(config.out / "validation.json", io::validation_report_to_json(validation));
  log << "assumption checks: " << (validation.passed() ? "pass" : "FAIL") << "\n";
  if (!validation.passed() && !options.force) {
    io::write_json_file(config.out / "manifest.json", manifest);
    throw CheckFailure("assumption checks failed; see validation.json");
  }

  SolveOptions run = options;
  run.force = true;
  ValueField field = solve(spec, grid, run);
  field.options = options;
  log << "solved " << grid.node_count() << " nodes x " << grid.time_steps << " steps in "
      << io::format_double(field.seconds) << " s (clamp events " << field.clamp_events << ")\n";

  bool ok = true;
  if (config.no_verify) {
    manifest["verify"] = "skipped";
    log << "structural checks skipped (--no-verify)\n";
  } else {
    const ResidualReport report = check_structural(field, spec);
    print_structural(log, report);
    io::write_json_file(config.out / "structural.json", io::residual_report_to_json(report));
    manifest["verify"] = report.structural_ok() ? "pass" : "fail";
    ok = report.structural_ok();
  }
  io::write_value_field(config.out, spec, field, manifest);
  return ok ? kOk : kCheckFailure;
}

int run_simulate(const RunConfig& config, std::ostream& log) {
  const ProblemSpec spec = io::problem_from_json(section(config, "problem"));
  io::Section sim(section(config, "simulate"), "simulate");
  const Vector x0 = sim.vector("x0");
  const double dt = sim.number("dt", 1e-3);
  const ControlPath control = sim.has("control") ? io::control_path_from_json(sim.at("control"), spec.control_set.dimension())
                                                 : ControlPath::constant(spec.control_set.discretize().front());
  const bool has_schedule = sim.has("schedule");
  const bool has_policy = sim.has("policy");
  if (has_schedule && has_policy) throw ConfigError("config: 'simulate' takes either 'schedule' or 'policy'");

  io::Json payoff;
  TrajectoryRecord record;
  if (has_policy) {
    const std::filesystem::path policy = sim.text("policy");
    if (!std::filesystem::exists(policy)) throw ConfigError("simulate: policy manifest '" + policy.string() + "' not found");
    sim.finish();
    const io::LoadedField loaded = io::read_value_field(policy);
    if (loaded.spec.fingerprint() != spec.fingerprint())
      throw ConfigError("simulate: policy was solved for a different problem");
    PlaybackResult played = play_policy(spec, loaded.field, x0, control, dt);
    payoff["value_at_start"] = played.value_at_start;
    payoff["realized_payoff"] = played.realized_payoff;
    payoff["difference"] = played.realized_payoff - played.value_at_start;
    record = std::move(played.record);
    log << "policy playback: realized " << io::format_double(payoff["realized_payoff"].get<double>())
        << " vs v(t0, x0) " << io::format_double(payoff["value_at_start"].get<double>()) << "\n";
  } else {
    const ImpulseSchedule schedule = has_schedule ? io::schedule_from_json(sim.at("schedule")) : ImpulseSchedule{};
    sim.finish();
    record = integrate(spec, x0, control, schedule, dt);
  }
  payoff["integral_cost"] = record.integral_cost;
  payoff["impulse_cost"] = record.impulse_cost;
  payoff["terminal_cost"] = record.terminal_cost;
  payoff["total"] = record.total;
  payoff["jumps"] = record.jumps.size();

  {
    auto out = open_out(config.out / "trajectory.csv");
    write_trajectory_csv(out, record);
  }
  {
    auto out = open_out(config.out / "jumps.csv");
    write_jump_events_csv(out, record);
  }
  io::write_json_file(config.out / "payoff.json", payoff);
  io::Json manifest = manifest_for(config, "simulate");
  manifest["payoff"] = payoff;
  io::write_json_file(config.out / "manifest.json", manifest);
  log << "payoff: integral " << io::format_double(record.integral_cost) << ", impulses "
      << io::format_double(record.impulse_cost) << ", terminal " << io::format_double(record.terminal_cost)
      << ", total " << io::format_double(record.total) << "\n";
  return kOk;
}

int run_verify(const RunConfig& config, std::ostream& log) {
  io::Section ver(section(config, "verify"), "verify");
  const std::filesystem::path path = ver.text("field");
  ver.finish();
  const io::LoadedField loaded = io::read_value_field(path);

  ResidualReport report = qvi_residual(loaded.field, loaded.spec);
  report = check_structural(loaded.field, loaded.spec, std::move(report));
  log << "residual max-norm " << io::format_double(report.max_norm) << " (q50 "
      << io::format_double(report.quantile_50) << ", q90 " << io::format_double(report.quantile_90)
      << ", q99 " << io::format_double(report.quantile_99) << "; boundary "
      << io::format_double(report.boundary_max_norm) << ")\n";
  print_structural(log, report);

  io::write_json_file(config.out / "residual.json", io::residual_report_to_json(report));
  {
    auto out = open_out(config.out / "residual.csv");
    write_residual_csv(out, loaded.field, report);
  }
  io::Json manifest = manifest_for(config, "verify");
  manifest["structural_ok"] = report.structural_ok();
  io::write_json_file(config.out / "manifest.json", manifest);
  return report.structural_ok() ? kOk : kCheckFailure;
}

int run_oracle(const RunConfig& config, std::ostream& log) {
  io::Json sec = config.doc.contains("oracle") ? config.doc.at("oracle") : io::Json::object();
  io::Section orc(sec, "oracle");
  EnumerationGuard guard;
  guard.max_work = orc.number("max_work", guard.max_work);

  struct Entry {
    std::string source;
    FiniteGame game;
  };
  std::vector<Entry> games;

  const bool use_corpus = !orc.has("corpus") || !orc.at("corpus").is_boolean() || orc.at("corpus").get<bool>();
  std::vector<FiniteGame> corpus;
  if (use_corpus) {
    CorpusOptions opts;
    if (orc.has("corpus") && orc.at("corpus").is_object()) {
      io::Section c = orc.child("corpus");
      opts.games = c.count("games", opts.games);
      opts.states = c.count("states", opts.states);
      opts.steps = c.count("steps", opts.steps);
      opts.controls = c.count("controls", opts.controls);
      opts.impulses = c.count("impulses", opts.impulses);
      opts.jump_cap = c.count("jump_cap", opts.jump_cap);
      c.finish();
    }
    corpus = generate_corpus(config.seed, opts);
    for (const auto& g : corpus) games.push_back({"corpus", g});
  }
  if (orc.has("corpus_file")) {
    const io::Json stored = io::read_json_file(orc.text("corpus_file"));
    const io::Json& list = stored.contains("games") ? stored.at("games") : stored;
    if (!list.is_array()) throw ConfigError("oracle: corpus file must hold an array of games");
    for (const auto& g : list) games.push_back({"corpus_file", io::game_from_json(g)});
  }
  if (orc.has("games")) {
    const io::Json& list = orc.at("games");
    if (!list.is_array()) throw ConfigError("config: field 'oracle.games' must be an array");
    for (const auto& g : list) games.push_back({"config", io::game_from_json(g)});
  }
  std::optional<io::Json> matched_section;
  if (orc.has("matched")) matched_section = orc.at("matched");
  orc.finish();

  io::Json results = io::Json::array();
  std::size_t total = 0, equal = 0, order_sensitive = 0;
  for (std::size_t g = 0; g < games.size(); ++g) {
    const FiniteGame& game = games[g].game;
    const ValueTable backward = backward_value(game);
    const ValueTable control_first = backward_value(game, InformationOrder::ControlFirst);
    for (std::size_t s = 0; s < game.n_states; ++s) {
      const double enumerated = enumerate_value(game, s, guard);
      const bool same = enumerated == backward[0][s];
      const bool sensitive = control_first[0][s] != backward[0][s];
      ++total;
      equal += same;
      order_sensitive += sensitive;
      results.push_back({{"source", games[g].source},
                         {"game", g},
                         {"start_state", s},
                         {"enumerated", enumerated},
                         {"backward", backward[0][s]},
                         {"equal", same},
                         {"order_sensitive", sensitive}});
    }
  }
  log << "oracle: " << equal << "/" << total << " equalities (" << order_sensitive
      << " start states where the information order matters)\n";

  io::Json report = {{"seed", config.seed}, {"equal", equal}, {"total", total}, {"results", results}};
  bool ok = equal == total;

  if (matched_section) {
    io::Section m(*matched_section, "oracle.matched");
    ProblemSpec spec = io::problem_from_json(section(config, "problem"));
    FiniteGameSpec request;
    request.grid = io::grid_from_json(m.at("grid"));
    request.control_samples = m.count("control_samples", 0);
    if (m.has("impulse_subset")) {
      for (const auto& i : m.at("impulse_subset")) request.impulse_subset.push_back(io::Section::as_count(i, "oracle.matched.impulse_subset"));
    }
    request.max_table_work = m.number("max_table_work", request.max_table_work);
    m.finish();
    if (!request.impulse_subset.empty()) {
      std::vector<Vector> chosen;
      for (auto i : request.impulse_subset) {
        if (i >= spec.impulse_candidates.size()) throw ConfigError("oracle.matched: impulse index out of range");
        chosen.push_back(spec.impulse_candidates[i]);
      }
      spec.impulse_candidates = chosen;
      request.impulse_subset.clear();
    }
    const FiniteGame game = build_finite_game(spec, request);
    const ValueTable backward = backward_value(game);
    SolveOptions options = solve_options(config);
    options.interpolation = InterpolationMode::NearestNode;
    options.control_samples = request.control_samples;
    options.force = true;
    const ValueField field = solve(spec, request.grid, options);
    double gap = 0.0;
    for (std::size_t k = 0; k < field.slices.size(); ++k)
      for (std::size_t s = 0; s < game.n_states; ++s)
        gap = std::max(gap, std::abs(field.slices[k].values[s] - backward[k][s]));
    const bool matched_ok = gap <= 1e-12;
    report["matched"] = {{"max_abs_difference", gap}, {"passed", matched_ok}};
    log << "solver vs finite game: max difference " << io::format_double(gap) << (matched_ok ? " (pass)" : " (FAIL)")
        << "\n";
    ok = ok && matched_ok;
  }

  io::Json stored = io::Json::array();
  for (const auto& g : corpus) stored.push_back(io::game_to_json(g));
  io::write_json_file(config.out / "corpus.json", {{"seed", config.seed}, {"games", stored}});
  io::write_json_file(config.out / "oracle.json", report);
  io::Json manifest = manifest_for(config, "oracle");
  manifest["passed"] = ok;
  io::write_json_file(config.out / "manifest.json", manifest);
  return ok ? kOk : kCheckFailure;
}

int run_command(const std::string& command, const RunOptions& options, std::ostream& log, std::ostream& err) {
  try {
    const RunConfig config = load_run_config(options);
    if (command == "solve") return run_solve(config, log);
    if (command == "simulate") return run_simulate(config, log);
    if (command == "verify") return run_verify(config, log);
    if (command == "oracle") return run_oracle(config, log);
    err << "error: unknown command '" << command << "'\n";
    return kConfigError;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const ModelEvaluationError& e) {
    err << "error: " << e.what() << "\n";
    return kConfigError;
  } catch (const CheckFailure& e) {
    err << "check failed: " << e.what() << "\n";
    return kCheckFailure;
  } catch (const GuardExceeded& e) {
    err << "guard exceeded: " << e.what() << "\n";
    return kGuardExceeded;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kFailure;
  }
}

}  // namespace impulse::cli
