// acpc command-line tool.
//
//   acpc inspect  --model m.json [--dra a.hoa]
//   acpc synth    --model m.json --dra a.hoa --out strategy.json [...]
//   acpc simulate --model m.json --strategy strategy.json [...]
//   acpc oracle   --model m.json
//
// Exit codes: 0 success, 1 internal/numeric failure, 2 infeasible
// specification, 3 malformed input, 4 resource cap exceeded.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <exception>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "acpc/graph.hpp"
#include "acpc/io.hpp"
#include "acpc/model.hpp"
#include "acpc/oracles.hpp"
#include "acpc/simulate.hpp"
#include "acpc/solvers.hpp"
#include "acpc/synthesis.hpp"
#include "acpc/types.hpp"

namespace {

using namespace acpc;

std::string fmt(double x) {
  std::ostringstream out;
  out.precision(12);
  out << x;
  return out.str();
}

std::vector<bool> surveillance_flags(const ModelDocument& doc) {
  const int prop = doc.model.prop_index(doc.surveillance);
  std::vector<bool> flags(doc.model.state_count(), false);
  for (StateId s = 0; s < doc.model.state_count(); ++s) {
    flags[s] = doc.model.has_prop(s, prop);
  }
  return flags;
}

long count_true(const std::vector<bool>& flags) {
  long n = 0;
  for (const bool f : flags) n += f ? 1 : 0;
  return n;
}

// Owns a round-based product controller together with its projection onto
// the base model, so a batch factory can hand out self-contained runtimes.
class ComposedRunner : public ControllerRuntime {
 public:
  explicit ComposedRunner(const SynthesisResult* result)
      : composite_(compose_controller(*result)),
        projected_(&result->product, &composite_) {}

  void reset(StateId start) override { projected_.reset(start); }
  ActionId next_action(StateId current) override { return projected_.next_action(current); }
  void observe(StateId next) override { projected_.observe(next); }
  bool supports_rounds() const override { return projected_.supports_rounds(); }
  long completed_rounds() const override { return projected_.completed_rounds(); }
  const std::vector<RoundReport>& round_reports() const override {
    return projected_.round_reports();
  }

 private:
  CompositeController composite_;
  ProjectedController projected_;
};

// Same, for the finite-memory strategy (no round structure).
class ShortcutRunner : public ControllerRuntime {
 public:
  explicit ShortcutRunner(const SynthesisResult* result)
      : runner_(&*result->shortcut), projected_(&result->product, &runner_) {}

  void reset(StateId start) override { projected_.reset(start); }
  ActionId next_action(StateId current) override { return projected_.next_action(current); }
  void observe(StateId next) override { projected_.observe(next); }
  bool supports_rounds() const override { return projected_.supports_rounds(); }
  long completed_rounds() const override { return projected_.completed_rounds(); }
  const std::vector<RoundReport>& round_reports() const override {
    return projected_.round_reports();
  }

 private:
  FiniteMemoryRunner runner_;
  ProjectedController projected_;
};

// ------------------------------------------------------------- inspect ----

int cmd_inspect(const std::string& model_path, const std::string& dra_path) {
  const ModelDocument doc = parse_model(read_file(model_path));
  const Mdp& m = doc.model;
  const std::vector<bool> sur = surveillance_flags(doc);

  std::cout << "model: " << m.state_count() << " states, " << m.action_count()
            << " actions, " << m.ap().size() << " propositions\n";
  std::cout << "surveillance: '" << doc.surveillance << "' on " << count_true(sur)
            << " states\n";
  std::cout << "initial: " << m.state_name(*m.initial()) << "\n";
  std::cout << "digest: " << fnv1a64_digest(emit_model(doc)) << "\n";

  const std::vector<EndComponent> mecs = mec_decompose(m);
  std::cout << "maximal end components: " << mecs.size() << "\n";
  for (std::size_t i = 0; i < mecs.size(); ++i) {
    long with_sur = 0;
    for (const StateId s : mecs[i].states) with_sur += sur[s] ? 1 : 0;
    std::cout << "  mec " << i << ": " << mecs[i].states.size() << " states, "
              << with_sur << " surveillance\n";
  }

  if (!dra_path.empty()) {
    const Dra dra = parse_hoa(read_file(dra_path));
    std::cout << "automaton: " << dra.state_count() << " states, "
              << dra.pairs().size() << " acceptance pairs, " << dra.ap().size()
              << " propositions\n";
    std::cout << "automaton digest: " << fnv1a64_digest(emit_hoa(dra)) << "\n";
    const ProductMdp product = build_product(m, dra, doc.surveillance);
    std::cout << "product: " << product.model.state_count()
              << " reachable states, " << count_true(product.surveillance)
              << " surveillance\n";
    const std::vector<MaecEntry> entries = compute_maecs(product);
    std::cout << "accepting components: " << entries.size() << "\n";
    for (std::size_t i = 0; i < entries.size(); ++i) {
      long with_sur = 0;
      for (const StateId s : entries[i].component.states) {
        with_sur += product.surveillance[s] ? 1 : 0;
      }
      std::cout << "  component " << i << ": pair " << entries[i].pair_index
                << ", " << entries[i].component.states.size() << " states, "
                << with_sur << " surveillance\n";
    }
  }
  return 0;
}

// --------------------------------------------------------------- synth ----

int cmd_synth(const std::string& model_path, const std::string& dra_path,
              const std::string& out_path, const std::string& report_path,
              std::size_t action_cap, double tol, bool no_early_exit,
              bool prefer_shortcut) {
  const ModelDocument doc = parse_model(read_file(model_path));
  const Dra dra = parse_hoa(read_file(dra_path));

  SynthesisOptions opts;
  opts.action_cap = action_cap;
  opts.early_exit = !no_early_exit;
  if (tol > 0.0) opts.certificate_tol = tol;

  const SynthesisResult result = synthesize(doc.model, dra, doc.surveillance, opts);

  const std::string model_digest = fnv1a64_digest(emit_model(doc));
  const std::string dra_digest = fnv1a64_digest(emit_hoa(dra));

  std::cout << "product: " << result.product.model.state_count() << " states\n";
  std::cout << "accepting components: " << result.entries.size() << "\n";
  for (std::size_t i = 0; i < result.entries.size(); ++i) {
    const MaecEntry& e = result.entries[i];
    const bool selected =
        std::find(result.selection.selected.begin(), result.selection.selected.end(),
                  static_cast<int>(i)) != result.selection.selected.end();
    std::cout << "  component " << i << ": pair " << e.pair_index << ", "
              << e.component.states.size() << " states, value "
              << (e.value_known ? fmt(e.value) : std::string("infinite"))
              << (selected ? ", selected" : "") << "\n";
  }
  std::cout << "optimal value: " << fmt(result.selection.optimal_value) << "\n";
  std::cout << "finite-memory shortcut: "
            << (result.shortcut.has_value() ? "available" : "not available") << "\n";

  bool prefer = prefer_shortcut;
  if (prefer && !result.shortcut.has_value()) {
    std::cerr << "note: finite-memory shortcut not available; "
                 "keeping the round-based controller\n";
    prefer = false;
  }

  write_file(out_path, emit_strategy(result, prefer, model_digest));
  std::cout << "strategy: " << out_path << "\n";
  if (!report_path.empty()) {
    write_file(report_path, synthesis_report(result, model_digest, dra_digest));
    std::cout << "report: " << report_path << "\n";
  }
  return 0;
}

// ------------------------------------------------------------ simulate ----

// Cycle-target analogue of run_batch: fresh controllers up front, static
// chunking over threads, first error rethrown after joining.
std::vector<SimulationReport> run_batch_cycles(
    const SimModel& model,
    const std::function<std::unique_ptr<ControllerRuntime>()>& make_controller,
    long cycles, std::uint64_t seed, int count, int threads) {
  std::vector<std::unique_ptr<ControllerRuntime>> controllers;
  controllers.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    controllers.push_back(make_controller());
    if (!controllers.back()) throw InputError("controller factory returned null");
  }
  std::vector<SimulationReport> reports(static_cast<std::size_t>(count));
  const int workers = std::max(1, std::min(threads, count));
  const int chunk = (count + workers - 1) / workers;
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(workers));
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w]() {
      try {
        const int lo = w * chunk;
        const int hi = std::min(count, lo + chunk);
        for (int i = lo; i < hi; ++i) {
          SimOptions o;
          o.seed = seed;
          o.run_index = static_cast<std::uint64_t>(i);
          reports[static_cast<std::size_t>(i)] =
              run_cycles(model, *controllers[static_cast<std::size_t>(i)], cycles, o);
        }
      } catch (...) {
        errors[static_cast<std::size_t>(w)] = std::current_exception();
      }
    });
  }
  for (std::thread& t : pool) t.join();
  for (const std::exception_ptr& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return reports;
}

int cmd_simulate(const std::string& model_path, const std::string& strategy_path,
                 long rounds, long cycles, std::uint64_t seed, int batch,
                 int threads, const std::string& report_path) {
  const ModelDocument doc = parse_model(read_file(model_path));
  const StrategyFile strategy = load_strategy(read_file(strategy_path), doc);
  const std::vector<bool> sur = surveillance_flags(doc);
  const SimModel sim{&doc.model, &sur};

  if (batch < 1) throw InputError("--batch must be at least 1");
  if (threads < 1) threads = static_cast<int>(std::thread::hardware_concurrency());
  if (threads < 1) threads = 1;

  const bool use_shortcut =
      strategy.prefer_shortcut && strategy.result.shortcut.has_value();
  const std::function<std::unique_ptr<ControllerRuntime>()> factory =
      [&]() -> std::unique_ptr<ControllerRuntime> {
    if (use_shortcut) return std::make_unique<ShortcutRunner>(&strategy.result);
    return std::make_unique<ComposedRunner>(&strategy.result);
  };

  std::vector<SimulationReport> reports;
  if (use_shortcut || cycles > 0) {
    const long target = cycles > 0 ? cycles : 1000;
    std::cout << "controller: "
              << (use_shortcut ? "finite-memory" : "round-based") << ", "
              << target << " cycles per run\n";
    reports = run_batch_cycles(sim, factory, target, seed, batch, threads);
  } else {
    std::cout << "controller: round-based, " << rounds << " rounds per run\n";
    reports = run_batch(sim, factory, rounds, seed, batch, threads);
  }

  for (const SimulationReport& r : reports) {
    std::cout << "run " << r.run_index << ": " << r.steps << " steps, cost "
              << fmt(r.total_cost) << ", " << r.cycles << " cycles";
    if (r.cycles > 0) std::cout << ", average/cycle " << fmt(r.average_per_cycle);
    if (r.rounds > 0) std::cout << ", " << r.rounds << " rounds";
    std::cout << "\n";
  }

  const SummaryStats summary = summarize(reports);
  std::cout << "summary: " << summary.runs << " runs, mean cost "
            << fmt(summary.mean_cost) << ", mean cycles " << fmt(summary.mean_cycles)
            << ", mean average/cycle " << fmt(summary.mean_average_per_cycle) << "\n";
  if (summary.total_rounds > 0) {
    std::cout << "rounds: " << summary.total_rounds << " total, mean "
              << fmt(summary.mean_cycles_per_round)
              << " cycles/round, median " << summary.median_cycles_per_round
              << "\n";
  }

  if (!report_path.empty()) {
    const std::string model_digest = fnv1a64_digest(emit_model(doc));
    const std::string strategy_digest = fnv1a64_digest(emit_strategy(
        strategy.result, strategy.prefer_shortcut, model_digest));
    write_file(report_path,
               simulation_report(reports, summary, model_digest, strategy_digest));
    std::cout << "report: " << report_path << "\n";
  }
  return 0;
}

// -------------------------------------------------------------- oracle ----

bool rows_match(const std::vector<double>& a, const std::vector<double>& b,
                double tol) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (std::abs(a[i] - b[i]) > tol) return false;
  }
  return true;
}

// Multiset equality of two reduced action lists under the numeric tolerance,
// greedy first-fit matching on (row, cost).
bool same_action_multiset(const std::vector<ReducedAction>& a,
                          const std::vector<ReducedAction>& b, double tol) {
  if (a.size() != b.size()) return false;
  std::vector<bool> used(b.size(), false);
  for (const ReducedAction& x : a) {
    bool found = false;
    for (std::size_t j = 0; j < b.size(); ++j) {
      if (used[j]) continue;
      if (std::abs(x.cost - b[j].cost) <= tol && rows_match(x.row, b[j].row, tol)) {
        used[j] = true;
        found = true;
        break;
      }
    }
    if (!found) return false;
  }
  return true;
}

int cmd_oracle(const std::string& model_path) {
  constexpr double kRowTol = 1e-9;
  constexpr double kGainTol = 1e-8;

  const ModelDocument doc = parse_model(read_file(model_path));
  const Mdp& m = doc.model;
  const std::vector<bool> sur = surveillance_flags(doc);
  int checks = 0;

  const std::vector<EndComponent> mecs = mec_decompose(m);
  if (m.state_count() <= 8) {
    const std::vector<EndComponent> all = enumerate_ecs(m);
    for (const EndComponent& mec : mecs) {
      const bool listed =
          std::any_of(all.begin(), all.end(), [&](const EndComponent& ec) {
            return ec.states == mec.states && ec.actions == mec.actions;
          });
      if (!listed) {
        throw NumericError("certification failed: a maximal end component is "
                           "not an end component under exhaustive enumeration");
      }
    }
    for (const EndComponent& ec : all) {
      const bool covered =
          std::any_of(mecs.begin(), mecs.end(), [&](const EndComponent& mec) {
            return std::includes(mec.states.begin(), mec.states.end(),
                                 ec.states.begin(), ec.states.end());
          });
      if (!covered) {
        throw NumericError("certification failed: an end component escapes "
                           "every maximal end component");
      }
    }
    ++checks;
    std::cout << "ok: end-component decomposition matches exhaustive "
                 "enumeration (" << mecs.size() << " maximal, " << all.size()
              << " total)\n";
  } else {
    std::cout << "skipped: exhaustive end-component enumeration (model has "
              << m.state_count() << " states, guard is 8)\n";
  }

  for (std::size_t i = 0; i < mecs.size(); ++i) {
    long with_sur = 0;
    for (const StateId s : mecs[i].states) with_sur += sur[s] ? 1 : 0;
    if (with_sur == 0) {
      std::cout << "skipped: component " << i << " has no surveillance state\n";
      continue;
    }
    const ComponentModel component = extract_component(m, mecs[i], sur);
    const ReducedMdp reduced = reduce_maec(component);

    // Order independence: eliminate in descending local order instead.
    ReduceOptions desc;
    for (StateId local = component.model.state_count() - 1; local >= 0; --local) {
      if (!component.surveillance[local]) desc.elimination_order.push_back(local);
    }
    const ReducedMdp alt = reduce_maec(component, desc);
    if (reduced.states != alt.states) {
      throw NumericError("certification failed: elimination order changed the "
                         "reduced state set");
    }
    for (std::size_t k = 0; k < reduced.states.size(); ++k) {
      if (!same_action_multiset(reduced.actions[k], alt.actions[k], kRowTol)) {
        throw NumericError("certification failed: elimination order changed "
                           "the reduced actions of component " + std::to_string(i));
      }
    }
    ++checks;
    std::cout << "ok: component " << i << " reduction is elimination-order "
                 "independent (" << reduced.action_total() << " actions)\n";

    // Every reduced action against the absorbing-chain oracle.
    for (std::size_t k = 0; k < reduced.states.size(); ++k) {
      for (const ReducedAction& act : reduced.actions[k]) {
        const std::vector<HitExpectation> expect = absorbing_expectations(
            component.model, act.strategy, reduced.states, {reduced.states[k]});
        if (!rows_match(expect[0].hit, act.row, kRowTol) ||
            std::abs(expect[0].cost - act.cost) > kRowTol) {
          throw NumericError("certification failed: reduced action of component " +
                             std::to_string(i) +
                             " disagrees with the absorbing-chain oracle");
        }
      }
    }
    ++checks;
    std::cout << "ok: component " << i << " reduced rows and costs match the "
                 "absorbing-chain oracle\n";

    const AcpsSolution average = acps_solve(reduced);
    std::cout << "component " << i << " optimal average cost per cycle: "
              << fmt(average.gain) << "\n";
    if (component.model.state_count() <= 5) {
      try {
        const double brute = brute_force_acpc(component.model, component.surveillance);
        if (std::abs(average.gain - brute) > kGainTol) {
          throw NumericError("certification failed: component " + std::to_string(i) +
                             " average " + fmt(average.gain) +
                             " disagrees with exhaustive minimum " + fmt(brute));
        }
        ++checks;
        std::cout << "ok: component " << i
                  << " average matches the exhaustive policy minimum\n";
      } catch (const InputError&) {
        std::cout << "skipped: exhaustive policy check on component " << i
                  << " (a stationary policy is multichain)\n";
      }
    } else {
      std::cout << "skipped: exhaustive policy check on component " << i
                << " (more than 5 states)\n";
    }
  }

  if (checks == 0) {
    std::cout << "no certifiable structure found (no component with a "
                 "surveillance state)\n";
  } else {
    std::cout << "all certification checks passed (" << checks << " checks)\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"controller synthesis for surveillance specifications"};
  app.require_subcommand(1);

  std::string model_path, dra_path, out_path, report_path, strategy_path;
  std::size_t action_cap = 200'000;
  double tol = 0.0;
  bool no_early_exit = false;
  bool prefer_shortcut = false;
  long rounds = 100;
  long cycles = 0;
  std::uint64_t seed = 0;
  int batch = 1;
  int threads = 1;

  CLI::App* inspect = app.add_subcommand("inspect", "validate a model and list its structure");
  inspect->add_option("--model", model_path, "model file (JSON)")->required();
  inspect->add_option("--dra", dra_path, "automaton file (HOA)");

  CLI::App* synth = app.add_subcommand("synth", "synthesize a controller");
  synth->add_option("--model", model_path, "model file (JSON)")->required();
  synth->add_option("--dra", dra_path, "automaton file (HOA)")->required();
  synth->add_option("--out", out_path, "strategy output file")->required();
  synth->add_option("--report", report_path, "also write a synthesis report");
  synth->add_option("--action-cap", action_cap, "abort reduction beyond this many actions");
  synth->add_option("--tol", tol, "average-cost certificate tolerance (0 = default)");
  synth->add_flag("--no-early-exit", no_early_exit, "disable the round early-exit test");
  synth->add_flag("--shortcut", prefer_shortcut, "prefer the finite-memory controller");

  CLI::App* simulate = app.add_subcommand("simulate", "run a synthesized controller");
  simulate->add_option("--model", model_path, "model file (JSON)")->required();
  simulate->add_option("--strategy", strategy_path, "strategy file")->required();
  simulate->add_option("--rounds", rounds, "rounds per run (round-based controller)");
  simulate->add_option("--cycles", cycles, "surveillance cycles per run instead of rounds");
  simulate->add_option("--seed", seed, "master seed");
  simulate->add_option("--batch", batch, "number of independent runs");
  simulate->add_option("--threads", threads, "worker threads for --batch (0 = hardware)");
  simulate->add_option("--report", report_path, "write a simulation report");

  CLI::App* oracle = app.add_subcommand("oracle", "certify solver output on a model");
  oracle->add_option("--model", model_path, "model file (JSON)")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 3;
  }

  try {
    if (app.got_subcommand(inspect)) return cmd_inspect(model_path, dra_path);
    if (app.got_subcommand(synth)) {
      return cmd_synth(model_path, dra_path, out_path, report_path, action_cap,
                       tol, no_early_exit, prefer_shortcut);
    }
    if (app.got_subcommand(simulate)) {
      return cmd_simulate(model_path, strategy_path, rounds, cycles, seed, batch,
                          threads, report_path);
    }
    if (app.got_subcommand(oracle)) return cmd_oracle(model_path);
  } catch (const InputError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return 3;
  } catch (const InfeasibleError& e) {
    std::cerr << "infeasible: " << e.what() << "\n";
    return 2;
  } catch (const CapError& e) {
    std::cerr << "cap exceeded: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
