#include "acpc/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <string>
#include <thread>

#include "acpc/types.hpp"

namespace acpc {

const std::vector<RoundReport>& ControllerRuntime::round_reports() const {
  static const std::vector<RoundReport> empty;
  return empty;
}

namespace {

// Inverse-CDF sample over a transition row (successors ascending). The row
// sums to one up to normalization tolerance; the final entry absorbs any
// rounding slack.
StateId sample_row(const std::vector<Transition>& row, SplitMix64& rng) {
  double u = rng.uniform01();
  double cum = 0.0;
  for (const Transition& t : row) {
    cum += t.prob;
    if (u < cum) return t.to;
  }
  return row.back().to;
}

enum class StopKind { Rounds, Cycles };

SimulationReport run_core(const SimModel& model, ControllerRuntime& controller,
                          StopKind stop, long target, const SimOptions& opts) {
  if (model.mdp == nullptr || model.surveillance == nullptr)
    throw InputError("simulation model is incomplete");
  const Mdp& m = *model.mdp;
  const std::vector<bool>& sur = *model.surveillance;
  if (static_cast<StateId>(sur.size()) != m.state_count())
    throw InputError("surveillance flag vector does not match the model");
  if (target < 0) throw InputError("simulation target must be non-negative");

  if (!m.initial().has_value()) throw InputError("model has no initial state");
  SplitMix64 rng = SplitMix64::run_stream(opts.seed, opts.run_index);

  SimulationReport out;
  out.seed = opts.seed;
  out.run_index = opts.run_index;
  StateId s = *m.initial();
  if (opts.keep_trace) {
    out.trace.emplace();
    out.trace->states.push_back(s);
  }
  controller.reset(s);

  auto done = [&]() {
    if (stop == StopKind::Rounds) return controller.completed_rounds() >= target;
    return out.cycles >= target;
  };

  while (!done()) {
    if (out.steps >= opts.max_steps)
      throw CapError("simulation exceeded the step cap of " + std::to_string(opts.max_steps));
    ActionId a = controller.next_action(s);
    if (a < 0 || a >= m.action_count() || !m.is_enabled(s, a))
      throw NumericError("controller chose action " + std::to_string(a) +
                         ", which is not enabled at state " + m.state_name(s));
    StateId next = sample_row(m.row(s, a), rng);
    double g = m.cost(s, a);
    out.total_cost += g;
    ++out.steps;
    if (sur[next]) ++out.cycles;
    if (out.trace) {
      out.trace->states.push_back(next);
      out.trace->actions.push_back(a);
      out.trace->costs.push_back(g);
      if (sur[next]) out.trace->cycle_steps.push_back(out.steps);
    }
    controller.observe(next);
    s = next;
  }

  if (controller.supports_rounds()) {
    out.rounds = controller.completed_rounds();
    out.round_reports = controller.round_reports();
  }
  out.average_per_cycle = out.cycles > 0
                              ? out.total_cost / static_cast<double>(out.cycles)
                              : std::numeric_limits<double>::infinity();
  out.average_cycles_plus_one = out.total_cost / static_cast<double>(out.cycles + 1);
  return out;
}

}  // namespace

SimulationReport run_rounds(const SimModel& model, ControllerRuntime& controller,
                            long rounds, const SimOptions& opts) {
  if (!controller.supports_rounds())
    throw InputError("controller does not report rounds; use run_cycles");
  return run_core(model, controller, StopKind::Rounds, rounds, opts);
}

SimulationReport run_cycles(const SimModel& model, ControllerRuntime& controller,
                            long cycles, const SimOptions& opts) {
  return run_core(model, controller, StopKind::Cycles, cycles, opts);
}

std::vector<SimulationReport> run_batch(
    const SimModel& model,
    const std::function<std::unique_ptr<ControllerRuntime>()>& make_controller,
    long rounds, std::uint64_t seed, int count, int threads) {
  if (count < 0) throw InputError("batch run count must be non-negative");
  std::vector<std::unique_ptr<ControllerRuntime>> controllers;
  controllers.reserve(static_cast<std::size_t>(count));
  for (int k = 0; k < count; ++k) {
    controllers.push_back(make_controller());
    if (!controllers.back()) throw InputError("controller factory returned null");
  }

  std::vector<SimulationReport> reports(static_cast<std::size_t>(count));
  auto run_range = [&](int lo, int hi, std::exception_ptr& error) noexcept {
    try {
      for (int k = lo; k < hi; ++k) {
        SimOptions opts;
        opts.seed = seed;
        opts.run_index = static_cast<std::uint64_t>(k);
        reports[static_cast<std::size_t>(k)] =
            run_rounds(model, *controllers[static_cast<std::size_t>(k)], rounds, opts);
      }
    } catch (...) {
      error = std::current_exception();
    }
  };

  int workers = std::max(1, std::min(threads, count == 0 ? 1 : count));
  if (workers == 1) {
    std::exception_ptr error;
    run_range(0, count, error);
    if (error) std::rethrow_exception(error);
    return reports;
  }

  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(workers));
  int chunk = (count + workers - 1) / workers;
  for (int w = 0; w < workers; ++w) {
    int lo = w * chunk;
    int hi = std::min(count, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back(run_range, lo, hi, std::ref(errors[static_cast<std::size_t>(w)]));
  }
  for (std::thread& t : pool) t.join();
  for (const std::exception_ptr& e : errors)
    if (e) std::rethrow_exception(e);
  return reports;
}

SummaryStats summarize(const std::vector<SimulationReport>& reports) {
  SummaryStats s;
  s.runs = static_cast<int>(reports.size());
  if (reports.empty()) return s;

  double inf = std::numeric_limits<double>::infinity();
  s.min_average_cycles_plus_one = inf;
  s.max_average_cycles_plus_one = -inf;
  long runs_with_cycles = 0;
  std::vector<long> cycles_per_round;
  for (const SimulationReport& r : reports) {
    s.mean_steps += static_cast<double>(r.steps);
    s.mean_cost += r.total_cost;
    s.mean_cycles += static_cast<double>(r.cycles);
    if (r.cycles > 0) {
      s.mean_average_per_cycle += r.average_per_cycle;
      ++runs_with_cycles;
    }
    s.mean_average_cycles_plus_one += r.average_cycles_plus_one;
    s.min_average_cycles_plus_one = std::min(s.min_average_cycles_plus_one, r.average_cycles_plus_one);
    s.max_average_cycles_plus_one = std::max(s.max_average_cycles_plus_one, r.average_cycles_plus_one);
    for (const RoundReport& round : r.round_reports) cycles_per_round.push_back(round.cycles);
  }
  double n = static_cast<double>(reports.size());
  s.mean_steps /= n;
  s.mean_cost /= n;
  s.mean_cycles /= n;
  s.mean_average_per_cycle =
      runs_with_cycles > 0 ? s.mean_average_per_cycle / static_cast<double>(runs_with_cycles) : 0.0;
  s.mean_average_cycles_plus_one /= n;

  s.total_rounds = static_cast<long>(cycles_per_round.size());
  if (!cycles_per_round.empty()) {
    double total = 0.0;
    for (long c : cycles_per_round) total += static_cast<double>(c);
    s.mean_cycles_per_round = total / static_cast<double>(cycles_per_round.size());
    std::size_t mid = (cycles_per_round.size() - 1) / 2;
    std::nth_element(cycles_per_round.begin(), cycles_per_round.begin() + static_cast<std::ptrdiff_t>(mid),
                     cycles_per_round.end());
    s.median_cycles_per_round = cycles_per_round[mid];
  }
  return s;
}

}  // namespace acpc
