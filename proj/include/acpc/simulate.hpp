#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include "acpc/model.hpp"

namespace acpc {

// Deterministic 64-bit generator (splitmix64). All randomness in the
// simulator flows through this; identical seeds replay identical runs.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  // 53-bit mantissa uniform in [0, 1).
  double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  // Independent stream for one run of a batch: the (run+1)-th output of a
  // master generator seeded with the user seed becomes the stream's state.
  static SplitMix64 run_stream(std::uint64_t seed, std::uint64_t run) {
    SplitMix64 master(seed);
    std::uint64_t state = master.next();
    for (std::uint64_t i = 0; i < run; ++i) state = master.next();
    return SplitMix64(state);
  }

 private:
  std::uint64_t state_;
};

// One synthesis round as executed by a composite controller: an acceptance
// phase of k steps followed by an average phase of at most cycle_cap
// surveillance cycles.
struct RoundReport {
  long index = 0;  // 1-based
  long acceptance_steps = 0;
  double acceptance_cost = 0.0;
  long cycles = 0;
  double cycle_cost = 0.0;
  long cycle_cap = 0;
  double round_average = 0.0;  // (acceptance_cost + cycle_cost) / cycles
  bool exited_early = false;   // round ended by the early-exit test
};

// Strategy execution interface driven by the simulator: the controller is
// asked for the action at the current state, then observes the sampled
// successor. reset places it at the run's start state.
class ControllerRuntime {
 public:
  virtual ~ControllerRuntime() = default;
  virtual void reset(StateId start) = 0;
  virtual ActionId next_action(StateId current) = 0;
  virtual void observe(StateId next) = 0;

  // Round bookkeeping; only round-structured controllers support it.
  virtual bool supports_rounds() const { return false; }
  virtual long completed_rounds() const { return 0; }
  virtual const std::vector<RoundReport>& round_reports() const;
};

// The simulated system: a model plus per-state surveillance flags (a cycle
// completes on every transition into a flagged state).
struct SimModel {
  const Mdp* mdp = nullptr;
  const std::vector<bool>* surveillance = nullptr;
};

struct RunTrace {
  std::vector<StateId> states;   // visited states, including the start
  std::vector<ActionId> actions;  // one per step
  std::vector<double> costs;      // one per step
  std::vector<long> cycle_steps;  // 1-based step indices completing a cycle
};

struct SimulationReport {
  std::uint64_t seed = 0;
  std::uint64_t run_index = 0;
  long steps = 0;
  double total_cost = 0.0;
  long cycles = 0;
  long rounds = 0;
  double average_per_cycle = 0.0;        // total_cost / cycles; +inf when 0
  double average_cycles_plus_one = 0.0;  // total_cost / (cycles + 1)
  std::vector<RoundReport> round_reports;
  std::optional<RunTrace> trace;
};

struct SimOptions {
  std::uint64_t seed = 0;
  std::uint64_t run_index = 0;
  bool keep_trace = false;
  long max_steps = 100'000'000;  // hard safety cap, CapError beyond
};

// Runs until the controller has completed `rounds` rounds. The controller
// must support rounds.
SimulationReport run_rounds(const SimModel& model, ControllerRuntime& controller,
                            long rounds, const SimOptions& opts);

// Runs until `cycles` surveillance cycles have completed.
SimulationReport run_cycles(const SimModel& model, ControllerRuntime& controller,
                            long cycles, const SimOptions& opts);

// `count` independent runs with per-run streams derived from the same user
// seed, optionally spread over threads. The factory must produce a fresh
// (or resettable, unshared) controller per call; it is invoked `count`
// times up front on the calling thread.
std::vector<SimulationReport> run_batch(
    const SimModel& model,
    const std::function<std::unique_ptr<ControllerRuntime>()>& make_controller,
    long rounds, std::uint64_t seed, int count, int threads = 1);

struct SummaryStats {
  int runs = 0;
  double mean_steps = 0.0;
  double mean_cost = 0.0;
  double mean_cycles = 0.0;
  double mean_average_per_cycle = 0.0;        // over runs with at least 1 cycle
  double mean_average_cycles_plus_one = 0.0;
  double min_average_cycles_plus_one = 0.0;
  double max_average_cycles_plus_one = 0.0;
  // Cycles per round, pooled over every round of every run; the median uses
  // the lower-median convention (e.g. [2, 14, 500] -> 14). Both are 0 when
  // no run reported rounds.
  long total_rounds = 0;
  double mean_cycles_per_round = 0.0;
  long median_cycles_per_round = 0;
};

SummaryStats summarize(const std::vector<SimulationReport>& reports);

}  // namespace acpc
