#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "acpc/graph.hpp"
#include "acpc/model.hpp"
#include "acpc/simulate.hpp"
#include "acpc/solvers.hpp"

namespace acpc {

// Deterministic finite-memory strategy: an action table and a mode-update
// table over (mode, state). next_mode is applied on entering a state;
// start_mode seeds the mode from the run's first state. -1 marks entries
// that are unreachable under the strategy.
struct FiniteMemoryStrategy {
  int mode_count = 0;
  StateId state_count = 0;
  std::vector<ActionId> act;     // mode * state_count + state
  std::vector<int> next_mode;    // mode * state_count + entered state
  std::vector<int> start_mode;   // per start state

  ActionId action_at(int mode, StateId s) const {
    return act[static_cast<std::size_t>(mode) * state_count + s];
  }
  int transition(int mode, StateId s) const {
    return next_mode[static_cast<std::size_t>(mode) * state_count + s];
  }
};

// Everything synthesized for one selected accepting component: its local
// model, the reduction, the optimal average solution, the acceptance-phase
// policy (reach a G-labeled state, then any retained action) and the
// average-phase finite-memory strategy over (last surveillance state, state).
struct Bundle {
  int entry_index = -1;  // into SynthesisResult::entries
  int pair_index = 0;
  double value = 0.0;    // optimal long-run average cost per cycle
  ComponentModel component;
  ReducedMdp reduced;
  AcpsSolution average;
  std::vector<ActionId> acceptance_policy;  // per local state
  std::vector<double> acceptance_cost;      // expected cost to reach G
  FiniteMemoryStrategy cycle_strategy;      // modes: reduced states, then init
};

// Where to steer the prefix: the reach policy is the optimal strategy of the
// absorption problem whose targets are the finite-valued accepting
// components, each entered through a synthetic jump priced at its value.
struct SelectionResult {
  PartialStrategy reach_policy;      // product states; undefined on jump states
  std::vector<int> jump_entry;       // product state -> entry index or -1
  std::vector<int> selected;         // entry indices chosen anywhere, ascending
  double optimal_value = 0.0;        // weighted value at the product initial
  std::vector<double> reach_value;   // per product state; +inf outside W
  std::vector<bool> in_restriction;  // W: can reach the targets almost surely
  double absorption_error = 0.0;     // |1 - absorbed probability mass|
  double value_error = 0.0;          // |optimal_value - sum p_N * V_N|
};

SelectionResult select_target_maecs(const ProductMdp& p,
                                    const std::vector<MaecEntry>& entries);

// Acceptance-phase policy of one component: cheapest expected route to a
// G-labeled state; at G-labeled states the first retained action applies.
// cost_to_g, when given, receives the expected cost per local state.
std::vector<ActionId> build_acceptance_strategy(const ComponentModel& component,
                                                const std::vector<bool>& g_state,
                                                std::vector<double>* cost_to_g = nullptr);

// Average-phase finite-memory strategy of one component. Modes are the
// reduced states (the last completed surveillance cycle) plus a start mode;
// each mode plays its reduced action's partial strategy, states it leaves
// undefined route toward the strategy's domain at zero average impact.
FiniteMemoryStrategy build_acpc_strategy(const ComponentModel& component,
                                         const ReducedMdp& reduced,
                                         const AcpsSolution& average);

struct RoundSchedule {
  double g_max = 0.0;         // max action cost of the product
  long l_floor = 1;           // minimum cycle cap per round
  bool early_exit = true;     // stop a round once its average is good enough
  long phase1_timeout = 1'000'000;  // acceptance-phase step cap per round
};

// Round-structured controller over the product: reach phase until a jump
// state activates its bundle, then rounds alternating the acceptance phase
// (until a G-labeled product state) and the average phase (until the round's
// cycle cap or the early-exit test).
class CompositeController : public ControllerRuntime {
 public:
  CompositeController(const ProductMdp* product, const SelectionResult* selection,
                      const std::vector<Bundle>* bundles, RoundSchedule schedule);

  void reset(StateId start) override;
  ActionId next_action(StateId current) override;
  void observe(StateId next) override;
  bool supports_rounds() const override { return true; }
  long completed_rounds() const override {
    return static_cast<long>(reports_.size());
  }
  const std::vector<RoundReport>& round_reports() const override { return reports_; }

  bool activated() const { return active_ >= 0; }
  int active_bundle() const { return active_; }
  double reach_cost() const { return reach_cost_; }
  long bad_visits() const { return bad_visits_; }  // B-states after activation

 private:
  enum class Phase { Reach, Acceptance, Average };

  void start_round(StateId s);
  void arrive(StateId s);
  long cycle_cap_for(long round) const;

  const ProductMdp* product_;
  const SelectionResult* selection_;
  const std::vector<Bundle>* bundles_;
  RoundSchedule schedule_;
  std::vector<int> bundle_of_entry_;

  Phase phase_ = Phase::Reach;
  StateId current_ = -1;
  ActionId last_action_ = -1;
  int active_ = -1;
  int mode_ = -1;
  long round_ = 0;
  long acceptance_steps_ = 0;
  double acceptance_cost_ = 0.0;
  long cycles_ = 0;
  double cycle_cost_ = 0.0;
  long cycle_cap_ = 0;
  double reach_cost_ = 0.0;
  long bad_visits_ = 0;
  std::vector<RoundReport> reports_;
};

CompositeController compose_controller(const struct SynthesisResult& result);

// Executes a finite-memory strategy.
class FiniteMemoryRunner : public ControllerRuntime {
 public:
  explicit FiniteMemoryRunner(const FiniteMemoryStrategy* fm) : fm_(fm) {}

  void reset(StateId start) override;
  ActionId next_action(StateId current) override;
  void observe(StateId next) override;

 private:
  const FiniteMemoryStrategy* fm_;
  StateId current_ = -1;
  int mode_ = -1;
};

// Wraps a product-level controller so it can drive the base model: tracks
// the automaton state, translates base states to product states, and checks
// observed transitions against the base model.
class ProjectedController : public ControllerRuntime {
 public:
  ProjectedController(const ProductMdp* product, ControllerRuntime* inner)
      : product_(product), inner_(inner) {}

  void reset(StateId start) override;
  ActionId next_action(StateId current) override;
  void observe(StateId next) override;
  bool supports_rounds() const override { return inner_->supports_rounds(); }
  long completed_rounds() const override { return inner_->completed_rounds(); }
  const std::vector<RoundReport>& round_reports() const override {
    return inner_->round_reports();
  }

 private:
  const ProductMdp* product_;
  ControllerRuntime* inner_;
  StateId base_ = -1;
  DraStateId dra_ = 0;
  StateId product_state_ = -1;
  ActionId last_action_ = -1;
};

// When every selected bundle's average-phase strategy is recurrently
// accepting (each recurrent class of its mode-state chain meets G), the
// composite collapses to "reach, then average phase forever" with finitely
// many modes over product states.
std::optional<FiniteMemoryStrategy> finite_memory_shortcut(
    const ProductMdp& p, const SelectionResult& selection,
    const std::vector<Bundle>& bundles);

struct SynthesisOptions {
  std::size_t action_cap = 200'000;
  bool early_exit = true;
  long l_floor = 1;
  long phase1_timeout = 1'000'000;
  bool want_shortcut = true;
  // Override for the average-cost certificate tolerance; 0 keeps the solver
  // default.
  double certificate_tol = 0.0;
};

struct SynthesisResult {
  ProductMdp product;
  std::vector<MaecEntry> entries;  // accepting components; values filled in
  SelectionResult selection;
  std::vector<Bundle> bundles;     // one per selected entry, ascending
  RoundSchedule schedule;
  std::optional<FiniteMemoryStrategy> shortcut;
  double g_max = 0.0;
};

// End-to-end synthesis: product, accepting components, per-component
// reductions and averages, target selection, per-bundle strategies, round
// schedule and (when admissible) the finite-memory shortcut.
SynthesisResult synthesize(const Mdp& m, const Dra& a, const std::string& pi_sur,
                           const SynthesisOptions& opts = {});

}  // namespace acpc
