#pragma once

#include <cstddef>
#include <vector>

#include "acpc/graph.hpp"
#include "acpc/model.hpp"

namespace acpc {

// ---------------------------------------------------------------------------
// Stochastic shortest path
// ---------------------------------------------------------------------------

// An SSP instance is an MDP extended with a dedicated zero-cost absorbing
// terminal. Synthetic actions (ids >= first_synthetic) are the terminal's
// self-loop plus one jump action per goal group; real actions keep the ids of
// the base model.
struct SspInstance {
  Mdp model;
  StateId terminal = -1;
  ActionId first_synthetic = 0;
};

// One family of terminal jumps: a shared synthetic action enabled at every
// source, moving to the terminal with probability 1 at the given cost.
struct JumpGroup {
  std::vector<StateId> sources;  // ascending, unique
  double cost = 0.0;
  std::string name;
};

// Extends base with the terminal state and one synthetic action per group.
// Group k becomes action id base.action_count() + k; the terminal self-loop
// is the last action.
SspInstance make_ssp(const Mdp& base, const std::vector<JumpGroup>& groups);

// Quotient of an SSP instance under its zero-cost end components. Every
// maximal end component of the zero-cost sub-MDP (terminal excluded)
// collapses to one state; internal zero-cost actions disappear, all other
// actions are re-issued with fresh ids recorded in action_origin.
struct CollapseResult {
  SspInstance quotient;            // synthetic-ness lives in action_origin
  std::vector<StateId> state_map;  // original -> quotient state
  std::vector<std::pair<StateId, ActionId>> action_origin;  // quotient action -> original (owner, action)
  std::vector<EndComponent> components;  // collapsed zero-cost ECs, original ids
  std::vector<int> component_of;         // original state -> component or -1
};

CollapseResult collapse_zero_cost_ecs(const SspInstance& inst);

// Optimal expected cost to the terminal plus a stationary optimal policy.
// Values are certified: the returned policy is evaluated exactly by a linear
// solve and must satisfy the Bellman equation within certificate_tol.
// Requires the terminal to be reachable almost surely from every state.
struct SspSolution {
  std::vector<double> value;     // per original state; value[terminal] = 0
  std::vector<ActionId> policy;  // per original state
  ActionId first_synthetic = 0;  // copied from the instance

  bool is_synthetic(StateId s) const { return policy[s] >= first_synthetic; }
};

struct SspOptions {
  double vi_tol = 1e-12;          // value-iteration residual
  double certificate_tol = 1e-9;  // Bellman residual of the exact evaluation
  long max_iterations = 2'000'000;
};

SspSolution ssp_solve(const SspInstance& inst, const SspOptions& opts = {});

// ---------------------------------------------------------------------------
// MAEC reduction
// ---------------------------------------------------------------------------

// One action of the reduced MDP: a partial strategy over the component's
// local states together with the first-hit distribution over surveillance
// states and the expected cost accumulated until that first hit.
struct ReducedAction {
  PartialStrategy strategy;  // over local state ids of the component
  std::vector<double> row;   // dense over reduced states, sums to 1
  double cost = 0.0;
};

// Reduced MDP over the surveillance states of one component. states holds the
// local ids of the surveillance states in ascending order; actions[i] is the
// canonical (strategy-sorted, deduplicated) action list of states[i].
struct ReducedMdp {
  std::vector<StateId> states;
  std::vector<std::vector<ReducedAction>> actions;

  std::size_t action_total() const {
    std::size_t n = 0;
    for (const auto& acts : actions) n += acts.size();
    return n;
  }
};

struct ReduceOptions {
  std::size_t action_cap = 200'000;  // abort with CapError beyond this
  // Elimination order over non-surveillance local states; empty means
  // ascending local id. Must list exactly the non-surveillance states.
  std::vector<StateId> elimination_order;
};

// Successive elimination of non-surveillance states. Eliminating v combines
// every incoming action with every continuation of v that leaves v with
// positive probability; actions returning to v with probability 1 die with
// it. Rows stay first-hit distributions at every step.
ReducedMdp reduce_maec(const ComponentModel& component, const ReduceOptions& opts = {});

// ---------------------------------------------------------------------------
// Average cost per stage on the reduced MDP
// ---------------------------------------------------------------------------

// Optimal long-run average cost of a communicating reduced MDP, solved by
// relative value iteration on the aperiodicity transform, plus the greedy
// stationary policy (indices into ReducedMdp::actions) certified by an exact
// gain/bias evaluation.
struct AcpsSolution {
  double gain = 0.0;
  std::vector<double> bias;  // relative values, bias[0] = 0
  std::vector<int> policy;   // per reduced state: index into actions[i]
};

struct AcpsOptions {
  double span_tol = 1e-10;        // stopping span of the RVI increments
  double certificate_tol = 1e-8;  // per-state gain spread of the exact check
  double kappa = 0.5;             // aperiodicity mixing weight
  long max_iterations = 2'000'000;
};

AcpsSolution acps_solve(const ReducedMdp& reduced, const AcpsOptions& opts = {});

}  // namespace acpc
