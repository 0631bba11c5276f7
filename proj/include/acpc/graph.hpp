#pragma once

#include <functional>
#include <vector>

#include "acpc/model.hpp"

namespace acpc {

// An end component: a state set together with, per state, a non-empty action
// subset closed under support and strongly connected through those actions.
// states is ascending; actions[i] lists the retained actions of states[i],
// ascending.
struct EndComponent {
  std::vector<StateId> states;
  std::vector<std::vector<ActionId>> actions;
};

// Maximal end components of m, ordered by smallest contained state id.
// Trivial single states without a self-sustaining action are never returned.
std::vector<EndComponent> mec_decompose(const Mdp& m);

// MEC decomposition of the sub-MDP induced by alive states and, optionally,
// an action predicate. Actions whose support leaves the alive set never
// participate.
std::vector<EndComponent> mec_decompose_filtered(
    const Mdp& m, const std::vector<bool>& alive,
    const std::function<bool(StateId, ActionId)>& keep = {});

// An accepting maximal end component of a product, tagged with the Rabin
// pair it satisfies. Entries for different pairs may share states. value is
// filled by the synthesis layer once the component's optimal ACPC is known.
struct MaecEntry {
  EndComponent component;
  int pair_index = 0;
  double value = 0.0;
  bool value_known = false;
};

// Per Rabin pair (B = fin, G = inf): remove B-labeled product states,
// MEC-decompose the rest, keep components containing a G-labeled state.
// Ordered by pair index, then smallest contained state id.
std::vector<MaecEntry> compute_maecs(const ProductMdp& p);

// Maximal state set W containing target from which some strategy reaches
// target with probability 1, with the per-state subsets of actions whose
// support stays inside W. Action subsets are non-empty for every W-state
// outside target; target states keep whatever stays inside W (possibly
// nothing).
struct ReachResult {
  std::vector<StateId> states;                // W, ascending
  std::vector<std::vector<ActionId>> actions; // parallel to states
  std::vector<bool> member;                   // size state_count
};

ReachResult almost_sure_reach(const Mdp& m, const std::vector<bool>& target);

// Strongly connected components of the directed graph over 0..n-1 given by
// an adjacency list, iterative Tarjan. Returns per-node component ids;
// components are numbered in reverse topological order.
int strongly_connected_components(const std::vector<std::vector<int>>& adj,
                                  std::vector<int>& comp);

// A component cut out of its source MDP as a standalone model with local
// state ids (component order) and only the component's retained actions.
// Labels, costs and action ids carry over; flags restrict to the component.
struct ComponentModel {
  Mdp model;
  std::vector<StateId> original;   // local -> source state id
  std::vector<int> local_of;       // source -> local id or -1
  std::vector<bool> surveillance;  // per local state
};

ComponentModel extract_component(const Mdp& source, const EndComponent& ec,
                                 const std::vector<bool>& surveillance_flags);

}  // namespace acpc
