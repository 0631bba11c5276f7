#pragma once

// Seeded random-instance generators shared by the unit and acceptance
// suites. Everything is driven by SplitMix64 so failures replay exactly.

#include <algorithm>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "acpc/graph.hpp"
#include "acpc/model.hpp"
#include "acpc/simulate.hpp"
#include "acpc/solvers.hpp"

namespace gen {

using acpc::ActionId;
using acpc::ComponentModel;
using acpc::Dra;
using acpc::DraBuilder;
using acpc::DraStateId;
using acpc::EndComponent;
using acpc::JumpGroup;
using acpc::LabelMask;
using acpc::Mdp;
using acpc::MdpBuilder;
using acpc::SplitMix64;
using acpc::SspInstance;
using acpc::StateId;

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : sm_(seed) {}

  std::uint64_t raw() { return sm_.next(); }

  // Uniform integer in [lo, hi], inclusive.
  long range(long lo, long hi) {
    return lo + static_cast<long>(sm_.next() %
                                  static_cast<std::uint64_t>(hi - lo + 1));
  }

  double uniform() { return sm_.uniform01(); }
  bool chance(double p) { return uniform() < p; }

 private:
  SplitMix64 sm_;
};

// Distinct successor set of size k out of 0..n-1, always containing `must`
// when must >= 0, ascending.
inline std::vector<StateId> pick_successors(Rng& rng, StateId n, int k,
                                            StateId must) {
  std::vector<StateId> out;
  if (must >= 0) out.push_back(must);
  while (static_cast<int>(out.size()) < k && static_cast<int>(out.size()) < n) {
    const StateId c = static_cast<StateId>(rng.range(0, n - 1));
    bool seen = false;
    for (const StateId s : out) seen = seen || s == c;
    if (!seen) out.push_back(c);
  }
  std::sort(out.begin(), out.end());
  return out;
}

// Probability row from integer weights 1..8: the sum of w_i / W is within a
// few ulps of one, inside the builder's validation tolerance.
inline void add_weighted_row(MdpBuilder& b, StateId s, ActionId a,
                             const std::vector<StateId>& succ, Rng& rng) {
  std::vector<long> w(succ.size());
  long total = 0;
  for (auto& x : w) {
    x = rng.range(1, 8);
    total += x;
  }
  for (std::size_t i = 0; i < succ.size(); ++i) {
    b.add_transition(s, a, succ[i],
                     static_cast<double>(w[i]) / static_cast<double>(total));
  }
}

// General random model for decomposition tests: n states, a global pool of
// `actions` actions, each state enabling a random non-empty subset, random
// supports, one proposition with random labels. No reachability guarantees.
inline Mdp random_mdp(Rng& rng, StateId max_states, int actions) {
  const StateId n = static_cast<StateId>(rng.range(2, max_states));
  MdpBuilder b;
  const int p = b.add_prop("p");
  for (StateId s = 0; s < n; ++s) {
    b.add_state("s" + std::to_string(s), rng.chance(0.4) ? (1u << p) : 0u);
  }
  for (int a = 0; a < actions; ++a) b.add_action("a" + std::to_string(a));
  for (StateId s = 0; s < n; ++s) {
    const int count = static_cast<int>(rng.range(1, actions));
    for (int a = 0; a < count; ++a) {
      const int k = static_cast<int>(rng.range(1, 3));
      add_weighted_row(b, s, a, pick_successors(rng, n, k, -1), rng);
      b.set_cost(s, a, rng.chance(0.25) ? 0.0 : rng.uniform() * 5.0);
    }
  }
  b.set_initial(0);
  return b.build();
}

// One random communicating component with surveillance states, cut out of
// its own model: every state enables action 0 whose support contains the
// ring successor (s+1 mod n), so the full state set is one maximal end
// component. With ring_all_actions, every action keeps the ring link and
// every stationary policy is unichain.
inline ComponentModel random_maec(Rng& rng, StateId max_states, int actions,
                                  bool ring_all_actions) {
  const StateId n = static_cast<StateId>(rng.range(2, max_states));
  MdpBuilder b;
  const int p = b.add_prop("sur");

  // Random non-empty surveillance subset.
  std::vector<bool> sur(n, false);
  for (StateId s = 0; s < n; ++s) sur[s] = rng.chance(0.4);
  sur[static_cast<StateId>(rng.range(0, n - 1))] = true;

  for (StateId s = 0; s < n; ++s) {
    b.add_state("s" + std::to_string(s), sur[s] ? (1u << p) : 0u);
  }
  for (int a = 0; a < actions; ++a) b.add_action("a" + std::to_string(a));
  for (StateId s = 0; s < n; ++s) {
    const StateId ring = (s + 1) % n;
    add_weighted_row(b, s, 0,
                     pick_successors(rng, n, static_cast<int>(rng.range(1, 3)), ring),
                     rng);
    b.set_cost(s, 0, rng.chance(0.2) ? 0.0 : rng.uniform() * 4.0);
    for (int a = 1; a < actions; ++a) {
      if (!rng.chance(0.6)) continue;
      const StateId must = ring_all_actions ? ring : -1;
      add_weighted_row(b, s, a,
                       pick_successors(rng, n, static_cast<int>(rng.range(1, 3)), must),
                       rng);
      b.set_cost(s, a, rng.chance(0.2) ? 0.0 : rng.uniform() * 4.0);
    }
  }
  b.set_initial(0);
  const Mdp m = b.build();

  const std::vector<EndComponent> mecs = acpc::mec_decompose(m);
  if (mecs.size() != 1 ||
      static_cast<StateId>(mecs[0].states.size()) != m.state_count()) {
    throw std::logic_error("maec generator lost strong connectivity");
  }
  std::vector<bool> flags(sur.begin(), sur.end());
  return acpc::extract_component(m, mecs[0], flags);
}

// Random reduced MDP with full-support rows (every policy is irreducible)
// plus the plain-MDP mirror of the same instance for the brute-force oracle.
struct ReducedPair {
  acpc::ReducedMdp reduced;
  Mdp mirror;
};

inline ReducedPair random_reduced(Rng& rng, StateId max_states) {
  const StateId n = static_cast<StateId>(rng.range(1, max_states));
  ReducedPair out;
  MdpBuilder b;
  b.add_prop("sur");
  for (StateId s = 0; s < n; ++s) b.add_state("v" + std::to_string(s), 1u);
  const int actions = 3;
  for (int a = 0; a < actions; ++a) b.add_action("z" + std::to_string(a));

  out.reduced.states.resize(n);
  out.reduced.actions.resize(n);
  std::vector<StateId> all(n);
  for (StateId s = 0; s < n; ++s) all[s] = s;

  for (StateId s = 0; s < n; ++s) {
    out.reduced.states[s] = s;
    const int count = static_cast<int>(rng.range(1, actions));
    for (int a = 0; a < count; ++a) {
      std::vector<long> w(n);
      long total = 0;
      for (auto& x : w) {
        x = rng.range(1, 8);
        total += x;
      }
      acpc::ReducedAction act;
      act.cost = rng.chance(0.15) ? 0.0 : rng.uniform() * 6.0;
      act.row.resize(n);
      for (StateId t = 0; t < n; ++t) {
        act.row[t] = static_cast<double>(w[t]) / static_cast<double>(total);
        b.add_transition(s, a, t, act.row[t]);
      }
      b.set_cost(s, a, act.cost);
      out.reduced.actions[s].push_back(std::move(act));
    }
  }
  b.set_initial(0);
  out.mirror = b.build();
  return out;
}

// Random SSP instance: small base model, one or two jump groups. Properness
// is not guaranteed; callers filter on ssp_solve's feasibility error.
inline SspInstance random_ssp(Rng& rng, StateId max_states) {
  const StateId n = static_cast<StateId>(rng.range(2, max_states));
  MdpBuilder b;
  b.add_prop("p");
  for (StateId s = 0; s < n; ++s) b.add_state("s" + std::to_string(s), 0u);
  const int actions = 3;
  for (int a = 0; a < actions; ++a) b.add_action("a" + std::to_string(a));
  for (StateId s = 0; s < n; ++s) {
    const int count = static_cast<int>(rng.range(1, actions));
    for (int a = 0; a < count; ++a) {
      const int k = static_cast<int>(rng.range(1, 3));
      add_weighted_row(b, s, a, pick_successors(rng, n, k, -1), rng);
      b.set_cost(s, a, rng.chance(0.3) ? 0.0 : 0.1 + rng.uniform() * 5.0);
    }
  }
  b.set_initial(0);
  const Mdp base = b.build();

  std::vector<JumpGroup> groups;
  const int group_count = static_cast<int>(rng.range(1, 2));
  for (int g = 0; g < group_count; ++g) {
    JumpGroup jg;
    jg.name = "goal" + std::to_string(g);
    jg.cost = rng.chance(0.3) ? 0.0 : rng.uniform() * 8.0;
    for (StateId s = 0; s < n; ++s) {
      if (rng.chance(0.5)) jg.sources.push_back(s);
    }
    if (jg.sources.empty()) jg.sources.push_back(static_cast<StateId>(rng.range(0, n - 1)));
    groups.push_back(std::move(jg));
  }
  return acpc::make_ssp(base, groups);
}

// Feasible synthesis instance for end-to-end simulation checks: state 0 is a
// transient entry, states 1..n-1 form a communicating ring region where
// every stationary policy is unichain, one or two ring states carry the
// surveillance label, and all costs are at least 0.5. The automaton (built
// separately) demands infinitely many surveillance visits.
struct SimInstance {
  Mdp model;
  std::string surveillance = "sur";
};

inline SimInstance random_sim_instance(Rng& rng, StateId max_states) {
  const StateId n = static_cast<StateId>(rng.range(4, max_states));
  MdpBuilder b;
  const int p = b.add_prop("sur");

  std::vector<bool> sur(n, false);
  sur[static_cast<StateId>(rng.range(1, n - 1))] = true;
  sur[static_cast<StateId>(rng.range(1, n - 1))] = true;

  for (StateId s = 0; s < n; ++s) {
    b.add_state("s" + std::to_string(s), sur[s] ? (1u << p) : 0u);
  }
  const int actions = 2;
  b.add_action("a0");
  b.add_action("a1");

  // Entry state: one or two actions into the ring region.
  for (int a = 0; a < static_cast<int>(rng.range(1, actions)); ++a) {
    std::vector<StateId> succ;
    const int k = static_cast<int>(rng.range(1, 2));
    while (static_cast<int>(succ.size()) < k) {
      const StateId c = static_cast<StateId>(rng.range(1, n - 1));
      bool seen = false;
      for (const StateId s : succ) seen = seen || s == c;
      if (!seen) succ.push_back(c);
    }
    std::sort(succ.begin(), succ.end());
    add_weighted_row(b, 0, a, succ, rng);
    b.set_cost(0, a, 0.5 + rng.uniform() * 3.5);
  }

  // Ring region over 1..n-1: action supports stay inside the region and
  // always contain the ring successor, so every policy is unichain there.
  const StateId m = n - 1;  // region size
  for (StateId i = 0; i < m; ++i) {
    const StateId s = 1 + i;
    const StateId ring = 1 + (i + 1) % m;
    for (int a = 0; a < actions; ++a) {
      if (a > 0 && !rng.chance(0.7)) continue;
      std::vector<StateId> succ{ring};
      const int extra = static_cast<int>(rng.range(0, 2));
      for (int e = 0; e < extra; ++e) {
        const StateId c = 1 + static_cast<StateId>(rng.range(0, m - 1));
        bool seen = false;
        for (const StateId x : succ) seen = seen || x == c;
        if (!seen) succ.push_back(c);
      }
      std::sort(succ.begin(), succ.end());
      add_weighted_row(b, s, a, succ, rng);
      b.set_cost(s, a, 0.5 + rng.uniform() * 3.5);
    }
  }
  b.set_initial(0);
  SimInstance out;
  out.model = b.build();
  return out;
}

// Two-state automaton over {sur} accepting exactly the runs that visit
// surveillance states infinitely often (fin empty, inf = {q1}; the automaton
// moves on the label of the source state).
inline Dra gf_sur_dra() {
  DraBuilder d;
  d.add_prop("sur");
  const DraStateId q0 = d.add_state();
  const DraStateId q1 = d.add_state();
  d.set_initial(q0);
  d.set_default(q0, q0);
  d.set_edge(q0, 1u, q1);
  d.set_default(q1, q0);
  d.set_edge(q1, 1u, q1);
  d.add_pair({}, {q1});
  return d.build();
}

// Random deterministic automaton over the given proposition names: dense
// random transition table, one or two Rabin pairs with random membership.
inline Dra random_dra(Rng& rng, const std::vector<std::string>& props,
                      DraStateId max_states) {
  const DraStateId q_count = static_cast<DraStateId>(rng.range(1, max_states));
  DraBuilder d;
  for (const std::string& p : props) d.add_prop(p);
  for (DraStateId q = 0; q < q_count; ++q) d.add_state();
  d.set_initial(0);
  const LabelMask masks = static_cast<LabelMask>(1u << props.size());
  for (DraStateId q = 0; q < q_count; ++q) {
    d.set_default(q, static_cast<DraStateId>(rng.range(0, q_count - 1)));
    for (LabelMask mask = 1; mask < masks; ++mask) {
      d.set_edge(q, mask, static_cast<DraStateId>(rng.range(0, q_count - 1)));
    }
  }
  const int pairs = static_cast<int>(rng.range(1, 2));
  for (int k = 0; k < pairs; ++k) {
    std::vector<DraStateId> fin, inf;
    for (DraStateId q = 0; q < q_count; ++q) {
      if (rng.chance(0.25)) fin.push_back(q);
      if (rng.chance(0.5)) inf.push_back(q);
    }
    if (inf.empty()) inf.push_back(static_cast<DraStateId>(rng.range(0, q_count - 1)));
    d.add_pair(fin, inf);
  }
  return d.build();
}

}  // namespace gen
