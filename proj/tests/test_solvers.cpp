#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "acpc/graph.hpp"
#include "acpc/model.hpp"
#include "acpc/oracles.hpp"
#include "acpc/solvers.hpp"
#include "acpc/types.hpp"

#include "generators.hpp"

using namespace acpc;

namespace {

// Exhaustive minimum expected cost to the terminal over stationary
// deterministic policies that reach it almost surely; +inf per state when no
// enumerated policy is proper from that state.
std::vector<double> enumerate_ssp_values(const SspInstance& inst) {
  const Mdp& m = inst.model;
  const StateId n = m.state_count();
  std::vector<double> best(n, std::numeric_limits<double>::infinity());
  std::vector<std::size_t> choice(n, 0);
  while (true) {
    PartialStrategy zeta;
    for (StateId s = 0; s < n; ++s) zeta.assign(s, m.enabled(s)[choice[s]]);
    std::vector<StateId> starts(n);
    for (StateId s = 0; s < n; ++s) starts[s] = s;
    try {
      const auto hit = absorbing_expectations(m, zeta, {inst.terminal}, starts);
      for (StateId s = 0; s < n; ++s) {
        best[s] = std::min(best[s], hit[s].cost);
      }
    } catch (const NumericError&) {
      // improper policy: skipped
    }
    // Advance the mixed-radix choice vector.
    StateId pos = 0;
    while (pos < n) {
      if (++choice[pos] < m.enabled(pos).size()) break;
      choice[pos] = 0;
      ++pos;
    }
    if (pos == n) break;
  }
  return best;
}

}  // namespace

TEST_CASE("make_ssp appends terminal, jumps, and halt") {
  MdpBuilder b;
  b.add_prop("p");
  b.add_state("s0", 0u);
  b.add_state("s1", 0u);
  b.add_action("a");
  b.add_transition(0, 0, 1, 1.0);
  b.add_transition(1, 0, 0, 1.0);
  b.set_cost(0, 0, 1.0);
  b.set_initial(0);
  const SspInstance inst = make_ssp(b.build(), {{{1}, 2.5, "goal"}});

  CHECK(inst.terminal == 2);
  CHECK(inst.first_synthetic == 1);
  CHECK(inst.model.state_count() == 3);
  CHECK(inst.model.action_count() == 3);  // a, jump, halt
  // The jump is enabled exactly at its source and moves to the terminal.
  CHECK(inst.model.is_enabled(1, 1));
  CHECK_FALSE(inst.model.is_enabled(0, 1));
  CHECK(inst.model.row(1, 1)[0].to == inst.terminal);
  CHECK(inst.model.cost(1, 1) == 2.5);
  // The terminal loops on itself at zero cost.
  const auto& halt = inst.model.enabled(inst.terminal);
  REQUIRE(halt.size() == 1);
  CHECK(inst.model.row(inst.terminal, halt[0])[0].to == inst.terminal);
  CHECK(inst.model.cost(inst.terminal, halt[0]) == 0.0);
}

TEST_CASE("geometric retry has expected cost two") {
  // s0 --try(cost 1)--> {s0: .5, s1: .5}; jump from s1 at zero cost.
  MdpBuilder b;
  b.add_prop("p");
  b.add_state("s0", 0u);
  b.add_state("s1", 0u);
  b.add_action("try");
  b.add_action("stay");
  b.add_transition(0, 0, 0, 0.5);
  b.add_transition(0, 0, 1, 0.5);
  b.add_transition(1, 1, 1, 1.0);
  b.set_cost(0, 0, 1.0);
  b.set_initial(0);
  const SspInstance inst = make_ssp(b.build(), {{{1}, 0.0, "goal"}});
  const SspSolution sol = ssp_solve(inst);
  CHECK(sol.value[0] == doctest::Approx(2.0).epsilon(1e-10));
  CHECK(sol.value[1] == doctest::Approx(0.0));
  CHECK(sol.value[inst.terminal] == 0.0);
  CHECK(sol.policy[0] == 0);
  CHECK(sol.is_synthetic(1));
}

TEST_CASE("ssp solver routes through zero-cost end components") {
  // s0's zero-cost loop dallies forever unless collapsed; the solver must
  // still find the 5-cost exit, not a zero value.
  MdpBuilder b;
  b.add_prop("p");
  b.add_state("s0", 0u);
  b.add_state("s1", 0u);
  b.add_action("loop");
  b.add_action("exit");
  b.add_transition(0, 0, 0, 1.0);  // zero-cost self loop
  b.add_transition(0, 1, 1, 1.0);
  b.set_cost(0, 1, 5.0);
  b.add_transition(1, 0, 1, 1.0);
  b.set_initial(0);
  const SspInstance inst = make_ssp(b.build(), {{{1}, 0.0, "goal"}});

  const CollapseResult col = collapse_zero_cost_ecs(inst);
  CHECK(col.quotient.model.state_count() < inst.model.state_count() + 1);

  const SspSolution sol = ssp_solve(inst);
  CHECK(sol.value[0] == doctest::Approx(5.0).epsilon(1e-10));
  CHECK(sol.policy[0] == 1);
}

TEST_CASE("ssp solver rejects instances with unreachable terminals") {
  MdpBuilder b;
  b.add_prop("p");
  b.add_state("s0", 0u);
  b.add_state("s1", 0u);
  b.add_action("a");
  b.add_transition(0, 0, 0, 1.0);  // s0 can never leave
  b.add_transition(1, 0, 1, 1.0);
  b.set_cost(0, 0, 1.0);
  b.set_initial(0);
  const SspInstance inst = make_ssp(b.build(), {{{1}, 0.0, "goal"}});
  CHECK_THROWS_AS(ssp_solve(inst), InputError);
}

TEST_CASE("ssp solver matches policy enumeration on random instances") {
  gen::Rng rng(0xACDC0002u);
  int solved = 0;
  for (int trial = 0; trial < 150; ++trial) {
    const SspInstance inst = gen::random_ssp(rng, 5);
    SspSolution sol;
    try {
      sol = ssp_solve(inst);
    } catch (const InputError&) {
      continue;  // terminal not almost-surely reachable from somewhere
    }
    ++solved;
    const std::vector<double> best = enumerate_ssp_values(inst);
    for (StateId s = 0; s < inst.model.state_count(); ++s) {
      REQUIRE(std::isfinite(best[s]));
      CHECK(std::abs(sol.value[s] - best[s]) <= 1e-8);
    }
  }
  CHECK(solved >= 50);
}

TEST_CASE("reduction eliminates a non-surveillance state exactly") {
  // v --a(1)--> u; u --b(2)--> {u: .5, v: .5}. First hit from v back to v:
  // cost 1 + E_u where E_u = 2 + .5 E_u, so 5 in total.
  MdpBuilder b;
  const int p = b.add_prop("sur");
  b.add_state("v", 1u << p);
  b.add_state("u", 0u);
  b.add_action("a");
  b.add_action("b");
  b.add_transition(0, 0, 1, 1.0);
  b.set_cost(0, 0, 1.0);
  b.add_transition(1, 1, 0, 0.5);
  b.add_transition(1, 1, 1, 0.5);
  b.set_cost(1, 1, 2.0);
  b.set_initial(0);
  const Mdp m = b.build();
  const auto mecs = mec_decompose(m);
  REQUIRE(mecs.size() == 1);
  const ComponentModel c = extract_component(m, mecs[0], {true, false});

  const ReducedMdp red = reduce_maec(c);
  REQUIRE(red.states == std::vector<StateId>{0});
  REQUIRE(red.actions[0].size() == 1);
  const ReducedAction& act = red.actions[0][0];
  CHECK(act.row.size() == 1);
  CHECK(act.row[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(act.cost == doctest::Approx(5.0).epsilon(1e-12));
  CHECK(act.strategy.action_at(0) == 0);
  CHECK(act.strategy.action_at(1) == 1);
}

TEST_CASE("reduction is independent of the elimination order") {
  gen::Rng rng(0xACDC0003u);
  for (int trial = 0; trial < 60; ++trial) {
    const ComponentModel c = gen::random_maec(rng, 6, 2, false);
    const ReducedMdp fwd = reduce_maec(c);

    ReduceOptions opts;
    for (StateId s = c.model.state_count() - 1; s >= 0; --s) {
      if (!c.surveillance[s]) opts.elimination_order.push_back(s);
    }
    const ReducedMdp bwd = reduce_maec(c, opts);

    REQUIRE(fwd.states == bwd.states);
    for (std::size_t i = 0; i < fwd.states.size(); ++i) {
      REQUIRE(fwd.actions[i].size() == bwd.actions[i].size());
      std::vector<bool> used(bwd.actions[i].size(), false);
      for (const ReducedAction& a : fwd.actions[i]) {
        bool matched = false;
        for (std::size_t j = 0; j < bwd.actions[i].size() && !matched; ++j) {
          if (used[j]) continue;
          const ReducedAction& b2 = bwd.actions[i][j];
          bool same = std::abs(a.cost - b2.cost) <= 1e-9;
          for (std::size_t t = 0; same && t < a.row.size(); ++t) {
            same = std::abs(a.row[t] - b2.row[t]) <= 1e-9;
          }
          if (same) {
            used[j] = true;
            matched = true;
          }
        }
        CHECK(matched);
      }
    }
  }
}

TEST_CASE("reduction enforces the action cap") {
  gen::Rng rng(0xACDC0004u);
  const ComponentModel c = gen::random_maec(rng, 6, 2, false);
  ReduceOptions opts;
  opts.action_cap = 1;
  CHECK_THROWS_AS(reduce_maec(c, opts), CapError);
}

TEST_CASE("average-cost solver handles a deterministic two-cycle") {
  // Reduced states {0, 1}: 0 -> 1 at cost 2 (or a decoy at cost 5), 1 -> 0
  // at cost 4. Optimal gain (2 + 4) / 2 = 3.
  ReducedMdp red;
  red.states = {0, 1};
  red.actions.resize(2);
  ReducedAction x;
  x.row = {0.0, 1.0};
  x.cost = 2.0;
  ReducedAction decoy;
  decoy.row = {0.0, 1.0};
  decoy.cost = 5.0;
  ReducedAction y;
  y.row = {1.0, 0.0};
  y.cost = 4.0;
  red.actions[0] = {x, decoy};
  red.actions[1] = {y};

  const AcpsSolution sol = acps_solve(red);
  CHECK(sol.gain == doctest::Approx(3.0).epsilon(1e-9));
  CHECK(sol.policy[0] == 0);
  CHECK(sol.bias[0] == 0.0);
}

TEST_CASE("average-cost solver matches brute force on random instances") {
  gen::Rng rng(0xACDC0005u);
  for (int trial = 0; trial < 200; ++trial) {
    const gen::ReducedPair pair = gen::random_reduced(rng, 5);
    const AcpsSolution sol = acps_solve(pair.reduced);
    const double brute = brute_force_acps_gain(pair.mirror);
    CHECK(std::abs(sol.gain - brute) <= 1e-8);
  }
}
