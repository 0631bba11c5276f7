// Acceptance suite: eight end-to-end checks, one PASS/FAIL line each.
// Invocation: acpc-acceptance <cli-binary> <data-dir> <scratch-dir>

#include <sys/wait.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <functional>
#include <iostream>
#include <limits>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "acpc/graph.hpp"
#include "acpc/io.hpp"
#include "acpc/model.hpp"
#include "acpc/oracles.hpp"
#include "acpc/simulate.hpp"
#include "acpc/solvers.hpp"
#include "acpc/synthesis.hpp"
#include "acpc/types.hpp"

#include "generators.hpp"

using namespace acpc;

namespace {

// Pinned tolerances.
constexpr double kRowTol = 1e-9;      // reduced rows and cycle costs vs the absorbing oracle
constexpr double kGainTol = 1e-8;     // average gains and SSP values vs enumeration
constexpr double kAbsorbTol = 1e-9;   // absorption probability mass
constexpr double kValueTol = 1e-8;    // weighted reachability values
constexpr double kAcpcRelTol = 0.02;  // simulated cumulative average vs computed optimum
constexpr double kExactSlack = 1e-12; // recomputed round bookkeeping

struct Outcome {
  bool ok = true;
  std::string detail;
};

std::string fmt(double x) {
  std::ostringstream out;
  out.precision(6);
  out << x;
  return out.str();
}

// Mixed-radix policy counter; returns false once every combination was seen.
bool advance_choice(std::vector<std::size_t>& choice, const std::vector<std::size_t>& radix) {
  for (std::size_t i = 0; i < choice.size(); ++i) {
    if (++choice[i] < radix[i]) return true;
    choice[i] = 0;
  }
  return false;
}

// A structural copy with every action cost multiplied by `k`.
Mdp scale_costs(const Mdp& m, double k) {
  MdpBuilder b;
  for (const std::string& name : m.ap()) b.add_prop(name);
  for (StateId s = 0; s < m.state_count(); ++s) {
    LabelMask mask = 0;
    for (std::size_t p = 0; p < m.ap().size(); ++p)
      if (m.has_prop(s, static_cast<int>(p))) mask |= (1u << p);
    b.add_state(m.state_name(s), mask);
  }
  for (ActionId a = 0; a < m.action_count(); ++a) b.add_action(m.action_name(a));
  for (StateId s = 0; s < m.state_count(); ++s) {
    for (ActionId a : m.enabled(s)) {
      for (const Transition& t : m.row(s, a)) b.add_transition(s, a, t.to, t.prob);
      b.set_cost(s, a, k * m.cost(s, a));
    }
  }
  if (m.initial().has_value()) b.set_initial(*m.initial());
  return b.build();
}

// Exhaustive minimum expected cost to the terminal over stationary
// deterministic policies that reach it almost surely.
std::vector<double> enumerate_ssp_values(const SspInstance& inst) {
  const Mdp& m = inst.model;
  const StateId n = m.state_count();
  std::vector<double> best(n, std::numeric_limits<double>::infinity());
  std::vector<std::size_t> choice(n, 0);
  std::vector<std::size_t> radix(n);
  for (StateId s = 0; s < n; ++s) radix[static_cast<std::size_t>(s)] = m.enabled(s).size();
  std::vector<StateId> starts(n);
  for (StateId s = 0; s < n; ++s) starts[static_cast<std::size_t>(s)] = s;
  do {
    PartialStrategy zeta;
    for (StateId s = 0; s < n; ++s)
      zeta.assign(s, m.enabled(s)[choice[static_cast<std::size_t>(s)]]);
    try {
      const auto hit = absorbing_expectations(m, zeta, {inst.terminal}, starts);
      for (StateId s = 0; s < n; ++s)
        best[static_cast<std::size_t>(s)] =
            std::min(best[static_cast<std::size_t>(s)], hit[static_cast<std::size_t>(s)].cost);
    } catch (const NumericError&) {
      // improper policy: skipped
    }
  } while (advance_choice(choice, radix));
  return best;
}

// Evaluates the constructed cycle strategy on its (mode, state) chain: every
// bottom strongly connected class must earn exactly the claimed average.
Outcome check_cycle_strategy(const ComponentModel& c, const FiniteMemoryStrategy& fm,
                             double gain) {
  const StateId n = c.model.state_count();
  auto key = [&](int mode, StateId s) {
    return static_cast<std::size_t>(mode) * static_cast<std::size_t>(n) +
           static_cast<std::size_t>(s);
  };
  std::vector<int> index(static_cast<std::size_t>(fm.mode_count) * n, -1);
  std::vector<std::pair<int, StateId>> nodes;
  for (StateId s = 0; s < n; ++s) {
    const int m0 = fm.start_mode[static_cast<std::size_t>(s)];
    if (m0 < 0) continue;
    if (index[key(m0, s)] < 0) {
      index[key(m0, s)] = static_cast<int>(nodes.size());
      nodes.push_back({m0, s});
    }
  }
  if (nodes.empty()) return {false, "cycle strategy defines no start mode"};

  std::vector<std::vector<int>> adj;
  for (std::size_t qi = 0; qi < nodes.size(); ++qi) {
    const auto [mode, s] = nodes[qi];
    const ActionId a = fm.act[key(mode, s)];
    if (a < 0 || !c.model.is_enabled(s, a))
      return {false, "cycle strategy plays a disabled action"};
    std::vector<int> row;
    for (const Transition& t : c.model.row(s, a)) {
      const int m2 = fm.next_mode[key(mode, t.to)];
      if (m2 < 0) return {false, "cycle strategy lacks a mode transition"};
      if (index[key(m2, t.to)] < 0) {
        index[key(m2, t.to)] = static_cast<int>(nodes.size());
        nodes.push_back({m2, t.to});
      }
      row.push_back(index[key(m2, t.to)]);
    }
    adj.push_back(std::move(row));
  }

  std::vector<int> comp;
  const int comp_count = strongly_connected_components(adj, comp);
  std::vector<bool> bottom(static_cast<std::size_t>(comp_count), true);
  for (std::size_t u = 0; u < adj.size(); ++u)
    for (int v : adj[u])
      if (comp[u] != comp[static_cast<std::size_t>(v)])
        bottom[static_cast<std::size_t>(comp[u])] = false;

  int evaluated = 0;
  for (int cid = 0; cid < comp_count; ++cid) {
    if (!bottom[static_cast<std::size_t>(cid)]) continue;
    std::vector<int> members;
    std::vector<int> local(nodes.size(), -1);
    for (std::size_t u = 0; u < nodes.size(); ++u) {
      if (comp[u] == cid) {
        local[u] = static_cast<int>(members.size());
        members.push_back(static_cast<int>(u));
      }
    }
    MdpBuilder b;
    const int sp = b.add_prop("sur");
    std::vector<bool> flags;
    for (int u : members) {
      const auto [mode, s] = nodes[static_cast<std::size_t>(u)];
      const bool is_sur = c.surveillance[static_cast<std::size_t>(s)];
      b.add_state("m" + std::to_string(mode) + "_s" + std::to_string(s),
                  is_sur ? (1u << sp) : 0u);
      flags.push_back(is_sur);
    }
    b.add_action("c");
    for (int u : members) {
      const auto [mode, s] = nodes[static_cast<std::size_t>(u)];
      const ActionId a = fm.act[key(mode, s)];
      for (const Transition& t : c.model.row(s, a)) {
        const int m2 = fm.next_mode[key(mode, t.to)];
        const int v = index[key(m2, t.to)];
        if (v < 0 || local[static_cast<std::size_t>(v)] < 0)
          return {false, "bottom class of the cycle strategy is not closed"};
        b.add_transition(local[static_cast<std::size_t>(u)], 0,
                         local[static_cast<std::size_t>(v)], t.prob);
      }
      b.set_cost(local[static_cast<std::size_t>(u)], 0, c.model.cost(s, a));
    }
    b.set_initial(0);
    const Mdp chain = b.build();
    const std::vector<ActionId> policy(chain.state_count(), 0);
    double value = 0.0;
    try {
      value = renewal_reward(chain, policy, flags);
    } catch (const InputError& e) {
      return {false, std::string("cycle strategy recurrent class rejected: ") + e.what()};
    }
    if (std::abs(value - gain) > kGainTol)
      return {false, "cycle strategy earns " + fmt(value) + " instead of " + fmt(gain)};
    ++evaluated;
  }
  if (evaluated == 0) return {false, "cycle strategy chain has no bottom class"};
  return {true, ""};
}

std::vector<bool> surveillance_flags(const Mdp& m, const std::string& prop) {
  std::vector<bool> flags(static_cast<std::size_t>(m.state_count()), false);
  const int p = m.prop_index(prop);
  for (StateId s = 0; s < m.state_count(); ++s)
    flags[static_cast<std::size_t>(s)] = m.has_prop(s, p);
  return flags;
}

int run_cli(const std::string& command) {
  const int status = std::system((command + " > /dev/null 2>&1").c_str());
  if (status < 0) return -1;
  if (WIFEXITED(status)) return WEXITSTATUS(status);
  return -2;
}

std::string quoted(const std::string& path) { return "\"" + path + "\""; }

// ------------------------------------------------------------ criterion 1 --
// Bundled case study: product size, accepting components, and exact
// agreement between the bundled automaton and the formula it encodes.
Outcome criterion1(const std::string& data_dir) {
  const ModelDocument doc = parse_model(read_file(data_dir + "/casestudy_model.json"));
  const Dra dra = parse_hoa(read_file(data_dir + "/casestudy_dra.hoa"));
  const ProductMdp product = build_product(doc.model, dra, doc.surveillance);
  if (product.model.state_count() > 50)
    return {false, "product has " + std::to_string(product.model.state_count()) + " states"};
  const std::vector<MaecEntry> maecs = compute_maecs(product);
  if (maecs.empty()) return {false, "product has no accepting component"};

  if (dra.ap() != std::vector<std::string>{"base", "job"})
    return {false, "bundled automaton alphabet is not [base, job]"};
  const LtlPtr base = ltl::prop(0);
  const LtlPtr job = ltl::prop(1);
  const LtlPtr phi =
      ltl::conj(ltl::conj(ltl::always(ltl::eventually(base)),
                          ltl::always(ltl::eventually(job))),
                ltl::always(ltl::implies(
                    base, ltl::next(ltl::until(ltl::negate(base), job)))));

  gen::Rng rng(0xACCE0001u);
  for (int t = 0; t < 1000; ++t) {
    LassoWord w;
    const int plen = static_cast<int>(rng.range(0, 6));
    const int clen = static_cast<int>(rng.range(1, 6));
    for (int i = 0; i < plen; ++i)
      w.prefix.push_back(static_cast<LabelMask>(rng.range(0, 3)));
    for (int i = 0; i < clen; ++i)
      w.cycle.push_back(static_cast<LabelMask>(rng.range(0, 3)));
    if (dra_accepts_lasso(dra, w) != ltl_eval_lasso(phi, w))
      return {false, "automaton and formula disagree on lasso word " + std::to_string(t)};
  }
  return {true, "product " + std::to_string(product.model.state_count()) + " states, " +
                    std::to_string(maecs.size()) +
                    " accepting component(s), 1000 lasso words agree"};
}

// ------------------------------------------------------------ criterion 2 --
// Every reduced action's row and cost match the absorbing-chain oracle, for
// two elimination orders.
Outcome criterion2(const std::vector<ComponentModel>& battery) {
  long certified = 0;
  for (std::size_t trial = 0; trial < battery.size(); ++trial) {
    const ComponentModel& c = battery[trial];
    std::vector<ReducedMdp> reductions;
    reductions.push_back(reduce_maec(c));
    ReduceOptions opts;
    for (StateId s = c.model.state_count() - 1; s >= 0; --s)
      if (!c.surveillance[static_cast<std::size_t>(s)]) opts.elimination_order.push_back(s);
    reductions.push_back(reduce_maec(c, opts));

    for (const ReducedMdp& red : reductions) {
      for (std::size_t i = 0; i < red.states.size(); ++i) {
        for (const ReducedAction& act : red.actions[i]) {
          const auto hits =
              absorbing_expectations(c.model, act.strategy, red.states, {red.states[i]});
          for (std::size_t j = 0; j < red.states.size(); ++j) {
            if (std::abs(hits[0].hit[j] - act.row[j]) > kRowTol)
              return {false, "component " + std::to_string(trial) +
                                 ": reduced row deviates by " +
                                 fmt(std::abs(hits[0].hit[j] - act.row[j]))};
          }
          if (std::abs(hits[0].cost - act.cost) > kRowTol)
            return {false, "component " + std::to_string(trial) +
                               ": reduced cost deviates by " +
                               fmt(std::abs(hits[0].cost - act.cost))};
          ++certified;
        }
      }
    }
  }
  return {true, std::to_string(battery.size()) + " components, " + std::to_string(certified) +
                    " reduced actions certified across two elimination orders"};
}

// ------------------------------------------------------------ criterion 3 --
// The reduction's optimal gain equals the brute-force minimum cost per cycle
// of the original component, and the constructed cycle strategy earns it.
Outcome criterion3(const std::vector<ComponentModel>& battery) {
  long evaluated_policies = 0;
  for (std::size_t trial = 0; trial < battery.size(); ++trial) {
    const ComponentModel& c = battery[trial];
    const StateId n = c.model.state_count();
    std::vector<std::size_t> radix(static_cast<std::size_t>(n));
    for (StateId s = 0; s < n; ++s) radix[static_cast<std::size_t>(s)] = c.model.enabled(s).size();
    std::vector<std::size_t> choice(static_cast<std::size_t>(n), 0);
    double brute = std::numeric_limits<double>::infinity();
    int usable = 0;
    do {
      std::vector<ActionId> policy(static_cast<std::size_t>(n));
      for (StateId s = 0; s < n; ++s)
        policy[static_cast<std::size_t>(s)] = c.model.enabled(s)[choice[static_cast<std::size_t>(s)]];
      try {
        brute = std::min(brute, renewal_reward(c.model, policy, c.surveillance));
        ++usable;
      } catch (const InputError&) {
        // multichain policy, or one whose recurrent class misses the
        // surveillance set: not a candidate
      }
    } while (advance_choice(choice, radix));
    if (usable == 0)
      return {false, "component " + std::to_string(trial) + " admits no unichain policy"};
    evaluated_policies += usable;

    const ReducedMdp red = reduce_maec(c);
    const AcpsSolution avg = acps_solve(red);
    if (std::abs(avg.gain - brute) > kGainTol)
      return {false, "component " + std::to_string(trial) + ": gain " + fmt(avg.gain) +
                         " vs brute force " + fmt(brute)};

    const FiniteMemoryStrategy fm = build_acpc_strategy(c, red, avg);
    Outcome lifted = check_cycle_strategy(c, fm, avg.gain);
    if (!lifted.ok) {
      lifted.detail = "component " + std::to_string(trial) + ": " + lifted.detail;
      return lifted;
    }
  }
  return {true, std::to_string(battery.size()) + " components, " +
                    std::to_string(evaluated_policies) +
                    " unichain policies enumerated; gains and cycle strategies agree"};
}

// ------------------------------------------------------------ criterion 4 --
// Solver oracles: SSP vs enumeration, average gain vs brute force, maximal
// end components vs exhaustive enumeration.
Outcome criterion4() {
  {
    gen::Rng rng(0xACCE0004u);
    int solved = 0;
    long attempts = 0;
    while (solved < 500) {
      if (++attempts > 20000) return {false, "SSP battery did not produce 500 proper instances"};
      const SspInstance inst = gen::random_ssp(rng, 5);
      SspSolution sol;
      try {
        sol = ssp_solve(inst);
      } catch (const InputError&) {
        continue;  // terminal not almost-surely reachable from some state
      }
      const std::vector<double> best = enumerate_ssp_values(inst);
      for (StateId s = 0; s < inst.model.state_count(); ++s) {
        if (!std::isfinite(best[static_cast<std::size_t>(s)]))
          return {false, "solved SSP instance has no proper enumerated policy"};
        if (std::abs(sol.value[static_cast<std::size_t>(s)] -
                     best[static_cast<std::size_t>(s)]) > kGainTol)
          return {false, "SSP value deviates by " +
                             fmt(std::abs(sol.value[static_cast<std::size_t>(s)] -
                                          best[static_cast<std::size_t>(s)]))};
      }
      ++solved;
    }
  }
  {
    gen::Rng rng(0xACCE0014u);
    for (int trial = 0; trial < 500; ++trial) {
      const gen::ReducedPair pair = gen::random_reduced(rng, 5);
      const double gain = acps_solve(pair.reduced).gain;
      const double brute = brute_force_acps_gain(pair.mirror);
      if (std::abs(gain - brute) > kGainTol)
        return {false, "average gain " + fmt(gain) + " vs brute force " + fmt(brute) +
                           " on trial " + std::to_string(trial)};
    }
  }
  {
    gen::Rng rng(0xACCE0024u);
    for (int trial = 0; trial < 500; ++trial) {
      const Mdp m = gen::random_mdp(rng, 7, 2);
      const std::vector<EndComponent> mecs = mec_decompose(m);
      const std::vector<EndComponent> all = enumerate_ecs(m);
      for (const EndComponent& mec : mecs) {
        const bool listed = std::any_of(all.begin(), all.end(), [&](const EndComponent& ec) {
          return ec.states == mec.states && ec.actions == mec.actions;
        });
        if (!listed) return {false, "a maximal component is not an end component"};
      }
      for (const EndComponent& ec : all) {
        const bool covered = std::any_of(mecs.begin(), mecs.end(), [&](const EndComponent& mec) {
          return std::includes(mec.states.begin(), mec.states.end(), ec.states.begin(),
                               ec.states.end());
        });
        if (!covered) return {false, "an end component escapes every maximal one"};
      }
      for (std::size_t i = 0; i < mecs.size(); ++i) {
        for (std::size_t j = i + 1; j < mecs.size(); ++j) {
          std::vector<StateId> inter;
          std::set_intersection(mecs[i].states.begin(), mecs[i].states.end(),
                                mecs[j].states.begin(), mecs[j].states.end(),
                                std::back_inserter(inter));
          if (!inter.empty()) return {false, "maximal components overlap"};
        }
      }
    }
  }
  return {true, "500 SSP instances, 500 average instances, 500 decompositions certified"};
}

// ------------------------------------------------------------ criterion 5 --
// Prefix certificates: the synthesized jump assignment absorbs with
// probability one, and its weighted value matches exhaustive minimization
// over all almost-sure reaching policies.
Outcome criterion5() {
  gen::Rng rng(0xACCE0005u);
  int accepted = 0;
  long attempts = 0;
  while (accepted < 200) {
    if (++attempts > 30000)
      return {false, "could not assemble 200 feasible enumerable products"};
    const Mdp m = gen::random_mdp(rng, 5, 2);
    const Dra a = gen::random_dra(rng, {"p"}, 3);
    SynthesisResult res;
    try {
      res = synthesize(m, a, "p");
    } catch (const InfeasibleError&) {
      continue;
    }
    const ProductMdp& p = res.product;
    const StateId n = p.model.state_count();

    std::vector<int> tindex(res.entries.size(), -1);
    std::vector<bool> target(static_cast<std::size_t>(n), false);
    int terminals = 0;
    for (std::size_t i = 0; i < res.entries.size(); ++i) {
      if (!res.entries[i].value_known) continue;
      tindex[i] = terminals++;
      for (StateId s : res.entries[i].component.states) target[static_cast<std::size_t>(s)] = true;
    }
    if (terminals == 0) return {false, "feasible instance without finite-valued components"};
    const ReachResult reach = almost_sure_reach(p.model, target);
    if (!reach.member[static_cast<std::size_t>(p.initial)])
      return {false, "product initial lies outside the winning region"};

    // Test-side absorption model: winning-region states with their safe
    // actions at zero cost, plus one terminal per finite-valued component
    // entered by a jump priced at that component's value.
    MdpBuilder builder;
    std::vector<StateId> tid(static_cast<std::size_t>(n), -1);
    for (std::size_t i = 0; i < reach.states.size(); ++i) {
      tid[static_cast<std::size_t>(reach.states[i])] = static_cast<StateId>(i);
      builder.add_state("w" + std::to_string(reach.states[i]), 0u);
    }
    std::vector<StateId> term(static_cast<std::size_t>(terminals));
    for (int j = 0; j < terminals; ++j) {
      term[static_cast<std::size_t>(j)] =
          static_cast<StateId>(reach.states.size() + static_cast<std::size_t>(j));
      builder.add_state("goal" + std::to_string(j), 0u);
    }
    for (ActionId act = 0; act < p.model.action_count(); ++act)
      builder.add_action(p.model.action_name(act));
    const ActionId jump0 = p.model.action_count();
    for (int j = 0; j < terminals; ++j) builder.add_action("jump" + std::to_string(j));

    for (std::size_t i = 0; i < reach.states.size(); ++i) {
      const StateId s = reach.states[i];
      for (ActionId act : reach.actions[i]) {
        for (const Transition& t : p.model.row(s, act)) {
          builder.add_transition(static_cast<StateId>(i), act,
                                 tid[static_cast<std::size_t>(t.to)], t.prob);
        }
      }
    }
    for (std::size_t i = 0; i < res.entries.size(); ++i) {
      if (tindex[i] < 0) continue;
      for (StateId s : res.entries[i].component.states) {
        if (tid[static_cast<std::size_t>(s)] < 0)
          return {false, "accepting component state outside the winning region"};
        builder.add_transition(tid[static_cast<std::size_t>(s)],
                               jump0 + static_cast<ActionId>(tindex[i]),
                               term[static_cast<std::size_t>(tindex[i])], 1.0);
        builder.set_cost(tid[static_cast<std::size_t>(s)],
                         jump0 + static_cast<ActionId>(tindex[i]), res.entries[i].value);
      }
    }
    for (int j = 0; j < terminals; ++j) {
      builder.add_transition(term[static_cast<std::size_t>(j)], jump0 + static_cast<ActionId>(j),
                             term[static_cast<std::size_t>(j)], 1.0);
    }
    builder.set_initial(tid[static_cast<std::size_t>(p.initial)]);
    const Mdp chain = builder.build();

    // (a) The synthesized prefix policy absorbs with probability one and
    //     achieves the reported value.
    PartialStrategy zeta;
    for (std::size_t i = 0; i < reach.states.size(); ++i) {
      const StateId s = reach.states[i];
      const int entry = res.selection.jump_entry[static_cast<std::size_t>(s)];
      if (entry >= 0) {
        if (tindex[static_cast<std::size_t>(entry)] < 0)
          return {false, "jump assignment points at a component without a value"};
        zeta.assign(static_cast<StateId>(i),
                    jump0 + static_cast<ActionId>(tindex[static_cast<std::size_t>(entry)]));
      } else if (res.selection.reach_policy.defined_at(s)) {
        zeta.assign(static_cast<StateId>(i),
                    static_cast<ActionId>(res.selection.reach_policy.action_at(s)));
      }
    }
    for (int j = 0; j < terminals; ++j)
      zeta.assign(term[static_cast<std::size_t>(j)], jump0 + static_cast<ActionId>(j));

    std::vector<StateId> goals(term.begin(), term.end());
    const auto chosen =
        absorbing_expectations(chain, zeta, goals, {tid[static_cast<std::size_t>(p.initial)]});
    double mass = 0.0;
    for (double h : chosen[0].hit) mass += h;
    if (std::abs(mass - 1.0) > kAbsorbTol)
      return {false, "absorption mass " + fmt(mass) + " on attempt " + std::to_string(attempts)};
    if (std::abs(chosen[0].cost - res.selection.optimal_value) > kValueTol)
      return {false, "weighted value " + fmt(chosen[0].cost) + " vs reported " +
                         fmt(res.selection.optimal_value)};

    // (b) Exhaustive minimization over every deterministic choice of safe
    //     actions and jumps.
    std::vector<std::size_t> radix(reach.states.size());
    double combos = 1.0;
    for (std::size_t i = 0; i < reach.states.size(); ++i) {
      radix[i] = chain.enabled(static_cast<StateId>(i)).size();
      combos *= static_cast<double>(radix[i]);
    }
    if (combos > 5000.0) continue;  // keep enumeration exhaustive yet bounded
    std::vector<std::size_t> choice(reach.states.size(), 0);
    double best = std::numeric_limits<double>::infinity();
    do {
      PartialStrategy pick;
      for (std::size_t i = 0; i < reach.states.size(); ++i)
        pick.assign(static_cast<StateId>(i), chain.enabled(static_cast<StateId>(i))[choice[i]]);
      for (int j = 0; j < terminals; ++j)
        pick.assign(term[static_cast<std::size_t>(j)], jump0 + static_cast<ActionId>(j));
      try {
        const auto hit = absorbing_expectations(chain, pick, goals,
                                                {tid[static_cast<std::size_t>(p.initial)]});
        best = std::min(best, hit[0].cost);
      } catch (const NumericError&) {
        // not almost-surely absorbing: not a valid prefix policy
      }
    } while (advance_choice(choice, radix));
    if (!std::isfinite(best)) return {false, "no enumerated policy absorbs almost surely"};
    if (std::abs(best - res.selection.optimal_value) > kValueTol)
      return {false, "exhaustive minimum " + fmt(best) + " vs reported " +
                         fmt(res.selection.optimal_value)};
    ++accepted;
  }
  return {true, "200 feasible products certified (absorption mass and weighted value)"};
}

// ------------------------------------------------------------ criterion 6 --
// End-to-end: simulated cumulative average cost per cycle approaches the
// computed optimum, with clean rounds and no forbidden visits.
Outcome criterion6() {
  gen::Rng rng(0xACCE0006u);
  const Dra automaton = gen::gf_sur_dra();
  double worst_rel = 0.0;
  for (int inst = 0; inst < 20; ++inst) {
    const gen::SimInstance si = gen::random_sim_instance(rng, 8);
    const Mdp model = scale_costs(si.model, 4.0);
    const SynthesisResult res = synthesize(model, automaton, si.surveillance);
    const double optimum = res.selection.optimal_value;
    if (!(optimum > 0.0)) return {false, "instance " + std::to_string(inst) + " has zero optimum"};

    const std::vector<bool> flags = surveillance_flags(model, si.surveillance);
    const SimModel sim{&model, &flags};
    CompositeController controller = compose_controller(res);
    ProjectedController projected(&res.product, &controller);

    double num = 0.0, den = 0.0;
    for (int seed = 1; seed <= 20; ++seed) {
      SimOptions opts;
      opts.seed = 0xC6000000ull + static_cast<std::uint64_t>(inst) * 64u +
                  static_cast<std::uint64_t>(seed);
      const SimulationReport r = run_rounds(sim, projected, 100, opts);
      if (r.rounds != 100)
        return {false, "instance " + std::to_string(inst) + " finished only " +
                           std::to_string(r.rounds) + " rounds"};
      if (controller.bad_visits() != 0)
        return {false, "instance " + std::to_string(inst) + " visited a forbidden state " +
                           std::to_string(controller.bad_visits()) + " times"};
      for (const RoundReport& rr : r.round_reports) {
        if (rr.acceptance_steps >= res.schedule.phase1_timeout)
          return {false, "a round's first phase hit its step cap"};
        num += rr.acceptance_cost + rr.cycle_cost;
        den += static_cast<double>(rr.cycles);
      }
    }
    const double achieved = num / den;
    const double rel = std::abs(achieved - optimum) / optimum;
    worst_rel = std::max(worst_rel, rel);
    if (rel > kAcpcRelTol)
      return {false, "instance " + std::to_string(inst) + ": simulated " + fmt(achieved) +
                         " vs optimum " + fmt(optimum) + " (" + fmt(100.0 * rel) + "%)"};
  }
  return {true, "20 instances x 20 seeds x 100 rounds; worst deviation " +
                    fmt(100.0 * worst_rel) + "%"};
}

// ------------------------------------------------------------ criterion 7 --
// Round bookkeeping: early exits satisfy their inequality; with early exit
// disabled every round runs to the schedule's exact cycle cap.
Outcome criterion7() {
  gen::Rng rng(0xACCE0007u);
  const Dra automaton = gen::gf_sur_dra();
  long early_rounds = 0, capped_rounds = 0;
  for (int inst = 0; inst < 3; ++inst) {
    const gen::SimInstance si = gen::random_sim_instance(rng, 8);
    const std::vector<bool> flags = surveillance_flags(si.model, si.surveillance);
    const SimModel sim{&si.model, &flags};

    const SynthesisResult with_exit = synthesize(si.model, automaton, si.surveillance);
    for (int seed = 1; seed <= 2; ++seed) {
      CompositeController controller = compose_controller(with_exit);
      ProjectedController projected(&with_exit.product, &controller);
      SimOptions opts;
      opts.seed = 0xC7000000ull + static_cast<std::uint64_t>(inst) * 8u +
                  static_cast<std::uint64_t>(seed);
      const SimulationReport r = run_rounds(sim, projected, 30, opts);
      if (!controller.activated()) return {false, "controller never activated a component"};
      const double value = with_exit.bundles[static_cast<std::size_t>(
          controller.active_bundle())].value;
      for (const RoundReport& rr : r.round_reports) {
        if (!rr.exited_early) continue;
        const double recomputed =
            (rr.acceptance_cost + rr.cycle_cost) / static_cast<double>(rr.cycles);
        if (std::abs(recomputed - rr.round_average) > kExactSlack)
          return {false, "round average disagrees with its own components"};
        if (rr.round_average > value + 2.0 / static_cast<double>(rr.index) + kExactSlack)
          return {false, "early round " + std::to_string(rr.index) + " average " +
                             fmt(rr.round_average) + " exceeds " +
                             fmt(value + 2.0 / static_cast<double>(rr.index))};
        ++early_rounds;
      }
    }

    SynthesisOptions opts_off;
    opts_off.early_exit = false;
    const SynthesisResult no_exit = synthesize(si.model, automaton, si.surveillance, opts_off);
    for (int seed = 1; seed <= 2; ++seed) {
      CompositeController controller = compose_controller(no_exit);
      ProjectedController projected(&no_exit.product, &controller);
      SimOptions opts;
      opts.seed = 0xC7100000ull + static_cast<std::uint64_t>(inst) * 8u +
                  static_cast<std::uint64_t>(seed);
      const SimulationReport r = run_rounds(sim, projected, 30, opts);
      for (const RoundReport& rr : r.round_reports) {
        if (rr.exited_early) return {false, "early exit fired while disabled"};
        if (rr.cycles != rr.cycle_cap)
          return {false, "round " + std::to_string(rr.index) + " ran " +
                             std::to_string(rr.cycles) + " of " + std::to_string(rr.cycle_cap) +
                             " cycles"};
        const double k_eff = std::max<double>(static_cast<double>(rr.acceptance_steps), 1.0);
        const double raw =
            std::ceil(static_cast<double>(rr.index) * k_eff * no_exit.schedule.g_max - 1e-9);
        const long cap =
            std::max(no_exit.schedule.l_floor, raw < 1.0 ? 1L : static_cast<long>(raw));
        if (cap != rr.cycle_cap)
          return {false, "recomputed cap " + std::to_string(cap) + " vs reported " +
                             std::to_string(rr.cycle_cap)};
        ++capped_rounds;
      }
    }
  }
  if (early_rounds == 0) return {false, "no early-exit round was observed"};
  return {true, std::to_string(early_rounds) + " early rounds bounded, " +
                    std::to_string(capped_rounds) + " capped rounds exact"};
}

// ------------------------------------------------------------ criterion 8 --
// The command line reports infeasibility with exit code 2 and writes no
// strategy file; the bundled case study synthesizes and simulates cleanly.
Outcome criterion8(const std::string& cli, const std::string& data_dir,
                   const std::string& scratch) {
  namespace fs = std::filesystem;

  MdpBuilder b;
  const int sp = b.add_prop("sur");
  b.add_state("s0", 0u);
  b.add_state("s1", 1u << sp);
  b.add_action("a");
  b.add_transition(0, 0, 0, 1.0);
  b.set_cost(0, 0, 1.0);
  b.add_transition(1, 0, 1, 1.0);
  b.set_cost(1, 0, 1.0);
  b.set_initial(0);
  const ModelDocument infeasible{b.build(), "sur"};

  const std::string model_path = scratch + "/infeasible_model.json";
  const std::string dra_path = scratch + "/gf_sur.hoa";
  const std::string out_path = scratch + "/infeasible_strategy.json";
  write_file(model_path, emit_model(infeasible));
  write_file(dra_path, emit_hoa(gen::gf_sur_dra()));
  std::error_code ec;
  fs::remove(out_path, ec);

  int rc = run_cli(quoted(cli) + " synth --model " + quoted(model_path) + " --dra " +
                   quoted(dra_path) + " --out " + quoted(out_path));
  if (rc != 2) return {false, "infeasible synth exited with " + std::to_string(rc)};
  if (fs::exists(out_path)) return {false, "a strategy file was written despite infeasibility"};

  const std::string good_out = scratch + "/casestudy_strategy.json";
  rc = run_cli(quoted(cli) + " synth --model " + quoted(data_dir + "/casestudy_model.json") +
               " --dra " + quoted(data_dir + "/casestudy_dra.hoa") + " --out " +
               quoted(good_out));
  if (rc != 0) return {false, "case-study synth exited with " + std::to_string(rc)};
  if (!fs::exists(good_out)) return {false, "case-study synth wrote no strategy file"};
  rc = run_cli(quoted(cli) + " simulate --model " + quoted(data_dir + "/casestudy_model.json") +
               " --strategy " + quoted(good_out) + " --rounds 3 --seed 5");
  if (rc != 0) return {false, "case-study simulate exited with " + std::to_string(rc)};
  return {true, "infeasible model exits 2 with no strategy file; case study runs end to end"};
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 4) {
    std::cerr << "usage: acpc-acceptance <cli-binary> <data-dir> <scratch-dir>\n";
    return 2;
  }
  const std::string cli = argv[1];
  const std::string data_dir = argv[2];
  const std::string scratch = argv[3];

  std::vector<ComponentModel> battery;
  {
    gen::Rng rng(0xACCE0002u);
    for (int i = 0; i < 300; ++i) battery.push_back(gen::random_maec(rng, 6, 2, false));
  }

  const std::vector<std::pair<std::string, std::function<Outcome()>>> checks = {
      {"bundled case study structure", [&] { return criterion1(data_dir); }},
      {"cycle reduction vs absorbing oracle", [&] { return criterion2(battery); }},
      {"reduction gain vs brute force and constructed strategy", [&] { return criterion3(battery); }},
      {"solver cross-checks", [] { return criterion4(); }},
      {"prefix absorption and weighted value", [] { return criterion5(); }},
      {"simulated average approaches the optimum", [] { return criterion6(); }},
      {"round schedule bookkeeping", [] { return criterion7(); }},
      {"infeasibility exit path", [&] { return criterion8(cli, data_dir, scratch); }},
  };

  bool all_ok = true;
  for (std::size_t i = 0; i < checks.size(); ++i) {
    Outcome outcome;
    try {
      outcome = checks[i].second();
    } catch (const std::exception& e) {
      outcome = {false, std::string("unexpected exception: ") + e.what()};
    }
    all_ok = all_ok && outcome.ok;
    std::cout << (outcome.ok ? "PASS" : "FAIL") << " criterion " << (i + 1) << ": "
              << checks[i].first << " (" << outcome.detail << ")" << std::endl;
  }
  return all_ok ? 0 : 1;
}
