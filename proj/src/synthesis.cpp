#include "acpc/synthesis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <set>
#include <string>
#include <utility>

#include <Eigen/Dense>

#include "acpc/linalg.hpp"
#include "acpc/types.hpp"

namespace acpc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

bool product_in_inf(const ProductMdp& p, int pair, StateId s) {
  return p.dra.in_inf(pair, p.dra_state[s]);
}

bool product_in_fin(const ProductMdp& p, int pair, StateId s) {
  return p.dra.in_fin(pair, p.dra_state[s]);
}

}  // namespace

SelectionResult select_target_maecs(const ProductMdp& p,
                                    const std::vector<MaecEntry>& entries) {
  const Mdp& pm = p.model;
  const StateId n = pm.state_count();
  if (entries.empty()) {
    throw InfeasibleError("the specification admits no accepting end component");
  }
  std::vector<int> finite;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (entries[i].value_known && std::isfinite(entries[i].value)) {
      finite.push_back(static_cast<int>(i));
    }
  }
  if (finite.empty()) {
    throw InfeasibleError(
        "no accepting end component completes surveillance cycles at finite cost");
  }

  std::vector<bool> target(n, false);
  for (const int e : finite) {
    for (const StateId s : entries[e].component.states) target[s] = true;
  }
  const ReachResult reach = almost_sure_reach(pm, target);
  if (!reach.member[p.initial]) {
    throw InfeasibleError(
        "the initial state cannot reach an accepting component almost surely");
  }

  // Restriction to W with the inside-staying actions. Real actions are free:
  // only the entry jumps carry cost, so the shortest-path value at the
  // initial state is exactly the weighted component value.
  std::vector<int> local(n, -1);
  for (std::size_t i = 0; i < reach.states.size(); ++i) local[reach.states[i]] = static_cast<int>(i);
  MdpBuilder b;
  for (const std::string& prop : pm.ap()) b.add_prop(prop);
  for (const StateId s : reach.states) b.add_state(pm.state_name(s), pm.label(s));
  for (ActionId a = 0; a < pm.action_count(); ++a) b.add_action(pm.action_name(a));
  for (std::size_t i = 0; i < reach.states.size(); ++i) {
    const StateId s = reach.states[i];
    for (const ActionId a : reach.actions[i]) {
      for (const auto& t : pm.row(s, a)) {
        b.add_transition(static_cast<StateId>(i), a, local[t.to], t.prob);
      }
    }
  }
  b.set_initial(local[p.initial]);
  const Mdp wm = b.build();

  std::vector<JumpGroup> groups;
  for (const int e : finite) {
    JumpGroup g;
    g.cost = entries[e].value;
    g.name = "enter" + std::to_string(e);
    for (const StateId s : entries[e].component.states) {
      g.sources.push_back(local[s]);
    }
    groups.push_back(std::move(g));
  }
  const SspInstance inst = make_ssp(wm, groups);
  const SspSolution sol = ssp_solve(inst);

  SelectionResult r;
  r.in_restriction = reach.member;
  r.reach_value.assign(n, kInf);
  r.jump_entry.assign(n, -1);
  for (std::size_t i = 0; i < reach.states.size(); ++i) {
    const StateId s = reach.states[i];
    r.reach_value[s] = sol.value[i];
    const ActionId a = sol.policy[i];
    if (a >= inst.first_synthetic) {
      r.jump_entry[s] = finite[a - inst.first_synthetic];
    } else {
      r.reach_policy.assign(s, a);
    }
  }
  r.optimal_value = sol.value[local[p.initial]];
  {
    std::set<int> chosen;
    for (StateId s = 0; s < n; ++s) {
      if (r.jump_entry[s] >= 0) chosen.insert(r.jump_entry[s]);
    }
    r.selected.assign(chosen.begin(), chosen.end());
  }

  // Certificate: under the extracted policy the run is absorbed by the jump
  // states with probability one, and the absorption-weighted component
  // values reproduce the optimal value.
  std::vector<double> absorbed(r.selected.size(), 0.0);
  if (r.jump_entry[p.initial] >= 0) {
    for (std::size_t e = 0; e < r.selected.size(); ++e) {
      absorbed[e] = (r.selected[e] == r.jump_entry[p.initial]) ? 1.0 : 0.0;
    }
  } else {
    std::vector<StateId> passage;
    std::vector<int> slot(n, -1);
    for (const StateId s : reach.states) {
      if (r.jump_entry[s] < 0) {
        slot[s] = static_cast<int>(passage.size());
        passage.push_back(s);
      }
    }
    std::vector<int> entry_slot_of(entries.size(), -1);
    for (std::size_t e = 0; e < r.selected.size(); ++e) entry_slot_of[r.selected[e]] = static_cast<int>(e);
    const int k = static_cast<int>(passage.size());
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(k, k);
    Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(k, static_cast<int>(r.selected.size()));
    for (int i = 0; i < k; ++i) {
      const StateId s = passage[i];
      a(i, i) = 1.0;
      const ActionId act = r.reach_policy.action_at(s);
      for (const auto& t : pm.row(s, act)) {
        if (slot[t.to] >= 0) {
          a(i, slot[t.to]) -= t.prob;
        } else {
          rhs(i, entry_slot_of[r.jump_entry[t.to]]) += t.prob;
        }
      }
    }
    const Eigen::MatrixXd x = lu_solve(a, rhs);
    for (std::size_t e = 0; e < r.selected.size(); ++e) {
      absorbed[e] = x(slot[p.initial], static_cast<int>(e));
    }
  }
  double mass = 0.0, weighted = 0.0;
  for (std::size_t e = 0; e < r.selected.size(); ++e) {
    mass += absorbed[e];
    weighted += absorbed[e] * entries[r.selected[e]].value;
  }
  r.absorption_error = std::abs(1.0 - mass);
  r.value_error = std::abs(r.optimal_value - weighted);
  if (r.absorption_error > 1e-9) {
    throw NumericError("target selection does not absorb with probability one");
  }
  if (r.value_error > 1e-9 * std::max(1.0, std::abs(r.optimal_value))) {
    throw NumericError("target selection value certificate failed");
  }
  return r;
}

std::vector<ActionId> build_acceptance_strategy(const ComponentModel& component,
                                                const std::vector<bool>& g_state,
                                                std::vector<double>* cost_to_g) {
  const Mdp& m = component.model;
  const StateId n = m.state_count();
  JumpGroup g;
  g.cost = 0.0;
  g.name = "at-g";
  for (StateId s = 0; s < n; ++s) {
    if (g_state[s]) g.sources.push_back(s);
  }
  if (g.sources.empty()) {
    throw InputError("component has no state satisfying the acceptance condition");
  }
  const SspInstance inst = make_ssp(m, {g});
  const SspSolution sol = ssp_solve(inst);

  std::vector<ActionId> policy(n, -1);
  for (StateId s = 0; s < n; ++s) {
    policy[s] = g_state[s] ? m.enabled(s).front() : sol.policy[s];
  }
  if (cost_to_g != nullptr) {
    cost_to_g->assign(n, 0.0);
    for (StateId s = 0; s < n; ++s) (*cost_to_g)[s] = sol.value[s];
  }
  return policy;
}

FiniteMemoryStrategy build_acpc_strategy(const ComponentModel& component,
                                         const ReducedMdp& reduced,
                                         const AcpsSolution& average) {
  const Mdp& m = component.model;
  const StateId n = m.state_count();
  const int modes = static_cast<int>(reduced.states.size());
  const int init_mode = modes;

  FiniteMemoryStrategy fm;
  fm.mode_count = modes + 1;
  fm.state_count = n;
  fm.act.assign(static_cast<std::size_t>(modes + 1) * n, -1);
  fm.next_mode.assign(static_cast<std::size_t>(modes + 1) * n, -1);
  fm.start_mode.assign(n, -1);

  std::vector<int> mode_of_sur(n, -1);
  for (int i = 0; i < modes; ++i) mode_of_sur[reduced.states[i]] = i;

  // The chosen reduced action of mode i spells out the in-component walk
  // from surveillance state i; covering[s] is the first mode defining s.
  std::vector<int> covering(n, -1);
  for (int i = 0; i < modes; ++i) {
    const PartialStrategy& zeta = reduced.actions[i][average.policy[i]].strategy;
    for (const auto& [s, a] : zeta.assignment) {
      fm.act[static_cast<std::size_t>(i) * n + s] = a;
      if (covering[s] < 0) covering[s] = i;
    }
  }

  for (int mode = 0; mode <= modes; ++mode) {
    for (StateId v = 0; v < n; ++v) {
      const std::size_t at = static_cast<std::size_t>(mode) * n + v;
      if (mode_of_sur[v] >= 0) {
        fm.next_mode[at] = mode_of_sur[v];
      } else if (mode == init_mode && covering[v] >= 0) {
        // Entering a covered state before the first completed cycle adopts
        // the covering mode so the action table stays total along the run.
        fm.next_mode[at] = covering[v];
      } else {
        fm.next_mode[at] = mode;
      }
    }
  }

  // Start mode: last-cycle mode at surveillance states, covering mode at
  // covered states, otherwise the start mode routing toward the domain.
  std::vector<bool> covered(n, false);
  for (StateId s = 0; s < n; ++s) covered[s] = covering[s] >= 0;
  for (StateId s = 0; s < n; ++s) {
    if (mode_of_sur[s] >= 0) fm.start_mode[s] = mode_of_sur[s];
    else if (covered[s]) fm.start_mode[s] = covering[s];
    else fm.start_mode[s] = init_mode;
  }

  bool all_covered = true;
  for (StateId s = 0; s < n; ++s) {
    if (!covered[s]) all_covered = false;
  }
  if (!all_covered) {
    JumpGroup g;
    g.cost = 0.0;
    g.name = "at-domain";
    for (StateId s = 0; s < n; ++s) {
      if (covered[s]) g.sources.push_back(s);
    }
    const SspInstance inst = make_ssp(m, {g});
    const SspSolution sol = ssp_solve(inst);
    for (StateId s = 0; s < n; ++s) {
      if (!covered[s]) fm.act[static_cast<std::size_t>(init_mode) * n + s] = sol.policy[s];
    }
  }
  return fm;
}

// ---------------------------------------------------------------------------
// Composite controller
// ---------------------------------------------------------------------------

CompositeController::CompositeController(const ProductMdp* product,
                                         const SelectionResult* selection,
                                         const std::vector<Bundle>* bundles,
                                         RoundSchedule schedule)
    : product_(product), selection_(selection), bundles_(bundles), schedule_(schedule) {
  int max_entry = -1;
  for (const Bundle& b : *bundles_) max_entry = std::max(max_entry, b.entry_index);
  bundle_of_entry_.assign(max_entry + 1, -1);
  for (std::size_t i = 0; i < bundles_->size(); ++i) {
    bundle_of_entry_[(*bundles_)[i].entry_index] = static_cast<int>(i);
  }
}

void CompositeController::reset(StateId start) {
  phase_ = Phase::Reach;
  current_ = start;
  last_action_ = -1;
  active_ = -1;
  mode_ = -1;
  round_ = 0;
  acceptance_steps_ = 0;
  acceptance_cost_ = 0.0;
  cycles_ = 0;
  cycle_cost_ = 0.0;
  cycle_cap_ = 0;
  reach_cost_ = 0.0;
  bad_visits_ = 0;
  reports_.clear();
  arrive(start);
}

long CompositeController::cycle_cap_for(long round) const {
  const double k_eff = std::max<double>(static_cast<double>(acceptance_steps_), 1.0);
  const double raw = std::ceil(static_cast<double>(round) * k_eff * schedule_.g_max - 1e-9);
  long cap = raw < 1.0 ? 1 : static_cast<long>(raw);
  return std::max(cap, schedule_.l_floor);
}

void CompositeController::start_round(StateId s) {
  phase_ = Phase::Acceptance;
  mode_ = -1;
  acceptance_steps_ = 0;
  acceptance_cost_ = 0.0;
  cycles_ = 0;
  cycle_cost_ = 0.0;
  cycle_cap_ = 0;
  (void)s;
}

void CompositeController::arrive(StateId s) {
  if (phase_ == Phase::Reach) {
    const int entry = selection_->jump_entry[s];
    if (entry < 0) return;
    active_ = bundle_of_entry_[entry];
    round_ = 1;
    start_round(s);
  }
  if (phase_ == Phase::Acceptance) {
    const Bundle& b = (*bundles_)[active_];
    if (product_in_inf(*product_, b.pair_index, s)) {
      cycle_cap_ = cycle_cap_for(round_);
      phase_ = Phase::Average;
      mode_ = b.cycle_strategy.start_mode[b.component.local_of[s]];
      if (mode_ < 0) throw NumericError("average phase started outside its component");
    }
  }
}

ActionId CompositeController::next_action(StateId current) {
  if (current != current_) {
    throw InputError("controller is out of sync with the simulated run");
  }
  ActionId a = -1;
  switch (phase_) {
    case Phase::Reach:
      a = selection_->reach_policy.action_at(current);
      break;
    case Phase::Acceptance: {
      const Bundle& b = (*bundles_)[active_];
      a = b.acceptance_policy[b.component.local_of[current]];
      break;
    }
    case Phase::Average: {
      const Bundle& b = (*bundles_)[active_];
      a = b.cycle_strategy.action_at(mode_, b.component.local_of[current]);
      break;
    }
  }
  if (a < 0) {
    throw NumericError("controller has no action at state " +
                       product_->model.state_name(current));
  }
  last_action_ = a;
  return a;
}

void CompositeController::observe(StateId next) {
  const double cost = product_->model.cost(current_, last_action_);
  switch (phase_) {
    case Phase::Reach:
      reach_cost_ += cost;
      break;
    case Phase::Acceptance:
      ++acceptance_steps_;
      acceptance_cost_ += cost;
      if (acceptance_steps_ > schedule_.phase1_timeout) {
        throw CapError("acceptance phase exceeded " +
                       std::to_string(schedule_.phase1_timeout) + " steps");
      }
      break;
    case Phase::Average:
      cycle_cost_ += cost;
      break;
  }
  if (active_ >= 0 && product_in_fin(*product_, (*bundles_)[active_].pair_index, next)) {
    ++bad_visits_;
  }

  bool round_done = false;
  bool early = false;
  if (phase_ == Phase::Average) {
    const Bundle& b = (*bundles_)[active_];
    if (product_->surveillance[next]) {
      ++cycles_;
      const double average = (acceptance_cost_ + cycle_cost_) / static_cast<double>(cycles_);
      if (schedule_.early_exit &&
          average <= b.value + 2.0 / static_cast<double>(round_)) {
        round_done = true;
        early = true;
      } else if (cycles_ >= cycle_cap_) {
        round_done = true;
      }
    }
    if (!round_done) {
      const int local = b.component.local_of[next];
      if (local < 0) throw NumericError("average phase left its component");
      mode_ = b.cycle_strategy.transition(mode_, local);
      if (mode_ < 0) throw NumericError("average phase left its strategy domain");
    }
  }

  current_ = next;
  if (round_done) {
    RoundReport report;
    report.index = round_;
    report.acceptance_steps = acceptance_steps_;
    report.acceptance_cost = acceptance_cost_;
    report.cycles = cycles_;
    report.cycle_cost = cycle_cost_;
    report.cycle_cap = cycle_cap_;
    report.round_average =
        (acceptance_cost_ + cycle_cost_) / static_cast<double>(cycles_);
    report.exited_early = early;
    reports_.push_back(report);
    ++round_;
    start_round(next);
    arrive(next);
  } else if (phase_ != Phase::Average) {
    arrive(next);
  }
}

CompositeController compose_controller(const SynthesisResult& result) {
  return CompositeController(&result.product, &result.selection, &result.bundles,
                             result.schedule);
}

// ---------------------------------------------------------------------------
// Finite-memory execution
// ---------------------------------------------------------------------------

void FiniteMemoryRunner::reset(StateId start) {
  current_ = start;
  mode_ = fm_->start_mode[start];
  if (mode_ < 0) throw InputError("strategy is undefined at the start state");
}

ActionId FiniteMemoryRunner::next_action(StateId current) {
  if (current != current_) {
    throw InputError("controller is out of sync with the simulated run");
  }
  const ActionId a = fm_->action_at(mode_, current);
  if (a < 0) throw NumericError("finite-memory strategy has no action here");
  return a;
}

void FiniteMemoryRunner::observe(StateId next) {
  mode_ = fm_->transition(mode_, next);
  if (mode_ < 0) throw NumericError("finite-memory strategy left its domain");
  current_ = next;
}

// ---------------------------------------------------------------------------
// Projection to the base model
// ---------------------------------------------------------------------------

void ProjectedController::reset(StateId start) {
  base_ = start;
  dra_ = product_->dra.initial();
  product_state_ = product_->index_of(start, dra_);
  if (product_state_ < 0) {
    throw InputError("start state does not appear in the product");
  }
  inner_->reset(product_state_);
}

ActionId ProjectedController::next_action(StateId current) {
  if (current != base_) {
    throw InputError("controller is out of sync with the simulated run");
  }
  last_action_ = inner_->next_action(product_state_);
  return last_action_;
}

void ProjectedController::observe(StateId next) {
  bool possible = false;
  for (const auto& t : product_->base.row(base_, last_action_)) {
    if (t.to == next && t.prob > 0.0) possible = true;
  }
  if (!possible) {
    throw InputError("observed transition is not part of the model");
  }
  dra_ = product_->dra.step(dra_, product_->base_dra_mask[base_]);
  base_ = next;
  product_state_ = product_->index_of(next, dra_);
  if (product_state_ < 0) throw NumericError("lost track of the product state");
  inner_->observe(product_state_);
}

// ---------------------------------------------------------------------------
// Finite-memory shortcut
// ---------------------------------------------------------------------------

std::optional<FiniteMemoryStrategy> finite_memory_shortcut(
    const ProductMdp& p, const SelectionResult& selection,
    const std::vector<Bundle>& bundles) {
  const StateId n = p.model.state_count();

  // Entry points per bundle: the jump states routed to it.
  std::vector<std::vector<StateId>> entry_states(bundles.size());
  std::vector<int> bundle_of_entry;
  {
    int max_entry = -1;
    for (const Bundle& b : bundles) max_entry = std::max(max_entry, b.entry_index);
    bundle_of_entry.assign(max_entry + 1, -1);
    for (std::size_t i = 0; i < bundles.size(); ++i) {
      bundle_of_entry[bundles[i].entry_index] = static_cast<int>(i);
    }
    for (StateId s = 0; s < n; ++s) {
      if (selection.jump_entry[s] >= 0) {
        entry_states[bundle_of_entry[selection.jump_entry[s]]].push_back(s);
      }
    }
  }

  // The shortcut drops the round structure only when, for every bundle, the
  // average-phase chain is recurrently accepting from its entry points:
  // every reachable bottom component of the (mode, state) chain meets G.
  for (std::size_t bi = 0; bi < bundles.size(); ++bi) {
    const Bundle& b = bundles[bi];
    const Mdp& cm = b.component.model;
    const StateId cn = cm.state_count();
    const int modes = b.cycle_strategy.mode_count;
    const int nodes = modes * cn;

    std::vector<std::vector<int>> adj(nodes);
    std::vector<char> seen(nodes, 0);
    std::vector<int> stack;
    for (const StateId s : entry_states[bi]) {
      const int local = b.component.local_of[s];
      const int mode = b.cycle_strategy.start_mode[local];
      const int node = mode * cn + local;
      if (!seen[node]) {
        seen[node] = 1;
        stack.push_back(node);
      }
    }
    while (!stack.empty()) {
      const int node = stack.back();
      stack.pop_back();
      const int mode = node / cn;
      const StateId s = node % cn;
      const ActionId a = b.cycle_strategy.action_at(mode, s);
      if (a < 0) return std::nullopt;  // ill-formed reachable pair: no shortcut
      for (const auto& t : cm.row(s, a)) {
        const int next_mode = b.cycle_strategy.transition(mode, t.to);
        if (next_mode < 0) return std::nullopt;
        const int to = next_mode * cn + t.to;
        adj[node].push_back(to);
        if (!seen[to]) {
          seen[to] = 1;
          stack.push_back(to);
        }
      }
    }

    std::vector<int> comp;
    const int comp_count = strongly_connected_components(adj, comp);
    std::vector<char> bottom(comp_count, 1), populated(comp_count, 0), has_g(comp_count, 0);
    for (int node = 0; node < nodes; ++node) {
      if (!seen[node]) continue;
      populated[comp[node]] = 1;
      const StateId s = node % cn;
      if (product_in_inf(p, b.pair_index, b.component.original[s])) has_g[comp[node]] = 1;
      for (const int to : adj[node]) {
        if (comp[to] != comp[node]) bottom[comp[node]] = 0;
      }
    }
    for (int c = 0; c < comp_count; ++c) {
      if (populated[c] && bottom[c] && !has_g[c]) return std::nullopt;
    }
  }

  // Combine: mode 0 reaches, a contiguous block per bundle runs its
  // average-phase strategy forever.
  std::vector<int> offset(bundles.size(), 0);
  int total_modes = 1;
  for (std::size_t i = 0; i < bundles.size(); ++i) {
    offset[i] = total_modes;
    total_modes += bundles[i].cycle_strategy.mode_count;
  }

  FiniteMemoryStrategy fm;
  fm.mode_count = total_modes;
  fm.state_count = n;
  fm.act.assign(static_cast<std::size_t>(total_modes) * n, -1);
  fm.next_mode.assign(static_cast<std::size_t>(total_modes) * n, -1);
  fm.start_mode.assign(n, -1);

  const auto bundle_mode = [&](StateId s) {
    const int bi = bundle_of_entry[selection.jump_entry[s]];
    const Bundle& b = bundles[bi];
    return offset[bi] + b.cycle_strategy.start_mode[b.component.local_of[s]];
  };
  for (StateId s = 0; s < n; ++s) {
    if (selection.jump_entry[s] >= 0) {
      fm.start_mode[s] = bundle_mode(s);
      fm.next_mode[s] = bundle_mode(s);  // mode 0 row
    } else {
      fm.start_mode[s] = 0;
      fm.next_mode[s] = 0;
      const int a = selection.reach_policy.action_at(s);
      if (a >= 0) fm.act[s] = a;
    }
  }
  for (std::size_t bi = 0; bi < bundles.size(); ++bi) {
    const Bundle& b = bundles[bi];
    const StateId cn = b.component.model.state_count();
    for (int mode = 0; mode < b.cycle_strategy.mode_count; ++mode) {
      for (StateId local = 0; local < cn; ++local) {
        const StateId ps = b.component.original[local];
        const std::size_t at = static_cast<std::size_t>(offset[bi] + mode) * n + ps;
        fm.act[at] = b.cycle_strategy.action_at(mode, local);
        const int next_mode = b.cycle_strategy.transition(mode, local);
        fm.next_mode[at] = next_mode < 0 ? -1 : offset[bi] + next_mode;
      }
    }
  }
  return fm;
}

// ---------------------------------------------------------------------------
// End-to-end synthesis
// ---------------------------------------------------------------------------

SynthesisResult synthesize(const Mdp& m, const Dra& a, const std::string& pi_sur,
                           const SynthesisOptions& opts) {
  SynthesisResult r;
  r.product = build_product(m, a, pi_sur);
  if (lift_surveillance(r.product).empty()) {
    throw InfeasibleError("no reachable state carries the surveillance proposition");
  }
  r.entries = compute_maecs(r.product);
  if (r.entries.empty()) {
    throw InfeasibleError("the specification admits no accepting end component");
  }

  struct Prepared {
    ComponentModel component;
    ReducedMdp reduced;
    AcpsSolution average;
  };
  std::vector<std::optional<Prepared>> prepared(r.entries.size());
  ReduceOptions reduce_opts;
  reduce_opts.action_cap = opts.action_cap;
  for (std::size_t i = 0; i < r.entries.size(); ++i) {
    MaecEntry& entry = r.entries[i];
    bool has_surveillance = false;
    for (const StateId s : entry.component.states) {
      if (r.product.surveillance[s]) has_surveillance = true;
    }
    if (!has_surveillance) continue;  // no cycle ever completes: infinite value
    Prepared prep;
    prep.component =
        extract_component(r.product.model, entry.component, r.product.surveillance);
    prep.reduced = reduce_maec(prep.component, reduce_opts);
    AcpsOptions acps_opts;
    if (opts.certificate_tol > 0.0) acps_opts.certificate_tol = opts.certificate_tol;
    prep.average = acps_solve(prep.reduced, acps_opts);
    entry.value = prep.average.gain;
    entry.value_known = true;
    prepared[i] = std::move(prep);
  }

  r.selection = select_target_maecs(r.product, r.entries);

  for (const int e : r.selection.selected) {
    Prepared& prep = *prepared[e];
    Bundle b;
    b.entry_index = e;
    b.pair_index = r.entries[e].pair_index;
    b.value = r.entries[e].value;
    b.component = std::move(prep.component);
    b.reduced = std::move(prep.reduced);
    b.average = std::move(prep.average);
    std::vector<bool> g_state(b.component.model.state_count(), false);
    for (StateId local = 0; local < b.component.model.state_count(); ++local) {
      g_state[local] = product_in_inf(r.product, b.pair_index, b.component.original[local]);
    }
    b.acceptance_policy = build_acceptance_strategy(b.component, g_state, &b.acceptance_cost);
    b.cycle_strategy = build_acpc_strategy(b.component, b.reduced, b.average);
    r.bundles.push_back(std::move(b));
  }

  double g_max = 0.0;
  for (StateId s = 0; s < r.product.model.state_count(); ++s) {
    for (const ActionId act : r.product.model.enabled(s)) {
      g_max = std::max(g_max, r.product.model.cost(s, act));
    }
  }
  r.g_max = g_max;
  r.schedule.g_max = g_max;
  r.schedule.l_floor = opts.l_floor;
  r.schedule.early_exit = opts.early_exit;
  r.schedule.phase1_timeout = opts.phase1_timeout;

  if (opts.want_shortcut) {
    r.shortcut = finite_memory_shortcut(r.product, r.selection, r.bundles);
  }
  return r;
}

}  // namespace acpc
