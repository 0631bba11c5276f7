#include "acpc/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <string>
#include <utility>

#include <Eigen/Dense>

#include "acpc/linalg.hpp"
#include "acpc/types.hpp"

namespace acpc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Expected total cost of a fixed proper policy on an SSP instance, by the
// absorbing-chain linear system (I - Q) c = g over the non-terminal states.
std::vector<double> evaluate_ssp_policy(const Mdp& m, StateId terminal,
                                        const std::vector<ActionId>& policy) {
  const StateId n = m.state_count();
  std::vector<int> slot(n, -1);
  std::vector<StateId> order;
  for (StateId s = 0; s < n; ++s) {
    if (s == terminal) continue;
    slot[s] = static_cast<int>(order.size());
    order.push_back(s);
  }
  const int k = static_cast<int>(order.size());
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(k, k);
  Eigen::VectorXd g(k);
  for (int i = 0; i < k; ++i) {
    const StateId s = order[i];
    a(i, i) = 1.0;
    g(i) = m.cost(s, policy[s]);
    for (const auto& t : m.row(s, policy[s])) {
      if (t.to == terminal) continue;
      a(i, slot[t.to]) -= t.prob;
    }
  }
  const Eigen::VectorXd c = lu_solve(a, g);
  std::vector<double> value(n, 0.0);
  for (int i = 0; i < k; ++i) value[order[i]] = c(i);
  return value;
}

double bellman_backup(const Mdp& m, StateId s, const std::vector<double>& v,
                      ActionId* argmin) {
  double best = kInf;
  ActionId arg = -1;
  for (const ActionId a : m.enabled(s)) {
    double q = m.cost(s, a);
    for (const auto& t : m.row(s, a)) q += t.prob * v[t.to];
    if (q < best) {
      best = q;
      arg = a;
    }
  }
  if (argmin != nullptr) *argmin = arg;
  return best;
}

}  // namespace

SspInstance make_ssp(const Mdp& base, const std::vector<JumpGroup>& groups) {
  MdpBuilder b;
  for (const std::string& prop : base.ap()) b.add_prop(prop);
  for (StateId s = 0; s < base.state_count(); ++s) {
    b.add_state(base.state_name(s), base.label(s));
  }
  const StateId terminal = b.add_state("terminal");
  for (ActionId a = 0; a < base.action_count(); ++a) b.add_action(base.action_name(a));

  for (StateId s = 0; s < base.state_count(); ++s) {
    for (const ActionId a : base.enabled(s)) {
      b.set_cost(s, a, base.cost(s, a));
      for (const auto& t : base.row(s, a)) b.add_transition(s, a, t.to, t.prob);
    }
  }

  const ActionId first_synthetic = base.action_count();
  for (std::size_t k = 0; k < groups.size(); ++k) {
    const JumpGroup& group = groups[k];
    if (!(group.cost >= 0.0) || !std::isfinite(group.cost)) {
      throw InputError("jump group '" + group.name + "' has an invalid cost");
    }
    const ActionId jump = b.add_action(group.name.empty() ? "jump" + std::to_string(k) : group.name);
    for (const StateId s : group.sources) {
      b.add_transition(s, jump, terminal, 1.0);
      b.set_cost(s, jump, group.cost);
    }
  }
  const ActionId halt = b.add_action("halt");
  b.add_transition(terminal, halt, terminal, 1.0);
  b.set_cost(terminal, halt, 0.0);
  if (base.initial().has_value()) b.set_initial(*base.initial());
  else b.set_initial(0);

  SspInstance inst;
  inst.model = b.build();
  inst.terminal = terminal;
  inst.first_synthetic = first_synthetic;
  return inst;
}

CollapseResult collapse_zero_cost_ecs(const SspInstance& inst) {
  const Mdp& m = inst.model;
  const StateId n = m.state_count();

  std::vector<bool> alive(n, true);
  alive[inst.terminal] = false;
  const auto zero_cost = [&m](StateId s, ActionId a) { return m.cost(s, a) == 0.0; };
  std::vector<EndComponent> ecs = mec_decompose_filtered(m, alive, zero_cost);

  CollapseResult r;
  r.components = ecs;
  r.component_of.assign(n, -1);
  for (std::size_t c = 0; c < ecs.size(); ++c) {
    for (const StateId s : ecs[c].states) r.component_of[s] = static_cast<int>(c);
  }

  // The component's internal actions disappear inside the quotient state.
  std::vector<std::vector<ActionId>> internal(n);
  for (const EndComponent& ec : ecs) {
    for (std::size_t i = 0; i < ec.states.size(); ++i) internal[ec.states[i]] = ec.actions[i];
  }
  const auto is_internal = [&internal](StateId s, ActionId a) {
    return std::binary_search(internal[s].begin(), internal[s].end(), a);
  };

  // Quotient states in ascending order of their smallest original member.
  r.state_map.assign(n, -1);
  std::vector<std::vector<StateId>> members;
  for (StateId s = 0; s < n; ++s) {
    if (r.state_map[s] >= 0) continue;
    const StateId q = static_cast<StateId>(members.size());
    if (r.component_of[s] >= 0) {
      const EndComponent& ec = ecs[r.component_of[s]];
      for (const StateId w : ec.states) r.state_map[w] = q;
      members.push_back(ec.states);
    } else {
      r.state_map[s] = q;
      members.push_back({s});
    }
  }

  MdpBuilder b;
  for (const std::string& prop : m.ap()) b.add_prop(prop);
  for (const auto& group : members) {
    std::string name = m.state_name(group[0]);
    if (group.size() > 1) name += "+" + std::to_string(group.size() - 1);
    b.add_state(name, m.label(group[0]));
  }

  std::vector<double> acc(members.size(), 0.0);
  for (std::size_t q = 0; q < members.size(); ++q) {
    for (const StateId s : members[q]) {
      for (const ActionId a : m.enabled(s)) {
        if (is_internal(s, a)) continue;
        const ActionId fresh = b.add_action(m.action_name(a));
        r.action_origin.push_back({s, a});
        std::fill(acc.begin(), acc.end(), 0.0);
        for (const auto& t : m.row(s, a)) acc[r.state_map[t.to]] += t.prob;
        for (std::size_t to = 0; to < acc.size(); ++to) {
          if (acc[to] > 0.0) {
            b.add_transition(static_cast<StateId>(q), fresh, static_cast<StateId>(to), acc[to]);
          }
        }
        b.set_cost(static_cast<StateId>(q), fresh, m.cost(s, a));
      }
    }
  }
  b.set_initial(r.state_map[m.initial().value_or(0)]);

  r.quotient.model = b.build();
  r.quotient.terminal = r.state_map[inst.terminal];
  // No quotient-level synthetic marker: synthetic-ness maps through
  // action_origin back to the original instance.
  r.quotient.first_synthetic = r.quotient.model.action_count();
  return r;
}

SspSolution ssp_solve(const SspInstance& inst, const SspOptions& opts) {
  const Mdp& m = inst.model;
  const StateId n = m.state_count();

  // Properness precondition: the terminal must be reachable almost surely
  // from everywhere; anything else is a caller bug, reported verbatim.
  {
    std::vector<bool> target(n, false);
    target[inst.terminal] = true;
    const ReachResult reach = almost_sure_reach(m, target);
    std::string missing;
    int shown = 0;
    for (StateId s = 0; s < n; ++s) {
      if (reach.member[s]) continue;
      if (shown++ == 4) {
        missing += ", ...";
        break;
      }
      if (!missing.empty()) missing += ", ";
      missing += m.state_name(s);
    }
    if (!missing.empty()) {
      throw InputError("terminal not reachable almost surely from: " + missing);
    }
  }

  const CollapseResult col = collapse_zero_cost_ecs(inst);
  const Mdp& qm = col.quotient.model;
  const StateId qn = qm.state_count();
  const StateId qt = col.quotient.terminal;

  // Value iteration from zero, monotone from below on the quotient.
  std::vector<double> v(qn, 0.0), nv(qn, 0.0);
  double residual = kInf;
  for (long iter = 0; iter < opts.max_iterations && residual >= opts.vi_tol; ++iter) {
    residual = 0.0;
    for (StateId s = 0; s < qn; ++s) {
      nv[s] = (s == qt) ? 0.0 : bellman_backup(qm, s, v, nullptr);
      residual = std::max(residual, std::abs(nv[s] - v[s]));
    }
    v.swap(nv);
  }
  if (residual >= opts.vi_tol) {
    throw NumericError("ssp value iteration did not reach residual " +
                       std::to_string(opts.vi_tol));
  }

  // Greedy extraction, then policy-iteration refinement on exact values
  // until the policy is stable and certified by its Bellman residual.
  const auto greedy = [&](const std::vector<double>& val,
                          const std::vector<ActionId>& previous) {
    std::vector<ActionId> pol(qn, -1);
    for (StateId s = 0; s < qn; ++s) {
      ActionId arg = -1;
      const double best = bellman_backup(qm, s, val, &arg);
      pol[s] = arg;
      if (!previous.empty() && previous[s] != arg) {
        // Switch only on strict improvement so the iteration cannot cycle.
        double q = qm.cost(s, previous[s]);
        for (const auto& t : qm.row(s, previous[s])) q += t.prob * val[t.to];
        if (q <= best + 1e-12 * std::max(1.0, std::abs(best))) pol[s] = previous[s];
      }
    }
    return pol;
  };

  std::vector<ActionId> qpolicy = greedy(v, {});
  std::vector<double> qvalue;
  bool settled = false;
  for (int round = 0; round < 64; ++round) {
    qvalue = evaluate_ssp_policy(qm, qt, qpolicy);
    std::vector<ActionId> next = greedy(qvalue, qpolicy);
    if (next == qpolicy) {
      settled = true;
      break;
    }
    qpolicy = std::move(next);
  }
  if (!settled) throw NumericError("ssp policy iteration did not settle");
  for (StateId s = 0; s < qn; ++s) {
    if (s == qt) continue;
    const double best = bellman_backup(qm, s, qvalue, nullptr);
    if (std::abs(qvalue[s] - best) > opts.certificate_tol * std::max(1.0, std::abs(best))) {
      throw NumericError("ssp certificate failed at state " + qm.state_name(s));
    }
  }

  // Lift to the original instance. Collapsed members not owning the chosen
  // quotient action route to the owner through internal zero-cost actions,
  // layered so every step moves strictly closer to the owner.
  SspSolution out;
  out.first_synthetic = inst.first_synthetic;
  out.value.assign(n, 0.0);
  out.policy.assign(n, -1);
  for (StateId s = 0; s < n; ++s) out.value[s] = qvalue[col.state_map[s]];

  std::vector<char> routed(n, 0);
  for (StateId s = 0; s < n; ++s) {
    const auto [owner, action] = col.action_origin[qpolicy[col.state_map[s]]];
    if (owner == s) {
      out.policy[s] = action;
      routed[s] = 1;
    }
  }
  for (const EndComponent& ec : col.components) {
    bool grew = true;
    while (grew) {
      grew = false;
      for (std::size_t i = 0; i < ec.states.size(); ++i) {
        const StateId s = ec.states[i];
        if (routed[s]) continue;
        for (const ActionId a : ec.actions[i]) {
          bool hits = false;
          for (const auto& t : m.row(s, a)) {
            if (routed[t.to]) hits = true;
          }
          if (hits) {
            out.policy[s] = a;
            routed[s] = 1;
            grew = true;
            break;
          }
        }
      }
    }
    for (const StateId s : ec.states) {
      if (!routed[s]) throw NumericError("collapsed component has no route to its exit");
    }
  }

  // Full certificate on the original instance: evaluate the lifted policy
  // exactly and require the Bellman equation to hold everywhere.
  const std::vector<double> lifted = evaluate_ssp_policy(m, inst.terminal, out.policy);
  for (StateId s = 0; s < n; ++s) {
    if (s == inst.terminal) continue;
    const double best = bellman_backup(m, s, lifted, nullptr);
    if (std::abs(lifted[s] - best) > opts.certificate_tol * std::max(1.0, std::abs(best))) {
      throw NumericError("ssp lift certificate failed at state " + m.state_name(s));
    }
    if (std::abs(lifted[s] - out.value[s]) >
        opts.certificate_tol * std::max(1.0, std::abs(lifted[s]))) {
      throw NumericError("ssp lifted values disagree with the quotient at state " +
                         m.state_name(s));
    }
  }
  out.value = lifted;
  out.value[inst.terminal] = 0.0;
  return out;
}

ReducedMdp reduce_maec(const ComponentModel& component, const ReduceOptions& opts) {
  const Mdp& m = component.model;
  const StateId n = m.state_count();

  std::vector<StateId> sur;
  for (StateId s = 0; s < n; ++s) {
    if (component.surveillance[s]) sur.push_back(s);
  }
  if (sur.empty()) throw InputError("component has no surveillance state");

  std::vector<StateId> order;
  if (opts.elimination_order.empty()) {
    for (StateId s = 0; s < n; ++s) {
      if (!component.surveillance[s]) order.push_back(s);
    }
  } else {
    order = opts.elimination_order;
    std::vector<char> seen(n, 0);
    for (const StateId s : order) {
      if (s < 0 || s >= n || component.surveillance[s] || seen[s]) {
        throw InputError("elimination order must list each non-surveillance state once");
      }
      seen[s] = 1;
    }
    if (static_cast<StateId>(order.size()) + static_cast<StateId>(sur.size()) != n) {
      throw InputError("elimination order must cover all non-surveillance states");
    }
  }

  struct Work {
    PartialStrategy strategy;
    std::vector<double> row;  // dense over local states
    double cost = 0.0;
  };
  std::vector<std::vector<Work>> acts(n);
  std::size_t total = 0;
  for (StateId s = 0; s < n; ++s) {
    for (const ActionId a : m.enabled(s)) {
      Work w;
      w.strategy.assign(s, a);
      w.row.assign(n, 0.0);
      for (const auto& t : m.row(s, a)) w.row[t.to] += t.prob;
      w.cost = m.cost(s, a);
      acts[s].push_back(std::move(w));
      ++total;
    }
  }
  if (total > opts.action_cap) {
    throw CapError("component reduction exceeds the action cap (" +
                   std::to_string(opts.action_cap) + ") before elimination");
  }

  for (const StateId v : order) {
    const std::vector<Work> outgoing = std::move(acts[v]);
    acts[v].clear();
    total -= outgoing.size();

    // Snapshot of the actions that can reach v; they are all replaced.
    std::vector<std::pair<StateId, std::size_t>> incoming;
    for (StateId u = 0; u < n; ++u) {
      if (u == v) continue;
      for (std::size_t i = 0; i < acts[u].size(); ++i) {
        if (acts[u][i].row[v] > 0.0) incoming.push_back({u, i});
      }
    }

    std::vector<std::vector<Work>> pending(n);
    for (const Work& z : outgoing) {
      const double escape = 1.0 - z.row[v];
      // An action that returns to v almost surely dies with v. The threshold
      // also absorbs float noise on probabilities that are exactly 1.
      if (escape <= 1e-12) continue;
      for (const auto& [u, idx] : incoming) {
        const Work& into = acts[u][idx];
        if (into.strategy.conflicts_with(z.strategy)) continue;
        Work nw;
        nw.strategy = PartialStrategy::merged(into.strategy, z.strategy);
        nw.row.assign(n, 0.0);
        const double mass = into.row[v];
        for (StateId x = 0; x < n; ++x) {
          if (x == v) continue;
          nw.row[x] = into.row[x] + mass * z.row[x] / escape;
        }
        nw.cost = into.cost + mass * (z.cost / escape);
        pending[u].push_back(std::move(nw));
        if (total + pending[u].size() > opts.action_cap) {
          throw CapError("component reduction exceeds the action cap (" +
                         std::to_string(opts.action_cap) + ") while eliminating " +
                         m.state_name(v));
        }
      }
    }

    // Rebuild each touched state: survivors keep their construction order,
    // new actions follow, duplicates by strategy keep the first occurrence.
    std::vector<char> drop_marks;
    for (StateId u = 0; u < n; ++u) {
      bool touched = !pending[u].empty();
      for (const auto& [iu, idx] : incoming) {
        if (iu == u) touched = true;
      }
      if (!touched) continue;
      drop_marks.assign(acts[u].size(), 0);
      for (const auto& [iu, idx] : incoming) {
        if (iu == u) drop_marks[idx] = 1;
      }
      std::vector<Work> rebuilt;
      std::set<std::vector<std::pair<StateId, ActionId>>> seen;
      for (std::size_t i = 0; i < acts[u].size(); ++i) {
        if (drop_marks[i]) continue;
        if (seen.insert(acts[u][i].strategy.assignment).second) {
          rebuilt.push_back(std::move(acts[u][i]));
        }
      }
      for (Work& w : pending[u]) {
        if (seen.insert(w.strategy.assignment).second) rebuilt.push_back(std::move(w));
      }
      total -= acts[u].size();
      total += rebuilt.size();
      acts[u] = std::move(rebuilt);
      if (acts[u].empty()) {
        throw InputError("state " + m.state_name(u) +
                         " lost all actions during reduction; the component is not an "
                         "accepting end component");
      }
    }
    if (total > opts.action_cap) {
      throw CapError("component reduction exceeds the action cap (" +
                     std::to_string(opts.action_cap) + ") after eliminating " +
                     m.state_name(v));
    }
  }

  ReducedMdp r;
  r.states = sur;
  std::vector<int> reduced_slot(n, -1);
  for (std::size_t i = 0; i < sur.size(); ++i) reduced_slot[sur[i]] = static_cast<int>(i);
  r.actions.resize(sur.size());
  for (std::size_t i = 0; i < sur.size(); ++i) {
    for (Work& w : acts[sur[i]]) {
      ReducedAction ra;
      ra.strategy = std::move(w.strategy);
      ra.cost = w.cost;
      ra.row.assign(sur.size(), 0.0);
      for (StateId x = 0; x < n; ++x) {
        if (w.row[x] == 0.0) continue;
        if (reduced_slot[x] < 0) {
          throw NumericError("reduction left probability mass on an eliminated state");
        }
        ra.row[reduced_slot[x]] = w.row[x];
      }
      r.actions[i].push_back(std::move(ra));
    }
    std::sort(r.actions[i].begin(), r.actions[i].end(),
              [](const ReducedAction& a, const ReducedAction& b) {
                return a.strategy < b.strategy;
              });
  }
  return r;
}

AcpsSolution acps_solve(const ReducedMdp& reduced, const AcpsOptions& opts) {
  const int n = static_cast<int>(reduced.states.size());
  if (n == 0) throw InputError("reduced model has no states");
  for (const auto& list : reduced.actions) {
    if (list.empty()) throw InputError("reduced model has a state without actions");
  }

  const double kappa = opts.kappa;
  const double keep = 1.0 - kappa;

  // Relative value iteration on the aperiodicity transform: every action
  // keeps weight kappa on its own state, costs scale by (1 - kappa), and the
  // resulting gain is divided by (1 - kappa) again on the way out.
  const auto backup = [&](int i, const std::vector<double>& v, int* argmin) {
    double best = kInf;
    int arg = -1;
    const auto& list = reduced.actions[i];
    for (int a = 0; a < static_cast<int>(list.size()); ++a) {
      double q = keep * list[a].cost + kappa * v[i];
      for (int j = 0; j < n; ++j) q += keep * list[a].row[j] * v[j];
      if (q < best) {
        best = q;
        arg = a;
      }
    }
    if (argmin != nullptr) *argmin = arg;
    return best;
  };

  std::vector<double> v(n, 0.0), tv(n, 0.0);
  double lambda_t = 0.0;
  double span = kInf;
  for (long iter = 0; iter < opts.max_iterations && span >= opts.span_tol; ++iter) {
    double lo = kInf, hi = -kInf;
    for (int i = 0; i < n; ++i) {
      tv[i] = backup(i, v, nullptr);
      lo = std::min(lo, tv[i] - v[i]);
      hi = std::max(hi, tv[i] - v[i]);
    }
    span = hi - lo;
    lambda_t = 0.5 * (lo + hi);
    const double base = tv[0];
    for (int i = 0; i < n; ++i) v[i] = tv[i] - base;
  }
  if (span >= opts.span_tol) {
    throw NumericError("relative value iteration did not reach span " +
                       std::to_string(opts.span_tol));
  }

  AcpsSolution out;
  out.bias = v;
  out.policy.assign(n, -1);
  for (int i = 0; i < n; ++i) backup(i, v, &out.policy[i]);
  const double rvi_gain = lambda_t / keep;

  // Exact certificate of the greedy policy: recurrent classes, stationary
  // gains, transient absorption. The chain analysis is local on purpose.
  std::vector<std::vector<char>> reach(n, std::vector<char>(n, 0));
  for (int i = 0; i < n; ++i) {
    reach[i][i] = 1;
    const auto& row = reduced.actions[i][out.policy[i]].row;
    for (int j = 0; j < n; ++j) {
      if (row[j] > 0.0) reach[i][j] = 1;
    }
  }
  for (int k = 0; k < n; ++k) {
    for (int i = 0; i < n; ++i) {
      if (!reach[i][k]) continue;
      for (int j = 0; j < n; ++j) {
        if (reach[k][j]) reach[i][j] = 1;
      }
    }
  }
  std::vector<int> class_of(n, -1);
  std::vector<std::vector<int>> classes;
  for (int i = 0; i < n; ++i) {
    if (class_of[i] >= 0) continue;
    bool recurrent = true;
    for (int j = 0; j < n && recurrent; ++j) {
      if (reach[i][j] && !reach[j][i]) recurrent = false;
    }
    if (!recurrent) continue;
    std::vector<int> cls;
    for (int j = 0; j < n; ++j) {
      if (reach[i][j] && reach[j][i]) {
        cls.push_back(j);
        class_of[j] = static_cast<int>(classes.size());
      }
    }
    classes.push_back(std::move(cls));
  }

  std::vector<double> class_gain(classes.size(), 0.0);
  for (std::size_t c = 0; c < classes.size(); ++c) {
    const auto& cls = classes[c];
    const int k = static_cast<int>(cls.size());
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(k, k);
    Eigen::VectorXd b = Eigen::VectorXd::Zero(k);
    for (int col = 0; col < k; ++col) {
      const auto& row = reduced.actions[cls[col]][out.policy[cls[col]]].row;
      for (int ri = 0; ri < k; ++ri) a(ri, col) = row[cls[ri]];
      a(col, col) -= 1.0;
    }
    for (int col = 0; col < k; ++col) a(k - 1, col) = 1.0;
    b(k - 1) = 1.0;
    const Eigen::VectorXd mu = lu_solve(a, b);
    double gain = 0.0;
    for (int i = 0; i < k; ++i) {
      gain += mu(i) * reduced.actions[cls[i]][out.policy[cls[i]]].cost;
    }
    class_gain[c] = gain;
  }

  std::vector<double> state_gain(n, 0.0);
  std::vector<int> transient;
  for (int i = 0; i < n; ++i) {
    if (class_of[i] >= 0) state_gain[i] = class_gain[class_of[i]];
    else transient.push_back(i);
  }
  if (!transient.empty()) {
    const int k = static_cast<int>(transient.size());
    std::vector<int> slot(n, -1);
    for (int i = 0; i < k; ++i) slot[transient[i]] = i;
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(k, k);
    Eigen::VectorXd b = Eigen::VectorXd::Zero(k);
    for (int i = 0; i < k; ++i) {
      a(i, i) = 1.0;
      const auto& row = reduced.actions[transient[i]][out.policy[transient[i]]].row;
      for (int j = 0; j < n; ++j) {
        if (row[j] == 0.0) continue;
        if (slot[j] >= 0) a(i, slot[j]) -= row[j];
        else b(i) += row[j] * state_gain[j];
      }
    }
    const Eigen::VectorXd x = lu_solve(a, b);
    for (int i = 0; i < k; ++i) state_gain[transient[i]] = x(i);
  }

  out.gain = state_gain[0];
  double spread = std::abs(out.gain - rvi_gain);
  for (int i = 0; i < n; ++i) spread = std::max(spread, std::abs(state_gain[i] - out.gain));
  if (spread > opts.certificate_tol) {
    throw NumericError("average-cost certificate spread " + std::to_string(spread) +
                       " exceeds tolerance");
  }
  return out;
}

}  // namespace acpc
