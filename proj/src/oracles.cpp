#include "acpc/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "acpc/linalg.hpp"

namespace acpc {

namespace ltl {

LtlPtr tt() { return std::make_shared<Ltl>(Ltl{Ltl::Op::True, -1, nullptr, nullptr}); }
LtlPtr prop(int index) { return std::make_shared<Ltl>(Ltl{Ltl::Op::Prop, index, nullptr, nullptr}); }
LtlPtr negate(LtlPtr f) { return std::make_shared<Ltl>(Ltl{Ltl::Op::Not, -1, std::move(f), nullptr}); }
LtlPtr conj(LtlPtr a, LtlPtr b) {
  return std::make_shared<Ltl>(Ltl{Ltl::Op::And, -1, std::move(a), std::move(b)});
}
LtlPtr disj(LtlPtr a, LtlPtr b) { return negate(conj(negate(std::move(a)), negate(std::move(b)))); }
LtlPtr implies(LtlPtr a, LtlPtr b) { return disj(negate(std::move(a)), std::move(b)); }
LtlPtr next(LtlPtr f) { return std::make_shared<Ltl>(Ltl{Ltl::Op::Next, -1, std::move(f), nullptr}); }
LtlPtr until(LtlPtr a, LtlPtr b) {
  return std::make_shared<Ltl>(Ltl{Ltl::Op::Until, -1, std::move(a), std::move(b)});
}
LtlPtr always(LtlPtr f) { return std::make_shared<Ltl>(Ltl{Ltl::Op::Always, -1, std::move(f), nullptr}); }
LtlPtr eventually(LtlPtr f) {
  return std::make_shared<Ltl>(Ltl{Ltl::Op::Eventually, -1, std::move(f), nullptr});
}

std::string to_string(const LtlPtr& f, const std::vector<std::string>& ap) {
  switch (f->op) {
    case Ltl::Op::True: return "true";
    case Ltl::Op::Prop: return ap.at(f->prop);
    case Ltl::Op::Not: return "!(" + to_string(f->lhs, ap) + ")";
    case Ltl::Op::And: return "(" + to_string(f->lhs, ap) + " & " + to_string(f->rhs, ap) + ")";
    case Ltl::Op::Next: return "X(" + to_string(f->lhs, ap) + ")";
    case Ltl::Op::Until: return "(" + to_string(f->lhs, ap) + " U " + to_string(f->rhs, ap) + ")";
    case Ltl::Op::Always: return "G(" + to_string(f->lhs, ap) + ")";
    case Ltl::Op::Eventually: return "F(" + to_string(f->lhs, ap) + ")";
  }
  return "?";
}

}  // namespace ltl

namespace {

// Truth vectors over the canonical lasso positions: 0..|prefix|-1 followed by
// one copy of the cycle; the successor of the last position wraps to the
// cycle start. Until/Always are the least/greatest fixpoints of their
// one-step unfoldings on this finite structure, which is exact for
// ultimately periodic words.
struct LassoEval {
  const LassoWord& w;
  std::size_t len;
  std::map<const Ltl*, std::vector<char>> memo;

  explicit LassoEval(const LassoWord& word) : w(word), len(word.prefix.size() + word.cycle.size()) {
    if (w.cycle.empty()) throw InputError("lasso word has an empty cycle");
  }

  std::size_t succ(std::size_t p) const { return p + 1 < len ? p + 1 : w.prefix.size(); }
  LabelMask letter(std::size_t p) const {
    return p < w.prefix.size() ? w.prefix[p] : w.cycle[p - w.prefix.size()];
  }

  const std::vector<char>& eval(const LtlPtr& f) {
    auto it = memo.find(f.get());
    if (it != memo.end()) return it->second;
    std::vector<char> v(len, 0);
    switch (f->op) {
      case Ltl::Op::True:
        std::fill(v.begin(), v.end(), 1);
        break;
      case Ltl::Op::Prop:
        for (std::size_t p = 0; p < len; ++p) v[p] = (letter(p) >> f->prop) & 1u;
        break;
      case Ltl::Op::Not: {
        const auto& a = eval(f->lhs);
        for (std::size_t p = 0; p < len; ++p) v[p] = !a[p];
        break;
      }
      case Ltl::Op::And: {
        const auto& a = eval(f->lhs);
        const auto& b = eval(f->rhs);
        for (std::size_t p = 0; p < len; ++p) v[p] = a[p] && b[p];
        break;
      }
      case Ltl::Op::Next: {
        const auto& a = eval(f->lhs);
        for (std::size_t p = 0; p < len; ++p) v[p] = a[succ(p)];
        break;
      }
      case Ltl::Op::Until: {
        const auto& a = eval(f->lhs);
        const auto& b = eval(f->rhs);
        for (std::size_t p = 0; p < len; ++p) v[p] = b[p];
        for (bool changed = true; changed;) {
          changed = false;
          for (std::size_t p = len; p-- > 0;) {
            if (!v[p] && a[p] && v[succ(p)]) {
              v[p] = 1;
              changed = true;
            }
          }
        }
        break;
      }
      case Ltl::Op::Eventually: {
        const auto& b = eval(f->lhs);
        for (std::size_t p = 0; p < len; ++p) v[p] = b[p];
        for (bool changed = true; changed;) {
          changed = false;
          for (std::size_t p = len; p-- > 0;) {
            if (!v[p] && v[succ(p)]) {
              v[p] = 1;
              changed = true;
            }
          }
        }
        break;
      }
      case Ltl::Op::Always: {
        const auto& a = eval(f->lhs);
        for (std::size_t p = 0; p < len; ++p) v[p] = a[p];
        for (bool changed = true; changed;) {
          changed = false;
          for (std::size_t p = len; p-- > 0;) {
            if (v[p] && !v[succ(p)]) {
              v[p] = 0;
              changed = true;
            }
          }
        }
        break;
      }
    }
    return memo.emplace(f.get(), std::move(v)).first->second;
  }
};

}  // namespace

bool ltl_eval_lasso(const LtlPtr& f, const LassoWord& w) {
  LassoEval ev(w);
  return ev.eval(f)[0] != 0;
}

bool dra_accepts_lasso(const Dra& a, const LassoWord& w) {
  if (w.cycle.empty()) throw InputError("lasso word has an empty cycle");
  DraStateId q = a.initial();
  for (const LabelMask letter : w.prefix) q = a.step(q, letter);

  // Pump the cycle until the automaton state at a cycle boundary repeats.
  std::vector<DraStateId> boundary;
  std::vector<std::vector<DraStateId>> visited_per_lap;
  while (true) {
    auto it = std::find(boundary.begin(), boundary.end(), q);
    if (it != boundary.end()) {
      const std::size_t first = static_cast<std::size_t>(it - boundary.begin());
      std::vector<bool> periodic(a.state_count(), false);
      for (std::size_t lap = first; lap < visited_per_lap.size(); ++lap) {
        for (const DraStateId v : visited_per_lap[lap]) periodic[v] = true;
      }
      for (std::size_t k = 0; k < a.pairs().size(); ++k) {
        bool hits_fin = false, hits_inf = false;
        for (DraStateId v = 0; v < a.state_count(); ++v) {
          if (!periodic[v]) continue;
          if (a.in_fin(static_cast<int>(k), v)) hits_fin = true;
          if (a.in_inf(static_cast<int>(k), v)) hits_inf = true;
        }
        if (!hits_fin && hits_inf) return true;
      }
      return false;
    }
    boundary.push_back(q);
    std::vector<DraStateId> lap;
    for (const LabelMask letter : w.cycle) {
      q = a.step(q, letter);
      lap.push_back(q);
    }
    visited_per_lap.push_back(std::move(lap));
  }
}

std::vector<EndComponent> enumerate_ecs(const Mdp& m) {
  const StateId n = m.state_count();
  if (n > 8) throw CapError("enumerate_ecs is guarded to at most 8 states");

  std::vector<EndComponent> out;
  for (unsigned subset = 1; subset < (1u << n); ++subset) {
    std::vector<StateId> states;
    for (StateId s = 0; s < n; ++s) {
      if ((subset >> s) & 1u) states.push_back(s);
    }
    // Candidate actions per state: support contained in the subset.
    std::vector<std::vector<ActionId>> candidates(states.size());
    bool viable = true;
    for (std::size_t i = 0; i < states.size() && viable; ++i) {
      for (const ActionId a : m.enabled(states[i])) {
        bool inside = true;
        for (const auto& t : m.row(states[i], a)) {
          if (!((subset >> t.to) & 1u)) inside = false;
        }
        if (inside) candidates[i].push_back(a);
      }
      if (candidates[i].empty()) viable = false;
    }
    if (!viable) continue;

    // Enumerate all choices of a non-empty action subset per state.
    std::vector<unsigned> pick(states.size(), 1);  // bitmask over candidates[i]
    while (true) {
      // Strong connectivity of the chosen sub-graph restricted to the subset.
      std::vector<std::vector<int>> adj(states.size());
      std::vector<int> local(n, -1);
      for (std::size_t i = 0; i < states.size(); ++i) local[states[i]] = static_cast<int>(i);
      for (std::size_t i = 0; i < states.size(); ++i) {
        for (std::size_t c = 0; c < candidates[i].size(); ++c) {
          if (!((pick[i] >> c) & 1u)) continue;
          for (const auto& t : m.row(states[i], candidates[i][c])) {
            adj[i].push_back(local[t.to]);
          }
        }
      }
      std::vector<std::vector<int>> radj(states.size());
      for (std::size_t i = 0; i < states.size(); ++i) {
        for (const int w : adj[i]) radj[w].push_back(static_cast<int>(i));
      }
      const auto reaches_all = [&](const std::vector<std::vector<int>>& edges) {
        std::vector<bool> seen(states.size(), false);
        std::vector<int> stack{0};
        seen[0] = true;
        while (!stack.empty()) {
          const int v = stack.back();
          stack.pop_back();
          for (const int w : edges[v]) {
            if (!seen[w]) {
              seen[w] = true;
              stack.push_back(w);
            }
          }
        }
        return std::all_of(seen.begin(), seen.end(), [](bool b) { return b; });
      };
      if (reaches_all(adj) && reaches_all(radj)) {
        EndComponent ec;
        ec.states = states;
        ec.actions.resize(states.size());
        for (std::size_t i = 0; i < states.size(); ++i) {
          for (std::size_t c = 0; c < candidates[i].size(); ++c) {
            if ((pick[i] >> c) & 1u) ec.actions[i].push_back(candidates[i][c]);
          }
        }
        out.push_back(std::move(ec));
      }
      // Advance the odometer over non-empty subsets.
      std::size_t i = 0;
      for (; i < states.size(); ++i) {
        if (pick[i] + 1 < (1u << candidates[i].size())) {
          ++pick[i];
          break;
        }
        pick[i] = 1;
      }
      if (i == states.size()) break;
    }
  }
  return out;
}

namespace {

// Recurrent classes of the finite chain s -> row(s, policy[s]), by mutual
// reachability (deliberately simple and separate from the graph module).
struct ChainStructure {
  std::vector<std::vector<StateId>> recurrent_classes;
  std::vector<int> class_of;  // -1 for transient states
};

ChainStructure chain_structure(const Mdp& m, const std::vector<ActionId>& policy) {
  const StateId n = m.state_count();
  std::vector<std::vector<bool>> reach(n, std::vector<bool>(n, false));
  for (StateId s = 0; s < n; ++s) {
    std::vector<StateId> stack{s};
    reach[s][s] = true;
    while (!stack.empty()) {
      const StateId v = stack.back();
      stack.pop_back();
      for (const auto& t : m.row(v, policy[v])) {
        if (!reach[s][t.to]) {
          reach[s][t.to] = true;
          stack.push_back(t.to);
        }
      }
    }
  }
  ChainStructure cs;
  cs.class_of.assign(n, -1);
  for (StateId s = 0; s < n; ++s) {
    if (cs.class_of[s] >= 0) continue;
    // s is recurrent iff every state it reaches leads back.
    bool recurrent = true;
    for (StateId w = 0; w < n; ++w) {
      if (reach[s][w] && !reach[w][s]) recurrent = false;
    }
    if (!recurrent) continue;
    std::vector<StateId> cls;
    for (StateId w = 0; w < n; ++w) {
      if (reach[s][w] && reach[w][s]) cls.push_back(w);
    }
    const int id = static_cast<int>(cs.recurrent_classes.size());
    for (const StateId w : cls) cs.class_of[w] = id;
    cs.recurrent_classes.push_back(std::move(cls));
  }
  return cs;
}

// Stationary distribution restricted to one recurrent class.
std::vector<double> stationary_on_class(const Mdp& m, const std::vector<ActionId>& policy,
                                        const std::vector<StateId>& cls) {
  const int k = static_cast<int>(cls.size());
  std::vector<int> local(m.state_count(), -1);
  for (int i = 0; i < k; ++i) local[cls[i]] = i;
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(k, k);
  for (int i = 0; i < k; ++i) {
    a(i, i) -= 1.0;
    for (const auto& t : m.row(cls[i], policy[cls[i]])) {
      a(local[t.to], i) += t.prob;  // (P^T - I) mu = 0
    }
  }
  a.row(k - 1).setOnes();
  Eigen::VectorXd b = Eigen::VectorXd::Zero(k);
  b(k - 1) = 1.0;
  const Eigen::VectorXd mu = lu_solve(a, b);
  return std::vector<double>(mu.data(), mu.data() + k);
}

}  // namespace

double renewal_reward(const Mdp& m, const std::vector<ActionId>& policy,
                      const std::vector<bool>& surveillance) {
  const ChainStructure cs = chain_structure(m, policy);
  if (cs.recurrent_classes.size() != 1) {
    throw InputError("renewal_reward requires a unichain policy, found " +
                     std::to_string(cs.recurrent_classes.size()) + " recurrent classes");
  }
  const auto& cls = cs.recurrent_classes[0];
  const std::vector<double> mu = stationary_on_class(m, policy, cls);
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < cls.size(); ++i) {
    num += mu[i] * m.cost(cls[i], policy[cls[i]]);
    if (surveillance[cls[i]]) den += mu[i];
  }
  if (den <= 0.0) throw InputError("no surveillance state is recurrent under this policy");
  return num / den;
}

namespace {

template <typename PerPolicy>
void for_each_policy(const Mdp& m, const PerPolicy& fn) {
  const StateId n = m.state_count();
  std::vector<std::size_t> idx(n, 0);
  std::vector<ActionId> policy(n);
  while (true) {
    for (StateId s = 0; s < n; ++s) policy[s] = m.enabled(s)[idx[s]];
    fn(policy);
    StateId s = 0;
    for (; s < n; ++s) {
      if (idx[s] + 1 < m.enabled(s).size()) {
        ++idx[s];
        break;
      }
      idx[s] = 0;
    }
    if (s == n) break;
  }
}

}  // namespace

double brute_force_acps_gain(const Mdp& m) {
  if (m.state_count() > 5) throw CapError("brute_force_acps_gain is guarded to at most 5 states");
  double best = std::numeric_limits<double>::infinity();
  for_each_policy(m, [&](const std::vector<ActionId>& policy) {
    const ChainStructure cs = chain_structure(m, policy);
    if (cs.recurrent_classes.size() != 1) {
      throw InputError("brute_force_acps_gain requires every policy to be unichain");
    }
    const auto& cls = cs.recurrent_classes[0];
    const std::vector<double> mu = stationary_on_class(m, policy, cls);
    double gain = 0.0;
    for (std::size_t i = 0; i < cls.size(); ++i) gain += mu[i] * m.cost(cls[i], policy[cls[i]]);
    best = std::min(best, gain);
  });
  return best;
}

double brute_force_acpc(const Mdp& m, const std::vector<bool>& surveillance) {
  if (m.state_count() > 5) throw CapError("brute_force_acpc is guarded to at most 5 states");
  double best = std::numeric_limits<double>::infinity();
  for_each_policy(m, [&](const std::vector<ActionId>& policy) {
    const ChainStructure cs = chain_structure(m, policy);
    if (cs.recurrent_classes.size() != 1) {
      throw InputError("brute_force_acpc requires every policy to be unichain");
    }
    const auto& cls = cs.recurrent_classes[0];
    bool sur_recurrent = false;
    for (const StateId s : cls) {
      if (surveillance[s]) sur_recurrent = true;
    }
    if (!sur_recurrent) return;  // value is infinite; cannot improve the minimum
    best = std::min(best, renewal_reward(m, policy, surveillance));
  });
  if (!std::isfinite(best)) {
    throw InputError("no stationary policy keeps a surveillance state recurrent");
  }
  return best;
}

std::vector<HitExpectation> absorbing_expectations(const Mdp& m, const PartialStrategy& zeta,
                                                   const std::vector<StateId>& targets,
                                                   const std::vector<StateId>& starts) {
  const StateId n = m.state_count();
  std::vector<bool> is_target(n, false);
  for (const StateId t : targets) is_target[t] = true;

  // Reachable region: starts take one step regardless of target membership;
  // afterwards targets absorb.
  std::vector<bool> seen(n, false);
  std::vector<StateId> frontier;
  for (const StateId s : starts) {
    if (zeta.action_at(s) < 0) {
      throw InputError("strategy undefined at queried start state " + m.state_name(s));
    }
    for (const auto& t : m.row(s, zeta.action_at(s))) {
      if (!seen[t.to]) {
        seen[t.to] = true;
        frontier.push_back(t.to);
      }
    }
  }
  std::vector<StateId> interior;  // reachable non-target states, zeta-driven
  while (!frontier.empty()) {
    const StateId v = frontier.back();
    frontier.pop_back();
    if (is_target[v]) continue;
    const int a = zeta.action_at(v);
    if (a < 0) {
      throw InputError("strategy undefined at state " + m.state_name(v) +
                       " reachable before absorption");
    }
    interior.push_back(v);
    for (const auto& t : m.row(v, a)) {
      if (!seen[t.to]) {
        seen[t.to] = true;
        frontier.push_back(t.to);
      }
    }
  }
  std::sort(interior.begin(), interior.end());

  // (I - Q) [A | e] = [R | g] over the interior.
  const int k = static_cast<int>(interior.size());
  std::vector<int> local(n, -1);
  for (int i = 0; i < k; ++i) local[interior[i]] = i;
  std::vector<int> target_col(n, -1);
  for (std::size_t j = 0; j < targets.size(); ++j) target_col[targets[j]] = static_cast<int>(j);

  Eigen::MatrixXd iq = Eigen::MatrixXd::Identity(k, k);
  Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(k, static_cast<int>(targets.size()) + 1);
  for (int i = 0; i < k; ++i) {
    const StateId s = interior[i];
    const ActionId a = zeta.action_at(s);
    rhs(i, static_cast<int>(targets.size())) = m.cost(s, a);
    for (const auto& t : m.row(s, a)) {
      if (is_target[t.to]) {
        rhs(i, target_col[t.to]) += t.prob;
      } else {
        iq(i, local[t.to]) -= t.prob;
      }
    }
  }
  Eigen::MatrixXd sol(k, rhs.cols());
  if (k > 0) sol = lu_solve(iq, rhs);

  std::vector<HitExpectation> out;
  out.reserve(starts.size());
  for (const StateId s : starts) {
    const ActionId a = zeta.action_at(s);
    HitExpectation h;
    h.hit.assign(targets.size(), 0.0);
    h.cost = m.cost(s, a);
    for (const auto& t : m.row(s, a)) {
      if (is_target[t.to]) {
        h.hit[target_col[t.to]] += t.prob;
      } else {
        const int i = local[t.to];
        for (std::size_t j = 0; j < targets.size(); ++j) {
          h.hit[j] += t.prob * sol(i, static_cast<int>(j));
        }
        h.cost += t.prob * sol(i, static_cast<int>(targets.size()));
      }
    }
    double mass = 0.0;
    for (const double p : h.hit) mass += p;
    if (std::abs(mass - 1.0) > 1e-9) {
      throw NumericError("strategy does not absorb almost surely (first-hit mass " +
                         std::to_string(mass) + ")");
    }
    out.push_back(std::move(h));
  }
  return out;
}

}  // namespace acpc
