#include "acpc/graph.hpp"

#include <algorithm>

namespace acpc {

int strongly_connected_components(const std::vector<std::vector<int>>& adj,
                                  std::vector<int>& comp) {
  const int n = static_cast<int>(adj.size());
  comp.assign(n, -1);
  std::vector<int> index(n, -1), low(n, 0), on_stack(n, 0);
  std::vector<int> stack;
  int next_index = 0, comp_count = 0;

  // Explicit DFS stack of (node, next edge offset) to keep deep graphs safe.
  std::vector<std::pair<int, std::size_t>> work;
  for (int root = 0; root < n; ++root) {
    if (index[root] >= 0) continue;
    work.push_back({root, 0});
    while (!work.empty()) {
      auto& [v, edge] = work.back();
      if (edge == 0) {
        index[v] = low[v] = next_index++;
        stack.push_back(v);
        on_stack[v] = 1;
      }
      bool descended = false;
      while (edge < adj[v].size()) {
        const int w = adj[v][edge++];
        if (index[w] < 0) {
          work.push_back({w, 0});
          descended = true;
          break;
        }
        if (on_stack[w]) low[v] = std::min(low[v], index[w]);
      }
      if (descended) continue;
      if (low[v] == index[v]) {
        while (true) {
          const int w = stack.back();
          stack.pop_back();
          on_stack[w] = 0;
          comp[w] = comp_count;
          if (w == v) break;
        }
        ++comp_count;
      }
      const int finished = v;
      work.pop_back();
      if (!work.empty()) {
        low[work.back().first] = std::min(low[work.back().first], low[finished]);
      }
    }
  }
  return comp_count;
}

std::vector<EndComponent> mec_decompose_filtered(
    const Mdp& m, const std::vector<bool>& alive_in,
    const std::function<bool(StateId, ActionId)>& keep) {
  const StateId n = m.state_count();
  std::vector<bool> alive = alive_in;
  // retained[s] = candidate actions; initially those passing the predicate
  // whose support lies inside the alive set.
  std::vector<std::vector<ActionId>> retained(n);
  const auto support_alive = [&](StateId s, ActionId a) {
    for (const auto& t : m.row(s, a)) {
      if (!alive[t.to]) return false;
    }
    return true;
  };
  for (StateId s = 0; s < n; ++s) {
    if (!alive[s]) continue;
    for (const ActionId a : m.enabled(s)) {
      if (keep && !keep(s, a)) continue;
      if (support_alive(s, a)) retained[s].push_back(a);
    }
    if (retained[s].empty()) alive[s] = false;
  }

  std::vector<int> comp(n, -1);
  for (bool changed = true; changed;) {
    changed = false;
    // Drop actions pointing at dead states (possible after removals).
    for (StateId s = 0; s < n; ++s) {
      if (!alive[s]) continue;
      auto& acts = retained[s];
      acts.erase(std::remove_if(acts.begin(), acts.end(),
                                [&](ActionId a) { return !support_alive(s, a); }),
                 acts.end());
      if (acts.empty()) {
        alive[s] = false;
        changed = true;
      }
    }
    std::vector<std::vector<int>> adj(n);
    for (StateId s = 0; s < n; ++s) {
      if (!alive[s]) continue;
      for (const ActionId a : retained[s]) {
        for (const auto& t : m.row(s, a)) adj[s].push_back(t.to);
      }
    }
    strongly_connected_components(adj, comp);
    for (StateId s = 0; s < n; ++s) {
      if (!alive[s]) {
        comp[s] = -1;
        continue;
      }
      auto& acts = retained[s];
      const std::size_t before = acts.size();
      acts.erase(std::remove_if(acts.begin(), acts.end(),
                                [&](ActionId a) {
                                  for (const auto& t : m.row(s, a)) {
                                    if (comp[t.to] != comp[s]) return true;
                                  }
                                  return false;
                                }),
                 acts.end());
      if (acts.size() != before) changed = true;
      if (acts.empty()) {
        alive[s] = false;
        changed = true;
      }
    }
  }

  // Group surviving states by component; at fixpoint every survivor has at
  // least one retained action whose support stays inside its component.
  std::vector<std::pair<int, StateId>> keyed;
  for (StateId s = 0; s < n; ++s) {
    if (alive[s]) keyed.push_back({comp[s], s});
  }
  std::sort(keyed.begin(), keyed.end(),
            [](const auto& x, const auto& y) { return x.second < y.second; });
  std::vector<EndComponent> out;
  std::vector<int> comp_slot;
  for (const auto& [c, s] : keyed) {
    int slot = -1;
    for (std::size_t i = 0; i < comp_slot.size(); ++i) {
      if (comp_slot[i] == c) slot = static_cast<int>(i);
    }
    if (slot < 0) {
      slot = static_cast<int>(out.size());
      comp_slot.push_back(c);
      out.push_back({});
    }
    out[slot].states.push_back(s);
    out[slot].actions.push_back(retained[s]);
  }
  return out;
}

std::vector<EndComponent> mec_decompose(const Mdp& m) {
  return mec_decompose_filtered(m, std::vector<bool>(m.state_count(), true));
}

std::vector<MaecEntry> compute_maecs(const ProductMdp& p) {
  std::vector<MaecEntry> out;
  const auto& pairs = p.dra.pairs();
  for (int k = 0; k < static_cast<int>(pairs.size()); ++k) {
    std::vector<bool> alive(p.model.state_count());
    for (StateId s = 0; s < p.model.state_count(); ++s) {
      alive[s] = !p.dra.in_fin(k, p.dra_state[s]);
    }
    for (auto& mec : mec_decompose_filtered(p.model, alive)) {
      bool accepting = false;
      for (const StateId s : mec.states) {
        if (p.dra.in_inf(k, p.dra_state[s])) accepting = true;
      }
      if (accepting) {
        MaecEntry e;
        e.component = std::move(mec);
        e.pair_index = k;
        out.push_back(std::move(e));
      }
    }
  }
  return out;
}

ReachResult almost_sure_reach(const Mdp& m, const std::vector<bool>& target) {
  const StateId n = m.state_count();
  // Greatest fixpoint over Z: keep states from which the target is reachable
  // through actions that never leave Z (nu Z. mu Y. target | pre(Z, Y)).
  std::vector<bool> z(n, true);
  while (true) {
    std::vector<bool> y(n, false);
    for (StateId s = 0; s < n; ++s) y[s] = target[s] && z[s];
    for (bool grew = true; grew;) {
      grew = false;
      for (StateId s = 0; s < n; ++s) {
        if (y[s] || !z[s]) continue;
        for (const ActionId a : m.enabled(s)) {
          bool inside = true, touches = false;
          for (const auto& t : m.row(s, a)) {
            if (!z[t.to]) inside = false;
            if (y[t.to]) touches = true;
          }
          if (inside && touches) {
            y[s] = true;
            grew = true;
            break;
          }
        }
      }
    }
    if (y == z) break;
    z = std::move(y);
  }

  ReachResult r;
  r.member = z;
  for (StateId s = 0; s < n; ++s) {
    if (!z[s]) continue;
    r.states.push_back(s);
    std::vector<ActionId> acts;
    for (const ActionId a : m.enabled(s)) {
      bool inside = true;
      for (const auto& t : m.row(s, a)) {
        if (!z[t.to]) inside = false;
      }
      if (inside) acts.push_back(a);
    }
    r.actions.push_back(std::move(acts));
  }
  return r;
}

ComponentModel extract_component(const Mdp& source, const EndComponent& ec,
                                 const std::vector<bool>& surveillance_flags) {
  ComponentModel c;
  c.local_of.assign(source.state_count(), -1);
  for (std::size_t i = 0; i < ec.states.size(); ++i) {
    c.local_of[ec.states[i]] = static_cast<int>(i);
  }

  MdpBuilder b;
  for (const std::string& prop : source.ap()) b.add_prop(prop);
  for (ActionId a = 0; a < source.action_count(); ++a) b.add_action(source.action_name(a));
  for (std::size_t i = 0; i < ec.states.size(); ++i) {
    const StateId s = ec.states[i];
    b.add_state(source.state_name(s), source.label(s));
    c.original.push_back(s);
    c.surveillance.push_back(surveillance_flags[s]);
  }
  for (std::size_t i = 0; i < ec.states.size(); ++i) {
    const StateId s = ec.states[i];
    const StateId local = static_cast<StateId>(i);
    for (const ActionId a : ec.actions[i]) {
      b.set_cost(local, a, source.cost(s, a));
      for (const auto& t : source.row(s, a)) {
        b.add_transition(local, a, c.local_of[t.to], t.prob);
      }
    }
  }
  b.set_initial(0);
  c.model = b.build();
  return c;
}

}  // namespace acpc
