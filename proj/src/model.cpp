#include "acpc/model.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>
#include <set>

namespace acpc {

namespace {

std::string sa_text(const Mdp& m, StateId s, ActionId a) {
  return "(" + m.state_name(s) + ", " + m.action_name(a) + ")";
}

}  // namespace

const std::vector<Transition>& Mdp::row(StateId s, ActionId a) const {
  const int slot = row_slot(s, a);
  if (slot < 0) {
    throw std::logic_error("action " + action_name(a) + " not enabled in state " + state_name(s));
  }
  return rows_[slot];
}

double Mdp::cost(StateId s, ActionId a) const {
  const int slot = row_slot(s, a);
  if (slot < 0) {
    throw std::logic_error("action " + action_name(a) + " not enabled in state " + state_name(s));
  }
  return costs_[slot];
}

int Mdp::prop_index(const std::string& name) const {
  for (std::size_t i = 0; i < ap_.size(); ++i) {
    if (ap_[i] == name) return static_cast<int>(i);
  }
  return -1;
}

int Mdp::state_index(const std::string& name) const {
  for (std::size_t i = 0; i < state_names_.size(); ++i) {
    if (state_names_[i] == name) return static_cast<int>(i);
  }
  return -1;
}

int Mdp::action_index(const std::string& name) const {
  for (std::size_t i = 0; i < action_names_.size(); ++i) {
    if (action_names_[i] == name) return static_cast<int>(i);
  }
  return -1;
}

int MdpBuilder::add_prop(const std::string& name) {
  if (m_.ap_.size() >= kMaxProps) {
    throw InputError("too many atomic propositions (limit " + std::to_string(kMaxProps) + ")");
  }
  for (const auto& p : m_.ap_) {
    if (p == name) throw InputError("duplicate proposition '" + name + "'");
  }
  m_.ap_.push_back(name);
  return static_cast<int>(m_.ap_.size()) - 1;
}

StateId MdpBuilder::add_state(const std::string& name, LabelMask label) {
  const StateId s = static_cast<StateId>(m_.state_names_.size());
  m_.state_names_.push_back(name.empty() ? "s" + std::to_string(s) : name);
  m_.labels_.push_back(label);
  return s;
}

ActionId MdpBuilder::add_action(const std::string& name) {
  const ActionId a = static_cast<ActionId>(m_.action_names_.size());
  m_.action_names_.push_back(name.empty() ? "a" + std::to_string(a) : name);
  return a;
}

void MdpBuilder::set_label(StateId s, LabelMask label) {
  m_.labels_.at(s) = label;
}

void MdpBuilder::add_transition(StateId from, ActionId action, StateId to, double prob) {
  if (from < 0 || static_cast<std::size_t>(from) >= m_.state_names_.size() ||
      to < 0 || static_cast<std::size_t>(to) >= m_.state_names_.size()) {
    throw InputError("transition references undeclared state");
  }
  if (action < 0 || static_cast<std::size_t>(action) >= m_.action_names_.size()) {
    throw InputError("transition references undeclared action");
  }
  if (!(prob > 0.0) || !std::isfinite(prob)) {
    throw InputError("transition probability must be finite and positive, got " +
                     std::to_string(prob));
  }
  entries_.push_back({from, action, to, prob});
}

void MdpBuilder::set_cost(StateId s, ActionId a, double cost) {
  if (s < 0 || static_cast<std::size_t>(s) >= m_.state_names_.size() ||
      a < 0 || static_cast<std::size_t>(a) >= m_.action_names_.size()) {
    throw InputError("cost references undeclared state or action");
  }
  cost_entries_.push_back({{s, a}, cost});
}

void MdpBuilder::set_initial(StateId s) {
  if (s < 0 || static_cast<std::size_t>(s) >= m_.state_names_.size()) {
    throw InputError("initial state undeclared");
  }
  m_.initial_ = s;
}

Mdp MdpBuilder::build() {
  const std::size_t S = m_.state_names_.size();
  const std::size_t A = m_.action_names_.size();
  const LabelMask legal = S == 0 ? 0 : (m_.ap_.empty() ? 0 : ((1u << m_.ap_.size()) - 1u));
  for (std::size_t s = 0; s < S; ++s) {
    if ((m_.labels_[s] & ~legal) != 0) {
      throw InputError("state " + m_.state_names_[s] + " labeled with undeclared proposition bit");
    }
  }

  std::map<std::pair<StateId, ActionId>, std::map<StateId, double>> grouped;
  for (const auto& e : entries_) {
    auto& row = grouped[{e.from, e.action}];
    if (!row.emplace(e.to, e.prob).second) {
      throw InputError("duplicate transition (" + m_.state_names_[e.from] + ", " +
                       m_.action_names_[e.action] + ", " + m_.state_names_[e.to] + ")");
    }
  }

  m_.row_index_.assign(S * A, -1);
  m_.rows_.clear();
  m_.costs_.clear();
  m_.enabled_.assign(S, {});
  for (const auto& [key, row] : grouped) {
    const auto [s, a] = key;
    m_.row_index_[static_cast<std::size_t>(s) * A + a] = static_cast<int>(m_.rows_.size());
    std::vector<Transition> sorted;
    sorted.reserve(row.size());
    for (const auto& [to, p] : row) sorted.push_back({to, p});
    m_.rows_.push_back(std::move(sorted));
    m_.costs_.push_back(0.0);
    m_.enabled_[s].push_back(a);
  }
  for (const auto& [key, c] : cost_entries_) {
    const auto [s, a] = key;
    const int slot = m_.row_index_[static_cast<std::size_t>(s) * A + a];
    if (slot < 0) {
      throw InputError("cost assigned to pair without transitions " + sa_text(m_, s, a));
    }
    m_.costs_[slot] = c;
  }
  return std::move(m_);
}

int PartialStrategy::action_at(StateId s) const {
  auto it = std::lower_bound(assignment.begin(), assignment.end(), s,
                             [](const auto& e, StateId v) { return e.first < v; });
  if (it != assignment.end() && it->first == s) return it->second;
  return -1;
}

void PartialStrategy::assign(StateId s, ActionId a) {
  auto it = std::lower_bound(assignment.begin(), assignment.end(), s,
                             [](const auto& e, StateId v) { return e.first < v; });
  if (it != assignment.end() && it->first == s) {
    if (it->second != a) {
      throw std::logic_error("conflicting assignment for state " + std::to_string(s));
    }
    return;
  }
  assignment.insert(it, {s, a});
}

bool PartialStrategy::conflicts_with(const PartialStrategy& other) const {
  auto i = assignment.begin();
  auto j = other.assignment.begin();
  while (i != assignment.end() && j != other.assignment.end()) {
    if (i->first < j->first) {
      ++i;
    } else if (j->first < i->first) {
      ++j;
    } else {
      if (i->second != j->second) return true;
      ++i;
      ++j;
    }
  }
  return false;
}

PartialStrategy PartialStrategy::merged(const PartialStrategy& a, const PartialStrategy& b) {
  PartialStrategy out = a;
  for (const auto& [s, act] : b.assignment) out.assign(s, act);
  return out;
}

std::vector<std::string> validate_mdp(const Mdp& m) {
  std::vector<std::string> out;
  for (StateId s = 0; s < m.state_count(); ++s) {
    if (m.enabled(s).empty()) {
      out.push_back("state " + m.state_name(s) + " has no enabled action");
      continue;
    }
    for (const ActionId a : m.enabled(s)) {
      double sum = 0.0;
      for (const auto& t : m.row(s, a)) sum += t.prob;
      if (std::abs(sum - 1.0) > 1e-12) {
        out.push_back("row " + sa_text(m, s, a) + " sums to " + std::to_string(sum));
      }
      const double g = m.cost(s, a);
      if (!(g >= 0.0) || !std::isfinite(g)) {
        out.push_back("cost of " + sa_text(m, s, a) + " is not a finite non-negative number");
      }
    }
  }
  if (!m.initial().has_value()) {
    out.push_back("no initial state declared");
  }
  return out;
}

Mdp normalize_rows(const Mdp& m, double tol) {
  MdpBuilder b;
  for (const auto& p : m.ap()) b.add_prop(p);
  for (StateId s = 0; s < m.state_count(); ++s) b.add_state(m.state_name(s), m.label(s));
  for (ActionId a = 0; a < m.action_count(); ++a) b.add_action(m.action_name(a));
  for (StateId s = 0; s < m.state_count(); ++s) {
    for (const ActionId a : m.enabled(s)) {
      double sum = 0.0;
      for (const auto& t : m.row(s, a)) sum += t.prob;
      if (std::abs(sum - 1.0) > tol) {
        throw InputError("row " + sa_text(m, s, a) + " sums to " + std::to_string(sum) +
                         ", outside tolerance " + std::to_string(tol));
      }
      // Rows already normalized to working precision are copied verbatim so
      // that repeated parse/emit round-trips are byte-stable.
      const bool keep = std::abs(sum - 1.0) <= 1e-13;
      for (const auto& t : m.row(s, a)) b.add_transition(s, a, t.to, keep ? t.prob : t.prob / sum);
      b.set_cost(s, a, m.cost(s, a));
    }
  }
  if (m.initial()) b.set_initial(*m.initial());
  return b.build();
}

int DraBuilder::add_prop(const std::string& name) {
  if (d_.ap_.size() >= kMaxDraProps) {
    throw InputError("too many automaton propositions (limit " + std::to_string(kMaxDraProps) + ")");
  }
  for (const auto& p : d_.ap_) {
    if (p == name) throw InputError("duplicate automaton proposition '" + name + "'");
  }
  d_.ap_.push_back(name);
  return static_cast<int>(d_.ap_.size()) - 1;
}

DraStateId DraBuilder::add_state() { return d_.state_count_++; }

void DraBuilder::set_initial(DraStateId q) {
  if (q < 0 || q >= d_.state_count_) throw InputError("automaton initial state undeclared");
  d_.initial_ = q;
}

void DraBuilder::set_edge(DraStateId q, LabelMask mask, DraStateId to) {
  if (q < 0 || q >= d_.state_count_ || to < 0 || to >= d_.state_count_) {
    throw InputError("automaton edge references undeclared state");
  }
  for (const auto& [key, t] : edges_) {
    if (key == std::make_pair(q, mask)) {
      throw InputError("duplicate automaton edge for state " + std::to_string(q) +
                       " and label mask " + std::to_string(mask));
    }
  }
  edges_.push_back({{q, mask}, to});
}

void DraBuilder::set_default(DraStateId q, DraStateId to) {
  if (q < 0 || q >= d_.state_count_ || to < 0 || to >= d_.state_count_) {
    throw InputError("automaton default edge references undeclared state");
  }
  for (const auto& [from, t] : defaults_) {
    if (from == q) {
      throw InputError("duplicate default edge for automaton state " + std::to_string(q));
    }
  }
  defaults_.push_back({q, to});
}

void DraBuilder::add_pair(std::vector<DraStateId> fin, std::vector<DraStateId> inf) {
  for (const DraStateId q : fin) {
    if (q < 0 || q >= d_.state_count_) throw InputError("acceptance pair references undeclared state");
  }
  for (const DraStateId q : inf) {
    if (q < 0 || q >= d_.state_count_) throw InputError("acceptance pair references undeclared state");
  }
  std::sort(fin.begin(), fin.end());
  std::sort(inf.begin(), inf.end());
  d_.pairs_.push_back({std::move(fin), std::move(inf)});
}

Dra DraBuilder::build() {
  if (d_.state_count_ == 0) throw InputError("automaton has no states");
  const std::size_t masks = std::size_t{1} << d_.ap_.size();
  std::vector<DraStateId> def(d_.state_count_, -1);
  for (const auto& [q, to] : defaults_) def[q] = to;
  for (DraStateId q = 0; q < d_.state_count_; ++q) {
    if (def[q] < 0) {
      throw InputError("automaton state " + std::to_string(q) + " is missing its default edge");
    }
  }
  d_.delta_.assign(static_cast<std::size_t>(d_.state_count_) * masks, -1);
  for (DraStateId q = 0; q < d_.state_count_; ++q) {
    for (std::size_t mask = 0; mask < masks; ++mask) {
      d_.delta_[(static_cast<std::size_t>(q) << d_.ap_.size()) | mask] = def[q];
    }
  }
  for (const auto& [key, to] : edges_) {
    d_.delta_[(static_cast<std::size_t>(key.first) << d_.ap_.size()) | key.second] = to;
  }
  d_.fin_mask_.assign(d_.pairs_.size(), std::vector<bool>(d_.state_count_, false));
  d_.inf_mask_.assign(d_.pairs_.size(), std::vector<bool>(d_.state_count_, false));
  for (std::size_t i = 0; i < d_.pairs_.size(); ++i) {
    for (const DraStateId q : d_.pairs_[i].fin) d_.fin_mask_[i][q] = true;
    for (const DraStateId q : d_.pairs_[i].inf) d_.inf_mask_[i][q] = true;
  }
  return std::move(d_);
}

ProductMdp build_product(const Mdp& m, const Dra& a, const std::string& pi_sur) {
  if (!m.initial().has_value()) throw InputError("model has no initial state");
  const int sur_prop = m.prop_index(pi_sur);
  if (sur_prop < 0) throw InputError("surveillance proposition '" + pi_sur + "' not declared by model");

  // DRA propositions must be resolvable against the model's declarations.
  std::vector<int> model_bit(a.ap().size(), -1);
  for (std::size_t i = 0; i < a.ap().size(); ++i) {
    model_bit[i] = m.prop_index(a.ap()[i]);
    if (model_bit[i] < 0) {
      throw InputError("automaton proposition '" + a.ap()[i] + "' not declared by model");
    }
  }
  std::vector<LabelMask> dra_mask(m.state_count(), 0);
  for (StateId s = 0; s < m.state_count(); ++s) {
    LabelMask mask = 0;
    for (std::size_t i = 0; i < model_bit.size(); ++i) {
      if (m.has_prop(s, model_bit[i])) mask |= (1u << i);
    }
    dra_mask[s] = mask;
  }

  ProductMdp p;
  p.base = m;
  p.dra = a;
  p.surveillance_prop = pi_sur;
  p.base_dra_mask = dra_mask;
  p.pair_index.assign(static_cast<std::size_t>(m.state_count()) * a.state_count(), -1);

  MdpBuilder b;
  for (ActionId act = 0; act < m.action_count(); ++act) b.add_action(m.action_name(act));

  const auto intern = [&](StateId s, DraStateId q) {
    StateId& slot = p.pair_index[static_cast<std::size_t>(s) * a.state_count() + q];
    if (slot < 0) {
      slot = b.add_state(m.state_name(s) + "," + std::to_string(q));
      p.base_state.push_back(s);
      p.dra_state.push_back(q);
      p.surveillance.push_back(m.has_prop(s, sur_prop));
    }
    return slot;
  };

  std::deque<StateId> queue;
  queue.push_back(intern(*m.initial(), a.initial()));
  while (!queue.empty()) {
    const StateId ps = queue.front();
    queue.pop_front();
    const StateId s = p.base_state[ps];
    const DraStateId q = p.dra_state[ps];
    const DraStateId q_next = a.step(q, dra_mask[s]);
    for (const ActionId act : m.enabled(s)) {
      for (const auto& t : m.row(s, act)) {
        const StateId before = static_cast<StateId>(p.base_state.size());
        const StateId target = intern(t.to, q_next);
        if (target == before) queue.push_back(target);
        b.add_transition(ps, act, target, t.prob);
      }
      b.set_cost(ps, act, m.cost(s, act));
    }
  }
  b.set_initial(0);
  p.model = b.build();
  p.initial = 0;
  return p;
}

std::vector<StateId> lift_surveillance(const ProductMdp& p) {
  std::vector<StateId> out;
  for (StateId s = 0; s < p.model.state_count(); ++s) {
    if (p.surveillance[s]) out.push_back(s);
  }
  return out;
}

}  // namespace acpc
