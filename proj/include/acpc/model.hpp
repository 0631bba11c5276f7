#pragma once

#include <optional>
#include <string>
#include <vector>

#include "acpc/types.hpp"

namespace acpc {

// Finite labeled MDP with non-negative action costs. Immutable after
// construction; build through MdpBuilder. Actions are global ids with
// per-state enabled subsets. Rows are sorted by successor id.
class Mdp {
 public:
  Mdp() = default;

  StateId state_count() const { return static_cast<StateId>(enabled_.size()); }
  ActionId action_count() const { return static_cast<ActionId>(action_names_.size()); }

  const std::vector<ActionId>& enabled(StateId s) const { return enabled_[s]; }
  bool is_enabled(StateId s, ActionId a) const { return row_slot(s, a) >= 0; }

  const std::vector<Transition>& row(StateId s, ActionId a) const;
  double cost(StateId s, ActionId a) const;

  LabelMask label(StateId s) const { return labels_[s]; }
  bool has_prop(StateId s, int prop) const { return (labels_[s] >> prop) & 1u; }

  const std::vector<std::string>& ap() const { return ap_; }
  // Index of a declared proposition name, -1 when absent.
  int prop_index(const std::string& name) const;

  std::optional<StateId> initial() const { return initial_; }

  const std::string& state_name(StateId s) const { return state_names_[s]; }
  const std::string& action_name(ActionId a) const { return action_names_[a]; }
  int state_index(const std::string& name) const;
  int action_index(const std::string& name) const;

 private:
  friend class MdpBuilder;

  int row_slot(StateId s, ActionId a) const {
    return row_index_[static_cast<std::size_t>(s) * action_names_.size() + a];
  }

  std::vector<std::vector<ActionId>> enabled_;  // per state, ascending
  std::vector<int> row_index_;                  // state*A + action -> slot or -1
  std::vector<std::vector<Transition>> rows_;   // slot -> sorted row
  std::vector<double> costs_;                   // slot -> g(s, a)
  std::vector<LabelMask> labels_;
  std::vector<std::string> ap_;
  std::vector<std::string> state_names_;
  std::vector<std::string> action_names_;
  std::optional<StateId> initial_;
};

// Incremental construction with reference checking. build() preserves the
// given probabilities verbatim so that validate_mdp can report violations on
// intentionally malformed models; parsers renormalize via normalize_rows.
class MdpBuilder {
 public:
  int add_prop(const std::string& name);
  StateId add_state(const std::string& name = "", LabelMask label = 0);
  ActionId add_action(const std::string& name = "");
  void set_label(StateId s, LabelMask label);
  void add_transition(StateId from, ActionId action, StateId to, double prob);
  void set_cost(StateId s, ActionId a, double cost);
  void set_initial(StateId s);

  Mdp build();

 private:
  struct Entry {
    StateId from;
    ActionId action;
    StateId to;
    double prob;
  };
  Mdp m_;
  std::vector<Entry> entries_;
  std::vector<std::pair<std::pair<StateId, ActionId>, double>> cost_entries_;
};

// Stationary partial strategy: an action choice on a subset of states.
// Assignments are kept sorted by state; a conflicting re-assignment (same
// state, different action) is a logic fault, re-assigning the same action is
// a no-op.
struct PartialStrategy {
  std::vector<std::pair<StateId, ActionId>> assignment;

  int action_at(StateId s) const;
  bool defined_at(StateId s) const { return action_at(s) >= 0; }
  void assign(StateId s, ActionId a);
  bool conflicts_with(const PartialStrategy& other) const;
  // Union of two non-conflicting strategies.
  static PartialStrategy merged(const PartialStrategy& a, const PartialStrategy& b);
  bool operator==(const PartialStrategy& other) const { return assignment == other.assignment; }
  bool operator<(const PartialStrategy& other) const { return assignment < other.assignment; }
};

// Structural invariant check. Violations are data, not faults: every state
// must have an enabled action, rows must sum to 1 within 1e-12, costs must be
// non-negative and finite.
std::vector<std::string> validate_mdp(const Mdp& m);

// Accepts rows whose sums deviate from 1 by at most tol and rescales them to
// sum to 1 within working precision; rejects anything further off. Rows
// already within 1e-13 of 1 are kept bit-identical.
Mdp normalize_rows(const Mdp& m, double tol = 1e-9);

// Deterministic Rabin automaton over 2^ap. delta is total: explicit edges
// plus a mandatory per-state default successor, expanded to a dense table.
struct RabinPair {
  std::vector<DraStateId> fin;  // visited finitely often
  std::vector<DraStateId> inf;  // visited infinitely often
};

class Dra {
 public:
  Dra() = default;

  DraStateId state_count() const { return state_count_; }
  DraStateId initial() const { return initial_; }
  const std::vector<std::string>& ap() const { return ap_; }
  const std::vector<RabinPair>& pairs() const { return pairs_; }

  DraStateId step(DraStateId q, LabelMask dra_mask) const {
    return delta_[(static_cast<std::size_t>(q) << ap_.size()) | dra_mask];
  }

  bool in_fin(int pair, DraStateId q) const { return fin_mask_[pair][q]; }
  bool in_inf(int pair, DraStateId q) const { return inf_mask_[pair][q]; }

 private:
  friend class DraBuilder;
  DraStateId state_count_ = 0;
  DraStateId initial_ = 0;
  std::vector<std::string> ap_;
  std::vector<DraStateId> delta_;  // q * 2^|ap| + mask
  std::vector<RabinPair> pairs_;
  std::vector<std::vector<bool>> fin_mask_, inf_mask_;
};

class DraBuilder {
 public:
  int add_prop(const std::string& name);
  DraStateId add_state();
  void set_initial(DraStateId q);
  // Explicit successor for one concrete label set; a second edge for the same
  // (state, label) is a determinism violation and rejected.
  void set_edge(DraStateId q, LabelMask mask, DraStateId to);
  // Mandatory catch-all successor for label sets without an explicit edge.
  void set_default(DraStateId q, DraStateId to);
  void add_pair(std::vector<DraStateId> fin, std::vector<DraStateId> inf);

  Dra build();

 private:
  Dra d_;
  std::vector<std::pair<std::pair<DraStateId, LabelMask>, DraStateId>> edges_;
  std::vector<std::pair<DraStateId, DraStateId>> defaults_;
};

// Product M x A restricted to the part reachable from (init(M), init(A)).
// The automaton component moves on the source-state label: successor of
// (s, q) under alpha is (s', delta(q, L(s))). The product label of (s, q)
// is q; costs are copied from M; the surveillance flag lifts pi_sur in L(s).
struct ProductMdp {
  Mdp model;   // product transition structure; state ids in BFS order
  Mdp base;    // factor copies keep the product self-contained
  Dra dra;
  std::string surveillance_prop;
  std::vector<StateId> base_state;     // per product state
  std::vector<DraStateId> dra_state;   // per product state
  std::vector<bool> surveillance;     // per product state
  std::vector<LabelMask> base_dra_mask;  // per base state: L(s) over dra.ap()
  StateId initial = 0;

  StateId index_of(StateId s, DraStateId q) const {
    return pair_index[static_cast<std::size_t>(s) * dra.state_count() + q];
  }
  std::vector<StateId> pair_index;  // base*Q + q -> product id or -1
};

ProductMdp build_product(const Mdp& m, const Dra& a, const std::string& pi_sur);

// Product states whose base state carries pi_sur, ascending. Empty when no
// state is labeled pi_sur; downstream synthesis rejects that model.
std::vector<StateId> lift_surveillance(const ProductMdp& p);

}  // namespace acpc
