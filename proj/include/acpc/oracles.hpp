#pragma once

#include <memory>
#include <vector>

#include "acpc/graph.hpp"
#include "acpc/model.hpp"

namespace acpc {

// ------------------------------------------------------------------ LTL ---
// Grammar: true | p | !f | f & g | X f | f U g | G f | F f. Disjunction and
// implication are provided as derived constructors. Propositions index the
// alphabet the evaluated word's label masks are built over.

struct Ltl;
using LtlPtr = std::shared_ptr<const Ltl>;

struct Ltl {
  enum class Op { True, Prop, Not, And, Next, Until, Always, Eventually };
  Op op;
  int prop = -1;
  LtlPtr lhs, rhs;
};

namespace ltl {
LtlPtr tt();
LtlPtr prop(int index);
LtlPtr negate(LtlPtr f);
LtlPtr conj(LtlPtr a, LtlPtr b);
LtlPtr disj(LtlPtr a, LtlPtr b);
LtlPtr implies(LtlPtr a, LtlPtr b);
LtlPtr next(LtlPtr f);
LtlPtr until(LtlPtr a, LtlPtr b);
LtlPtr always(LtlPtr f);
LtlPtr eventually(LtlPtr f);
std::string to_string(const LtlPtr& f, const std::vector<std::string>& ap);
}  // namespace ltl

// Ultimately periodic word prefix . cycle^omega; cycle must be non-empty.
struct LassoWord {
  std::vector<LabelMask> prefix;
  std::vector<LabelMask> cycle;
};

// Exact LTL semantics at position 0, by per-operator fixpoints over the
// canonical lasso positions (prefix plus one cycle copy with wrap-around).
bool ltl_eval_lasso(const LtlPtr& f, const LassoWord& w);

// Whether the DRA accepts the lasso word; masks are over the DRA's ap list.
// The run is unrolled around the cycle until the automaton state at a cycle
// boundary repeats; Rabin acceptance is checked on the periodic part.
bool dra_accepts_lasso(const Dra& a, const LassoWord& w);

// ---------------------------------------------------- end components ------
// Every end component of m: all (state set, action map) pairs satisfying
// closure and strong connectivity. Exponential; guarded to |S| <= 8.
std::vector<EndComponent> enumerate_ecs(const Mdp& m);

// ---------------------------------------------------- absorbing chains ----
struct HitExpectation {
  std::vector<double> hit;  // first-hit distribution over targets, in order
  double cost = 0.0;        // expected cumulative cost until that first hit
};

// First-step semantics: from each start s, take zeta(s) once, then treat
// target states as absorbing (first hit after at least one step). Reports a
// strategy that is undefined at a reachable non-target state, and a strategy
// that does not absorb almost surely.
std::vector<HitExpectation> absorbing_expectations(const Mdp& m, const PartialStrategy& zeta,
                                                   const std::vector<StateId>& targets,
                                                   const std::vector<StateId>& starts);

// ------------------------------------------------------------- averages ---
// Exact long-run average cost per surveillance visit of a full stationary
// policy: sum(mu * g) / sum(mu over surveillance states), by
// stationary-distribution solve. Rejects multichain policies and policies
// whose recurrent class misses the surveillance set.
double renewal_reward(const Mdp& m, const std::vector<ActionId>& policy,
                      const std::vector<bool>& surveillance);

// Minimum long-run average cost per stage over all stationary deterministic
// policies, each evaluated by an exact stationary-distribution solve.
// Guarded to |S| <= 5; rejects instances where some policy is multichain.
double brute_force_acps_gain(const Mdp& m);

// Minimum long-run average cost per surveillance visit over all stationary
// deterministic policies (skipping policies whose recurrent class misses the
// surveillance set). Same guards as brute_force_acps_gain.
double brute_force_acpc(const Mdp& m, const std::vector<bool>& surveillance);

}  // namespace acpc
