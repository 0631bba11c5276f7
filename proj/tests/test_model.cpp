#include <doctest.h>

#include <string>
#include <vector>

#include "acpc/model.hpp"
#include "acpc/types.hpp"

using namespace acpc;

namespace {

Mdp two_state_loop() {
  MdpBuilder b;
  const int p = b.add_prop("sur");
  b.add_state("s0", 1u << p);
  b.add_state("s1", 0u);
  b.add_action("go");
  b.add_transition(0, 0, 1, 1.0);
  b.add_transition(1, 0, 0, 1.0);
  b.set_cost(0, 0, 1.0);
  b.set_cost(1, 0, 2.0);
  b.set_initial(0);
  return b.build();
}

}  // namespace

TEST_CASE("builder produces sorted rows and resolvable names") {
  MdpBuilder b;
  b.add_prop("p");
  b.add_state("a", 1u);
  b.add_state("b", 0u);
  b.add_state("c", 0u);
  b.add_action("x");
  b.add_transition(0, 0, 2, 0.25);
  b.add_transition(0, 0, 1, 0.75);
  b.add_transition(1, 0, 1, 1.0);
  b.add_transition(2, 0, 0, 1.0);
  b.set_cost(0, 0, 3.0);
  b.set_initial(0);
  const Mdp m = b.build();

  CHECK(m.state_count() == 3);
  CHECK(m.action_count() == 1);
  const auto& row = m.row(0, 0);
  REQUIRE(row.size() == 2);
  CHECK(row[0].to == 1);  // sorted by successor
  CHECK(row[1].to == 2);
  CHECK(row[0].prob == doctest::Approx(0.75));
  CHECK(m.cost(0, 0) == 3.0);
  CHECK(m.cost(1, 0) == 0.0);  // defaults to zero
  CHECK(m.state_index("c") == 2);
  CHECK(m.action_index("x") == 0);
  CHECK(m.prop_index("p") == 0);
  CHECK(m.prop_index("q") == -1);
  CHECK(m.has_prop(0, 0));
  CHECK_FALSE(m.has_prop(1, 0));
  REQUIRE(m.initial().has_value());
  CHECK(*m.initial() == 0);
}

TEST_CASE("builder rejects duplicate transitions and bad references") {
  MdpBuilder b;
  b.add_state("s0", 0u);
  b.add_action("a");
  b.add_transition(0, 0, 0, 0.5);
  CHECK_THROWS_AS(b.add_transition(0, 0, 5, 0.5), InputError);
  CHECK_THROWS_AS(b.add_transition(0, 0, 0, -0.5), InputError);
  b.add_transition(0, 0, 0, 0.5);  // duplicate successor, caught at build
  CHECK_THROWS_AS(b.build(), InputError);
}

TEST_CASE("cost on a pair without transitions is rejected") {
  MdpBuilder b;
  b.add_state("s0", 0u);
  b.add_action("a");
  b.add_action("b");
  b.add_transition(0, 0, 0, 1.0);
  b.set_cost(0, 1, 2.0);
  CHECK_THROWS_AS(b.build(), InputError);
}

TEST_CASE("validate_mdp reports structural violations") {
  MdpBuilder b;
  b.add_state("s0", 0u);
  b.add_state("s1", 0u);
  b.add_action("a");
  b.add_transition(0, 0, 1, 0.6);
  b.add_transition(0, 0, 0, 0.3);  // row sums to 0.9
  b.set_cost(0, 0, -1.0);          // negative cost
  const Mdp m = b.build();         // s1 has no action, no initial declared
  const std::vector<std::string> violations = validate_mdp(m);
  CHECK(violations.size() >= 3);
}

TEST_CASE("normalize_rows fixes near-one rows and keeps exact rows verbatim") {
  MdpBuilder b;
  b.add_state("s0", 0u);
  b.add_state("s1", 0u);
  b.add_action("a");
  const double off = 1e-10;
  b.add_transition(0, 0, 0, 0.5 + off);
  b.add_transition(0, 0, 1, 0.5);
  b.add_transition(1, 0, 1, 1.0);
  b.set_initial(0);
  const Mdp raw = b.build();

  const Mdp fixed = normalize_rows(raw, 1e-9);
  double sum = 0.0;
  for (const auto& t : fixed.row(0, 0)) sum += t.prob;
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-14));
  // The exactly-normalized row is preserved bit for bit.
  CHECK(fixed.row(1, 0)[0].prob == 1.0);

  // Far-off rows are rejected.
  MdpBuilder bad;
  bad.add_state("s0", 0u);
  bad.add_action("a");
  bad.add_transition(0, 0, 0, 0.9);
  bad.set_initial(0);
  CHECK_THROWS_AS(normalize_rows(bad.build(), 1e-9), InputError);
}

TEST_CASE("partial strategies assign, merge, and detect conflicts") {
  PartialStrategy a;
  a.assign(2, 1);
  a.assign(0, 0);
  CHECK(a.action_at(0) == 0);
  CHECK(a.action_at(2) == 1);
  CHECK(a.action_at(1) == -1);
  CHECK_THROWS(a.assign(2, 0));

  PartialStrategy b;
  b.assign(1, 1);
  CHECK_FALSE(a.conflicts_with(b));
  const PartialStrategy m = PartialStrategy::merged(a, b);
  CHECK(m.action_at(0) == 0);
  CHECK(m.action_at(1) == 1);
  CHECK(m.action_at(2) == 1);

  PartialStrategy c;
  c.assign(2, 0);
  CHECK(a.conflicts_with(c));

  PartialStrategy d;
  d.assign(0, 0);
  d.assign(2, 1);
  CHECK(d == a);
}

TEST_CASE("dra builder enforces determinism and defaults") {
  DraBuilder d;
  d.add_prop("p");
  d.add_state();
  d.add_state();
  d.set_initial(0);
  d.set_default(0, 0);
  d.set_edge(0, 1u, 1);
  CHECK_THROWS_AS(d.set_edge(0, 1u, 0), InputError);  // duplicate edge
  CHECK_THROWS_AS(d.set_default(0, 1), InputError);   // duplicate default
  d.add_pair({}, {1});
  // State 1 has no default edge.
  CHECK_THROWS_AS(d.build(), InputError);
}

TEST_CASE("dra dense table mixes defaults and explicit edges") {
  DraBuilder d;
  d.add_prop("p");
  d.add_prop("q");
  const DraStateId q0 = d.add_state();
  const DraStateId q1 = d.add_state();
  d.set_initial(q0);
  d.set_default(q0, q0);
  d.set_edge(q0, 0b01u, q1);  // p only
  d.set_default(q1, q1);
  d.set_edge(q1, 0b10u, q0);  // q only
  d.add_pair({q0}, {q1});
  const Dra a = d.build();

  CHECK(a.state_count() == 2);
  CHECK(a.initial() == 0);
  CHECK(a.step(q0, 0b00u) == q0);
  CHECK(a.step(q0, 0b01u) == q1);
  CHECK(a.step(q0, 0b11u) == q0);  // default covers unlisted masks
  CHECK(a.step(q1, 0b10u) == q0);
  CHECK(a.step(q1, 0b01u) == q1);
  REQUIRE(a.pairs().size() == 1);
  CHECK(a.in_fin(0, q0));
  CHECK(a.in_inf(0, q1));
  CHECK_FALSE(a.in_inf(0, q0));
}

TEST_CASE("product moves the automaton on the source label") {
  // s0 carries p; the automaton leaves q0 exactly when the source had p.
  MdpBuilder b;
  const int p = b.add_prop("p");
  const int sur = b.add_prop("sur");
  b.add_state("s0", 1u << p);
  b.add_state("s1", 1u << sur);
  b.add_action("go");
  b.add_transition(0, 0, 1, 1.0);
  b.add_transition(1, 0, 0, 1.0);
  b.set_initial(0);
  const Mdp m = b.build();

  DraBuilder d;
  d.add_prop("p");
  const DraStateId q0 = d.add_state();
  const DraStateId q1 = d.add_state();
  d.set_initial(q0);
  d.set_default(q0, q0);
  d.set_edge(q0, 1u, q1);
  d.set_default(q1, q1);
  d.add_pair({}, {q1});
  const Dra a = d.build();

  const ProductMdp prod = build_product(m, a, "sur");
  CHECK(prod.model.state_count() == 3);  // (s0,q0) -> (s1,q1) -> (s0,q1) -> loop
  CHECK(prod.initial == prod.index_of(0, q0));
  const StateId x = prod.index_of(1, q1);
  REQUIRE(x >= 0);
  CHECK(prod.model.row(prod.initial, 0)[0].to == x);
  CHECK(prod.surveillance[x]);
  CHECK_FALSE(prod.surveillance[prod.initial]);
  CHECK(prod.base_dra_mask[0] == 1u);  // p lifts into the automaton alphabet
  CHECK(prod.base_dra_mask[1] == 0u);  // sur is not an automaton proposition
  CHECK(prod.index_of(1, q0) == -1);   // unreachable pair never materializes
}

TEST_CASE("product requires the surveillance proposition") {
  const Mdp m = two_state_loop();
  DraBuilder d;
  d.add_prop("nope");
  d.add_state();
  d.set_initial(0);
  d.set_default(0, 0);
  d.add_pair({}, {0});
  const Dra a = d.build();
  CHECK_THROWS_AS(build_product(m, a, "nope"), InputError);   // not a model prop
  CHECK_THROWS_AS(build_product(m, a, "sur"), InputError);    // automaton prop missing
}

TEST_CASE("lift_surveillance collects labeled product states") {
  const Mdp m = two_state_loop();
  DraBuilder d;
  d.add_prop("sur");
  d.add_state();
  d.set_initial(0);
  d.set_default(0, 0);
  d.add_pair({}, {0});
  const ProductMdp prod = build_product(m, d.build(), "sur");
  const std::vector<StateId> lifted = lift_surveillance(prod);
  REQUIRE(lifted.size() == 1);
  CHECK(prod.base_state[lifted[0]] == 0);
}
