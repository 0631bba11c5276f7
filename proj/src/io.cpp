#include "acpc/io.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "acpc/graph.hpp"
#include "acpc/types.hpp"

namespace acpc {

namespace {

using nlohmann::json;
using ordered = nlohmann::ordered_json;

[[noreturn]] void fail(const std::string& where, const std::string& what) {
  throw InputError(where + ": " + what);
}

const json& need(const json& obj, const char* key, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end()) fail(where, std::string("missing field '") + key + "'");
  return *it;
}

void check_keys(const json& obj, const std::vector<const char*>& allowed,
                const std::string& where) {
  if (!obj.is_object()) fail(where, "expected an object");
  for (const auto& item : obj.items()) {
    bool known = false;
    for (const char* k : allowed)
      if (item.key() == k) {
        known = true;
        break;
      }
    if (!known) fail(where, "unknown field '" + item.key() + "'");
  }
}

std::string get_string(const json& j, const char* key, const std::string& where) {
  const json& v = need(j, key, where);
  if (!v.is_string()) fail(where, std::string("field '") + key + "' must be a string");
  return v.get<std::string>();
}

double get_number(const json& j, const char* key, const std::string& where) {
  const json& v = need(j, key, where);
  if (!v.is_number()) fail(where, std::string("field '") + key + "' must be a number");
  return v.get<double>();
}

long get_integer(const json& j, const char* key, const std::string& where) {
  const json& v = need(j, key, where);
  if (!v.is_number_integer()) fail(where, std::string("field '") + key + "' must be an integer");
  return v.get<long>();
}

bool get_bool(const json& j, const char* key, const std::string& where) {
  const json& v = need(j, key, where);
  if (!v.is_boolean()) fail(where, std::string("field '") + key + "' must be a boolean");
  return v.get<bool>();
}

const json& get_array(const json& j, const char* key, const std::string& where) {
  const json& v = need(j, key, where);
  if (!v.is_array()) fail(where, std::string("field '") + key + "' must be an array");
  return v;
}

json parse_json(const std::string& text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw InputError(what + ": " + e.what());
  }
}

}  // namespace

// ----------------------------------------------------------------- digest --

std::string fnv1a64_digest(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  char buf[32];
  std::snprintf(buf, sizeof buf, "fnv1a64:%016llx", static_cast<unsigned long long>(h));
  return buf;
}

// ------------------------------------------------------------------ model --

ModelDocument parse_model(const std::string& text) {
  json doc = parse_json(text, "model document");
  check_keys(doc, {"ap", "states", "actions", "initial", "surveillance", "transitions", "costs"},
             "model document");

  MdpBuilder b;

  const json& ap = get_array(doc, "ap", "model document");
  std::set<std::string> seen_props;
  for (std::size_t i = 0; i < ap.size(); ++i) {
    const std::string where = "ap[" + std::to_string(i) + "]";
    if (!ap[i].is_string()) fail(where, "proposition names must be strings");
    std::string name = ap[i].get<std::string>();
    if (name.empty()) fail(where, "proposition name is empty");
    if (!seen_props.insert(name).second) fail(where, "duplicate proposition '" + name + "'");
    b.add_prop(name);
  }

  const json& states = get_array(doc, "states", "model document");
  std::vector<std::string> state_names;
  std::set<std::string> seen_states;
  auto prop_of = [&](const std::string& name) {
    for (std::size_t k = 0; k < ap.size(); ++k)
      if (ap[k].get<std::string>() == name) return static_cast<int>(k);
    return -1;
  };
  for (std::size_t i = 0; i < states.size(); ++i) {
    const std::string where = "states[" + std::to_string(i) + "]";
    check_keys(states[i], {"id", "labels"}, where);
    std::string id = get_string(states[i], "id", where);
    if (id.empty()) fail(where, "state id is empty");
    if (!seen_states.insert(id).second) fail(where, "duplicate state id '" + id + "'");
    LabelMask mask = 0;
    const json& labels = get_array(states[i], "labels", where);
    for (std::size_t k = 0; k < labels.size(); ++k) {
      if (!labels[k].is_string()) fail(where, "labels must be strings");
      int p = prop_of(labels[k].get<std::string>());
      if (p < 0) fail(where, "label '" + labels[k].get<std::string>() + "' is not a declared proposition");
      if ((mask >> p) & 1u) fail(where, "duplicate label '" + labels[k].get<std::string>() + "'");
      mask |= (1u << p);
    }
    b.add_state(id, mask);
    state_names.push_back(std::move(id));
  }

  const json& actions = get_array(doc, "actions", "model document");
  std::vector<std::string> action_names;
  std::set<std::string> seen_actions;
  for (std::size_t i = 0; i < actions.size(); ++i) {
    const std::string where = "actions[" + std::to_string(i) + "]";
    if (!actions[i].is_string()) fail(where, "action names must be strings");
    std::string name = actions[i].get<std::string>();
    if (name.empty()) fail(where, "action name is empty");
    if (!seen_actions.insert(name).second) fail(where, "duplicate action '" + name + "'");
    b.add_action(name);
    action_names.push_back(std::move(name));
  }

  auto state_of = [&](const std::string& name, const std::string& where) {
    for (std::size_t k = 0; k < state_names.size(); ++k)
      if (state_names[k] == name) return static_cast<StateId>(k);
    fail(where, "unknown state '" + name + "'");
  };
  auto action_of = [&](const std::string& name, const std::string& where) {
    for (std::size_t k = 0; k < action_names.size(); ++k)
      if (action_names[k] == name) return static_cast<ActionId>(k);
    fail(where, "unknown action '" + name + "'");
  };

  const json& transitions = get_array(doc, "transitions", "model document");
  std::set<std::tuple<StateId, ActionId, StateId>> seen_edges;
  std::set<std::pair<StateId, ActionId>> enabled_pairs;
  for (std::size_t i = 0; i < transitions.size(); ++i) {
    const std::string where = "transitions[" + std::to_string(i) + "]";
    check_keys(transitions[i], {"from", "action", "to", "prob"}, where);
    StateId from = state_of(get_string(transitions[i], "from", where), where);
    ActionId action = action_of(get_string(transitions[i], "action", where), where);
    StateId to = state_of(get_string(transitions[i], "to", where), where);
    double prob = get_number(transitions[i], "prob", where);
    if (!std::isfinite(prob) || prob <= 0.0)
      fail(where, "probability must be finite and positive");
    if (!seen_edges.insert({from, action, to}).second)
      fail(where, "duplicate transition (" + state_names[from] + ", " + action_names[action] +
                      ", " + state_names[to] + ")");
    enabled_pairs.insert({from, action});
    b.add_transition(from, action, to, prob);
  }

  const json& costs = get_array(doc, "costs", "model document");
  std::set<std::pair<StateId, ActionId>> seen_costs;
  for (std::size_t i = 0; i < costs.size(); ++i) {
    const std::string where = "costs[" + std::to_string(i) + "]";
    check_keys(costs[i], {"state", "action", "cost"}, where);
    StateId s = state_of(get_string(costs[i], "state", where), where);
    ActionId a = action_of(get_string(costs[i], "action", where), where);
    double g = get_number(costs[i], "cost", where);
    if (!seen_costs.insert({s, a}).second)
      fail(where, "duplicate cost for (" + state_names[s] + ", " + action_names[a] + ")");
    if (!enabled_pairs.count({s, a}))
      fail(where, "cost for (" + state_names[s] + ", " + action_names[a] +
                      "), which has no transitions");
    b.set_cost(s, a, g);
  }

  std::string initial = get_string(doc, "initial", "model document");
  b.set_initial(state_of(initial, "model document initial"));

  std::string surveillance = get_string(doc, "surveillance", "model document");
  if (!seen_props.count(surveillance))
    fail("model document", "surveillance proposition '" + surveillance + "' is not declared in ap");

  Mdp built = b.build();
  Mdp normalized = normalize_rows(built, 1e-9);
  std::vector<std::string> violations = validate_mdp(normalized);
  if (!violations.empty()) {
    std::string joined = "invalid model";
    for (const std::string& v : violations) joined += "; " + v;
    throw InputError(joined);
  }
  return ModelDocument{std::move(normalized), std::move(surveillance)};
}

std::string emit_model(const ModelDocument& doc) {
  const Mdp& m = doc.model;
  if (!m.initial().has_value()) throw InputError("cannot emit a model without an initial state");

  ordered j;
  j["ap"] = m.ap();

  ordered states = ordered::array();
  for (StateId s = 0; s < m.state_count(); ++s) {
    ordered labels = ordered::array();
    for (std::size_t p = 0; p < m.ap().size(); ++p)
      if (m.has_prop(s, static_cast<int>(p))) labels.push_back(m.ap()[p]);
    ordered entry;
    entry["id"] = m.state_name(s);
    entry["labels"] = std::move(labels);
    states.push_back(std::move(entry));
  }
  j["states"] = std::move(states);

  ordered actions = ordered::array();
  for (ActionId a = 0; a < m.action_count(); ++a) actions.push_back(m.action_name(a));
  j["actions"] = std::move(actions);

  j["initial"] = m.state_name(*m.initial());
  j["surveillance"] = doc.surveillance;

  ordered transitions = ordered::array();
  ordered costs = ordered::array();
  for (StateId s = 0; s < m.state_count(); ++s) {
    for (ActionId a : m.enabled(s)) {
      for (const Transition& t : m.row(s, a)) {
        ordered e;
        e["from"] = m.state_name(s);
        e["action"] = m.action_name(a);
        e["to"] = m.state_name(t.to);
        e["prob"] = t.prob;
        transitions.push_back(std::move(e));
      }
      ordered c;
      c["state"] = m.state_name(s);
      c["action"] = m.action_name(a);
      c["cost"] = m.cost(s, a);
      costs.push_back(std::move(c));
    }
  }
  j["transitions"] = std::move(transitions);
  j["costs"] = std::move(costs);

  return j.dump(2) + "\n";
}

// -------------------------------------------------------------------- hoa --

namespace {

struct HoaLine {
  int number = 0;  // 1-based source line
  std::string text;
};

[[noreturn]] void hoa_fail(int line, const std::string& what) {
  throw InputError("hoa line " + std::to_string(line) + ": " + what);
}

std::vector<std::string> split_ws(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  std::string tok;
  while (in >> tok) out.push_back(tok);
  return out;
}

bool parse_int(const std::string& tok, long& out) {
  if (tok.empty()) return false;
  std::size_t k = 0;
  if (!std::all_of(tok.begin(), tok.end(), [](unsigned char c) { return std::isdigit(c); }))
    return false;
  try {
    out = std::stol(tok, &k);
  } catch (...) {
    return false;
  }
  return k == tok.size();
}

// Label expressions: disjunctions of conjunctions of (possibly negated)
// proposition indices; "t" stands alone and marks the default edge.
struct LabelTerm {
  LabelMask fixed_one = 0;
  LabelMask fixed_zero = 0;
};

struct LabelExpr {
  bool is_default = false;
  std::vector<LabelTerm> terms;
};

LabelExpr parse_label_expr(const std::string& text, int line, int ap_count) {
  LabelExpr out;
  std::vector<std::string> disjuncts;
  std::string cur;
  for (char c : text) {
    if (c == '|') {
      disjuncts.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  disjuncts.push_back(cur);

  std::string trimmed;
  for (char c : text)
    if (!std::isspace(static_cast<unsigned char>(c))) trimmed += c;
  if (trimmed == "t") {
    out.is_default = true;
    return out;
  }

  for (const std::string& d : disjuncts) {
    LabelTerm term;
    std::string lit;
    std::vector<std::string> lits;
    for (char c : d) {
      if (c == '&') {
        lits.push_back(lit);
        lit.clear();
      } else if (!std::isspace(static_cast<unsigned char>(c))) {
        lit += c;
      }
    }
    lits.push_back(lit);
    for (std::string l : lits) {
      bool neg = false;
      if (!l.empty() && l[0] == '!') {
        neg = true;
        l = l.substr(1);
      }
      if (l == "t") hoa_fail(line, "'t' must stand alone in a label");
      long idx = 0;
      if (!parse_int(l, idx)) hoa_fail(line, "bad label literal '" + l + "'");
      if (idx < 0 || idx >= ap_count)
        hoa_fail(line, "label proposition " + std::to_string(idx) + " out of range");
      LabelMask bit = 1u << idx;
      if (neg) {
        if (term.fixed_one & bit) hoa_fail(line, "contradictory label literal " + std::to_string(idx));
        term.fixed_zero |= bit;
      } else {
        if (term.fixed_zero & bit) hoa_fail(line, "contradictory label literal " + std::to_string(idx));
        term.fixed_one |= bit;
      }
    }
    out.terms.push_back(term);
  }
  return out;
}

// All label sets matched by one conjunction: fixed bits as given, free bits
// enumerated.
std::vector<LabelMask> expand_term(const LabelTerm& term, int ap_count) {
  std::vector<int> free_bits;
  for (int p = 0; p < ap_count; ++p) {
    LabelMask bit = 1u << p;
    if (!(term.fixed_one & bit) && !(term.fixed_zero & bit)) free_bits.push_back(p);
  }
  std::vector<LabelMask> masks;
  std::size_t combos = std::size_t{1} << free_bits.size();
  masks.reserve(combos);
  for (std::size_t c = 0; c < combos; ++c) {
    LabelMask mask = term.fixed_one;
    for (std::size_t k = 0; k < free_bits.size(); ++k)
      if ((c >> k) & 1u) mask |= (1u << free_bits[k]);
    masks.push_back(mask);
  }
  std::sort(masks.begin(), masks.end());
  return masks;
}

}  // namespace

Dra parse_hoa(const std::string& text) {
  std::vector<HoaLine> lines;
  {
    std::string cur;
    int number = 1;
    for (char c : text) {
      if (c == '\n') {
        lines.push_back({number, cur});
        cur.clear();
        ++number;
      } else if (c != '\r') {
        cur += c;
      }
    }
    if (!cur.empty()) lines.push_back({number, cur});
  }

  std::size_t pos = 0;
  auto skip_blank = [&]() {
    while (pos < lines.size() && split_ws(lines[pos].text).empty()) ++pos;
  };

  skip_blank();
  if (pos >= lines.size()) throw InputError("hoa: empty document");
  {
    std::vector<std::string> toks = split_ws(lines[pos].text);
    if (toks.size() != 2 || toks[0] != "HOA:" || toks[1] != "v1")
      hoa_fail(lines[pos].number, "expected 'HOA: v1'");
    ++pos;
  }

  long n_states = -1, start = -1, n_pairs = -1;
  std::vector<std::string> ap_names;
  bool have_ap = false, have_acceptance = false;

  for (;;) {
    skip_blank();
    if (pos >= lines.size()) throw InputError("hoa: missing --BODY--");
    const HoaLine& line = lines[pos];
    std::vector<std::string> toks = split_ws(line.text);
    if (toks[0] == "--BODY--") {
      if (toks.size() != 1) hoa_fail(line.number, "unexpected tokens after --BODY--");
      ++pos;
      break;
    }
    if (toks[0] == "States:") {
      if (n_states >= 0) hoa_fail(line.number, "duplicate States header");
      if (toks.size() != 2 || !parse_int(toks[1], n_states) || n_states < 1)
        hoa_fail(line.number, "States must name a positive count");
    } else if (toks[0] == "Start:") {
      if (start >= 0) hoa_fail(line.number, "duplicate Start header");
      if (toks.size() != 2 || !parse_int(toks[1], start))
        hoa_fail(line.number, "Start must name one state");
    } else if (toks[0] == "AP:") {
      if (have_ap) hoa_fail(line.number, "duplicate AP header");
      have_ap = true;
      long count = 0;
      if (toks.size() < 2 || !parse_int(toks[1], count))
        hoa_fail(line.number, "AP must start with a count");
      // Re-scan the raw line for the quoted names so names may contain spaces.
      std::string rest = line.text;
      rest = rest.substr(rest.find("AP:") + 3);
      std::size_t k = 0;
      while (k < rest.size() && rest[k] != '"') ++k;
      for (long i = 0; i < count; ++i) {
        if (k >= rest.size() || rest[k] != '"')
          hoa_fail(line.number, "expected " + std::to_string(count) + " quoted names");
        std::size_t end = rest.find('"', k + 1);
        if (end == std::string::npos) hoa_fail(line.number, "unterminated proposition name");
        std::string name = rest.substr(k + 1, end - k - 1);
        if (name.empty()) hoa_fail(line.number, "empty proposition name");
        ap_names.push_back(name);
        k = end + 1;
        while (k < rest.size() && std::isspace(static_cast<unsigned char>(rest[k]))) ++k;
      }
      if (k != rest.size()) hoa_fail(line.number, "unexpected tokens after AP names");
    } else if (toks[0] == "acc-name:") {
      if (n_pairs >= 0) hoa_fail(line.number, "duplicate acc-name header");
      if (toks.size() != 3 || toks[1] != "Rabin" || !parse_int(toks[2], n_pairs) || n_pairs < 1)
        hoa_fail(line.number, "acceptance must be 'acc-name: Rabin k' with k >= 1");
    } else if (toks[0] == "Acceptance:") {
      if (have_acceptance) hoa_fail(line.number, "duplicate Acceptance header");
      have_acceptance = true;
      long sets = 0;
      if (toks.size() < 3 || !parse_int(toks[1], sets))
        hoa_fail(line.number, "Acceptance must start with the set count");
      std::string formula;
      for (std::size_t k = 2; k < toks.size(); ++k) formula += toks[k];
      // Canonical Rabin shape: Fin(0)&Inf(1) | Fin(2)&Inf(3) | ...
      std::string expected;
      for (long i = 0; i * 2 < sets; ++i) {
        if (i) expected += "|";
        expected += "Fin(" + std::to_string(2 * i) + ")&Inf(" + std::to_string(2 * i + 1) + ")";
      }
      if (sets <= 0 || sets % 2 != 0 || formula != expected)
        hoa_fail(line.number,
                 "acceptance sets must be numbered Fin(2i) & Inf(2i+1) per pair, got '" +
                     formula + "'");
      if (n_pairs >= 0 && sets != 2 * n_pairs)
        hoa_fail(line.number, "Acceptance set count disagrees with acc-name pair count");
    } else {
      hoa_fail(line.number, "unknown header '" + toks[0] + "'");
    }
    ++pos;
  }

  if (n_states < 0) throw InputError("hoa: missing States header");
  if (start < 0) throw InputError("hoa: missing Start header");
  if (!have_ap) throw InputError("hoa: missing AP header");
  if (n_pairs < 0) throw InputError("hoa: missing acc-name header");
  if (!have_acceptance) throw InputError("hoa: missing Acceptance header");
  if (start >= n_states) throw InputError("hoa: Start state out of range");

  DraBuilder b;
  for (const std::string& name : ap_names) b.add_prop(name);
  for (long q = 0; q < n_states; ++q) b.add_state();
  b.set_initial(static_cast<DraStateId>(start));

  std::vector<std::vector<DraStateId>> fin(static_cast<std::size_t>(n_pairs));
  std::vector<std::vector<DraStateId>> inf(static_cast<std::size_t>(n_pairs));
  std::vector<bool> seen_state(static_cast<std::size_t>(n_states), false);
  std::vector<bool> has_default(static_cast<std::size_t>(n_states), false);

  long current = -1;
  bool ended = false;
  for (; pos < lines.size(); ++pos) {
    const HoaLine& line = lines[pos];
    std::vector<std::string> toks = split_ws(line.text);
    if (toks.empty()) continue;
    if (toks[0] == "--END--") {
      if (toks.size() != 1) hoa_fail(line.number, "unexpected tokens after --END--");
      ended = true;
      ++pos;
      break;
    }
    if (toks[0] == "State:") {
      if (toks.size() < 2) hoa_fail(line.number, "State needs an id");
      long q = 0;
      if (!parse_int(toks[1], q) || q >= n_states)
        hoa_fail(line.number, "bad state id '" + toks[1] + "'");
      if (seen_state[static_cast<std::size_t>(q)])
        hoa_fail(line.number, "duplicate State block for " + std::to_string(q));
      seen_state[static_cast<std::size_t>(q)] = true;
      current = q;
      // Optional acceptance-set membership: { a b c }
      std::string rest;
      for (std::size_t k = 2; k < toks.size(); ++k) rest += toks[k] + " ";
      std::string compact;
      for (char c : rest)
        if (!std::isspace(static_cast<unsigned char>(c))) compact += c;
      if (!compact.empty()) {
        if (compact.front() != '{' || compact.back() != '}')
          hoa_fail(line.number, "unexpected tokens after state id");
        std::string inner = rest.substr(rest.find('{') + 1);
        inner = inner.substr(0, inner.find('}'));
        for (const std::string& tok : split_ws(inner)) {
          long set_id = 0;
          if (!parse_int(tok, set_id) || set_id >= 2 * n_pairs)
            hoa_fail(line.number, "bad acceptance set '" + tok + "'");
          auto pair = static_cast<std::size_t>(set_id / 2);
          if (set_id % 2 == 0)
            fin[pair].push_back(static_cast<DraStateId>(q));
          else
            inf[pair].push_back(static_cast<DraStateId>(q));
        }
      }
      continue;
    }
    // Edge line: [expr] destination
    if (current < 0) hoa_fail(line.number, "edge before any State block");
    std::string text_line = line.text;
    std::size_t open = text_line.find('[');
    std::size_t close = text_line.find(']');
    if (open == std::string::npos || close == std::string::npos || close < open)
      hoa_fail(line.number, "expected '[label] destination'");
    std::string expr_text = text_line.substr(open + 1, close - open - 1);
    std::vector<std::string> dest_toks = split_ws(text_line.substr(close + 1));
    if (dest_toks.size() != 1) hoa_fail(line.number, "edge needs exactly one destination");
    long dest = 0;
    if (!parse_int(dest_toks[0], dest) || dest >= n_states)
      hoa_fail(line.number, "bad destination '" + dest_toks[0] + "'");

    LabelExpr expr = parse_label_expr(expr_text, line.number, static_cast<int>(ap_names.size()));
    if (expr.is_default) {
      if (has_default[static_cast<std::size_t>(current)])
        hoa_fail(line.number, "duplicate default edge for state " + std::to_string(current));
      has_default[static_cast<std::size_t>(current)] = true;
      b.set_default(static_cast<DraStateId>(current), static_cast<DraStateId>(dest));
    } else {
      for (const LabelTerm& term : expr.terms) {
        for (LabelMask mask : expand_term(term, static_cast<int>(ap_names.size()))) {
          try {
            b.set_edge(static_cast<DraStateId>(current), mask, static_cast<DraStateId>(dest));
          } catch (const InputError& e) {
            hoa_fail(line.number, e.what());
          }
        }
      }
    }
  }

  if (!ended) throw InputError("hoa: missing --END--");
  skip_blank();
  if (pos < lines.size()) hoa_fail(lines[pos].number, "unexpected content after --END--");
  for (long q = 0; q < n_states; ++q) {
    if (!seen_state[static_cast<std::size_t>(q)])
      throw InputError("hoa: no State block for " + std::to_string(q));
    if (!has_default[static_cast<std::size_t>(q)])
      throw InputError("hoa: state " + std::to_string(q) + " has no default edge");
  }
  for (long i = 0; i < n_pairs; ++i) {
    auto canon = [](std::vector<DraStateId>& v) {
      std::sort(v.begin(), v.end());
      v.erase(std::unique(v.begin(), v.end()), v.end());
    };
    canon(fin[static_cast<std::size_t>(i)]);
    canon(inf[static_cast<std::size_t>(i)]);
    b.add_pair(std::move(fin[static_cast<std::size_t>(i)]),
               std::move(inf[static_cast<std::size_t>(i)]));
  }
  return b.build();
}

std::string emit_hoa(const Dra& dra) {
  int n = static_cast<int>(dra.ap().size());
  LabelMask masks = 1u << n;
  std::ostringstream out;
  out << "HOA: v1\n";
  out << "States: " << dra.state_count() << "\n";
  out << "Start: " << dra.initial() << "\n";
  out << "AP: " << n;
  for (const std::string& name : dra.ap()) out << " \"" << name << "\"";
  out << "\n";
  out << "acc-name: Rabin " << dra.pairs().size() << "\n";
  out << "Acceptance: " << 2 * dra.pairs().size() << " ";
  for (std::size_t i = 0; i < dra.pairs().size(); ++i) {
    if (i) out << " | ";
    out << "Fin(" << 2 * i << ") & Inf(" << 2 * i + 1 << ")";
  }
  out << "\n--BODY--\n";

  for (DraStateId q = 0; q < dra.state_count(); ++q) {
    out << "State: " << q;
    std::vector<int> sets;
    for (std::size_t i = 0; i < dra.pairs().size(); ++i) {
      if (dra.in_fin(static_cast<int>(i), q)) sets.push_back(static_cast<int>(2 * i));
      if (dra.in_inf(static_cast<int>(i), q)) sets.push_back(static_cast<int>(2 * i + 1));
    }
    if (!sets.empty()) {
      out << " {";
      for (std::size_t k = 0; k < sets.size(); ++k) out << (k ? " " : "") << sets[k];
      out << "}";
    }
    out << "\n";

    // The successor receiving the most label sets becomes the default edge;
    // remaining successors get explicit minterm disjunctions.
    std::vector<long> count(static_cast<std::size_t>(dra.state_count()), 0);
    for (LabelMask mask = 0; mask < masks; ++mask)
      ++count[static_cast<std::size_t>(dra.step(q, mask))];
    DraStateId def = 0;
    for (DraStateId cand = 0; cand < dra.state_count(); ++cand)
      if (count[static_cast<std::size_t>(cand)] > count[static_cast<std::size_t>(def)]) def = cand;

    for (DraStateId dest = 0; dest < dra.state_count(); ++dest) {
      if (dest == def || count[static_cast<std::size_t>(dest)] == 0) continue;
      out << "[";
      bool first_term = true;
      for (LabelMask mask = 0; mask < masks; ++mask) {
        if (dra.step(q, mask) != dest) continue;
        if (!first_term) out << " | ";
        first_term = false;
        if (n == 0) {
          out << "t";  // unreachable: no mask differs from the default
        }
        for (int p = 0; p < n; ++p) {
          if (p) out << " & ";
          if (!((mask >> p) & 1u)) out << "!";
          out << p;
        }
      }
      out << "] " << dest << "\n";
    }
    out << "[t] " << def << "\n";
  }
  out << "--END--\n";
  return out.str();
}

// --------------------------------------------------------------- strategy --

namespace {

ordered dump_fm(const FiniteMemoryStrategy& fm) {
  ordered j;
  j["modes"] = fm.mode_count;
  j["states"] = fm.state_count;
  j["act"] = fm.act;
  j["next_mode"] = fm.next_mode;
  j["start_mode"] = fm.start_mode;
  return j;
}

FiniteMemoryStrategy load_fm(const json& j, StateId expected_states, const std::string& where) {
  check_keys(j, {"modes", "states", "act", "next_mode", "start_mode"}, where);
  FiniteMemoryStrategy fm;
  fm.mode_count = static_cast<int>(get_integer(j, "modes", where));
  fm.state_count = static_cast<StateId>(get_integer(j, "states", where));
  if (fm.mode_count <= 0 || fm.state_count != expected_states)
    fail(where, "bad mode or state count");
  auto load_ints = [&](const char* key, std::size_t expected, auto& out) {
    const json& arr = get_array(j, key, where);
    if (arr.size() != expected) fail(where, std::string("field '") + key + "' has the wrong length");
    for (const json& v : arr) {
      if (!v.is_number_integer()) fail(where, std::string("field '") + key + "' must hold integers");
      out.push_back(v.get<int>());
    }
  };
  std::size_t table = static_cast<std::size_t>(fm.mode_count) * fm.state_count;
  load_ints("act", table, fm.act);
  load_ints("next_mode", table, fm.next_mode);
  load_ints("start_mode", static_cast<std::size_t>(fm.state_count), fm.start_mode);
  for (int m : fm.next_mode)
    if (m < -1 || m >= fm.mode_count) fail(where, "next_mode entry out of range");
  for (int m : fm.start_mode)
    if (m < -1 || m >= fm.mode_count) fail(where, "start_mode entry out of range");
  return fm;
}

ordered dump_schedule(const RoundSchedule& s) {
  ordered j;
  j["g_max"] = s.g_max;
  j["l_floor"] = s.l_floor;
  j["early_exit"] = s.early_exit;
  j["phase1_timeout"] = s.phase1_timeout;
  return j;
}

}  // namespace

std::string emit_strategy(const SynthesisResult& result, bool prefer_shortcut,
                          const std::string& model_digest) {
  const ProductMdp& p = result.product;
  ordered j;
  j["format"] = "acpc-strategy";
  j["version"] = kToolVersion;
  j["model_digest"] = model_digest;
  j["surveillance"] = p.surveillance_prop;
  j["prefer_shortcut"] = prefer_shortcut;

  {
    ordered d;
    d["ap"] = p.dra.ap();
    d["states"] = p.dra.state_count();
    d["initial"] = p.dra.initial();
    std::vector<DraStateId> delta;
    LabelMask masks = 1u << p.dra.ap().size();
    delta.reserve(static_cast<std::size_t>(p.dra.state_count()) * masks);
    for (DraStateId q = 0; q < p.dra.state_count(); ++q)
      for (LabelMask mask = 0; mask < masks; ++mask) delta.push_back(p.dra.step(q, mask));
    d["delta"] = delta;
    ordered pairs = ordered::array();
    for (const RabinPair& pair : p.dra.pairs()) {
      ordered e;
      e["fin"] = pair.fin;
      e["inf"] = pair.inf;
      pairs.push_back(std::move(e));
    }
    d["pairs"] = std::move(pairs);
    j["dra"] = std::move(d);
  }

  j["product_states"] = p.model.state_count();
  j["optimal_value"] = result.selection.optimal_value;
  j["schedule"] = dump_schedule(result.schedule);

  ordered reach = ordered::array();
  for (const auto& [s, a] : result.selection.reach_policy.assignment)
    reach.push_back(ordered::array({s, a}));
  j["reach_policy"] = std::move(reach);

  // Jump entries are stored against the bundle position, not the global
  // accepting-component index, so the file stays self-contained.
  std::vector<int> bundle_of_entry(result.entries.size(), -1);
  for (std::size_t i = 0; i < result.bundles.size(); ++i)
    bundle_of_entry[static_cast<std::size_t>(result.bundles[i].entry_index)] = static_cast<int>(i);
  ordered jumps = ordered::array();
  for (StateId s = 0; s < p.model.state_count(); ++s) {
    int entry = result.selection.jump_entry[static_cast<std::size_t>(s)];
    if (entry < 0) continue;
    int pos = bundle_of_entry[static_cast<std::size_t>(entry)];
    if (pos < 0) throw NumericError("strategy references an unselected component");
    jumps.push_back(ordered::array({s, pos}));
  }
  j["jump_entry"] = std::move(jumps);

  ordered bundles = ordered::array();
  for (const Bundle& b : result.bundles) {
    const EndComponent& ec = result.entries[static_cast<std::size_t>(b.entry_index)].component;
    ordered e;
    e["pair"] = b.pair_index;
    e["value"] = b.value;
    e["states"] = ec.states;
    e["actions"] = ec.actions;
    e["acceptance_policy"] = b.acceptance_policy;
    e["acceptance_cost"] = b.acceptance_cost;
    e["cycle_strategy"] = dump_fm(b.cycle_strategy);
    bundles.push_back(std::move(e));
  }
  j["bundles"] = std::move(bundles);

  j["shortcut"] = result.shortcut.has_value() ? ordered(dump_fm(*result.shortcut)) : ordered(nullptr);
  return j.dump(2) + "\n";
}

StrategyFile load_strategy(const std::string& text, const ModelDocument& doc) {
  json j = parse_json(text, "strategy file");
  check_keys(j,
             {"format", "version", "model_digest", "surveillance", "prefer_shortcut", "dra",
              "product_states", "optimal_value", "schedule", "reach_policy", "jump_entry",
              "bundles", "shortcut"},
             "strategy file");
  if (get_string(j, "format", "strategy file") != "acpc-strategy")
    throw InputError("strategy file: unrecognized format");
  if (get_string(j, "version", "strategy file") != kToolVersion)
    throw InputError("strategy file: written by a different tool version");
  std::string digest = fnv1a64_digest(emit_model(doc));
  if (get_string(j, "model_digest", "strategy file") != digest)
    throw InputError("strategy file: synthesized for a different model (digest mismatch)");
  std::string surveillance = get_string(j, "surveillance", "strategy file");
  if (surveillance != doc.surveillance)
    throw InputError("strategy file: surveillance proposition disagrees with the model document");

  Dra dra;
  {
    const json& d = need(j, "dra", "strategy file");
    check_keys(d, {"ap", "states", "initial", "delta", "pairs"}, "strategy dra");
    DraBuilder b;
    for (const json& name : get_array(d, "ap", "strategy dra")) {
      if (!name.is_string()) fail("strategy dra", "ap must hold strings");
      b.add_prop(name.get<std::string>());
    }
    long n_states = get_integer(d, "states", "strategy dra");
    if (n_states < 1) fail("strategy dra", "state count must be positive");
    for (long q = 0; q < n_states; ++q) b.add_state();
    long initial = get_integer(d, "initial", "strategy dra");
    if (initial < 0 || initial >= n_states) fail("strategy dra", "initial out of range");
    b.set_initial(static_cast<DraStateId>(initial));
    const json& delta = get_array(d, "delta", "strategy dra");
    std::size_t masks = std::size_t{1} << get_array(d, "ap", "strategy dra").size();
    if (delta.size() != static_cast<std::size_t>(n_states) * masks)
      fail("strategy dra", "delta has the wrong length");
    for (long q = 0; q < n_states; ++q) {
      const json& v0 = delta[static_cast<std::size_t>(q) * masks];
      if (!v0.is_number_integer()) fail("strategy dra", "delta must hold integers");
      long def = v0.get<long>();
      if (def < 0 || def >= n_states) fail("strategy dra", "delta entry out of range");
      b.set_default(static_cast<DraStateId>(q), static_cast<DraStateId>(def));
      for (std::size_t mask = 1; mask < masks; ++mask) {
        const json& v = delta[static_cast<std::size_t>(q) * masks + mask];
        if (!v.is_number_integer()) fail("strategy dra", "delta must hold integers");
        long to = v.get<long>();
        if (to < 0 || to >= n_states) fail("strategy dra", "delta entry out of range");
        if (to != def)
          b.set_edge(static_cast<DraStateId>(q), static_cast<LabelMask>(mask),
                     static_cast<DraStateId>(to));
      }
    }
    for (const json& pair : get_array(d, "pairs", "strategy dra")) {
      check_keys(pair, {"fin", "inf"}, "strategy dra pair");
      std::vector<DraStateId> fin, inf;
      for (const json& v : get_array(pair, "fin", "strategy dra pair")) {
        if (!v.is_number_integer() || v.get<long>() < 0 || v.get<long>() >= n_states)
          fail("strategy dra pair", "fin entry out of range");
        fin.push_back(v.get<DraStateId>());
      }
      for (const json& v : get_array(pair, "inf", "strategy dra pair")) {
        if (!v.is_number_integer() || v.get<long>() < 0 || v.get<long>() >= n_states)
          fail("strategy dra pair", "inf entry out of range");
        inf.push_back(v.get<DraStateId>());
      }
      b.add_pair(std::move(fin), std::move(inf));
    }
    dra = b.build();
  }

  SynthesisResult r;
  r.product = build_product(doc.model, dra, surveillance);
  const StateId n = r.product.model.state_count();
  if (get_integer(j, "product_states", "strategy file") != n)
    throw InputError("strategy file: product size disagrees with the rebuilt product");

  {
    const json& s = need(j, "schedule", "strategy file");
    check_keys(s, {"g_max", "l_floor", "early_exit", "phase1_timeout"}, "strategy schedule");
    r.schedule.g_max = get_number(s, "g_max", "strategy schedule");
    r.schedule.l_floor = get_integer(s, "l_floor", "strategy schedule");
    r.schedule.early_exit = get_bool(s, "early_exit", "strategy schedule");
    r.schedule.phase1_timeout = get_integer(s, "phase1_timeout", "strategy schedule");
    r.g_max = r.schedule.g_max;
  }

  const json& bundles = get_array(j, "bundles", "strategy file");
  for (std::size_t i = 0; i < bundles.size(); ++i) {
    const std::string where = "strategy bundles[" + std::to_string(i) + "]";
    const json& e = bundles[i];
    check_keys(e, {"pair", "value", "states", "actions", "acceptance_policy", "acceptance_cost",
                   "cycle_strategy"},
               where);
    EndComponent ec;
    const json& states = get_array(e, "states", where);
    for (const json& v : states) {
      if (!v.is_number_integer() || v.get<long>() < 0 || v.get<long>() >= n)
        fail(where, "component state out of range");
      ec.states.push_back(v.get<StateId>());
    }
    if (!std::is_sorted(ec.states.begin(), ec.states.end()) ||
        std::adjacent_find(ec.states.begin(), ec.states.end()) != ec.states.end() ||
        ec.states.empty())
      fail(where, "component states must be ascending and unique");
    const json& actions = get_array(e, "actions", where);
    if (actions.size() != ec.states.size()) fail(where, "actions must parallel states");
    for (std::size_t k = 0; k < actions.size(); ++k) {
      if (!actions[k].is_array()) fail(where, "actions must hold arrays");
      std::vector<ActionId> acts;
      for (const json& v : actions[k]) {
        if (!v.is_number_integer()) fail(where, "action ids must be integers");
        ActionId a = v.get<ActionId>();
        if (a < 0 || a >= r.product.model.action_count() ||
            !r.product.model.is_enabled(ec.states[k], a))
          fail(where, "retained action not enabled in the product");
        acts.push_back(a);
      }
      if (acts.empty()) fail(where, "every component state needs a retained action");
      ec.actions.push_back(std::move(acts));
    }

    Bundle b;
    b.entry_index = static_cast<int>(i);
    b.pair_index = static_cast<int>(get_integer(e, "pair", where));
    if (b.pair_index < 0 || b.pair_index >= static_cast<int>(dra.pairs().size()))
      fail(where, "pair index out of range");
    b.value = get_number(e, "value", where);
    b.component = extract_component(r.product.model, ec, r.product.surveillance);

    const json& policy = get_array(e, "acceptance_policy", where);
    if (policy.size() != ec.states.size()) fail(where, "acceptance_policy must parallel states");
    for (std::size_t k = 0; k < policy.size(); ++k) {
      if (!policy[k].is_number_integer()) fail(where, "acceptance_policy must hold integers");
      ActionId a = policy[k].get<ActionId>();
      if (a < 0 || !b.component.model.is_enabled(static_cast<StateId>(k), a))
        fail(where, "acceptance action not enabled in the component");
      b.acceptance_policy.push_back(a);
    }
    const json& cost = get_array(e, "acceptance_cost", where);
    if (cost.size() != ec.states.size()) fail(where, "acceptance_cost must parallel states");
    for (const json& v : cost) {
      if (!v.is_number()) fail(where, "acceptance_cost must hold numbers");
      b.acceptance_cost.push_back(v.get<double>());
    }
    b.cycle_strategy = load_fm(need(e, "cycle_strategy", where),
                               static_cast<StateId>(ec.states.size()), where + " cycle_strategy");

    MaecEntry entry;
    entry.component = std::move(ec);
    entry.pair_index = b.pair_index;
    entry.value = b.value;
    entry.value_known = true;
    r.entries.push_back(std::move(entry));
    r.bundles.push_back(std::move(b));
  }

  r.selection.jump_entry.assign(static_cast<std::size_t>(n), -1);
  for (const json& pair : get_array(j, "jump_entry", "strategy file")) {
    if (!pair.is_array() || pair.size() != 2 || !pair[0].is_number_integer() ||
        !pair[1].is_number_integer())
      fail("strategy jump_entry", "entries must be [state, bundle] pairs");
    long s = pair[0].get<long>(), pos = pair[1].get<long>();
    if (s < 0 || s >= n) fail("strategy jump_entry", "state out of range");
    if (pos < 0 || pos >= static_cast<long>(r.bundles.size()))
      fail("strategy jump_entry", "bundle position out of range");
    if (r.selection.jump_entry[static_cast<std::size_t>(s)] >= 0)
      fail("strategy jump_entry", "duplicate state");
    r.selection.jump_entry[static_cast<std::size_t>(s)] = static_cast<int>(pos);
  }
  for (const json& pair : get_array(j, "reach_policy", "strategy file")) {
    if (!pair.is_array() || pair.size() != 2 || !pair[0].is_number_integer() ||
        !pair[1].is_number_integer())
      fail("strategy reach_policy", "entries must be [state, action] pairs");
    long s = pair[0].get<long>(), a = pair[1].get<long>();
    if (s < 0 || s >= n) fail("strategy reach_policy", "state out of range");
    if (a < 0 || a >= r.product.model.action_count() ||
        !r.product.model.is_enabled(static_cast<StateId>(s), static_cast<ActionId>(a)))
      fail("strategy reach_policy", "action not enabled in the product");
    if (r.selection.reach_policy.defined_at(static_cast<StateId>(s)))
      fail("strategy reach_policy", "duplicate state");
    r.selection.reach_policy.assign(static_cast<StateId>(s), static_cast<ActionId>(a));
  }
  for (std::size_t i = 0; i < r.bundles.size(); ++i)
    r.selection.selected.push_back(static_cast<int>(i));
  r.selection.optimal_value = get_number(j, "optimal_value", "strategy file");

  const json& shortcut = need(j, "shortcut", "strategy file");
  if (!shortcut.is_null())
    r.shortcut = load_fm(shortcut, n, "strategy shortcut");

  StrategyFile out;
  out.result = std::move(r);
  out.prefer_shortcut = get_bool(j, "prefer_shortcut", "strategy file");
  return out;
}

// ---------------------------------------------------------------- reports --

std::string synthesis_report(const SynthesisResult& result, const std::string& model_digest,
                             const std::string& dra_digest) {
  const ProductMdp& p = result.product;
  ordered j;
  j["format"] = "acpc-synthesis-report";
  j["version"] = kToolVersion;
  j["tool"] = std::string(kToolName) + " " + kToolVersion;
  j["model_digest"] = model_digest;
  j["dra_digest"] = dra_digest;

  {
    ordered prod;
    prod["states"] = p.model.state_count();
    prod["initial"] = p.initial;
    long sur = 0;
    for (bool f : p.surveillance) sur += f ? 1 : 0;
    prod["surveillance_states"] = sur;
    j["product"] = std::move(prod);
  }

  std::vector<bool> selected(result.entries.size(), false);
  for (const Bundle& b : result.bundles) selected[static_cast<std::size_t>(b.entry_index)] = true;
  ordered comps = ordered::array();
  for (std::size_t i = 0; i < result.entries.size(); ++i) {
    const MaecEntry& e = result.entries[i];
    ordered c;
    c["pair"] = e.pair_index;
    c["states"] = e.component.states.size();
    c["value"] = e.value_known ? ordered(e.value) : ordered(nullptr);
    c["selected"] = static_cast<bool>(selected[i]);
    comps.push_back(std::move(c));
  }
  j["accepting_components"] = std::move(comps);

  j["optimal_value"] = result.selection.optimal_value;
  {
    ordered cert;
    cert["absorption_error"] = result.selection.absorption_error;
    cert["value_error"] = result.selection.value_error;
    j["certificates"] = std::move(cert);
  }
  j["schedule"] = dump_schedule(result.schedule);

  ordered bundles = ordered::array();
  for (const Bundle& b : result.bundles) {
    ordered e;
    e["entry"] = b.entry_index;
    e["pair"] = b.pair_index;
    e["value"] = b.value;
    e["component_states"] = b.component.original.size();
    e["reduced_states"] = b.reduced.states.size();
    e["reduced_actions"] = b.reduced.action_total();
    e["modes"] = b.cycle_strategy.mode_count;
    bundles.push_back(std::move(e));
  }
  j["bundles"] = std::move(bundles);
  j["shortcut_available"] = result.shortcut.has_value();
  return j.dump(2) + "\n";
}

std::string simulation_report(const std::vector<SimulationReport>& runs,
                              const SummaryStats& summary, const std::string& model_digest,
                              const std::string& strategy_digest) {
  ordered j;
  j["format"] = "acpc-simulation-report";
  j["version"] = kToolVersion;
  j["tool"] = std::string(kToolName) + " " + kToolVersion;
  j["model_digest"] = model_digest;
  j["strategy_digest"] = strategy_digest;
  j["seed"] = runs.empty() ? 0 : runs.front().seed;
  j["runs"] = runs.size();

  ordered results = ordered::array();
  for (const SimulationReport& r : runs) {
    ordered e;
    e["run"] = r.run_index;
    e["steps"] = r.steps;
    e["total_cost"] = r.total_cost;
    e["cycles"] = r.cycles;
    e["rounds"] = r.rounds;
    e["average_per_cycle"] = r.average_per_cycle;  // +inf serializes as null
    e["average_cycles_plus_one"] = r.average_cycles_plus_one;
    ordered rounds = ordered::array();
    for (const RoundReport& round : r.round_reports) {
      ordered d;
      d["index"] = round.index;
      d["acceptance_steps"] = round.acceptance_steps;
      d["acceptance_cost"] = round.acceptance_cost;
      d["cycles"] = round.cycles;
      d["cycle_cost"] = round.cycle_cost;
      d["cycle_cap"] = round.cycle_cap;
      d["round_average"] = round.round_average;
      d["exited_early"] = round.exited_early;
      rounds.push_back(std::move(d));
    }
    e["rounds_detail"] = std::move(rounds);
    results.push_back(std::move(e));
  }
  j["results"] = std::move(results);

  {
    ordered s;
    s["runs"] = summary.runs;
    s["mean_steps"] = summary.mean_steps;
    s["mean_cost"] = summary.mean_cost;
    s["mean_cycles"] = summary.mean_cycles;
    s["mean_average_per_cycle"] = summary.mean_average_per_cycle;
    s["mean_average_cycles_plus_one"] = summary.mean_average_cycles_plus_one;
    s["min_average_cycles_plus_one"] = summary.min_average_cycles_plus_one;
    s["max_average_cycles_plus_one"] = summary.max_average_cycles_plus_one;
    s["total_rounds"] = summary.total_rounds;
    s["mean_cycles_per_round"] = summary.mean_cycles_per_round;
    s["median_cycles_per_round"] = summary.median_cycles_per_round;
    j["summary"] = std::move(s);
  }
  return j.dump(2) + "\n";
}

// ------------------------------------------------------------------ files --

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot read file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw InputError("error while reading '" + path + "'");
  return buf.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot write file '" + path + "'");
  out << content;
  out.flush();
  if (!out) throw InputError("error while writing '" + path + "'");
}

}  // namespace acpc
