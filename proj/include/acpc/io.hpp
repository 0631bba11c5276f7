#pragma once

#include <string>
#include <vector>

#include "acpc/model.hpp"
#include "acpc/simulate.hpp"
#include "acpc/synthesis.hpp"

namespace acpc {

inline constexpr const char* kToolName = "acpc";
inline constexpr const char* kToolVersion = "0.1.0";

// FNV-1a 64-bit digest of a byte string, rendered "fnv1a64:<16 hex digits>".
// Digests in reports and strategy files are always taken over the canonical
// emission of the parsed document, so formatting differences do not matter.
std::string fnv1a64_digest(const std::string& bytes);

// ---------------------------------------------------------------- model ----
// JSON model document: ap, states (id + labels), actions, initial,
// surveillance, transitions (from/action/to/prob triples), costs
// (state/action/cost). Unknown fields and duplicate transition triples are
// rejected; rows off one by more than 1e-9 are rejected, closer rows are
// renormalized.
struct ModelDocument {
  Mdp model;
  std::string surveillance;
};

ModelDocument parse_model(const std::string& text);
std::string emit_model(const ModelDocument& doc);

// ------------------------------------------------------------------ dra ----
// HOA subset: explicit-state, state-based acceptance, deterministic, Rabin
// only ("acc-name: Rabin k", "Acceptance: 2k Fin(0) & Inf(1) | ..."), one
// mandatory default edge "[t] q" per state. Acceptance set 2i marks the
// finitely-often set of pair i, set 2i+1 the infinitely-often set.
Dra parse_hoa(const std::string& text);
std::string emit_hoa(const Dra& dra);

// ------------------------------------------------------------- strategy ----
// Self-contained controller file: the automaton, the reach policy, the jump
// table, every selected component's phase strategies and the round schedule.
// Bound to the model by canonical digest; loading rebuilds the product and
// refuses a mismatched model.
struct StrategyFile {
  SynthesisResult result;
  bool prefer_shortcut = false;
};

std::string emit_strategy(const SynthesisResult& result, bool prefer_shortcut,
                          const std::string& model_digest);
StrategyFile load_strategy(const std::string& text, const ModelDocument& doc);

// -------------------------------------------------------------- reports ----
// Reports serialize with a fixed key order and no timestamps: identical
// inputs produce byte-identical documents.
std::string synthesis_report(const SynthesisResult& result,
                             const std::string& model_digest,
                             const std::string& dra_digest);
std::string simulation_report(const std::vector<SimulationReport>& runs,
                              const SummaryStats& summary,
                              const std::string& model_digest,
                              const std::string& strategy_digest);

// ---------------------------------------------------------------- files ----
std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

}  // namespace acpc
