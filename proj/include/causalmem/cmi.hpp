#pragma once

#include <algorithm>
#include <cctype>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "causalmem/domain.hpp"
#include "causalmem/gateway.hpp"
#include "causalmem/retrieval.hpp"
#include "causalmem/scoring.hpp"
#include "causalmem/text.hpp"
#include "causalmem/util.hpp"

namespace causalmem {

enum class LabelMode { Labeled, Unlabeled };

inline std::string label_mode_name(LabelMode m) {
  return m == LabelMode::Labeled ? "labeled" : "unlabeled";
}

inline std::optional<LabelMode> parse_label_mode(std::string_view s) {
  if (s == "labeled") return LabelMode::Labeled;
  if (s == "unlabeled") return LabelMode::Unlabeled;
  return std::nullopt;
}

/// Per-candidate intervention outcome. The arithmetic identities
/// utility == s_with - s_no and stability == s_with - s_pert hold exactly on
/// every record, including risk-filtered and failed ones (which stay zeroed
/// and unevaluated).
struct InterventionRecord {
  std::string memory_id;
  MemoryRole role = MemoryRole::Unknown;
  double s_no = 0.0;
  double s_with = 0.0;
  double s_pert = 0.0;
  double utility = 0.0;    // s_with - s_no
  double stability = 0.0;  // s_with - s_pert
  bool risk_filtered = false;
  bool selected = false;
  bool evaluated = false;
  bool unperturbable = false;
  std::string perturbed_text;
};

inline json intervention_to_json(const InterventionRecord& r) {
  json j;
  j["memory_id"] = r.memory_id;
  j["role"] = role_name(r.role);
  j["s_no"] = r.s_no;
  j["s_with"] = r.s_with;
  j["s_pert"] = r.s_pert;
  j["utility"] = r.utility;
  j["stability"] = r.stability;
  j["risk_filtered"] = r.risk_filtered;
  j["selected"] = r.selected;
  j["evaluated"] = r.evaluated;
  j["unperturbable"] = r.unperturbable;
  j["perturbed_text"] = r.perturbed_text;
  return j;
}

inline InterventionRecord intervention_from_json(const json& j) {
  InterventionRecord r;
  r.memory_id = j.at("memory_id").get<std::string>();
  r.role = parse_role(j.at("role").get<std::string>()).value_or(MemoryRole::Unknown);
  r.s_no = j.at("s_no").get<double>();
  r.s_with = j.at("s_with").get<double>();
  r.s_pert = j.at("s_pert").get<double>();
  r.utility = j.at("utility").get<double>();
  r.stability = j.at("stability").get<double>();
  r.risk_filtered = j.at("risk_filtered").get<bool>();
  r.selected = j.at("selected").get<bool>();
  r.evaluated = j.at("evaluated").get<bool>();
  r.unperturbable = j.at("unperturbable").get<bool>();
  r.perturbed_text = j.at("perturbed_text").get<std::string>();
  return r;
}

// ---------------------------------------------------------------------------
// Risk filter
// ---------------------------------------------------------------------------

struct RiskFilterOutcome {
  std::vector<RankedCandidate> kept;
  std::vector<std::string> removed_ids;
};

/// Label-based pre-selection suppression. Labeled mode drops candidates whose
/// role is Harmful; unlabeled mode passes everything through (a learned
/// causal-role predictor would hook in here).
inline RiskFilterOutcome risk_filter(const std::vector<RankedCandidate>& candidates,
                                     const MemoryBank& bank, LabelMode mode) {
  RiskFilterOutcome out;
  for (const auto& c : candidates) {
    const MemoryEntry* entry = bank.find(c.memory_id);
    if (mode == LabelMode::Labeled && entry && entry->role == MemoryRole::Harmful) {
      out.removed_ids.push_back(c.memory_id);
    } else {
      out.kept.push_back(c);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Perturbation
// ---------------------------------------------------------------------------

struct PerturbResult {
  std::string text;
  bool unperturbable = false;  // no admissible perturbation exists
};

inline constexpr std::string_view kNumberPlaceholder = "⟨X⟩";  // ⟨X⟩
inline constexpr std::string_view kEntityPlaceholder = "⟨E⟩";  // ⟨E⟩

namespace detail {

struct SplitToken {
  std::string prefix;  // leading punctuation
  std::string core;
  std::string suffix;  // trailing punctuation
};

inline SplitToken split_token(const std::string& token) {
  std::size_t b = 0;
  std::size_t e = token.size();
  while (b < e && !std::isalnum(static_cast<unsigned char>(token[b]))) ++b;
  while (e > b && !std::isalnum(static_cast<unsigned char>(token[e - 1]))) --e;
  return {token.substr(0, b), token.substr(b, e - b), token.substr(e)};
}

inline bool contains_digit(const std::string& s) {
  return std::any_of(s.begin(), s.end(),
                     [](unsigned char c) { return std::isdigit(c) != 0; });
}

inline bool is_month_name(const std::string& s) {
  for (const auto& m : month_names()) {
    if (s == m) return true;
  }
  return false;
}

inline std::vector<std::string> whitespace_tokens(const std::string& text) {
  std::vector<std::string> tokens;
  std::string current;
  for (char c : text) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      if (!current.empty()) tokens.push_back(std::move(current)), current.clear();
    } else {
      current.push_back(c);
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

inline std::string join_tokens(const std::vector<std::string>& tokens) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out += ' ';
    out += tokens[i];
  }
  return out;
}

}  // namespace detail

/// Counterfactual rewrite of a memory text. Numbers and date tokens become
/// ⟨X⟩, capitalized tokens (entity proxies) become ⟨E⟩, and a text that
/// offers neither is token-shuffled under the seed. A single-token text (or
/// one whose tokens are all identical) has no admissible rewrite and is
/// flagged unperturbable; the caller treats its stability as 0.
inline PerturbResult perturb(const MemoryEntry& memory, std::uint64_t seed) {
  auto tokens = detail::whitespace_tokens(memory.text);
  if (tokens.size() < 2) {
    return {memory.text, true};
  }

  bool changed = false;
  std::vector<std::string> rewritten;
  rewritten.reserve(tokens.size());
  for (const auto& token : tokens) {
    const auto parts = detail::split_token(token);
    if (parts.core.empty()) {
      rewritten.push_back(token);
      continue;
    }
    if (detail::contains_digit(parts.core) || detail::is_month_name(parts.core)) {
      rewritten.push_back(parts.prefix + std::string(kNumberPlaceholder) + parts.suffix);
      changed = true;
    } else if (std::isupper(static_cast<unsigned char>(parts.core[0]))) {
      rewritten.push_back(parts.prefix + std::string(kEntityPlaceholder) + parts.suffix);
      changed = true;
    } else {
      rewritten.push_back(token);
    }
  }
  if (changed) {
    return {detail::join_tokens(rewritten), false};
  }

  // Nothing to placeholder: shuffle deterministically.
  SplitMix64 rng(mix_seed(seed, fnv1a64(memory.id) ^ fnv1a64(memory.text)));
  std::vector<std::string> shuffled = tokens;
  for (std::size_t i = shuffled.size(); i > 1; --i) {
    std::swap(shuffled[i - 1], shuffled[rng.next_below(i)]);
  }
  if (shuffled == tokens) {
    std::rotate(shuffled.begin(), shuffled.begin() + 1, shuffled.end());
  }
  if (shuffled == tokens) {
    return {memory.text, true};  // all tokens identical; no reordering differs
  }
  return {detail::join_tokens(shuffled), false};
}

// ---------------------------------------------------------------------------
// Intervention scoring and selection
// ---------------------------------------------------------------------------

inline std::string agent_name_cmi() { return "cmi"; }

struct InterventionOutcome {
  SelectionResult selection;
  std::vector<InterventionRecord> records;
  std::string no_memory_answer;
  double s_no = 0.0;
};

/// Scores each candidate under the no-memory / with-memory / perturbed-memory
/// conditions with the deterministic scorer, then applies the selection rule:
/// utility > 0, stability >= 0, within budget (ties: utility desc, stability
/// desc, id asc). The no-memory response is generated once per example and
/// shared across candidates.
inline InterventionOutcome intervene(const TaskExample& example,
                                     const std::vector<RankedCandidate>& candidates,
                                     ModelBackend& backend, int budget, std::uint64_t seed) {
  if (budget < 0) throw std::invalid_argument("intervene: budget must be >= 0");

  InterventionOutcome out;
  out.selection.agent_name = agent_name_cmi();
  out.selection.example_id = example.id;

  GenerationRequest no_req;
  no_req.kind = PromptKind::NoContext;
  no_req.task_text = example.request;
  out.no_memory_answer = backend.generate(no_req);
  out.s_no = score_det(out.no_memory_answer, example.criteria).value;

  for (const auto& c : candidates) {
    InterventionRecord rec;
    rec.memory_id = c.memory_id;
    const MemoryEntry* entry = example.bank.find(c.memory_id);
    if (!entry) {
      out.records.push_back(std::move(rec));  // unevaluated; id not in bank
      continue;
    }
    rec.role = entry->role;
    try {
      const PerturbResult pert = perturb(*entry, seed);
      rec.perturbed_text = pert.text;
      rec.unperturbable = pert.unperturbable;

      GenerationRequest with_req;
      with_req.kind = PromptKind::MemoryContext;
      with_req.task_text = example.request;
      with_req.context_payload = render_memory_lines({entry});
      const std::string y_with = backend.generate(with_req);
      rec.s_with = score_det(y_with, example.criteria).value;

      if (pert.unperturbable) {
        rec.s_pert = rec.s_with;  // stability pinned to 0 for the degenerate case
      } else {
        GenerationRequest pert_req;
        pert_req.kind = PromptKind::MemoryContext;
        pert_req.task_text = example.request;
        pert_req.context_payload = render_text_lines({pert.text});
        const std::string y_pert = backend.generate(pert_req);
        rec.s_pert = score_det(y_pert, example.criteria).value;
      }

      rec.s_no = out.s_no;
      rec.utility = rec.s_with - rec.s_no;
      rec.stability = rec.s_with - rec.s_pert;
      rec.evaluated = true;
    } catch (const std::exception&) {
      // A failed candidate is recorded unevaluated and never selected.
      rec = InterventionRecord{};
      rec.memory_id = c.memory_id;
      rec.role = entry->role;
    }
    out.records.push_back(std::move(rec));
  }

  // Selection rule.
  std::vector<InterventionRecord*> passing;
  for (auto& rec : out.records) {
    if (rec.evaluated && !rec.risk_filtered && rec.utility > 0.0 && rec.stability >= 0.0) {
      passing.push_back(&rec);
    }
  }
  std::sort(passing.begin(), passing.end(),
            [](const InterventionRecord* a, const InterventionRecord* b) {
              if (a->utility != b->utility) return a->utility > b->utility;
              if (a->stability != b->stability) return a->stability > b->stability;
              return a->memory_id < b->memory_id;
            });
  if (passing.size() > static_cast<std::size_t>(budget)) {
    passing.resize(static_cast<std::size_t>(budget));
  }

  std::vector<const MemoryEntry*> chosen;
  for (auto* rec : passing) {
    rec->selected = true;
    out.selection.selected_ids.push_back(rec->memory_id);
    chosen.push_back(example.bank.find(rec->memory_id));
  }
  out.selection.exposed_ids = out.selection.selected_ids;
  out.selection.context_payload = render_memory_lines(chosen);
  out.selection.prompt =
      chosen.empty() ? PromptKind::NoContext : PromptKind::MemoryContext;
  return out;
}

struct CmiConfig {
  int proposal_k = 8;            // candidate pool size K
  int budget = 3;                // selection budget k
  LabelMode mode = LabelMode::Labeled;
  std::uint64_t seed = 1;
};

struct CmiOutcome {
  SelectionResult selection;
  std::vector<InterventionRecord> records;
  std::string answer;
};

/// The full selector: propose -> risk-filter -> intervene -> final answer
/// from the selected set (the shared no-memory response when nothing passes).
inline CmiOutcome cmi_agent(const TaskExample& example, const CmiConfig& config,
                            ModelBackend& backend, Embedder& embedder) {
  const auto proposed = propose_candidates(example, config.proposal_k, embedder);
  const auto filtered = risk_filter(proposed, example.bank, config.mode);
  auto outcome = intervene(example, filtered.kept, backend, config.budget, config.seed);

  // Merge evaluated and risk-filtered records back into proposal order.
  std::map<std::string, InterventionRecord> by_id;
  for (auto& rec : outcome.records) by_id.emplace(rec.memory_id, std::move(rec));

  CmiOutcome result;
  result.selection = std::move(outcome.selection);
  for (const auto& c : proposed) {
    const auto it = by_id.find(c.memory_id);
    if (it != by_id.end()) {
      result.records.push_back(std::move(it->second));
    } else {
      InterventionRecord stub;
      stub.memory_id = c.memory_id;
      const MemoryEntry* entry = example.bank.find(c.memory_id);
      if (entry) stub.role = entry->role;
      stub.risk_filtered = true;
      result.records.push_back(std::move(stub));
    }
  }

  if (result.selection.selected_ids.empty()) {
    result.answer = outcome.no_memory_answer;
  } else {
    GenerationRequest final_req;
    final_req.kind = PromptKind::MemoryContext;
    final_req.task_text = example.request;
    final_req.context_payload = result.selection.context_payload;
    result.answer = backend.generate(final_req);
  }
  return result;
}

}  // namespace causalmem
