#pragma once

#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "causalmem/text.hpp"

namespace causalmem {

using json = nlohmann::json;

// ---------------------------------------------------------------------------
// Core vocabulary
// ---------------------------------------------------------------------------

/// Causal role annotation of a memory entry. Unknown is reserved for
/// unannotated banks (bank.unlabeled == true) and never joins the
/// gold/harmful/bad partitions.
enum class MemoryRole { Useful, Irrelevant, Harmful, Unknown };

enum class TaskFamily { TemporalQA, MultiEvidenceQA, InferentialQA, FactualQA };

/// Prompt slot an agent's context is rendered into.
enum class PromptKind { NoContext, MemoryContext, PastSessions, Summarize, Judge };

inline std::string role_name(MemoryRole role) {
  switch (role) {
    case MemoryRole::Useful: return "useful";
    case MemoryRole::Irrelevant: return "irrelevant";
    case MemoryRole::Harmful: return "harmful";
    case MemoryRole::Unknown: return "unknown";
  }
  return "unknown";
}

inline std::optional<MemoryRole> parse_role(std::string_view s) {
  if (s == "useful") return MemoryRole::Useful;
  if (s == "irrelevant") return MemoryRole::Irrelevant;
  if (s == "harmful") return MemoryRole::Harmful;
  if (s == "unknown") return MemoryRole::Unknown;
  return std::nullopt;
}

inline std::string family_name(TaskFamily f) {
  switch (f) {
    case TaskFamily::TemporalQA: return "temporal_qa";
    case TaskFamily::MultiEvidenceQA: return "multi_evidence_qa";
    case TaskFamily::InferentialQA: return "inferential_qa";
    case TaskFamily::FactualQA: return "factual_qa";
  }
  return "factual_qa";
}

inline std::string family_display_name(TaskFamily f) {
  switch (f) {
    case TaskFamily::TemporalQA: return "Temporal QA";
    case TaskFamily::MultiEvidenceQA: return "Multi-Evidence QA";
    case TaskFamily::InferentialQA: return "Inferential QA";
    case TaskFamily::FactualQA: return "Factual QA";
  }
  return "Factual QA";
}

inline std::optional<TaskFamily> parse_family(std::string_view s) {
  if (s == "temporal_qa") return TaskFamily::TemporalQA;
  if (s == "multi_evidence_qa") return TaskFamily::MultiEvidenceQA;
  if (s == "inferential_qa") return TaskFamily::InferentialQA;
  if (s == "factual_qa") return TaskFamily::FactualQA;
  return std::nullopt;
}

inline const std::vector<TaskFamily>& all_families() {
  static const std::vector<TaskFamily> fams = {
      TaskFamily::TemporalQA, TaskFamily::MultiEvidenceQA, TaskFamily::InferentialQA,
      TaskFamily::FactualQA};
  return fams;
}

inline std::string prompt_kind_name(PromptKind k) {
  switch (k) {
    case PromptKind::NoContext: return "no_context";
    case PromptKind::MemoryContext: return "memory_context";
    case PromptKind::PastSessions: return "past_sessions";
    case PromptKind::Summarize: return "summarize";
    case PromptKind::Judge: return "judge";
  }
  return "no_context";
}

// ---------------------------------------------------------------------------
// Records
// ---------------------------------------------------------------------------

/// One persistent memory record.
struct MemoryEntry {
  std::string id;
  std::string text;
  MemoryRole role = MemoryRole::Irrelevant;
  std::optional<std::string> scope;      // session id the memory derives from
  std::optional<std::string> timestamp;  // ISO-8601 calendar date
  std::string provenance;

  bool operator==(const MemoryEntry&) const = default;
};

/// Ordered memory bank. Iteration order is storage order.
struct MemoryBank {
  std::vector<MemoryEntry> entries;
  bool unlabeled = false;

  const MemoryEntry* find(const std::string& id) const {
    for (const auto& e : entries) {
      if (e.id == id) return &e;
    }
    return nullptr;
  }

  bool operator==(const MemoryBank&) const = default;
};

/// Deterministic-scorer fields plus judge-visible aliases. Aliases are
/// serialized into judge prompts only; the deterministic scorer never reads
/// them.
struct ScoringCriteria {
  std::optional<std::string> expected_answer;
  std::vector<std::string> aliases;
  std::vector<std::string> must_include;
  std::vector<std::string> must_not_include;
  std::optional<int> max_words;
  std::vector<std::string> required_steps;
  std::vector<std::string> style_constraints;

  /// True when at least one scorable field is present.
  bool scorable() const {
    return (expected_answer && !expected_answer->empty()) || !must_include.empty() ||
           !required_steps.empty();
  }

  bool operator==(const ScoringCriteria&) const = default;
};

inline constexpr std::string_view kStyleNoLists = "no_lists";
inline constexpr std::string_view kStyleSingleSentence = "single_sentence";

inline bool known_style_constraint(std::string_view name) {
  return name == kStyleNoLists || name == kStyleSingleSentence;
}

struct SessionRecord {
  std::string id;
  std::string timestamp;  // ISO-8601 calendar date
  std::string transcript;

  bool operator==(const SessionRecord&) const = default;
};

/// One benchmark item: current request, gold answer, scoring criteria,
/// memory bank, and the past sessions the memories derive from.
struct TaskExample {
  std::string id;
  TaskFamily family = TaskFamily::FactualQA;
  std::string request;
  std::string expected_answer;
  ScoringCriteria criteria;
  MemoryBank bank;
  std::vector<SessionRecord> past_sessions;

  bool operator==(const TaskExample&) const = default;
};

/// Output of a memory-selection agent for one example. exposed_ids is the set
/// used for selection-metric bookkeeping; for full-history and summary agents
/// it is the entire bank even though the prompt carries derived content.
struct SelectionResult {
  std::string agent_name;
  std::string example_id;
  std::vector<std::string> selected_ids;
  std::vector<std::string> exposed_ids;
  std::string context_payload;
  PromptKind prompt = PromptKind::MemoryContext;
  std::vector<std::string> flags;
};

/// Renders a list of memory entries into the fixed context layout shared by
/// every memory-bank agent.
inline std::string render_memory_lines(const std::vector<const MemoryEntry*>& entries) {
  std::string out;
  for (const auto* e : entries) {
    out += "- ";
    out += e->text;
    out += '\n';
  }
  return out;
}

inline std::string render_text_lines(const std::vector<std::string>& texts) {
  std::string out;
  for (const auto& t : texts) {
    out += "- ";
    out += t;
    out += '\n';
  }
  return out;
}

// ---------------------------------------------------------------------------
// Partitioning and validation
// ---------------------------------------------------------------------------

/// Role partition of a bank: gold (useful), harmful, bad (irrelevant plus
/// harmful), unknown. Unknown entries join no metric partition.
struct BankPartition {
  std::set<std::string> gold;
  std::set<std::string> harmful;
  std::set<std::string> bad;
  std::set<std::string> unknown;
};

inline BankPartition partition_bank(const MemoryBank& bank) {
  BankPartition p;
  for (const auto& e : bank.entries) {
    switch (e.role) {
      case MemoryRole::Useful: p.gold.insert(e.id); break;
      case MemoryRole::Harmful:
        p.harmful.insert(e.id);
        p.bad.insert(e.id);
        break;
      case MemoryRole::Irrelevant: p.bad.insert(e.id); break;
      case MemoryRole::Unknown: p.unknown.insert(e.id); break;
    }
  }
  return p;
}

/// Deterministic schema validation. Returns an empty list iff the example is
/// admissible; every deviation contributes one human-readable violation, in a
/// fixed order, so repeated runs produce byte-identical reports.
inline std::vector<std::string> validate_example(const TaskExample& example) {
  std::vector<std::string> violations;

  if (trim(example.request).empty()) {
    violations.push_back("request: must be non-empty");
  }
  if (!example.criteria.scorable()) {
    violations.push_back(
        "criteria: at least one of expected_answer, must_include, or required_steps is required");
  }
  if (example.criteria.max_words && *example.criteria.max_words <= 0) {
    violations.push_back("criteria: max_words must be positive");
  }
  for (const auto& s : example.criteria.style_constraints) {
    if (!known_style_constraint(s)) {
      violations.push_back("criteria: unknown style constraint '" + s + "'");
    }
  }

  std::set<std::string> seen_ids;
  std::set<std::string> session_ids;
  for (const auto& s : example.past_sessions) {
    session_ids.insert(s.id);
    if (!s.timestamp.empty() && !is_iso_date(s.timestamp)) {
      violations.push_back("session '" + s.id + "': timestamp '" + s.timestamp +
                           "' is not an ISO-8601 date");
    }
  }

  for (const auto& m : example.bank.entries) {
    if (!seen_ids.insert(m.id).second) {
      violations.push_back("memory '" + m.id + "': duplicate id");
    }
    if (trim(m.text).empty()) {
      violations.push_back("memory '" + m.id + "': text must be non-empty");
    }
    if (m.role == MemoryRole::Harmful && m.provenance.empty()) {
      violations.push_back("memory '" + m.id + "': harmful memory requires provenance");
    }
    if (m.role == MemoryRole::Unknown && !example.bank.unlabeled) {
      violations.push_back("memory '" + m.id + "': unknown role requires an unlabeled bank");
    }
    if (m.timestamp && !is_iso_date(*m.timestamp)) {
      violations.push_back("memory '" + m.id + "': timestamp '" + *m.timestamp +
                           "' is not an ISO-8601 date");
    }
    if (m.role == MemoryRole::Useful && m.scope && !session_ids.count(*m.scope)) {
      violations.push_back("memory '" + m.id + "': scope '" + *m.scope +
                           "' does not reference a past session");
    }
  }

  // Support check: the expected answer must be recoverable from the useful
  // memories (token containment, stopwords removed) unless must_include pins
  // the criteria independently.
  if (example.criteria.must_include.empty()) {
    std::string useful_concat;
    for (const auto& m : example.bank.entries) {
      if (m.role == MemoryRole::Useful) {
        useful_concat += m.text;
        useful_concat += ' ';
      }
    }
    std::set<std::string> useful_tokens;
    for (auto& t : tokenize(useful_concat)) useful_tokens.insert(std::move(t));
    for (const auto& tok : content_tokens(example.expected_answer)) {
      if (!useful_tokens.count(tok)) {
        violations.push_back(
            "support: expected answer is not covered by useful memories and must_include "
            "is empty (missing token '" +
            tok + "')");
        break;
      }
    }
  }

  // Leakage check: a harmful memory must not contain the expected answer
  // verbatim.
  if (!example.expected_answer.empty()) {
    for (const auto& m : example.bank.entries) {
      if (m.role == MemoryRole::Harmful &&
          m.text.find(example.expected_answer) != std::string::npos) {
        violations.push_back("leakage: harmful memory '" + m.id +
                             "' contains the expected answer verbatim");
      }
    }
  }

  return violations;
}

// ---------------------------------------------------------------------------
// JSON wire format (one example per JSONL line)
// ---------------------------------------------------------------------------

namespace detail {

inline json optional_string_json(const std::optional<std::string>& v) {
  return v ? json(*v) : json(nullptr);
}

inline std::optional<std::string> optional_string_from(const json& j, const char* field) {
  if (!j.contains(field) || j.at(field).is_null()) return std::nullopt;
  return j.at(field).get<std::string>();
}

}  // namespace detail

inline json criteria_to_json(const ScoringCriteria& c) {
  json j;
  j["expected_answer"] = detail::optional_string_json(c.expected_answer);
  j["aliases"] = c.aliases;
  j["must_include"] = c.must_include;
  j["must_not_include"] = c.must_not_include;
  j["max_words"] = c.max_words ? json(*c.max_words) : json(nullptr);
  j["required_steps"] = c.required_steps;
  j["style_constraints"] = c.style_constraints;
  return j;
}

inline ScoringCriteria criteria_from_json(const json& j) {
  ScoringCriteria c;
  c.expected_answer = detail::optional_string_from(j, "expected_answer");
  if (j.contains("aliases")) c.aliases = j.at("aliases").get<std::vector<std::string>>();
  if (j.contains("must_include"))
    c.must_include = j.at("must_include").get<std::vector<std::string>>();
  if (j.contains("must_not_include"))
    c.must_not_include = j.at("must_not_include").get<std::vector<std::string>>();
  if (j.contains("max_words") && !j.at("max_words").is_null())
    c.max_words = j.at("max_words").get<int>();
  if (j.contains("required_steps"))
    c.required_steps = j.at("required_steps").get<std::vector<std::string>>();
  if (j.contains("style_constraints"))
    c.style_constraints = j.at("style_constraints").get<std::vector<std::string>>();
  return c;
}

inline json example_to_json(const TaskExample& e) {
  json j;
  j["id"] = e.id;
  j["family"] = family_name(e.family);
  j["request"] = e.request;
  j["expected_answer"] = e.expected_answer;
  j["criteria"] = criteria_to_json(e.criteria);
  json mems = json::array();
  for (const auto& m : e.bank.entries) {
    json jm;
    jm["id"] = m.id;
    jm["text"] = m.text;
    jm["role"] = role_name(m.role);
    jm["scope"] = detail::optional_string_json(m.scope);
    jm["timestamp"] = detail::optional_string_json(m.timestamp);
    jm["provenance"] = m.provenance;
    mems.push_back(std::move(jm));
  }
  j["memories"] = std::move(mems);
  if (e.bank.unlabeled) j["unlabeled"] = true;
  json sessions = json::array();
  for (const auto& s : e.past_sessions) {
    json js;
    js["id"] = s.id;
    js["timestamp"] = s.timestamp;
    js["transcript"] = s.transcript;
    sessions.push_back(std::move(js));
  }
  j["past_sessions"] = std::move(sessions);
  return j;
}

/// Parses one dataset record. Structural problems (missing fields, bad enum
/// values) throw std::runtime_error with a message suitable for the rejected
/// list.
inline TaskExample example_from_json(const json& j) {
  TaskExample e;
  e.id = j.at("id").get<std::string>();
  const auto family_str = j.at("family").get<std::string>();
  const auto fam = parse_family(family_str);
  if (!fam) {
    throw std::runtime_error("family: invalid value '" + family_str +
                             "' (expected temporal_qa, multi_evidence_qa, inferential_qa, "
                             "or factual_qa)");
  }
  e.family = *fam;
  e.request = j.at("request").get<std::string>();
  e.expected_answer = j.at("expected_answer").get<std::string>();
  e.criteria = criteria_from_json(j.at("criteria"));
  if (j.contains("unlabeled")) e.bank.unlabeled = j.at("unlabeled").get<bool>();
  for (const auto& jm : j.at("memories")) {
    MemoryEntry m;
    m.id = jm.at("id").get<std::string>();
    m.text = jm.at("text").get<std::string>();
    const auto role_str = jm.at("role").get<std::string>();
    const auto role = parse_role(role_str);
    if (!role) {
      throw std::runtime_error("memory '" + m.id + "': invalid role '" + role_str + "'");
    }
    m.role = *role;
    m.scope = detail::optional_string_from(jm, "scope");
    m.timestamp = detail::optional_string_from(jm, "timestamp");
    if (jm.contains("provenance") && !jm.at("provenance").is_null())
      m.provenance = jm.at("provenance").get<std::string>();
    e.bank.entries.push_back(std::move(m));
  }
  if (j.contains("past_sessions")) {
    for (const auto& js : j.at("past_sessions")) {
      SessionRecord s;
      s.id = js.at("id").get<std::string>();
      s.timestamp = js.at("timestamp").get<std::string>();
      s.transcript = js.at("transcript").get<std::string>();
      e.past_sessions.push_back(std::move(s));
    }
  }
  return e;
}

}  // namespace causalmem
