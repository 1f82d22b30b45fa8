#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "causalmem/domain.hpp"
#include "causalmem/gateway.hpp"
#include "causalmem/retrieval.hpp"
#include "causalmem/text.hpp"

namespace causalmem {

enum class AgentKind {
  NoMemory,
  FullHistory,
  SummaryMemory,
  VectorMemory,
  GraphMemory,
  ReflectionMemory,
  Cmi
};

inline const std::vector<AgentKind>& all_agents() {
  static const std::vector<AgentKind> agents = {
      AgentKind::NoMemory,     AgentKind::FullHistory,      AgentKind::SummaryMemory,
      AgentKind::VectorMemory, AgentKind::GraphMemory,      AgentKind::ReflectionMemory,
      AgentKind::Cmi};
  return agents;
}

inline std::string agent_name(AgentKind kind) {
  switch (kind) {
    case AgentKind::NoMemory: return "no_memory";
    case AgentKind::FullHistory: return "full_history";
    case AgentKind::SummaryMemory: return "summary_memory";
    case AgentKind::VectorMemory: return "vector_memory";
    case AgentKind::GraphMemory: return "graph_memory";
    case AgentKind::ReflectionMemory: return "reflection_memory";
    case AgentKind::Cmi: return "cmi";
  }
  return "no_memory";
}

inline std::string agent_display_name(AgentKind kind) {
  switch (kind) {
    case AgentKind::NoMemory: return "No Memory";
    case AgentKind::FullHistory: return "Full History";
    case AgentKind::SummaryMemory: return "Summary Memory";
    case AgentKind::VectorMemory: return "Vector Memory";
    case AgentKind::GraphMemory: return "Graph Memory";
    case AgentKind::ReflectionMemory: return "Reflection Memory";
    case AgentKind::Cmi: return "CMI";
  }
  return "No Memory";
}

inline std::optional<AgentKind> parse_agent(std::string_view s) {
  for (const auto kind : all_agents()) {
    if (agent_name(kind) == s) return kind;
  }
  return std::nullopt;
}

namespace detail {

inline std::vector<std::string> all_bank_ids(const MemoryBank& bank) {
  std::vector<std::string> ids;
  ids.reserve(bank.entries.size());
  for (const auto& m : bank.entries) ids.push_back(m.id);
  return ids;
}

}  // namespace detail

/// Answers from the task wording alone.
inline SelectionResult no_memory_agent(const TaskExample& example) {
  SelectionResult r;
  r.agent_name = agent_name(AgentKind::NoMemory);
  r.example_id = example.id;
  r.prompt = PromptKind::NoContext;
  return r;
}

/// Prompts with the raw past-session transcripts in chronological order. For
/// selection bookkeeping this agent counts as exposing the entire bank.
inline SelectionResult full_history_agent(const TaskExample& example) {
  SelectionResult r;
  r.agent_name = agent_name(AgentKind::FullHistory);
  r.example_id = example.id;
  r.selected_ids = detail::all_bank_ids(example.bank);
  r.exposed_ids = r.selected_ids;
  if (example.past_sessions.empty()) {
    r.prompt = PromptKind::NoContext;
    r.flags.push_back("no_past_sessions");
    return r;
  }
  std::vector<const SessionRecord*> ordered;
  for (const auto& s : example.past_sessions) ordered.push_back(&s);
  std::stable_sort(ordered.begin(), ordered.end(),
                   [](const SessionRecord* a, const SessionRecord* b) {
                     return a->timestamp < b->timestamp;  // ISO dates sort lexically
                   });
  std::string context;
  for (std::size_t i = 0; i < ordered.size(); ++i) {
    if (i) context += "\n\n";
    context += "[Session " + ordered[i]->id + " | " + ordered[i]->timestamp + "]\n" +
               ordered[i]->transcript;
  }
  r.context_payload = std::move(context);
  r.prompt = PromptKind::PastSessions;
  return r;
}

/// Replaces the bank with one synthetic summary memory. The synthetic memory
/// is not a bank member; bookkeeping still counts the full bank as exposed.
inline SelectionResult summary_memory_agent(const TaskExample& example, ModelBackend& backend) {
  SelectionResult r;
  r.agent_name = agent_name(AgentKind::SummaryMemory);
  r.example_id = example.id;
  if (example.bank.entries.empty()) {
    r.prompt = PromptKind::NoContext;
    r.flags.push_back("empty_bank");
    return r;
  }
  std::vector<const MemoryEntry*> all;
  for (const auto& m : example.bank.entries) all.push_back(&m);
  const std::string summary = summarize(all, backend);
  r.exposed_ids = detail::all_bank_ids(example.bank);
  r.context_payload = render_text_lines({summary});
  r.prompt = PromptKind::MemoryContext;
  return r;
}

inline SelectionResult vector_memory_agent(const TaskExample& example, int k,
                                           Embedder& embedder) {
  return top_k_by_similarity(example, k, embedder);
}

/// Lexical/scope graph retrieval: memories connect to their non-stopword
/// tokens (edge weight = token count) and to their scope session (weight 2).
/// A memory's activation is the min-count overlap with the query tokens, plus
/// the scope bonus when the query names the scope id or the memory's date.
inline SelectionResult graph_memory_agent(const TaskExample& example, int k) {
  if (k < 1) throw std::invalid_argument("graph_memory_agent: k must be >= 1");
  SelectionResult r;
  r.agent_name = agent_name(AgentKind::GraphMemory);
  r.example_id = example.id;
  r.prompt = PromptKind::MemoryContext;
  if (example.bank.entries.empty()) {
    r.prompt = PromptKind::NoContext;
    r.flags.push_back("empty_bank");
    return r;
  }

  std::map<std::string, int> query_counts;
  for (const auto& t : tokenize(example.request)) {
    if (!is_stopword(t)) query_counts[t]++;
  }
  const std::string query_norm = normalize_answer(example.request);

  std::vector<std::pair<int, std::string>> scored;
  for (const auto& m : example.bank.entries) {
    std::map<std::string, int> mem_counts;
    for (const auto& t : tokenize(m.text)) {
      if (!is_stopword(t)) mem_counts[t]++;
    }
    int activation = 0;
    for (const auto& [token, qc] : query_counts) {
      const auto it = mem_counts.find(token);
      if (it != mem_counts.end()) activation += std::min(qc, it->second);
    }
    bool scope_hit = false;
    if (m.scope) {
      const std::string scope_norm = normalize_answer(*m.scope);
      if (!scope_norm.empty() && query_norm.find(scope_norm) != std::string::npos)
        scope_hit = true;
    }
    if (!scope_hit && m.timestamp) {
      const std::string iso_norm = normalize_answer(*m.timestamp);
      const std::string human_norm = normalize_answer(iso_to_human(*m.timestamp));
      if ((!iso_norm.empty() && query_norm.find(iso_norm) != std::string::npos) ||
          (!human_norm.empty() && query_norm.find(human_norm) != std::string::npos))
        scope_hit = true;
    }
    if (scope_hit) activation += 2;
    scored.emplace_back(activation, m.id);
  }

  std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  const std::size_t take = std::min<std::size_t>(static_cast<std::size_t>(k), scored.size());
  std::vector<const MemoryEntry*> chosen;
  for (std::size_t i = 0; i < take; ++i) {
    r.selected_ids.push_back(scored[i].second);
    chosen.push_back(example.bank.find(scored[i].second));
  }
  r.exposed_ids = r.selected_ids;
  r.context_payload = render_memory_lines(chosen);
  return r;
}

/// Deterministic label-aware reflection of a memory entry. No model calls.
inline std::string reflect_memory(const MemoryEntry& entry) {
  switch (entry.role) {
    case MemoryRole::Useful: return "Lesson: " + entry.text;
    case MemoryRole::Harmful:
      return "Caution: a past record claims " + entry.text + "; verify before trusting.";
    default: return "Note: " + entry.text;
  }
}

/// Renders every memory through its role template and retrieves reflections
/// by shared non-stopword token count. The context carries the reflections,
/// not the raw memory texts.
inline SelectionResult reflection_memory_agent(const TaskExample& example, int k) {
  if (k < 1) throw std::invalid_argument("reflection_memory_agent: k must be >= 1");
  SelectionResult r;
  r.agent_name = agent_name(AgentKind::ReflectionMemory);
  r.example_id = example.id;
  r.prompt = PromptKind::MemoryContext;
  if (example.bank.entries.empty()) {
    r.prompt = PromptKind::NoContext;
    r.flags.push_back("empty_bank");
    return r;
  }

  std::set<std::string> query_tokens;
  for (const auto& t : tokenize(example.request)) {
    if (!is_stopword(t)) query_tokens.insert(t);
  }

  std::vector<std::pair<int, std::string>> scored;
  std::map<std::string, std::string> reflections;
  for (const auto& m : example.bank.entries) {
    const std::string reflection = reflect_memory(m);
    std::set<std::string> shared;
    for (const auto& t : tokenize(reflection)) {
      if (!is_stopword(t) && query_tokens.count(t)) shared.insert(t);
    }
    scored.emplace_back(static_cast<int>(shared.size()), m.id);
    reflections[m.id] = reflection;
  }

  std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  const std::size_t take = std::min<std::size_t>(static_cast<std::size_t>(k), scored.size());
  std::vector<std::string> texts;
  for (std::size_t i = 0; i < take; ++i) {
    r.selected_ids.push_back(scored[i].second);
    texts.push_back(reflections[scored[i].second]);
  }
  r.exposed_ids = r.selected_ids;
  r.context_payload = render_text_lines(texts);
  return r;
}

}  // namespace causalmem
