#pragma once

#include <string>
#include <string_view>

#include "causalmem/domain.hpp"
#include "causalmem/scoring.hpp"
#include "causalmem/util.hpp"

namespace causalmem {

// Fixed prompt templates. The answer-generation prompt is identical for every
// memory-bank agent; only the context slot varies. Any wording change must
// bump the version so run provenance distinguishes results.
inline constexpr std::string_view kPromptVersion = "prompts-v1";

inline constexpr std::string_view kNoContextTemplate =
    "You are a careful assistant. Answer the request briefly and directly.\n"
    "If you do not know the answer, reply with the single word: unknown.\n"
    "\n"
    "Request: {task}\n"
    "Answer:";

inline constexpr std::string_view kMemoryContextTemplate =
    "You are a careful assistant. Use the stored memory entries below when they\n"
    "are relevant to the request; ignore entries that do not help. Answer\n"
    "briefly and directly. If the memories do not contain the answer, reply\n"
    "with the single word: unknown.\n"
    "\n"
    "Memories:\n"
    "{context}\n"
    "Request: {task}\n"
    "Answer:";

inline constexpr std::string_view kPastSessionsTemplate =
    "You are a careful assistant. The transcripts of past conversation sessions\n"
    "are provided below. Answer the request briefly and directly using them.\n"
    "If they do not contain the answer, reply with the single word: unknown.\n"
    "\n"
    "Past sessions:\n"
    "{context}\n"
    "Request: {task}\n"
    "Answer:";

inline constexpr std::string_view kSummarizeTemplate =
    "Summarize the memory entries below into one short paragraph. Preserve\n"
    "names, dates, and other concrete facts exactly as written.\n"
    "\n"
    "Memories:\n"
    "{context}\n"
    "Summary:";

inline constexpr std::string_view kJudgeTemplate =
    "You are grading an assistant's answer. Compare the answer against the\n"
    "expected answer and the scoring criteria. Accept the listed aliases as\n"
    "equivalent phrasings of the expected answer. Reply with a single number\n"
    "between 0 and 1 and nothing else.\n"
    "\n"
    "Request: {task}\n"
    "Answer: {answer}\n"
    "Expected answer: {expected}\n"
    "Aliases: {aliases}\n"
    "Criteria: {criteria}\n"
    "Score:";

namespace detail {

inline std::string replace_slot(std::string text, std::string_view slot, std::string_view value) {
  const auto pos = text.find(slot);
  if (pos != std::string::npos) text.replace(pos, slot.size(), value);
  return text;
}

}  // namespace detail

inline std::string render_template(PromptKind kind, std::string_view task,
                                   std::string_view context) {
  std::string_view t;
  switch (kind) {
    case PromptKind::NoContext: t = kNoContextTemplate; break;
    case PromptKind::MemoryContext: t = kMemoryContextTemplate; break;
    case PromptKind::PastSessions: t = kPastSessionsTemplate; break;
    case PromptKind::Summarize: t = kSummarizeTemplate; break;
    case PromptKind::Judge: t = kJudgeTemplate; break;
  }
  std::string out = detail::replace_slot(std::string(t), "{context}", context);
  return detail::replace_slot(std::move(out), "{task}", task);
}

inline std::string render_judge_prompt(const JudgeRequest& req) {
  std::string aliases;
  for (std::size_t i = 0; i < req.aliases.size(); ++i) {
    if (i) aliases += ", ";
    aliases += req.aliases[i];
  }
  if (aliases.empty()) aliases = "(none)";
  std::string out(kJudgeTemplate);
  out = detail::replace_slot(std::move(out), "{task}", req.task_text);
  out = detail::replace_slot(std::move(out), "{answer}", req.answer);
  out = detail::replace_slot(std::move(out), "{expected}", req.expected_answer);
  out = detail::replace_slot(std::move(out), "{aliases}", aliases);
  return detail::replace_slot(std::move(out), "{criteria}", criteria_to_json(req.criteria).dump());
}

/// Content hash over the template set; recorded in run provenance.
inline std::string template_hash() {
  std::uint64_t h = fnv1a64(kPromptVersion);
  h = fnv1a64(kNoContextTemplate, h);
  h = fnv1a64(kMemoryContextTemplate, h);
  h = fnv1a64(kPastSessionsTemplate, h);
  h = fnv1a64(kSummarizeTemplate, h);
  h = fnv1a64(kJudgeTemplate, h);
  return hex64(h);
}

}  // namespace causalmem
