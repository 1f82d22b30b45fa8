#pragma once

#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "causalmem/domain.hpp"
#include "causalmem/text.hpp"

namespace causalmem {

/// Hybrid weighting and the success threshold shared by every agent.
inline constexpr double kDetWeight = 0.7;
inline constexpr double kJudgeWeight = 0.3;
inline constexpr double kSuccessThreshold = 0.7;

struct DetScore {
  double value = 0.0;
  std::map<std::string, double> components;
};

namespace detail {

inline std::vector<std::string> answer_tokens_with_terminators(const std::string& normalized) {
  std::vector<std::string> tokens;
  std::string current;
  for (char c : normalized) {
    if (c == ' ') {
      if (!current.empty()) tokens.push_back(std::move(current)), current.clear();
    } else {
      current.push_back(c);
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

inline bool is_terminator_token(const std::string& t) {
  return t == "." || t == "!" || t == "?";
}

inline bool is_small_integer_token(const std::string& t) {
  if (t.empty() || t.size() > 2) return false;
  for (char c : t) {
    if (c < '0' || c > '9') return false;
  }
  return true;
}

// Style checks run on the normalized answer so that scoring a pre-normalized
// answer gives the same result as scoring the raw one.
inline bool style_satisfied(std::string_view constraint, const std::string& normalized) {
  const auto tokens = answer_tokens_with_terminators(normalized);
  if (constraint == kStyleSingleSentence) {
    int terminators = 0;
    for (const auto& t : tokens) {
      if (is_terminator_token(t)) ++terminators;
    }
    return terminators <= 1;
  }
  if (constraint == kStyleNoLists) {
    // Numbered enumerations ("1. ... 2. ...") survive normalization as a
    // small-integer token followed by a '.' token.
    int enumerators = 0;
    for (std::size_t i = 0; i + 1 < tokens.size(); ++i) {
      if (is_small_integer_token(tokens[i]) && tokens[i + 1] == ".") ++enumerators;
    }
    return enumerators < 2;
  }
  return true;  // unknown constraints are rejected by validation, not here
}

}  // namespace detail

/// Deterministic task scorer: the unweighted mean of the active criterion
/// components, gated to zero by any must_not_include hit. Pure and
/// normalization-invariant.
inline DetScore score_det(const std::string& answer, const ScoringCriteria& criteria) {
  DetScore result;
  const std::string normalized = normalize_answer(answer);

  double sum = 0.0;
  int active = 0;
  auto add = [&](const std::string& name, double value) {
    result.components[name] = value;
    sum += value;
    ++active;
  };

  if (criteria.expected_answer && !criteria.expected_answer->empty()) {
    const std::string needle = normalize_answer(*criteria.expected_answer);
    const bool hit = needle.empty() || normalized.find(needle) != std::string::npos;
    add("expected_answer", hit ? 1.0 : 0.0);
  }
  if (!criteria.must_include.empty()) {
    int present = 0;
    for (const auto& s : criteria.must_include) {
      const std::string needle = normalize_answer(s);
      if (needle.empty() || normalized.find(needle) != std::string::npos) ++present;
    }
    add("must_include", static_cast<double>(present) /
                            static_cast<double>(criteria.must_include.size()));
  }
  if (!criteria.required_steps.empty()) {
    int present = 0;
    for (const auto& s : criteria.required_steps) {
      const std::string needle = normalize_answer(s);
      if (needle.empty() || normalized.find(needle) != std::string::npos) ++present;
    }
    add("required_steps", static_cast<double>(present) /
                              static_cast<double>(criteria.required_steps.size()));
  }
  if (criteria.max_words) {
    add("max_words", word_count(answer) <= static_cast<std::size_t>(*criteria.max_words)
                         ? 1.0
                         : 0.0);
  }
  if (!criteria.style_constraints.empty()) {
    int satisfied = 0;
    for (const auto& c : criteria.style_constraints) {
      if (detail::style_satisfied(c, normalized)) ++satisfied;
    }
    add("style_constraints", static_cast<double>(satisfied) /
                                 static_cast<double>(criteria.style_constraints.size()));
  }

  double gate = 1.0;
  for (const auto& s : criteria.must_not_include) {
    const std::string needle = normalize_answer(s);
    if (!needle.empty() && normalized.find(needle) != std::string::npos) {
      gate = 0.0;
      break;
    }
  }
  if (!criteria.must_not_include.empty()) result.components["must_not_include_gate"] = gate;

  result.value = active == 0 ? 0.0 : gate * (sum / static_cast<double>(active));
  return result;
}

// ---------------------------------------------------------------------------
// Hybrid scoring
// ---------------------------------------------------------------------------

/// What a judge gets to see: the answer plus the full criteria including the
/// aliases the deterministic scorer ignores.
struct JudgeRequest {
  std::string task_text;
  std::string answer;
  std::string expected_answer;
  std::vector<std::string> aliases;
  ScoringCriteria criteria;
};

/// Returns a score in [0,1], or nullopt on judge failure.
using JudgeFn = std::function<std::optional<double>(const JudgeRequest&)>;

struct ScoreBreakdown {
  double s_det = 0.0;
  std::optional<double> s_judge;
  double s_hybrid = 0.0;
  bool success = false;
  bool det_only = false;      // hybrid degenerated to s_det (judge off or failed)
  bool judge_failed = false;  // judge was consulted and failed
  std::map<std::string, double> component_details;
};

inline ScoreBreakdown score_hybrid(const std::string& answer, const ScoringCriteria& criteria,
                                   const JudgeFn& judge = nullptr,
                                   const std::string& task_text = "") {
  ScoreBreakdown b;
  DetScore det = score_det(answer, criteria);
  b.s_det = det.value;
  b.component_details = std::move(det.components);

  if (judge) {
    std::optional<double> verdict;
    try {
      JudgeRequest req;
      req.task_text = task_text;
      req.answer = answer;
      req.expected_answer = criteria.expected_answer.value_or("");
      req.aliases = criteria.aliases;
      req.criteria = criteria;
      verdict = judge(req);
    } catch (const std::exception&) {
      verdict = std::nullopt;
    }
    if (verdict) {
      double v = *verdict;
      if (v < 0.0) v = 0.0;
      if (v > 1.0) v = 1.0;
      b.s_judge = v;
      b.s_hybrid = kDetWeight * b.s_det + kJudgeWeight * v;
    } else {
      b.judge_failed = true;
      b.det_only = true;
      b.s_hybrid = b.s_det;
    }
  } else {
    b.det_only = true;
    b.s_hybrid = b.s_det;
  }

  b.success = b.s_hybrid >= kSuccessThreshold;
  return b;
}

/// Fraction of breakdowns whose hybrid score cleared the threshold.
inline double success_rate(const std::vector<ScoreBreakdown>& scores) {
  if (scores.empty()) throw std::invalid_argument("success_rate: empty score list");
  double hits = 0.0;
  for (const auto& s : scores) {
    if (s.success) hits += 1.0;
  }
  return hits / static_cast<double>(scores.size());
}

inline json score_to_json(const ScoreBreakdown& b) {
  json j;
  j["s_det"] = b.s_det;
  j["s_judge"] = b.s_judge ? json(*b.s_judge) : json(nullptr);
  j["s_hybrid"] = b.s_hybrid;
  j["success"] = b.success;
  j["det_only"] = b.det_only;
  j["judge_failed"] = b.judge_failed;
  j["components"] = b.component_details;
  return j;
}

inline ScoreBreakdown score_from_json(const json& j) {
  ScoreBreakdown b;
  b.s_det = j.at("s_det").get<double>();
  if (!j.at("s_judge").is_null()) b.s_judge = j.at("s_judge").get<double>();
  b.s_hybrid = j.at("s_hybrid").get<double>();
  b.success = j.at("success").get<bool>();
  b.det_only = j.at("det_only").get<bool>();
  b.judge_failed = j.at("judge_failed").get<bool>();
  for (const auto& [k, v] : j.at("components").items()) {
    b.component_details[k] = v.get<double>();
  }
  return b;
}

}  // namespace causalmem
