#pragma once

#include <algorithm>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "causalmem/domain.hpp"
#include "causalmem/scoring.hpp"

namespace causalmem {

inline constexpr double kF1Epsilon = 1e-9;

/// Per-example selection terms. recall is absent when the example has no
/// useful memories (the formula's denominator is undefined there); such
/// examples are skipped in the recall mean and the skip is counted.
struct ExampleTerms {
  std::optional<double> recall;
  double precision = 0.0;
  double poison = 0.0;
  double rejection = 0.0;
  double selected_count = 0.0;
};

inline ExampleTerms per_example_terms(const std::set<std::string>& selected,
                                      const std::set<std::string>& gold,
                                      const std::set<std::string>& harmful,
                                      const std::set<std::string>& bad) {
  auto intersection_size = [](const std::set<std::string>& a, const std::set<std::string>& b) {
    std::size_t n = 0;
    for (const auto& x : a) {
      if (b.count(x)) ++n;
    }
    return static_cast<double>(n);
  };

  ExampleTerms t;
  const double hit_gold = intersection_size(selected, gold);
  if (!gold.empty()) t.recall = hit_gold / static_cast<double>(gold.size());
  t.precision = hit_gold / std::max<double>(1.0, static_cast<double>(selected.size()));
  t.poison = intersection_size(selected, harmful) /
             std::max<double>(1.0, static_cast<double>(harmful.size()));
  t.rejection = 1.0 - intersection_size(selected, bad) /
                          std::max<double>(1.0, static_cast<double>(bad.size()));
  t.selected_count = static_cast<double>(selected.size());
  return t;
}

inline ExampleTerms per_example_terms(const std::set<std::string>& selected,
                                      const BankPartition& partition) {
  return per_example_terms(selected, partition.gold, partition.harmful, partition.bad);
}

struct SelectionMetrics {
  double gold_recall = 0.0;
  double useful_precision = 0.0;
  double useful_f1 = 0.0;
  double poison_adoption = 0.0;
  double bad_rejection = 0.0;
  double avg_memories = 0.0;
  int recall_skips = 0;  // examples with no useful memories
};

struct AggregateRow {
  SelectionMetrics metrics;
  double task_score = 0.0;
  double success_rate = 0.0;
  int examples = 0;
};

/// Unweighted means over examples. F1 composes the aggregated precision and
/// recall (macro form), not per-example F1 values.
inline AggregateRow aggregate(const std::vector<ExampleTerms>& terms,
                              const std::vector<ScoreBreakdown>& scores) {
  if (terms.empty()) throw std::invalid_argument("aggregate: empty term list");
  if (terms.size() != scores.size()) {
    throw std::invalid_argument("aggregate: terms and scores must align");
  }

  AggregateRow row;
  row.examples = static_cast<int>(terms.size());
  double recall_sum = 0.0;
  int recall_n = 0;
  double precision_sum = 0.0, poison_sum = 0.0, rejection_sum = 0.0, count_sum = 0.0;
  double score_sum = 0.0, success_sum = 0.0;
  for (std::size_t i = 0; i < terms.size(); ++i) {
    const auto& t = terms[i];
    if (t.recall) {
      recall_sum += *t.recall;
      ++recall_n;
    } else {
      ++row.metrics.recall_skips;
    }
    precision_sum += t.precision;
    poison_sum += t.poison;
    rejection_sum += t.rejection;
    count_sum += t.selected_count;
    score_sum += scores[i].s_hybrid;
    if (scores[i].success) success_sum += 1.0;
  }
  const double n = static_cast<double>(terms.size());
  row.metrics.gold_recall = recall_n > 0 ? recall_sum / static_cast<double>(recall_n) : 0.0;
  row.metrics.useful_precision = precision_sum / n;
  row.metrics.poison_adoption = poison_sum / n;
  row.metrics.bad_rejection = rejection_sum / n;
  row.metrics.avg_memories = count_sum / n;
  const double p = row.metrics.useful_precision;
  const double r = row.metrics.gold_recall;
  row.metrics.useful_f1 = 2.0 * p * r / std::max(kF1Epsilon, p + r);
  row.task_score = score_sum / n;
  row.success_rate = success_sum / n;
  return row;
}

inline json terms_to_json(const ExampleTerms& t) {
  json j;
  j["gold_recall"] = t.recall ? json(*t.recall) : json(nullptr);
  j["useful_precision"] = t.precision;
  j["poison_adoption"] = t.poison;
  j["bad_rejection"] = t.rejection;
  j["selected_count"] = t.selected_count;
  return j;
}

inline ExampleTerms terms_from_json(const json& j) {
  ExampleTerms t;
  if (!j.at("gold_recall").is_null()) t.recall = j.at("gold_recall").get<double>();
  t.precision = j.at("useful_precision").get<double>();
  t.poison = j.at("poison_adoption").get<double>();
  t.rejection = j.at("bad_rejection").get<double>();
  t.selected_count = j.at("selected_count").get<double>();
  return t;
}

inline json aggregate_to_json(const AggregateRow& row) {
  json j;
  j["task_score"] = row.task_score;
  j["success_rate"] = row.success_rate;
  j["gold_recall"] = row.metrics.gold_recall;
  j["useful_precision"] = row.metrics.useful_precision;
  j["useful_f1"] = row.metrics.useful_f1;
  j["poison_adoption"] = row.metrics.poison_adoption;
  j["bad_rejection"] = row.metrics.bad_rejection;
  j["avg_memories"] = row.metrics.avg_memories;
  j["recall_skips"] = row.metrics.recall_skips;
  j["examples"] = row.examples;
  return j;
}

inline AggregateRow aggregate_from_json(const json& j) {
  AggregateRow row;
  row.task_score = j.at("task_score").get<double>();
  row.success_rate = j.at("success_rate").get<double>();
  row.metrics.gold_recall = j.at("gold_recall").get<double>();
  row.metrics.useful_precision = j.at("useful_precision").get<double>();
  row.metrics.useful_f1 = j.at("useful_f1").get<double>();
  row.metrics.poison_adoption = j.at("poison_adoption").get<double>();
  row.metrics.bad_rejection = j.at("bad_rejection").get<double>();
  row.metrics.avg_memories = j.at("avg_memories").get<double>();
  row.metrics.recall_skips = j.at("recall_skips").get<int>();
  row.examples = j.at("examples").get<int>();
  return row;
}

}  // namespace causalmem
