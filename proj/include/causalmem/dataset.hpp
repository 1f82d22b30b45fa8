#pragma once

#include <array>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "causalmem/domain.hpp"
#include "causalmem/util.hpp"

namespace causalmem {

// ---------------------------------------------------------------------------
// Loading and saving
// ---------------------------------------------------------------------------

struct RejectedRecord {
  std::size_t line = 0;  // 1-based line number in the source file
  std::string id;        // empty when the line did not parse far enough
  std::vector<std::string> reasons;
};

struct LoadResult {
  std::vector<TaskExample> accepted;
  std::vector<RejectedRecord> rejected;
};

/// Loads a JSONL dataset. Examples failing validation land in the rejected
/// list with their violations; nothing is silently dropped. Throws only when
/// the file itself cannot be read.
inline LoadResult load_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open dataset file: " + path);

  LoadResult result;
  std::set<std::string> seen_ids;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    TaskExample example;
    try {
      example = example_from_json(json::parse(line));
    } catch (const std::exception& e) {
      result.rejected.push_back({line_no, "", {std::string("malformed record: ") + e.what()}});
      continue;
    }
    auto violations = validate_example(example);
    if (!seen_ids.insert(example.id).second) {
      violations.push_back("id: duplicate example id '" + example.id + "'");
    }
    if (violations.empty()) {
      result.accepted.push_back(std::move(example));
    } else {
      result.rejected.push_back({line_no, example.id, std::move(violations)});
    }
  }
  return result;
}

inline std::string serialize_examples(const std::vector<TaskExample>& examples) {
  std::string out;
  for (const auto& e : examples) {
    out += example_to_json(e).dump();
    out += '\n';
  }
  return out;
}

inline void save_dataset(const std::string& path, const std::vector<TaskExample>& examples) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write dataset file: " + path);
  out << serialize_examples(examples);
  if (!out) throw std::runtime_error("failed while writing dataset file: " + path);
}

// ---------------------------------------------------------------------------
// Statistics
// ---------------------------------------------------------------------------

struct DatasetStats {
  int example_count = 0;
  int session_count = 0;
  int useful = 0;
  int irrelevant = 0;
  int harmful = 0;
  int unknown = 0;
  std::map<std::string, int> family_counts;

  int total_memories() const { return useful + irrelevant + harmful + unknown; }
};

inline DatasetStats dataset_stats(const std::vector<TaskExample>& examples) {
  DatasetStats stats;
  for (const auto& f : all_families()) stats.family_counts[family_name(f)] = 0;
  stats.example_count = static_cast<int>(examples.size());
  for (const auto& e : examples) {
    stats.session_count += static_cast<int>(e.past_sessions.size());
    stats.family_counts[family_name(e.family)]++;
    for (const auto& m : e.bank.entries) {
      switch (m.role) {
        case MemoryRole::Useful: stats.useful++; break;
        case MemoryRole::Irrelevant: stats.irrelevant++; break;
        case MemoryRole::Harmful: stats.harmful++; break;
        case MemoryRole::Unknown: stats.unknown++; break;
      }
    }
  }
  return stats;
}

inline json stats_to_json(const DatasetStats& s) {
  json j;
  j["examples"] = s.example_count;
  j["sessions"] = s.session_count;
  j["memories"] = {{"useful", s.useful},
                   {"irrelevant", s.irrelevant},
                   {"harmful", s.harmful},
                   {"unknown", s.unknown},
                   {"total", s.total_memories()}};
  j["families"] = s.family_counts;
  return j;
}

inline std::string stats_table(const DatasetStats& s) {
  std::ostringstream out;
  auto row = [&](const std::string& label, int value) {
    out << std::left << std::setw(22) << label << std::right << std::setw(6) << value << '\n';
  };
  row("examples", s.example_count);
  row("sessions", s.session_count);
  row("memories", s.total_memories());
  row("  useful", s.useful);
  row("  irrelevant", s.irrelevant);
  row("  harmful", s.harmful);
  row("  unknown", s.unknown);
  out << "families\n";
  for (const auto& f : all_families()) {
    row("  " + family_name(f), s.family_counts.at(family_name(f)));
  }
  return out.str();
}

// ---------------------------------------------------------------------------
// Synthetic fixtures
// ---------------------------------------------------------------------------

namespace fixture {

struct TopicSpec {
  const char* topic;
  TaskFamily family;
  // Entity answers cycle through this list; empty means the answer is a
  // generated calendar date.
  std::vector<const char*> answers;
};

inline const std::vector<TopicSpec>& topics() {
  static const std::vector<TopicSpec> specs = {
      {"reunion date", TaskFamily::TemporalQA, {}},
      {"train departure date", TaskFamily::TemporalQA, {}},
      {"workshop date", TaskFamily::TemporalQA, {}},
      {"recital date", TaskFamily::TemporalQA, {}},
      {"lease start date", TaskFamily::TemporalQA, {}},
      {"final itinerary city", TaskFamily::MultiEvidenceQA,
       {"Lisbon", "Nairobi", "Osaka", "Tallinn", "Quito", "Hanoi"}},
      {"group gift choice", TaskFamily::MultiEvidenceQA,
       {"a ceramic teapot", "a walnut chess set", "a linen hammock"}},
      {"likely picnic spot", TaskFamily::InferentialQA,
       {"Riverside Park", "Harbor Point", "Cedar Meadow"}},
      {"preferred study hour", TaskFamily::InferentialQA, {"6 am", "9 pm", "7 am"}},
      {"book club pick", TaskFamily::FactualQA,
       {"The Overstory", "Project Hail Mary", "Piranesi"}},
  };
  return specs;
}

inline const std::vector<const char*>& names() {
  static const std::vector<const char*> pool = {"Riya",  "Joanna", "Marco", "Chen",
                                                "Amara", "Dev",    "Lena",  "Tomas"};
  return pool;
}

inline const std::vector<const char*>& cities() {
  static const std::vector<const char*> pool = {"Lisbon", "Nairobi", "Osaka",
                                                "Tallinn", "Quito",  "Hanoi"};
  return pool;
}

// Topic-agnostic distractors. None of them contains an assertive
// "the <x> is" frame, so they never answer a question.
inline const std::vector<const char*>& distractor_templates() {
  static const std::vector<const char*> pool = {
      "The weather in {city} stayed mild for the entire week.",
      "{name} shared photos from the weekend market.",
      "A documentary about coral reefs came up twice in conversation.",
      "{name} keeps recommending the same hiking podcast.",
      "The group debated takeout options for almost an hour.",
      "{name} finally fixed the squeaky balcony door.",
      "Someone mentioned a pottery class starting next month.",
      "The neighborhood bakery changed its opening hours again.",
  };
  return pool;
}

struct Date {
  int year;
  int month1;  // 1-12
  int day;     // 3-27, safe in every month
};

inline Date random_date(SplitMix64& rng) {
  Date d;
  d.day = 3 + static_cast<int>(rng.next_below(25));
  d.month1 = 1 + static_cast<int>(rng.next_below(12));
  d.year = 2021 + static_cast<int>(rng.next_below(4));
  return d;
}

// Fixed confusion shift: +7 days (mod the safe range) and +1 month.
inline Date confuse_date(const Date& d) {
  Date out;
  out.day = 3 + ((d.day - 3 + 7) % 25);
  out.month1 = 1 + (d.month1 % 12);
  out.year = d.year;
  return out;
}

inline std::string human(const Date& d) {
  return iso_to_human(make_iso_date(d.year, d.month1, d.day));
}

inline std::string iso(const Date& d) { return make_iso_date(d.year, d.month1, d.day); }

inline std::string fill(std::string text, const std::string& name, const std::string& city) {
  const auto np = text.find("{name}");
  if (np != std::string::npos) text.replace(np, 6, name);
  const auto cp = text.find("{city}");
  if (cp != std::string::npos) text.replace(cp, 6, city);
  return text;
}

}  // namespace fixture

/// Deterministic desk-scale benchmark generator. Every example carries 1-2
/// useful memories that state the expected answer, 2-5 irrelevant distractors
/// from a fixed pool, and (with probability poison_fraction) one harmful
/// memory asserting a contradicting answer from a fixed confusion table. The
/// harmful text deliberately echoes the request topic twice, making it the
/// lexically closest entry for similarity-based selectors.
inline std::vector<TaskExample> generate_fixture(std::uint64_t seed, int n,
                                                 double poison_fraction) {
  if (n < 1) throw std::invalid_argument("generate_fixture: n must be >= 1");
  if (poison_fraction < 0.0 || poison_fraction > 1.0) {
    throw std::invalid_argument("generate_fixture: poison_fraction must lie in [0,1]");
  }

  std::vector<TaskExample> examples;
  examples.reserve(static_cast<std::size_t>(n));

  for (int i = 0; i < n; ++i) {
    SplitMix64 rng(mix_seed(seed, static_cast<std::uint64_t>(i)));
    const auto& topic_spec = fixture::topics()[rng.next_below(fixture::topics().size())];
    const std::string topic = topic_spec.topic;

    const auto name_idx = rng.next_below(fixture::names().size());
    const std::string name = fixture::names()[name_idx];
    const std::string name2 =
        fixture::names()[(name_idx + 1 + rng.next_below(fixture::names().size() - 1)) %
                         fixture::names().size()];
    const std::string city = fixture::cities()[rng.next_below(fixture::cities().size())];

    // Answer and its fixed contradiction.
    std::string answer;
    std::string confused;
    if (topic_spec.answers.empty()) {
      const auto d = fixture::random_date(rng);
      answer = fixture::human(d);
      confused = fixture::human(fixture::confuse_date(d));
    } else {
      const auto idx = rng.next_below(topic_spec.answers.size());
      answer = topic_spec.answers[idx];
      confused = topic_spec.answers[(idx + 1) % topic_spec.answers.size()];
    }

    TaskExample e;
    {
      std::ostringstream id;
      id << "fx" << seed << '-' << std::setw(2) << std::setfill('0') << (i + 1);
      e.id = id.str();
    }
    e.family = topic_spec.family;
    e.request = "What is the " + topic + "?";
    e.expected_answer = answer;

    // Past sessions; the first transcript restates the useful fact so
    // full-history prompting can recover it.
    const auto session_date = fixture::random_date(rng);
    const std::string session_id = "sess-" + std::to_string(i + 1) + "-a";
    SessionRecord s1;
    s1.id = session_id;
    s1.timestamp = fixture::iso(session_date);
    s1.transcript = "user: Let's plan around the " + topic + ".\nassistant: Noted. " + name +
                    " confirmed that the " + topic + " is " + answer + ".";
    e.past_sessions.push_back(std::move(s1));
    if (rng.next_below(2) == 1) {
      const auto d2 = fixture::random_date(rng);
      SessionRecord s2;
      s2.id = "sess-" + std::to_string(i + 1) + "-b";
      s2.timestamp = fixture::iso(d2);
      s2.transcript = "user: Anything new?\nassistant: " + name2 +
                      " shared photos from the " + city + " market.";
      e.past_sessions.push_back(std::move(s2));
    }

    std::vector<MemoryEntry> entries;
    MemoryEntry u1;
    u1.text = "On " + fixture::human(session_date) + ", " + name + " confirmed that the " +
              topic + " is " + answer + ".";
    u1.role = MemoryRole::Useful;
    u1.scope = session_id;
    u1.timestamp = fixture::iso(session_date);
    u1.provenance = "session_note";
    entries.push_back(std::move(u1));

    if (topic_spec.family == TaskFamily::MultiEvidenceQA) {
      MemoryEntry u2;
      u2.text = "Notes shared by " + name2 + " also say the " + topic + " is " + answer + ".";
      u2.role = MemoryRole::Useful;
      u2.scope = session_id;
      u2.timestamp = fixture::iso(session_date);
      u2.provenance = "session_note";
      entries.push_back(std::move(u2));
    }

    const int distractor_count = 2 + static_cast<int>(rng.next_below(4));
    std::vector<std::size_t> template_order(fixture::distractor_templates().size());
    for (std::size_t t = 0; t < template_order.size(); ++t) template_order[t] = t;
    for (std::size_t t = template_order.size(); t > 1; --t) {
      std::swap(template_order[t - 1], template_order[rng.next_below(t)]);
    }
    for (int d = 0; d < distractor_count; ++d) {
      const std::string dname = fixture::names()[rng.next_below(fixture::names().size())];
      const std::string dcity = fixture::cities()[rng.next_below(fixture::cities().size())];
      MemoryEntry m;
      m.text = fixture::fill(fixture::distractor_templates()[template_order[
                                 static_cast<std::size_t>(d)]],
                             dname, dcity);
      m.role = MemoryRole::Irrelevant;
      m.provenance = "conversation";
      entries.push_back(std::move(m));
    }

    const bool poisoned = rng.next_unit() < poison_fraction;
    if (poisoned) {
      const auto klass = rng.next_below(3);
      MemoryEntry h;
      if (klass == 0) {
        h.text = "Correction about the " + topic + ": the " + topic + " is actually " +
                 confused + ".";
      } else if (klass == 1) {
        h.text = name2 + " insisted the " + topic + " changed: the " + topic +
                 " is actually " + confused + ".";
      } else {
        const auto noted = fixture::confuse_date(session_date);
        h.text = "A note from " + fixture::human(noted) + " about the " + topic +
                 " claims the " + topic + " is actually " + confused + ".";
        h.timestamp = fixture::iso(noted);
      }
      h.role = MemoryRole::Harmful;
      h.provenance = "synthetic_insertion";
      entries.push_back(std::move(h));
    }

    // Shuffle the bank and only then assign positional ids.
    for (std::size_t t = entries.size(); t > 1; --t) {
      std::swap(entries[t - 1], entries[rng.next_below(t)]);
    }
    for (std::size_t t = 0; t < entries.size(); ++t) {
      entries[t].id = "m" + std::to_string(t + 1);
    }
    e.bank.entries = std::move(entries);

    e.criteria.expected_answer = answer;
    const std::string lowered = to_lower_ascii(answer);
    if (lowered != answer) e.criteria.aliases.push_back(lowered);
    if (rng.next_unit() < 0.3) e.criteria.must_include.push_back(answer);
    if (rng.next_unit() < 0.4) e.criteria.max_words = 20;
    if (rng.next_unit() < 0.25)
      e.criteria.style_constraints.push_back(std::string(kStyleSingleSentence));
    if (poisoned) e.criteria.must_not_include.push_back(confused);

    examples.push_back(std::move(e));
  }
  return examples;
}

}  // namespace causalmem
