#pragma once

#include <filesystem>
#include <fstream>
#include <future>
#include <iomanip>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "causalmem/baselines.hpp"
#include "causalmem/cmi.hpp"
#include "causalmem/dataset.hpp"
#include "causalmem/gateway.hpp"
#include "causalmem/metrics.hpp"
#include "causalmem/prompts.hpp"
#include "causalmem/scoring.hpp"

namespace causalmem {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct EmptyDatasetError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct BackendError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class BackendKind { Oracle, Live };
enum class JudgeKind { Off, Live };

struct RunConfig {
  std::string dataset;
  std::vector<AgentKind> agents = all_agents();
  BackendKind backend = BackendKind::Oracle;
  int proposal_k = 8;  // K: candidate pool size
  int budget = 3;      // k: selection budget / baseline top-k
  LabelMode mode = LabelMode::Labeled;
  JudgeKind judge = JudgeKind::Off;
  std::uint64_t seed = 1;
  std::string output_dir;
  int concurrency = 4;
  std::string cache_dir;  // live backend only; defaults to <output_dir>/cache
};

inline std::string backend_kind_name(BackendKind b) {
  return b == BackendKind::Oracle ? "oracle" : "live";
}

inline std::string judge_kind_name(JudgeKind j) { return j == JudgeKind::Off ? "off" : "live"; }

// ---------------------------------------------------------------------------
// Config file: flat key = value lines, '#' comments.
// ---------------------------------------------------------------------------

inline std::vector<std::string> split_list(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string current;
  for (char c : s) {
    if (c == sep) {
      out.push_back(trim(current));
      current.clear();
    } else {
      current.push_back(c);
    }
  }
  out.push_back(trim(current));
  return out;
}

inline RunConfig parse_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);

  RunConfig config;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string stripped = trim(line);
    if (stripped.empty() || stripped[0] == '#') continue;
    const auto eq = stripped.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
    }
    const std::string key = trim(stripped.substr(0, eq));
    const std::string value = trim(stripped.substr(eq + 1));
    try {
      if (key == "dataset") {
        config.dataset = value;
      } else if (key == "agents") {
        if (value == "all") {
          config.agents = all_agents();
        } else {
          config.agents.clear();
          for (const auto& name : split_list(value, ',')) {
            const auto kind = parse_agent(name);
            if (!kind) throw ConfigError("unknown agent '" + name + "'");
            config.agents.push_back(*kind);
          }
        }
      } else if (key == "backend") {
        if (value == "oracle") config.backend = BackendKind::Oracle;
        else if (value == "live") config.backend = BackendKind::Live;
        else throw ConfigError("backend must be oracle or live, got '" + value + "'");
      } else if (key == "K") {
        config.proposal_k = std::stoi(value);
      } else if (key == "k") {
        config.budget = std::stoi(value);
      } else if (key == "mode") {
        const auto mode = parse_label_mode(value);
        if (!mode) throw ConfigError("mode must be labeled or unlabeled, got '" + value + "'");
        config.mode = *mode;
      } else if (key == "judge") {
        if (value == "off") config.judge = JudgeKind::Off;
        else if (value == "live") config.judge = JudgeKind::Live;
        else throw ConfigError("judge must be off or live, got '" + value + "'");
      } else if (key == "seed") {
        config.seed = std::stoull(value);
      } else if (key == "output_dir") {
        config.output_dir = value;
      } else if (key == "concurrency") {
        config.concurrency = std::stoi(value);
      } else if (key == "cache_dir") {
        config.cache_dir = value;
      } else {
        throw ConfigError("unknown config key '" + key + "'");
      }
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception& e) {
      throw ConfigError("config line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return config;
}

/// Returns the list of problems; empty means the config is runnable.
inline std::vector<std::string> validate_run_config(const RunConfig& config) {
  std::vector<std::string> problems;
  if (config.dataset.empty()) problems.push_back("dataset path is required");
  if (config.output_dir.empty()) problems.push_back("output_dir is required");
  if (config.agents.empty()) problems.push_back("at least one agent is required");
  if (config.proposal_k < 1) problems.push_back("K must be >= 1");
  if (config.budget < 0) problems.push_back("k must be >= 0");
  if (config.concurrency < 1) problems.push_back("concurrency must be >= 1");
  if (config.judge == JudgeKind::Live && config.backend != BackendKind::Live) {
    problems.push_back("a live judge requires the live backend");
  }
  if (config.backend == BackendKind::Live) {
    if (!std::getenv("CM_API_KEY") || !std::getenv("CM_API_BASE")) {
      problems.push_back("live backend requires CM_API_KEY and CM_API_BASE");
    }
  }
  return problems;
}

inline std::string config_echo(const RunConfig& config) {
  std::ostringstream out;
  out << "dataset = " << config.dataset << '\n';
  out << "agents = ";
  for (std::size_t i = 0; i < config.agents.size(); ++i) {
    if (i) out << ',';
    out << agent_name(config.agents[i]);
  }
  out << '\n';
  out << "backend = " << backend_kind_name(config.backend) << '\n';
  out << "K = " << config.proposal_k << '\n';
  out << "k = " << config.budget << '\n';
  out << "mode = " << label_mode_name(config.mode) << '\n';
  out << "judge = " << judge_kind_name(config.judge) << '\n';
  out << "seed = " << config.seed << '\n';
  out << "output_dir = " << config.output_dir << '\n';
  out << "concurrency = " << config.concurrency << '\n';
  if (!config.cache_dir.empty()) out << "cache_dir = " << config.cache_dir << '\n';
  return out.str();
}

// ---------------------------------------------------------------------------
// Running
// ---------------------------------------------------------------------------

/// Backend, embedder, and judge the run should use. Injectable so tests can
/// count calls and fake remote transports.
struct Services {
  ModelBackend* backend = nullptr;
  Embedder* embedder = nullptr;
  JudgeFn judge;  // empty function object = judge off
};

struct EvaluationRecord {
  std::string example_id;
  TaskFamily family = TaskFamily::FactualQA;
  SelectionResult selection;
  std::string answer;
  ScoreBreakdown score;
  ExampleTerms terms;
  std::vector<InterventionRecord> interventions;  // CMI only
};

inline json evaluation_to_json(const EvaluationRecord& r, AgentKind agent) {
  json j;
  j["example_id"] = r.example_id;
  j["family"] = family_name(r.family);
  j["agent"] = agent_name(agent);
  j["prompt_kind"] = prompt_kind_name(r.selection.prompt);
  j["selected_ids"] = r.selection.selected_ids;
  j["exposed_ids"] = r.selection.exposed_ids;
  j["context_payload"] = r.selection.context_payload;
  j["flags"] = r.selection.flags;
  j["answer"] = r.answer;
  j["score"] = score_to_json(r.score);
  j["terms"] = terms_to_json(r.terms);
  if (agent == AgentKind::Cmi) {
    json recs = json::array();
    for (const auto& rec : r.interventions) recs.push_back(intervention_to_json(rec));
    j["interventions"] = std::move(recs);
  }
  return j;
}

namespace detail {

inline EvaluationRecord evaluate_one(const TaskExample& example, AgentKind agent,
                                     const RunConfig& config, const Services& services) {
  EvaluationRecord rec;
  rec.example_id = example.id;
  rec.family = example.family;

  switch (agent) {
    case AgentKind::NoMemory: rec.selection = no_memory_agent(example); break;
    case AgentKind::FullHistory: rec.selection = full_history_agent(example); break;
    case AgentKind::SummaryMemory:
      rec.selection = summary_memory_agent(example, *services.backend);
      break;
    case AgentKind::VectorMemory:
      rec.selection = vector_memory_agent(example, config.budget, *services.embedder);
      break;
    case AgentKind::GraphMemory:
      rec.selection = graph_memory_agent(example, config.budget);
      break;
    case AgentKind::ReflectionMemory:
      rec.selection = reflection_memory_agent(example, config.budget);
      break;
    case AgentKind::Cmi: {
      CmiConfig cmi_config;
      cmi_config.proposal_k = config.proposal_k;
      cmi_config.budget = config.budget;
      cmi_config.mode = config.mode;
      cmi_config.seed = config.seed;
      CmiOutcome outcome = cmi_agent(example, cmi_config, *services.backend, *services.embedder);
      rec.selection = std::move(outcome.selection);
      rec.interventions = std::move(outcome.records);
      rec.answer = std::move(outcome.answer);
      break;
    }
  }

  if (agent != AgentKind::Cmi) {
    GenerationRequest req;
    req.kind = rec.selection.prompt;
    req.task_text = example.request;
    req.context_payload = rec.selection.context_payload;
    rec.answer = services.backend->generate(req);
  }

  rec.score = score_hybrid(rec.answer, example.criteria, services.judge, example.request);

  std::set<std::string> exposed(rec.selection.exposed_ids.begin(),
                                rec.selection.exposed_ids.end());
  rec.terms = per_example_terms(exposed, partition_bank(example.bank));
  return rec;
}

inline std::string aggregates_table(const std::vector<std::pair<AgentKind, AggregateRow>>& rows) {
  std::ostringstream out;
  out << std::left << std::setw(19) << "Agent" << std::right << std::setw(11) << "Task Score"
      << std::setw(14) << "Success Rate" << std::setw(11) << "Useful F1" << std::setw(15)
      << "Bad Rejection" << std::setw(16) << "Poison Adoption" << std::setw(15)
      << "Avg. Memories" << '\n';
  out << std::string(101, '-') << '\n';
  out << std::fixed << std::setprecision(3);
  for (const auto& [agent, row] : rows) {
    out << std::left << std::setw(19) << agent_display_name(agent) << std::right << std::setw(11)
        << row.task_score << std::setw(14) << row.success_rate << std::setw(11)
        << row.metrics.useful_f1 << std::setw(15) << row.metrics.bad_rejection << std::setw(16)
        << row.metrics.poison_adoption << std::setw(15) << row.metrics.avg_memories << '\n';
  }
  return out.str();
}

inline std::string hash_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot hash file: " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return hex64(fnv1a64(buffer.str()));
}

}  // namespace detail

struct RunSummary {
  std::filesystem::path run_dir;
  std::vector<std::pair<AgentKind, AggregateRow>> aggregates;
  std::size_t accepted_examples = 0;
  std::size_t rejected_examples = 0;
};

/// Config validation specialized for an already-built service set: the
/// credential requirement applies only when the CLI has to construct a live
/// backend itself.
inline std::vector<std::string> validate_run_config_for_run(const RunConfig& config,
                                                            const Services& services) {
  std::vector<std::string> problems;
  if (config.dataset.empty()) problems.push_back("dataset path is required");
  if (config.output_dir.empty()) problems.push_back("output_dir is required");
  if (config.agents.empty()) problems.push_back("at least one agent is required");
  if (config.proposal_k < 1) problems.push_back("K must be >= 1");
  if (config.budget < 0) problems.push_back("k must be >= 0");
  if (config.concurrency < 1) problems.push_back("concurrency must be >= 1");
  if (config.judge == JudgeKind::Live && config.backend != BackendKind::Live) {
    problems.push_back("a live judge requires the live backend");
  }
  if (!services.backend) problems.push_back("no model backend supplied");
  if (!services.embedder) problems.push_back("no embedder supplied");
  return problems;
}

/// Evaluates every configured agent over the dataset and persists everything
/// needed to rebuild the reports: per-example records, aggregates, config
/// echo, and provenance hashes. Examples run concurrently in deterministic
/// batches; records are written in dataset order.
inline RunSummary run(const RunConfig& config, const Services& services) {
  {
    const auto problems = validate_run_config_for_run(config, services);
    if (!problems.empty()) {
      std::string msg = "invalid run config:";
      for (const auto& p : problems) msg += "\n  - " + p;
      throw ConfigError(msg);
    }
  }

  LoadResult loaded = load_dataset(config.dataset);
  if (loaded.accepted.empty()) {
    throw EmptyDatasetError("dataset has no accepted examples: " + config.dataset);
  }

  const std::filesystem::path run_dir(config.output_dir);
  std::filesystem::create_directories(run_dir / "records");

  {
    std::ofstream out(run_dir / "config.txt");
    out << config_echo(config);
  }
  {
    json prov;
    prov["dataset_hash"] = detail::hash_file(config.dataset);
    prov["template_hash"] = template_hash();
    prov["prompt_version"] = std::string(kPromptVersion);
    prov["stopwords_version"] = std::string(kStopwordsVersion);
    prov["accepted_examples"] = loaded.accepted.size();
    prov["rejected_examples"] = loaded.rejected.size();
    std::ofstream out(run_dir / "provenance.json");
    out << prov.dump(2) << '\n';
  }
  {
    std::ofstream out(run_dir / "rejected.jsonl");
    for (const auto& r : loaded.rejected) {
      json j;
      j["line"] = r.line;
      j["id"] = r.id;
      j["reasons"] = r.reasons;
      out << j.dump() << '\n';
    }
  }

  RunSummary summary;
  summary.run_dir = run_dir;
  summary.accepted_examples = loaded.accepted.size();
  summary.rejected_examples = loaded.rejected.size();

  for (const auto agent : config.agents) {
    std::vector<EvaluationRecord> records(loaded.accepted.size());
    try {
      const std::size_t batch = static_cast<std::size_t>(config.concurrency);
      for (std::size_t start = 0; start < loaded.accepted.size(); start += batch) {
        const std::size_t end = std::min(start + batch, loaded.accepted.size());
        std::vector<std::future<EvaluationRecord>> futures;
        for (std::size_t i = start; i < end; ++i) {
          futures.push_back(std::async(std::launch::async, [&, i] {
            return detail::evaluate_one(loaded.accepted[i], agent, config, services);
          }));
        }
        for (std::size_t i = start; i < end; ++i) {
          records[i] = futures[i - start].get();
        }
      }
    } catch (const TransportError& e) {
      std::ofstream marker(run_dir / "PARTIAL");
      marker << "backend failure during agent '" << agent_name(agent) << "': " << e.what()
             << '\n';
      throw BackendError(e.what());
    }

    {
      std::ofstream out(run_dir / "records" / (agent_name(agent) + ".jsonl"));
      for (const auto& rec : records) out << evaluation_to_json(rec, agent).dump() << '\n';
    }

    std::vector<ExampleTerms> terms;
    std::vector<ScoreBreakdown> scores;
    for (const auto& rec : records) {
      terms.push_back(rec.terms);
      scores.push_back(rec.score);
    }
    summary.aggregates.emplace_back(agent, aggregate(terms, scores));
  }

  {
    json agg;
    for (const auto& [agent, row] : summary.aggregates) {
      agg[agent_name(agent)] = aggregate_to_json(row);
    }
    std::ofstream out(run_dir / "aggregates.json");
    out << agg.dump(2) << '\n';
  }
  {
    std::ofstream out(run_dir / "aggregates.txt");
    out << detail::aggregates_table(summary.aggregates);
  }
  return summary;
}

}  // namespace causalmem
