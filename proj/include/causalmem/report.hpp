#pragma once

#include <algorithm>
#include <array>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "causalmem/baselines.hpp"
#include "causalmem/cmi.hpp"
#include "causalmem/harness.hpp"
#include "causalmem/metrics.hpp"

namespace causalmem {

struct ReportOutput {
  std::filesystem::path report_dir;
  std::vector<std::string> missing_agents;  // configured but without records
  bool has_cmi_diagnostics = false;
};

namespace detail {

struct LoadedRecord {
  std::string example_id;
  std::string family;
  double s_hybrid = 0.0;
  std::vector<InterventionRecord> interventions;
};

inline std::vector<LoadedRecord> load_records(const std::filesystem::path& path) {
  std::vector<LoadedRecord> out;
  std::ifstream in(path);
  if (!in) return out;
  std::string line;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    const json j = json::parse(line);
    LoadedRecord rec;
    rec.example_id = j.at("example_id").get<std::string>();
    rec.family = j.at("family").get<std::string>();
    rec.s_hybrid = j.at("score").at("s_hybrid").get<double>();
    if (j.contains("interventions")) {
      for (const auto& ji : j.at("interventions")) {
        rec.interventions.push_back(intervention_from_json(ji));
      }
    }
    out.push_back(std::move(rec));
  }
  return out;
}

inline std::string format3(double v) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(3) << v;
  return out.str();
}

}  // namespace detail

/// Rebuilds every table and plot-data file from the persisted records. No
/// model calls happen here; a report is a pure function of the run directory.
inline ReportOutput report(const std::filesystem::path& run_dir) {
  const auto aggregates_path = run_dir / "aggregates.json";
  std::ifstream agg_in(aggregates_path);
  if (!agg_in) {
    throw std::runtime_error("not a run directory (missing aggregates.json): " +
                             run_dir.string());
  }
  json aggregates_json;
  agg_in >> aggregates_json;

  std::vector<std::pair<AgentKind, AggregateRow>> rows;
  ReportOutput output;
  for (const auto kind : all_agents()) {
    const auto name = agent_name(kind);
    if (aggregates_json.contains(name)) {
      rows.emplace_back(kind, aggregate_from_json(aggregates_json.at(name)));
      if (!std::filesystem::exists(run_dir / "records" / (name + ".jsonl"))) {
        output.missing_agents.push_back(name);
      }
    }
  }
  std::sort(rows.begin(), rows.end(),
            [](const auto& a, const auto& b) { return a.second.task_score > b.second.task_score; });

  const auto report_dir = run_dir / "report";
  std::filesystem::create_directories(report_dir);
  output.report_dir = report_dir;

  // (a) Main comparison table.
  {
    std::ofstream out(report_dir / "main_table.txt");
    out << detail::aggregates_table(rows);
  }

  // Load per-agent records once for the family table and CMI diagnostics.
  std::map<std::string, std::vector<detail::LoadedRecord>> records_by_agent;
  for (const auto& [kind, row] : rows) {
    records_by_agent[agent_name(kind)] =
        detail::load_records(run_dir / "records" / (agent_name(kind) + ".jsonl"));
  }

  // (b) Task-family breakdown (mean task score per family).
  {
    std::ofstream out(report_dir / "family_table.txt");
    out << std::left << std::setw(19) << "Agent";
    for (const auto& f : all_families()) {
      out << std::right << std::setw(18) << family_display_name(f);
    }
    out << '\n' << std::string(19 + 18 * 4, '-') << '\n';
    for (const auto& [kind, row] : rows) {
      out << std::left << std::setw(19) << agent_display_name(kind);
      const auto& records = records_by_agent[agent_name(kind)];
      for (const auto& f : all_families()) {
        double sum = 0.0;
        int n = 0;
        for (const auto& rec : records) {
          if (rec.family == family_name(f)) {
            sum += rec.s_hybrid;
            ++n;
          }
        }
        out << std::right << std::setw(18)
            << (n > 0 ? detail::format3(sum / n) : std::string("-"));
      }
      out << '\n';
    }
  }

  // (c) CMI utility/stability diagnostics by memory role, evaluated records
  // only (risk-filtered candidates never ran the interventions).
  struct RoleStats {
    double utility_sum = 0.0;
    double stability_sum = 0.0;
    int n = 0;
  };
  std::map<std::string, RoleStats> by_role;
  const auto cmi_records_it = records_by_agent.find(agent_name(AgentKind::Cmi));
  if (cmi_records_it != records_by_agent.end()) {
    for (const auto& rec : cmi_records_it->second) {
      for (const auto& iv : rec.interventions) {
        if (!iv.evaluated) continue;
        auto& stats = by_role[role_name(iv.role)];
        stats.utility_sum += iv.utility;
        stats.stability_sum += iv.stability;
        stats.n += 1;
      }
    }
  }
  {
    std::ofstream out(report_dir / "diagnostics.txt");
    if (by_role.empty()) {
      out << "diagnostics: absent (no cmi intervention records in this run)\n";
    } else {
      output.has_cmi_diagnostics = true;
      out << std::left << std::setw(14) << "Memory Type" << std::right << std::setw(17)
          << "Average Utility" << std::setw(19) << "Average Stability" << std::setw(9)
          << "Records" << '\n';
      out << std::string(59, '-') << '\n';
      for (const auto& role : {"useful", "irrelevant", "harmful", "unknown"}) {
        const auto it = by_role.find(role);
        if (it == by_role.end()) continue;
        out << std::left << std::setw(14) << role << std::right << std::setw(17)
            << detail::format3(it->second.utility_sum / it->second.n) << std::setw(19)
            << detail::format3(it->second.stability_sum / it->second.n) << std::setw(9)
            << it->second.n << '\n';
      }
    }
  }

  // (d) Accuracy/robustness tradeoff scatter data.
  {
    std::ofstream out(report_dir / "tradeoff.csv");
    out << "agent,poison_adoption,task_score,avg_memories\n";
    for (const auto& [kind, row] : rows) {
      out << agent_name(kind) << ',' << detail::format3(row.metrics.poison_adoption) << ','
          << detail::format3(row.task_score) << ',' << detail::format3(row.metrics.avg_memories)
          << '\n';
    }
  }

  // (e) Utility histogram data by role: 20 bins over [-1, 1].
  {
    std::ofstream out(report_dir / "utility_histogram.csv");
    out << "role,bin_lo,bin_hi,count\n";
    if (cmi_records_it != records_by_agent.end()) {
      for (const auto& role : {"useful", "irrelevant", "harmful", "unknown"}) {
        if (!by_role.count(role)) continue;
        std::array<int, 20> bins{};
        for (const auto& rec : cmi_records_it->second) {
          for (const auto& iv : rec.interventions) {
            if (!iv.evaluated || role_name(iv.role) != role) continue;
            int bin = static_cast<int>((iv.utility + 1.0) / 0.1);
            bin = std::clamp(bin, 0, 19);
            bins[static_cast<std::size_t>(bin)]++;
          }
        }
        for (int b = 0; b < 20; ++b) {
          const double lo = -1.0 + 0.1 * b;
          std::ostringstream lo_s, hi_s;
          lo_s << std::fixed << std::setprecision(1) << lo;
          hi_s << std::fixed << std::setprecision(1) << lo + 0.1;
          out << role << ',' << lo_s.str() << ',' << hi_s.str() << ','
              << bins[static_cast<std::size_t>(b)] << '\n';
        }
      }
    }
  }

  return output;
}

}  // namespace causalmem
