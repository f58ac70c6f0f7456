#pragma once

#include <cstdio>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "factcheck/config.hpp"
#include "factcheck/errors.hpp"
#include "factcheck/metrics.hpp"
#include "factcheck/orchestrator.hpp"
#include "factcheck/runstore.hpp"
#include "factcheck/stats.hpp"

namespace factcheck {

// Everything the report and the statistics stages need about one cell,
// recomputed from the run store alone.
struct CellMetrics {
  Cell cell;
  MetricsReport report;
  std::size_t failures = 0;
  std::optional<double> quality_mean;  // mean of per-record quality totals
  ClassDistribution gold_distribution;
};

inline CellMetrics cell_metrics(const RunStore& store, const Cell& cell) {
  auto records = store.load_cell(cell);
  std::vector<std::pair<Verdict, Verdict>> scored;
  std::size_t failures = 0;
  for (const auto& r : records) {
    if (r.status == RunStatus::Failed) {
      failures++;
      continue;
    }
    scored.emplace_back(r.gold, r.vote.verdict);
  }
  if (scored.empty())
    throw DomainError("cell " + cell.key() + " has no scored records; run the grid first");
  const LabelScheme& scheme = LabelScheme::of(cell.scheme);
  CellMetrics out;
  out.cell = cell;
  out.failures = failures;
  auto cm = confusion(scored, scheme);
  out.report = metrics(cm);

  std::vector<std::size_t> counts(scheme.size(), 0);
  for (const auto& [gold, predicted] : scored) counts[scheme.position(gold)]++;
  out.gold_distribution = ClassDistribution::from_counts(scheme, counts);

  auto scores = load_scores(store, cell);
  if (!scores.empty()) {
    double sum = 0;
    std::size_t n = 0;
    for (const auto& r : records) {
      if (r.status != RunStatus::Ok) continue;
      auto it = scores.find(r.claim_id);
      if (it == scores.end()) continue;
      sum += it->second;
      n++;
    }
    if (n > 0) out.quality_mean = sum / static_cast<double>(n);
  }
  return out;
}

inline std::vector<CellMetrics> collect_cell_metrics(const ExperimentConfig& config) {
  RunStore store(config.store_dir);
  std::vector<CellMetrics> out;
  for (const auto& cell : config.cells()) out.push_back(cell_metrics(store, cell));
  return out;
}

inline nlohmann::json cell_metrics_to_json(const CellMetrics& m) {
  nlohmann::json j;
  j["model"] = m.cell.model_id;
  j["scheme"] = std::string(to_string(m.cell.scheme));
  j["evidence"] = std::string(to_string(m.cell.mode));
  j["n"] = m.report.n;
  j["failures"] = m.failures;
  j["accuracy"] = m.report.accuracy;
  j["f1_macro"] = m.report.f1_macro;
  j["f1_weighted"] = m.report.f1_weighted;
  j["f1_micro"] = m.report.f1_micro;
  auto& per_class = j["per_class"] = nlohmann::json::object();
  for (const auto& [label, cs] : m.report.per_class) {
    per_class[std::string(to_string(label))] = {{"precision", cs.precision},
                                                {"recall", cs.recall},
                                                {"f1", cs.f1},
                                                {"support", cs.support}};
  }
  if (m.quality_mean) j["quality_mean"] = *m.quality_mean;
  return j;
}

// Per-scheme results table mirroring the run's grid: one row per
// (model, evidence mode) plus the analytic chance-baseline row computed from
// the scored records' gold distribution.
struct ReportTable {
  SchemeKind scheme = SchemeKind::Five;
  ChanceBaseline baseline;
  std::vector<CellMetrics> rows;  // config order: model-major, evidence inner
};

inline ReportTable build_report_table(const ExperimentConfig& config, SchemeKind scheme) {
  RunStore store(config.store_dir);
  ReportTable table;
  table.scheme = scheme;

  // union of gold labels over every scored record of this scheme's cells
  const LabelScheme& ls = LabelScheme::of(scheme);
  std::vector<std::size_t> counts(ls.size(), 0);
  for (const auto& b : config.backends) {
    for (auto mode : config.evidence_modes) {
      Cell cell{b.model_id, scheme, mode};
      auto m = cell_metrics(store, cell);
      for (auto label : ls.labels())
        counts[ls.position(label)] += m.report.per_class.at(label).support;
      table.rows.push_back(std::move(m));
    }
  }
  table.baseline = chance_baseline(ClassDistribution::from_counts(ls, counts));
  return table;
}

namespace detail {

inline std::string fmt3(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3f", v);
  return buf;
}

inline std::string pad(const std::string& s, std::size_t width) {
  return s.size() >= width ? s : s + std::string(width - s.size(), ' ');
}

}  // namespace detail

inline std::string render_report_text(const ReportTable& table) {
  std::string scheme_name(to_string(table.scheme));
  std::string out = "Results for " + scheme_name + "-class labels\n";
  std::size_t model_w = std::string("model").size();
  for (const auto& row : table.rows) model_w = std::max(model_w, row.cell.model_id.size());
  model_w = std::max(model_w, std::string("baseline").size()) + 2;

  auto line = [&](const std::string& model, const std::string& evidence, const std::string& f1m,
                  const std::string& f1w, const std::string& f1u, const std::string& acc,
                  const std::string& quality, const std::string& n, const std::string& failures) {
    out += detail::pad(model, model_w) + detail::pad(evidence, 10) + detail::pad(f1m, 10) +
           detail::pad(f1w, 13) + detail::pad(f1u, 10) + detail::pad(acc, 10) +
           detail::pad(quality, 10) + detail::pad(n, 8) + failures + "\n";
  };
  line("model", "evidence", "f1_macro", "f1_weighted", "f1_micro", "accuracy", "quality", "n",
       "failures");
  line("baseline", "-", detail::fmt3(table.baseline.f1_macro),
       detail::fmt3(table.baseline.f1_weighted), detail::fmt3(table.baseline.f1_micro),
       detail::fmt3(table.baseline.accuracy), "-", "-", "-");
  for (const auto& row : table.rows) {
    line(row.cell.model_id, row.cell.mode == EvidenceMode::With ? "yes" : "no",
         detail::fmt3(row.report.f1_macro), detail::fmt3(row.report.f1_weighted),
         detail::fmt3(row.report.f1_micro), detail::fmt3(row.report.accuracy),
         row.quality_mean ? detail::fmt3(*row.quality_mean) : "-",
         std::to_string(row.report.n), std::to_string(row.failures));
  }
  return out;
}

inline std::string render_report_csv(const ReportTable& table) {
  std::string out = "scheme,model,evidence,f1_macro,f1_weighted,f1_micro,accuracy,quality,n,failures\n";
  std::string scheme_name(to_string(table.scheme));
  out += scheme_name + ",baseline,-," + detail::fmt3(table.baseline.f1_macro) + "," +
         detail::fmt3(table.baseline.f1_weighted) + "," + detail::fmt3(table.baseline.f1_micro) +
         "," + detail::fmt3(table.baseline.accuracy) + ",-,-,-\n";
  for (const auto& row : table.rows) {
    out += scheme_name + "," + row.cell.model_id + "," +
           (row.cell.mode == EvidenceMode::With ? "yes" : "no") + "," +
           detail::fmt3(row.report.f1_macro) + "," + detail::fmt3(row.report.f1_weighted) + "," +
           detail::fmt3(row.report.f1_micro) + "," + detail::fmt3(row.report.accuracy) + "," +
           (row.quality_mean ? detail::fmt3(*row.quality_mean) : "-") + "," +
           std::to_string(row.report.n) + "," + std::to_string(row.failures) + "\n";
  }
  return out;
}

// ---- statistics over cells -------------------------------------------------

inline double metric_value(const CellMetrics& m, const std::string& metric) {
  if (metric == "accuracy") return m.report.accuracy;
  if (metric == "f1_macro") return m.report.f1_macro;
  if (metric == "f1_weighted") return m.report.f1_weighted;
  if (metric == "f1_micro") return m.report.f1_micro;
  if (metric == "quality") {
    if (!m.quality_mean)
      throw DomainError("cell " + m.cell.key() + " has no quality scores; run the score stage");
    return *m.quality_mean;
  }
  throw ConfigError("unknown metric \"" + metric + "\"");
}

inline const CellMetrics& find_cell(const std::vector<CellMetrics>& all, const Cell& cell) {
  for (const auto& m : all)
    if (m.cell == cell) return m;
  throw DomainError("no metrics for cell " + cell.key());
}

enum class TreatmentDim { Scheme, Model, Evidence };

inline TreatmentDim parse_treatment(std::string_view s) {
  auto n = util::normalize_label(s);
  if (n == "scheme" || n == "schemes") return TreatmentDim::Scheme;
  if (n == "model" || n == "models") return TreatmentDim::Model;
  if (n == "evidence") return TreatmentDim::Evidence;
  throw ConfigError("unknown treatment dimension \"" + std::string(s) + "\"");
}

// Blocks x treatments score matrix over the grid. Treatments run along the
// chosen dimension; every combination of the remaining dimensions forms one
// block. The blocking dimension of the published analyses is a free choice,
// so it is a parameter here.
struct ScoreMatrix {
  std::vector<std::string> treatment_names;
  std::vector<std::string> block_names;
  std::vector<std::vector<double>> values;  // [block][treatment]
};

inline ScoreMatrix build_score_matrix(const ExperimentConfig& config,
                                      const std::vector<CellMetrics>& all, TreatmentDim dim,
                                      const std::string& metric) {
  ScoreMatrix m;
  std::vector<std::vector<Cell>> block_cells;

  auto cell_of = [&](const std::string& model, SchemeKind scheme, EvidenceMode mode) {
    return Cell{model, scheme, mode};
  };
  switch (dim) {
    case TreatmentDim::Scheme: {
      for (auto s : config.schemes) m.treatment_names.emplace_back(to_string(s));
      for (const auto& b : config.backends)
        for (auto mode : config.evidence_modes) {
          m.block_names.push_back(b.model_id + "|" + std::string(to_string(mode)));
          std::vector<Cell> row;
          for (auto s : config.schemes) row.push_back(cell_of(b.model_id, s, mode));
          block_cells.push_back(std::move(row));
        }
      break;
    }
    case TreatmentDim::Model: {
      for (const auto& b : config.backends) m.treatment_names.push_back(b.model_id);
      for (auto s : config.schemes)
        for (auto mode : config.evidence_modes) {
          m.block_names.push_back(std::string(to_string(s)) + "|" + std::string(to_string(mode)));
          std::vector<Cell> row;
          for (const auto& b : config.backends) row.push_back(cell_of(b.model_id, s, mode));
          block_cells.push_back(std::move(row));
        }
      break;
    }
    case TreatmentDim::Evidence: {
      for (auto mode : config.evidence_modes) m.treatment_names.emplace_back(to_string(mode));
      for (const auto& b : config.backends)
        for (auto s : config.schemes) {
          m.block_names.push_back(b.model_id + "|" + std::string(to_string(s)));
          std::vector<Cell> row;
          for (auto mode : config.evidence_modes) row.push_back(cell_of(b.model_id, s, mode));
          block_cells.push_back(std::move(row));
        }
      break;
    }
  }
  for (const auto& row : block_cells) {
    std::vector<double> values;
    for (const auto& cell : row) values.push_back(metric_value(find_cell(all, cell), metric));
    m.values.push_back(std::move(values));
  }
  return m;
}

// Paired comparison with vs. without evidence; blocks are (model, scheme).
inline std::pair<std::vector<double>, std::vector<double>> evidence_pairs(
    const ExperimentConfig& config, const std::vector<CellMetrics>& all,
    const std::string& metric) {
  std::vector<double> with_values, without_values;
  for (const auto& b : config.backends)
    for (auto s : config.schemes) {
      with_values.push_back(
          metric_value(find_cell(all, Cell{b.model_id, s, EvidenceMode::With}), metric));
      without_values.push_back(
          metric_value(find_cell(all, Cell{b.model_id, s, EvidenceMode::Without}), metric));
    }
  return {with_values, without_values};
}

inline nlohmann::json test_result_to_json(const TestResult& r) {
  nlohmann::json j;
  j["method"] = std::string(to_string(r.method));
  j["statistic"] = r.statistic;
  j["p_value"] = r.p_value;
  j["dof"] = r.dof;
  j["degenerate"] = r.degenerate;
  if (!r.pairwise.empty()) {
    auto& pw = j["pairwise"] = nlohmann::json::array();
    for (const auto& [key, pr] : r.pairwise) {
      pw.push_back({{"i", key.first},
                    {"j", key.second},
                    {"statistic", std::isinf(pr.statistic) ? 1e308 : pr.statistic},
                    {"p_value", pr.p_value},
                    {"p_holm", pr.p_holm}});
    }
  }
  return j;
}

}  // namespace factcheck
