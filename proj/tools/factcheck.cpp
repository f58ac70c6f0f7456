// Command-line entry point for the fact-checking experiment harness.
// Stages: ingest -> retrieve -> run -> score -> evaluate / stats / report.
// Exit codes: 0 success, 1 usage error, 2 stage failure.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "factcheck/factcheck.hpp"

namespace fc = factcheck;
namespace fs = std::filesystem;

namespace {

struct StageFailure : fc::Error {
  using Error::Error;
};

std::vector<fc::Claim> read_claims(const fs::path& dataset, bool attributed_only) {
  std::ifstream in(dataset);
  if (!in) throw fc::ConfigError("cannot open dataset: " + dataset.string());
  auto claims = fc::parse_dataset(in);
  if (attributed_only) claims = fc::filter_attributed(claims);
  return claims;
}

int cmd_ingest(const fs::path& dataset, const fs::path& out, bool attributed_only) {
  std::ifstream in(dataset);
  if (!in) throw fc::ConfigError("cannot open dataset: " + dataset.string());
  auto all = fc::parse_dataset(in);
  auto kept = attributed_only ? fc::filter_attributed(all) : all;
  std::cout << "parsed " << all.size() << " claim(s), kept " << kept.size()
            << (attributed_only ? " attributed" : "") << "\n";
  if (kept.empty()) throw StageFailure("no claims left after ingestion");
  for (auto kind : {fc::SchemeKind::Five, fc::SchemeKind::Three, fc::SchemeKind::Two}) {
    const auto& scheme = fc::LabelScheme::of(kind);
    auto dist = fc::class_distribution(kept, scheme);
    std::cout << fc::to_string(kind) << "-class distribution:";
    for (auto v : scheme.labels()) {
      char buf[64];
      std::snprintf(buf, sizeof(buf), " %s=%zu (%.2f%%)", std::string(fc::to_string(v)).c_str(),
                    dist.count(v), 100.0 * dist.proportion(v));
      std::cout << buf;
    }
    std::cout << "\n";
  }
  if (!out.empty()) {
    fc::util::write_file_atomic(out, fc::serialize_dataset(kept));
    std::cout << "wrote " << kept.size() << " record(s) to " << out.string() << "\n";
  }
  return 0;
}

int cmd_retrieve(const fs::path& dataset, const fs::path& cache_path, const fs::path& policy_path,
                 int k, const std::string& endpoint, const std::string& auth_env,
                 const fs::path& fixture, int workers, bool attributed_only) {
  auto claims = read_claims(dataset, attributed_only);
  if (claims.empty()) throw StageFailure("no claims to retrieve evidence for");
  fc::FilterPolicy policy =
      policy_path.empty() ? fc::FilterPolicy{} : fc::FilterPolicy::load(policy_path);
  if (k > 0) policy.k = k;

  std::unique_ptr<fc::SearchClient> client;
  if (!fixture.empty())
    client = std::make_unique<fc::FixtureSearchClient>(fc::FixtureSearchClient::load(fixture));
  else if (!endpoint.empty())
    client = std::make_unique<fc::HttpSearchClient>(endpoint, auth_env);
  else
    throw fc::ConfigError("retrieve needs either --endpoint or --fixture");

  fc::EvidenceCache cache(cache_path);
  auto progress = fc::retrieve_all(claims, policy, *client, cache, workers);
  std::cout << "retrieved " << progress.retrieved << " bundle(s), " << progress.cache_hits
            << " cache hit(s), " << progress.none_after_filtering << " fully filtered, "
            << progress.none_returned << " without provider results\n";
  return 0;
}

int cmd_run(const fs::path& config_path, bool fresh) {
  auto config = fc::ExperimentConfig::load(config_path);
  if (fresh && fs::exists(config.store_dir)) fs::remove_all(config.store_dir);
  auto progress = fc::run_grid(config, std::cerr);
  std::cout << "wrote " << progress.records_written << " record(s), "
            << progress.checkpoint_hits << " checkpoint hit(s), " << progress.failed_records
            << " failed record(s)\n";
  if (!progress.aborted_cells.empty()) {
    for (const auto& [cell, why] : progress.aborted_cells)
      std::cerr << "aborted cell " << cell.key() << ": " << why << "\n";
    throw StageFailure(std::to_string(progress.aborted_cells.size()) + " cell(s) aborted");
  }
  return 0;
}

int cmd_score(const fs::path& config_path) {
  auto config = fc::ExperimentConfig::load(config_path);
  auto progress = fc::score_grid(config, std::cerr);
  std::cout << "scored " << progress.scored << " record(s), skipped " << progress.skipped
            << " already scored, " << progress.unreliable << " unreliable\n";
  return 0;
}

int cmd_evaluate(const fs::path& config_path) {
  auto config = fc::ExperimentConfig::load(config_path);
  fc::RunStore store(config.store_dir);
  for (const auto& cell : config.cells()) {
    auto m = fc::cell_metrics(store, cell);
    auto path = store.dir() / ("metrics_" + cell.slug() + ".json");
    fc::util::write_file_atomic(path, fc::cell_metrics_to_json(m).dump(2) + "\n");
    char buf[160];
    std::snprintf(buf, sizeof(buf),
                  "%-40s f1_macro=%.3f f1_weighted=%.3f f1_micro=%.3f acc=%.3f n=%zu failures=%zu",
                  cell.key().c_str(), m.report.f1_macro, m.report.f1_weighted, m.report.f1_micro,
                  m.report.accuracy, m.report.n, m.failures);
    std::cout << buf;
    if (m.quality_mean) {
      std::snprintf(buf, sizeof(buf), " quality=%.3f", *m.quality_mean);
      std::cout << buf;
    }
    std::cout << "\n";
  }
  return 0;
}

int cmd_stats(const fs::path& config_path, const std::string& test, const std::string& treatment,
              std::vector<std::string> metrics) {
  auto config = fc::ExperimentConfig::load(config_path);
  auto all = fc::collect_cell_metrics(config);
  if (metrics.empty()) {
    metrics = {"f1_macro", "f1_weighted", "f1_micro", "accuracy"};
    bool any_quality = true;
    for (const auto& m : all) any_quality &= m.quality_mean.has_value();
    if (any_quality) metrics.emplace_back("quality");
  }

  nlohmann::json out = nlohmann::json::array();
  for (const auto& metric : metrics) {
    fc::TestResult result;
    if (test == "paired_t") {
      auto [with_values, without_values] = fc::evidence_pairs(config, all, metric);
      result = fc::paired_t(with_values, without_values);
      char buf[160];
      std::snprintf(buf, sizeof(buf), "paired_t %-12s (with vs without evidence): t=%+.4f p=%.6f%s",
                    metric.c_str(), result.statistic, result.p_value,
                    result.degenerate ? " (degenerate)" : "");
      std::cout << buf << "\n";
    } else {
      auto dim = fc::parse_treatment(treatment);
      auto matrix = fc::build_score_matrix(config, all, dim, metric);
      if (test == "friedman") {
        result = fc::friedman(matrix.values);
        char buf[160];
        std::snprintf(buf, sizeof(buf),
                      "friedman %-12s over %s (%zu blocks x %zu treatments): chi2=%.4f p=%.6f%s",
                      metric.c_str(), treatment.c_str(), matrix.values.size(),
                      matrix.treatment_names.size(), result.statistic, result.p_value,
                      result.degenerate ? " (degenerate)" : "");
        std::cout << buf << "\n";
      } else if (test == "conover") {
        result = fc::conover_posthoc(matrix.values);
        std::cout << "conover " << metric << " over " << treatment << " (dof=" << result.dof
                  << "):\n";
        for (const auto& [key, pr] : result.pairwise) {
          char buf[160];
          std::snprintf(buf, sizeof(buf), "  %-12s vs %-12s p=%.6f p_holm=%.6f",
                        matrix.treatment_names[key.first].c_str(),
                        matrix.treatment_names[key.second].c_str(), pr.p_value, pr.p_holm);
          std::cout << buf << "\n";
        }
      } else {
        throw fc::ConfigError("unknown test \"" + test + "\"");
      }
    }
    auto j = fc::test_result_to_json(result);
    j["metric"] = metric;
    if (test != "paired_t") j["treatment"] = treatment;
    out.push_back(std::move(j));
  }
  auto path = config.store_dir / ("stats_" + test + ".json");
  fc::util::write_file_atomic(path, out.dump(2) + "\n");
  std::cout << "wrote " << path.string() << "\n";
  return 0;
}

int cmd_report(const fs::path& config_path, std::vector<std::string> scheme_names,
               const std::string& format) {
  auto config = fc::ExperimentConfig::load(config_path);
  std::vector<fc::SchemeKind> schemes;
  if (scheme_names.empty())
    schemes = config.schemes;
  else
    for (const auto& s : scheme_names) schemes.push_back(fc::parse_scheme_kind(s));

  for (auto scheme : schemes) {
    auto table = fc::build_report_table(config, scheme);
    auto base = config.store_dir / ("report_" + std::string(fc::to_string(scheme)));
    if (format == "text" || format == "both") {
      auto text = fc::render_report_text(table);
      fc::util::write_file_atomic(base.string() + ".txt", text);
      std::cout << text << "\n";
    }
    if (format == "csv" || format == "both") {
      fc::util::write_file_atomic(base.string() + ".csv", fc::render_report_csv(table));
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Retrieval-augmented fact-checking experiment harness"};
  app.require_subcommand(1);

  // ingest
  auto* ingest = app.add_subcommand("ingest", "Parse and validate a claim dataset");
  fs::path ingest_dataset, ingest_out;
  bool ingest_attr = false;
  ingest->add_option("--dataset", ingest_dataset, "line-delimited claim records")->required();
  ingest->add_option("--out", ingest_out, "write normalized records here");
  ingest->add_flag("--attributed-only", ingest_attr, "keep only claims attributed to public figures");

  // retrieve
  auto* retrieve = app.add_subcommand("retrieve", "Fetch and filter web evidence per claim");
  fs::path r_dataset, r_cache, r_policy, r_fixture;
  std::string r_endpoint, r_auth_env;
  int r_k = 0, r_workers = 1;
  bool r_attr = false;
  retrieve->add_option("--dataset", r_dataset, "line-delimited claim records")->required();
  retrieve->add_option("--cache", r_cache, "evidence cache file")->required();
  retrieve->add_option("--policy", r_policy, "filter policy JSON");
  retrieve->add_option("--k", r_k, "results per query (overrides policy)");
  retrieve->add_option("--endpoint", r_endpoint, "search endpoint URL");
  retrieve->add_option("--auth-env", r_auth_env, "environment variable holding the API key");
  retrieve->add_option("--fixture", r_fixture, "canned provider payloads (offline mode)");
  retrieve->add_option("--workers", r_workers, "parallel in-flight requests");
  retrieve->add_flag("--attributed-only", r_attr, "keep only attributed claims");

  // run
  auto* run = app.add_subcommand("run", "Run the experiment grid with checkpointing");
  fs::path run_config;
  bool run_resume = false, run_fresh = false;
  run->add_option("--config", run_config, "experiment config JSON")->required();
  run->add_flag("--resume", run_resume, "resume from checkpoints (default behavior)");
  run->add_flag("--fresh", run_fresh, "discard the store and start over");

  // score
  auto* score = app.add_subcommand("score", "Quality-score generated outputs");
  fs::path score_config;
  score->add_option("--config", score_config, "experiment config JSON")->required();

  // evaluate
  auto* evaluate = app.add_subcommand("evaluate", "Compute per-cell classification metrics");
  fs::path eval_config;
  evaluate->add_option("--config", eval_config, "experiment config JSON")->required();

  // stats
  auto* stats = app.add_subcommand("stats", "Statistical tests over grid cells");
  fs::path stats_config;
  std::string stats_test = "friedman", stats_treatment = "scheme", stats_pair;
  std::vector<std::string> stats_metrics;
  stats->add_option("--config", stats_config, "experiment config JSON")->required();
  stats->add_option("--test", stats_test, "friedman | conover | paired_t");
  stats->add_option("--treatment", stats_treatment, "scheme | model | evidence (rank tests)");
  stats->add_option("--pair", stats_pair, "paired_t pairing dimension (evidence)");
  stats->add_option("--metric", stats_metrics, "metric(s) to test");

  // report
  auto* report = app.add_subcommand("report", "Render per-scheme result tables");
  fs::path report_config;
  std::vector<std::string> report_schemes;
  std::string report_format = "both";
  report->add_option("--config", report_config, "experiment config JSON")->required();
  report->add_option("--scheme", report_schemes, "scheme(s) to report (default: all configured)");
  report->add_option("--format", report_format, "text | csv | both");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*ingest) return cmd_ingest(ingest_dataset, ingest_out, ingest_attr);
    if (*retrieve)
      return cmd_retrieve(r_dataset, r_cache, r_policy, r_k, r_endpoint, r_auth_env, r_fixture,
                          r_workers, r_attr);
    if (*run) return cmd_run(run_config, run_fresh);
    if (*score) return cmd_score(score_config);
    if (*evaluate) return cmd_evaluate(eval_config);
    if (*stats) {
      if (stats_test == "paired_t" && !stats_pair.empty() && stats_pair != "evidence")
        throw fc::ConfigError("paired_t supports --pair evidence");
      return cmd_stats(stats_config, stats_test, stats_treatment, stats_metrics);
    }
    if (*report) return cmd_report(report_config, report_schemes, report_format);
  } catch (const fc::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
