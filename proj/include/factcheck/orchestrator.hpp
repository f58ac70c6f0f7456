#pragma once

#include <atomic>
#include <chrono>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "factcheck/claims.hpp"
#include "factcheck/config.hpp"
#include "factcheck/errors.hpp"
#include "factcheck/evidence.hpp"
#include "factcheck/gateway.hpp"
#include "factcheck/prompt.hpp"
#include "factcheck/runstore.hpp"
#include "factcheck/scorer.hpp"

namespace factcheck {

namespace detail {

// Bounded worker pool over an index range. Exceptions are captured and the
// first one rethrown after all workers drain.
template <typename Fn>
void parallel_for(std::size_t count, int workers, Fn&& fn) {
  if (count == 0) return;
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::mutex err_mu;
  std::exception_ptr first_error;
  auto body = [&] {
    for (;;) {
      std::size_t i = next.fetch_add(1);
      if (i >= count) return;
      {
        std::lock_guard<std::mutex> lock(err_mu);
        if (first_error) return;
      }
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(err_mu);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  int n = std::min<int>(workers, static_cast<int>(count));
  pool.reserve(static_cast<std::size_t>(n));
  for (int w = 0; w < n; ++w) pool.emplace_back(body);
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace detail

// One claim through one cell: runs_per_claim validated completions with
// distinct seeds, majority vote over their verdicts. A terminally failing
// attempt marks the record failed; the valid attempts are retained.
inline RunRecord run_claim(const Claim& claim, const Cell& cell, const ExperimentConfig& config,
                           ChatBackend& backend, const OneShotLibrary& shots,
                           const std::optional<EvidenceBundle>& evidence) {
  const LabelScheme& scheme = LabelScheme::of(cell.scheme);
  UserMessageOptions opts;
  opts.with_evidence = cell.mode == EvidenceMode::With;
  opts.include_background = config.include_background;
  opts.evidence_char_budget = config.evidence_char_budget;
  PromptBundle bundle = build_prompt(claim, scheme, evidence, shots, opts);

  RunRecord record;
  record.claim_id = claim.id;
  record.cell = cell;
  record.gold = project_raw(claim.gold_label, scheme);

  auto started = std::chrono::steady_clock::now();
  std::vector<Verdict> verdicts;
  for (int r = 0; r < config.runs_per_claim; ++r) {
    InferenceParams params(cell.model_id, config.temperature, config.max_tokens,
                           config.seeds[static_cast<std::size_t>(r)]);
    try {
      auto completed = complete_validated(bundle, params, backend, config.repair_budget);
      AttemptRecord attempt;
      attempt.output = std::move(completed.output);
      attempt.seed = config.seeds[static_cast<std::size_t>(r)];
      attempt.repairs = static_cast<int>(completed.attempts.size()) - 1;
      verdicts.push_back(attempt.output.verdict);
      record.attempts.push_back(std::move(attempt));
    } catch (const ValidationFailed& e) {
      record.status = RunStatus::Failed;
      if (!record.error.empty()) record.error += "; ";
      record.error += "run " + std::to_string(r) + ": " + e.what();
    }
  }
  record.duration_ms = std::chrono::duration<double, std::milli>(
                           std::chrono::steady_clock::now() - started)
                           .count();
  if (record.status == RunStatus::Ok) record.vote = majority_vote(verdicts, scheme);
  return record;
}

struct GridProgress {
  std::size_t records_written = 0;
  std::size_t checkpoint_hits = 0;
  std::size_t failed_records = 0;
  std::vector<std::pair<Cell, std::string>> aborted_cells;
};

inline std::vector<Claim> load_experiment_claims(const ExperimentConfig& config) {
  std::ifstream in(config.dataset);
  if (!in) throw ConfigError("cannot open dataset: " + config.dataset.string());
  auto claims = parse_dataset(in);
  if (config.attributed_only) claims = filter_attributed(claims);
  if (claims.empty()) throw ConfigError("dataset has no usable claims: " + config.dataset.string());
  return claims;
}

inline FilterPolicy load_policy(const ExperimentConfig& config) {
  if (config.policy_file.empty()) return FilterPolicy{};
  return FilterPolicy::load(config.policy_file);
}

inline std::map<std::string, Verdict> gold_map(const std::vector<Claim>& claims) {
  std::map<std::string, Verdict> gold;
  for (const auto& c : claims) gold[c.id] = merge_pants_fire(c.gold_label);
  return gold;
}

// Drives the full experiment grid with checkpoint resume. Completed
// (claim, cell) pairs are never recomputed; cells whose fingerprint changed
// are wiped first. Fatal backend errors abort the affected cell only.
inline GridProgress run_grid(const ExperimentConfig& config, std::ostream& log = std::cerr) {
  auto claims = load_experiment_claims(config);
  auto gold = gold_map(claims);
  auto shots = OneShotLibrary::load(config.oneshot_dir);
  auto policy = load_policy(config);
  auto policy_fp = policy.fingerprint();
  auto config_fp = config.fingerprint();

  bool needs_evidence = false;
  for (auto m : config.evidence_modes) needs_evidence |= m == EvidenceMode::With;
  std::optional<EvidenceCache> cache;
  if (needs_evidence) cache.emplace(config.cache_file);

  auto cells = config.cells();
  std::map<std::string, std::string> fingerprints;
  for (const auto& cell : cells) {
    std::string buf = config_fp + "|" + cell.key() + "|" +
                      shots.pair_fingerprint(cell.scheme, cell.mode == EvidenceMode::With);
    if (cell.mode == EvidenceMode::With) buf += "|" + policy_fp;
    fingerprints[cell.key()] = util::hex64(util::fnv1a64(buf));
  }

  RunStore store(config.store_dir);
  auto dataset_fp = util::hex64(util::fnv1a64(util::read_file(config.dataset)));
  if (std::filesystem::exists(store.manifest_path())) {
    try {
      auto old = nlohmann::json::parse(util::read_file(store.manifest_path()));
      auto old_dataset = old.value("dataset_fingerprint", dataset_fp);
      if (old_dataset != dataset_fp)
        log << "note: dataset content changed since the last run; records are keyed by claim id, "
               "so entries for removed or edited claims are not recomputed\n";
    } catch (const nlohmann::json::parse_error&) {
      // reconcile reports manifest corruption
    }
  }
  nlohmann::json manifest_extra{{"config_fingerprint", config_fp},
                                {"seeds", config.seeds},
                                {"oneshot_fingerprint", shots.fingerprint()},
                                {"policy_fingerprint", policy_fp},
                                {"dataset_fingerprint", dataset_fp}};
  auto invalidated = store.reconcile(fingerprints, cells, manifest_extra);
  for (const auto& cell : invalidated)
    log << "cell " << cell.key() << ": fingerprint changed, recomputing\n";

  GridProgress progress;
  std::mutex progress_mu;
  for (const auto& cell : cells) {
    const auto& descriptor = config.backend_for(cell.model_id);
    auto backend = descriptor.make(gold);
    auto done = store.completed_claims(cell);
    std::vector<const Claim*> pending;
    for (const auto& c : claims)
      if (!done.count(c.id)) pending.push_back(&c);
    progress.checkpoint_hits += done.size();
    if (pending.empty()) continue;
    log << "cell " << cell.key() << ": " << pending.size() << " claim(s) to run\n";

    try {
      detail::parallel_for(pending.size(), config.workers, [&](std::size_t i) {
        const Claim& claim = *pending[i];
        std::optional<EvidenceBundle> evidence;
        if (cell.mode == EvidenceMode::With) {
          evidence = cache->lookup(claim.id, policy_fp);
          if (!evidence)
            throw ConfigError("no cached evidence for claim \"" + claim.id +
                              "\" under the active policy; run the retrieve stage first");
        }
        RunRecord record = run_claim(claim, cell, config, *backend, shots, evidence);
        store.append(record);
        std::lock_guard<std::mutex> lock(progress_mu);
        progress.records_written++;
        if (record.status == RunStatus::Failed) progress.failed_records++;
      });
    } catch (const Error& e) {
      log << "cell " << cell.key() << " aborted: " << e.what() << "\n";
      progress.aborted_cells.emplace_back(cell, e.what());
    }
  }
  return progress;
}

// Retrieval stage: fills the evidence cache for every claim. Cached claims
// cost no network call; fully filtered result sets still store a bundle so
// downstream stages can run the claim in no-evidence mode.
struct RetrieveProgress {
  std::size_t retrieved = 0;
  std::size_t cache_hits = 0;
  std::size_t none_after_filtering = 0;
  std::size_t none_returned = 0;
};

inline RetrieveProgress retrieve_all(const std::vector<Claim>& claims, const FilterPolicy& policy,
                                     SearchClient& client, EvidenceCache& cache, int workers = 1) {
  RetrieveProgress progress;
  std::mutex mu;
  auto fp = policy.fingerprint();
  detail::parallel_for(claims.size(), workers, [&](std::size_t i) {
    bool hit = cache.lookup(claims[i].id, fp).has_value();
    auto bundle = retrieve_evidence(claims[i], policy, client, cache);
    std::lock_guard<std::mutex> lock(mu);
    if (hit)
      progress.cache_hits++;
    else
      progress.retrieved++;
    if (bundle.status == BundleStatus::NoneAfterFiltering) progress.none_after_filtering++;
    if (bundle.status == BundleStatus::NoneReturned) progress.none_returned++;
  });
  return progress;
}

inline std::unique_ptr<ChatBackend> make_evaluator(const BackendDescriptor& descriptor) {
  if (descriptor.kind == BackendDescriptor::Kind::Remote)
    return std::make_unique<HttpChatBackend>(descriptor.endpoint, descriptor.auth_env);
  return std::make_unique<MockEvaluatorBackend>(
      MockEvaluatorBackend::rules_from_json(descriptor.rubric), descriptor.mock.seed);
}

// The attempt whose verdict the vote settled on; for a tie-broken median it
// is still one of the voted labels, so it always exists for ok records.
inline const AttemptRecord& representative_attempt(const RunRecord& record) {
  for (const auto& a : record.attempts)
    if (a.output.verdict == record.vote.verdict) return a;
  throw DomainError("record " + record.claim_id + " has no attempt matching the voted verdict");
}

// Identity of the scored content; scoring resumes across runs and re-scores
// only records whose attempts changed.
inline std::string record_fingerprint(const RunRecord& record) {
  std::string buf = record.claim_id;
  for (const auto& a : record.attempts) {
    buf += '\x1f';
    buf += a.output.raw;
  }
  return util::hex64(util::fnv1a64(buf));
}

// Identity of the scoring protocol; a changed evaluator or run count
// re-scores everything.
inline std::string evaluator_fingerprint(const ExperimentConfig& config) {
  nlohmann::json j{{"kind", config.evaluator.kind == BackendDescriptor::Kind::Remote ? "remote"
                                                                                     : "mock"},
                   {"model_id", config.evaluator.model_id},
                   {"endpoint", config.evaluator.endpoint},
                   {"rubric", config.evaluator.rubric},
                   {"mock_seed", config.evaluator.mock.seed},
                   {"score_runs", config.score_runs}};
  return util::hex64(util::fnv1a64(j.dump()));
}

struct ScoreProgress {
  std::size_t scored = 0;
  std::size_t skipped = 0;
  std::size_t unreliable = 0;
};

// Scoring stage: reference-free quality of the representative output of
// every ok record, score_runs runs averaged. Scores land in one file per cell.
inline ScoreProgress score_grid(const ExperimentConfig& config, std::ostream& log = std::cerr) {
  if (!config.has_evaluator) throw ConfigError("config has no evaluator backend");
  auto claims = load_experiment_claims(config);
  std::map<std::string, const Claim*> by_id;
  for (const auto& c : claims) by_id[c.id] = &c;
  auto shots = OneShotLibrary::load(config.oneshot_dir);
  auto policy = load_policy(config);
  auto policy_fp = policy.fingerprint();

  bool needs_evidence = false;
  for (auto m : config.evidence_modes) needs_evidence |= m == EvidenceMode::With;
  std::optional<EvidenceCache> cache;
  if (needs_evidence) cache.emplace(config.cache_file);

  auto evaluator = make_evaluator(config.evaluator);
  auto eval_fp = evaluator_fingerprint(config);
  RunStore store(config.store_dir);
  ScoreProgress progress;
  std::mutex mu;

  for (const auto& cell : config.cells()) {
    auto records = store.load_cell(cell);
    auto scores_path = store.scores_path(cell);
    std::set<std::string> already;
    if (std::filesystem::exists(scores_path)) {
      for (const auto& line : util::split_lines(util::read_file(scores_path))) {
        if (util::trim(line).empty()) continue;
        try {
          auto j = nlohmann::json::parse(line);
          already.insert(j.at("claim_id").get<std::string>() + "|" +
                         j.at("record_fp").get<std::string>() + "|" +
                         j.value("evaluator_fp", ""));
        } catch (const std::exception& e) {
          throw CacheError("score file " + scores_path.string() + " is corrupt: " + e.what());
        }
      }
    }

    std::vector<const RunRecord*> todo;
    for (const auto& r : records) {
      if (r.status != RunStatus::Ok) continue;
      if (already.count(r.claim_id + "|" + record_fingerprint(r) + "|" + eval_fp)) {
        progress.skipped++;
        continue;
      }
      todo.push_back(&r);
    }
    if (todo.empty()) continue;
    log << "cell " << cell.key() << ": scoring " << todo.size() << " record(s)\n";

    std::ofstream out(scores_path, std::ios::binary | std::ios::app);
    if (!out) throw CacheError("cannot append to score file: " + scores_path.string());
    detail::parallel_for(todo.size(), config.workers, [&](std::size_t i) {
      const RunRecord& record = *todo[i];
      auto claim_it = by_id.find(record.claim_id);
      if (claim_it == by_id.end())
        throw ConfigError("record claim \"" + record.claim_id + "\" not present in the dataset");
      std::optional<EvidenceBundle> evidence;
      if (cell.mode == EvidenceMode::With) evidence = cache->lookup(record.claim_id, policy_fp);
      UserMessageOptions opts;
      opts.with_evidence = cell.mode == EvidenceMode::With;
      opts.include_background = config.include_background;
      opts.evidence_char_budget = config.evidence_char_budget;
      PromptBundle bundle =
          build_prompt(*claim_it->second, LabelScheme::of(cell.scheme), evidence, shots, opts);
      const AttemptRecord& attempt = representative_attempt(record);
      InferenceParams params(config.evaluator.model_id, config.temperature, config.max_tokens,
                             config.seeds.front());
      QualityScore score =
          score_output(bundle, attempt.output, *evaluator, params, config.score_runs);
      nlohmann::json line{{"claim_id", record.claim_id},
                          {"record_fp", record_fingerprint(record)},
                          {"evaluator_fp", eval_fp},
                          {"score", quality_score_to_json(score)}};
      std::lock_guard<std::mutex> lock(mu);
      out << line.dump() << '\n';
      out.flush();
      progress.scored++;
      if (score.unreliable) progress.unreliable++;
    });
  }
  return progress;
}

// Mean quality score per cell, keyed by claim_id, for reporting.
inline std::map<std::string, double> load_scores(const RunStore& store, const Cell& cell) {
  std::map<std::string, double> scores;
  auto path = store.scores_path(cell);
  if (!std::filesystem::exists(path)) return scores;
  for (const auto& line : util::split_lines(util::read_file(path))) {
    if (util::trim(line).empty()) continue;
    try {
      auto j = nlohmann::json::parse(line);
      scores[j.at("claim_id").get<std::string>()] = j.at("score").at("total").get<double>();
    } catch (const std::exception& e) {
      throw CacheError("score file " + path.string() + " is corrupt: " + e.what());
    }
  }
  return scores;
}

}  // namespace factcheck
