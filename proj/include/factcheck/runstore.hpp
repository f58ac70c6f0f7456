#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "factcheck/config.hpp"
#include "factcheck/errors.hpp"
#include "factcheck/gateway.hpp"
#include "factcheck/labels.hpp"
#include "factcheck/util.hpp"

namespace factcheck {

struct VoteResult {
  Verdict verdict = Verdict::False;
  std::size_t support = 0;
  bool tie_broken = false;
};

// Majority vote over repeated runs. A unique mode with at least ceil(n/2)
// support wins outright; otherwise the ordinal median of the voted labels on
// the scheme's truthfulness scale decides, flagged as tie-broken. The median
// of an odd-length vote list is always one of the voted labels.
inline VoteResult majority_vote(const std::vector<Verdict>& verdicts, const LabelScheme& scheme) {
  if (verdicts.empty()) throw DomainError("cannot vote over an empty verdict list");
  const std::size_t n = verdicts.size();

  std::vector<std::size_t> positions;
  positions.reserve(n);
  for (auto v : verdicts) positions.push_back(scheme.position(v));

  std::map<std::size_t, std::size_t> counts;
  for (auto p : positions) counts[p]++;
  std::size_t best_count = 0;
  for (const auto& [pos, count] : counts) best_count = std::max(best_count, count);
  std::vector<std::size_t> modes;
  for (const auto& [pos, count] : counts)
    if (count == best_count) modes.push_back(pos);

  const std::size_t majority = (n + 1) / 2;
  VoteResult result;
  if (modes.size() == 1) {
    result.verdict = scheme.labels()[modes.front()];
    result.support = best_count;
    result.tie_broken = best_count < majority;
    return result;
  }
  std::sort(positions.begin(), positions.end());
  std::size_t median_pos = positions[(n - 1) / 2];
  result.verdict = scheme.labels()[median_pos];
  result.support = counts[median_pos];
  result.tie_broken = true;
  return result;
}

struct AttemptRecord {
  ModelOutput output;
  std::int64_t seed = 0;
  int repairs = 0;  // correction round-trips consumed before a valid parse
};

enum class RunStatus { Ok, Failed };

inline std::string_view to_string(RunStatus s) { return s == RunStatus::Ok ? "ok" : "failed"; }

// Persisted outcome of one (claim, cell) task.
struct RunRecord {
  std::string claim_id;
  Cell cell;
  std::vector<AttemptRecord> attempts;  // the valid completions
  VoteResult vote;                      // meaningful only when status == Ok
  Verdict gold = Verdict::False;
  double duration_ms = 0;
  RunStatus status = RunStatus::Ok;
  std::string error;  // failure summary when status == Failed
};

inline nlohmann::json run_record_to_json(const RunRecord& r) {
  nlohmann::json j;
  j["claim_id"] = r.claim_id;
  j["model"] = r.cell.model_id;
  j["scheme"] = std::string(to_string(r.cell.scheme));
  j["evidence"] = std::string(to_string(r.cell.mode));
  j["gold"] = std::string(to_string(r.gold));
  j["status"] = std::string(to_string(r.status));
  j["duration_ms"] = r.duration_ms;
  if (r.status == RunStatus::Ok) {
    j["voted"] = std::string(to_string(r.vote.verdict));
    j["support"] = r.vote.support;
    j["tie_broken"] = r.vote.tie_broken;
  } else {
    j["error"] = r.error;
  }
  auto& attempts = j["attempts"] = nlohmann::json::array();
  for (const auto& a : r.attempts) {
    attempts.push_back({{"reasoning", a.output.reasoning},
                        {"verdict", std::string(to_string(a.output.verdict))},
                        {"explanation", a.output.explanation},
                        {"raw", a.output.raw},
                        {"seed", a.seed},
                        {"repairs", a.repairs}});
  }
  return j;
}

inline RunRecord run_record_from_json(const nlohmann::json& j) {
  RunRecord r;
  r.claim_id = j.at("claim_id").get<std::string>();
  r.cell.model_id = j.at("model").get<std::string>();
  r.cell.scheme = parse_scheme_kind(j.at("scheme").get<std::string>());
  r.cell.mode = parse_evidence_mode(j.at("evidence").get<std::string>());
  const LabelScheme& scheme = LabelScheme::of(r.cell.scheme);
  r.gold = scheme.parse_verdict(j.at("gold").get<std::string>());
  r.status = j.at("status").get<std::string>() == "ok" ? RunStatus::Ok : RunStatus::Failed;
  r.duration_ms = j.value("duration_ms", 0.0);
  if (r.status == RunStatus::Ok) {
    r.vote.verdict = scheme.parse_verdict(j.at("voted").get<std::string>());
    r.vote.support = j.at("support").get<std::size_t>();
    r.vote.tie_broken = j.at("tie_broken").get<bool>();
  } else {
    r.error = j.value("error", "");
  }
  for (const auto& a : j.at("attempts")) {
    AttemptRecord ar;
    ar.output.reasoning = a.at("reasoning").get<std::string>();
    ar.output.verdict = scheme.parse_verdict(a.at("verdict").get<std::string>());
    ar.output.explanation = a.at("explanation").get<std::string>();
    ar.output.raw = a.at("raw").get<std::string>();
    ar.seed = a.at("seed").get<std::int64_t>();
    ar.repairs = a.value("repairs", 0);
    r.attempts.push_back(std::move(ar));
  }
  return r;
}

// Append-only record store: one line-delimited file per cell plus a manifest
// holding the config/fixture fingerprints and per-cell fingerprints. A cell
// whose fingerprint changed is wiped and recomputed; matching cells resume.
class RunStore {
 public:
  explicit RunStore(std::filesystem::path dir) : dir_(std::move(dir)) {
    std::filesystem::create_directories(dir_);
  }

  const std::filesystem::path& dir() const { return dir_; }

  std::filesystem::path manifest_path() const { return dir_ / "manifest.json"; }
  std::filesystem::path cell_path(const Cell& cell) const {
    return dir_ / ("records_" + cell.slug() + ".jsonl");
  }
  std::filesystem::path scores_path(const Cell& cell) const {
    return dir_ / ("scores_" + cell.slug() + ".jsonl");
  }

  // Aligns the store with the requested cells. Returns the set of cells whose
  // previous records were discarded because their fingerprint changed.
  std::vector<Cell> reconcile(const std::map<std::string, std::string>& cell_fingerprints,
                              const std::vector<Cell>& cells, const nlohmann::json& manifest_extra) {
    std::lock_guard<std::mutex> lock(mu_);
    nlohmann::json old;
    if (std::filesystem::exists(manifest_path())) {
      try {
        old = nlohmann::json::parse(util::read_file(manifest_path()));
      } catch (const nlohmann::json::parse_error& e) {
        throw CacheError("run store manifest is corrupt: " + std::string(e.what()));
      }
    }
    std::vector<Cell> invalidated;
    for (const auto& cell : cells) {
      auto fp = cell_fingerprints.at(cell.key());
      std::string old_fp = old.contains("cells") ? old["cells"].value(cell.key(), "") : "";
      auto path = cell_path(cell);
      if (old_fp != fp && std::filesystem::exists(path)) {
        // stale records take their quality scores with them
        std::filesystem::remove(path);
        std::filesystem::remove(scores_path(cell));
        invalidated.push_back(cell);
      }
    }
    nlohmann::json manifest = manifest_extra;
    auto& cells_j = manifest["cells"] = nlohmann::json::object();
    for (const auto& [key, fp] : cell_fingerprints) cells_j[key] = fp;
    util::write_file_atomic(manifest_path(), manifest.dump(2) + "\n");
    return invalidated;
  }

  // Loads a cell file, tolerating a torn final line (dropped and reported);
  // corruption anywhere else is an error.
  std::vector<RunRecord> load_cell(const Cell& cell) const {
    std::lock_guard<std::mutex> lock(mu_);
    return load_cell_unlocked(cell);
  }

  std::set<std::string> completed_claims(const Cell& cell) const {
    std::set<std::string> ids;
    for (const auto& r : load_cell(cell)) ids.insert(r.claim_id);
    return ids;
  }

  void append(const RunRecord& record) {
    std::lock_guard<std::mutex> lock(mu_);
    auto path = cell_path(record.cell);
    std::ofstream out(path, std::ios::binary | std::ios::app);
    if (!out) throw CacheError("cannot append to run store file: " + path.string());
    out << run_record_to_json(record).dump() << '\n';
    out.flush();
  }

 private:
  std::vector<RunRecord> load_cell_unlocked(const Cell& cell) const {
    auto path = cell_path(cell);
    std::vector<RunRecord> records;
    if (!std::filesystem::exists(path)) return records;
    auto lines = util::split_lines(util::read_file(path));
    std::vector<std::string> valid_lines;
    for (std::size_t i = 0; i < lines.size(); ++i) {
      if (util::trim(lines[i]).empty()) continue;
      try {
        records.push_back(run_record_from_json(nlohmann::json::parse(lines[i])));
        valid_lines.push_back(lines[i]);
      } catch (const std::exception& e) {
        bool last = true;
        for (std::size_t j = i + 1; j < lines.size(); ++j)
          if (!util::trim(lines[j]).empty()) last = false;
        if (!last)
          throw CacheError("run store file " + path.string() + " is corrupt at line " +
                           std::to_string(i + 1) + ": " + e.what());
        // torn trailing write from an interrupted run; drop it and rewrite
        std::cerr << "warning: dropping torn trailing record in " << path.string() << "\n";
        std::string body;
        for (const auto& l : valid_lines) body += l + "\n";
        util::write_file_atomic(path, body);
        break;
      }
    }
    return records;
  }

  std::filesystem::path dir_;
  mutable std::mutex mu_;
};

}  // namespace factcheck
