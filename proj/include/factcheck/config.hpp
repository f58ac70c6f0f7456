#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "factcheck/errors.hpp"
#include "factcheck/gateway.hpp"
#include "factcheck/labels.hpp"
#include "factcheck/util.hpp"

namespace factcheck {

enum class EvidenceMode { Without, With };

inline std::string_view to_string(EvidenceMode m) {
  return m == EvidenceMode::With ? "with" : "without";
}

inline EvidenceMode parse_evidence_mode(std::string_view s) {
  auto n = util::normalize_label(s);
  if (n == "with" || n == "yes") return EvidenceMode::With;
  if (n == "without" || n == "no") return EvidenceMode::Without;
  throw ConfigError("unknown evidence mode: \"" + std::string(s) + "\"");
}

// One grid cell: model x scheme x evidence mode.
struct Cell {
  std::string model_id;
  SchemeKind scheme = SchemeKind::Five;
  EvidenceMode mode = EvidenceMode::Without;

  std::string key() const {
    return model_id + "|" + std::string(to_string(scheme)) + "|" + std::string(to_string(mode));
  }

  // Filesystem-safe form of key(), used in store file names.
  std::string slug() const {
    std::string s = key();
    for (auto& c : s)
      if (!std::isalnum(static_cast<unsigned char>(c)) && c != '-' && c != '.') c = '_';
    return s;
  }

  friend bool operator==(const Cell&, const Cell&) = default;
  friend auto operator<=>(const Cell&, const Cell&) = default;
};

// The single declarative experiment manifest. Every knob of the pipeline
// lives here; relative paths resolve against the config file's directory.
struct ExperimentConfig {
  std::filesystem::path dataset;
  std::filesystem::path store_dir;
  std::filesystem::path cache_file;
  std::filesystem::path policy_file;   // empty = built-in default policy
  std::filesystem::path oneshot_dir;

  std::vector<SchemeKind> schemes{SchemeKind::Five, SchemeKind::Three, SchemeKind::Two};
  std::vector<EvidenceMode> evidence_modes{EvidenceMode::Without, EvidenceMode::With};
  int runs_per_claim = 3;
  std::vector<std::int64_t> seeds;
  int workers = 1;
  int repair_budget = 2;
  double temperature = 0.7;
  int max_tokens = 1024;
  bool include_background = false;
  bool attributed_only = true;
  std::size_t evidence_char_budget = 4000;

  std::vector<BackendDescriptor> backends;
  BackendDescriptor evaluator;
  bool has_evaluator = false;
  int score_runs = 3;

  // Search endpoint for the retrieve stage; a fixture file replaces the
  // network for offline runs.
  std::string search_endpoint;
  std::string search_auth_env;
  std::filesystem::path search_fixture;

  std::vector<Cell> cells() const {
    std::vector<Cell> out;
    for (const auto& b : backends)
      for (auto scheme : schemes)
        for (auto mode : evidence_modes) out.push_back(Cell{b.model_id, scheme, mode});
    return out;
  }

  const BackendDescriptor& backend_for(const std::string& model_id) const {
    for (const auto& b : backends)
      if (b.model_id == model_id) return b;
    throw ConfigError("no backend configured for model \"" + model_id + "\"");
  }

  void validate() const {
    if (dataset.empty()) throw ConfigError("config needs a dataset path");
    if (store_dir.empty()) throw ConfigError("config needs a store path");
    if (oneshot_dir.empty()) throw ConfigError("config needs a one-shot fixture directory");
    if (backends.empty()) throw ConfigError("config needs at least one backend");
    if (schemes.empty()) throw ConfigError("config needs at least one label scheme");
    if (evidence_modes.empty()) throw ConfigError("config needs at least one evidence mode");
    if (runs_per_claim < 1) throw ConfigError("runs_per_claim must be >= 1");
    if (seeds.size() < static_cast<std::size_t>(runs_per_claim))
      throw ConfigError("config needs at least runs_per_claim seeds");
    if (workers < 1) throw ConfigError("workers must be >= 1");
    if (repair_budget < 0) throw ConfigError("repair_budget must be >= 0");
    bool needs_evidence = false;
    for (auto m : evidence_modes) needs_evidence |= m == EvidenceMode::With;
    if (needs_evidence && cache_file.empty())
      throw ConfigError("config needs an evidence cache path for with-evidence cells");
  }

  static ExperimentConfig load(const std::filesystem::path& path) {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(util::read_file(path));
    } catch (const nlohmann::json::parse_error& e) {
      throw ConfigError("invalid config " + path.string() + ": " + e.what());
    }
    auto base = path.has_parent_path() ? path.parent_path() : std::filesystem::path(".");
    auto resolve = [&](const std::string& p) -> std::filesystem::path {
      if (p.empty()) return {};
      std::filesystem::path fp(p);
      return fp.is_absolute() ? fp : base / fp;
    };

    ExperimentConfig c;
    c.dataset = resolve(j.value("dataset", ""));
    c.store_dir = resolve(j.value("store", ""));
    c.cache_file = resolve(j.value("cache", ""));
    c.policy_file = resolve(j.value("policy", ""));
    c.oneshot_dir = resolve(j.value("oneshot_dir", ""));
    if (j.contains("schemes")) {
      c.schemes.clear();
      for (const auto& s : j.at("schemes")) c.schemes.push_back(parse_scheme_kind(s.get<std::string>()));
    }
    if (j.contains("evidence_modes")) {
      c.evidence_modes.clear();
      for (const auto& s : j.at("evidence_modes"))
        c.evidence_modes.push_back(parse_evidence_mode(s.get<std::string>()));
    }
    c.runs_per_claim = j.value("runs_per_claim", 3);
    if (j.contains("seeds"))
      for (const auto& s : j.at("seeds")) c.seeds.push_back(s.get<std::int64_t>());
    c.workers = j.value("workers", 1);
    c.repair_budget = j.value("repair_budget", 2);
    c.temperature = j.value("temperature", 0.7);
    c.max_tokens = j.value("max_tokens", 1024);
    c.include_background = j.value("include_background", false);
    c.attributed_only = j.value("attributed_only", true);
    c.evidence_char_budget = j.value("evidence_char_budget", std::size_t{4000});
    if (j.contains("backends"))
      for (const auto& b : j.at("backends")) c.backends.push_back(BackendDescriptor::from_json(b));
    if (j.contains("evaluator")) {
      c.evaluator = BackendDescriptor::from_json(j.at("evaluator"));
      c.has_evaluator = true;
    }
    c.score_runs = j.value("score_runs", 3);
    if (j.contains("search")) {
      const auto& s = j.at("search");
      c.search_endpoint = s.value("endpoint", "");
      c.search_auth_env = s.value("auth_env", "");
      c.search_fixture = resolve(s.value("fixture", ""));
    }
    c.validate();
    return c;
  }

  // Stable hash of everything that affects inference outputs. Store paths are
  // excluded so the same experiment can live in different directories.
  std::string fingerprint() const {
    nlohmann::json j;
    j["runs_per_claim"] = runs_per_claim;
    j["seeds"] = seeds;
    j["repair_budget"] = repair_budget;
    j["temperature"] = temperature;
    j["max_tokens"] = max_tokens;
    j["include_background"] = include_background;
    j["attributed_only"] = attributed_only;
    j["evidence_char_budget"] = evidence_char_budget;
    auto& schemes_j = j["schemes"] = nlohmann::json::array();
    for (auto s : schemes) schemes_j.push_back(std::string(to_string(s)));
    auto& modes_j = j["evidence_modes"] = nlohmann::json::array();
    for (auto m : evidence_modes) modes_j.push_back(std::string(to_string(m)));
    auto& backends_j = j["backends"] = nlohmann::json::array();
    for (const auto& b : backends) {
      backends_j.push_back({{"model_id", b.model_id},
                            {"kind", b.kind == BackendDescriptor::Kind::Remote ? "remote" : "mock"},
                            {"mock_seed", b.mock.seed},
                            {"acc_with", b.mock.accuracy_with_evidence},
                            {"acc_without", b.mock.accuracy_without_evidence}});
    }
    return util::hex64(util::fnv1a64(j.dump()));
  }
};

}  // namespace factcheck
