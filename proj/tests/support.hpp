#pragma once

// Shared helpers for the test suites: deterministic synthetic datasets,
// scripted backends, and temp-dir scaffolding.

#include <atomic>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "factcheck/factcheck.hpp"

namespace testsupport {

namespace fc = factcheck;
namespace fs = std::filesystem;

class TempDir {
 public:
  TempDir() {
    static std::atomic<unsigned> counter{0};
    auto base = fs::temp_directory_path();
    path_ = base / ("factcheck_test_" + std::to_string(::getpid()) + "_" +
                    std::to_string(counter.fetch_add(1)));
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& name) const { return path_ / name; }

 private:
  fs::path path_;
};

inline fc::RawLabel five_label_at(std::size_t index) {
  static const fc::RawLabel labels[] = {fc::RawLabel::True, fc::RawLabel::MostlyTrue,
                                        fc::RawLabel::HalfTrue, fc::RawLabel::MostlyFalse,
                                        fc::RawLabel::False};
  return labels[index % 5];
}

// Deterministic synthetic dataset with an approximately fixed label marginal.
inline std::vector<fc::Claim> synth_claims(std::size_t n, std::uint64_t seed,
                                           std::vector<double> five_probs = {0.14, 0.19, 0.20,
                                                                             0.18, 0.29}) {
  fc::util::Rng rng(seed);
  std::vector<fc::Claim> claims;
  claims.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    double u = rng.next_double();
    std::size_t label = 0;
    double acc = 0;
    for (std::size_t j = 0; j < five_probs.size(); ++j) {
      acc += five_probs[j];
      if (u < acc) {
        label = j;
        break;
      }
      label = j;
    }
    fc::Claim c;
    c.id = "c" + std::to_string(1000 + i);
    c.source = "Speaker " + std::to_string(i % 17);
    c.background = i % 3 == 0 ? std::optional<std::string>("A recurring public figure in the synthetic corpus")
                              : std::nullopt;
    c.context = "stated on March " + std::to_string(1 + (i % 28)) + ", 2021 in a public appearance";
    c.text = "Synthetic statement " + std::to_string(i) + " about regional program " +
             std::to_string(i % 7) + ".";
    c.date = fc::Date{2021, 3, static_cast<int>(1 + (i % 28))};
    c.gold_label = five_label_at(label);
    c.attributed = true;
    claims.push_back(std::move(c));
  }
  return claims;
}

// Provider payload with `clean` ordinary results and `blocked` leak-prone
// ones (alternating keyword and domain plants), interleaved.
inline nlohmann::json synth_payload(const std::string& topic, int clean, int blocked) {
  nlohmann::json organic = nlohmann::json::array();
  int c = 0, b = 0;
  int total = clean + blocked;
  for (int i = 0; i < total; ++i) {
    bool plant_blocked = b < blocked && (i % 2 == 1 || c >= clean);
    if (plant_blocked) {
      if (b % 2 == 0)
        organic.push_back({{"title", "Claim review " + std::to_string(b)},
                           {"snippet", "PolitiFact rated this statement in a recent fact-check."},
                           {"link", "https://www.politifact.com/item" + std::to_string(b)},
                           {"date", "2021-02-01"}});
      else
        organic.push_back({{"title", "Rumor debunked: " + topic},
                           {"snippet", "Our team took a close look at the viral rumor."},
                           {"link", "https://news.example.org/story" + std::to_string(b)},
                           {"date", "2021-02-02"}});
      ++b;
    } else {
      organic.push_back({{"title", "Coverage of " + topic + " part " + std::to_string(c)},
                         {"snippet", "Reporting with figures and context about " + topic + "."},
                         {"link", "https://regional-news.example.com/a" + std::to_string(c)},
                         {"date", "2021-01-1" + std::to_string(c % 9)}});
      ++c;
    }
  }
  return nlohmann::json{{"organic", organic}};
}

inline fc::FixtureSearchClient synth_search_client(const std::vector<fc::Claim>& claims,
                                                   int clean = 6, int blocked = 4) {
  fc::FixtureSearchClient client;
  for (const auto& c : claims)
    client.add(fc::util::trim(c.text), synth_payload("program", clean, blocked));
  return client;
}

inline void write_search_fixture(const fs::path& path, const std::vector<fc::Claim>& claims,
                                 int clean = 6, int blocked = 4) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& c : claims) j[fc::util::trim(c.text)] = synth_payload("program", clean, blocked);
  fc::util::write_file(path, j.dump());
}

// Returns canned responses in order; repeats the last one when exhausted.
class ScriptedBackend : public fc::ChatBackend {
 public:
  explicit ScriptedBackend(std::vector<std::string> responses)
      : responses_(std::move(responses)) {}

  std::string complete(const fc::PromptBundle& bundle, const fc::InferenceParams&) override {
    last_message_count_ = bundle.messages.size();
    std::size_t i = std::min(calls_, responses_.size() - 1);
    ++calls_;
    return responses_[i];
  }

  std::string name() const override { return "scripted"; }

  std::size_t calls() const { return calls_; }
  std::size_t last_message_count() const { return last_message_count_; }

 private:
  std::vector<std::string> responses_;
  std::size_t calls_ = 0;
  std::size_t last_message_count_ = 0;
};

inline std::string valid_output(const std::string& verdict) {
  return nlohmann::json{{"reasoning", "Synthetic analysis of the statement."},
                        {"verdict", verdict},
                        {"explanation", "Synthetic supporting explanation."}}
      .dump();
}

inline fc::OneShotLibrary fixture_shots() {
  return fc::OneShotLibrary::load(fs::path(FC_FIXTURES_DIR) / "oneshot");
}

inline fc::Claim sample_claim() {
  fc::Claim c;
  c.id = "claim-1";
  c.source = "Harbor City Gazette Editorial Board";
  c.background = "The editorial board of a regional daily newspaper";
  c.context = "stated on June 14, 2017 in a Harbor City Gazette editorial";
  c.text = "A zoning variance approved in 2016 doubled downtown parking capacity";
  c.date = fc::Date{2017, 6, 14};
  c.gold_label = fc::RawLabel::False;
  c.attributed = true;
  return c;
}

// Experiment config over temp-dir paths, mock backends only.
inline fc::ExperimentConfig base_config(const TempDir& dir, std::size_t n_claims,
                                        std::uint64_t seed = 41) {
  auto claims = synth_claims(n_claims, seed);
  fc::util::write_file(dir / "claims.jsonl", fc::serialize_dataset(claims));

  fc::ExperimentConfig config;
  config.dataset = dir / "claims.jsonl";
  config.store_dir = dir / "store";
  config.cache_file = dir / "cache" / "evidence.jsonl";
  config.oneshot_dir = fs::path(FC_FIXTURES_DIR) / "oneshot";
  config.schemes = {fc::SchemeKind::Five, fc::SchemeKind::Three, fc::SchemeKind::Two};
  config.evidence_modes = {fc::EvidenceMode::Without, fc::EvidenceMode::With};
  config.runs_per_claim = 3;
  config.seeds = {11, 22, 33};
  config.workers = 1;
  config.repair_budget = 1;

  fc::BackendDescriptor backend;
  backend.kind = fc::BackendDescriptor::Kind::Mock;
  backend.model_id = "mock-a";
  backend.mock.mode = fc::MockChatBackend::Mode::Conditional;
  backend.mock.accuracy_with_evidence = 0.85;
  backend.mock.accuracy_without_evidence = 0.45;
  backend.mock.seed = 7;
  config.backends = {backend};
  return config;
}

inline void prime_evidence_cache(const fc::ExperimentConfig& config) {
  std::ifstream in(config.dataset);
  auto claims = fc::parse_dataset(in);
  auto client = synth_search_client(claims);
  fc::FilterPolicy policy;
  fc::EvidenceCache cache(config.cache_file);
  fc::retrieve_all(claims, policy, client, cache, 1);
}

}  // namespace testsupport
