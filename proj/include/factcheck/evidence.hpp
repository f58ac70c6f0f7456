#pragma once

#include <ctime>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <shared_mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "factcheck/claims.hpp"
#include "factcheck/date.hpp"
#include "factcheck/errors.hpp"
#include "factcheck/http.hpp"
#include "factcheck/util.hpp"

namespace factcheck {

struct SearchResult {
  std::string title;
  std::string snippet;
  std::string url;
  std::optional<Date> date;
  int rank = 1;  // provider rank, 1-based

  friend bool operator==(const SearchResult&, const SearchResult&) = default;
};

enum class BundleStatus { Found, NoneAfterFiltering, NoneReturned };

inline std::string_view to_string(BundleStatus s) {
  switch (s) {
    case BundleStatus::Found: return "found";
    case BundleStatus::NoneAfterFiltering: return "none_after_filtering";
    case BundleStatus::NoneReturned: return "none_returned";
  }
  return "";
}

inline BundleStatus parse_bundle_status(std::string_view s) {
  if (s == "found") return BundleStatus::Found;
  if (s == "none_after_filtering") return BundleStatus::NoneAfterFiltering;
  if (s == "none_returned") return BundleStatus::NoneReturned;
  throw ParseError("unknown bundle status: \"" + std::string(s) + "\"");
}

// Leak-prevention filter configuration. A result is dropped when its URL
// hostname ends in a blocked domain suffix or its title/snippet contains a
// blocked keyword (case-insensitive substring).
struct FilterPolicy {
  std::set<std::string> blocked_domains;
  std::set<std::string> blocked_keywords{"politifact", "fact-check", "debunk"};
  int k = 10;

  static FilterPolicy from_json(const nlohmann::json& j) {
    FilterPolicy p;
    if (j.contains("blocked_domains"))
      for (const auto& d : j.at("blocked_domains"))
        p.blocked_domains.insert(util::to_lower(d.get<std::string>()));
    if (j.contains("blocked_keywords")) {
      p.blocked_keywords.clear();
      for (const auto& w : j.at("blocked_keywords"))
        p.blocked_keywords.insert(util::to_lower(w.get<std::string>()));
    }
    if (j.contains("k")) p.k = j.at("k").get<int>();
    if (p.k < 1) throw ConfigError("filter policy k must be positive");
    return p;
  }

  static FilterPolicy load(const std::filesystem::path& path) {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(util::read_file(path));
    } catch (const nlohmann::json::parse_error& e) {
      throw ConfigError("invalid policy file " + path.string() + ": " + e.what());
    }
    return from_json(j);
  }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["blocked_domains"] = blocked_domains;
    j["blocked_keywords"] = blocked_keywords;
    j["k"] = k;
    return j;
  }

  // Stable content hash; cache entries are keyed on it so a policy change
  // invalidates previously stored bundles.
  std::string fingerprint() const { return util::hex64(util::fnv1a64(to_json().dump())); }
};

struct EvidenceBundle {
  std::string claim_id;
  std::vector<SearchResult> results;  // sorted by rank ascending, at most k
  std::string retrieved_at;           // ISO-8601 UTC timestamp
  BundleStatus status = BundleStatus::NoneReturned;

  friend bool operator==(const EvidenceBundle&, const EvidenceBundle&) = default;
};

inline std::string utc_now_iso() {
  std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// The query is the verbatim claim text, trimmed. No expansion, no re-ranking.
inline std::string build_query(const Claim& claim) {
  auto q = util::trim(claim.text);
  if (q.empty()) throw DomainError("cannot build a search query from an empty claim text");
  return q;
}

// Provider payload -> ranked results, truncated to k. The payload must hold
// an "organic" array of objects with title/link/snippet (date optional).
inline std::vector<SearchResult> parse_search_response(const std::string& body, int k) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(body);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("malformed provider payload: ") + e.what());
  }
  if (!j.is_object() || !j.contains("organic") || !j.at("organic").is_array())
    throw ParseError("malformed provider payload: missing \"organic\" result array");
  std::vector<SearchResult> out;
  int rank = 0;
  for (const auto& item : j.at("organic")) {
    if (out.size() >= static_cast<std::size_t>(k)) break;
    if (!item.is_object() || !item.contains("title") || !item.contains("link") ||
        !item.contains("snippet"))
      throw ParseError("malformed provider payload: result item missing title/link/snippet");
    SearchResult r;
    r.title = item.at("title").get<std::string>();
    r.snippet = item.at("snippet").get<std::string>();
    r.url = item.at("link").get<std::string>();
    if (!url_syntactically_valid(r.url))
      throw ParseError("malformed provider payload: invalid result URL \"" + r.url + "\"");
    if (item.contains("date") && item.at("date").is_string())
      r.date = Date::parse_lenient(item.at("date").get<std::string>());
    r.rank = ++rank;
    out.push_back(std::move(r));
  }
  return out;
}

inline bool domain_blocked(const std::string& url, const std::set<std::string>& suffixes) {
  auto host = url_host(url);
  if (host.empty()) return false;
  for (const auto& suffix : suffixes) {
    if (host == suffix) return true;
    if (host.size() > suffix.size() && host.compare(host.size() - suffix.size() - 1, 1, ".") == 0 &&
        host.compare(host.size() - suffix.size(), suffix.size(), suffix) == 0)
      return true;
  }
  return false;
}

inline bool result_blocked(const SearchResult& r, const FilterPolicy& policy) {
  if (domain_blocked(r.url, policy.blocked_domains)) return true;
  for (const auto& kw : policy.blocked_keywords)
    if (util::contains_ci(r.title, kw) || util::contains_ci(r.snippet, kw)) return true;
  return false;
}

// Order-preserving removal of leak-prone results; survivor ranks are kept as
// assigned by the provider.
inline std::vector<SearchResult> apply_filters(const std::vector<SearchResult>& results,
                                               const FilterPolicy& policy) {
  std::vector<SearchResult> out;
  out.reserve(results.size());
  for (const auto& r : results)
    if (!result_blocked(r, policy)) out.push_back(r);
  return out;
}

// Prompt-side rendering: one "[rank] (date) title — snippet" line per result.
inline std::string format_evidence(const EvidenceBundle& bundle) {
  if (bundle.results.empty()) return "No evidence available.";
  std::string out;
  for (const auto& r : bundle.results) {
    if (!out.empty()) out += '\n';
    out += "[" + std::to_string(r.rank) + "] ";
    if (r.date) out += "(" + r.date->to_string() + ") ";
    out += r.title + " — " + r.snippet;
  }
  return out;
}

// Transport abstraction over the search endpoint; returns the raw provider
// payload for one query.
class SearchClient {
 public:
  virtual ~SearchClient() = default;
  virtual std::string fetch(const std::string& query, int k) = 0;
};

inline std::vector<SearchResult> search(const std::string& query, const FilterPolicy& policy,
                                        SearchClient& client) {
  return parse_search_response(client.fetch(query, policy.k), policy.k);
}

// Wire contract: POST {q, num} to the endpoint; API key (when configured)
// travels in the X-API-KEY header, sourced from the environment.
class HttpSearchClient : public SearchClient {
 public:
  HttpSearchClient(std::string endpoint, std::string auth_env = "", RetryPolicy retry = {})
      : url_(UrlParts::parse(endpoint)), auth_env_(std::move(auth_env)), retry_(retry) {}

  std::string fetch(const std::string& query, int k) override {
    nlohmann::json body{{"q", query}, {"num", k}};
    httplib::Headers headers;
    if (auto key = env_secret(auth_env_)) headers.emplace("X-API-KEY", *key);
    return with_retries(retry_, [&] { return http_post_json(url_, body.dump(), headers); });
  }

 private:
  UrlParts url_;
  std::string auth_env_;
  RetryPolicy retry_;
};

// Canned provider payloads keyed by query string; queries without an entry
// yield an empty organic list. Used for offline runs and tests.
class FixtureSearchClient : public SearchClient {
 public:
  FixtureSearchClient() = default;

  static FixtureSearchClient load(const std::filesystem::path& path) {
    FixtureSearchClient c;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(util::read_file(path));
    } catch (const nlohmann::json::parse_error& e) {
      throw ConfigError("invalid search fixture " + path.string() + ": " + e.what());
    }
    for (auto it = j.begin(); it != j.end(); ++it) c.payloads_[it.key()] = it.value().dump();
    return c;
  }

  void add(const std::string& query, const nlohmann::json& payload) {
    payloads_[query] = payload.dump();
  }

  std::string fetch(const std::string& query, int) override {
    ++calls_;
    auto it = payloads_.find(query);
    if (it == payloads_.end()) return R"({"organic":[]})";
    return it->second;
  }

  std::size_t calls() const { return calls_; }

 private:
  std::map<std::string, std::string> payloads_;
  std::size_t calls_ = 0;
};

inline nlohmann::json bundle_to_json(const EvidenceBundle& b) {
  nlohmann::json j;
  j["claim_id"] = b.claim_id;
  j["retrieved_at"] = b.retrieved_at;
  j["status"] = to_string(b.status);
  auto& arr = j["results"] = nlohmann::json::array();
  for (const auto& r : b.results) {
    nlohmann::json item{{"title", r.title}, {"snippet", r.snippet}, {"link", r.url}, {"rank", r.rank}};
    if (r.date) item["date"] = r.date->to_string();
    arr.push_back(std::move(item));
  }
  return j;
}

inline EvidenceBundle bundle_from_json(const nlohmann::json& j) {
  EvidenceBundle b;
  b.claim_id = j.at("claim_id").get<std::string>();
  b.retrieved_at = j.at("retrieved_at").get<std::string>();
  b.status = parse_bundle_status(j.at("status").get<std::string>());
  for (const auto& item : j.at("results")) {
    SearchResult r;
    r.title = item.at("title").get<std::string>();
    r.snippet = item.at("snippet").get<std::string>();
    r.url = item.at("link").get<std::string>();
    r.rank = item.at("rank").get<int>();
    if (item.contains("date")) r.date = Date::parse_iso(item.at("date").get<std::string>());
    b.results.push_back(std::move(r));
  }
  return b;
}

// Append-only bundle store keyed by (claim_id, policy fingerprint).
// Concurrent reads are fine; writes are serialized. A corrupt file is
// reported, never silently rebuilt.
class EvidenceCache {
 public:
  explicit EvidenceCache(std::filesystem::path path) : path_(std::move(path)) {
    if (!std::filesystem::exists(path_)) return;
    auto lines = util::split_lines(util::read_file(path_));
    for (std::size_t i = 0; i < lines.size(); ++i) {
      if (util::trim(lines[i]).empty()) continue;
      try {
        auto j = nlohmann::json::parse(lines[i]);
        entries_[key(j.at("claim_id").get<std::string>(), j.at("policy_fp").get<std::string>())] =
            bundle_from_json(j.at("bundle"));
      } catch (const std::exception& e) {
        throw CacheError("evidence cache " + path_.string() + " is corrupt at line " +
                         std::to_string(i + 1) + ": " + e.what());
      }
    }
  }

  std::optional<EvidenceBundle> lookup(const std::string& claim_id,
                                       const std::string& policy_fp) const {
    std::shared_lock<std::shared_mutex> lock(mu_);
    auto it = entries_.find(key(claim_id, policy_fp));
    if (it == entries_.end()) return std::nullopt;
    return it->second;
  }

  void store(const EvidenceBundle& bundle, const std::string& policy_fp) {
    std::unique_lock<std::shared_mutex> lock(mu_);
    entries_[key(bundle.claim_id, policy_fp)] = bundle;
    nlohmann::json line{{"claim_id", bundle.claim_id},
                        {"policy_fp", policy_fp},
                        {"bundle", bundle_to_json(bundle)}};
    if (path_.has_parent_path()) std::filesystem::create_directories(path_.parent_path());
    std::ofstream out(path_, std::ios::binary | std::ios::app);
    if (!out) throw CacheError("cannot append to evidence cache: " + path_.string());
    out << line.dump() << '\n';
    out.flush();
  }

  std::size_t size() const {
    std::shared_lock<std::shared_mutex> lock(mu_);
    return entries_.size();
  }

 private:
  static std::string key(const std::string& claim_id, const std::string& fp) {
    return claim_id + "\x1f" + fp;
  }
  std::filesystem::path path_;
  std::map<std::string, EvidenceBundle> entries_;
  mutable std::shared_mutex mu_;
};

// Cache-through retrieval. An all-filtered result set still produces a
// bundle (status none_after_filtering) so the claim proceeds through the
// pipeline in no-evidence mode.
inline EvidenceBundle retrieve_evidence(const Claim& claim, const FilterPolicy& policy,
                                        SearchClient& client, EvidenceCache& cache) {
  auto fp = policy.fingerprint();
  if (auto hit = cache.lookup(claim.id, fp)) return *hit;
  auto raw = search(build_query(claim), policy, client);
  auto filtered = apply_filters(raw, policy);
  EvidenceBundle bundle;
  bundle.claim_id = claim.id;
  bundle.results = std::move(filtered);
  bundle.retrieved_at = utc_now_iso();
  bundle.status = bundle.results.empty()
                      ? (raw.empty() ? BundleStatus::NoneReturned : BundleStatus::NoneAfterFiltering)
                      : BundleStatus::Found;
  cache.store(bundle, fp);
  return bundle;
}

}  // namespace factcheck
