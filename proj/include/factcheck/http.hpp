#pragma once

#include <chrono>
#include <cstdlib>
#include <functional>
#include <optional>
#include <string>
#include <thread>

#include <httplib.h>

#include "factcheck/errors.hpp"
#include "factcheck/util.hpp"

namespace factcheck {

struct UrlParts {
  std::string scheme;
  std::string host;
  int port = 0;  // 0 = scheme default
  std::string path = "/";

  // Base usable by the HTTP client ("http://host:port").
  std::string origin() const {
    std::string o = scheme + "://" + host;
    if (port > 0) o += ":" + std::to_string(port);
    return o;
  }

  static UrlParts parse(const std::string& url) {
    auto sep = url.find("://");
    if (sep == std::string::npos) throw ConfigError("invalid URL (missing scheme): " + url);
    UrlParts p;
    p.scheme = util::to_lower(url.substr(0, sep));
    if (p.scheme != "http" && p.scheme != "https")
      throw ConfigError("unsupported URL scheme: " + url);
    auto rest = url.substr(sep + 3);
    auto slash = rest.find('/');
    std::string authority = slash == std::string::npos ? rest : rest.substr(0, slash);
    p.path = slash == std::string::npos ? "/" : rest.substr(slash);
    auto colon = authority.find(':');
    if (colon != std::string::npos) {
      p.host = authority.substr(0, colon);
      p.port = std::atoi(authority.substr(colon + 1).c_str());
    } else {
      p.host = authority;
    }
    if (p.host.empty()) throw ConfigError("invalid URL (missing host): " + url);
    return p;
  }
};

// Lowercased hostname of a result URL, empty when the URL is not parseable.
inline std::string url_host(const std::string& url) {
  auto sep = url.find("://");
  if (sep == std::string::npos) return "";
  auto rest = url.substr(sep + 3);
  auto end = rest.find_first_of("/:?#");
  auto host = end == std::string::npos ? rest : rest.substr(0, end);
  auto at = host.rfind('@');
  if (at != std::string::npos) host = host.substr(at + 1);
  return util::to_lower(host);
}

inline bool url_syntactically_valid(const std::string& url) {
  auto sep = url.find("://");
  if (sep == std::string::npos || sep == 0) return false;
  return !url_host(url).empty();
}

struct RetryPolicy {
  int max_attempts = 4;
  std::chrono::milliseconds initial_delay{200};
  double backoff_factor = 2.0;
  std::chrono::milliseconds max_delay{5000};
};

// Runs fn until it succeeds or retryable failures exhaust the attempt bound.
// Non-retryable TransportErrors propagate immediately.
template <typename Fn>
auto with_retries(const RetryPolicy& policy, Fn&& fn) -> decltype(fn()) {
  auto delay = policy.initial_delay;
  for (int attempt = 1;; ++attempt) {
    try {
      return fn();
    } catch (const TransportError& e) {
      if (!e.retryable() || attempt >= policy.max_attempts) throw;
      std::this_thread::sleep_for(delay);
      auto next = std::chrono::milliseconds(
          static_cast<long>(static_cast<double>(delay.count()) * policy.backoff_factor));
      delay = std::min(next, policy.max_delay);
    }
  }
}

// Secret value from the environment; the name travels in config, the value
// never does and is never logged.
inline std::optional<std::string> env_secret(const std::string& var) {
  if (var.empty()) return std::nullopt;
  const char* v = std::getenv(var.c_str());
  if (!v || !*v) return std::nullopt;
  return std::string(v);
}

// POSTs a JSON body, classifying failures into retryable and fatal.
inline std::string http_post_json(const UrlParts& url, const std::string& body,
                                  const httplib::Headers& headers,
                                  std::chrono::milliseconds timeout = std::chrono::seconds(120)) {
  httplib::Client cli(url.origin());
  cli.set_connection_timeout(std::chrono::seconds(10));
  cli.set_read_timeout(timeout);
  cli.set_follow_location(true);
  auto res = cli.Post(url.path, headers, body, "application/json");
  if (!res)
    throw TransportError("request to " + url.origin() + " failed: " + httplib::to_string(res.error()),
                         /*retryable=*/true);
  if (res->status == 200) return res->body;
  bool retryable = res->status == 429 || res->status >= 500;
  std::string what = "endpoint " + url.origin() + " returned HTTP " + std::to_string(res->status);
  if (res->status == 401 || res->status == 403 || res->status == 402)
    what += " (authorization/quota failure)";
  throw TransportError(what, retryable);
}

}  // namespace factcheck
