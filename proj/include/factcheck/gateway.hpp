#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "factcheck/errors.hpp"
#include "factcheck/http.hpp"
#include "factcheck/labels.hpp"
#include "factcheck/prompt.hpp"
#include "factcheck/util.hpp"

namespace factcheck {

struct InferenceParams {
  std::string model_id;
  double temperature = 0.7;  // runs must differ for majority voting to be meaningful
  int max_tokens = 1024;
  std::optional<std::int64_t> seed;
  std::optional<OutputSchema> schema;  // defaults to the bundle's schema

  InferenceParams() = default;
  InferenceParams(std::string model, double temp, int max_tok,
                  std::optional<std::int64_t> s = std::nullopt)
      : model_id(std::move(model)), temperature(temp), max_tokens(max_tok), seed(s) {
    if (temperature < 0) throw ConfigError("temperature must be non-negative");
    if (max_tokens < 1) throw ConfigError("max_tokens must be positive");
  }
};

// Parsed and validated {reasoning, verdict, explanation} from one run.
struct ModelOutput {
  std::string reasoning;
  Verdict verdict = Verdict::False;
  std::string explanation;
  std::string raw;  // verbatim response text

  friend bool operator==(const ModelOutput&, const ModelOutput&) = default;
};

// Canonical serialization of a valid output; used by fixtures and the mock.
inline std::string serialize_output(const ModelOutput& m) {
  return nlohmann::json{{"reasoning", m.reasoning},
                        {"verdict", std::string(to_string(m.verdict))},
                        {"explanation", m.explanation}}
      .dump();
}

// Strict parse: exactly the three string properties, non-empty reasoning and
// explanation, verdict normalized then checked against the scheme.
// Failure taxonomy: SyntaxError (not JSON), SchemaError (shape), LabelError
// (verdict outside the scheme).
inline ModelOutput parse_output(const std::string& raw, const LabelScheme& scheme) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(raw);
  } catch (const nlohmann::json::parse_error& e) {
    throw SyntaxError(std::string("model output is not parsable JSON: ") + e.what());
  }
  if (!j.is_object()) throw SchemaError("model output must be a JSON object");
  static const char* required[] = {"reasoning", "verdict", "explanation"};
  for (const char* name : required) {
    if (!j.contains(name)) throw SchemaError(std::string("missing property \"") + name + "\"");
    if (!j.at(name).is_string())
      throw SchemaError(std::string("property \"") + name + "\" must be a string");
  }
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (it.key() != "reasoning" && it.key() != "verdict" && it.key() != "explanation")
      throw SchemaError("unexpected property \"" + it.key() + "\"");
  }
  ModelOutput out;
  out.reasoning = j.at("reasoning").get<std::string>();
  out.explanation = j.at("explanation").get<std::string>();
  if (util::trim(out.reasoning).empty()) throw SchemaError("property \"reasoning\" must be non-empty");
  if (util::trim(out.explanation).empty())
    throw SchemaError("property \"explanation\" must be non-empty");
  out.verdict = scheme.parse_verdict(j.at("verdict").get<std::string>());
  out.raw = raw;
  return out;
}

class ChatBackend {
 public:
  virtual ~ChatBackend() = default;
  // One completion request; returns the model's text verbatim.
  virtual std::string complete(const PromptBundle& bundle, const InferenceParams& params) = 0;
  virtual std::string name() const = 0;
};

inline std::string complete(const PromptBundle& bundle, const InferenceParams& params,
                            ChatBackend& backend) {
  return backend.complete(bundle, params);
}

// Chat-completions wire contract. The request carries the JSON-schema
// constraint; the auth secret is read from the environment by name and is
// never logged or serialized.
class HttpChatBackend : public ChatBackend {
 public:
  HttpChatBackend(std::string endpoint, std::string auth_env = "", RetryPolicy retry = {})
      : url_(UrlParts::parse(endpoint)), auth_env_(std::move(auth_env)), retry_(retry) {}

  std::string complete(const PromptBundle& bundle, const InferenceParams& params) override {
    nlohmann::json messages = nlohmann::json::array();
    for (const auto& m : bundle.messages)
      messages.push_back({{"role", std::string(to_string(m.role))}, {"content", m.content}});
    const OutputSchema& schema = params.schema ? *params.schema : bundle.output_schema;
    nlohmann::json body{{"model", params.model_id},
                        {"messages", std::move(messages)},
                        {"temperature", params.temperature},
                        {"max_tokens", params.max_tokens},
                        {"response_format", {{"type", "json_schema"}, {"schema", schema.to_json()}}}};
    if (params.seed) body["seed"] = *params.seed;
    httplib::Headers headers;
    if (auto key = env_secret(auth_env_)) headers.emplace("Authorization", "Bearer " + *key);
    auto payload =
        with_retries(retry_, [&] { return http_post_json(url_, body.dump(), headers); });
    return extract_content(payload);
  }

  std::string name() const override { return url_.origin(); }

 private:
  static std::string extract_content(const std::string& payload) {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(payload);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(std::string("malformed completion payload: ") + e.what());
    }
    if (!j.contains("choices") || !j.at("choices").is_array() || j.at("choices").empty())
      throw ParseError("malformed completion payload: no choices");
    const auto& msg = j.at("choices").at(0).at("message");
    if (!msg.contains("content") || !msg.at("content").is_string())
      throw ParseError("malformed completion payload: missing message content");
    return msg.at("content").get<std::string>();
  }

  UrlParts url_;
  std::string auth_env_;
  RetryPolicy retry_;
};

// Deterministic offline stand-in. Three behaviors:
//   canned      — a fixed response, returned verbatim;
//   conditional — draws the verdict from P(predicted | gold), where the
//                 chance of emitting the gold label depends on evidence mode;
//   marginal    — draws from a fixed label marginal, ignoring gold.
// (params.seed, bundle) fully determine the response bytes.
class MockChatBackend : public ChatBackend {
 public:
  enum class Mode { Canned, Conditional, Marginal };

  struct Spec {
    Mode mode = Mode::Conditional;
    std::string canned;
    double accuracy_with_evidence = 0.8;
    double accuracy_without_evidence = 0.5;
    std::map<std::string, double> marginal;  // canonical label -> weight
    std::uint64_t seed = 0;
  };

  MockChatBackend(Spec spec, std::map<std::string, Verdict> gold_by_claim = {})
      : spec_(std::move(spec)), gold_(std::move(gold_by_claim)) {}

  std::string complete(const PromptBundle& bundle, const InferenceParams& params) override {
    ++calls_;
    if (spec_.mode == Mode::Canned) return spec_.canned;
    const LabelScheme& scheme = bundle.label_scheme();
    util::Rng rng(derive_seed(bundle, params));
    Verdict verdict = spec_.mode == Mode::Conditional ? sample_conditional(bundle, scheme, rng)
                                                      : sample_marginal(scheme, rng);
    ModelOutput out;
    out.verdict = verdict;
    out.reasoning = "Step-by-step review of the statement and the provided material for case " +
                    bundle.claim_id + " supports the label \"" + std::string(to_string(verdict)) +
                    "\".";
    out.explanation = "Based on the analysis, the statement is best described as \"" +
                      std::string(to_string(verdict)) + "\".";
    return serialize_output(out);
  }

  std::string name() const override { return "mock"; }

  std::size_t calls() const { return calls_; }

 private:
  std::uint64_t derive_seed(const PromptBundle& bundle, const InferenceParams& params) const {
    std::string key = bundle.fingerprint();
    key += '|';
    key += params.seed ? std::to_string(*params.seed) : "none";
    key += '|';
    key += std::to_string(spec_.seed);
    return util::fnv1a64(key);
  }

  Verdict sample_conditional(const PromptBundle& bundle, const LabelScheme& scheme,
                             util::Rng& rng) const {
    auto it = gold_.find(bundle.claim_id);
    if (it == gold_.end())
      throw ConfigError("mock backend has no gold label for claim \"" + bundle.claim_id + "\"");
    Verdict gold = project_label(it->second, LabelScheme::five(), scheme);
    double accuracy = bundle.with_evidence ? spec_.accuracy_with_evidence
                                           : spec_.accuracy_without_evidence;
    if (rng.next_double() < accuracy) return gold;
    // uniform over the remaining labels
    std::vector<Verdict> others;
    for (auto v : scheme.labels())
      if (v != gold) others.push_back(v);
    return others[static_cast<std::size_t>(rng.next_below(others.size()))];
  }

  Verdict sample_marginal(const LabelScheme& scheme, util::Rng& rng) const {
    double total = 0;
    std::vector<std::pair<Verdict, double>> weights;
    for (auto v : scheme.labels()) {
      auto it = spec_.marginal.find(std::string(to_string(v)));
      double w = it == spec_.marginal.end() ? 0.0 : it->second;
      if (w < 0) throw ConfigError("mock marginal weights must be non-negative");
      weights.emplace_back(v, w);
      total += w;
    }
    if (total <= 0) throw ConfigError("mock marginal distribution has no mass on scheme labels");
    double u = rng.next_double() * total;
    double acc = 0;
    for (const auto& [v, w] : weights) {
      acc += w;
      if (u < acc) return v;
    }
    return weights.back().first;
  }

  Spec spec_;
  std::map<std::string, Verdict> gold_;
  std::size_t calls_ = 0;
};

// Where a backend lives and how to talk to it. auth_env names an environment
// variable; the secret itself never appears in config or logs.
struct BackendDescriptor {
  enum class Kind { Remote, Mock };
  Kind kind = Kind::Mock;
  std::string model_id;
  std::string endpoint;
  std::string auth_env;
  MockChatBackend::Spec mock;
  nlohmann::json rubric = nlohmann::json::array();  // mock evaluator rules

  static BackendDescriptor from_json(const nlohmann::json& j) {
    BackendDescriptor d;
    auto kind = j.value("kind", "mock");
    if (kind == "remote")
      d.kind = Kind::Remote;
    else if (kind == "mock")
      d.kind = Kind::Mock;
    else
      throw ConfigError("unknown backend kind: \"" + kind + "\"");
    d.model_id = j.value("model_id", "");
    if (d.model_id.empty()) throw ConfigError("backend needs a model_id");
    d.endpoint = j.value("endpoint", "");
    if (d.kind == Kind::Remote && d.endpoint.empty())
      throw ConfigError("remote backend \"" + d.model_id + "\" needs an endpoint");
    d.auth_env = j.value("auth_env", "");
    if (j.contains("mock")) {
      const auto& m = j.at("mock");
      auto mode = m.value("mode", "conditional");
      if (mode == "canned")
        d.mock.mode = MockChatBackend::Mode::Canned;
      else if (mode == "conditional")
        d.mock.mode = MockChatBackend::Mode::Conditional;
      else if (mode == "marginal")
        d.mock.mode = MockChatBackend::Mode::Marginal;
      else
        throw ConfigError("unknown mock mode: \"" + mode + "\"");
      d.mock.canned = m.value("canned", "");
      d.mock.accuracy_with_evidence = m.value("accuracy_with_evidence", 0.8);
      d.mock.accuracy_without_evidence = m.value("accuracy_without_evidence", 0.5);
      d.mock.seed = m.value("seed", std::uint64_t{0});
      if (m.contains("marginal"))
        for (auto it = m.at("marginal").begin(); it != m.at("marginal").end(); ++it)
          d.mock.marginal[util::normalize_label(it.key())] = it.value().get<double>();
    }
    if (j.contains("rubric")) d.rubric = j.at("rubric");
    return d;
  }

  std::unique_ptr<ChatBackend> make(const std::map<std::string, Verdict>& gold_by_claim,
                                    RetryPolicy retry = {}) const {
    if (kind == Kind::Remote)
      return std::make_unique<HttpChatBackend>(endpoint, auth_env, retry);
    return std::make_unique<MockChatBackend>(mock, gold_by_claim);
  }
};

struct ValidatedCompletion {
  ModelOutput output;
  std::vector<std::string> attempts;  // raw text of every attempt, in order
};

inline std::string correction_instruction(const std::string& error, const LabelScheme& scheme) {
  std::string labels;
  for (auto v : scheme.labels()) {
    if (!labels.empty()) labels += ", ";
    labels += "\"";
    labels += to_string(v);
    labels += "\"";
  }
  return "Your previous response was invalid: " + error +
         ". Respond again with a single JSON object with exactly the properties \"reasoning\", "
         "\"verdict\", and \"explanation\". The verdict must be one of: " + labels + ".";
}

// Reliability wrapper: re-requests with an appended correction instruction on
// parse failure, up to repair_budget extra attempts. All raw attempts are
// retained, in the result on success and in ValidationFailed otherwise.
inline ValidatedCompletion complete_validated(const PromptBundle& bundle,
                                              const InferenceParams& params, ChatBackend& backend,
                                              int repair_budget) {
  if (repair_budget < 0) throw DomainError("repair budget must be non-negative");
  PromptBundle working = bundle;
  std::vector<std::string> attempts;
  for (int attempt = 0; attempt <= repair_budget; ++attempt) {
    std::string raw = backend.complete(working, params);
    attempts.push_back(raw);
    try {
      ModelOutput out = parse_output(raw, bundle.label_scheme());
      return ValidatedCompletion{std::move(out), std::move(attempts)};
    } catch (const Error& e) {
      if (attempt == repair_budget)
        throw ValidationFailed("no valid output after " + std::to_string(attempts.size()) +
                                   " attempt(s); last error: " + e.what(),
                               attempts);
      working.messages.push_back(ChatMessage{Role::Assistant, raw});
      working.messages.push_back(
          ChatMessage{Role::User, correction_instruction(e.what(), bundle.label_scheme())});
    }
  }
  throw ValidationFailed("unreachable", attempts);
}

}  // namespace factcheck
