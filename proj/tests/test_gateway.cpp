#include <catch2/catch_amalgamated.hpp>

#include <atomic>
#include <cstdlib>
#include <thread>

#include <httplib.h>

#include "support.hpp"

using namespace factcheck;
using testsupport::ScriptedBackend;

namespace {

PromptBundle sample_bundle(const LabelScheme& scheme = LabelScheme::five(),
                           bool with_evidence = false) {
  auto claim = testsupport::sample_claim();
  auto shots = testsupport::fixture_shots();
  UserMessageOptions opts;
  opts.with_evidence = with_evidence;
  std::optional<EvidenceBundle> evidence;
  if (with_evidence) {
    EvidenceBundle b;
    b.claim_id = claim.id;
    b.status = BundleStatus::NoneAfterFiltering;
    evidence = b;
  }
  return build_prompt(claim, scheme, evidence, shots, opts);
}

}  // namespace

TEST_CASE("structured output parsing") {
  const auto& five = LabelScheme::five();

  SECTION("valid object with a cased verdict normalizes") {
    auto out = parse_output(
        R"({"reasoning":"The statement misattributes the event.","verdict":"False","explanation":"Not supported."})",
        five);
    CHECK(out.verdict == Verdict::False);
    CHECK(out.reasoning == "The statement misattributes the event.");
    CHECK(out.raw.find("False") != std::string::npos);
  }

  SECTION("verdict surface forms normalize before membership") {
    CHECK(parse_output(R"({"reasoning":"r","verdict":"MOSTLY_TRUE","explanation":"e"})", five)
              .verdict == Verdict::MostlyTrue);
    CHECK(parse_output(R"({"reasoning":"r","verdict":" Mostly True ","explanation":"e"})", five)
              .verdict == Verdict::MostlyTrue);
  }

  SECTION("missing properties are schema errors") {
    CHECK_THROWS_AS(parse_output(R"({"verdict":"false"})", five), SchemaError);
    CHECK_THROWS_AS(parse_output(R"({"reasoning":"r","verdict":"false"})", five), SchemaError);
  }

  SECTION("extra properties are schema errors") {
    CHECK_THROWS_AS(
        parse_output(
            R"({"reasoning":"r","verdict":"false","explanation":"e","confidence":0.9})", five),
        SchemaError);
  }

  SECTION("non-string or empty fields are schema errors") {
    CHECK_THROWS_AS(parse_output(R"({"reasoning":1,"verdict":"false","explanation":"e"})", five),
                    SchemaError);
    CHECK_THROWS_AS(parse_output(R"({"reasoning":"","verdict":"false","explanation":"e"})", five),
                    SchemaError);
    CHECK_THROWS_AS(parse_output(R"({"reasoning":"r","verdict":"false","explanation":"  "})", five),
                    SchemaError);
  }

  SECTION("out-of-scheme verdicts are label errors") {
    CHECK_THROWS_AS(parse_output(R"({"reasoning":"r","verdict":"kinda-true","explanation":"e"})",
                                 five),
                    LabelError);
    CHECK_THROWS_AS(parse_output(R"({"reasoning":"r","verdict":"true","explanation":"e"})",
                                 LabelScheme::two()),
                    LabelError);
  }

  SECTION("unparseable text is a syntax error") {
    CHECK_THROWS_AS(parse_output("the claim is false", five), SyntaxError);
    CHECK_THROWS_AS(parse_output(R"({"reasoning":"r",)", five), SyntaxError);
    CHECK_THROWS_AS(parse_output(R"(["reasoning"])", five), SchemaError);
  }
}

TEST_CASE("serialized outputs round-trip through the parser") {
  util::Rng rng(3);
  const auto& five = LabelScheme::five();
  for (int i = 0; i < 25; ++i) {
    ModelOutput m;
    m.reasoning = "analysis line " + std::to_string(rng.next_below(1000));
    m.verdict = five.labels()[rng.next_below(five.size())];
    m.explanation = "explanation with \"quotes\" and newline\n" + std::to_string(i);
    auto parsed = parse_output(serialize_output(m), five);
    CHECK(parsed.reasoning == m.reasoning);
    CHECK(parsed.verdict == m.verdict);
    CHECK(parsed.explanation == m.explanation);
  }
}

TEST_CASE("validated completion repairs within budget") {
  auto bundle = sample_bundle();
  auto valid = testsupport::valid_output("false");

  SECTION("first attempt valid means no re-request") {
    ScriptedBackend backend({valid});
    auto result = complete_validated(bundle, {}, backend, 2);
    CHECK(result.attempts.size() == 1);
    CHECK(result.output.verdict == Verdict::False);
    CHECK(backend.calls() == 1);
  }

  SECTION("two invalid then valid with budget 2 records 3 attempts") {
    ScriptedBackend backend({"not json", R"({"verdict":"false"})", valid});
    auto result = complete_validated(bundle, {}, backend, 2);
    CHECK(result.attempts.size() == 3);
    CHECK(result.output.verdict == Verdict::False);
    // each repair appends the previous answer and a correction instruction
    CHECK(backend.last_message_count() == bundle.messages.size() + 4);
  }

  SECTION("all invalid with budget 1 fails carrying 2 raw attempts") {
    ScriptedBackend backend({"junk one", "junk two"});
    try {
      complete_validated(bundle, {}, backend, 1);
      FAIL("expected ValidationFailed");
    } catch (const ValidationFailed& e) {
      REQUIRE(e.attempts().size() == 2);
      CHECK(e.attempts()[0] == "junk one");
      CHECK(e.attempts()[1] == "junk two");
    }
  }

  SECTION("negative budget is rejected") {
    ScriptedBackend backend({valid});
    CHECK_THROWS_AS(complete_validated(bundle, {}, backend, -1), DomainError);
  }
}

TEST_CASE("mock backend determinism and modes") {
  auto bundle = sample_bundle();

  SECTION("canned answers return verbatim") {
    MockChatBackend::Spec spec;
    spec.mode = MockChatBackend::Mode::Canned;
    spec.canned = testsupport::valid_output("half-true");
    MockChatBackend backend(spec);
    CHECK(backend.complete(bundle, {}) == spec.canned);
  }

  SECTION("same seed and bundle give identical bytes") {
    MockChatBackend::Spec spec;
    spec.mode = MockChatBackend::Mode::Conditional;
    std::map<std::string, Verdict> gold{{bundle.claim_id, Verdict::False}};
    MockChatBackend backend(spec, gold);
    InferenceParams params("m", 0.7, 256, 42);
    CHECK(backend.complete(bundle, params) == backend.complete(bundle, params));
    InferenceParams other("m", 0.7, 256, 43);
    // different run seeds resample; full agreement over many draws would be
    // astronomically unlikely for a noisy mock
    bool any_difference = false;
    for (int i = 0; i < 32 && !any_difference; ++i) {
      InferenceParams a("m", 0.7, 256, 1000 + i);
      InferenceParams b("m", 0.7, 256, 2000 + i);
      any_difference = backend.complete(bundle, a) != backend.complete(bundle, b);
    }
    CHECK(any_difference);
    (void)other;
  }

  SECTION("conditional mode needs a gold label") {
    MockChatBackend backend(MockChatBackend::Spec{});
    CHECK_THROWS_AS(backend.complete(bundle, {}), ConfigError);
  }

  SECTION("conditional accuracy is roughly honored") {
    MockChatBackend::Spec spec;
    spec.accuracy_with_evidence = 0.9;
    spec.accuracy_without_evidence = 0.2;
    std::map<std::string, Verdict> gold{{"claim-1", Verdict::False}};
    MockChatBackend backend(spec, gold);
    int correct = 0, total = 400;
    for (int i = 0; i < total; ++i) {
      InferenceParams params("m", 0.7, 256, i);
      auto out = parse_output(backend.complete(sample_bundle(), params), LabelScheme::five());
      correct += out.verdict == Verdict::False;
    }
    double rate = static_cast<double>(correct) / total;
    CHECK(rate > 0.1);
    CHECK(rate < 0.35);
  }

  SECTION("marginal mode ignores gold and follows the weights") {
    MockChatBackend::Spec spec;
    spec.mode = MockChatBackend::Mode::Marginal;
    spec.marginal = {{"mostly-true", 0.8}, {"mostly-false", 0.2}};
    MockChatBackend backend(spec);
    auto two_bundle = sample_bundle(LabelScheme::two());
    int mostly_true = 0, total = 400;
    for (int i = 0; i < total; ++i) {
      InferenceParams params("m", 0.7, 256, i);
      auto out = parse_output(backend.complete(two_bundle, params), LabelScheme::two());
      mostly_true += out.verdict == Verdict::MostlyTrue;
    }
    double rate = static_cast<double>(mostly_true) / total;
    CHECK(rate > 0.7);
    CHECK(rate < 0.9);
  }
}

TEST_CASE("chat wire contract against a local endpoint") {
  httplib::Server server;
  std::atomic<int> hits{0};
  nlohmann::json seen_body;
  std::string seen_auth;
  std::mutex capture_mu;

  server.Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
    {
      std::lock_guard<std::mutex> lock(capture_mu);
      seen_body = nlohmann::json::parse(req.body);
      seen_auth = req.get_header_value("Authorization");
    }
    hits++;
    nlohmann::json reply{
        {"choices",
         {{{"message", {{"role", "assistant"}, {"content", testsupport::valid_output("false")}}}}}}};
    res.set_content(reply.dump(), "application/json");
  });

  int port = server.bind_to_any_port("127.0.0.1");
  REQUIRE(port > 0);
  std::thread server_thread([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  auto endpoint = "http://127.0.0.1:" + std::to_string(port) + "/v1/chat/completions";
  ::setenv("FC_TEST_API_KEY", "sekrit-token", 1);

  SECTION("request carries model, messages, sampling params, and the schema") {
    auto bundle = sample_bundle();
    HttpChatBackend backend(endpoint, "FC_TEST_API_KEY");
    InferenceParams params("served-model", 0.7, 512, 1234);
    auto raw = backend.complete(bundle, params);
    CHECK(parse_output(raw, LabelScheme::five()).verdict == Verdict::False);

    std::lock_guard<std::mutex> lock(capture_mu);
    CHECK(seen_body.at("model") == "served-model");
    CHECK(seen_body.at("temperature").get<double>() == Catch::Approx(0.7));
    CHECK(seen_body.at("max_tokens") == 512);
    CHECK(seen_body.at("seed") == 1234);
    CHECK(seen_body.at("messages").size() == bundle.messages.size());
    CHECK(seen_body.at("messages").at(0).at("role") == "system");
    CHECK(seen_body.at("messages").at(3).at("content").get<std::string>().find("the claim") !=
          std::string::npos);
    CHECK(seen_body.at("response_format").at("type") == "json_schema");
    CHECK(seen_body.at("response_format").at("schema") == bundle.output_schema.to_json());
    CHECK(seen_auth == "Bearer sekrit-token");
  }

  SECTION("429 responses retry up to the bound") {
    std::atomic<int> flaky_hits{0};
    server.Post("/flaky", [&](const httplib::Request&, httplib::Response& res) {
      if (flaky_hits.fetch_add(1) < 2) {
        res.status = 429;
        return;
      }
      nlohmann::json reply{
          {"choices",
           {{{"message", {{"content", testsupport::valid_output("true")}}}}}}};
      res.set_content(reply.dump(), "application/json");
    });
    RetryPolicy retry;
    retry.max_attempts = 4;
    retry.initial_delay = std::chrono::milliseconds(1);
    HttpChatBackend backend("http://127.0.0.1:" + std::to_string(port) + "/flaky", "", retry);
    auto raw = backend.complete(sample_bundle(), {});
    CHECK(parse_output(raw, LabelScheme::five()).verdict == Verdict::True);
    CHECK(flaky_hits.load() == 3);
  }

  SECTION("persistent 429 exhausts the budget and fails") {
    std::atomic<int> always_hits{0};
    server.Post("/always429", [&](const httplib::Request&, httplib::Response& res) {
      always_hits++;
      res.status = 429;
    });
    RetryPolicy retry;
    retry.max_attempts = 3;
    retry.initial_delay = std::chrono::milliseconds(1);
    HttpChatBackend backend("http://127.0.0.1:" + std::to_string(port) + "/always429", "", retry);
    CHECK_THROWS_AS(backend.complete(sample_bundle(), {}), TransportError);
    CHECK(always_hits.load() == 3);
  }

  SECTION("auth failures are fatal, no retries") {
    std::atomic<int> denied_hits{0};
    server.Post("/denied", [&](const httplib::Request&, httplib::Response& res) {
      denied_hits++;
      res.status = 401;
    });
    HttpChatBackend backend("http://127.0.0.1:" + std::to_string(port) + "/denied");
    try {
      backend.complete(sample_bundle(), {});
      FAIL("expected TransportError");
    } catch (const TransportError& e) {
      CHECK_FALSE(e.retryable());
    }
    CHECK(denied_hits.load() == 1);
  }

  server.stop();
  server_thread.join();
}

TEST_CASE("search wire contract against a local endpoint") {
  httplib::Server server;
  nlohmann::json seen_body;
  std::string seen_key;
  std::mutex capture_mu;
  server.Post("/search", [&](const httplib::Request& req, httplib::Response& res) {
    {
      std::lock_guard<std::mutex> lock(capture_mu);
      seen_body = nlohmann::json::parse(req.body);
      seen_key = req.get_header_value("X-API-KEY");
    }
    res.set_content(testsupport::synth_payload("wire", 3, 0).dump(), "application/json");
  });
  int port = server.bind_to_any_port("127.0.0.1");
  REQUIRE(port > 0);
  std::thread server_thread([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  ::setenv("FC_TEST_SEARCH_KEY", "search-secret", 1);
  HttpSearchClient client("http://127.0.0.1:" + std::to_string(port) + "/search",
                          "FC_TEST_SEARCH_KEY");
  FilterPolicy policy;
  auto results = search("what the claim says", policy, client);
  CHECK(results.size() == 3);
  {
    std::lock_guard<std::mutex> lock(capture_mu);
    CHECK(seen_body.at("q") == "what the claim says");
    CHECK(seen_body.at("num") == 10);
    CHECK(seen_key == "search-secret");
  }

  server.stop();
  server_thread.join();
}
