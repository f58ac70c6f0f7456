#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "factcheck/claims.hpp"
#include "factcheck/errors.hpp"
#include "factcheck/evidence.hpp"
#include "factcheck/labels.hpp"
#include "factcheck/util.hpp"

namespace factcheck {

enum class Role { System, User, Assistant };

inline std::string_view to_string(Role r) {
  switch (r) {
    case Role::System: return "system";
    case Role::User: return "user";
    case Role::Assistant: return "assistant";
  }
  return "";
}

struct ChatMessage {
  Role role = Role::User;
  std::string content;

  friend bool operator==(const ChatMessage&, const ChatMessage&) = default;
};

// JSON schema for the constrained three-field output. The verdict enum is
// exactly the active scheme's vocabulary; nothing else may appear.
struct OutputSchema {
  std::vector<Verdict> verdict_labels;

  static OutputSchema for_scheme(const LabelScheme& scheme) {
    return OutputSchema{scheme.labels()};
  }

  nlohmann::json to_json() const {
    nlohmann::json verdict_enum = nlohmann::json::array();
    for (auto v : verdict_labels) verdict_enum.push_back(std::string(to_string(v)));
    return nlohmann::json{
        {"type", "object"},
        {"properties",
         {{"reasoning", {{"type", "string"}}},
          {"verdict", {{"type", "string"}, {"enum", verdict_enum}}},
          {"explanation", {{"type", "string"}}}}},
        {"required", {"reasoning", "verdict", "explanation"}},
        {"additionalProperties", false}};
  }

  friend bool operator==(const OutputSchema&, const OutputSchema&) = default;
};

// PolitiFact rating definitions, reused verbatim across schemes.
inline std::string_view label_definition(Verdict v) {
  switch (v) {
    case Verdict::True:
      return "The statement is accurate and there is nothing significant missing.";
    case Verdict::MostlyTrue:
      return "The statement is accurate but needs clarification or additional information.";
    case Verdict::HalfTrue:
      return "The statement is partially accurate but leaves out important details or takes "
             "things out of context.";
    case Verdict::MostlyFalse:
      return "The statement contains an element of truth but ignores critical facts that would "
             "give a different impression.";
    case Verdict::False:
      return "The statement is not accurate.";
  }
  return "";
}

// Three-task instruction block with the scheme's labels and definitions
// substituted in. Deterministic: same scheme, same bytes.
inline ChatMessage system_message(const LabelScheme& scheme) {
  std::string labels_block = "The available labels are:";
  for (auto v : scheme.labels()) {
    labels_block += "\n- \"";
    labels_block += to_string(v);
    labels_block += "\": ";
    labels_block += label_definition(v);
  }
  std::string content =
      "You are an intelligent decision support system for automated fact-checking.\n"
      "Your tasks are:\n"
      "1. Analyze the claim step-by-step.\n"
      "2. Classify the claim's veracity based on your analysis. " + labels_block + "\n"
      "3. Provide a concise natural language explanation for the verdict prediction.\n"
      "Respond with a single JSON object with exactly the properties \"reasoning\", "
      "\"verdict\", and \"explanation\".";
  return ChatMessage{Role::System, std::move(content)};
}

struct UserMessageOptions {
  bool with_evidence = false;
  bool include_background = false;      // off by default; speaker background is optional input
  std::size_t evidence_char_budget = 4000;
};

// Evidence rendering under a character budget: whole lines in rank order
// until the budget is hit. A first line that alone exceeds the budget is
// hard-truncated rather than dropped.
inline std::string format_evidence_budgeted(const EvidenceBundle& bundle, std::size_t budget) {
  if (bundle.results.empty()) return format_evidence(bundle);
  std::string out;
  for (const auto& r : bundle.results) {
    EvidenceBundle one{bundle.claim_id, {r}, bundle.retrieved_at, bundle.status};
    std::string line = format_evidence(one);
    std::size_t extra = line.size() + (out.empty() ? 0 : 1);
    if (out.size() + extra > budget) {
      if (out.empty()) out = line.substr(0, budget);
      break;
    }
    if (!out.empty()) out += '\n';
    out += line;
  }
  return out;
}

// "[SPEAKER][CONTEXT] the claim [CLAIM]." with the evidence section appended
// only in evidence mode. Claim text is quoted and never truncated.
inline ChatMessage user_message(const Claim& claim, const std::optional<EvidenceBundle>& evidence,
                                const UserMessageOptions& opts = {}) {
  std::string content = claim.source;
  if (opts.include_background && claim.background && !claim.background->empty())
    content += " (" + *claim.background + ")";
  content += " " + claim.context + " the claim \"" + claim.text + "\".";
  if (opts.with_evidence) {
    std::string rendered = evidence ? format_evidence_budgeted(*evidence, opts.evidence_char_budget)
                                    : "No evidence available.";
    content += " Evidence: " + rendered;
  }
  return ChatMessage{Role::User, std::move(content)};
}

// Message sequence for one inference call: system, the one-shot pair, then
// the target user message. claim_id is harness metadata and never leaves the
// process as part of the wire payload.
struct PromptBundle {
  std::vector<ChatMessage> messages;
  SchemeKind scheme = SchemeKind::Five;
  bool with_evidence = false;
  OutputSchema output_schema;
  std::string claim_id;

  const LabelScheme& label_scheme() const { return LabelScheme::of(scheme); }

  // Stable identity over everything the model sees.
  std::string fingerprint() const {
    std::string buf;
    for (const auto& m : messages) {
      buf += to_string(m.role);
      buf += '\x1e';
      buf += m.content;
      buf += '\x1f';
    }
    buf += to_string(scheme);
    buf += with_evidence ? "|ev" : "|noev";
    buf += output_schema.to_json().dump();
    return util::hex64(util::fnv1a64(buf));
  }

  friend bool operator==(const PromptBundle&, const PromptBundle&) = default;
};

// One curated user/assistant exemplar per (scheme, evidence-mode), loaded
// from role-delimited fixture files named <scheme>_<with|without>_evidence.txt.
class OneShotLibrary {
 public:
  OneShotLibrary() = default;

  static OneShotLibrary load(const std::filesystem::path& dir) {
    OneShotLibrary lib;
    lib.dir_ = dir;
    for (auto kind : {SchemeKind::Five, SchemeKind::Three, SchemeKind::Two}) {
      for (bool with_evidence : {false, true}) {
        auto path = dir / file_name(kind, with_evidence);
        if (!std::filesystem::exists(path)) continue;
        lib.add(kind, with_evidence, parse_fixture(path));
      }
    }
    return lib;
  }

  static std::string file_name(SchemeKind kind, bool with_evidence) {
    return std::string(to_string(kind)) + (with_evidence ? "_with_evidence.txt" : "_without_evidence.txt");
  }

  void add(SchemeKind kind, bool with_evidence, std::pair<std::string, std::string> pair) {
    examples_[key(kind, with_evidence)] = std::move(pair);
  }

  bool has(SchemeKind kind, bool with_evidence) const {
    return examples_.count(key(kind, with_evidence)) > 0;
  }

  // Exactly one user/assistant pair for the configuration.
  std::vector<ChatMessage> history(SchemeKind kind, bool with_evidence) const {
    auto it = examples_.find(key(kind, with_evidence));
    if (it == examples_.end())
      throw ConfigError("no one-shot example for scheme \"" + std::string(to_string(kind)) +
                        "\" with" + (with_evidence ? "" : "out") + " evidence" +
                        (dir_.empty() ? "" : " under " + dir_.string()));
    return {ChatMessage{Role::User, it->second.first},
            ChatMessage{Role::Assistant, it->second.second}};
  }

  // Content hash of one example pair; a changed fixture file invalidates
  // exactly the cells that use it.
  std::string pair_fingerprint(SchemeKind kind, bool with_evidence) const {
    auto it = examples_.find(key(kind, with_evidence));
    if (it == examples_.end()) return "missing";
    return util::hex64(util::fnv1a64(it->second.first + '\x1f' + it->second.second));
  }

  // Content hash over all loaded examples; part of the experiment manifest.
  std::string fingerprint() const {
    std::string buf;
    for (const auto& [k, pair] : examples_) {
      buf += k;
      buf += '\x1e';
      buf += pair.first;
      buf += '\x1f';
      buf += pair.second;
      buf += '\x1f';
    }
    return util::hex64(util::fnv1a64(buf));
  }

 private:
  static std::string key(SchemeKind kind, bool with_evidence) {
    return std::string(to_string(kind)) + (with_evidence ? "+ev" : "-ev");
  }

  static std::pair<std::string, std::string> parse_fixture(const std::filesystem::path& path) {
    auto lines = util::split_lines(util::read_file(path));
    std::string user, assistant;
    std::string* current = nullptr;
    for (std::size_t i = 0; i < lines.size(); ++i) {
      auto marker = util::trim(lines[i]);
      if (marker == "[USER]") {
        if (!user.empty() || current == &user)
          throw ParseError("duplicate [USER] section in one-shot fixture " + path.string(), i + 1);
        current = &user;
        continue;
      }
      if (marker == "[ASSISTANT]") {
        if (current != &user)
          throw ParseError("[ASSISTANT] must follow [USER] in one-shot fixture " + path.string(),
                           i + 1);
        current = &assistant;
        continue;
      }
      if (current == nullptr) {
        if (!marker.empty())
          throw ParseError("content before [USER] in one-shot fixture " + path.string(), i + 1);
        continue;
      }
      if (!current->empty()) *current += '\n';
      *current += lines[i];
    }
    user = util::trim(user);
    assistant = util::trim(assistant);
    if (user.empty() || assistant.empty())
      throw ParseError("one-shot fixture " + path.string() +
                       " must contain non-empty [USER] and [ASSISTANT] sections");
    return {user, assistant};
  }

  std::filesystem::path dir_;
  std::map<std::string, std::pair<std::string, std::string>> examples_;
};

// Full bundle: [system, shot user, shot assistant, target user].
inline PromptBundle build_prompt(const Claim& claim, const LabelScheme& scheme,
                                 const std::optional<EvidenceBundle>& evidence,
                                 const OneShotLibrary& shots, const UserMessageOptions& opts) {
  PromptBundle bundle;
  bundle.scheme = scheme.kind();
  bundle.with_evidence = opts.with_evidence;
  bundle.output_schema = OutputSchema::for_scheme(scheme);
  bundle.claim_id = claim.id;
  bundle.messages.push_back(system_message(scheme));
  for (auto& m : shots.history(scheme.kind(), opts.with_evidence)) bundle.messages.push_back(std::move(m));
  bundle.messages.push_back(user_message(claim, evidence, opts));
  return bundle;
}

}  // namespace factcheck
