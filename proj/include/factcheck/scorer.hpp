#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "factcheck/errors.hpp"
#include "factcheck/gateway.hpp"
#include "factcheck/prompt.hpp"
#include "factcheck/util.hpp"

namespace factcheck {

// One identified error with its penalty. Penalties live in [-5, -0.5];
// out-of-range values are clamped to the nearest bound and flagged.
struct PenaltyItem {
  std::string description;
  double penalty = -0.5;
  bool clamped = false;

  friend bool operator==(const PenaltyItem&, const PenaltyItem&) = default;
};

inline constexpr double kPenaltyMin = -5.0;
inline constexpr double kPenaltyMax = -0.5;

// Reference-free quality of one generated output: per-run penalty items and
// the mean of the per-run totals across scoring runs. 0 means no errors.
struct QualityScore {
  std::vector<std::vector<PenaltyItem>> run_items;
  std::vector<double> run_totals;
  double total = 0;  // mean of run_totals
  int runs_averaged = 0;
  bool unreliable = false;  // fewer than 2 scoring runs succeeded

  static double sum_items(const std::vector<PenaltyItem>& items) {
    double t = 0;
    for (const auto& it : items) t += it.penalty;
    return t;
  }
};

// Evaluator prompt: the original instruction and input followed by the
// generated output (reasoning + explanation are what gets assessed). The
// evaluator answers in plain text, one penalty line per error.
inline PromptBundle build_eval_prompt(const PromptBundle& task_input, const ModelOutput& output) {
  PromptBundle eval;
  eval.scheme = task_input.scheme;
  eval.with_evidence = task_input.with_evidence;
  eval.output_schema = task_input.output_schema;
  eval.claim_id = task_input.claim_id;

  std::string system =
      "You are a strict quality evaluator for generated fact-checking outputs.\n"
      "Identify concrete errors in the generated output with respect to the original task "
      "input (unsupported statements, contradictions, ignored input, incoherence).\n"
      "For each error, respond with one line of the form \"Error: <description>, <penalty>\" "
      "where the penalty is a number between -5 and -0.5.\n"
      "If the output has no errors, respond with the single line \"no errors found\".";
  eval.messages.push_back(ChatMessage{Role::System, std::move(system)});

  std::string user = "Original task:\n";
  for (const auto& m : task_input.messages) {
    user += std::string(to_string(m.role)) + ": " + m.content + "\n";
  }
  user += "\nGenerated output to evaluate:\nreasoning: " + output.reasoning +
          "\nverdict: " + std::string(to_string(output.verdict)) +
          "\nexplanation: " + output.explanation;
  eval.messages.push_back(ChatMessage{Role::User, std::move(user)});
  return eval;
}

namespace detail {

// "−" (U+2212) shows up in model text; fold it into ASCII minus.
inline std::string ascii_minus(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i + 2 < s.size() && static_cast<unsigned char>(s[i]) == 0xE2 &&
        static_cast<unsigned char>(s[i + 1]) == 0x88 &&
        static_cast<unsigned char>(s[i + 2]) == 0x92) {
      out += '-';
      i += 2;
      continue;
    }
    out += s[i];
  }
  return out;
}

inline std::optional<double> trailing_number(const std::string& line, std::size_t& number_starts) {
  // number at end of line, optionally followed by punctuation
  std::size_t end = line.size();
  while (end > 0 && (std::isspace(static_cast<unsigned char>(line[end - 1])) ||
                     line[end - 1] == '.' || line[end - 1] == ')'))
    --end;
  std::size_t start = end;
  while (start > 0 && (std::isdigit(static_cast<unsigned char>(line[start - 1])) ||
                       line[start - 1] == '.' || line[start - 1] == '-' || line[start - 1] == '+'))
    --start;
  if (start == end) return std::nullopt;
  try {
    std::size_t consumed = 0;
    double v = std::stod(line.substr(start, end - start), &consumed);
    if (consumed != end - start) return std::nullopt;
    number_starts = start;
    return v;
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

}  // namespace detail

// Extracts (description, penalty) pairs from evaluator text. Lines like
// "Error: unsupported claim, -4" carry one item each; an explicit no-errors
// response yields an empty list. Anything else is an evaluator format error.
inline std::vector<PenaltyItem> parse_penalties(const std::string& raw) {
  std::string text = detail::ascii_minus(raw);
  std::vector<PenaltyItem> items;
  bool no_errors_marker = false;
  for (auto& line : util::split_lines(text)) {
    auto trimmed = util::trim(line);
    if (trimmed.empty()) continue;
    auto lower = util::to_lower(trimmed);
    if (lower.find("no error") != std::string::npos) {
      no_errors_marker = true;
      continue;
    }
    std::size_t number_starts = 0;
    auto value = detail::trailing_number(trimmed, number_starts);
    if (!value) continue;
    std::string desc = util::trim(trimmed.substr(0, number_starts));
    while (!desc.empty() && (desc.back() == ',' || desc.back() == ':' || desc.back() == '-'))
      desc.pop_back();
    desc = util::trim(desc);
    if (desc.rfind("Error:", 0) == 0 || desc.rfind("error:", 0) == 0)
      desc = util::trim(desc.substr(6));
    if (desc.empty()) continue;
    PenaltyItem item;
    item.description = desc;
    item.penalty = *value;
    if (item.penalty < kPenaltyMin) {
      item.penalty = kPenaltyMin;
      item.clamped = true;
    } else if (item.penalty > kPenaltyMax) {
      item.penalty = kPenaltyMax;
      item.clamped = true;
    }
    items.push_back(std::move(item));
  }
  if (items.empty() && !no_errors_marker)
    throw ParseError("unparseable evaluator response: no penalty lines and no no-errors marker");
  return items;
}

// Runs the evaluator `runs` times and reports the mean total. Per-run items
// are retained for audit. Unparseable runs are dropped; fewer than 2 usable
// runs marks the score unreliable. Transport errors propagate.
inline QualityScore score_output(const PromptBundle& task_input, const ModelOutput& output,
                                 ChatBackend& evaluator, const InferenceParams& params,
                                 int runs = 3) {
  if (runs < 1) throw DomainError("scoring needs at least one run");
  PromptBundle eval_prompt = build_eval_prompt(task_input, output);
  QualityScore score;
  for (int r = 0; r < runs; ++r) {
    InferenceParams run_params = params;
    run_params.seed = (params.seed ? *params.seed : 0) + r;
    std::string raw = evaluator.complete(eval_prompt, run_params);
    try {
      auto items = parse_penalties(raw);
      score.run_totals.push_back(QualityScore::sum_items(items));
      score.run_items.push_back(std::move(items));
    } catch (const ParseError&) {
      // lost run; reflected in runs_averaged
    }
  }
  score.runs_averaged = static_cast<int>(score.run_totals.size());
  if (score.runs_averaged == 0)
    throw ParseError("evaluator produced no parseable scoring runs");
  double sum = 0;
  for (double t : score.run_totals) sum += t;
  score.total = sum / score.runs_averaged;
  score.unreliable = score.runs_averaged < 2 && runs >= 2;
  return score;
}

// Deterministic rubric evaluator: fires a penalty item whenever a configured
// trigger substring occurs in the rendered evaluation prompt. An empty match
// set yields the no-errors response.
class MockEvaluatorBackend : public ChatBackend {
 public:
  struct Rule {
    std::string trigger;  // case-insensitive substring
    std::string description;
    double penalty = -1.0;
  };

  explicit MockEvaluatorBackend(std::vector<Rule> rules, std::uint64_t seed = 0)
      : rules_(std::move(rules)), seed_(seed) {}

  std::string complete(const PromptBundle& bundle, const InferenceParams& params) override {
    std::string rendered;
    for (const auto& m : bundle.messages) rendered += m.content + "\n";
    std::string out;
    for (const auto& rule : rules_) {
      if (!util::contains_ci(rendered, rule.trigger)) continue;
      char buf[32];
      std::snprintf(buf, sizeof(buf), "%.1f", rule.penalty);
      out += "Error: " + rule.description + ", " + buf + "\n";
    }
    if (out.empty()) return "no errors found";
    (void)params;
    (void)seed_;
    return out;
  }

  std::string name() const override { return "mock-evaluator"; }

  static std::vector<Rule> rules_from_json(const nlohmann::json& j) {
    std::vector<Rule> rules;
    for (const auto& r : j) {
      rules.push_back(Rule{r.at("trigger").get<std::string>(),
                           r.value("description", r.at("trigger").get<std::string>()),
                           r.value("penalty", -1.0)});
    }
    return rules;
  }

 private:
  std::vector<Rule> rules_;
  std::uint64_t seed_;
};

inline nlohmann::json quality_score_to_json(const QualityScore& s) {
  nlohmann::json j;
  j["total"] = s.total;
  j["runs_averaged"] = s.runs_averaged;
  j["unreliable"] = s.unreliable;
  j["run_totals"] = s.run_totals;
  auto& runs = j["run_items"] = nlohmann::json::array();
  for (const auto& items : s.run_items) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& it : items)
      arr.push_back(
          {{"description", it.description}, {"penalty", it.penalty}, {"clamped", it.clamped}});
    runs.push_back(std::move(arr));
  }
  return j;
}

inline QualityScore quality_score_from_json(const nlohmann::json& j) {
  QualityScore s;
  s.total = j.at("total").get<double>();
  s.runs_averaged = j.at("runs_averaged").get<int>();
  s.unreliable = j.value("unreliable", false);
  for (const auto& t : j.at("run_totals")) s.run_totals.push_back(t.get<double>());
  for (const auto& items : j.at("run_items")) {
    std::vector<PenaltyItem> run;
    for (const auto& it : items)
      run.push_back(PenaltyItem{it.at("description").get<std::string>(),
                                it.at("penalty").get<double>(), it.value("clamped", false)});
    s.run_items.push_back(std::move(run));
  }
  return s;
}

}  // namespace factcheck
