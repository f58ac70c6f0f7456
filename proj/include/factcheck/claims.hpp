#pragma once

#include <istream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "factcheck/date.hpp"
#include "factcheck/errors.hpp"
#include "factcheck/labels.hpp"
#include "factcheck/util.hpp"

namespace factcheck {

// One check-worthy statement as published by the fact-checking source.
struct Claim {
  std::string id;
  std::string source;                   // speaker or entity
  std::optional<std::string> background;  // entity description, may be absent
  std::string context;                  // where/when the claim was stated
  std::string text;
  Date date;
  RawLabel gold_label = RawLabel::False;
  bool attributed = false;              // attributed to a public figure

  friend bool operator==(const Claim&, const Claim&) = default;
};

namespace detail {

inline const nlohmann::json& require_field(const nlohmann::json& rec, const char* name,
                                           std::size_t line) {
  auto it = rec.find(name);
  if (it == rec.end())
    throw ParseError("missing required field", line, name);
  return *it;
}

inline std::string require_string(const nlohmann::json& rec, const char* name, std::size_t line) {
  const auto& v = require_field(rec, name, line);
  if (!v.is_string()) throw ParseError("field must be a string", line, name);
  return v.get<std::string>();
}

}  // namespace detail

// Line-delimited records, one JSON object per line, fields exactly
// id / source / background / context / claim / date / label / attributed.
// background may be null. Errors carry the 1-based line number.
inline std::vector<Claim> parse_dataset(std::istream& in) {
  std::vector<Claim> claims;
  std::set<std::string> seen_ids;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (util::trim(line).empty()) continue;
    nlohmann::json rec;
    try {
      rec = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(std::string("malformed record: ") + e.what(), line_no);
    }
    if (!rec.is_object()) throw ParseError("record is not an object", line_no);
    static const std::set<std::string> known_fields = {
        "id", "source", "background", "context", "claim", "date", "label", "attributed"};
    for (auto it = rec.begin(); it != rec.end(); ++it)
      if (!known_fields.count(it.key()))
        throw ParseError("unknown field", line_no, it.key());

    Claim c;
    c.id = detail::require_string(rec, "id", line_no);
    if (c.id.empty()) throw ParseError("id must be non-empty", line_no, "id");
    if (!seen_ids.insert(c.id).second)
      throw ParseError("duplicate id \"" + c.id + "\"", line_no, "id");
    c.source = detail::require_string(rec, "source", line_no);
    const auto& bg = detail::require_field(rec, "background", line_no);
    if (bg.is_null())
      c.background = std::nullopt;
    else if (bg.is_string())
      c.background = bg.get<std::string>();
    else
      throw ParseError("field must be a string or null", line_no, "background");
    c.context = detail::require_string(rec, "context", line_no);
    c.text = detail::require_string(rec, "claim", line_no);
    if (util::trim(c.text).empty()) throw ParseError("claim text must be non-empty", line_no, "claim");
    c.date = require_iso_date(detail::require_string(rec, "date", line_no), line_no);
    try {
      c.gold_label = parse_raw_label(detail::require_string(rec, "label", line_no));
    } catch (const LabelError& e) {
      throw ParseError(e.what(), line_no, "label");
    }
    const auto& attr = detail::require_field(rec, "attributed", line_no);
    if (!attr.is_boolean()) throw ParseError("field must be a boolean", line_no, "attributed");
    c.attributed = attr.get<bool>();
    claims.push_back(std::move(c));
  }
  return claims;
}

inline std::vector<Claim> parse_dataset(const std::string& text) {
  std::istringstream in(text);
  return parse_dataset(in);
}

inline nlohmann::json claim_to_json(const Claim& c) {
  nlohmann::json rec;
  rec["id"] = c.id;
  rec["source"] = c.source;
  rec["background"] = c.background ? nlohmann::json(*c.background) : nlohmann::json(nullptr);
  rec["context"] = c.context;
  rec["claim"] = c.text;
  rec["date"] = c.date.to_string();
  rec["label"] = to_string(c.gold_label);
  rec["attributed"] = c.attributed;
  return rec;
}

inline std::string serialize_dataset(const std::vector<Claim>& claims) {
  std::string out;
  for (const auto& c : claims) {
    out += claim_to_json(c).dump();
    out += '\n';
  }
  return out;
}

// Keeps only claims attributed to public figures; order preserved.
inline std::vector<Claim> filter_attributed(const std::vector<Claim>& claims) {
  std::vector<Claim> out;
  out.reserve(claims.size());
  for (const auto& c : claims)
    if (c.attributed) out.push_back(c);
  return out;
}

// Gold-label distribution under the given scheme.
inline ClassDistribution class_distribution(const std::vector<Claim>& claims,
                                            const LabelScheme& scheme) {
  if (claims.empty()) throw DomainError("cannot compute a class distribution of an empty dataset");
  std::vector<std::size_t> counts(scheme.size(), 0);
  for (const auto& c : claims)
    counts[scheme.position(project_raw(c.gold_label, scheme))]++;
  return ClassDistribution::from_counts(scheme, counts);
}

}  // namespace factcheck
