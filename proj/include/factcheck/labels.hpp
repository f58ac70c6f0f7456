#pragma once

#include <algorithm>
#include <cstddef>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "factcheck/errors.hpp"
#include "factcheck/util.hpp"

namespace factcheck {

// The six original PolitiFact ratings. "pants-fire" documents ridiculousness
// on top of falsehood and is folded into false before any scheme work.
enum class RawLabel { True, MostlyTrue, HalfTrue, MostlyFalse, False, PantsFire };

// Truthfulness vocabulary shared by every scheme. Order is the ordinal
// truthfulness scale, most-true first.
enum class Verdict { True, MostlyTrue, HalfTrue, MostlyFalse, False };

enum class SchemeKind { Five, Three, Two };

inline std::string_view to_string(RawLabel l) {
  switch (l) {
    case RawLabel::True: return "true";
    case RawLabel::MostlyTrue: return "mostly-true";
    case RawLabel::HalfTrue: return "half-true";
    case RawLabel::MostlyFalse: return "mostly-false";
    case RawLabel::False: return "false";
    case RawLabel::PantsFire: return "pants-fire";
  }
  return "";
}

inline std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::True: return "true";
    case Verdict::MostlyTrue: return "mostly-true";
    case Verdict::HalfTrue: return "half-true";
    case Verdict::MostlyFalse: return "mostly-false";
    case Verdict::False: return "false";
  }
  return "";
}

inline std::string_view to_string(SchemeKind k) {
  switch (k) {
    case SchemeKind::Five: return "five";
    case SchemeKind::Three: return "three";
    case SchemeKind::Two: return "two";
  }
  return "";
}

// Exactly the six raw labels parse; matching is case/space/underscore
// tolerant but never coerces unknown values.
inline RawLabel parse_raw_label(std::string_view s) {
  auto n = util::normalize_label(s);
  if (n == "true") return RawLabel::True;
  if (n == "mostly-true") return RawLabel::MostlyTrue;
  if (n == "half-true") return RawLabel::HalfTrue;
  if (n == "mostly-false") return RawLabel::MostlyFalse;
  if (n == "false") return RawLabel::False;
  if (n == "pants-fire") return RawLabel::PantsFire;
  throw LabelError("unknown raw label: \"" + std::string(s) + "\"");
}

inline Verdict parse_verdict_unscoped(std::string_view s) {
  auto n = util::normalize_label(s);
  if (n == "true") return Verdict::True;
  if (n == "mostly-true") return Verdict::MostlyTrue;
  if (n == "half-true") return Verdict::HalfTrue;
  if (n == "mostly-false") return Verdict::MostlyFalse;
  if (n == "false") return Verdict::False;
  throw LabelError("unknown verdict label: \"" + std::string(s) + "\"");
}

inline SchemeKind parse_scheme_kind(std::string_view s) {
  auto n = util::normalize_label(s);
  if (n == "five" || n == "5") return SchemeKind::Five;
  if (n == "three" || n == "3") return SchemeKind::Three;
  if (n == "two" || n == "2" || n == "binary") return SchemeKind::Two;
  throw ConfigError("unknown label scheme: \"" + std::string(s) + "\"");
}

// Ordered label vocabulary for one granularity setting.
class LabelScheme {
 public:
  static const LabelScheme& five() {
    static const LabelScheme s{SchemeKind::Five,
                               {Verdict::True, Verdict::MostlyTrue, Verdict::HalfTrue,
                                Verdict::MostlyFalse, Verdict::False}};
    return s;
  }
  static const LabelScheme& three() {
    static const LabelScheme s{SchemeKind::Three,
                               {Verdict::MostlyTrue, Verdict::HalfTrue, Verdict::MostlyFalse}};
    return s;
  }
  static const LabelScheme& two() {
    static const LabelScheme s{SchemeKind::Two, {Verdict::MostlyTrue, Verdict::MostlyFalse}};
    return s;
  }
  static const LabelScheme& of(SchemeKind k) {
    switch (k) {
      case SchemeKind::Five: return five();
      case SchemeKind::Three: return three();
      case SchemeKind::Two: return two();
    }
    return five();
  }

  SchemeKind kind() const { return kind_; }
  const std::vector<Verdict>& labels() const { return labels_; }
  std::size_t size() const { return labels_.size(); }

  bool contains(Verdict v) const {
    return std::find(labels_.begin(), labels_.end(), v) != labels_.end();
  }

  // Ordinal position on this scheme's truthfulness scale, most-true = 0.
  std::size_t position(Verdict v) const {
    auto it = std::find(labels_.begin(), labels_.end(), v);
    if (it == labels_.end())
      throw LabelError("verdict \"" + std::string(to_string(v)) + "\" is not in the " +
                       std::string(to_string(kind_)) + "-class scheme");
    return static_cast<std::size_t>(it - labels_.begin());
  }

  // Parses with normalization, then enforces scheme membership.
  Verdict parse_verdict(std::string_view s) const {
    Verdict v = parse_verdict_unscoped(s);
    if (!contains(v))
      throw LabelError("verdict \"" + util::normalize_label(s) + "\" is not in the " +
                       std::string(to_string(kind_)) + "-class scheme");
    return v;
  }

  friend bool operator==(const LabelScheme& a, const LabelScheme& b) {
    return a.kind_ == b.kind_;
  }

 private:
  LabelScheme(SchemeKind k, std::vector<Verdict> labels) : kind_(k), labels_(std::move(labels)) {}
  SchemeKind kind_;
  std::vector<Verdict> labels_;
};

// pants-fire is a sub-case of false; everything else maps to itself.
inline Verdict merge_pants_fire(RawLabel raw) {
  switch (raw) {
    case RawLabel::True: return Verdict::True;
    case RawLabel::MostlyTrue: return Verdict::MostlyTrue;
    case RawLabel::HalfTrue: return Verdict::HalfTrue;
    case RawLabel::MostlyFalse: return Verdict::MostlyFalse;
    case RawLabel::False:
    case RawLabel::PantsFire: return Verdict::False;
  }
  return Verdict::False;
}

namespace detail {

inline Verdict five_to_three(Verdict v) {
  switch (v) {
    case Verdict::True: return Verdict::MostlyTrue;
    case Verdict::False: return Verdict::MostlyFalse;
    default: return v;
  }
}

inline Verdict three_to_two(Verdict v) {
  return v == Verdict::HalfTrue ? Verdict::MostlyTrue : v;
}

inline int granularity(SchemeKind k) {
  switch (k) {
    case SchemeKind::Five: return 5;
    case SchemeKind::Three: return 3;
    case SchemeKind::Two: return 2;
  }
  return 0;
}

}  // namespace detail

// Coarsening projection between schemes. true/false fold into the mostly-*
// labels at three classes; half-true folds into mostly-true at two classes.
// Projection to a finer scheme is rejected.
inline Verdict project_label(Verdict v, const LabelScheme& from, const LabelScheme& to) {
  if (!from.contains(v))
    throw LabelError("verdict \"" + std::string(to_string(v)) + "\" is not in the source scheme");
  if (detail::granularity(to.kind()) > detail::granularity(from.kind()))
    throw DomainError("cannot project " + std::string(to_string(from.kind())) +
                      "-class labels to the finer " + std::string(to_string(to.kind())) +
                      "-class scheme");
  Verdict out = v;
  if (from.kind() == SchemeKind::Five && to.kind() != SchemeKind::Five)
    out = detail::five_to_three(out);
  if (to.kind() == SchemeKind::Two) out = detail::three_to_two(out);
  return out;
}

// Gold-label path: raw rating -> five-class -> target scheme.
inline Verdict project_raw(RawLabel raw, const LabelScheme& to) {
  return project_label(merge_pants_fire(raw), LabelScheme::five(), to);
}

// Per-label counts and normalized proportions over one scheme's vocabulary.
// Every scheme label is present, zero or not.
struct ClassDistribution {
  std::vector<Verdict> labels;
  std::map<Verdict, std::size_t> counts;
  std::map<Verdict, double> proportions;
  std::size_t total = 0;

  std::size_t count(Verdict v) const {
    auto it = counts.find(v);
    return it == counts.end() ? 0 : it->second;
  }
  double proportion(Verdict v) const {
    auto it = proportions.find(v);
    return it == proportions.end() ? 0.0 : it->second;
  }

  static ClassDistribution from_counts(const LabelScheme& scheme,
                                       const std::vector<std::size_t>& counts_in_order) {
    if (counts_in_order.size() != scheme.size())
      throw DomainError("count vector size does not match scheme size");
    ClassDistribution dist;
    dist.labels = scheme.labels();
    for (std::size_t i = 0; i < scheme.size(); ++i) {
      dist.counts[scheme.labels()[i]] = counts_in_order[i];
      dist.total += counts_in_order[i];
    }
    if (dist.total == 0) throw DomainError("empty distribution");
    for (auto v : dist.labels)
      dist.proportions[v] = static_cast<double>(dist.counts[v]) / static_cast<double>(dist.total);
    return dist;
  }
};

}  // namespace factcheck
