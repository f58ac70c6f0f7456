#pragma once

#include <array>
#include <cstdio>
#include <optional>
#include <string>
#include <string_view>

#include "factcheck/errors.hpp"
#include "factcheck/util.hpp"

namespace factcheck {

// Calendar date with ISO-8601 text form. Claims carry one; search results may.
struct Date {
  int year = 0;
  int month = 1;
  int day = 1;

  friend bool operator==(const Date&, const Date&) = default;
  auto operator<=>(const Date&) const = default;

  std::string to_string() const {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d", year, month, day);
    return buf;
  }

  static bool leap(int y) { return (y % 4 == 0 && y % 100 != 0) || y % 400 == 0; }

  static int days_in_month(int y, int m) {
    static constexpr std::array<int, 12> d = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
    if (m == 2 && leap(y)) return 29;
    return d[static_cast<std::size_t>(m - 1)];
  }

  bool valid() const {
    return month >= 1 && month <= 12 && day >= 1 && day <= days_in_month(year, month);
  }

  // Strict "YYYY-MM-DD".
  static std::optional<Date> parse_iso(std::string_view s) {
    if (s.size() != 10 || s[4] != '-' || s[7] != '-') return std::nullopt;
    auto digits = [](std::string_view v) {
      for (char c : v)
        if (c < '0' || c > '9') return false;
      return true;
    };
    if (!digits(s.substr(0, 4)) || !digits(s.substr(5, 2)) || !digits(s.substr(8, 2)))
      return std::nullopt;
    Date d;
    d.year = std::stoi(std::string(s.substr(0, 4)));
    d.month = std::stoi(std::string(s.substr(5, 2)));
    d.day = std::stoi(std::string(s.substr(8, 2)));
    if (!d.valid()) return std::nullopt;
    return d;
  }

  // Accepts ISO form or the "Mon DD, YYYY" shape common in search payloads.
  static std::optional<Date> parse_lenient(std::string_view s) {
    auto t = util::trim(s);
    if (auto iso = parse_iso(t)) return iso;
    static constexpr std::array<std::string_view, 12> months = {
        "jan", "feb", "mar", "apr", "may", "jun", "jul", "aug", "sep", "oct", "nov", "dec"};
    auto lower = util::to_lower(t);
    for (std::size_t m = 0; m < months.size(); ++m) {
      if (lower.rfind(months[m], 0) != 0) continue;
      int day = 0, year = 0;
      const char* p = lower.c_str();
      while (*p && !std::isdigit(static_cast<unsigned char>(*p))) ++p;
      if (std::sscanf(p, "%d, %d", &day, &year) != 2 &&
          std::sscanf(p, "%d %d", &day, &year) != 2)
        return std::nullopt;
      Date d{year, static_cast<int>(m) + 1, day};
      if (!d.valid()) return std::nullopt;
      return d;
    }
    return std::nullopt;
  }
};

inline Date require_iso_date(std::string_view s, std::size_t line = 0) {
  auto d = Date::parse_iso(s);
  if (!d) throw ParseError("invalid ISO-8601 date: \"" + std::string(s) + "\"", line, "date");
  return *d;
}

}  // namespace factcheck
