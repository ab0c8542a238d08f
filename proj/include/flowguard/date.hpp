#pragma once

#include <chrono>
#include <optional>
#include <string>
#include <string_view>

namespace flowguard {

/// A calendar day.
using Day = std::chrono::sys_days;

/// Parses "YYYY-MM-DD", "DD.MM.YYYY", "DD-Mon-YY" or "DD-Mon-YYYY".
/// Returns nullopt for anything else, including impossible dates.
[[nodiscard]] std::optional<Day> parse_day(std::string_view text);

/// ISO 8601 "YYYY-MM-DD".
[[nodiscard]] std::string format_day(Day day);

[[nodiscard]] inline Day add_days(Day day, long n) { return day + std::chrono::days{n}; }

}  // namespace flowguard
