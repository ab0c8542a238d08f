#include "flowguard/date.hpp"

#include <array>
#include <cctype>
#include <charconv>
#include <cstdio>

namespace flowguard {

namespace {

std::optional<int> to_int(std::string_view s) {
    if (s.empty()) {
        return std::nullopt;
    }
    int value = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (ec != std::errc{} || ptr != s.data() + s.size()) {
        return std::nullopt;
    }
    return value;
}

std::optional<unsigned> month_from_abbrev(std::string_view s) {
    static constexpr std::array<std::string_view, 12> kNames = {
        "jan", "feb", "mar", "apr", "may", "jun", "jul", "aug", "sep", "oct", "nov", "dec"};
    if (s.size() != 3) {
        return std::nullopt;
    }
    std::array<char, 3> lower{};
    for (std::size_t i = 0; i < 3; ++i) {
        lower[i] = static_cast<char>(std::tolower(static_cast<unsigned char>(s[i])));
    }
    for (unsigned m = 0; m < kNames.size(); ++m) {
        if (std::string_view(lower.data(), 3) == kNames[m]) {
            return m + 1;
        }
    }
    return std::nullopt;
}

std::optional<Day> make_day(int y, unsigned m, unsigned d) {
    const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{m},
                                          std::chrono::day{d}};
    if (!ymd.ok()) {
        return std::nullopt;
    }
    return Day{ymd};
}

}  // namespace

std::optional<Day> parse_day(std::string_view text) {
    while (!text.empty() && std::isspace(static_cast<unsigned char>(text.front()))) {
        text.remove_prefix(1);
    }
    while (!text.empty() && std::isspace(static_cast<unsigned char>(text.back()))) {
        text.remove_suffix(1);
    }
    // Some exports append a time of day; keep the date part.
    if (const auto space = text.find(' '); space != std::string_view::npos) {
        text = text.substr(0, space);
    }

    if (text.size() == 10 && text[4] == '-' && text[7] == '-') {
        const auto y = to_int(text.substr(0, 4));
        const auto m = to_int(text.substr(5, 2));
        const auto d = to_int(text.substr(8, 2));
        if (!y || !m || !d || *m < 1 || *d < 1) {
            return std::nullopt;
        }
        return make_day(*y, static_cast<unsigned>(*m), static_cast<unsigned>(*d));
    }
    if (text.size() == 10 && text[2] == '.' && text[5] == '.') {
        const auto d = to_int(text.substr(0, 2));
        const auto m = to_int(text.substr(3, 2));
        const auto y = to_int(text.substr(6, 4));
        if (!y || !m || !d || *m < 1 || *d < 1) {
            return std::nullopt;
        }
        return make_day(*y, static_cast<unsigned>(*m), static_cast<unsigned>(*d));
    }
    const auto dash1 = text.find('-');
    const auto dash2 = dash1 == std::string_view::npos ? dash1 : text.find('-', dash1 + 1);
    if (dash2 != std::string_view::npos) {
        const auto d = to_int(text.substr(0, dash1));
        const auto m = month_from_abbrev(text.substr(dash1 + 1, dash2 - dash1 - 1));
        const auto year_part = text.substr(dash2 + 1);
        auto y = to_int(year_part);
        if (!d || !m || !y || *d < 1) {
            return std::nullopt;
        }
        if (year_part.size() == 2) {
            *y += *y < 70 ? 2000 : 1900;
        } else if (year_part.size() != 4) {
            return std::nullopt;
        }
        return make_day(*y, *m, static_cast<unsigned>(*d));
    }
    return std::nullopt;
}

std::string format_day(Day day) {
    const std::chrono::year_month_day ymd{day};
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
    return buf;
}

}  // namespace flowguard
