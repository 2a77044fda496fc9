#pragma once

#include <cstdint>
#include <cstdio>
#include <optional>
#include <string>

namespace driftwatch {

// Instants are UTC seconds since the Unix epoch. Sub-second precision in
// input timestamps is accepted and truncated.
using Instant = std::int64_t;

// Closed interval [begin, end] over instants.
struct TimeInterval {
    Instant begin = 0;
    Instant end = 0;

    bool contains(Instant t) const { return begin <= t && t <= end; }
    bool covers(const TimeInterval& other) const {
        return begin <= other.begin && other.end <= end;
    }
};

namespace detail {

// Days since 1970-01-01 for a civil date (Howard Hinnant's algorithm).
inline std::int64_t days_from_civil(std::int64_t y, int m, int d) {
    y -= m <= 2;
    const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153u * static_cast<unsigned>(m + (m > 2 ? -3 : 9)) + 2u) / 5u +
                         static_cast<unsigned>(d) - 1u;
    const unsigned doe = yoe * 365u + yoe / 4u - yoe / 100u + doy;
    return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

inline void civil_from_days(std::int64_t z, std::int64_t& y, int& m, int& d) {
    z += 719468;
    const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    const std::int64_t yy = static_cast<std::int64_t>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    d = static_cast<int>(doy - (153 * mp + 2) / 5 + 1);
    m = static_cast<int>(mp + (mp < 10 ? 3 : -9));
    y = yy + (m <= 2);
}

inline bool read_digits(const std::string& s, std::size_t& pos, int count, std::int64_t& out) {
    std::int64_t v = 0;
    for (int i = 0; i < count; ++i) {
        if (pos >= s.size() || s[pos] < '0' || s[pos] > '9') return false;
        v = v * 10 + (s[pos] - '0');
        ++pos;
    }
    out = v;
    return true;
}

}  // namespace detail

// Parses ISO-8601 instants: "YYYY-MM-DD", optionally followed by
// "T" or " " and "HH:MM:SS", an optional fractional part (truncated), and an
// optional zone ("Z" or +hh:mm / -hh:mm). Missing zone means UTC.
inline std::optional<Instant> parse_instant(const std::string& s) {
    std::size_t pos = 0;
    std::int64_t year = 0, month = 0, day = 0;
    if (!detail::read_digits(s, pos, 4, year)) return std::nullopt;
    if (pos >= s.size() || s[pos] != '-') return std::nullopt;
    ++pos;
    if (!detail::read_digits(s, pos, 2, month)) return std::nullopt;
    if (pos >= s.size() || s[pos] != '-') return std::nullopt;
    ++pos;
    if (!detail::read_digits(s, pos, 2, day)) return std::nullopt;
    if (month < 1 || month > 12 || day < 1 || day > 31) return std::nullopt;

    std::int64_t hh = 0, mm = 0, ss = 0;
    std::int64_t offset = 0;
    if (pos < s.size()) {
        if (s[pos] != 'T' && s[pos] != ' ') return std::nullopt;
        ++pos;
        if (!detail::read_digits(s, pos, 2, hh)) return std::nullopt;
        if (pos >= s.size() || s[pos] != ':') return std::nullopt;
        ++pos;
        if (!detail::read_digits(s, pos, 2, mm)) return std::nullopt;
        if (pos >= s.size() || s[pos] != ':') return std::nullopt;
        ++pos;
        if (!detail::read_digits(s, pos, 2, ss)) return std::nullopt;
        if (hh > 23 || mm > 59 || ss > 60) return std::nullopt;
        if (pos < s.size() && s[pos] == '.') {
            ++pos;
            if (pos >= s.size() || s[pos] < '0' || s[pos] > '9') return std::nullopt;
            while (pos < s.size() && s[pos] >= '0' && s[pos] <= '9') ++pos;
        }
        if (pos < s.size()) {
            if (s[pos] == 'Z') {
                ++pos;
            } else if (s[pos] == '+' || s[pos] == '-') {
                const bool neg = s[pos] == '-';
                ++pos;
                std::int64_t oh = 0, om = 0;
                if (!detail::read_digits(s, pos, 2, oh)) return std::nullopt;
                if (pos < s.size() && s[pos] == ':') ++pos;
                if (!detail::read_digits(s, pos, 2, om)) return std::nullopt;
                offset = (oh * 60 + om) * 60;
                if (neg) offset = -offset;
            }
        }
    }
    if (pos != s.size()) return std::nullopt;

    const std::int64_t days = detail::days_from_civil(year, static_cast<int>(month),
                                                      static_cast<int>(day));
    return days * 86400 + hh * 3600 + mm * 60 + ss - offset;
}

// Canonical form: "YYYY-MM-DDTHH:MM:SSZ".
inline std::string format_instant(Instant t) {
    std::int64_t days = t / 86400;
    std::int64_t rem = t % 86400;
    if (rem < 0) {
        rem += 86400;
        --days;
    }
    std::int64_t y;
    int m, d;
    detail::civil_from_days(days, y, m, d);
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%04lld-%02d-%02dT%02lld:%02lld:%02lldZ",
                  static_cast<long long>(y), m, d,
                  static_cast<long long>(rem / 3600),
                  static_cast<long long>((rem / 60) % 60),
                  static_cast<long long>(rem % 60));
    return buf;
}

}  // namespace driftwatch
