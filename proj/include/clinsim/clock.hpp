#pragma once

#include <cstdint>
#include <cstdio>
#include <string>
#include <string_view>

#include "clinsim/errors.hpp"

// Timestamps are UTC seconds since the Unix epoch. All simulated time is
// explicit; nothing in the harness reads the wall clock, which keeps runs
// reproducible.

namespace clinsim {

using Timestamp = std::int64_t;

inline constexpr double kSecondsPerHour = 3600.0;

namespace detail {

// Days-from-civil / civil-from-days (Howard Hinnant's algorithm).
inline std::int64_t days_from_civil(int y, unsigned m, unsigned d) {
    y -= m <= 2;
    const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

inline void civil_from_days(std::int64_t z, int& y, unsigned& m, unsigned& d) {
    z += 719468;
    const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    const std::int64_t yy = static_cast<std::int64_t>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    d = doy - (153 * mp + 2) / 5 + 1;
    m = mp + (mp < 10 ? 3 : -9);
    y = static_cast<int>(yy + (m <= 2));
}

}  // namespace detail

inline Timestamp make_timestamp(int year, unsigned month, unsigned day,
                                unsigned hour = 0, unsigned minute = 0, unsigned second = 0) {
    return detail::days_from_civil(year, month, day) * 86400 +
           static_cast<Timestamp>(hour) * 3600 + minute * 60 + second;
}

/// Parses "YYYY-MM-DD" or "YYYY-MM-DDTHH:MM:SS" with an optional trailing 'Z'.
inline Timestamp parse_iso8601(std::string_view text) {
    std::string s(text);
    if (!s.empty() && s.back() == 'Z') s.pop_back();
    int y = 0, mo = 0, d = 0, h = 0, mi = 0, se = 0;
    int n = 0;
    if (s.size() > 10) {
        n = std::sscanf(s.c_str(), "%d-%d-%dT%d:%d:%d", &y, &mo, &d, &h, &mi, &se);
        if (n < 5) throw ParseError("invalid ISO-8601 timestamp: '" + std::string(text) + "'");
    } else {
        n = std::sscanf(s.c_str(), "%d-%d-%d", &y, &mo, &d);
        if (n != 3) throw ParseError("invalid ISO-8601 date: '" + std::string(text) + "'");
    }
    if (mo < 1 || mo > 12 || d < 1 || d > 31 || h < 0 || h > 23 || mi < 0 || mi > 59 || se < 0 || se > 60)
        throw ParseError("out-of-range field in ISO-8601 value: '" + std::string(text) + "'");
    return make_timestamp(y, static_cast<unsigned>(mo), static_cast<unsigned>(d),
                          static_cast<unsigned>(h), static_cast<unsigned>(mi),
                          static_cast<unsigned>(se));
}

inline std::string format_iso8601(Timestamp t) {
    std::int64_t days = t / 86400;
    std::int64_t rem = t % 86400;
    if (rem < 0) {
        rem += 86400;
        days -= 1;
    }
    int y;
    unsigned mo, d;
    detail::civil_from_days(days, y, mo, d);
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%04d-%02u-%02uT%02lld:%02lld:%02lldZ", y, mo, d,
                  static_cast<long long>(rem / 3600), static_cast<long long>((rem % 3600) / 60),
                  static_cast<long long>(rem % 60));
    return buf;
}

inline std::string format_iso_date(Timestamp t) {
    std::int64_t days = t / 86400;
    if (t % 86400 < 0) days -= 1;
    int y;
    unsigned mo, d;
    detail::civil_from_days(days, y, mo, d);
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04d-%02u-%02u", y, mo, d);
    return buf;
}

inline double hours_between(Timestamp earlier, Timestamp later) {
    return static_cast<double>(later - earlier) / kSecondsPerHour;
}

/// Whole years completed between birth and the reference time.
inline int age_at(Timestamp birth, Timestamp reference) {
    int by;
    unsigned bm, bd;
    detail::civil_from_days(birth >= 0 ? birth / 86400 : (birth - 86399) / 86400, by, bm, bd);
    int ry;
    unsigned rm, rd;
    detail::civil_from_days(reference >= 0 ? reference / 86400 : (reference - 86399) / 86400, ry,
                            rm, rd);
    int age = ry - by;
    if (rm < bm || (rm == bm && rd < bd)) age -= 1;
    return age;
}

}  // namespace clinsim
