#pragma once

#include <cctype>
#include <compare>
#include <cstdint>
#include <cstdio>
#include <string>
#include <tuple>

#include "finpos/errors.hpp"

namespace finpos {

// Calendar date stored as a civil-day serial number (days since 1970-01-01).
// Parsing and formatting use ISO-8601 (YYYY-MM-DD) only.
class Date {
public:
    Date() = default;

    static Date from_ymd(int y, int m, int d) {
        if (m < 1 || m > 12 || d < 1 || d > 31)
            throw DataError("invalid date: " + std::to_string(y) + "-" + std::to_string(m) + "-" +
                            std::to_string(d));
        Date out;
        out.serial_ = days_from_civil(y, m, d);
        return out;
    }

    static Date parse(const std::string& iso) {
        if (iso.size() != 10 || iso[4] != '-' || iso[7] != '-')
            throw DataError("invalid ISO date '" + iso + "'");
        for (int i : {0, 1, 2, 3, 5, 6, 8, 9})
            if (!std::isdigit(static_cast<unsigned char>(iso[i])))
                throw DataError("invalid ISO date '" + iso + "'");
        int y = std::stoi(iso.substr(0, 4));
        int m = std::stoi(iso.substr(5, 2));
        int d = std::stoi(iso.substr(8, 2));
        return from_ymd(y, m, d);
    }

    static Date from_serial(std::int64_t s) {
        Date out;
        out.serial_ = s;
        return out;
    }

    std::string to_string() const {
        auto [y, m, d] = civil_from_days(serial_);
        char buf[16];
        std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d", y, m, d);
        return buf;
    }

    std::int64_t serial() const { return serial_; }
    Date add_days(std::int64_t n) const { return from_serial(serial_ + n); }
    // 0 = Thursday-based epoch; returns 0..6 with 0 = Monday.
    int weekday() const { return static_cast<int>(((serial_ % 7) + 7 + 3) % 7); }

    auto operator<=>(const Date&) const = default;

private:
    // Howard Hinnant's civil-days algorithms.
    static std::int64_t days_from_civil(int y, int m, int d) {
        y -= m <= 2;
        const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
        const unsigned yoe = static_cast<unsigned>(y - era * 400);
        const unsigned doy = (153u * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
        const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
        return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
    }

    static std::tuple<int, int, int> civil_from_days(std::int64_t z) {
        z += 719468;
        const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
        const unsigned doe = static_cast<unsigned>(z - era * 146097);
        const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
        const std::int64_t y = static_cast<std::int64_t>(yoe) + era * 400;
        const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
        const unsigned mp = (5 * doy + 2) / 153;
        const unsigned d = doy - (153 * mp + 2) / 5 + 1;
        const unsigned m = mp + (mp < 10 ? 3 : -9);
        return {static_cast<int>(y + (m <= 2)), static_cast<int>(m), static_cast<int>(d)};
    }

    std::int64_t serial_ = 0;
};

}  // namespace finpos
