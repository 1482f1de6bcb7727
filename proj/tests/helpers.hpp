#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <unistd.h>
#include <random>
#include <string>
#include <vector>

#include "finpos/jsonio.hpp"

namespace testutil {

// unit-interval doubles from raw engine output; std distributions are
// implementation-defined, this is reproducible everywhere
inline double unit(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static std::uint64_t counter = 0;
        path_ = (std::filesystem::temp_directory_path() /
                 ("finpos-test-" + tag + "-" + std::to_string(::getpid()) + "-" +
                  std::to_string(counter++)))
                    .string();
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    const std::string& path() const { return path_; }
    std::string file(const std::string& name) const {
        return (std::filesystem::path(path_) / name).string();
    }

private:
    std::string path_;
};

// weekday-only ISO dates starting 2024-01-02 (a Tuesday)
inline std::vector<std::string> trading_dates(std::size_t n) {
    std::vector<std::string> out;
    int y = 2024, m = 1, d = 2;
    auto push = [&] {
        char buf[16];
        std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d", y, m, d);
        out.emplace_back(buf);
    };
    auto advance = [&] {
        static const int mdays[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
        int lim = mdays[m - 1] + ((m == 2 && (y % 4 == 0 && (y % 100 != 0 || y % 400 == 0))) ? 1 : 0);
        if (++d > lim) { d = 1; if (++m > 12) { m = 1; ++y; } }
    };
    int weekday = 1;  // 2024-01-02 is a Tuesday (0 = Monday)
    while (out.size() < n) {
        if (weekday < 5) push();
        advance();
        weekday = (weekday + 1) % 7;
    }
    return out;
}

inline std::string price_csv(const std::vector<double>& closes) {
    const auto dates = trading_dates(closes.size());
    std::string csv = "date,open,high,low,close,volume\n";
    for (std::size_t i = 0; i < closes.size(); ++i) {
        const double c = closes[i];
        csv += dates[i] + "," + finpos::fixed6(c) + "," + finpos::fixed6(c * 1.01) + "," +
               finpos::fixed6(c * 0.99) + "," + finpos::fixed6(c) + ",1000\n";
    }
    return csv;
}

inline std::string write_price_fixture(const TempDir& dir, const std::vector<double>& closes,
                                       const std::string& name = "prices.csv") {
    const std::string path = dir.file(name);
    finpos::write_file(path, price_csv(closes));
    return path;
}

inline std::vector<double> random_walk(std::mt19937_64& rng, std::size_t n, double start = 100.0,
                                       double vol = 0.02) {
    std::vector<double> out;
    out.reserve(n);
    double p = start;
    for (std::size_t i = 0; i < n; ++i) {
        out.push_back(p);
        p *= std::exp((unit(rng) - 0.5) * 2.0 * vol);
    }
    return out;
}

}  // namespace testutil
