#pragma once

#include <cstddef>
#include <vector>

#include "finpos/errors.hpp"

namespace finpos::bt {

// EMA seeded by the simple average of the first `period` values; the seed sits
// at index period-1, earlier entries are unset (0).
inline std::vector<double> ema(const std::vector<double>& values, int period) {
    if (period < 1) throw DataError("ema: period must be >= 1");
    if (values.size() < static_cast<std::size_t>(period)) throw DataError("ema: series too short");
    std::vector<double> out(values.size(), 0.0);
    double seed = 0;
    for (int i = 0; i < period; ++i) seed += values[static_cast<std::size_t>(i)];
    seed /= period;
    out[static_cast<std::size_t>(period - 1)] = seed;
    const double k = 2.0 / (period + 1.0);
    for (std::size_t i = static_cast<std::size_t>(period); i < values.size(); ++i)
        out[i] = values[i] * k + out[i - 1] * (1.0 - k);
    return out;
}

// +1 on the MACD line crossing above the signal line, -1 on crossing below,
// 0 elsewhere (including the warmup region).
inline std::vector<int> macd_signal(const std::vector<double>& prices, int fast = 12, int slow = 26,
                                    int signal = 9) {
    if (fast < 1 || slow <= fast || signal < 1) throw DataError("macd: invalid parameters");
    if (prices.size() <= static_cast<std::size_t>(slow + signal))
        throw DataError("macd: series too short (need more than " + std::to_string(slow + signal) +
                        " points)");
    const auto ema_fast = ema(prices, fast);
    const auto ema_slow = ema(prices, slow);
    std::vector<double> macd_line(prices.size(), 0.0);
    for (std::size_t i = static_cast<std::size_t>(slow - 1); i < prices.size(); ++i)
        macd_line[i] = ema_fast[i] - ema_slow[i];
    // signal line: EMA of the MACD line, starting where the MACD line is valid
    std::vector<double> macd_valid(macd_line.begin() + (slow - 1), macd_line.end());
    const auto signal_valid = ema(macd_valid, signal);
    const std::size_t warmup = static_cast<std::size_t>(slow - 1 + signal - 1);

    std::vector<int> out(prices.size(), 0);
    for (std::size_t i = warmup + 1; i < prices.size(); ++i) {
        const double prev_diff = macd_line[i - 1] - signal_valid[i - 1 - (slow - 1)];
        const double diff = macd_line[i] - signal_valid[i - (slow - 1)];
        if (prev_diff <= 0 && diff > 0) out[i] = 1;
        else if (prev_diff >= 0 && diff < 0) out[i] = -1;
    }
    return out;
}

struct RsiResult {
    std::vector<double> value;  // [0,100]; unset (0) during warmup
    std::vector<int> signal;    // +1 when value < buy threshold, -1 when > sell threshold
};

// Wilder smoothing of average gains/losses. RSI = 100 - 100/(1+RS); an
// all-gain window reads 100, an all-loss window 0.
inline RsiResult rsi(const std::vector<double>& prices, int period = 14, double buy_below = 30.0,
                     double sell_above = 70.0) {
    if (period < 1) throw DataError("rsi: period must be >= 1");
    if (prices.size() <= static_cast<std::size_t>(period))
        throw DataError("rsi: series too short (need more than " + std::to_string(period) +
                        " points)");
    RsiResult out;
    out.value.assign(prices.size(), 0.0);
    out.signal.assign(prices.size(), 0);

    double avg_gain = 0, avg_loss = 0;
    for (int i = 1; i <= period; ++i) {
        const double change = prices[static_cast<std::size_t>(i)] - prices[static_cast<std::size_t>(i - 1)];
        if (change > 0) avg_gain += change;
        else avg_loss -= change;
    }
    avg_gain /= period;
    avg_loss /= period;

    auto rsi_from = [](double gain, double loss) {
        if (loss == 0.0) return gain == 0.0 ? 50.0 : 100.0;
        const double rs = gain / loss;
        return 100.0 - 100.0 / (1.0 + rs);
    };

    out.value[static_cast<std::size_t>(period)] = rsi_from(avg_gain, avg_loss);
    for (std::size_t i = static_cast<std::size_t>(period) + 1; i < prices.size(); ++i) {
        const double change = prices[i] - prices[i - 1];
        avg_gain = (avg_gain * (period - 1) + (change > 0 ? change : 0.0)) / period;
        avg_loss = (avg_loss * (period - 1) + (change < 0 ? -change : 0.0)) / period;
        out.value[i] = rsi_from(avg_gain, avg_loss);
    }
    for (std::size_t i = static_cast<std::size_t>(period); i < prices.size(); ++i) {
        if (out.value[i] < buy_below) out.signal[i] = 1;
        else if (out.value[i] > sell_above) out.signal[i] = -1;
    }
    return out;
}

}  // namespace finpos::bt
