#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "finpos/date.hpp"
#include "finpos/errors.hpp"

namespace finpos::env {

enum class Direction : int { sell = -1, hold = 0, buy = 1 };

inline std::string to_string(Direction d) {
    switch (d) {
        case Direction::buy: return "buy";
        case Direction::sell: return "sell";
        default: return "hold";
    }
}

inline Direction direction_from_string(const std::string& s) {
    if (s == "buy") return Direction::buy;
    if (s == "sell") return Direction::sell;
    if (s == "hold") return Direction::hold;
    throw DataError("unknown direction '" + s + "'");
}

struct AccountState {
    std::int64_t position = 0;       // signed shares
    double cumulative_log_return = 0;
    std::int64_t day_index = 0;
};

struct MemoryIndices {
    std::vector<std::int64_t> short_ids, mid_ids, long_ids, reflection_ids;
};

struct TradeDecision {
    Direction direction = Direction::hold;
    std::int64_t quantity = 0;  // >= 0; must be 0 on hold
    std::string rationale;
    std::string strategic_intent;  // "long-term-position" | "short-term-tactical"
    MemoryIndices memory_indices;
};

struct ApplyResult {
    AccountState state;
    std::int64_t executed_quantity = 0;  // after any short-side clamp
    bool clamped = false;
};

// Position update: position += direction * quantity. With shorting disabled a
// sell is clamped to the current position; an over-limit order is an error.
inline ApplyResult apply_decision(const AccountState& state, const TradeDecision& decision,
                                  std::int64_t limit, bool allow_short = false) {
    if (decision.quantity < 0) throw DataError("negative quantity");
    if (decision.direction == Direction::hold && decision.quantity != 0)
        throw DataError("hold decision with non-zero quantity");
    if (decision.quantity > limit)
        throw DataError("order quantity " + std::to_string(decision.quantity) +
                        " exceeds limit " + std::to_string(limit));

    ApplyResult out;
    std::int64_t qty = decision.quantity;
    if (!allow_short && decision.direction == Direction::sell && qty > state.position) {
        qty = state.position;
        out.clamped = true;
    }
    out.executed_quantity = qty;
    out.state = state;
    out.state.position += static_cast<std::int64_t>(decision.direction) * qty;
    out.state.day_index = state.day_index + 1;
    return out;
}

inline double step_return(std::int64_t position_after, double price_t, double price_t1) {
    if (price_t <= 0 || price_t1 <= 0) throw DataError("non-positive price in step_return");
    return static_cast<double>(position_after) * std::log(price_t1 / price_t);
}

// Single-step task: each action liquidates next day, R = sum a_t * log ratio.
inline double run_single_step(const std::vector<int>& actions, const std::vector<double>& prices) {
    if (actions.size() + 1 != prices.size())
        throw DataError("single-step: |actions| must equal |prices| - 1");
    double total = 0;
    for (std::size_t t = 0; t < actions.size(); ++t) {
        if (actions[t] < -1 || actions[t] > 1) throw DataError("single-step: action out of {-1,0,1}");
        total += step_return(actions[t], prices[t], prices[t + 1]);
    }
    return total;
}

struct EquityCurve {
    std::vector<Date> dates;    // optional; may be empty when unlabeled
    std::vector<double> values;
};

inline EquityCurve build_equity_curve(const std::vector<double>& step_returns, double initial_value) {
    if (initial_value <= 0) throw DataError("initial equity must be > 0");
    EquityCurve curve;
    curve.values.reserve(step_returns.size() + 1);
    double cum = 0;
    curve.values.push_back(initial_value);
    for (double r : step_returns) {
        cum += r;
        double v = initial_value * std::exp(cum);
        // keep the curve strictly positive and finite under extreme leverage
        if (v <= 0) v = std::numeric_limits<double>::min();
        if (!std::isfinite(v)) v = std::numeric_limits<double>::max();
        curve.values.push_back(v);
    }
    return curve;
}

}  // namespace finpos::env
