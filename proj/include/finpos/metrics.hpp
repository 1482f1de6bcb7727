#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "finpos/env.hpp"
#include "finpos/errors.hpp"
#include "finpos/jsonio.hpp"

namespace finpos::metrics {

struct TrendScore {
    double m_short = 0, m_mid = 0, m_long = 0;
    double total() const { return m_short + m_mid + m_long; }
};

struct Horizons {
    int short_days = 1, mid_days = 7, long_days = 30;
};

// Forward price deltas at 1/7/30 trading days, clamped to the last price when
// the horizon overruns the series.
inline TrendScore trend_score(const std::vector<double>& prices, std::size_t t,
                              Horizons h = Horizons{}) {
    if (prices.size() < 2 || t + 1 >= prices.size())
        throw DataError("trend_score: t must leave at least one future price");
    const std::size_t last = prices.size() - 1;
    auto delta = [&](int horizon) {
        const std::size_t idx = std::min(t + static_cast<std::size_t>(horizon), last);
        return prices[idx] - prices[t];
    };
    TrendScore score;
    score.m_short = delta(h.short_days);
    score.m_mid = delta(h.mid_days);
    score.m_long = delta(h.long_days);
    return score;
}

struct RewardRecord {
    std::int64_t day_index = 0;
    double reward = 0;
    std::int64_t position_now = 0;
    std::int64_t position_prev = 0;
};

// Unchanged position: quadratic passivity penalty -(M_t)^2.
// Changed position: position_now * M_t.
inline double reward(std::int64_t position_now, std::int64_t position_prev, double m_total) {
    if (position_now == position_prev) return -(m_total * m_total);
    return static_cast<double>(position_now) * m_total;
}

inline double cumulative_return_pct(const std::vector<std::int64_t>& positions,
                                    const std::vector<double>& prices) {
    if (positions.size() + 1 != prices.size())
        throw DataError("cumulative_return_pct: |positions| must equal |prices| - 1");
    double total = 0;
    for (std::size_t t = 0; t < positions.size(); ++t) {
        if (prices[t] <= 0 || prices[t + 1] <= 0)
            throw DataError("cumulative_return_pct: non-positive price");
        total += static_cast<double>(positions[t]) * std::log(prices[t + 1] / prices[t]);
    }
    return 100.0 * total;
}

// Sample (n-1) stdev; unannualized.
inline double sharpe(const std::vector<double>& daily_returns, double risk_free_daily = 0.0) {
    if (daily_returns.size() < 2) throw MetricError("sharpe: need at least 2 samples");
    const double n = static_cast<double>(daily_returns.size());
    const double mean = std::accumulate(daily_returns.begin(), daily_returns.end(), 0.0) / n;
    double ss = 0;
    for (double r : daily_returns) ss += (r - mean) * (r - mean);
    const double stdev = std::sqrt(ss / (n - 1.0));
    if (stdev == 0.0) throw MetricError("sharpe: undefined (zero return stdev)");
    return (mean - risk_free_daily) / stdev;
}

// Worst peak-to-future-trough loss fraction, single pass from the right.
inline double max_drawdown_pct(const std::vector<double>& equity) {
    if (equity.empty()) throw DataError("max_drawdown_pct: empty curve");
    for (double v : equity)
        if (v <= 0) throw DataError("max_drawdown_pct: non-positive account value");
    double future_min = equity.back();
    double worst = 0;
    for (std::size_t i = equity.size(); i-- > 0;) {
        future_min = std::min(future_min, equity[i]);
        worst = std::max(worst, (equity[i] - future_min) / equity[i]);
    }
    return 100.0 * worst;
}

struct RiskEstimate {
    double var = 0;   // empirical lower-tail quantile of PnL
    double cvar = 0;  // mean of samples <= var
    double alpha = 0.95;
    int window = 0;
    std::size_t pnl_samples_used = 0;
};

// Historical simulation. VaR_a is the nearest-rank lower-tail (1-a)-quantile
// (inclusive); CVaR_a is the mean of all samples <= VaR_a.
inline RiskEstimate cvar(std::vector<double> pnl_samples, double alpha) {
    if (alpha <= 0 || alpha >= 1) throw DataError("cvar: alpha must be in (0,1)");
    const std::size_t min_samples =
        static_cast<std::size_t>(std::ceil(1.0 / (1.0 - alpha)));
    if (pnl_samples.size() < min_samples)
        throw DataError("cvar: need at least " + std::to_string(min_samples) + " samples, got " +
                        std::to_string(pnl_samples.size()));
    std::sort(pnl_samples.begin(), pnl_samples.end());
    // nearest-rank, inclusive: k-th order statistic, k = floor((1-alpha)*n) + 1
    const std::size_t n = pnl_samples.size();
    std::size_t k = static_cast<std::size_t>(std::floor((1.0 - alpha) * static_cast<double>(n))) + 1;
    k = std::min(k, n);
    RiskEstimate est;
    est.alpha = alpha;
    est.pnl_samples_used = n;
    est.var = pnl_samples[k - 1];
    double sum = 0;
    std::size_t count = 0;
    for (double v : pnl_samples) {
        if (v <= est.var) {
            sum += v;
            ++count;
        } else {
            break;  // sorted
        }
    }
    est.cvar = sum / static_cast<double>(count);
    return est;
}

inline double calmar(double annualized_return, double mdd_fraction) {
    if (mdd_fraction <= 0) throw MetricError("calmar: undefined (zero drawdown)");
    return annualized_return / std::abs(mdd_fraction);
}

inline double annualize_log_return(double cumulative_log_return, std::size_t trading_days,
                                   double days_per_year = 252.0) {
    if (trading_days == 0) throw DataError("annualize: zero trading days");
    return (days_per_year / static_cast<double>(trading_days)) * cumulative_log_return;
}

// CVaR-derived per-day order-size cap ("maxcvar"). `risk` must be
// computed over per-share daily log-return PnL. A non-loss CVaR means no risk
// signal: fall back to `fallback_limit` (caller logs the warning).
inline std::int64_t max_order_size(double equity_value, double price, const RiskEstimate& risk,
                                   double risk_budget_fraction, std::int64_t fallback_limit = 1,
                                   bool* used_fallback = nullptr) {
    if (price <= 0) throw DataError("max_order_size: price must be > 0");
    if (risk_budget_fraction <= 0 || risk_budget_fraction > 1)
        throw DataError("max_order_size: risk budget fraction must be in (0,1]");
    if (used_fallback) *used_fallback = false;
    if (risk.cvar >= 0) {
        if (used_fallback) *used_fallback = true;
        return fallback_limit;
    }
    const double raw = (risk_budget_fraction * equity_value) / (std::abs(risk.cvar) * price);
    // bound the cap so downstream position arithmetic stays safely inside
    // int64 even when a huge equity value blows the formula up
    constexpr std::int64_t kMaxOrderCap = 1'000'000'000'000;
    if (!std::isfinite(raw) || raw >= static_cast<double>(kMaxOrderCap)) return kMaxOrderCap;
    return static_cast<std::int64_t>(std::floor(raw));
}

struct MetricReport {
    double cr_pct = 0;
    std::optional<double> sharpe;  // empty when undefined (zero variance)
    double mdd_pct = 0;
    std::optional<double> calmar;  // empty when mdd == 0
    double annualized_return = 0;
    std::optional<RiskEstimate> cvar_at_end;
    std::size_t trading_days = 0;
};

// Stable key order + 6-decimal fixed formatting; emitted by hand so the bytes
// are identical across platforms.
inline std::string to_stable_json(const MetricReport& r, int indent_spaces = 2,
                                  int base_indent = 0) {
    const std::string pad(static_cast<std::size_t>(base_indent), ' ');
    const std::string in(static_cast<std::size_t>(base_indent + indent_spaces), ' ');
    std::string out = "{\n";
    auto field = [&](const std::string& key, const std::string& value, bool last = false) {
        out += in + "\"" + key + "\": " + value + (last ? "\n" : ",\n");
    };
    field("cr_pct", fixed6(r.cr_pct));
    field("sharpe", r.sharpe ? fixed6(*r.sharpe) : "null");
    field("mdd_pct", fixed6(r.mdd_pct));
    field("calmar", r.calmar ? fixed6(*r.calmar) : "null");
    field("annualized_return", fixed6(r.annualized_return));
    if (r.cvar_at_end) {
        out += in + "\"cvar_at_end\": {\n";
        const std::string in2(static_cast<std::size_t>(base_indent + 2 * indent_spaces), ' ');
        out += in2 + "\"var\": " + fixed6(r.cvar_at_end->var) + ",\n";
        out += in2 + "\"cvar\": " + fixed6(r.cvar_at_end->cvar) + ",\n";
        out += in2 + "\"alpha\": " + fixed6(r.cvar_at_end->alpha) + ",\n";
        out += in2 + "\"window\": " + std::to_string(r.cvar_at_end->window) + ",\n";
        out += in2 + "\"pnl_samples_used\": " + std::to_string(r.cvar_at_end->pnl_samples_used) + "\n";
        out += in + "},\n";
    } else {
        field("cvar_at_end", "null");
    }
    field("trading_days", std::to_string(r.trading_days), true);
    out += pad + "}";
    return out;
}

// Full report from a position/price trail; the single source of truth used by
// both the backtester and the auditor.
inline MetricReport compute_report(const std::vector<std::int64_t>& positions,
                                   const std::vector<double>& prices, double initial_equity,
                                   double cvar_alpha = 0.95, int cvar_window = 60,
                                   double risk_free_daily = 0.0) {
    if (positions.size() + 1 != prices.size())
        throw DataError("compute_report: |positions| must equal |prices| - 1");
    MetricReport report;
    report.trading_days = positions.size();
    report.cr_pct = cumulative_return_pct(positions, prices);

    std::vector<double> step_returns;
    step_returns.reserve(positions.size());
    for (std::size_t t = 0; t < positions.size(); ++t)
        step_returns.push_back(static_cast<double>(positions[t]) *
                               std::log(prices[t + 1] / prices[t]));

    const auto curve = env::build_equity_curve(step_returns, initial_equity);
    report.mdd_pct = max_drawdown_pct(curve.values);
    if (!positions.empty())
        report.annualized_return = annualize_log_return(report.cr_pct / 100.0, positions.size());

    try {
        report.sharpe = sharpe(step_returns, risk_free_daily);
    } catch (const MetricError&) {
    }
    if (report.mdd_pct > 0) report.calmar = calmar(report.annualized_return, report.mdd_pct / 100.0);

    // trailing-window per-share log-return PnL at the end of the run
    std::vector<double> pnl;
    const std::size_t start =
        prices.size() > static_cast<std::size_t>(cvar_window) + 1
            ? prices.size() - 1 - static_cast<std::size_t>(cvar_window)
            : 0;
    for (std::size_t t = start; t + 1 < prices.size(); ++t)
        pnl.push_back(std::log(prices[t + 1] / prices[t]));
    try {
        auto est = cvar(pnl, cvar_alpha);
        est.window = cvar_window;
        report.cvar_at_end = est;
    } catch (const DataError&) {
    }
    return report;
}

}  // namespace finpos::metrics
