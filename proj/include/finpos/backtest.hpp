#pragma once

#include <cstdint>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "finpos/agents.hpp"
#include "finpos/config.hpp"
#include "finpos/env.hpp"
#include "finpos/indicators.hpp"
#include "finpos/market_data.hpp"
#include "finpos/memory.hpp"
#include "finpos/metrics.hpp"
#include "finpos/prompts.hpp"
#include "finpos/provider.hpp"
#include "finpos/report.hpp"

namespace finpos::bt {

// ---------------------------------------------------------------------------
// replay assembly

inline std::vector<data::MarketDay> load_replay(const RunConfig& cfg, const DateRange& range) {
    auto bars = data::load_price_csv(cfg.prices_path);
    std::vector<data::PriceBar> in_range;
    for (const auto& bar : bars)
        if (bar.date >= range.start && bar.date <= range.end) in_range.push_back(bar);
    if (in_range.empty())
        throw DataError("no price bars in range " + range.start.to_string() + ".." +
                        range.end.to_string());
    // a bar gap longer than a week means missing data, not a holiday
    std::string gaps;
    for (std::size_t i = 1; i < in_range.size(); ++i)
        if (in_range[i].date.serial() - in_range[i - 1].date.serial() > 7)
            gaps += " " + in_range[i - 1].date.to_string() + ".." + in_range[i].date.to_string();
    if (!gaps.empty()) throw DataError("price data gaps detected:" + gaps);

    std::vector<data::NewsItem> news;
    auto load_news = [&](const std::string& path) {
        if (path.empty()) return;
        for (auto& item : data::load_news_jsonl(path, cfg.strict_loading))
            if (item.date >= range.start && item.date <= range.end) news.push_back(item);
    };
    load_news(cfg.company_news_path);
    load_news(cfg.macro_news_path);

    std::vector<data::FilingDoc> filings;
    if (!cfg.filings_path.empty())
        for (auto& doc : data::load_filings_jsonl(cfg.filings_path, cfg.strict_loading))
            if (doc.date >= range.start && doc.date <= range.end) filings.push_back(doc);

    return data::build_replay(in_range, news, filings);
}

// Per-day CVaR order cap over the trailing window of per-share daily log
// returns. Falls back to the configured floor when there is no usable risk
// signal (young history or non-loss tail).
inline std::int64_t max_order_limit_for_day(const std::vector<double>& closes, std::size_t t,
                                            double equity_value, const RunConfig& cfg,
                                            bool* used_fallback = nullptr) {
    std::vector<double> pnl;
    const std::size_t from = t > static_cast<std::size_t>(cfg.cvar_window)
                                 ? t - static_cast<std::size_t>(cfg.cvar_window)
                                 : 0;
    for (std::size_t i = from; i < t; ++i) pnl.push_back(std::log(closes[i + 1] / closes[i]));
    try {
        auto risk = metrics::cvar(pnl, cfg.cvar_alpha);
        risk.window = cfg.cvar_window;
        return metrics::max_order_size(equity_value, closes[t], risk, cfg.risk_budget_fraction,
                                       cfg.fallback_order_limit, used_fallback);
    } catch (const DataError&) {
        if (used_fallback) *used_fallback = true;
        return cfg.fallback_order_limit;
    }
}

// ---------------------------------------------------------------------------
// agent backtests

struct TrainOutput {
    std::string memory_snapshot;
    std::vector<metrics::RewardRecord> rewards;
    std::vector<DayRecord> decisions;
};

namespace detail {

inline std::vector<std::string> query_terms_for_day(const std::string& symbol,
                                                    const data::MarketDay& day) {
    std::string text = symbol;
    for (const auto& n : day.company_news) text += " " + n.headline;
    for (const auto& n : day.macro_news) text += " " + n.headline;
    auto terms = mem::detail::tokenize(text);
    if (terms.size() > 24) terms.resize(24);
    return terms;
}

// fixed per-day analysis order: filings, then macro news, then company news,
// so memory ids are reproducible
inline void analyze_and_allocate(const data::MarketDay& day, std::size_t day_index,
                                 const RunConfig& cfg, const agents::PromptRegistry& registry,
                                 agents::Provider& provider, mem::MemoryStore& store) {
    using agents::SignalItem;
    for (const auto& doc : day.filings) {
        const bool annual = doc.kind == data::FilingKind::annual_10k;
        const std::string filter_id = annual ? "filter-10K" : "filter-10Q";
        const std::string analyze_id = annual ? "analyze-10K" : "analyze-10Q";
        SignalItem item{data::to_string(doc.kind) + "@" + doc.date.to_string(), doc.body};
        auto filtered = agents::filter_signal({item}, filter_id, registry, provider, cfg.symbol,
                                              cfg.news_batch_size);
        if (filtered.kept_indices.empty()) continue;
        SignalItem summarized{item.id, filtered.key_points.front()};
        auto insight = agents::analyze(summarized, analyze_id, registry, provider, cfg.symbol);
        agents::allocate_insight(store, insight, day.date, static_cast<std::int64_t>(day_index));
    }

    if (!day.macro_news.empty()) {
        std::vector<SignalItem> items;
        for (const auto& n : day.macro_news) items.push_back({n.id, n.headline + ". " + n.summary});
        auto filtered = agents::filter_signal(items, "filter-macro", registry, provider, cfg.symbol,
                                              cfg.news_batch_size);
        for (std::size_t k = 0; k < filtered.kept_indices.size(); ++k) {
            const auto& item = items[filtered.kept_indices[k]];
            auto insight = agents::analyze(item, "analyze-macro", registry, provider, cfg.symbol);
            insight.relation_type = filtered.relation_types[k];
            agents::allocate_insight(store, insight, day.date, static_cast<std::int64_t>(day_index));
        }
    }

    if (!day.company_news.empty()) {
        std::vector<SignalItem> items;
        for (const auto& n : day.company_news) items.push_back({n.id, n.headline + ". " + n.summary});
        auto filtered = agents::filter_signal(items, "filter-company-news", registry, provider,
                                              cfg.symbol, cfg.news_batch_size);
        for (std::size_t idx : filtered.kept_indices) {
            auto insight = agents::analyze(items[idx], "analyze-company-news", registry, provider,
                                           cfg.symbol);
            agents::allocate_insight(store, insight, day.date, static_cast<std::int64_t>(day_index));
        }
    }
}

}  // namespace detail

inline TrainOutput run_train_with(const RunConfig& cfg, const std::vector<data::MarketDay>& days,
                                  const std::vector<double>& closes,
                                  const agents::PromptRegistry& registry,
                                  agents::Provider& provider) {
    mem::MemoryStore store(cfg.memory);
    env::AccountState account;
    TrainOutput out;
    double prev_reward = 0;

    for (std::size_t t = 0; t + 1 < days.size(); ++t) {
        const auto& day = days[t];
        detail::analyze_and_allocate(day, t, cfg, registry, provider, store);

        const auto query = detail::query_terms_for_day(cfg.symbol, day);
        auto working_set = store.retrieve(query, day.date, static_cast<std::int64_t>(t));
        const auto momentum = agents::momentum_summary(closes, t);

        const auto trend = metrics::trend_score(closes, t, cfg.horizons);
        agents::TrainBindings bindings{trend.m_short, trend.m_mid, trend.m_long, prev_reward};

        auto direction = agents::decide_direction(working_set, momentum, account,
                                                  agents::Phase::train, registry, provider, store,
                                                  cfg.symbol, day.date, &bindings);
        const double equity_value = cfg.initial_equity * std::exp(account.cumulative_log_return);
        const std::int64_t limit = max_order_limit_for_day(closes, t, equity_value, cfg);
        auto quantity = agents::decide_quantity(direction, working_set, momentum, account, limit,
                                                agents::Phase::train, registry, provider, cfg.symbol,
                                                day.date, &bindings, cfg.quantity_fallback);

        env::TradeDecision decision;
        decision.direction = quantity.quantity == 0 ? env::Direction::hold : direction.direction;
        decision.quantity = quantity.quantity;
        decision.rationale = direction.summary_reason;
        decision.strategic_intent = direction.strategic_intent;
        decision.memory_indices = direction.cited;

        const std::int64_t position_prev = account.position;
        auto applied = env::apply_decision(account, decision, std::max<std::int64_t>(limit, 1),
                                           cfg.allow_short);
        account = applied.state;
        const double r_t = env::step_return(account.position, closes[t], closes[t + 1]);
        account.cumulative_log_return += r_t;

        const double reward_value = metrics::reward(account.position, position_prev, trend.total());
        out.rewards.push_back({static_cast<std::int64_t>(t), reward_value, account.position,
                               position_prev});
        prev_reward = reward_value;

        auto reflection = agents::reflect(decision, reward_value, working_set, registry, provider,
                                          cfg.symbol, day.date);
        if (!reflection.skipped) {
            store.allocate(mem::Layer::reflection, mem::SourceKind::reflection, reflection.text,
                           0.6, day.date, static_cast<std::int64_t>(t));
            store.promote(reflection.promote_ids, reflection.reward_sign);
        }

        DayRecord rec;
        rec.label = "train";
        rec.date = day.date;
        rec.direction = decision.direction;
        rec.quantity = applied.executed_quantity;
        rec.position_after = account.position;
        rec.step_return = r_t;
        rec.rationale = decision.rationale;
        rec.strategic_intent = decision.strategic_intent;
        rec.memory_indices = decision.memory_indices;
        rec.max_order_limit = limit;
        rec.clamped = applied.clamped;
        rec.cap_violation = quantity.cap_violation;
        out.decisions.push_back(std::move(rec));
    }

    out.memory_snapshot = store.snapshot();
    return out;
}

inline BacktestResult run_test_with(const RunConfig& cfg, const std::vector<data::MarketDay>& days,
                                    const std::vector<double>& closes,
                                    const agents::PromptRegistry& registry,
                                    agents::Provider& provider, const std::string& memory_snapshot,
                                    bool capture_prompts = false) {
    mem::MemoryStore store = memory_snapshot.empty()
                                 ? mem::MemoryStore(cfg.memory)
                                 : mem::MemoryStore::restore(memory_snapshot, cfg.memory);
    env::AccountState account;
    BacktestResult result;
    result.label = "finpos";
    result.prices = closes;

    std::vector<std::int64_t> positions;
    std::vector<double> step_returns;

    for (std::size_t t = 0; t + 1 < days.size(); ++t) {
        const auto& day = days[t];
        detail::analyze_and_allocate(day, t, cfg, registry, provider, store);

        const auto query = detail::query_terms_for_day(cfg.symbol, day);
        auto working_set = store.retrieve(query, day.date, static_cast<std::int64_t>(t));
        const auto momentum = agents::momentum_summary(closes, t);

        auto direction = agents::decide_direction(working_set, momentum, account,
                                                  agents::Phase::test, registry, provider, store,
                                                  cfg.symbol, day.date);
        const double equity_value = cfg.initial_equity * std::exp(account.cumulative_log_return);
        const std::int64_t limit = max_order_limit_for_day(closes, t, equity_value, cfg);
        auto quantity = agents::decide_quantity(direction, working_set, momentum, account, limit,
                                                agents::Phase::test, registry, provider, cfg.symbol,
                                                day.date, nullptr, cfg.quantity_fallback);
        if (capture_prompts) {
            result.rendered_prompts.push_back(direction.rendered_prompt);
            if (!quantity.rendered_prompt.empty())
                result.rendered_prompts.push_back(quantity.rendered_prompt);
        }

        env::TradeDecision decision;
        decision.direction = quantity.quantity == 0 ? env::Direction::hold : direction.direction;
        decision.quantity = quantity.quantity;
        decision.rationale = direction.summary_reason;
        decision.strategic_intent = direction.strategic_intent;
        decision.memory_indices = direction.cited;

        auto applied = env::apply_decision(account, decision, std::max<std::int64_t>(limit, 1),
                                           cfg.allow_short);
        account = applied.state;
        const double r_t = env::step_return(account.position, closes[t], closes[t + 1]);
        account.cumulative_log_return += r_t;

        positions.push_back(account.position);
        step_returns.push_back(r_t);
        result.dates.push_back(day.date);

        DayRecord rec;
        rec.label = result.label;
        rec.date = day.date;
        rec.direction = decision.direction;
        rec.quantity = applied.executed_quantity;
        rec.position_after = account.position;
        rec.step_return = r_t;
        rec.rationale = decision.rationale;
        rec.strategic_intent = decision.strategic_intent;
        rec.memory_indices = decision.memory_indices;
        rec.max_order_limit = limit;
        rec.clamped = applied.clamped;
        rec.cap_violation = quantity.cap_violation;
        result.decisions.push_back(std::move(rec));
    }

    const auto curve = env::build_equity_curve(step_returns, cfg.initial_equity);
    result.equity = curve.values;
    for (std::size_t t = 0; t < positions.size(); ++t)
        result.exposure.push_back(std::abs(static_cast<double>(positions[t])) * closes[t] /
                                  curve.values[t]);
    result.report = metrics::compute_report(positions, closes, cfg.initial_equity, cfg.cvar_alpha,
                                            cfg.cvar_window, cfg.risk_free_daily);
    return result;
}

// ---------------------------------------------------------------------------
// baselines

enum class BaselineKind { buy_hold, random, macd, rsi };

inline BaselineKind baseline_from_string(const std::string& s) {
    if (s == "buy-hold") return BaselineKind::buy_hold;
    if (s == "random") return BaselineKind::random;
    if (s == "macd") return BaselineKind::macd;
    if (s == "rsi") return BaselineKind::rsi;
    throw UsageError("unknown baseline kind '" + s + "'");
}

inline std::string to_string(BaselineKind k) {
    switch (k) {
        case BaselineKind::buy_hold: return "buy-hold";
        case BaselineKind::random: return "random";
        case BaselineKind::macd: return "macd";
        default: return "rsi";
    }
}

// All baselines run under the same position-aware accounting as the agent.
inline BacktestResult run_baseline_on(BaselineKind kind, const RunConfig& cfg,
                                      const std::vector<data::MarketDay>& days,
                                      const std::vector<double>& closes) {
    if (days.size() < 2) throw DataError("baseline: need at least 2 trading days");
    BacktestResult result;
    result.label = to_string(kind);
    result.prices = closes;

    std::vector<int> signal;
    if (kind == BaselineKind::macd) signal = macd_signal(closes);
    if (kind == BaselineKind::rsi) signal = rsi(closes).signal;
    std::mt19937_64 rng(cfg.seed);

    env::AccountState account;
    std::vector<std::int64_t> positions;
    std::vector<double> step_returns;

    for (std::size_t t = 0; t + 1 < days.size(); ++t) {
        const double equity_value = cfg.initial_equity * std::exp(account.cumulative_log_return);
        env::TradeDecision decision;
        std::int64_t limit = 1;

        switch (kind) {
            case BaselineKind::buy_hold: {
                if (t == 0) {
                    limit = max_order_limit_for_day(closes, t, equity_value, cfg);
                    limit = std::max<std::int64_t>(limit, 1);
                    decision.direction = env::Direction::buy;
                    decision.quantity = limit;
                    decision.rationale = "buy-and-hold entry sized by the day-0 order cap";
                }
                break;
            }
            case BaselineKind::random: {
                limit = std::max<std::int64_t>(max_order_limit_for_day(closes, t, equity_value, cfg), 0);
                const int draw = static_cast<int>(rng() % 3) - 1;  // {-1, 0, +1}
                if (draw != 0 && limit >= 1) {
                    decision.direction = draw > 0 ? env::Direction::buy : env::Direction::sell;
                    decision.quantity = std::min<std::int64_t>(limit, 1);
                    decision.rationale = "random direction draw";
                }
                limit = std::max<std::int64_t>(limit, 1);
                break;
            }
            case BaselineKind::macd:
            case BaselineKind::rsi: {
                const int s = signal[t];
                if (s != 0) {
                    decision.direction = s > 0 ? env::Direction::buy : env::Direction::sell;
                    decision.quantity = 1;  // fixed one-lot, decoupled from CVaR sizing
                    decision.rationale = result.label + " signal";
                }
                break;
            }
        }

        auto applied = env::apply_decision(account, decision, limit, cfg.allow_short);
        account = applied.state;
        const double r_t = env::step_return(account.position, closes[t], closes[t + 1]);
        account.cumulative_log_return += r_t;

        positions.push_back(account.position);
        step_returns.push_back(r_t);
        result.dates.push_back(days[t].date);

        DayRecord rec;
        rec.label = result.label;
        rec.date = days[t].date;
        rec.direction = decision.direction;
        rec.quantity = applied.executed_quantity;
        rec.position_after = account.position;
        rec.step_return = r_t;
        rec.rationale = decision.rationale;
        rec.strategic_intent = "rule-based";
        rec.max_order_limit = limit;
        rec.clamped = applied.clamped;
        result.decisions.push_back(std::move(rec));
    }

    const auto curve = env::build_equity_curve(step_returns, cfg.initial_equity);
    result.equity = curve.values;
    for (std::size_t t = 0; t < positions.size(); ++t)
        result.exposure.push_back(std::abs(static_cast<double>(positions[t])) * closes[t] /
                                  curve.values[t]);
    result.report = metrics::compute_report(positions, closes, cfg.initial_equity, cfg.cvar_alpha,
                                            cfg.cvar_window, cfg.risk_free_daily);
    return result;
}

inline BacktestResult run_baseline(BaselineKind kind, const RunConfig& cfg) {
    if (!cfg.test_range) throw UsageError("baseline: no test range configured");
    const auto days = load_replay(cfg, *cfg.test_range);
    return run_baseline_on(kind, cfg, days, data::closes(days));
}

}  // namespace finpos::bt
