#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "finpos/agents.hpp"
#include "finpos/date.hpp"
#include "finpos/errors.hpp"
#include "finpos/jsonio.hpp"
#include "finpos/memory.hpp"
#include "finpos/metrics.hpp"
#include "finpos/provider.hpp"

namespace finpos::bt {

struct DateRange {
    Date start, end;
};

struct RunConfig {
    std::string symbol;
    std::string prices_path;
    std::string company_news_path;  // optional
    std::string macro_news_path;    // optional
    std::string filings_path;       // optional
    std::string events_path;        // optional, plot markers
    std::optional<DateRange> train_range;
    std::optional<DateRange> test_range;
    metrics::Horizons horizons;
    double cvar_alpha = 0.95;
    int cvar_window = 60;
    double risk_budget_fraction = 0.10;
    std::int64_t fallback_order_limit = 1;
    bool allow_short = false;
    bool strict_loading = true;
    agents::ProviderConfig provider;
    agents::QuantityFallback quantity_fallback = agents::QuantityFallback::minimum_lot;
    mem::MemoryConfig memory;
    std::uint64_t seed = 42;
    double initial_equity = 100000.0;
    std::string output_dir = "out";
    int news_batch_size = 4;
    double risk_free_daily = 0.0;

    void validate() const {
        if (symbol.empty()) throw UsageError("config: symbol is required");
        if (prices_path.empty()) throw UsageError("config: prices path is required");
        if (train_range && train_range->start > train_range->end)
            throw UsageError("config: train range start after end");
        if (test_range && test_range->start > test_range->end)
            throw UsageError("config: test range start after end");
        if (train_range && test_range && train_range->end >= test_range->start)
            throw UsageError("config: train range must precede and not overlap the test range");
        if (initial_equity <= 0) throw UsageError("config: initial equity must be > 0");
        if (cvar_alpha <= 0 || cvar_alpha >= 1) throw UsageError("config: cvar alpha must be in (0,1)");
        if (risk_budget_fraction <= 0 || risk_budget_fraction > 1)
            throw UsageError("config: risk budget fraction must be in (0,1]");
    }
};

// Declarative config file (JSON). Precedence is flags > file > defaults; the
// CLI applies flag overrides after this loader.
inline RunConfig load_config(const std::string& path) {
    json root;
    try {
        root = json::parse(read_file(path));
    } catch (const json::parse_error& e) {
        throw UsageError(path + ": " + e.what());
    }
    RunConfig cfg;
    cfg.symbol = root.value("symbol", cfg.symbol);
    if (root.contains("data")) {
        const auto& d = root["data"];
        cfg.prices_path = d.value("prices", cfg.prices_path);
        cfg.company_news_path = d.value("company_news", cfg.company_news_path);
        cfg.macro_news_path = d.value("macro_news", cfg.macro_news_path);
        cfg.filings_path = d.value("filings", cfg.filings_path);
        cfg.events_path = d.value("events", cfg.events_path);
        cfg.strict_loading = d.value("strict", cfg.strict_loading);
    }
    auto range = [&](const char* key) -> std::optional<DateRange> {
        if (!root.contains(key)) return std::nullopt;
        return DateRange{Date::parse(root[key].at("start").get<std::string>()),
                         Date::parse(root[key].at("end").get<std::string>())};
    };
    cfg.train_range = range("train");
    cfg.test_range = range("test");
    if (root.contains("horizons")) {
        const auto& h = root["horizons"];
        cfg.horizons.short_days = h.value("short", cfg.horizons.short_days);
        cfg.horizons.mid_days = h.value("mid", cfg.horizons.mid_days);
        cfg.horizons.long_days = h.value("long", cfg.horizons.long_days);
    }
    if (root.contains("risk")) {
        const auto& r = root["risk"];
        cfg.cvar_alpha = r.value("cvar_alpha", cfg.cvar_alpha);
        cfg.cvar_window = r.value("cvar_window", cfg.cvar_window);
        cfg.risk_budget_fraction = r.value("budget_fraction", cfg.risk_budget_fraction);
        cfg.fallback_order_limit = r.value("fallback_order_limit", cfg.fallback_order_limit);
        cfg.allow_short = r.value("allow_short", cfg.allow_short);
        if (r.value("quantity_fallback", std::string("minimum-lot")) == "clamp-to-cap")
            cfg.quantity_fallback = agents::QuantityFallback::clamp_to_cap;
    }
    if (root.contains("provider")) {
        const auto& p = root["provider"];
        const std::string mode = p.value("mode", std::string("stub"));
        if (mode == "stub")
            cfg.provider.mode = agents::ProviderMode::stub;
        else if (mode == "remote")
            cfg.provider.mode = agents::ProviderMode::remote;
        else
            throw UsageError("config: unknown provider mode '" + mode + "'");
        cfg.provider.endpoint = p.value("endpoint", cfg.provider.endpoint);
        cfg.provider.completion_path = p.value("completion_path", cfg.provider.completion_path);
        cfg.provider.model = p.value("model", cfg.provider.model);
        cfg.provider.temperature = p.value("temperature", cfg.provider.temperature);
        cfg.provider.timeout_seconds = p.value("timeout_seconds", cfg.provider.timeout_seconds);
        cfg.provider.max_retries = p.value("max_retries", cfg.provider.max_retries);
        cfg.provider.requests_per_second = p.value("requests_per_second", cfg.provider.requests_per_second);
        cfg.provider.api_key_env = p.value("api_key_env", cfg.provider.api_key_env);
    }
    if (root.contains("memory")) {
        const auto& m = root["memory"];
        cfg.memory.weight_recency = m.value("weight_recency", cfg.memory.weight_recency);
        cfg.memory.weight_importance = m.value("weight_importance", cfg.memory.weight_importance);
        cfg.memory.weight_relevance = m.value("weight_relevance", cfg.memory.weight_relevance);
        cfg.memory.promotion_threshold = m.value("promotion_threshold", cfg.memory.promotion_threshold);
        cfg.memory.capacity_per_layer = m.value("capacity_per_layer", cfg.memory.capacity_per_layer);
        cfg.memory.default_k_per_layer = m.value("k_per_layer", cfg.memory.default_k_per_layer);
        cfg.memory.half_life_short = m.value("half_life_short", cfg.memory.half_life_short);
        cfg.memory.half_life_mid = m.value("half_life_mid", cfg.memory.half_life_mid);
        cfg.memory.half_life_long = m.value("half_life_long", cfg.memory.half_life_long);
        cfg.memory.half_life_reflection = m.value("half_life_reflection", cfg.memory.half_life_reflection);
    }
    cfg.seed = root.value("seed", cfg.seed);
    cfg.initial_equity = root.value("initial_equity", cfg.initial_equity);
    cfg.output_dir = root.value("output_dir", cfg.output_dir);
    cfg.news_batch_size = root.value("news_batch_size", cfg.news_batch_size);
    cfg.risk_free_daily = root.value("risk_free_daily", cfg.risk_free_daily);
    return cfg;
}

}  // namespace finpos::bt
