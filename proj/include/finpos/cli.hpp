#pragma once

#include <filesystem>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "finpos/backtest.hpp"
#include "finpos/config.hpp"
#include "finpos/fetch.hpp"
#include "finpos/provider_remote.hpp"
#include "finpos/report.hpp"

namespace finpos::bt {

namespace detail {

struct CliOverrides {
    std::string config_path;
    std::string symbol, prices, company_news, macro_news, filings, events, out_dir;
    std::string provider_mode, endpoint, model;
    std::string train_start, train_end, test_start, test_end;
    std::string memory_in, memory_out;
    std::int64_t seed = -1;
    double initial_equity = -1;
    bool json_errors = false;
};

inline void add_common_options(CLI::App* cmd, CliOverrides& o) {
    cmd->add_option("--config", o.config_path, "JSON config file");
    cmd->add_option("--symbol", o.symbol, "ticker symbol");
    cmd->add_option("--prices", o.prices, "price CSV path");
    cmd->add_option("--company-news", o.company_news, "company news JSONL path");
    cmd->add_option("--macro-news", o.macro_news, "macro news JSONL path");
    cmd->add_option("--filings", o.filings, "filings JSONL path");
    cmd->add_option("--events", o.events, "event markers CSV for charts");
    cmd->add_option("--out", o.out_dir, "output directory");
    cmd->add_option("--provider", o.provider_mode, "provider mode: stub | remote");
    cmd->add_option("--endpoint", o.endpoint, "remote provider endpoint");
    cmd->add_option("--model", o.model, "remote provider model id");
    cmd->add_option("--train-start", o.train_start, "train range start (YYYY-MM-DD)");
    cmd->add_option("--train-end", o.train_end, "train range end");
    cmd->add_option("--test-start", o.test_start, "test range start");
    cmd->add_option("--test-end", o.test_end, "test range end");
    cmd->add_option("--seed", o.seed, "RNG seed");
    cmd->add_option("--initial-equity", o.initial_equity, "starting account equity");
}

// precedence: flags > config file > built-in defaults
inline RunConfig resolve_config(const CliOverrides& o) {
    RunConfig cfg = o.config_path.empty() ? RunConfig{} : load_config(o.config_path);
    if (!o.symbol.empty()) cfg.symbol = o.symbol;
    if (!o.prices.empty()) cfg.prices_path = o.prices;
    if (!o.company_news.empty()) cfg.company_news_path = o.company_news;
    if (!o.macro_news.empty()) cfg.macro_news_path = o.macro_news;
    if (!o.filings.empty()) cfg.filings_path = o.filings;
    if (!o.events.empty()) cfg.events_path = o.events;
    if (!o.out_dir.empty()) cfg.output_dir = o.out_dir;
    if (!o.provider_mode.empty()) {
        if (o.provider_mode == "stub") cfg.provider.mode = agents::ProviderMode::stub;
        else if (o.provider_mode == "remote") cfg.provider.mode = agents::ProviderMode::remote;
        else throw UsageError("unknown provider mode '" + o.provider_mode + "'");
    }
    if (!o.endpoint.empty()) cfg.provider.endpoint = o.endpoint;
    if (!o.model.empty()) cfg.provider.model = o.model;
    if (!o.train_start.empty() || !o.train_end.empty()) {
        DateRange r = cfg.train_range.value_or(DateRange{});
        if (!o.train_start.empty()) r.start = Date::parse(o.train_start);
        if (!o.train_end.empty()) r.end = Date::parse(o.train_end);
        cfg.train_range = r;
    }
    if (!o.test_start.empty() || !o.test_end.empty()) {
        DateRange r = cfg.test_range.value_or(DateRange{});
        if (!o.test_start.empty()) r.start = Date::parse(o.test_start);
        if (!o.test_end.empty()) r.end = Date::parse(o.test_end);
        cfg.test_range = r;
    }
    if (o.seed >= 0) cfg.seed = static_cast<std::uint64_t>(o.seed);
    if (o.initial_equity > 0) cfg.initial_equity = o.initial_equity;
    cfg.validate();
    return cfg;
}

inline std::vector<EventMarker> load_events(const RunConfig& cfg) {
    if (cfg.events_path.empty()) return {};
    return load_events_csv(cfg.events_path);
}

inline BacktestResult run_agent(const RunConfig& cfg, const std::string& memory_in,
                                const std::string& memory_out, bool capture_prompts = false) {
    if (!cfg.test_range) throw UsageError("backtest: a test range is required");
    agents::PromptRegistry registry;
    auto provider = agents::make_provider(cfg.provider, cfg.seed);

    std::string snapshot;
    if (!memory_in.empty()) snapshot = read_file(memory_in);
    std::vector<metrics::RewardRecord> train_rewards;
    if (cfg.train_range) {
        const auto train_days = load_replay(cfg, *cfg.train_range);
        auto train = run_train_with(cfg, train_days, data::closes(train_days), registry, *provider);
        snapshot = train.memory_snapshot;
        train_rewards = std::move(train.rewards);
    }
    if (!memory_out.empty()) write_file(memory_out, snapshot);

    const auto test_days = load_replay(cfg, *cfg.test_range);
    auto result = run_test_with(cfg, test_days, data::closes(test_days), registry, *provider,
                                snapshot, capture_prompts);
    result.rewards = std::move(train_rewards);
    return result;
}

inline int report_error(const std::exception& e, int code, const char* kind, bool json_errors,
                        std::ostream& err) {
    if (json_errors) {
        ojson j;
        j["error"] = kind;
        j["message"] = e.what();
        j["exit_code"] = code;
        err << j.dump() << "\n";
    } else {
        err << "error (" << kind << "): " << e.what() << "\n";
    }
    return code;
}

}  // namespace detail

// The whole CLI as a callable, so tests can run it in-process.
inline int run_cli(int argc, const char* const* argv, std::ostream& out = std::cout,
                   std::ostream& err = std::cerr) {
    CLI::App app{"position-aware single-asset daily backtester"};
    app.require_subcommand(1);
    detail::CliOverrides o;
    app.add_flag("--json-errors", o.json_errors, "emit errors as JSON on stderr");

    auto* ingest = app.add_subcommand("ingest", "fetch remote data into replay fixtures");
    FetchConfig fetch_cfg;
    std::string fetch_start, fetch_end;
    ingest->add_option("--endpoint", fetch_cfg.endpoint, "data API endpoint")->required();
    ingest->add_option("--symbol", fetch_cfg.symbol, "ticker symbol")->required();
    ingest->add_option("--start", fetch_start, "range start (YYYY-MM-DD)")->required();
    ingest->add_option("--end", fetch_end, "range end")->required();
    ingest->add_option("--out", fetch_cfg.out_dir, "output directory for fixtures");

    auto* backtest = app.add_subcommand("backtest", "run the agent over train + test windows");
    detail::add_common_options(backtest, o);
    backtest->add_option("--memory-in", o.memory_in, "restore memory snapshot before the test run");
    backtest->add_option("--memory-out", o.memory_out, "write the post-train memory snapshot");

    auto* baseline = app.add_subcommand("baseline", "run a rule-based baseline");
    detail::add_common_options(baseline, o);
    std::string baseline_kind;
    baseline->add_option("--kind", baseline_kind, "buy-hold | random | macd | rsi")->required();

    auto* compare = app.add_subcommand("compare", "run the agent plus named baselines");
    detail::add_common_options(compare, o);
    std::string baseline_list;
    compare->add_option("--baselines", baseline_list, "comma-separated baseline kinds");
    compare->add_option("--memory-in", o.memory_in, "restore memory snapshot before the test run");
    compare->add_option("--memory-out", o.memory_out, "write the post-train memory snapshot");

    auto* report_cmd = app.add_subcommand("report", "recompute the report from a decision log");
    detail::add_common_options(report_cmd, o);
    std::string log_path;
    report_cmd->add_option("--log", log_path, "decisions.jsonl from a previous run")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        app.exit(e, out, err);
        return 1;
    }

    try {
        if (*ingest) {
            fetch_cfg.start = Date::parse(fetch_start);
            fetch_cfg.end = Date::parse(fetch_end);
            auto r = fetch_remote(fetch_cfg);
            out << "ingested " << r.price_rows << " price rows, " << r.company_news
                << " company news, " << r.macro_news << " macro news, " << r.filings
                << " filings into " << fetch_cfg.out_dir << "\n";
            return 0;
        }

        const RunConfig cfg = detail::resolve_config(o);
        const auto events = detail::load_events(cfg);

        if (*backtest) {
            auto result = detail::run_agent(cfg, o.memory_in, o.memory_out);
            emit_report({result}, cfg.output_dir, events);
            out << "backtest done: " << result.decisions.size() << " decision days, CR% "
                << fixed6(result.report.cr_pct) << "; artifacts in " << cfg.output_dir << "\n";
            return 0;
        }
        if (*baseline) {
            auto result = run_baseline(baseline_from_string(baseline_kind), cfg);
            emit_report({result}, cfg.output_dir, events);
            out << "baseline " << result.label << ": CR% " << fixed6(result.report.cr_pct)
                << "; artifacts in " << cfg.output_dir << "\n";
            return 0;
        }
        if (*compare) {
            std::vector<BacktestResult> results;
            results.push_back(detail::run_agent(cfg, o.memory_in, o.memory_out));
            std::string rest = baseline_list;
            while (!rest.empty()) {
                const auto comma = rest.find(',');
                const std::string kind = rest.substr(0, comma);
                rest = comma == std::string::npos ? "" : rest.substr(comma + 1);
                if (!kind.empty())
                    results.push_back(run_baseline(baseline_from_string(kind), cfg));
            }
            emit_report(results, cfg.output_dir, events);
            out << "compared " << results.size() << " strategies; artifacts in " << cfg.output_dir
                << "\n";
            return 0;
        }
        if (*report_cmd) {
            if (!cfg.test_range) throw UsageError("report: a test range is required");
            const auto days = load_replay(cfg, *cfg.test_range);
            const auto closes = data::closes(days);
            std::vector<DayRecord> log;
            for_each_jsonl_line(log_path, [&](std::size_t, const json& j) {
                log.push_back(day_record_from_json(j));
            });
            auto audited = audit(log, closes, cfg.initial_equity, cfg.cvar_alpha, cfg.cvar_window);
            if (audited.over_cap || audited.position_mismatches)
                throw DataError("report: decision log fails the audit (" +
                                std::to_string(audited.over_cap) + " over-cap, " +
                                std::to_string(audited.position_mismatches) +
                                " position mismatches)");
            BacktestResult result;
            result.label = log.empty() ? cfg.symbol : log.front().label;
            result.prices = closes;
            result.decisions = log;
            std::vector<double> step_returns;
            for (const auto& rec : log) {
                result.dates.push_back(rec.date);
                step_returns.push_back(rec.step_return);
            }
            result.equity = env::build_equity_curve(step_returns, cfg.initial_equity).values;
            for (std::size_t t = 0; t < log.size(); ++t)
                result.exposure.push_back(std::abs(static_cast<double>(log[t].position_after)) *
                                          closes[t] / result.equity[t]);
            result.report = audited.recomputed;
            emit_report({result}, cfg.output_dir, events);
            out << "report rebuilt from " << log.size() << " log lines; artifacts in "
                << cfg.output_dir << "\n";
            return 0;
        }
        throw UsageError("no subcommand selected");
    } catch (const UsageError& e) {
        return detail::report_error(e, 1, "usage", o.json_errors, err);
    } catch (const RateLimitError& e) {
        return detail::report_error(e, 3, "rate-limit", o.json_errors, err);
    } catch (const ProviderError& e) {
        return detail::report_error(e, 3, "provider", o.json_errors, err);
    } catch (const DataError& e) {
        return detail::report_error(e, 2, "data", o.json_errors, err);
    }
}

}  // namespace finpos::bt
