#pragma once

#include <cstdio>
#include <filesystem>
#include <string>

#define CPPHTTPLIB_NO_EXCEPTIONS 1
#include <httplib.h>

#include "finpos/date.hpp"
#include "finpos/errors.hpp"
#include "finpos/jsonio.hpp"

namespace finpos::bt {

struct FetchConfig {
    std::string endpoint;  // e.g. http://localhost:8089
    std::string symbol;
    Date start, end;
    std::string out_dir = "data";
    int timeout_seconds = 30;
};

namespace detail {

inline json fetch_json(const FetchConfig& cfg, const std::string& path) {
    httplib::Client client(cfg.endpoint);
    client.set_connection_timeout(cfg.timeout_seconds);
    client.set_read_timeout(cfg.timeout_seconds);
    auto res = client.Get(path);
    if (!res) throw ProviderError("fetch: no response from " + cfg.endpoint + path);
    if (res->status == 429) {
        int retry_after = 0;
        if (res->has_header("Retry-After"))
            retry_after = std::atoi(res->get_header_value("Retry-After").c_str());
        throw RateLimitError("fetch: rate limited by " + cfg.endpoint + path, retry_after);
    }
    if (res->status != 200)
        throw ProviderError("fetch: HTTP " + std::to_string(res->status) + " from " + path);
    try {
        return json::parse(res->body);
    } catch (const json::parse_error& e) {
        throw ProviderError(std::string("fetch: malformed JSON payload: ") + e.what());
    }
}

// full content lands or nothing does — build in memory, then one atomic rename
inline void write_atomic(const std::string& path, const std::string& content) {
    namespace fs = std::filesystem;
    const std::string tmp = path + ".tmp";
    write_file(tmp, content);
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) {
        fs::remove(tmp);
        throw DataError("fetch: cannot write " + path + ": " + ec.message());
    }
}

inline std::string number_text(const json& v) { return v.dump(); }

}  // namespace detail

struct FetchResult {
    std::size_t price_rows = 0;
    std::size_t company_news = 0;
    std::size_t macro_news = 0;
    std::size_t filings = 0;
};

// Pulls prices, news, and filings from a JSON HTTP endpoint and persists them
// as the canonical replay fixtures (prices.csv + *.jsonl). The backtester only
// ever reads these files, never the network.
inline FetchResult fetch_remote(const FetchConfig& cfg) {
    namespace fs = std::filesystem;
    if (cfg.endpoint.empty()) throw UsageError("fetch: endpoint is required");
    if (cfg.symbol.empty()) throw UsageError("fetch: symbol is required");
    fs::create_directories(cfg.out_dir);
    const std::string query =
        "?symbol=" + cfg.symbol + "&start=" + cfg.start.to_string() + "&end=" + cfg.end.to_string();
    FetchResult out;

    {
        json payload = detail::fetch_json(cfg, "/prices" + query);
        if (!payload.is_array()) throw ProviderError("fetch: /prices payload must be an array");
        std::string csv = "date,open,high,low,close,volume\n";
        for (const auto& row : payload) {
            try {
                csv += row.at("date").get<std::string>() + "," +
                       detail::number_text(row.at("open")) + "," +
                       detail::number_text(row.at("high")) + "," +
                       detail::number_text(row.at("low")) + "," +
                       detail::number_text(row.at("close")) + "," +
                       detail::number_text(row.at("volume")) + "\n";
            } catch (const json::exception& e) {
                throw ProviderError(std::string("fetch: bad price record: ") + e.what());
            }
            ++out.price_rows;
        }
        detail::write_atomic((fs::path(cfg.out_dir) / "prices.csv").string(), csv);
    }

    auto fetch_lines = [&](const std::string& path, const std::string& file,
                           std::size_t& counter) {
        json payload = detail::fetch_json(cfg, path + query);
        if (!payload.is_array())
            throw ProviderError("fetch: " + path + " payload must be an array");
        std::string lines;
        for (const auto& item : payload) {
            if (!item.is_object()) throw ProviderError("fetch: " + path + " items must be objects");
            lines += item.dump() + "\n";
            ++counter;
        }
        detail::write_atomic((fs::path(cfg.out_dir) / file).string(), lines);
    };
    fetch_lines("/news/company", "company_news.jsonl", out.company_news);
    fetch_lines("/news/macro", "macro_news.jsonl", out.macro_news);
    fetch_lines("/filings", "filings.jsonl", out.filings);
    return out;
}

}  // namespace finpos::bt
