#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "finpos/date.hpp"
#include "finpos/errors.hpp"
#include "finpos/jsonio.hpp"

namespace finpos::data {

struct PriceBar {
    Date date;
    double open = 0, high = 0, low = 0, close = 0;
    double volume = 0;

    void validate(const std::string& where) const {
        if (close <= 0) throw DataError(where + ": non-positive close");
        if (open <= 0 || high <= 0 || low <= 0) throw DataError(where + ": non-positive price");
        if (volume < 0) throw DataError(where + ": negative volume");
        if (low > std::min(open, close) || high < std::max(open, close))
            throw DataError(where + ": OHLC range violation (low/high do not bracket open/close)");
    }
};

enum class NewsScope { company, macro };

inline std::string to_string(NewsScope s) { return s == NewsScope::company ? "company" : "macro"; }

struct NewsItem {
    std::string id;
    Date date;
    std::string headline;
    std::string summary;
    NewsScope scope = NewsScope::company;
    std::string symbol;  // required when scope == company
};

enum class FilingKind { annual_10k, quarterly_10q };

inline std::string to_string(FilingKind k) {
    return k == FilingKind::annual_10k ? "annual-10K" : "quarterly-10Q";
}

struct FilingDoc {
    std::string symbol;
    Date date;
    FilingKind kind = FilingKind::quarterly_10q;
    std::string body;
};

struct MarketDay {
    Date date;
    PriceBar bar;
    std::vector<NewsItem> company_news;
    std::vector<NewsItem> macro_news;
    std::vector<FilingDoc> filings;
};

struct LoadStats {
    std::size_t accepted = 0;
    std::size_t rejected = 0;  // lenient mode only
};

namespace detail {

inline std::vector<std::string> split_csv_row(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::stringstream ss(line);
    while (std::getline(ss, field, ',')) out.push_back(field);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

inline double parse_number(const std::string& s, const std::string& where) {
    try {
        std::size_t pos = 0;
        double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument("trailing chars");
        return v;
    } catch (const std::exception&) {
        throw DataError(where + ": malformed number '" + s + "'");
    }
}

}  // namespace detail

// CSV header must be exactly date,open,high,low,close,volume.
inline std::vector<PriceBar> load_price_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open price file: " + path);
    std::string line;
    if (!std::getline(in, line)) throw DataError(path + ": empty file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "date,open,high,low,close,volume")
        throw DataError(path + ": bad header '" + line + "' (expected date,open,high,low,close,volume)");

    std::vector<PriceBar> bars;
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const std::string where = path + " row " + std::to_string(row);
        auto fields = detail::split_csv_row(line);
        if (fields.size() != 6) throw DataError(where + ": expected 6 fields, got " + std::to_string(fields.size()));
        PriceBar bar;
        bar.date = Date::parse(fields[0]);
        bar.open = detail::parse_number(fields[1], where);
        bar.high = detail::parse_number(fields[2], where);
        bar.low = detail::parse_number(fields[3], where);
        bar.close = detail::parse_number(fields[4], where);
        bar.volume = detail::parse_number(fields[5], where);
        bar.validate(where);
        if (!bars.empty() && bar.date <= bars.back().date)
            throw DataError(where + ": non-monotone dates (" + bar.date.to_string() + " after " +
                            bars.back().date.to_string() + ")");
        bars.push_back(bar);
    }
    return bars;
}

namespace detail {

inline std::string require_string(const json& rec, const char* field, const std::string& where) {
    if (!rec.contains(field) || !rec[field].is_string())
        throw DataError(where + ": missing required field '" + std::string(field) + "'");
    return rec[field].get<std::string>();
}

inline NewsItem parse_news(const json& rec, const std::string& where) {
    NewsItem item;
    item.id = require_string(rec, "id", where);
    item.date = Date::parse(require_string(rec, "date", where));
    item.headline = require_string(rec, "headline", where);
    if (item.headline.empty()) throw DataError(where + ": empty headline");
    item.summary = rec.value("summary", std::string{});
    const std::string scope = require_string(rec, "scope", where);
    if (scope == "company")
        item.scope = NewsScope::company;
    else if (scope == "macro")
        item.scope = NewsScope::macro;
    else
        throw DataError(where + ": unknown scope '" + scope + "'");
    item.symbol = rec.value("symbol", std::string{});
    if (item.scope == NewsScope::company && item.symbol.empty())
        throw DataError(where + ": company-scope news requires 'symbol'");
    return item;
}

inline FilingDoc parse_filing(const json& rec, const std::string& where) {
    FilingDoc doc;
    doc.symbol = require_string(rec, "symbol", where);
    doc.date = Date::parse(require_string(rec, "date", where));
    const std::string kind = require_string(rec, "kind", where);
    if (kind == "annual-10K")
        doc.kind = FilingKind::annual_10k;
    else if (kind == "quarterly-10Q")
        doc.kind = FilingKind::quarterly_10q;
    else
        throw DataError(where + ": unknown filing kind '" + kind + "'");
    doc.body = require_string(rec, "body", where);
    return doc;
}

}  // namespace detail

// strict=true (default) fails on the first bad record; lenient mode drops bad
// records and counts them in stats.rejected.
inline std::vector<NewsItem> load_news_jsonl(const std::string& path, bool strict = true,
                                             LoadStats* stats = nullptr) {
    std::vector<NewsItem> out;
    LoadStats local;
    for_each_jsonl_line(path, [&](std::size_t lineno, const json& rec) {
        const std::string where = path + ":" + std::to_string(lineno);
        try {
            out.push_back(detail::parse_news(rec, where));
            ++local.accepted;
        } catch (const DataError&) {
            if (strict) throw;
            ++local.rejected;
        }
    });
    if (stats) *stats = local;
    return out;
}

inline std::vector<FilingDoc> load_filings_jsonl(const std::string& path, bool strict = true,
                                                 LoadStats* stats = nullptr) {
    std::vector<FilingDoc> out;
    LoadStats local;
    for_each_jsonl_line(path, [&](std::size_t lineno, const json& rec) {
        const std::string where = path + ":" + std::to_string(lineno);
        try {
            out.push_back(detail::parse_filing(rec, where));
            ++local.accepted;
        } catch (const DataError&) {
            if (strict) throw;
            ++local.rejected;
        }
    });
    if (stats) *stats = local;
    return out;
}

struct ReplayStats {
    std::size_t items_in = 0;
    std::size_t items_attached = 0;
    std::size_t items_dropped_after_range = 0;
};

// Buckets every dated item onto the first trading day with date >= item date.
// Items after the last bar are dropped (counted). Items before the first bar
// attach to the first trading day.
inline std::vector<MarketDay> build_replay(const std::vector<PriceBar>& bars,
                                           const std::vector<NewsItem>& news,
                                           const std::vector<FilingDoc>& filings,
                                           ReplayStats* stats = nullptr) {
    std::vector<MarketDay> days;
    days.reserve(bars.size());
    for (std::size_t i = 0; i < bars.size(); ++i) {
        bars[i].validate("replay bar " + std::to_string(i));
        if (i > 0 && bars[i].date <= bars[i - 1].date)
            throw DataError("replay: non-monotone bar dates at index " + std::to_string(i));
        days.push_back(MarketDay{bars[i].date, bars[i], {}, {}, {}});
    }

    ReplayStats local;
    auto day_for = [&](Date d) -> MarketDay* {
        auto it = std::lower_bound(days.begin(), days.end(), d,
                                   [](const MarketDay& md, Date date) { return md.date < date; });
        return it == days.end() ? nullptr : &*it;
    };

    for (const auto& item : news) {
        ++local.items_in;
        if (MarketDay* d = day_for(item.date)) {
            (item.scope == NewsScope::company ? d->company_news : d->macro_news).push_back(item);
            ++local.items_attached;
        } else {
            ++local.items_dropped_after_range;
        }
    }
    for (const auto& doc : filings) {
        ++local.items_in;
        if (MarketDay* d = day_for(doc.date)) {
            d->filings.push_back(doc);
            ++local.items_attached;
        } else {
            ++local.items_dropped_after_range;
        }
    }

    if (local.items_in != local.items_attached + local.items_dropped_after_range)
        throw DataError("replay: item conservation violated");
    if (stats) *stats = local;
    return days;
}

inline std::vector<double> closes(const std::vector<MarketDay>& days) {
    std::vector<double> out;
    out.reserve(days.size());
    for (const auto& d : days) out.push_back(d.bar.close);
    return out;
}

}  // namespace finpos::data
