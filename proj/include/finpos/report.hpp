#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "finpos/date.hpp"
#include "finpos/env.hpp"
#include "finpos/errors.hpp"
#include "finpos/jsonio.hpp"
#include "finpos/market_data.hpp"
#include "finpos/metrics.hpp"

namespace finpos::bt {

// One decision-log line; serialized to decisions.jsonl.
struct DayRecord {
    std::string label;
    Date date;
    env::Direction direction = env::Direction::hold;
    std::int64_t quantity = 0;  // executed (post-clamp)
    std::int64_t position_after = 0;
    double step_return = 0;
    std::string rationale;
    std::string strategic_intent;
    env::MemoryIndices memory_indices;
    std::int64_t max_order_limit = 0;
    bool clamped = false;
    bool cap_violation = false;
};

inline std::string to_jsonl_line(const DayRecord& rec) {
    ojson j;
    j["label"] = rec.label;
    j["date"] = rec.date.to_string();
    j["direction"] = env::to_string(rec.direction);
    j["quantity"] = rec.quantity;
    j["position_after"] = rec.position_after;
    j["r_t"] = fixed6(rec.step_return);
    j["rationale"] = rec.rationale;
    j["strategic_intent"] = rec.strategic_intent;
    ojson mi;
    mi["short"] = rec.memory_indices.short_ids;
    mi["mid"] = rec.memory_indices.mid_ids;
    mi["long"] = rec.memory_indices.long_ids;
    mi["reflection"] = rec.memory_indices.reflection_ids;
    j["memory_indices"] = std::move(mi);
    j["max_order_limit"] = rec.max_order_limit;
    j["clamped"] = rec.clamped;
    j["cap_violation"] = rec.cap_violation;
    return j.dump();
}

inline DayRecord day_record_from_json(const json& j) {
    DayRecord rec;
    rec.label = j.value("label", std::string{});
    rec.date = Date::parse(j.at("date").get<std::string>());
    rec.direction = env::direction_from_string(j.at("direction").get<std::string>());
    rec.quantity = j.at("quantity").get<std::int64_t>();
    rec.position_after = j.at("position_after").get<std::int64_t>();
    rec.step_return = std::stod(j.at("r_t").get<std::string>());
    rec.rationale = j.value("rationale", std::string{});
    rec.strategic_intent = j.value("strategic_intent", std::string{});
    if (j.contains("memory_indices")) {
        const auto& mi = j["memory_indices"];
        rec.memory_indices.short_ids = mi.value("short", std::vector<std::int64_t>{});
        rec.memory_indices.mid_ids = mi.value("mid", std::vector<std::int64_t>{});
        rec.memory_indices.long_ids = mi.value("long", std::vector<std::int64_t>{});
        rec.memory_indices.reflection_ids = mi.value("reflection", std::vector<std::int64_t>{});
    }
    rec.max_order_limit = j.at("max_order_limit").get<std::int64_t>();
    rec.clamped = j.value("clamped", false);
    rec.cap_violation = j.value("cap_violation", false);
    return rec;
}

struct BacktestResult {
    std::string label;
    std::vector<Date> dates;          // decision days (|prices| - 1)
    std::vector<double> prices;       // closes, |decisions| + 1
    std::vector<DayRecord> decisions;
    std::vector<metrics::RewardRecord> rewards;  // train runs only
    std::vector<double> equity;       // |decisions| + 1 points
    std::vector<double> exposure;     // |position| * price / equity, per decision day
    metrics::MetricReport report;
    std::vector<std::string> rendered_prompts;  // captured when requested
};

struct EventMarker {
    Date date;
    std::string text;
};

// events.csv: date,label (no header requirement; a "date,label" header row is
// skipped if present)
inline std::vector<EventMarker> load_events_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open events file: " + path);
    std::vector<EventMarker> out;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line == "date,label") continue;
        auto comma = line.find(',');
        if (comma == std::string::npos) throw DataError(path + ": expected date,label");
        out.push_back({Date::parse(line.substr(0, comma)), line.substr(comma + 1)});
    }
    return out;
}

// ---------------------------------------------------------------------------
// SVG line charts (fixed formatting, deterministic bytes)

namespace svg {

inline std::string coord(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

struct Series {
    std::string name;
    std::vector<double> y;
};

inline std::string line_chart(const std::string& title, const std::vector<Date>& dates,
                              const std::vector<Series>& series,
                              const std::vector<EventMarker>& events) {
    const double width = 880, height = 420;
    const double left = 70, right = 30, top = 40, bottom = 50;
    const double plot_w = width - left - right, plot_h = height - top - bottom;

    double y_min = 0, y_max = 1;
    bool first = true;
    std::size_t n = 0;
    for (const auto& s : series) {
        n = std::max(n, s.y.size());
        for (double v : s.y) {
            if (first) {
                y_min = y_max = v;
                first = false;
            }
            y_min = std::min(y_min, v);
            y_max = std::max(y_max, v);
        }
    }
    if (y_max == y_min) y_max = y_min + 1;
    const double pad = 0.05 * (y_max - y_min);
    y_min -= pad;
    y_max += pad;

    auto x_at = [&](std::size_t i) {
        return left + (n > 1 ? plot_w * static_cast<double>(i) / static_cast<double>(n - 1) : 0.0);
    };
    auto y_at = [&](double v) { return top + plot_h * (1.0 - (v - y_min) / (y_max - y_min)); };

    static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

    std::string out;
    out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + coord(width) + "\" height=\"" +
           coord(height) + "\" viewBox=\"0 0 " + coord(width) + " " + coord(height) + "\">\n";
    out += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out += "<text x=\"" + coord(width / 2) + "\" y=\"22\" text-anchor=\"middle\" font-size=\"16\" "
           "font-family=\"sans-serif\">" + title + "</text>\n";
    out += "<rect x=\"" + coord(left) + "\" y=\"" + coord(top) + "\" width=\"" + coord(plot_w) +
           "\" height=\"" + coord(plot_h) + "\" fill=\"none\" stroke=\"#888\"/>\n";

    // y gridlines + labels
    for (int g = 0; g <= 4; ++g) {
        const double v = y_min + (y_max - y_min) * g / 4.0;
        const double y = y_at(v);
        out += "<line x1=\"" + coord(left) + "\" y1=\"" + coord(y) + "\" x2=\"" + coord(left + plot_w) +
               "\" y2=\"" + coord(y) + "\" stroke=\"#ddd\"/>\n";
        out += "<text x=\"" + coord(left - 6) + "\" y=\"" + coord(y + 4) +
               "\" text-anchor=\"end\" font-size=\"11\" font-family=\"sans-serif\">" + fixed6(v).substr(0, fixed6(v).find('.') + 4) +
               "</text>\n";
    }
    // x labels: first / middle / last date
    if (!dates.empty()) {
        for (std::size_t i : {std::size_t{0}, dates.size() / 2, dates.size() - 1}) {
            out += "<text x=\"" + coord(x_at(i)) + "\" y=\"" + coord(top + plot_h + 18) +
                   "\" text-anchor=\"middle\" font-size=\"11\" font-family=\"sans-serif\">" +
                   dates[i].to_string() + "</text>\n";
        }
    }
    // event markers
    for (const auto& ev : events) {
        for (std::size_t i = 0; i < dates.size(); ++i) {
            if (dates[i] >= ev.date) {
                out += "<line x1=\"" + coord(x_at(i)) + "\" y1=\"" + coord(top) + "\" x2=\"" +
                       coord(x_at(i)) + "\" y2=\"" + coord(top + plot_h) +
                       "\" stroke=\"#aaa\" stroke-dasharray=\"4,3\"/>\n";
                out += "<text x=\"" + coord(x_at(i) + 3) + "\" y=\"" + coord(top + 12) +
                       "\" font-size=\"10\" font-family=\"sans-serif\" fill=\"#666\">" + ev.text +
                       "</text>\n";
                break;
            }
        }
    }
    // series
    for (std::size_t si = 0; si < series.size(); ++si) {
        const auto& s = series[si];
        std::string points;
        for (std::size_t i = 0; i < s.y.size(); ++i)
            points += coord(x_at(i)) + "," + coord(y_at(s.y[i])) + " ";
        out += "<polyline fill=\"none\" stroke=\"" + std::string(palette[si % 6]) +
               "\" stroke-width=\"1.5\" points=\"" + points + "\"/>\n";
        out += "<text x=\"" + coord(left + 8) + "\" y=\"" + coord(top + 16 + 14 * static_cast<double>(si)) +
               "\" font-size=\"12\" font-family=\"sans-serif\" fill=\"" + palette[si % 6] + "\">" +
               s.name + "</text>\n";
    }
    out += "</svg>\n";
    return out;
}

}  // namespace svg

// ---------------------------------------------------------------------------
// emit_report: report.json + decisions.jsonl + returns.svg + exposure.svg

inline void emit_report(const std::vector<BacktestResult>& results, const std::string& out_dir,
                        const std::vector<EventMarker>& events = {}) {
    if (results.empty()) throw DataError("emit_report: need at least one result");
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw DataError("emit_report: cannot create output directory " + out_dir);

    // report.json — manual emission for stable key order and fixed precision
    std::string report = "{\n  \"schema_version\": 1,\n  \"results\": {\n";
    for (std::size_t i = 0; i < results.size(); ++i) {
        report += "    \"" + results[i].label + "\": " +
                  metrics::to_stable_json(results[i].report, 2, 4);
        report += (i + 1 < results.size()) ? ",\n" : "\n";
    }
    report += "  }\n}\n";
    write_file((fs::path(out_dir) / "report.json").string(), report);

    std::string log;
    for (const auto& result : results)
        for (const auto& rec : result.decisions) log += to_jsonl_line(rec) + "\n";
    write_file((fs::path(out_dir) / "decisions.jsonl").string(), log);

    // cumulative-return curves on shared axes
    std::vector<svg::Series> return_series, exposure_series;
    const auto& dates = results.front().dates;
    for (const auto& result : results) {
        svg::Series s{result.label, {}};
        double cum = 0;
        s.y.push_back(0);
        for (const auto& rec : result.decisions) {
            cum += rec.step_return;
            s.y.push_back(100.0 * cum);
        }
        return_series.push_back(std::move(s));
        exposure_series.push_back(svg::Series{result.label, result.exposure});
    }
    write_file((fs::path(out_dir) / "returns.svg").string(),
               svg::line_chart("Cumulative return (%)", dates, return_series, events));
    write_file((fs::path(out_dir) / "exposure.svg").string(),
               svg::line_chart("Exposure risk (|position| x price / equity)", dates, exposure_series,
                               events));
}

// ---------------------------------------------------------------------------
// auditor: recompute everything from the decision log

struct AuditReport {
    std::size_t over_cap = 0;
    std::size_t negative_positions = 0;
    std::size_t position_mismatches = 0;
    metrics::MetricReport recomputed;
};

inline AuditReport audit(const std::vector<DayRecord>& log, const std::vector<double>& prices,
                         double initial_equity, double cvar_alpha = 0.95, int cvar_window = 60) {
    if (log.size() + 1 != prices.size())
        throw DataError("audit: |log| must equal |prices| - 1");
    AuditReport out;
    std::int64_t position = 0;
    std::vector<std::int64_t> positions;
    for (const auto& rec : log) {
        if (rec.quantity > rec.max_order_limit) ++out.over_cap;
        position += static_cast<std::int64_t>(rec.direction) * rec.quantity;
        if (position != rec.position_after) ++out.position_mismatches;
        if (position < 0) ++out.negative_positions;
        positions.push_back(position);
    }
    out.recomputed = metrics::compute_report(positions, prices, initial_equity, cvar_alpha, cvar_window);
    return out;
}

}  // namespace finpos::bt
