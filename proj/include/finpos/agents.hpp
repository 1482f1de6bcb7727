#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "finpos/env.hpp"
#include "finpos/errors.hpp"
#include "finpos/jsonio.hpp"
#include "finpos/market_data.hpp"
#include "finpos/memory.hpp"
#include "finpos/prompts.hpp"
#include "finpos/provider.hpp"

namespace finpos::agents {

// ---------------------------------------------------------------------------
// analysis output

enum class HorizonLabel { positive, negative, neutral };

inline std::string to_string(HorizonLabel l) {
    switch (l) {
        case HorizonLabel::positive: return "positive";
        case HorizonLabel::negative: return "negative";
        default: return "neutral";
    }
}

struct AnalysisInsight {
    mem::SourceKind source_kind = mem::SourceKind::company_news;
    std::string insight;
    HorizonLabel short_term_label = HorizonLabel::neutral;
    HorizonLabel mid_long_label = HorizonLabel::neutral;
    std::string relevance = "medium";  // high | medium | low
    std::string reason;
    std::string relation_type;  // macro news only: direct | indirect | none
    std::optional<std::array<double, 3>> sentiment;  // positive/neutral/negative, sums to 1

    void validate() const {
        if (relevance != "high" && relevance != "medium" && relevance != "low")
            throw DataError("invalid relevance label '" + relevance + "'");
        if (sentiment) {
            const double sum = (*sentiment)[0] + (*sentiment)[1] + (*sentiment)[2];
            if (std::abs(sum - 1.0) > 1e-9)
                throw DataError("sentiment triple must sum to 1");
        }
    }
};

// ---------------------------------------------------------------------------
// momentum

struct MomentumSummary {
    double d5 = 0, d10 = 0, d20 = 0;
    double z5 = 0, z10 = 0, z20 = 0;

    std::string to_text() const {
        return "Momentum summary: 5-day delta " + fixed6(d5) + " (z " + fixed6(z5) +
               "); 10-day delta " + fixed6(d10) + " (z " + fixed6(z10) + "); 20-day delta " +
               fixed6(d20) + " (z " + fixed6(z20) + ").";
    }
};

// Backward-looking close deltas over 5/10/20 trading days with z-scores
// against the trailing daily-delta volatility. Uses closes[0..t] only.
inline MomentumSummary momentum_summary(const std::vector<double>& closes, std::size_t t) {
    if (t >= closes.size()) throw DataError("momentum_summary: t out of range");
    auto delta = [&](std::size_t h) {
        const std::size_t from = t >= h ? t - h : 0;
        return closes[t] - closes[from];
    };
    // daily-delta stdev over up to the last 20 days
    std::vector<double> daily;
    const std::size_t from = t >= 20 ? t - 20 : 0;
    for (std::size_t i = from; i < t; ++i) daily.push_back(closes[i + 1] - closes[i]);
    double stdev = 0;
    if (daily.size() >= 2) {
        double mean = 0;
        for (double d : daily) mean += d;
        mean /= static_cast<double>(daily.size());
        double ss = 0;
        for (double d : daily) ss += (d - mean) * (d - mean);
        stdev = std::sqrt(ss / static_cast<double>(daily.size() - 1));
    }
    auto zscore = [&](double d, std::size_t h) {
        if (stdev > 0) return d / (stdev * std::sqrt(static_cast<double>(h)));
        if (d > 0) return 3.0;   // constant-slope series: saturate the signal
        if (d < 0) return -3.0;
        return 0.0;
    };
    MomentumSummary m;
    m.d5 = delta(5);
    m.d10 = delta(10);
    m.d20 = delta(20);
    m.z5 = zscore(m.d5, 5);
    m.z10 = zscore(m.d10, 10);
    m.z20 = zscore(m.d20, 20);
    return m;
}

// ---------------------------------------------------------------------------
// investment info assembly

inline std::string working_memory_text(const mem::WorkingSet& ws) {
    std::string out = "Working memory:\n";
    auto section = [&](const char* header, const std::vector<mem::WorkingSetEntry>& entries) {
        out += std::string("[") + header + "]\n";
        if (entries.empty()) out += "(empty)\n";
        for (const auto& e : entries) {
            std::string content = e.content;
            std::replace(content.begin(), content.end(), '\n', ' ');
            out += "id=" + std::to_string(e.id) + " (score " + fixed6(e.score) + "): " + content + "\n";
        }
    };
    section("short-memory", ws.short_term);
    section("mid-memory", ws.mid_term);
    section("long-memory", ws.long_term);
    section("reflection-memory", ws.reflection);
    return out;
}

struct TrainBindings {
    double delta_t1 = 0, delta_t7 = 0, delta_t30 = 0;  // future trading-day deltas
    double previous_reward = 0;
};

const inline std::string kSentimentExplanation =
    "Positive news about a company may boost investor confidence and trigger buying activity, "
    "pushing the stock price upward; negative news tends to dampen sentiment, leading to selling "
    "pressure and price declines. News related to competitors or the broader industry can "
    "indirectly affect the target stock's performance. Sentiment scores (positive, neutral, "
    "negative) represent the distribution across these categories (summing to 1) and, together "
    "with importance and timeliness indicators, help assess the market impact and validity of "
    "the information.\n";

const inline std::string kMomentumExplanation =
    "The following summarizes recent price movements, i.e., momentum. Momentum reflects the idea "
    "that stocks performing strongly in the short term often continue rising, while weak "
    "performers are more likely to keep declining.\n";

// In test mode this text must carry no future-price information; see
// contains_future_bindings for the audit predicate.
inline std::string build_investment_info(const std::string& symbol, Date date,
                                         const MomentumSummary& momentum,
                                         const env::AccountState& account,
                                         const mem::WorkingSet& working_set, bool train,
                                         const TrainBindings* train_bindings) {
    std::string info;
    if (train) {
        if (!train_bindings) throw DataError("train mode requires train bindings");
        info += "The current date is " + date.to_string() +
                ". The observed market facts are as follows: For " + symbol +
                ", the price difference between the next and current trading day is " +
                fixed6(train_bindings->delta_t1) + "; the 7-day difference is " +
                fixed6(train_bindings->delta_t7) + "; the 30-day difference is " +
                fixed6(train_bindings->delta_t30) + ". Your decision return is " +
                fixed6(train_bindings->previous_reward) + ".\n\n";
    } else {
        info += "The stock under analysis is " + symbol + ", and the current date is " +
                date.to_string() + ".\n\n";
    }
    info += kMomentumExplanation;
    info += momentum.to_text() + "\n\n";
    info += kSentimentExplanation + "\n";
    info += "Account state: position " + std::to_string(account.position) +
            " shares, cumulative log return " + fixed6(account.cumulative_log_return) + ".\n\n";
    info += working_memory_text(working_set);
    return info;
}

// ---------------------------------------------------------------------------
// signal filtering and analysis

struct SignalItem {
    std::string id;
    std::string text;
};

struct FilterOutcome {
    // indices into the input list that survived filtering
    std::vector<std::size_t> kept_indices;
    // ranked key points; one entry per provider call (per item, or per batch
    // for company news)
    std::vector<std::string> key_points;
    std::vector<std::string> relation_types;  // macro only, parallel to kept_indices
    std::size_t provider_calls = 0;
    std::size_t dropped = 0;
};

inline FilterOutcome filter_signal(const std::vector<SignalItem>& items,
                                   const std::string& template_id, const PromptRegistry& registry,
                                   Provider& provider, const std::string& symbol,
                                   int batch_size = 4) {
    FilterOutcome out;
    if (items.empty()) return out;
    if (batch_size < 1) throw DataError("filter_signal: batch size must be >= 1");

    auto call = [&](const std::map<std::string, std::string>& bindings, const std::string& item_id,
                    const ResponseSchema& schema) {
        const std::string prompt = registry.render(template_id, bindings);
        ++out.provider_calls;
        try {
            return parse_response(provider.complete(prompt), schema);
        } catch (const ProviderError& e) {
            throw ProviderError("item '" + item_id + "': " + e.what());
        }
    };

    if (template_id == "filter-macro") {
        for (std::size_t i = 0; i < items.size(); ++i) {
            json resp = call({{"symbol", symbol}, {"agent_scratch", items[i].text}}, items[i].id,
                             schemas::macro_relation());
            const std::string relation = resp["relation_type"].get<std::string>();
            if (relation == "none") {
                ++out.dropped;
                continue;
            }
            out.kept_indices.push_back(i);
            out.relation_types.push_back(relation);
        }
        return out;
    }

    if (template_id == "filter-company-news") {
        for (std::size_t begin = 0; begin < items.size();
             begin += static_cast<std::size_t>(batch_size)) {
            const std::size_t end = std::min(items.size(), begin + static_cast<std::size_t>(batch_size));
            std::string batch_text;
            std::string batch_id;
            for (std::size_t i = begin; i < end; ++i) {
                batch_text += items[i].text + "\n";
                batch_id += (batch_id.empty() ? "" : ",") + items[i].id;
                out.kept_indices.push_back(i);
            }
            json resp = call({{"symbol", symbol}, {"news_batch", batch_text}}, batch_id,
                             schemas::key_points());
            out.key_points.push_back(resp["key_points"].get<std::string>());
        }
        return out;
    }

    if (template_id == "filter-10K" || template_id == "filter-10Q") {
        for (std::size_t i = 0; i < items.size(); ++i) {
            json resp = call({{"symbol", symbol}, {"filtered_key_points", items[i].text}},
                             items[i].id, schemas::key_points());
            out.kept_indices.push_back(i);
            out.key_points.push_back(resp["key_points"].get<std::string>());
        }
        return out;
    }

    throw DataError("filter_signal: unknown template '" + template_id + "'");
}

namespace detail {

// Extracts (short-term, mid/long-term) labels from an insight sentence of the
// form "... positive ... in the short term, and ... negative ... long term".
inline std::pair<HorizonLabel, HorizonLabel> parse_horizon_labels(const std::string& insight) {
    std::string text = insight;
    std::transform(text.begin(), text.end(), text.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    std::vector<HorizonLabel> found;
    for (std::size_t i = 0; i < text.size();) {
        if (text.compare(i, 8, "positive") == 0) {
            found.push_back(HorizonLabel::positive);
            i += 8;
        } else if (text.compare(i, 8, "negative") == 0) {
            found.push_back(HorizonLabel::negative);
            i += 8;
        } else if (text.compare(i, 7, "neutral") == 0) {
            found.push_back(HorizonLabel::neutral);
            i += 7;
        } else {
            ++i;
        }
    }
    if (found.empty()) return {HorizonLabel::neutral, HorizonLabel::neutral};
    if (found.size() == 1) return {found[0], found[0]};
    return {found[0], found[1]};
}

}  // namespace detail

inline AnalysisInsight analyze(const SignalItem& item, const std::string& template_id,
                               const PromptRegistry& registry, Provider& provider,
                               const std::string& symbol) {
    AnalysisInsight insight;
    std::map<std::string, std::string> bindings{{"symbol", symbol}, {"agent_scratch", item.text}};
    std::string prompt = registry.render(template_id, bindings);
    json resp;
    try {
        if (template_id == "analyze-macro") {
            resp = parse_response(provider.complete(prompt), schemas::macro_insight());
            insight.source_kind = mem::SourceKind::macro_news;
            insight.insight = resp["insight"].get<std::string>();
            insight.relevance = resp["relevance"].get<std::string>();
            insight.reason = resp.value("reason", insight.insight);
        } else if (template_id == "analyze-10K" || template_id == "analyze-10Q" ||
                   template_id == "analyze-company-news") {
            resp = parse_response(provider.complete(prompt), schemas::horizon_insight());
            insight.source_kind = template_id == "analyze-10K" ? mem::SourceKind::filing_10k
                                  : template_id == "analyze-10Q" ? mem::SourceKind::filing_10q
                                                                 : mem::SourceKind::company_news;
            insight.insight = resp["insight"].get<std::string>();
            insight.reason = resp["reason"].get<std::string>();
            auto [short_label, mid_long_label] = detail::parse_horizon_labels(insight.insight);
            insight.short_term_label = short_label;
            insight.mid_long_label = mid_long_label;
        } else {
            throw DataError("analyze: unknown template '" + template_id + "'");
        }
    } catch (const ProviderError& e) {
        throw ProviderError("item '" + item.id + "': " + e.what());
    }
    if (insight.reason.empty()) throw ProviderError("item '" + item.id + "': empty reason");
    insight.validate();
    return insight;
}

// Layer allocation by source: annual filings go deep, quarterlies mid, news
// shallow, reflections to the reflection layer.
inline mem::Layer layer_for(mem::SourceKind kind) {
    switch (kind) {
        case mem::SourceKind::filing_10k: return mem::Layer::long_term;
        case mem::SourceKind::filing_10q: return mem::Layer::mid_term;
        case mem::SourceKind::reflection: return mem::Layer::reflection;
        default: return mem::Layer::short_term;
    }
}

inline std::int64_t allocate_insight(mem::MemoryStore& store, const AnalysisInsight& insight,
                                     Date date, std::int64_t day_index) {
    insight.validate();
    if (insight.source_kind == mem::SourceKind::macro_news && insight.relation_type == "none")
        throw DataError("allocate: macro insight with relation 'none' must be dropped upstream");
    return store.allocate(layer_for(insight.source_kind), insight.source_kind, insight.insight,
                          mem::importance_from_relevance(insight.relevance), date, day_index);
}

// ---------------------------------------------------------------------------
// decision agents

enum class Phase { train, test };

struct DirectionOutcome {
    env::Direction direction = env::Direction::hold;
    std::string strategic_intent;  // long-term-position | short-term-tactical
    env::MemoryIndices cited;
    std::string summary_reason;
    std::string reflection_analysis;  // train only
    std::string rendered_prompt;
    std::vector<std::int64_t> dropped_citations;
};

namespace detail {

inline std::vector<std::int64_t> int_list(const json& resp, const char* field) {
    std::vector<std::int64_t> out;
    if (resp.contains(field))
        for (const auto& v : resp[field]) out.push_back(v.get<std::int64_t>());
    return out;
}

// unresolvable citations are dropped with a warning, the decision stands
inline void resolve_citations(env::MemoryIndices& cited, const mem::MemoryStore& store,
                              std::vector<std::int64_t>& dropped) {
    for (auto* list : {&cited.short_ids, &cited.mid_ids, &cited.long_ids, &cited.reflection_ids}) {
        auto it = std::remove_if(list->begin(), list->end(), [&](std::int64_t id) {
            const bool ok = store.contains(id) || store.is_tombstoned(id);
            if (!ok) dropped.push_back(id);
            return !ok;
        });
        list->erase(it, list->end());
    }
}

}  // namespace detail

inline DirectionOutcome decide_direction(const mem::WorkingSet& working_set,
                                         const MomentumSummary& momentum,
                                         const env::AccountState& account, Phase phase,
                                         const PromptRegistry& registry, Provider& provider,
                                         const mem::MemoryStore& store, const std::string& symbol,
                                         Date date, const TrainBindings* train_bindings = nullptr) {
    const bool train = phase == Phase::train;
    const std::string info =
        build_investment_info(symbol, date, momentum, account, working_set, train, train_bindings);
    if (!train && contains_future_bindings(info))
        throw DataError("test-mode investment info leaked future bindings");
    DirectionOutcome out;
    out.rendered_prompt = registry.render(train ? "decide-direction-train" : "decide-direction-test",
                                          {{"investment_info", info}});
    json resp = parse_response(provider.complete(out.rendered_prompt), schemas::direction(train));
    out.direction = env::direction_from_string(resp["investment_decision"].get<std::string>());
    out.summary_reason = resp["summary_reason"].get<std::string>();
    if (train) out.reflection_analysis = resp["reflection_analysis"].get<std::string>();
    out.cited.short_ids = detail::int_list(resp, "short_memory_index");
    out.cited.mid_ids = detail::int_list(resp, "middle_memory_index");
    out.cited.long_ids = detail::int_list(resp, "long_memory_index");
    out.cited.reflection_ids = detail::int_list(resp, "reflection_memory_index");
    detail::resolve_citations(out.cited, store, out.dropped_citations);

    // engine-defined intent: multi-horizon momentum agreement reads as
    // position building, otherwise a tactical adjustment
    const bool aligned = momentum.z5 * momentum.z20 > 0;
    out.strategic_intent = (out.direction != env::Direction::hold && aligned)
                               ? "long-term-position"
                               : "short-term-tactical";
    return out;
}

enum class QuantityFallback { minimum_lot, clamp_to_cap };

struct QuantityOutcome {
    std::int64_t quantity = 0;
    env::MemoryIndices cited;
    std::string summary_reason;
    std::string reflection_analysis;
    std::string rendered_prompt;  // empty on hold (no provider call)
    bool cap_violation = false;
    std::size_t provider_calls = 0;
};

inline QuantityOutcome decide_quantity(const DirectionOutcome& direction,
                                       const mem::WorkingSet& working_set,
                                       const MomentumSummary& momentum,
                                       const env::AccountState& account, std::int64_t maxcvar,
                                       Phase phase, const PromptRegistry& registry,
                                       Provider& provider, const std::string& symbol, Date date,
                                       const TrainBindings* train_bindings = nullptr,
                                       QuantityFallback fallback = QuantityFallback::minimum_lot) {
    QuantityOutcome out;
    if (direction.direction == env::Direction::hold) return out;  // zero calls, zero quantity
    if (maxcvar < 1) return out;  // no risk budget today: stand down

    const bool train = phase == Phase::train;
    std::string info = build_investment_info(symbol, date, momentum, account, working_set, train,
                                             train_bindings);
    info += "\nDirection decided: " + env::to_string(direction.direction) +
            " (strategic intent: " + direction.strategic_intent + ").\n";
    if (!train && contains_future_bindings(info))
        throw DataError("test-mode investment info leaked future bindings");
    out.rendered_prompt =
        registry.render(train ? "decide-quantity-train" : "decide-quantity-test",
                        {{"investment_info", info}, {"maxcvar", std::to_string(maxcvar)}});
    out.provider_calls = 1;
    try {
        json resp = parse_response(provider.complete(out.rendered_prompt),
                                   schemas::quantity(train, maxcvar));
        out.quantity = resp["order_size"].get<std::int64_t>();
        out.summary_reason = resp["summary_reason"].get<std::string>();
        if (train) out.reflection_analysis = resp["reflection_analysis"].get<std::string>();
        out.cited.short_ids = detail::int_list(resp, "short_memory_index");
        out.cited.mid_ids = detail::int_list(resp, "middle_memory_index");
        out.cited.long_ids = detail::int_list(resp, "long_memory_index");
        out.cited.reflection_ids = detail::int_list(resp, "reflection_memory_index");
    } catch (const ProviderError& e) {
        // never let a misbehaving provider trade over the cap
        out.cap_violation = true;
        out.quantity = fallback == QuantityFallback::minimum_lot ? 1 : maxcvar;
        out.summary_reason = std::string("quantity fallback after schema violation: ") + e.what();
    }
    return out;
}

struct ReflectionOutcome {
    std::string text;
    std::vector<std::int64_t> promote_ids;
    int reward_sign = 0;
    bool skipped = false;
    std::string skip_reason;
};

inline ReflectionOutcome reflect(const env::TradeDecision& decision, double reward_value,
                                 const mem::WorkingSet& working_set, const PromptRegistry& registry,
                                 Provider& provider, const std::string& symbol, Date date) {
    ReflectionOutcome out;
    out.reward_sign = reward_value > 0 ? 1 : (reward_value < 0 ? -1 : 0);
    const auto& cited = decision.memory_indices;
    for (const auto* list : {&cited.short_ids, &cited.mid_ids, &cited.long_ids, &cited.reflection_ids})
        out.promote_ids.insert(out.promote_ids.end(), list->begin(), list->end());
    try {
        const std::string prompt = registry.render(
            "reflect", {{"direction", env::to_string(decision.direction)},
                        {"quantity", std::to_string(decision.quantity)},
                        {"symbol", symbol},
                        {"cur_date", date.to_string()},
                        {"reward", fixed6(reward_value)},
                        {"working_memory", working_memory_text(working_set)}});
        json resp = parse_response(provider.complete(prompt), schemas::reflection());
        out.text = resp["reflection_analysis"].get<std::string>();
    } catch (const ProviderError& e) {
        out.skipped = true;
        out.skip_reason = e.what();
    }
    return out;
}

}  // namespace finpos::agents
