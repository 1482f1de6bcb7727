#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "finpos/date.hpp"
#include "finpos/errors.hpp"
#include "finpos/jsonio.hpp"

namespace finpos::mem {

enum class Layer : int { short_term = 0, mid_term = 1, long_term = 2, reflection = 3 };

inline std::string to_string(Layer l) {
    switch (l) {
        case Layer::short_term: return "short";
        case Layer::mid_term: return "mid";
        case Layer::long_term: return "long";
        default: return "reflection";
    }
}

inline Layer layer_from_string(const std::string& s) {
    if (s == "short") return Layer::short_term;
    if (s == "mid") return Layer::mid_term;
    if (s == "long") return Layer::long_term;
    if (s == "reflection") return Layer::reflection;
    throw DataError("unknown memory layer '" + s + "'");
}

enum class SourceKind { company_news, macro_news, filing_10k, filing_10q, reflection };

inline std::string to_string(SourceKind k) {
    switch (k) {
        case SourceKind::company_news: return "company-news";
        case SourceKind::macro_news: return "macro-news";
        case SourceKind::filing_10k: return "10-K";
        case SourceKind::filing_10q: return "10-Q";
        default: return "reflection";
    }
}

inline SourceKind source_kind_from_string(const std::string& s) {
    if (s == "company-news") return SourceKind::company_news;
    if (s == "macro-news") return SourceKind::macro_news;
    if (s == "10-K") return SourceKind::filing_10k;
    if (s == "10-Q") return SourceKind::filing_10q;
    if (s == "reflection") return SourceKind::reflection;
    throw DataError("unknown source kind '" + s + "'");
}

struct MemoryRecord {
    std::int64_t id = 0;
    Layer layer = Layer::short_term;
    std::string content;
    double importance = 0;  // [0,1]
    Date created_date;
    std::int64_t created_day_index = 0;  // trading-day index, for recency decay
    Date last_access_date;
    std::int64_t validity_count = 0;
    SourceKind source_kind = SourceKind::company_news;
};

struct WorkingSetEntry {
    std::int64_t id = 0;
    std::string content;
    double score = 0;
};

struct WorkingSet {
    std::vector<WorkingSetEntry> short_term, mid_term, long_term, reflection;

    const std::vector<WorkingSetEntry>& layer(Layer l) const {
        switch (l) {
            case Layer::short_term: return short_term;
            case Layer::mid_term: return mid_term;
            case Layer::long_term: return long_term;
            default: return reflection;
        }
    }
    bool empty() const {
        return short_term.empty() && mid_term.empty() && long_term.empty() && reflection.empty();
    }
    std::vector<std::int64_t> all_ids() const {
        std::vector<std::int64_t> ids;
        for (const auto* v : {&short_term, &mid_term, &long_term, &reflection})
            for (const auto& e : *v) ids.push_back(e.id);
        return ids;
    }
};

struct MemoryConfig {
    double weight_recency = 0.4;
    double weight_importance = 0.3;
    double weight_relevance = 0.3;
    // trading-day half-lives per layer
    double half_life_short = 7, half_life_mid = 45, half_life_long = 365, half_life_reflection = 90;
    int promotion_threshold = 3;
    std::size_t capacity_per_layer = 500;
    std::size_t default_k_per_layer = 5;
};

inline double importance_from_relevance(const std::string& relevance) {
    if (relevance == "high") return 0.9;
    if (relevance == "medium") return 0.6;
    if (relevance == "low") return 0.3;
    throw DataError("unknown relevance label '" + relevance + "'");
}

namespace detail {

inline std::vector<std::string> tokenize(const std::string& text) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : text) {
        if (std::isalnum(static_cast<unsigned char>(c)))
            cur.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
        else if (!cur.empty()) {
            out.push_back(cur);
            cur.clear();
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

// fraction of query terms present in content
inline double term_overlap(const std::vector<std::string>& query_terms, const std::string& content) {
    if (query_terms.empty()) return 0;
    std::set<std::string> content_terms;
    for (auto& t : tokenize(content)) content_terms.insert(t);
    std::size_t hits = 0;
    for (const auto& q : query_terms)
        if (content_terms.count(q)) ++hits;
    return static_cast<double>(hits) / static_cast<double>(query_terms.size());
}

}  // namespace detail

class MemoryStore {
public:
    explicit MemoryStore(MemoryConfig config = MemoryConfig{}) : config_(config) {}

    const MemoryConfig& config() const { return config_; }

    std::int64_t allocate(Layer layer, SourceKind kind, const std::string& content,
                          double importance, Date date, std::int64_t day_index) {
        MemoryRecord rec;
        rec.id = next_id_++;
        rec.layer = layer;
        rec.content = content;
        rec.importance = std::clamp(importance, 0.0, 1.0);
        rec.created_date = date;
        rec.created_day_index = day_index;
        rec.last_access_date = date;
        rec.source_kind = kind;
        records_.emplace(rec.id, rec);
        evict_if_needed(layer, day_index);
        return rec.id;
    }

    bool contains(std::int64_t id) const { return records_.count(id) > 0; }
    bool is_tombstoned(std::int64_t id) const { return tombstones_.count(id) > 0; }
    std::size_t size() const { return records_.size(); }

    const MemoryRecord& record(std::int64_t id) const {
        auto it = records_.find(id);
        if (it == records_.end()) throw DataError("unknown memory id " + std::to_string(id));
        return it->second;
    }

    double composite_score(const MemoryRecord& rec, const std::vector<std::string>& query_terms,
                           std::int64_t day_index) const {
        const double age = static_cast<double>(std::max<std::int64_t>(day_index - rec.created_day_index, 0));
        const double recency = std::exp(-age / half_life(rec.layer));
        const double relevance = detail::term_overlap(query_terms, rec.content);
        return config_.weight_recency * recency + config_.weight_importance * rec.importance +
               config_.weight_relevance * relevance;
    }

    // Top-k per layer by composite score; ties broken by lower id.
    WorkingSet retrieve(const std::vector<std::string>& query_terms, Date date,
                        std::int64_t day_index, std::size_t k_per_layer = 0) {
        if (k_per_layer == 0) k_per_layer = config_.default_k_per_layer;
        WorkingSet ws;
        for (Layer layer : {Layer::short_term, Layer::mid_term, Layer::long_term, Layer::reflection}) {
            std::vector<WorkingSetEntry> entries;
            for (auto& [id, rec] : records_) {
                if (rec.layer != layer) continue;
                entries.push_back({id, rec.content, composite_score(rec, query_terms, day_index)});
            }
            std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) {
                if (a.score != b.score) return a.score > b.score;
                return a.id < b.id;
            });
            if (entries.size() > k_per_layer) entries.resize(k_per_layer);
            for (const auto& e : entries) records_.at(e.id).last_access_date = date;
            mutable_layer(ws, layer) = std::move(entries);
        }
        return ws;
    }

    struct PromotionEvent {
        std::int64_t id;
        Layer from, to;
    };

    // Positive reward increments validity; crossing the threshold moves the
    // record one layer deeper. Reflection records never change layer.
    std::vector<PromotionEvent> promote(const std::vector<std::int64_t>& cited_ids, int reward_sign) {
        std::vector<PromotionEvent> events;
        if (reward_sign <= 0) {
            for (auto id : cited_ids)
                if (!contains(id) && !is_tombstoned(id))
                    throw DataError("promote: unknown memory id " + std::to_string(id));
            return events;
        }
        for (auto id : cited_ids) {
            if (is_tombstoned(id)) continue;
            auto it = records_.find(id);
            if (it == records_.end()) throw DataError("promote: unknown memory id " + std::to_string(id));
            MemoryRecord& rec = it->second;
            rec.validity_count += 1;
            if (rec.layer == Layer::reflection || rec.layer == Layer::long_term) continue;
            if (rec.validity_count >= config_.promotion_threshold &&
                rec.validity_count % config_.promotion_threshold == 0) {
                const Layer from = rec.layer;
                rec.layer = from == Layer::short_term ? Layer::mid_term : Layer::long_term;
                events.push_back({id, from, rec.layer});
            }
        }
        return events;
    }

    std::string snapshot() const {
        ojson root;
        root["schema_version"] = kSchemaVersion;
        root["next_id"] = next_id_;
        ojson recs = ojson::array();
        for (const auto& [id, rec] : records_) {
            ojson r;
            r["id"] = rec.id;
            r["layer"] = to_string(rec.layer);
            r["content"] = rec.content;
            r["importance"] = rec.importance;
            r["created_date"] = rec.created_date.to_string();
            r["created_day_index"] = rec.created_day_index;
            r["last_access_date"] = rec.last_access_date.to_string();
            r["validity_count"] = rec.validity_count;
            r["source_kind"] = to_string(rec.source_kind);
            recs.push_back(std::move(r));
        }
        root["records"] = std::move(recs);
        ojson tombs = ojson::array();
        for (auto id : tombstones_) tombs.push_back(id);
        root["tombstones"] = std::move(tombs);
        return root.dump(2) + "\n";
    }

    static MemoryStore restore(const std::string& blob, MemoryConfig config = MemoryConfig{}) {
        json root;
        try {
            root = json::parse(blob);
        } catch (const json::parse_error& e) {
            throw DataError(std::string("memory restore: parse error: ") + e.what());
        }
        if (!root.contains("schema_version") || root["schema_version"].get<int>() != kSchemaVersion)
            throw DataError("memory restore: schema version mismatch");
        MemoryStore store(config);
        store.next_id_ = root["next_id"].get<std::int64_t>();
        for (const auto& r : root["records"]) {
            MemoryRecord rec;
            rec.id = r["id"].get<std::int64_t>();
            rec.layer = layer_from_string(r["layer"].get<std::string>());
            rec.content = r["content"].get<std::string>();
            rec.importance = r["importance"].get<double>();
            rec.created_date = Date::parse(r["created_date"].get<std::string>());
            rec.created_day_index = r["created_day_index"].get<std::int64_t>();
            rec.last_access_date = Date::parse(r["last_access_date"].get<std::string>());
            rec.validity_count = r["validity_count"].get<std::int64_t>();
            rec.source_kind = source_kind_from_string(r["source_kind"].get<std::string>());
            store.records_.emplace(rec.id, rec);
        }
        for (const auto& t : root["tombstones"]) store.tombstones_.insert(t.get<std::int64_t>());
        return store;
    }

private:
    double half_life(Layer l) const {
        switch (l) {
            case Layer::short_term: return config_.half_life_short;
            case Layer::mid_term: return config_.half_life_mid;
            case Layer::long_term: return config_.half_life_long;
            default: return config_.half_life_reflection;
        }
    }

    static std::vector<WorkingSetEntry>& mutable_layer(WorkingSet& ws, Layer l) {
        switch (l) {
            case Layer::short_term: return ws.short_term;
            case Layer::mid_term: return ws.mid_term;
            case Layer::long_term: return ws.long_term;
            default: return ws.reflection;
        }
    }

    void evict_if_needed(Layer layer, std::int64_t day_index) {
        std::vector<std::pair<double, std::int64_t>> members;  // (score, id)
        for (const auto& [id, rec] : records_)
            if (rec.layer == layer) members.push_back({composite_score(rec, {}, day_index), id});
        if (members.size() <= config_.capacity_per_layer) return;
        // evict the lowest-score record; ties to oldest id
        auto victim = std::min_element(members.begin(), members.end());
        tombstones_.insert(victim->second);
        records_.erase(victim->second);
    }

    static constexpr int kSchemaVersion = 1;
    MemoryConfig config_;
    std::map<std::int64_t, MemoryRecord> records_;  // ordered for stable snapshots
    std::set<std::int64_t> tombstones_;
    std::int64_t next_id_ = 1;
};

}  // namespace finpos::mem
