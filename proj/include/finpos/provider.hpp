#pragma once

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "finpos/errors.hpp"
#include "finpos/jsonio.hpp"

namespace finpos::agents {

// ---------------------------------------------------------------------------
// response schemas

struct FieldSpec {
    enum class Type { string, integer, int_array, enum_string };
    std::string name;
    Type type = Type::string;
    std::vector<std::string> allowed;  // enum_string only
    bool required = true;
    bool non_empty = false;
    std::optional<std::int64_t> min_value, max_value;
};

struct ResponseSchema {
    std::vector<FieldSpec> fields;
};

namespace detail {

inline std::string strip_code_fences(const std::string& text) {
    std::string out = text;
    auto start = out.find("```");
    if (start == std::string::npos) return out;
    // drop the fence line itself (may carry a language tag)
    auto line_end = out.find('\n', start);
    if (line_end == std::string::npos) return out;
    auto close = out.find("```", line_end);
    if (close == std::string::npos) return out;
    return out.substr(line_end + 1, close - line_end - 1);
}

inline std::optional<std::string> first_balanced_object(const std::string& text) {
    auto open = text.find('{');
    if (open == std::string::npos) return std::nullopt;
    int depth = 0;
    bool in_string = false;
    bool escaped = false;
    for (std::size_t i = open; i < text.size(); ++i) {
        char c = text[i];
        if (in_string) {
            if (escaped)
                escaped = false;
            else if (c == '\\')
                escaped = true;
            else if (c == '"')
                in_string = false;
            continue;
        }
        if (c == '"') in_string = true;
        else if (c == '{') ++depth;
        else if (c == '}') {
            --depth;
            if (depth == 0) return text.substr(open, i - open + 1);
        }
    }
    return std::nullopt;
}

}  // namespace detail

// Strict parse first; on failure, one repair round (strip fences, extract the
// first balanced object), then schema validation.
inline json parse_response(const std::string& raw_text, const ResponseSchema& schema) {
    json parsed;
    bool ok = false;
    try {
        parsed = json::parse(raw_text);
        ok = parsed.is_object();
    } catch (const json::parse_error&) {
    }
    if (!ok) {
        const std::string stripped = detail::strip_code_fences(raw_text);
        auto obj = detail::first_balanced_object(stripped);
        if (!obj) throw ProviderError("response is not parseable JSON (after repair)");
        try {
            parsed = json::parse(*obj);
        } catch (const json::parse_error& e) {
            throw ProviderError(std::string("response is not parseable JSON (after repair): ") + e.what());
        }
        if (!parsed.is_object()) throw ProviderError("response is not a JSON object");
    }

    for (const auto& field : schema.fields) {
        if (!parsed.contains(field.name)) {
            if (field.required)
                throw ProviderError("schema violation: missing field '" + field.name + "'");
            continue;
        }
        const json& v = parsed[field.name];
        switch (field.type) {
            case FieldSpec::Type::string:
                if (!v.is_string())
                    throw ProviderError("schema violation: field '" + field.name + "' must be a string");
                if (field.non_empty && v.get<std::string>().empty())
                    throw ProviderError("schema violation: field '" + field.name + "' must be non-empty");
                break;
            case FieldSpec::Type::enum_string: {
                if (!v.is_string())
                    throw ProviderError("schema violation: field '" + field.name + "' must be a string");
                const auto s = v.get<std::string>();
                if (std::find(field.allowed.begin(), field.allowed.end(), s) == field.allowed.end())
                    throw ProviderError("schema violation: field '" + field.name + "' has disallowed value '" + s + "'");
                break;
            }
            case FieldSpec::Type::integer: {
                if (!v.is_number_integer())
                    throw ProviderError("schema violation: field '" + field.name + "' must be an integer");
                const auto n = v.get<std::int64_t>();
                if ((field.min_value && n < *field.min_value) || (field.max_value && n > *field.max_value))
                    throw ProviderError("schema violation: field '" + field.name + "' = " + std::to_string(n) +
                                        " outside allowed range");
                break;
            }
            case FieldSpec::Type::int_array:
                if (!v.is_array())
                    throw ProviderError("schema violation: field '" + field.name + "' must be an array");
                for (const auto& e : v)
                    if (!e.is_number_integer())
                        throw ProviderError("schema violation: field '" + field.name + "' must contain integers");
                break;
        }
    }
    return parsed;
}

// canned schemas for the agent templates
namespace schemas {

inline ResponseSchema key_points() {
    return {{{"key_points", FieldSpec::Type::string, {}, true, true},
             {"reason", FieldSpec::Type::string, {}, true, true}}};
}

inline ResponseSchema macro_relation() {
    return {{{"relation_type", FieldSpec::Type::enum_string, {"direct", "indirect", "none"}, true},
             {"reason", FieldSpec::Type::string, {}, true, true}}};
}

inline ResponseSchema macro_insight() {
    return {{{"insight", FieldSpec::Type::string, {}, true, true},
             {"relevance", FieldSpec::Type::enum_string, {"high", "medium", "low"}, true}}};
}

inline ResponseSchema horizon_insight() {
    return {{{"insight", FieldSpec::Type::string, {}, true, true},
             {"reason", FieldSpec::Type::string, {}, true, true}}};
}

inline ResponseSchema direction(bool train) {
    ResponseSchema s;
    s.fields = {{"investment_decision", FieldSpec::Type::enum_string, {"buy", "sell", "hold"}, true},
                {"summary_reason", FieldSpec::Type::string, {}, true, true},
                {"short_memory_index", FieldSpec::Type::int_array},
                {"middle_memory_index", FieldSpec::Type::int_array},
                {"long_memory_index", FieldSpec::Type::int_array},
                {"reflection_memory_index", FieldSpec::Type::int_array}};
    if (train) s.fields.push_back({"reflection_analysis", FieldSpec::Type::string, {}, true, true});
    return s;
}

inline ResponseSchema quantity(bool train, std::int64_t maxcvar) {
    ResponseSchema s;
    FieldSpec order{"order_size", FieldSpec::Type::integer};
    order.min_value = 1;
    order.max_value = maxcvar;
    s.fields = {order,
                {"summary_reason", FieldSpec::Type::string, {}, true, true},
                {"short_memory_index", FieldSpec::Type::int_array},
                {"middle_memory_index", FieldSpec::Type::int_array},
                {"long_memory_index", FieldSpec::Type::int_array},
                {"reflection_memory_index", FieldSpec::Type::int_array}};
    if (train) s.fields.push_back({"reflection_analysis", FieldSpec::Type::string, {}, true, true});
    return s;
}

inline ResponseSchema reflection() {
    return {{{"reflection_analysis", FieldSpec::Type::string, {}, true, true}}};
}

}  // namespace schemas

// ---------------------------------------------------------------------------
// provider abstraction

enum class ProviderMode { stub, remote };

struct ProviderConfig {
    ProviderMode mode = ProviderMode::stub;
    std::string endpoint;            // e.g. http://host:port
    std::string completion_path = "/v1/chat/completions";
    std::string model = "gpt-4o";
    double temperature = 0.7;
    int timeout_seconds = 60;
    int max_retries = 3;
    double requests_per_second = 0;  // 0 = uncapped
    std::string api_key_env = "FINPOS_API_KEY";
};

class Provider {
public:
    virtual ~Provider() = default;
    virtual std::string complete(const std::string& prompt) = 0;
};

// ---------------------------------------------------------------------------
// deterministic stub provider
//
// A pure function of (prompt, seed): dispatches on marker substrings from the
// prompt registry, reads the momentum z-score embedded in investment_info, and
// emits schema-valid JSON. Momentum rule: buy when the 5-day z-score is
// positive, sell when negative, hold when |z| is below the threshold.

class StubProvider : public Provider {
public:
    explicit StubProvider(std::uint64_t seed = 0) : seed_(seed) {}

    static constexpr double kHoldZThreshold = 0.25;

    std::string complete(const std::string& prompt) override {
        if (contains(prompt, "classify the relationship between the news and the company"))
            return macro_relation(prompt);
        if (contains(prompt, "Rank the retained key points") ||
            contains(prompt, "Rank the retained items"))
            return key_points(prompt);
        if (contains(prompt, "Investment Amount and Risk Decision") ||
            contains(prompt, "determine the **order quantity**"))
            return quantity(prompt);
        if (contains(prompt, "Directional Decision:") ||
            contains(prompt, "Determine the optimal investment direction"))
            return direction(prompt);
        if (contains(prompt, "Reflection task")) return reflection(prompt);
        if (contains(prompt, "using the following scale")) return macro_insight(prompt);
        if (contains(prompt, "medium to long term")) return horizon_insight(prompt);
        throw ProviderError("stub provider: unrecognized prompt");
    }

    // keyword lists used for the offline macro-relation rule
    static const std::vector<std::string>& macro_keywords() {
        static const std::vector<std::string> kw = {
            "tariff", "fed", "federal reserve", "interest rate", "inflation", "employment",
            "gdp", "pmi", "retail sales", "trade war", "export", "sanction", "election",
            "regulation", "policy", "market", "index", "nasdaq", "s&p", "dow", "energy price",
            "supply chain", "geopolit", "subsid", "tax"};
        return kw;
    }

private:
    static bool contains(const std::string& haystack, const std::string& needle) {
        return haystack.find(needle) != std::string::npos;
    }

    static std::string lower(std::string s) {
        std::transform(s.begin(), s.end(), s.begin(),
                       [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
        return s;
    }

    static std::string extract_between(const std::string& text, const std::string& begin,
                                       const std::string& end) {
        auto b = text.find(begin);
        if (b == std::string::npos) return {};
        b += begin.size();
        auto e = text.find(end, b);
        return text.substr(b, e == std::string::npos ? std::string::npos : e - b);
    }

    static std::string json_escape(const std::string& s) {
        return json(s).dump();  // includes surrounding quotes
    }

    // parses "5-day delta X (z Y)" from the momentum summary block
    static std::optional<double> momentum_z(const std::string& prompt) {
        auto pos = prompt.find("5-day delta ");
        if (pos == std::string::npos) return std::nullopt;
        auto zpos = prompt.find("(z ", pos);
        if (zpos == std::string::npos) return std::nullopt;
        try {
            return std::stod(prompt.substr(zpos + 3));
        } catch (const std::exception&) {
            return std::nullopt;
        }
    }

    static std::optional<std::int64_t> parse_after(const std::string& prompt, const std::string& marker) {
        auto pos = prompt.find(marker);
        if (pos == std::string::npos) return std::nullopt;
        try {
            return std::stoll(prompt.substr(pos + marker.size()));
        } catch (const std::exception&) {
            return std::nullopt;
        }
    }

    // collects "id=N" markers from one layer's working-memory section; a
    // section runs from its [layer-memory] header to the next header line
    static std::string ids_in_section(const std::string& prompt, const std::string& header) {
        auto start = prompt.find(header);
        if (start == std::string::npos) return "[]";
        auto end = prompt.find("\n[", start + header.size());
        if (end == std::string::npos) end = prompt.size();
        std::string section = prompt.substr(start, end - start);
        std::string out = "[";
        std::size_t pos = 0;
        bool first = true;
        while ((pos = section.find("id=", pos)) != std::string::npos) {
            pos += 3;
            std::size_t digits = 0;
            while (pos + digits < section.size() &&
                   std::isdigit(static_cast<unsigned char>(section[pos + digits])))
                ++digits;
            if (digits > 0) {
                if (!first) out += ",";
                out += section.substr(pos, digits);
                first = false;
            }
            pos += digits;
        }
        return out + "]";
    }

    std::string macro_relation(const std::string& prompt) const {
        const std::string symbol = extract_between(prompt, "Target company: ", "\n");
        const std::string article = lower(extract_between(prompt, "News article:\n", "\nPlease output"));
        std::string relation = "none";
        if (!symbol.empty() && article.find(lower(symbol)) != std::string::npos) {
            relation = "direct";
        } else {
            for (const auto& kw : macro_keywords())
                if (article.find(kw) != std::string::npos) {
                    relation = "indirect";
                    break;
                }
        }
        return "{\"relation_type\": \"" + relation +
               "\", \"reason\": \"stub: keyword-based relation classification\"}";
    }

    std::string key_points(const std::string& prompt) const {
        std::string block = extract_between(prompt, "\"", "\"\n");
        if (block.size() > 400) block = block.substr(0, 400);
        return "{\"key_points\": " + json_escape(block) +
               ", \"reason\": \"stub: retained leading content in order of appearance\"}";
    }

    std::string macro_insight(const std::string& prompt) const {
        const std::string symbol = extract_between(prompt, "The target company is: ", "\n");
        return "{\"insight\": \"stub: this news may have an indirect, delayed effect on " + symbol +
               "\", \"relevance\": \"medium\"}";
    }

    std::string horizon_insight(const std::string& prompt) const {
        std::string symbol = extract_between(prompt, "Target company: ", "\n");
        if (symbol.empty()) symbol = "the company";
        return "{\"insight\": \"This is neutral for " + symbol +
               " in the short term, and neutral in the medium to long term.\", "
               "\"reason\": \"stub: no directional evidence extracted\"}";
    }

    std::string direction(const std::string& prompt) const {
        const auto z = momentum_z(prompt);
        std::string decision = "hold";
        if (z && *z >= kHoldZThreshold) decision = "buy";
        if (z && *z <= -kHoldZThreshold) decision = "sell";
        const bool train = contains(prompt, "Directional Decision");
        std::string out = "{\"investment_decision\": \"" + decision +
                          "\", \"summary_reason\": \"stub: 5-day momentum z-score " +
                          (z ? fixed6(*z) : std::string("unavailable")) + "\"";
        out += ", \"short_memory_index\": " + ids_in_section(prompt, "[short-memory]");
        out += ", \"middle_memory_index\": " + ids_in_section(prompt, "[mid-memory]");
        out += ", \"long_memory_index\": " + ids_in_section(prompt, "[long-memory]");
        out += ", \"reflection_memory_index\": " + ids_in_section(prompt, "[reflection-memory]");
        if (train)
            out += ", \"reflection_analysis\": \"stub: direction chosen from momentum sign\"";
        return out + "}";
    }

    std::string quantity(const std::string& prompt) const {
        auto maxcvar = parse_after(prompt, "maximum order quantity ");
        if (!maxcvar) maxcvar = parse_after(prompt, "maximum limit ");
        if (!maxcvar || *maxcvar < 1)
            throw ProviderError("stub provider: cannot locate order cap in prompt");
        const auto z = momentum_z(prompt);
        const double strength = z ? std::abs(*z) : 0.0;
        std::int64_t size = static_cast<std::int64_t>(std::llround(static_cast<double>(*maxcvar) * strength));
        size = std::clamp<std::int64_t>(size, 1, *maxcvar);
        const bool train = contains(prompt, "Investment Amount and Risk Decision");
        std::string out = "{\"order_size\": " + std::to_string(size) +
                          ", \"summary_reason\": \"stub: size scaled by momentum strength\"";
        out += ", \"short_memory_index\": " + ids_in_section(prompt, "[short-memory]");
        out += ", \"middle_memory_index\": " + ids_in_section(prompt, "[mid-memory]");
        out += ", \"long_memory_index\": " + ids_in_section(prompt, "[long-memory]");
        out += ", \"reflection_memory_index\": " + ids_in_section(prompt, "[reflection-memory]");
        if (train)
            out += ", \"reflection_analysis\": \"stub: size reflects signal strength under the cap\"";
        return out + "}";
    }

    std::string reflection(const std::string& prompt) const {
        const std::string decision = extract_between(prompt, "Decision: ", "\n");
        const std::string reward_text = extract_between(prompt, "reward for this decision: ", ".\n");
        double reward_value = 0;
        try {
            reward_value = std::stod(reward_text);
        } catch (const std::exception&) {
        }
        const std::string verdict = reward_value > 0 ? "aligned with the realized trend"
                                                     : "misaligned with the realized trend";
        return "{\"reflection_analysis\": \"stub: decision '" + decision + "' was " + verdict + "\"}";
    }

    std::uint64_t seed_;
};

inline bool contains_future_bindings(const std::string& rendered_prompt) {
    for (const char* marker :
         {"cur_record_t1", "cur_record_t7", "cur_record_t30",
          "price difference between the next and current trading day", "the 7-day difference is",
          "the 30-day difference is", "Your decision return is"})
        if (rendered_prompt.find(marker) != std::string::npos) return true;
    return false;
}

}  // namespace finpos::agents
