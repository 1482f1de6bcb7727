#pragma once

#include <cctype>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "finpos/errors.hpp"
#include "finpos/jsonio.hpp"

namespace finpos::agents {

struct PromptTemplate {
    std::string id;
    std::string body;  // text with {name} placeholders
};

namespace detail {

inline bool is_placeholder_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
}

// Finds {identifier} markers; literal JSON braces (not followed by an
// identifier + closing brace) are left alone.
inline std::vector<std::pair<std::size_t, std::string>> find_placeholders(const std::string& body) {
    std::vector<std::pair<std::size_t, std::string>> out;
    for (std::size_t i = 0; i < body.size(); ++i) {
        if (body[i] != '{') continue;
        std::size_t j = i + 1;
        while (j < body.size() && is_placeholder_char(body[j])) ++j;
        if (j > i + 1 && j < body.size() && body[j] == '}' &&
            !std::isdigit(static_cast<unsigned char>(body[i + 1])))
            out.push_back({i, body.substr(i + 1, j - i - 1)});
    }
    return out;
}

}  // namespace detail

inline std::vector<std::string> placeholders_of(const PromptTemplate& tpl) {
    std::vector<std::string> names;
    for (auto& [pos, name] : detail::find_placeholders(tpl.body))
        if (std::find(names.begin(), names.end(), name) == names.end()) names.push_back(name);
    return names;
}

// Substitutes every {name} marker; unbound markers are an error, unused
// bindings are ignored.
inline std::string render(const PromptTemplate& tpl,
                          const std::map<std::string, std::string>& bindings) {
    std::string out;
    out.reserve(tpl.body.size());
    std::size_t cursor = 0;
    for (auto& [pos, name] : detail::find_placeholders(tpl.body)) {
        out.append(tpl.body, cursor, pos - cursor);
        auto it = bindings.find(name);
        if (it == bindings.end())
            throw DataError("prompt '" + tpl.id + "': unbound placeholder '" + name + "'");
        out += it->second;
        cursor = pos + name.size() + 2;
    }
    out.append(tpl.body, cursor, tpl.body.size() - cursor);
    if (!detail::find_placeholders(out).empty())
        throw DataError("prompt '" + tpl.id + "': rendered text still contains placeholder markers");
    return out;
}

class PromptRegistry {
public:
    PromptRegistry() { install_defaults(); }

    const PromptTemplate& get(const std::string& id) const {
        auto it = templates_.find(id);
        if (it == templates_.end()) throw DataError("unknown prompt template '" + id + "'");
        return it->second;
    }

    std::string render(const std::string& id, const std::map<std::string, std::string>& bindings) const {
        return agents::render(get(id), bindings);
    }

    std::vector<std::string> ids() const {
        std::vector<std::string> out;
        for (auto& [id, tpl] : templates_) out.push_back(id);
        return out;
    }

    // Manifest format: {"templates": [{"id": ..., "file": ...}, ...]}
    void load_manifest(const std::string& dir) {
        namespace fs = std::filesystem;
        const std::string manifest_path = (fs::path(dir) / "manifest.json").string();
        json manifest;
        try {
            manifest = json::parse(read_file(manifest_path));
        } catch (const json::parse_error& e) {
            throw DataError(manifest_path + ": " + e.what());
        }
        for (const auto& entry : manifest.at("templates")) {
            PromptTemplate tpl;
            tpl.id = entry.at("id").get<std::string>();
            tpl.body = read_file((fs::path(dir) / entry.at("file").get<std::string>()).string());
            templates_[tpl.id] = tpl;
        }
    }

    void write_files(const std::string& dir) const {
        namespace fs = std::filesystem;
        fs::create_directories(dir);
        ojson manifest;
        ojson list = ojson::array();
        for (const auto& [id, tpl] : templates_) {
            const std::string file = id + ".txt";
            write_file((fs::path(dir) / file).string(), tpl.body);
            ojson entry;
            entry["id"] = id;
            entry["file"] = file;
            ojson ph = ojson::array();
            for (const auto& p : placeholders_of(tpl)) ph.push_back(p);
            entry["placeholders"] = std::move(ph);
            list.push_back(std::move(entry));
        }
        manifest["templates"] = std::move(list);
        write_file((fs::path(dir) / "manifest.json").string(), manifest.dump(2) + "\n");
    }

private:
    void add(const std::string& id, std::string body) { templates_[id] = PromptTemplate{id, std::move(body)}; }

    void install_defaults();

    std::map<std::string, PromptTemplate> templates_;
};

inline void PromptRegistry::install_defaults() {
    const std::string filing_filter_tail = R"(Please complete the following tasks:
1. Screen and extract the most critical financial and operational highlights, focusing on major changes, performance deviations, strategic shifts, and newly emerging risks or opportunities.
2. Filter out repetitive, boilerplate, or investor-irrelevant information.
3. Rank the retained key points by their importance to investors.
Please return the result in the following JSON format, without adding any other explanation:
{
 "key_points": "Selected key points, sorted by importance."
 "reason": "An explanation of why these key points were retained and the rationale behind their importance over other content."
 }
)";

    add("filter-10K",
        "You are a professional financial analyst. Your task is to evaluate the potential impact of "
        "the key points extracted from a company's 10-K report on its stock price, providing decision "
        "support for an intelligent trading agent.\n"
        "You have received the following 10-K key points about {symbol}:\n"
        "\"{filtered_key_points}\"\n"
        "Target company: {symbol}\n" +
            filing_filter_tail);

    add("filter-10Q",
        "You are a professional financial analyst. Your task is to evaluate the potential impact of "
        "the key points extracted from a company's 10-Q report on its stock price, providing decision "
        "support for an intelligent trading agent.\n"
        "You have received the following 10-Q key points about {symbol}:\n"
        "\"{filtered_key_points}\"\n"
        "Target company: {symbol}\n" +
            filing_filter_tail);

    const std::string filing_analyze_tail = R"(1. Analyze the potential **short-term (days to one week)** and **medium-to-long-term (weeks to months)** effects on {symbol}'s stock price. Consider whether the developments are likely to surprise the market **positively or negatively** based on typical investor expectations and sentiment.
2. For each impact direction, **differentiate** between contributing factors (e.g., profitability, cash flow, capital allocation, competitive positioning, regulatory risk). Analyze **interactions or trade-offs** between opposing forces.
3. Explain your reasoning in a structured, multi-dimensional way. Go beyond summarization-**synthesize the data**, explore **counterfactual scenarios**, and account for **macro and industry context**. If relevant, mention **investor psychology** or narrative shifts.
4. DO NOT simply restate the report. Your goal is to **interpret, evaluate, and draw meaningful implications** for trading behavior and valuation outlook.
Please maintain professionalism, clarity, and logical coherence. Highlight key opportunities and risks with balanced and nuanced judgment.
Please output only the response in JSON format without any additional commentary:
{
  "insight": "This report is positive/negative/neutral for {symbol} in the short term, and positive/negative/neutral in the medium to long term.",
  "reason": "Explain the core reasoning behind the judgment, reflecting logical analysis of the key points."
}
)";

    add("analyze-10K",
        "You are a professional financial analyst specializing in evaluating the short-term and "
        "medium-to-long-term impacts of company 10-K reports on stock prices. You are providing "
        "decision support for an intelligent trading agent.\n"
        "You have received a summary of the annual 10-K report for {symbol}:\n"
        "\"{agent_scratch}\"\n"
        "Target company: {symbol}\n" +
            filing_analyze_tail);

    add("analyze-10Q",
        "You are a professional financial analyst specializing in evaluating the short-term and "
        "medium-to-long-term impacts of company 10-Q reports on stock prices. You are providing "
        "decision support for an intelligent trading agent.\n"
        "You have received a summary of the quarterly 10-Q report for {symbol}:\n"
        "\"{agent_scratch}\"\n"
        "Target company: {symbol}\n" +
            filing_analyze_tail);

    add("filter-macro", R"(You are an experienced financial research assistant. Your task is to determine whether a given news article is related to a specific company.
Target company: {symbol}
Please analyze the news below and classify the relationship between the news and the company as either "direct", "indirect", or "none", according to the criteria provided:

Classification criteria:
1. If the news **explicitly mentions** the company name, its executives, its products, financial reports, mergers, partnerships, or investments -- classify as **direct**
2. If the news does **not explicitly mention** the company, but includes topics that **have a substantial impact on the company's business, valuation, or market performance** -- classify as **indirect**, such as:
   - Industry level: industry trends, changes in market demand, technological advancements, industry regulatory policies, upstream/downstream supply chain, competitor dynamics, price fluctuations of key materials
   - Macroeconomic factors: macroeconomy, Federal Reserve policies, interest rates, inflation, employment, consumer spending, GDP growth, manufacturing indices, PMI, retail sales, and other macroeconomic indicators
   - Financial market sentiment: significant fluctuations or sustained trends in major market indices; market overheating, overbought conditions, or panic selling that may affect overall risk appetite; valuation adjustments in tech/growth stock sectors; market rotation; financing environment; IPO activities; large ETF inflows or outflows
   - Policies and regulations: national policies, taxation, regulation, energy, climate, green transition, subsidies, emission standards; trade wars, export restrictions, customs policies
   - Geopolitical conflicts, international sanctions, energy price surges causing global market volatility or disruptions in energy/logistics/supply chains
   - Key political or monetary-policy figures making political, economic, or policy statements, policy preferences, election outlooks, trade comments, or antitrust remarks
3. If the news is **not substantively related** to the company and is **unlikely to impact** its operations or stock price -- classify as **none**, such as:
   - Natural disasters, entertainment gossip, or local events unrelated to the company's business, industry, or market
   - Regional incidents with no significant impact on the company's country's economy or policies

News article:
{agent_scratch}
Please output only the response in JSON format without any additional commentary:
{
  "relation_type": "direct" | "indirect" | "none",
  "reason": "Briefly explain the reasoning behind your judgment"
}
)");

    add("analyze-macro", R"(You are a professional financial analyst specializing in evaluating the medium- to long-term impact of financial news on company stock prices. You are assisting an intelligent trading agent with decision-making support.
You have received the following financial news:
"{agent_scratch}"
The target company is: {symbol}

Please complete the following tasks:
1. Do **not** repeat or summarize the original news content;
2. Determine whether this news has a **material impact** on {symbol}'s stock price, not limited to direct relevance - please also consider macroeconomic policy, supply chain dynamics, market sentiment, geopolitical risks, or other indirect or lagging factors;
3. If there is an impact, provide **one clear and concise investment insight**, explaining how the news might affect {symbol}'s stock price in the coming **weeks to months** (e.g., bullish or bearish);
4. If there is **no clear relevance or impact**, clearly state that the news has **no significant effect** on {symbol};
5. Evaluate the relevance level of the news to {symbol}, using the following scale:
    "high": The news has a direct and significant impact on the company's fundamentals, financials, regulatory environment, or industry position;
    "medium": The news could have an indirect or delayed impact, such as through macroeconomic trends, industry supply/demand shifts, investor sentiment, or cost structure changes;
    "low": The news is largely unrelated or only remotely connected to the company.
Please respond using the following JSON format and do not include any additional text:
{
  "insight": "Summary of how this news may impact {symbol}",
  "relevance": "high" | "medium" | "low"
}
)");

    add("filter-company-news", R"(You are a professional financial analyst. Your task is to filter and prioritize firm-level news items based on their potential importance to investors and their relevance to the company's stock price.
You have received several pieces of company-related news for {symbol}:
"{news_batch}"

Please complete the following steps:
1. Identify which items are **material** and likely to influence investor perception or price movement;
2. Filter out minor, repetitive, or purely descriptive updates with limited market relevance;
3. Rank the retained items by their expected significance to the stock price, considering tone, topic, and potential investor reaction.

Please return the result strictly in JSON format:
{
  "key_points": "Selected and ranked company news items that are most likely to affect {symbol}'s stock price.",
  "reason": "Explain briefly why these items are more significant than others."
}
)");

    add("analyze-company-news", R"(You are a professional financial analyst specializing in assessing the **price sensitivity** of company-related news. You are assisting a high-performance trading agent that only acts based on material, relevant information.

Here is a piece of news you received:
"{agent_scratch}"
Target company: {symbol}

Please follow these instructions:
1. Do NOT summarize the news content;
2. Focus ONLY on the potential impact of this news on {symbol}'s stock price;
3. If this news is irrelevant or has no clear directional impact on {symbol}, clearly mark it as **"neutral"** with an appropriate reason;
4. Evaluate the likely impact in both:
   - **Short term** (1-5 trading days)
   - **Medium to long term** (a few weeks to months);
5. Be strict: only assign "positive" or "negative" if the news provides clear evidence of directional influence on {symbol}'s fundamentals or investor sentiment.

Please return the result in the following **JSON format**, without adding any extra explanation:
{
  "insight": "This news has a [positive/negative/neutral] impact on {symbol} in the short term, and a [positive/negative/neutral] impact in the medium to long term.",
  "reason": "Explain the key reasoning behind your assessment. Do not summarize the news content."
}
)");

    const std::string memory_id_preamble = R"(Memory layers:
- short_memory_index: ID of short-term information.
- middle_memory_index: ID of mid-term information.
- long_memory_index: ID of long-term information.
- reflection_memory_index: ID of reflective-period information.
)";

    add("decide-direction-train", memory_id_preamble + R"(Select and store the most investment-relevant information from major sources into each memory layer.

Please complete the following two tasks based on the investment information below:
Important: Do NOT use any future price differences (T+1, T+7, T+30) in your reasoning. These are unavailable in real-time trading. Any output referencing them will be considered invalid.
1. Directional Decision:
Choose one of the following actions: "buy", "sell", or "hold" (only if uncertain).
You must consider:
- Information from short-, mid-, long-term, and reflective memories;
- Historical price momentum;
- Sentiment tendencies, importance, and timeliness in news or reports.
Briefly describe your decision logic, the overall trading strategy (e.g., long-term accumulation or short-term profit), and indicate the supporting memory indices.
2. Reflection:
The system will automatically evaluate whether your directional judgment matches the market trend.
- If incorrect, explain the misinterpreted or overemphasized information.
- If correct, summarize the key factors behind the correct judgment.
{investment_info}

Your output must strictly follow the JSON format below, with no extra text:
{
    "investment_decision": "buy" | "sell" | "hold",
    "summary_reason": "Brief explanation of your decision logic",
    "short_memory_index": [integer list],
    "middle_memory_index": [integer list],
    "long_memory_index": [integer list],
    "reflection_memory_index": [integer list],
    "reflection_analysis": "Reflection analysis text"
}
)");

    add("decide-direction-test", memory_id_preamble + R"(Retrieve the most relevant information from each memory layer for the current investment decision.

Determine the optimal investment direction based on the following information and briefly justify your reasoning.
You must consider:
- Information from all memory layers (short-, mid-, long-term, reflective);
- Historical price momentum;
- The importance, sentiment, and timeliness of key information.
Provide one of three decisions: "buy", "sell", or "hold", and indicate the memory IDs supporting your judgment.

{investment_info}

Your output must strictly follow the JSON format below, with no extra text:
{
    "investment_decision": "buy" | "sell" | "hold",
    "summary_reason": "Brief explanation of your decision logic",
    "short_memory_index": [integer list],
    "middle_memory_index": [integer list],
    "long_memory_index": [integer list],
    "reflection_memory_index": [integer list]
}
)");

    add("decide-quantity-train", memory_id_preamble + R"(Please complete the following two tasks based on the investment information below:
Important: Do NOT use any future price differences (T+1, T+7, T+30) in your reasoning. These are unavailable in real-time trading. Any output referencing them will be considered invalid.
1. Investment Amount and Risk Decision:
You already know the directional decision (buy/sell/hold) made by the Direction Decision Agent in the previous stage.
Based on this, determine the **specific order quantity**(integer) and ensure that the transaction volume does not exceed the maximum limit {maxcvar} recommended by the risk control module.
You must consider the following factors:
- Information in each memory layer (short-term, medium-term, long-term, and reflection period);
- Historical momentum and price volatility;
- The sentiment, importance, and timeliness of news or financial reports;
- Current account holdings and overall risk exposure;
- Trading strategy determined in the previous phase.
Please briefly explain your quantity decision logic and indicate the memory indexes supporting this decision.
2. Decision Reflection and Analysis:
The system will calculate a reward based on the order quantity and corresponding return.
- If the reward is negative, please explain any market signals or risk factors you may have misjudged;
- If the reward is positive, please summarize the core rationale that led to your correct decision.
{investment_info}

Your output should strictly adhere to the following JSON format and not include any other content:
{
"order_size": integer (range 1 to {maxcvar}),
"summary_reason": "Please enter your quantity and risk decision logic here",
"short_memory_index": [list of integers],
"middle_memory_index": [list of integers],
"long_memory_index": [list of integers],
"reflection_memory_index": [list of integers],
"reflection_analysis": "Please fill in your reflection description here."
}
)");

    add("decide-quantity-test", memory_id_preamble + R"(Based on the following information, please determine the **order quantity** for the current trade.
You know the directional decision (buy/sell/hold). Please specify the specific order quantity based on the risk exposure and CVaR constraint (maximum order quantity {maxcvar}).
You must consider:
- Memory information at each level (short-term, medium-term, long-term, reflection period);
- Momentum trend, sentiment, information importance, and timeliness;
- Current account holdings and overall risk;
- Trading strategy for the previous directional decision.
Please output a specific order quantity (integer, not exceeding {maxcvar}) and indicate the information index that supports your judgment.

{investment_info}

Your output should strictly adhere to the following JSON format and not include any other content:
{
"order_size": integer (range 1 to {maxcvar}),
"summary_reason": "Please enter your quantity and risk decision logic here",
"short_memory_index": [list of integers],
"middle_memory_index": [list of integers],
"long_memory_index": [list of integers],
"reflection_memory_index": [list of integers]
}
)");

    add("reflect", R"(Reflection task: the system has evaluated your latest trading decision against the realized market trend.
Decision: {direction} {quantity} shares of {symbol} on {cur_date}.
Multi-timescale reward for this decision: {reward}.
Reward reflects the quality of your past decision:
- **Positive**: Good decision; higher means better alignment with market.
- **Negative**: A weaker decision. The more negative the value, the worse the outcome - may be caused by misreading available data.
Use reward **only for reflection**, not for future predictions.
- If the reward is negative, explain the misinterpreted or overemphasized information.
- If the reward is positive, summarize the key factors behind the correct judgment.
Cited working memory:
{working_memory}

Your output must strictly follow the JSON format below, with no extra text:
{
    "reflection_analysis": "Reflection analysis text"
}
)");
}

}  // namespace finpos::agents
