#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <map>

#include "finpos/market_data.hpp"
#include "helpers.hpp"

using namespace finpos;
using namespace finpos::data;
using testutil::TempDir;

TEST_CASE("load_price_csv: three well-formed rows load in date order") {
    TempDir dir("md");
    write_file(dir.file("p.csv"),
               "date,open,high,low,close,volume\n"
               "2024-01-02,10,11,9,10.5,100\n"
               "2024-01-03,10.5,12,10,11,200\n"
               "2024-01-04,11,11.5,10.5,11.2,300\n");
    auto bars = load_price_csv(dir.file("p.csv"));
    REQUIRE(bars.size() == 3);
    CHECK(bars[0].date.to_string() == "2024-01-02");
    CHECK(bars[2].close == doctest::Approx(11.2));
    CHECK(bars[0].date < bars[1].date);
    CHECK(bars[1].date < bars[2].date);
}

TEST_CASE("load_price_csv: zero close is rejected naming the row") {
    TempDir dir("md");
    write_file(dir.file("p.csv"),
               "date,open,high,low,close,volume\n"
               "2024-01-02,10,11,9,10.5,100\n"
               "2024-01-03,0,0,0,0,200\n");
    // rows are numbered by physical file line, so the header is row 1
    CHECK_THROWS_WITH_AS(load_price_csv(dir.file("p.csv")),
                         doctest::Contains("row 3"), DataError);
}

TEST_CASE("load_price_csv: shuffled dates report non-monotone dates") {
    TempDir dir("md");
    write_file(dir.file("p.csv"),
               "date,open,high,low,close,volume\n"
               "2024-01-03,10,11,9,10.5,100\n"
               "2024-01-02,10,11,9,10.5,100\n");
    CHECK_THROWS_WITH_AS(load_price_csv(dir.file("p.csv")),
                         doctest::Contains("non-monotone dates"), DataError);
}

TEST_CASE("load_price_csv: header must match exactly") {
    TempDir dir("md");
    write_file(dir.file("p.csv"), "date,open,close\n2024-01-02,10,10\n");
    CHECK_THROWS_AS(load_price_csv(dir.file("p.csv")), DataError);
}

TEST_CASE("load_price_csv: OHLC bracket violations are rejected") {
    TempDir dir("md");
    write_file(dir.file("p.csv"),
               "date,open,high,low,close,volume\n"
               "2024-01-02,10,9.5,9,10.5,100\n");  // high < open
    CHECK_THROWS_AS(load_price_csv(dir.file("p.csv")), DataError);
}

TEST_CASE("load_news_jsonl: two valid macro lines") {
    TempDir dir("md");
    write_file(dir.file("n.jsonl"),
               R"({"id":"m1","date":"2024-01-02","headline":"Fed holds rates","summary":"s","scope":"macro"})"
               "\n"
               R"({"id":"m2","date":"2024-01-03","headline":"CPI prints hot","summary":"s","scope":"macro"})"
               "\n");
    auto items = load_news_jsonl(dir.file("n.jsonl"));
    REQUIRE(items.size() == 2);
    CHECK(items[0].scope == NewsScope::macro);
    CHECK(items[1].scope == NewsScope::macro);
}

TEST_CASE("load_news_jsonl: company news without symbol is rejected") {
    TempDir dir("md");
    write_file(dir.file("n.jsonl"),
               R"({"id":"c1","date":"2024-01-02","headline":"Earnings","summary":"s","scope":"company"})"
               "\n");
    CHECK_THROWS_AS(load_news_jsonl(dir.file("n.jsonl")), DataError);
}

TEST_CASE("load_news_jsonl: lenient mode keeps the valid subset and counts rejects") {
    TempDir dir("md");
    // 5 lines: 3 valid, 2 invalid (missing symbol; empty headline)
    write_file(dir.file("n.jsonl"),
               R"({"id":"a","date":"2024-01-02","headline":"h1","summary":"s","scope":"macro"})"
               "\n"
               R"({"id":"b","date":"2024-01-02","headline":"h2","summary":"s","scope":"company"})"
               "\n"
               R"({"id":"c","date":"2024-01-03","headline":"h3","summary":"s","scope":"company","symbol":"ACME"})"
               "\n"
               R"({"id":"d","date":"2024-01-03","headline":"","summary":"s","scope":"macro"})"
               "\n"
               R"({"id":"e","date":"2024-01-04","headline":"h5","summary":"s","scope":"macro"})"
               "\n");
    LoadStats stats;
    auto items = load_news_jsonl(dir.file("n.jsonl"), /*strict=*/false, &stats);
    CHECK(items.size() == 3);
    CHECK(stats.accepted == 3);
    CHECK(stats.rejected == 2);
}

TEST_CASE("load_filings_jsonl: kinds parse and bodies survive") {
    TempDir dir("md");
    write_file(dir.file("f.jsonl"),
               R"({"symbol":"ACME","date":"2024-01-02","kind":"annual-10K","body":"Item 1A. Risks."})"
               "\n"
               R"({"symbol":"ACME","date":"2024-01-03","kind":"quarterly-10Q","body":"Q results."})"
               "\n");
    auto docs = load_filings_jsonl(dir.file("f.jsonl"));
    REQUIRE(docs.size() == 2);
    CHECK(docs[0].kind == FilingKind::annual_10k);
    CHECK(docs[1].kind == FilingKind::quarterly_10q);
    CHECK(docs[0].body == "Item 1A. Risks.");
}

static PriceBar bar(const std::string& date, double close) {
    PriceBar b;
    b.date = Date::parse(date);
    b.open = b.high = b.low = b.close = close;
    b.volume = 100;
    return b;
}

static NewsItem news(const std::string& id, const std::string& date) {
    NewsItem n;
    n.id = id;
    n.date = Date::parse(date);
    n.headline = "headline " + id;
    n.summary = "summary";
    n.scope = NewsScope::macro;
    return n;
}

TEST_CASE("build_replay: Saturday news rolls to the Monday bar") {
    // 2024-01-05 is a Friday, 2024-01-08 a Monday
    std::vector<PriceBar> bars{bar("2024-01-05", 10), bar("2024-01-08", 11)};
    std::vector<NewsItem> items{news("sat", "2024-01-06")};
    auto days = build_replay(bars, items, {});
    REQUIRE(days.size() == 2);
    CHECK(days[0].macro_news.empty());
    REQUIRE(days[1].macro_news.size() == 1);
    CHECK(days[1].macro_news[0].id == "sat");
}

TEST_CASE("build_replay: empty news and filings give empty lists") {
    std::vector<PriceBar> bars{bar("2024-01-02", 10), bar("2024-01-03", 11)};
    auto days = build_replay(bars, {}, {});
    REQUIRE(days.size() == 2);
    for (const auto& d : days) {
        CHECK(d.company_news.empty());
        CHECK(d.macro_news.empty());
        CHECK(d.filings.empty());
    }
}

TEST_CASE("build_replay: partition matches a brute-force bucketing oracle") {
    std::vector<PriceBar> bars{bar("2024-01-02", 10), bar("2024-01-03", 11), bar("2024-01-04", 12),
                               bar("2024-01-05", 13), bar("2024-01-08", 14)};
    std::vector<NewsItem> items;
    const char* dates[] = {"2024-01-01", "2024-01-02", "2024-01-02", "2024-01-03", "2024-01-04",
                           "2024-01-05", "2024-01-06", "2024-01-07", "2024-01-08", "2024-01-08"};
    for (int i = 0; i < 10; ++i) items.push_back(news("n" + std::to_string(i), dates[i]));

    ReplayStats stats;
    auto days = build_replay(bars, items, {}, &stats);

    // oracle: each item lands on the first bar with bar.date >= item.date
    std::map<std::string, std::vector<std::string>> oracle;
    for (const auto& item : items)
        for (const auto& b : bars)
            if (!(b.date < item.date)) {
                oracle[b.date.to_string()].push_back(item.id);
                break;
            }
    for (const auto& d : days) {
        std::vector<std::string> got;
        for (const auto& n : d.macro_news) got.push_back(n.id);
        CHECK(got == oracle[d.date.to_string()]);
    }
    CHECK(stats.items_in == 10);
    CHECK(stats.items_attached + stats.items_dropped_after_range == stats.items_in);
    CHECK(stats.items_dropped_after_range == 0);
}

TEST_CASE("build_replay: items after the last bar are dropped and counted") {
    std::vector<PriceBar> bars{bar("2024-01-02", 10), bar("2024-01-03", 11)};
    std::vector<NewsItem> items{news("late", "2024-02-01"), news("ok", "2024-01-03")};
    ReplayStats stats;
    auto days = build_replay(bars, items, {}, &stats);
    CHECK(stats.items_dropped_after_range == 1);
    CHECK(stats.items_attached == 1);
    REQUIRE(days[1].macro_news.size() == 1);
    CHECK(days[1].macro_news[0].id == "ok");
}

TEST_CASE("build_replay: deterministic across repeated builds") {
    std::vector<PriceBar> bars{bar("2024-01-02", 10), bar("2024-01-03", 11), bar("2024-01-04", 12)};
    std::vector<NewsItem> items{news("a", "2024-01-02"), news("b", "2024-01-03")};
    auto a = build_replay(bars, items, {});
    auto b = build_replay(bars, items, {});
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].date == b[i].date);
        REQUIRE(a[i].macro_news.size() == b[i].macro_news.size());
        for (std::size_t j = 0; j < a[i].macro_news.size(); ++j)
            CHECK(a[i].macro_news[j].id == b[i].macro_news[j].id);
    }
}
