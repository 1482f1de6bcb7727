#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <sstream>
#include <thread>

#include "finpos/cli.hpp"
#include "helpers.hpp"

using namespace finpos;
using namespace finpos::bt;
using testutil::TempDir;

namespace {

int run(std::vector<std::string> args, std::string* out_text = nullptr,
        std::string* err_text = nullptr) {
    std::vector<const char*> argv{"finpos"};
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
    if (out_text) *out_text = out.str();
    if (err_text) *err_text = err.str();
    return code;
}

std::vector<double> ramp(std::size_t n, double start = 100.0, double slope = 1.0) {
    std::vector<double> v;
    for (std::size_t i = 0; i < n; ++i) v.push_back(start + slope * static_cast<double>(i));
    return v;
}

}  // namespace

TEST_CASE("backtest: runs from flags and writes the artifact set") {
    TempDir dir("cli");
    const std::string prices = testutil::write_price_fixture(dir, ramp(20));
    const std::string out_dir = dir.file("out");
    std::string out_text;
    const int code = run({"backtest", "--symbol", "ACME", "--prices", prices, "--out", out_dir,
                          "--test-start", "2024-01-01", "--test-end", "2024-12-31"},
                         &out_text);
    CHECK(code == 0);
    CHECK(out_text.find("backtest done") != std::string::npos);
    for (const char* name : {"report.json", "decisions.jsonl", "returns.svg", "exposure.svg"}) {
        CAPTURE(name);
        CHECK(std::filesystem::exists(std::filesystem::path(out_dir) / name));
    }
}

TEST_CASE("backtest: config file drives the run, flags override it") {
    TempDir dir("cli");
    const std::string prices = testutil::write_price_fixture(dir, ramp(20));
    ojson config;
    config["symbol"] = "ACME";
    config["data"]["prices"] = prices;
    config["test"]["start"] = "2024-01-01";
    config["test"]["end"] = "2024-12-31";
    config["output_dir"] = dir.file("from_config");
    write_file(dir.file("run.json"), config.dump(2));

    CHECK(run({"backtest", "--config", dir.file("run.json")}) == 0);
    CHECK(std::filesystem::exists(dir.file("from_config/report.json")));

    // --out beats output_dir from the file
    CHECK(run({"backtest", "--config", dir.file("run.json"), "--out", dir.file("from_flag")}) == 0);
    CHECK(std::filesystem::exists(dir.file("from_flag/report.json")));
}

TEST_CASE("backtest: train phase writes a memory snapshot for later restore") {
    TempDir dir("cli");
    const std::string prices = testutil::write_price_fixture(dir, ramp(40));
    const std::string snapshot = dir.file("memory.json");
    const int code = run({"backtest", "--symbol", "ACME", "--prices", prices, "--out",
                          dir.file("out1"), "--train-start", "2024-01-01", "--train-end",
                          "2024-01-31", "--test-start", "2024-02-01", "--test-end", "2024-12-31",
                          "--memory-out", snapshot});
    CHECK(code == 0);
    REQUIRE(std::filesystem::exists(snapshot));
    CHECK(json::parse(read_file(snapshot))["schema_version"] == 1);

    // restore into a test-only run
    const int code2 = run({"backtest", "--symbol", "ACME", "--prices", prices, "--out",
                           dir.file("out2"), "--test-start", "2024-02-01", "--test-end",
                           "2024-12-31", "--memory-in", snapshot});
    CHECK(code2 == 0);
}

TEST_CASE("missing price file exits with the data error code") {
    TempDir dir("cli");
    std::string err;
    const int code = run({"backtest", "--symbol", "ACME", "--prices", dir.file("nope.csv"),
                          "--out", dir.file("out"), "--test-start", "2024-01-01", "--test-end",
                          "2024-12-31"},
                         nullptr, &err);
    CHECK(code == 2);
    CHECK(err.find("error (data)") != std::string::npos);
}

TEST_CASE("usage errors exit 1") {
    std::string err;
    CHECK(run({"backtest"}, nullptr, &err) == 1);  // no symbol/prices
    CHECK(run({"no-such-subcommand"}, nullptr, &err) == 1);
    CHECK(run({"baseline", "--kind", "hodl", "--symbol", "A", "--prices", "x.csv"}, nullptr,
              &err) == 1);
}

TEST_CASE("--json-errors emits a machine-readable error object") {
    TempDir dir("cli");
    std::string err;
    const int code = run({"--json-errors", "backtest", "--symbol", "ACME", "--prices",
                          dir.file("nope.csv"), "--out", dir.file("out"), "--test-start",
                          "2024-01-01", "--test-end", "2024-12-31"},
                         nullptr, &err);
    CHECK(code == 2);
    auto j = json::parse(err);
    CHECK(j["error"] == "data");
    CHECK(j["exit_code"] == 2);
    CHECK(j["message"].get<std::string>().find("nope.csv") != std::string::npos);
}

TEST_CASE("compare: agent plus baselines land in one report") {
    TempDir dir("cli");
    const std::string prices = testutil::write_price_fixture(dir, ramp(25));
    const std::string out_dir = dir.file("out");
    const int code = run({"compare", "--symbol", "ACME", "--prices", prices, "--out", out_dir,
                          "--test-start", "2024-01-01", "--test-end", "2024-12-31", "--baselines",
                          "buy-hold,random"});
    CHECK(code == 0);
    auto report = json::parse(read_file(out_dir + "/report.json"));
    CHECK(report["results"].size() == 3);
    CHECK(report["results"].contains("finpos"));
    CHECK(report["results"].contains("buy-hold"));
    CHECK(report["results"].contains("random"));
}

TEST_CASE("compare: identical invocations produce byte-identical artifacts") {
    TempDir dir("cli");
    const std::string prices = testutil::write_price_fixture(dir, ramp(25));
    auto invoke = [&](const std::string& out_dir) {
        return run({"compare", "--symbol", "ACME", "--prices", prices, "--out", out_dir,
                    "--test-start", "2024-01-01", "--test-end", "2024-12-31", "--seed", "7",
                    "--baselines", "buy-hold,random"});
    };
    CHECK(invoke(dir.file("a")) == 0);
    CHECK(invoke(dir.file("b")) == 0);
    for (const char* name : {"report.json", "decisions.jsonl"}) {
        CAPTURE(name);
        CHECK(read_file(dir.file("a/") + name) == read_file(dir.file("b/") + name));
    }
}

TEST_CASE("baseline: runs a single named strategy") {
    TempDir dir("cli");
    const std::string prices = testutil::write_price_fixture(dir, ramp(15));
    std::string out_text;
    const int code = run({"baseline", "--kind", "buy-hold", "--symbol", "ACME", "--prices", prices,
                          "--out", dir.file("out"), "--test-start", "2024-01-01", "--test-end",
                          "2024-12-31"},
                         &out_text);
    CHECK(code == 0);
    CHECK(out_text.find("buy-hold") != std::string::npos);
    auto report = json::parse(read_file(dir.file("out/report.json")));
    CHECK(report["results"].contains("buy-hold"));
}

TEST_CASE("report: rebuilds artifacts from a decision log and audits them") {
    TempDir dir("cli");
    const std::string prices = testutil::write_price_fixture(dir, ramp(15));
    const std::string first_out = dir.file("first");
    REQUIRE(run({"baseline", "--kind", "buy-hold", "--symbol", "ACME", "--prices", prices, "--out",
                 first_out, "--test-start", "2024-01-01", "--test-end", "2024-12-31"}) == 0);

    const std::string rebuilt = dir.file("rebuilt");
    const int code = run({"report", "--symbol", "ACME", "--prices", prices, "--out", rebuilt,
                          "--test-start", "2024-01-01", "--test-end", "2024-12-31", "--log",
                          first_out + "/decisions.jsonl"});
    CHECK(code == 0);
    CHECK(read_file(rebuilt + "/report.json") == read_file(first_out + "/report.json"));
}

TEST_CASE("report: a tampered decision log fails the audit") {
    TempDir dir("cli");
    const std::string prices = testutil::write_price_fixture(dir, ramp(15));
    const std::string first_out = dir.file("first");
    REQUIRE(run({"baseline", "--kind", "buy-hold", "--symbol", "ACME", "--prices", prices, "--out",
                 first_out, "--test-start", "2024-01-01", "--test-end", "2024-12-31"}) == 0);

    // inflate a position so the replay no longer matches the recorded orders
    std::string log = read_file(first_out + "/decisions.jsonl");
    const auto pos = log.find("\"position_after\":1");
    REQUIRE(pos != std::string::npos);
    log.replace(pos, 18, "\"position_after\":9");
    write_file(dir.file("tampered.jsonl"), log);

    std::string err;
    const int code = run({"report", "--symbol", "ACME", "--prices", prices, "--out",
                          dir.file("rebuilt"), "--test-start", "2024-01-01", "--test-end",
                          "2024-12-31", "--log", dir.file("tampered.jsonl")},
                         nullptr, &err);
    CHECK(code == 2);
    CHECK(err.find("audit") != std::string::npos);
}

// ---------------------------------------------------------------------------
// ingest against a local mock data API

namespace {

struct MockDataServer {
    httplib::Server server;
    std::thread thread;
    int port = 0;

    MockDataServer() {
        server.Get("/prices", [](const httplib::Request& req, httplib::Response& res) {
            CHECK(req.get_param_value("symbol") == "ACME");
            json rows = json::array();
            rows.push_back({{"date", "2024-01-02"}, {"open", 100}, {"high", 101}, {"low", 99},
                            {"close", 100.5}, {"volume", 1200}});
            rows.push_back({{"date", "2024-01-03"}, {"open", 100.5}, {"high", 102}, {"low", 100},
                            {"close", 101.25}, {"volume", 900}});
            res.set_content(rows.dump(), "application/json");
        });
        server.Get("/news/company", [](const httplib::Request&, httplib::Response& res) {
            json items = json::array();
            items.push_back({{"id", "c-1"}, {"date", "2024-01-02"}, {"scope", "company"},
                             {"symbol", "ACME"}, {"headline", "ACME ships widgets"},
                             {"summary", "strong quarter"}});
            res.set_content(items.dump(), "application/json");
        });
        server.Get("/news/macro", [](const httplib::Request&, httplib::Response& res) {
            res.set_content(json::array().dump(), "application/json");
        });
        server.Get("/filings", [](const httplib::Request&, httplib::Response& res) {
            res.set_content(json::array().dump(), "application/json");
        });
        port = server.bind_to_any_port("127.0.0.1");
        thread = std::thread([this] { server.listen_after_bind(); });
        server.wait_until_ready();
    }
    ~MockDataServer() {
        server.stop();
        thread.join();
    }
    std::string endpoint() const { return "http://127.0.0.1:" + std::to_string(port); }
};

}  // namespace

TEST_CASE("ingest: writes canonical fixtures from the data API") {
    MockDataServer mock;
    TempDir dir("cli");
    std::string out_text;
    const int code = run({"ingest", "--endpoint", mock.endpoint(), "--symbol", "ACME", "--start",
                          "2024-01-01", "--end", "2024-01-31", "--out", dir.file("data")},
                         &out_text);
    CHECK(code == 0);
    CHECK(out_text.find("2 price rows") != std::string::npos);

    const std::string csv = read_file(dir.file("data/prices.csv"));
    CHECK(csv == "date,open,high,low,close,volume\n"
                 "2024-01-02,100,101,99,100.5,1200\n"
                 "2024-01-03,100.5,102,100,101.25,900\n");
    const std::string news = read_file(dir.file("data/company_news.jsonl"));
    CHECK(news.find("\"ACME ships widgets\"") != std::string::npos);
    CHECK(read_file(dir.file("data/macro_news.jsonl")).empty());
    CHECK(read_file(dir.file("data/filings.jsonl")).empty());

    // the written fixtures load straight back through the strict loaders
    CHECK(data::load_price_csv(dir.file("data/prices.csv")).size() == 2);
    CHECK(data::load_news_jsonl(dir.file("data/company_news.jsonl"), true).size() == 1);
}

TEST_CASE("ingest: rate limiting exits 3 with a JSON error when asked") {
    httplib::Server server;
    server.Get("/prices", [](const httplib::Request&, httplib::Response& res) {
        res.status = 429;
        res.set_header("Retry-After", "30");
    });
    const int port = server.bind_to_any_port("127.0.0.1");
    std::thread thread([&server] { server.listen_after_bind(); });
    server.wait_until_ready();

    TempDir dir("cli");
    std::string err;
    const int code = run({"--json-errors", "ingest", "--endpoint",
                          "http://127.0.0.1:" + std::to_string(port), "--symbol", "ACME",
                          "--start", "2024-01-01", "--end", "2024-01-31", "--out",
                          dir.file("data")},
                         nullptr, &err);
    server.stop();
    thread.join();
    CHECK(code == 3);
    auto j = json::parse(err);
    CHECK(j["error"] == "rate-limit");
    CHECK(j["exit_code"] == 3);
}

TEST_CASE("help exits 0 and mentions the subcommands") {
    std::string out_text;
    CHECK(run({"--help"}, &out_text) == 0);
    for (const char* name : {"ingest", "backtest", "baseline", "compare", "report"}) {
        CAPTURE(name);
        CHECK(out_text.find(name) != std::string::npos);
    }
}
