#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>

#include "finpos/prompts.hpp"
#include "helpers.hpp"

using namespace finpos;
using namespace finpos::agents;
using testutil::TempDir;

TEST_CASE("registry ships the full template set") {
    PromptRegistry registry;
    const auto ids = registry.ids();
    for (const char* id :
         {"filter-10K", "filter-10Q", "analyze-10K", "analyze-10Q", "filter-macro", "analyze-macro",
          "filter-company-news", "analyze-company-news", "decide-direction-train",
          "decide-direction-test", "decide-quantity-train", "decide-quantity-test", "reflect"}) {
        CAPTURE(id);
        CHECK(std::find(ids.begin(), ids.end(), id) != ids.end());
    }
    CHECK_THROWS_AS(registry.get("no-such-template"), DataError);
}

TEST_CASE("render: decide-quantity-test binds the order cap into the text") {
    PromptRegistry registry;
    const std::string text = registry.render(
        "decide-quantity-test", {{"investment_info", "Momentum summary: flat."}, {"maxcvar", "200"}});
    CHECK(text.find("maximum order quantity 200") != std::string::npos);
    CHECK(text.find("{maxcvar}") == std::string::npos);
}

TEST_CASE("render: placeholder-free template passes through unchanged") {
    PromptTemplate tpl{"t", "No placeholders here. JSON braces {\"key\": 1} survive."};
    CHECK(render(tpl, {}) == tpl.body);
}

TEST_CASE("render: unbound placeholder is named in the error") {
    PromptTemplate tpl{"t", "Company {symbol} report."};
    CHECK_THROWS_WITH_AS(render(tpl, {}), doctest::Contains("symbol"), DataError);
}

TEST_CASE("render: residual markers after substitution are rejected") {
    PromptTemplate tpl{"t", "Value {a}."};
    CHECK_THROWS_AS(render(tpl, {{"a", "{sneaky}"}}), DataError);
}

TEST_CASE("render: idempotent and deterministic") {
    PromptRegistry registry;
    const std::map<std::string, std::string> bindings{
        {"symbol", "ACME"}, {"filtered_key_points", "Revenue grew; margins compressed."}};
    CHECK(registry.render("filter-10K", bindings) == registry.render("filter-10K", bindings));
}

TEST_CASE("placeholders: JSON literal braces are not placeholders") {
    // response-format examples inside template bodies contain quoted braces
    const auto found = agents::detail::find_placeholders(
        "Output {\"investment_decision\": \"buy\"} and bind {investment_info}.");
    REQUIRE(found.size() == 1);
    CHECK(found[0].second == "investment_info");
}

TEST_CASE("templates: decision bodies expose the expected placeholders") {
    PromptRegistry registry;
    auto names = placeholders_of(registry.get("decide-direction-train"));
    CHECK(std::find(names.begin(), names.end(), "investment_info") != names.end());
    names = placeholders_of(registry.get("decide-quantity-train"));
    CHECK(std::find(names.begin(), names.end(), "maxcvar") != names.end());
}

TEST_CASE("write_files/load_manifest round-trips every template body") {
    TempDir dir("prompts");
    PromptRegistry registry;
    registry.write_files(dir.path());

    PromptRegistry loaded;
    loaded.load_manifest(dir.path());
    for (const auto& id : registry.ids()) {
        CAPTURE(id);
        CHECK(loaded.get(id).body == registry.get(id).body);
    }
}

TEST_CASE("decision template bodies are free of future-delta bindings") {
    // the train-only future deltas enter via the investment_info binding, never
    // via the template text itself
    PromptRegistry registry;
    for (const char* id : {"decide-direction-train", "decide-direction-test",
                           "decide-quantity-train", "decide-quantity-test"}) {
        const std::string& body = registry.get(id).body;
        CAPTURE(id);
        CHECK(body.find("cur_record_t1") == std::string::npos);
        CHECK(body.find("Your decision return is") == std::string::npos);
    }
    // the train template warns about future deltas, the test template has no
    // reason to mention them
    CHECK(registry.get("decide-direction-train").body.find("Do NOT use any future price") !=
          std::string::npos);
}
