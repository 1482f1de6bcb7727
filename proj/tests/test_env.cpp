#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "finpos/env.hpp"
#include "helpers.hpp"

using namespace finpos;
using namespace finpos::env;

static AccountState at(std::int64_t position) {
    AccountState s;
    s.position = position;
    return s;
}

static TradeDecision make(Direction d, std::int64_t q) {
    TradeDecision td;
    td.direction = d;
    td.quantity = q;
    return td;
}

TEST_CASE("apply_decision: buy adds to the position") {
    auto r = apply_decision(at(10), make(Direction::buy, 5), 100);
    CHECK(r.state.position == 15);
    CHECK(r.executed_quantity == 5);
    CHECK_FALSE(r.clamped);
}

TEST_CASE("apply_decision: oversized sell clamps to flat with shorting off") {
    auto r = apply_decision(at(3), make(Direction::sell, 5), 100);
    CHECK(r.state.position == 0);
    CHECK(r.executed_quantity == 3);
    CHECK(r.clamped);
}

TEST_CASE("apply_decision: hold is a no-op") {
    auto r = apply_decision(at(0), make(Direction::hold, 0), 100);
    CHECK(r.state.position == 0);
    CHECK(r.executed_quantity == 0);
}

TEST_CASE("apply_decision: over-limit order is an error, never a truncation") {
    CHECK_THROWS_AS(apply_decision(at(0), make(Direction::buy, 101), 100), DataError);
}

TEST_CASE("apply_decision: hold with non-zero quantity is invalid") {
    CHECK_THROWS_AS(apply_decision(at(0), make(Direction::hold, 1), 100), DataError);
}

TEST_CASE("apply_decision: shorting enabled lets sells cross zero unclamped") {
    auto r = apply_decision(at(3), make(Direction::sell, 5), 100, /*allow_short=*/true);
    CHECK(r.state.position == -2);
    CHECK(r.executed_quantity == 5);
    CHECK_FALSE(r.clamped);
}

TEST_CASE("step_return: analytic cases") {
    CHECK(step_return(1, 100, 100) == doctest::Approx(0.0));
    CHECK(step_return(1, 100, 200) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
    CHECK(step_return(7, 50, 55) == doctest::Approx(7.0 * std::log(1.1)).epsilon(1e-12));
    CHECK_THROWS_AS(step_return(1, 0, 100), DataError);
}

TEST_CASE("run_single_step: zero actions give zero return") {
    CHECK(run_single_step({0, 0, 0}, {100, 101, 102, 103}) == doctest::Approx(0.0));
}

TEST_CASE("run_single_step: all-buy telescopes to the endpoint log ratio") {
    std::vector<double> prices{100, 105, 103, 120, 130};
    std::vector<int> actions(prices.size() - 1, 1);
    CHECK(run_single_step(actions, prices) ==
          doctest::Approx(std::log(prices.back() / prices.front())).epsilon(1e-12));
}

TEST_CASE("run_single_step: random actions match a brute-force term sum") {
    std::mt19937_64 rng(7);
    auto prices = testutil::random_walk(rng, 21);
    std::vector<int> actions;
    for (int i = 0; i < 20; ++i) actions.push_back(static_cast<int>(rng() % 3) - 1);
    double oracle = 0;
    for (std::size_t t = 0; t < actions.size(); ++t)
        oracle += actions[t] * std::log(prices[t + 1] / prices[t]);
    CHECK(run_single_step(actions, prices) == doctest::Approx(oracle).epsilon(1e-12));
}

TEST_CASE("run_single_step: length mismatch is an error") {
    CHECK_THROWS_AS(run_single_step({1, 1}, {100, 101}), DataError);
}

TEST_CASE("build_equity_curve: base cases") {
    CHECK(build_equity_curve({}, 100.0).values == std::vector<double>{100.0});
    auto curve = build_equity_curve({std::log(2.0)}, 100.0);
    REQUIRE(curve.values.size() == 2);
    CHECK(curve.values[1] == doctest::Approx(200.0).epsilon(1e-12));
}

TEST_CASE("build_equity_curve: matches a cumulative-product oracle") {
    std::mt19937_64 rng(11);
    std::vector<double> returns;
    for (int i = 0; i < 10; ++i) returns.push_back((testutil::unit(rng) - 0.5) * 0.1);
    auto curve = build_equity_curve(returns, 250.0);
    double acc = 250.0;
    REQUIRE(curve.values.size() == 11);
    CHECK(curve.values[0] == doctest::Approx(250.0));
    for (std::size_t i = 0; i < returns.size(); ++i) {
        acc *= std::exp(returns[i]);
        CHECK(curve.values[i + 1] == doctest::Approx(acc).epsilon(1e-12));
    }
}

TEST_CASE("invariant: constant position telescopes over any series") {
    std::mt19937_64 rng(3);
    for (int rep = 0; rep < 20; ++rep) {
        auto prices = testutil::random_walk(rng, 30);
        const std::int64_t p = static_cast<std::int64_t>(rng() % 9) + 1;
        double total = 0;
        for (std::size_t t = 0; t + 1 < prices.size(); ++t)
            total += step_return(p, prices[t], prices[t + 1]);
        const double expected = static_cast<double>(p) * std::log(prices.back() / prices.front());
        CHECK(total == doctest::Approx(expected).epsilon(1e-12));
    }
}

TEST_CASE("invariant: single-step all-buy equals position-aware with position 1") {
    std::mt19937_64 rng(5);
    auto prices = testutil::random_walk(rng, 25);
    std::vector<int> actions(prices.size() - 1, 1);
    double position_aware = 0;
    for (std::size_t t = 0; t + 1 < prices.size(); ++t)
        position_aware += step_return(1, prices[t], prices[t + 1]);
    CHECK(run_single_step(actions, prices) == position_aware);  // exact
}

TEST_CASE("invariant: replaying the decision log reproduces the final state") {
    std::mt19937_64 rng(13);
    auto prices = testutil::random_walk(rng, 40);
    AccountState state;
    std::vector<TradeDecision> log;
    std::vector<std::int64_t> executed;
    for (std::size_t t = 0; t + 1 < prices.size(); ++t) {
        const int draw = static_cast<int>(rng() % 3) - 1;
        TradeDecision d;
        d.direction = draw > 0 ? Direction::buy : (draw < 0 ? Direction::sell : Direction::hold);
        d.quantity = d.direction == Direction::hold ? 0 : static_cast<std::int64_t>(rng() % 5) + 1;
        auto r = apply_decision(state, d, 10);
        state = r.state;
        state.cumulative_log_return += step_return(state.position, prices[t], prices[t + 1]);
        CHECK(state.position >= 0);  // shorting off
        log.push_back(d);
        executed.push_back(r.executed_quantity);
    }
    // replay
    AccountState replayed;
    for (std::size_t t = 0; t < log.size(); ++t) {
        auto r = apply_decision(replayed, log[t], 10);
        CHECK(r.executed_quantity == executed[t]);
        replayed = r.state;
        replayed.cumulative_log_return += step_return(replayed.position, prices[t], prices[t + 1]);
    }
    CHECK(replayed.position == state.position);
    CHECK(replayed.cumulative_log_return == state.cumulative_log_return);  // bitwise
}
