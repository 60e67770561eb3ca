#include <doctest.h>

#include <sstream>

#include "helpers.hpp"

using namespace sdhawkes;

namespace {

const std::string kMessages = std::string(SDHAWKES_FIXTURE_DIR) + "/golden_messages.csv";
const std::string kBook = std::string(SDHAWKES_FIXTURE_DIR) + "/golden_book.csv";

Level1Snapshot book(std::int64_t ap, std::int64_t as, std::int64_t bp, std::int64_t bs) {
    return Level1Snapshot{ap, as, bp, bs};
}

}  // namespace

TEST_CASE("message rows parse field by field into nanoseconds") {
    std::istringstream in("34200.123456789,1,12345,100,505000,1\n");
    const ParsedLob lob = parse_messages(in);
    REQUIRE(lob.messages.size() == 1);
    const LobMessage& m = lob.messages[0];
    CHECK(m.time_ns == 34200123456789LL);
    CHECK(m.time_seconds() == doctest::Approx(34200.123456789).epsilon(1e-15));
    CHECK(m.type == LobMessageType::submission);
    CHECK(m.order_id == 12345);
    CHECK(m.size == 100);
    CHECK(m.price == 505000);
    CHECK(m.direction == OrderDirection::buy);
}

TEST_CASE("malformed rows raise errors that name the line") {
    std::istringstream zero_direction("34200.1,1,1,100,505000,0\n");
    CHECK_THROWS_AS(parse_messages(zero_direction), DataError);

    std::istringstream short_row("34200.1,1,1,100\n");
    try {
        parse_messages(short_row);
        FAIL("expected a parse error");
    } catch (const DataError& e) {
        CHECK(std::string(e.what()).find("line 1") != std::string::npos);
    }

    std::istringstream bad_type("34200.1,9,1,100,505000,1\n");
    CHECK_THROWS_AS(parse_messages(bad_type), DataError);

    std::istringstream non_monotone("100.0,1,1,100,505000,1\n99.0,1,2,100,505000,1\n");
    const ParsedLob lob = parse_messages(non_monotone);
    REQUIRE(lob.warnings.size() == 1);
    CHECK(lob.warnings[0].find("non-monotone") != std::string::npos);
}

TEST_CASE("parse then serialise is byte-identical on the fixture") {
    const ParsedLob lob = parse_messages(kMessages);
    std::ifstream raw(kMessages);
    std::stringstream buffer;
    buffer << raw.rdbuf();
    CHECK(serialise_messages(lob) == buffer.str());
}

TEST_CASE("tied-timestamp executions aggregate by direction") {
    const auto run = [](const std::string& text) {
        std::istringstream in(text);
        return aggregate_executions(parse_messages(in));
    };

    // same nanosecond, same direction: one event with summed size
    const ParsedLob same = run("100.000000001,4,1,100,500100,-1\n100.000000001,4,2,50,500100,-1\n");
    REQUIRE(same.messages.size() == 1);
    CHECK(same.messages[0].size == 150);

    // one nanosecond apart: kept separate
    const ParsedLob apart = run("100.000000001,4,1,100,500100,-1\n100.000000002,4,2,50,500100,-1\n");
    CHECK(apart.messages.size() == 2);

    // mixed directions: different market orders
    const ParsedLob mixed = run("100.000000001,4,1,100,500100,-1\n100.000000001,4,2,50,500000,1\n");
    CHECK(mixed.messages.size() == 2);
}

TEST_CASE("level-I classification follows the bid/ask event definitions") {
    const auto classify_two = [](const std::string& rows, const std::string& books) {
        std::istringstream in(rows), bk(books);
        const ParsedLob lob = parse_messages(in, &bk);
        return classify_level1(lob);
    };

    // buy limit at the prevailing bid -> bid event
    const ClassifiedFlow at_bid = classify_two(
        "1.0,1,1,10,500000,1\n2.0,1,2,10,500000,1\n",
        "500100,100,500000,100\n500100,100,500000,110\n");
    REQUIRE(at_bid.events.size() == 2);
    CHECK(at_bid.events[1].side == FlowSide::bid);

    // deletion of a sell order at the ask -> bid event
    const ClassifiedFlow sell_cancel = classify_two(
        "1.0,1,1,10,500000,1\n2.0,3,2,50,500100,-1\n",
        "500100,100,500000,100\n500100,50,500000,100\n");
    CHECK(sell_cancel.events[1].side == FlowSide::bid);

    // buy limit two ticks below the bid -> dropped as deeper
    const ClassifiedFlow deeper = classify_two(
        "1.0,1,1,10,500000,1\n2.0,1,2,10,499800,1\n",
        "500100,100,500000,100\n500100,100,500000,100\n");
    CHECK(deeper.events.size() == 1);
    CHECK(deeper.stats.dropped_deeper == 1);

    // executions classify by the side of the consumed liquidity
    const ClassifiedFlow buy_market = classify_two(
        "1.0,1,1,10,500000,1\n2.0,4,2,50,500100,-1\n",
        "500100,100,500000,100\n500100,50,500000,100\n");
    CHECK(buy_market.events[1].side == FlowSide::bid);
}

TEST_CASE("spread states split at exactly one tick") {
    CHECK(spread_state(book(500100, 10, 500000, 10), 100) == 0);
    CHECK(spread_state(book(500300, 10, 500000, 10), 100) == 1);  // three ticks
    CHECK_THROWS_AS(spread_state(book(500100, 0, 500000, 10), 100), DataError);
}

TEST_CASE("queue imbalance bins are right-open with exact boundaries") {
    // QI = 0.5 -> buy+
    CHECK(qi_state(book(500100, 100, 500000, 300)) == 3);
    // QI = 0.2 exactly -> buy+ (bin [0.2, 0.6))
    CHECK(qi_state(book(500100, 200, 500000, 300)) == 3);
    // QI = -0.2 exactly -> neutral (bin [-0.2, 0.2))
    CHECK(qi_state(book(500100, 300, 500000, 200)) == 2);
    // QI = -0.6 exactly -> sell+ (bin [-0.6, -0.2))
    CHECK(qi_state(book(500100, 400, 500000, 100)) == 1);
    // QI = 0.6 exactly -> buy++ (bin [0.6, 1])
    CHECK(qi_state(book(500100, 100, 500000, 400)) == 4);
    // extremes
    CHECK(qi_state(book(500100, 100, 500000, 0x7fffffff)) == 4);
    CHECK(qi_state(book(500100, 1000, 500000, 1)) == 0);
    CHECK_THROWS_AS(qi_state(book(500100, 0, 500000, 10)), DataError);
}

TEST_CASE("golden fixture reproduces the hand-computed sequence for both specs") {
    const double t0 = 43200.0;
    const double horizon = 52200.0;

    // Timestamps through the library's defined conversion (integer ns * 1e-9).
    const std::vector<std::int64_t> expected_ns{
        43200000001001, 43200000003001, 43200000004001, 43200000005001, 43200000006001,
        43200000007001, 43200000011001, 43200000012001, 43200000013001, 43200000014001,
        43200000015001, 43200000016001, 43200000017001, 43200000018001};
    std::vector<double> expected_times;
    for (const std::int64_t ns : expected_ns)
        expected_times.push_back(static_cast<double>(ns) * 1e-9);
    // ask = 0, bid = 1
    const std::vector<std::size_t> expected_events{1, 1, 1, 0, 0, 0, 1, 1, 0, 1, 0, 0, 1, 1};

    SUBCASE("spread states") {
        const IngestResult result = ingest_lob_files(
            kMessages, kBook, StateVariableSpec::spread_states(100), t0, horizon);
        const std::vector<std::size_t> expected_states{0, 0, 1, 0, 0, 0, 0, 1, 1, 0, 1, 0, 0, 0};
        CHECK(result.sequence.times == expected_times);
        CHECK(result.sequence.events == expected_events);
        CHECK(result.sequence.states == expected_states);
        CHECK(result.sequence.initial_state == 0);
        CHECK(result.stats.classification.dropped_deeper == 3);  // rows 1, 3, 12
        CHECK(result.stats.classification.dropped_hidden == 1);
        CHECK(result.stats.classification.dropped_unclassifiable == 1);
        CHECK(result.stats.residual_ties == 0);
        CHECK(result.dims.event_labels == std::vector<std::string>{"ask", "bid"});
    }

    SUBCASE("queue imbalance states, including the QI = 0.2 boundary") {
        const IngestResult result = ingest_lob_files(
            kMessages, kBook, StateVariableSpec::queue_imbalance_states(), t0, horizon);
        const std::vector<std::size_t> expected_states{2, 3, 2, 3, 2, 1, 3, 2, 2, 1, 2, 1, 4, 4};
        CHECK(result.sequence.times == expected_times);
        CHECK(result.sequence.events == expected_events);
        CHECK(result.sequence.states == expected_states);
        // book at the window start: (ask 300, bid 200) -> QI = -0.2 -> neutral
        CHECK(result.sequence.initial_state == 2);
        CHECK(result.sequence.states[3] == 3);  // row 7: QI = 0.2 exactly -> buy+
    }

    SUBCASE("keep_history retains the pre-window prefix") {
        const IngestResult result = ingest_lob_files(
            kMessages, kBook, StateVariableSpec::spread_states(100), t0, horizon, true);
        // the only pre-window row is a deeper-level submission, dropped anyway
        CHECK(result.sequence.times == expected_times);
    }
}

TEST_CASE("mirror symmetry swaps sides and reverses the QI bin order") {
    const ParsedLob lob = aggregate_executions(parse_messages(kMessages, kBook));
    const ClassifiedFlow flow = classify_level1(lob);

    // Mirror the market about a fixed price level: directions flip, the book
    // sides swap around the reflected prices.
    ParsedLob mirrored = lob;
    const std::int64_t pivot = 1000200;
    for (auto& m : mirrored.messages) {
        m.direction = m.direction == OrderDirection::buy ? OrderDirection::sell
                                                         : OrderDirection::buy;
        m.price = pivot - m.price;
    }
    for (auto& b : mirrored.books) {
        const Level1Snapshot original = b;
        b.ask_price = pivot - original.bid_price;
        b.ask_size = original.bid_size;
        b.bid_price = pivot - original.ask_price;
        b.bid_size = original.ask_size;
    }
    const ClassifiedFlow mirrored_flow = classify_level1(mirrored);
    REQUIRE(mirrored_flow.events.size() == flow.events.size());
    for (std::size_t i = 0; i < flow.events.size(); ++i) {
        CHECK(mirrored_flow.events[i].side !=
              flow.events[i].side);  // ask <-> bid
    }

    const IngestResult straight = build_sequence(flow, lob,
                                                 StateVariableSpec::queue_imbalance_states(),
                                                 43200.0, 52200.0);
    const IngestResult flipped = build_sequence(mirrored_flow, mirrored,
                                                StateVariableSpec::queue_imbalance_states(),
                                                43200.0, 52200.0);
    REQUIRE(straight.sequence.size() == flipped.sequence.size());
    for (std::size_t n = 0; n < straight.sequence.size(); ++n) {
        CHECK(flipped.sequence.events[n] == 1 - straight.sequence.events[n]);
        // Bin reversal holds off the bin edges; the right-open boundaries map
        // an exact edge into the neighbouring bin under reflection.
        const Level1Snapshot& after = lob.books[flow.events[n].message_index];
        const std::int64_t num = after.bid_size - after.ask_size;
        const std::int64_t den = after.bid_size + after.ask_size;
        const bool on_edge =
            5 * num == -3 * den || 5 * num == -den || 5 * num == den || 5 * num == 3 * den;
        if (!on_edge) CHECK(flipped.sequence.states[n] == 4 - straight.sequence.states[n]);
    }
}

TEST_CASE("crossed or negative book rows are rejected with the line number") {
    std::istringstream messages("1.0,1,1,10,500000,1\n");
    std::istringstream crossed("500000,100,500100,100\n");
    CHECK_THROWS_AS(parse_messages(messages, &crossed), DataError);

    std::istringstream messages2("1.0,1,1,10,500000,1\n");
    std::istringstream negative("500100,-5,500000,100\n");
    CHECK_THROWS_AS(parse_messages(messages2, &negative), DataError);

    // an empty side is fine even with a stale price on the other
    std::istringstream messages3("1.0,1,1,10,500000,1\n");
    std::istringstream one_sided("0,0,500000,100\n");
    CHECK_NOTHROW(parse_messages(messages3, &one_sided));
}

TEST_CASE("undefined states are skipped and counted") {
    std::istringstream in("1.0,1,1,10,500000,1\n2.0,1,2,10,500000,1\n");
    std::istringstream bk("500100,100,500000,100\n500100,0,500000,110\n");  // ask empties
    const ParsedLob lob = parse_messages(in, &bk);
    const ClassifiedFlow flow = classify_level1(lob);
    const IngestResult result =
        build_sequence(flow, lob, StateVariableSpec::queue_imbalance_states(), 0.0, 10.0);
    CHECK(result.stats.skipped_undefined_state == 1);
    CHECK(result.sequence.size() == 1);
}

TEST_CASE("residual nanosecond ties keep stable order via an ulp nudge") {
    // A submission and a cancellation sharing one nanosecond survive
    // aggregation as distinct events.
    std::istringstream in(
        "1.0,1,1,10,500000,1\n"
        "2.000000001,1,2,10,500000,1\n"
        "2.000000001,3,3,10,500100,-1\n");
    std::istringstream bk(
        "500100,100,500000,100\n"
        "500100,100,500000,110\n"
        "500100,90,500000,110\n");
    const ParsedLob lob = parse_messages(in, &bk);
    const ClassifiedFlow flow = classify_level1(lob);
    const IngestResult result =
        build_sequence(flow, lob, StateVariableSpec::spread_states(100), 0.0, 10.0);
    CHECK(result.stats.residual_ties == 1);
    REQUIRE(result.sequence.size() == 3);
    CHECK(result.sequence.times[2] > result.sequence.times[1]);
    CHECK(result.sequence.times[2] - result.sequence.times[1] < 1e-9);
    CHECK_NOTHROW(result.sequence.check(result.dims));
}
