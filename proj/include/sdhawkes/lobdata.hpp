#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <istream>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "errors.hpp"
#include "model.hpp"

namespace sdhawkes {

// LOBSTER message types.
enum class LobMessageType : int {
    submission = 1,
    partial_cancel = 2,
    deletion = 3,
    execution_visible = 4,
    execution_hidden = 5,
    auction = 6,
    halt = 7,
};

enum class OrderDirection : int { sell = -1, buy = 1 };

struct LobMessage {
    std::int64_t time_ns = 0;  // nanoseconds since midnight
    LobMessageType type = LobMessageType::submission;
    std::int64_t order_id = 0;
    std::int64_t size = 0;    // shares
    std::int64_t price = 0;   // price * 1e4
    OrderDirection direction = OrderDirection::buy;

    double time_seconds() const { return static_cast<double>(time_ns) * 1e-9; }
};

// Level-I book snapshot. A size of zero marks an empty side.
struct Level1Snapshot {
    std::int64_t ask_price = 0;
    std::int64_t ask_size = 0;
    std::int64_t bid_price = 0;
    std::int64_t bid_size = 0;

    bool ask_present() const { return ask_size > 0; }
    bool bid_present() const { return bid_size > 0; }
};

struct ParsedLob {
    std::vector<LobMessage> messages;
    std::vector<Level1Snapshot> books;  // aligned 1:1, book after each message
    std::vector<std::string> warnings;

    bool has_books() const { return !books.empty(); }
};

namespace detail {

inline std::int64_t parse_int_field(std::string_view field, std::size_t line, const char* what) {
    std::int64_t value = 0;
    const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
    if (ec != std::errc{} || ptr != field.data() + field.size())
        throw DataError("line " + std::to_string(line) + ": bad " + what + " field '" +
                        std::string(field) + "'");
    return value;
}

// Seconds-with-fraction timestamp parsed exactly into integer nanoseconds.
inline std::int64_t parse_time_ns(std::string_view field, std::size_t line) {
    const std::size_t dot = field.find('.');
    std::string_view whole = field.substr(0, dot);
    std::string_view frac = dot == std::string_view::npos ? std::string_view{} : field.substr(dot + 1);
    if (frac.size() > 9) frac = frac.substr(0, 9);  // beyond nanoseconds: truncate
    std::int64_t ns = parse_int_field(whole, line, "time") * 1'000'000'000;
    if (!frac.empty()) {
        std::int64_t f = parse_int_field(frac, line, "time fraction");
        for (std::size_t i = frac.size(); i < 9; ++i) f *= 10;
        ns += f;
    }
    return ns;
}

inline std::vector<std::string_view> split_csv_row(std::string_view row) {
    std::vector<std::string_view> fields;
    std::size_t begin = 0;
    while (true) {
        const std::size_t comma = row.find(',', begin);
        if (comma == std::string_view::npos) {
            fields.push_back(row.substr(begin));
            break;
        }
        fields.push_back(row.substr(begin, comma - begin));
        begin = comma + 1;
    }
    return fields;
}

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

}  // namespace detail

// Parses a LOBSTER message stream (6 columns, no header) plus an optional
// aligned book file (ask_price,ask_size,bid_price,bid_size per message row).
// Malformed rows raise DataError with the line number; non-monotone
// timestamps produce a warning record instead.
inline ParsedLob parse_messages(std::istream& messages, std::istream* books = nullptr) {
    ParsedLob out;
    std::string line;
    std::size_t line_number = 0;
    while (std::getline(messages, line)) {
        ++line_number;
        const std::string_view row = detail::trim(line);
        if (row.empty()) continue;
        const auto fields = detail::split_csv_row(row);
        if (fields.size() != 6)
            throw DataError("line " + std::to_string(line_number) + ": expected 6 fields, got " +
                            std::to_string(fields.size()));

        LobMessage m;
        m.time_ns = detail::parse_time_ns(detail::trim(fields[0]), line_number);
        const std::int64_t type = detail::parse_int_field(detail::trim(fields[1]), line_number, "type");
        if (type < 1 || type > 7)
            throw DataError("line " + std::to_string(line_number) + ": message type out of range");
        m.type = static_cast<LobMessageType>(type);
        m.order_id = detail::parse_int_field(detail::trim(fields[2]), line_number, "order id");
        m.size = detail::parse_int_field(detail::trim(fields[3]), line_number, "size");
        m.price = detail::parse_int_field(detail::trim(fields[4]), line_number, "price");
        const std::int64_t direction =
            detail::parse_int_field(detail::trim(fields[5]), line_number, "direction");
        if (direction != -1 && direction != 1)
            throw DataError("line " + std::to_string(line_number) + ": direction must be -1 or 1");
        m.direction = static_cast<OrderDirection>(direction);

        const bool event_like = m.type == LobMessageType::submission ||
                                m.type == LobMessageType::execution_visible ||
                                m.type == LobMessageType::execution_hidden;
        if (event_like && m.size <= 0)
            throw DataError("line " + std::to_string(line_number) +
                            ": size must be positive for submissions and executions");

        if (!out.messages.empty() && m.time_ns < out.messages.back().time_ns)
            out.warnings.push_back("line " + std::to_string(line_number) +
                                   ": non-monotone timestamp");
        out.messages.push_back(m);
    }

    if (books) {
        std::string book_line;
        std::size_t book_number = 0;
        while (std::getline(*books, book_line)) {
            ++book_number;
            const std::string_view row = detail::trim(book_line);
            if (row.empty()) continue;
            const auto fields = detail::split_csv_row(row);
            if (fields.size() != 4)
                throw DataError("book line " + std::to_string(book_number) + ": expected 4 fields");
            Level1Snapshot snapshot;
            snapshot.ask_price = detail::parse_int_field(detail::trim(fields[0]), book_number, "ask price");
            snapshot.ask_size = detail::parse_int_field(detail::trim(fields[1]), book_number, "ask size");
            snapshot.bid_price = detail::parse_int_field(detail::trim(fields[2]), book_number, "bid price");
            snapshot.bid_size = detail::parse_int_field(detail::trim(fields[3]), book_number, "bid size");
            if (snapshot.ask_size < 0 || snapshot.bid_size < 0)
                throw DataError("book line " + std::to_string(book_number) + ": negative size");
            if (snapshot.ask_present() && snapshot.bid_present() &&
                snapshot.ask_price <= snapshot.bid_price)
                throw DataError("book line " + std::to_string(book_number) + ": crossed book");
            out.books.push_back(snapshot);
        }
        if (out.books.size() != out.messages.size())
            throw DataError("book file has " + std::to_string(out.books.size()) +
                            " rows but the message file has " + std::to_string(out.messages.size()));
    }
    return out;
}

inline ParsedLob parse_messages(const std::string& message_path, const std::string& book_path = {}) {
    std::ifstream messages(message_path);
    if (!messages) throw DataError("cannot open message file " + message_path);
    if (book_path.empty()) return parse_messages(messages, nullptr);
    std::ifstream books(book_path);
    if (!books) throw DataError("cannot open book file " + book_path);
    return parse_messages(messages, &books);
}

inline std::string serialise_messages(const ParsedLob& lob) {
    std::string out;
    char buffer[160];
    for (const auto& m : lob.messages) {
        const std::int64_t sec = m.time_ns / 1'000'000'000;
        const std::int64_t frac = m.time_ns % 1'000'000'000;
        std::snprintf(buffer, sizeof(buffer), "%lld.%09lld,%d,%lld,%lld,%lld,%d\n",
                      static_cast<long long>(sec), static_cast<long long>(frac),
                      static_cast<int>(m.type), static_cast<long long>(m.order_id),
                      static_cast<long long>(m.size), static_cast<long long>(m.price),
                      static_cast<int>(m.direction));
        out += buffer;
    }
    return out;
}

// Collapses runs of visible executions that share the same nanosecond
// timestamp and direction into a single market order with summed size; the
// LOBSTER feed records one row per matched resting order. The surviving row
// keeps the book of the last row in the run.
inline ParsedLob aggregate_executions(const ParsedLob& lob) {
    ParsedLob out;
    out.warnings = lob.warnings;
    for (std::size_t i = 0; i < lob.messages.size(); ++i) {
        const LobMessage& m = lob.messages[i];
        if (!out.messages.empty()) {
            LobMessage& last = out.messages.back();
            if (m.type == LobMessageType::execution_visible &&
                last.type == LobMessageType::execution_visible && last.time_ns == m.time_ns &&
                last.direction == m.direction) {
                last.size += m.size;
                if (lob.has_books()) out.books.back() = lob.books[i];
                continue;
            }
        }
        out.messages.push_back(m);
        if (lob.has_books()) out.books.push_back(lob.books[i]);
    }
    return out;
}

enum class FlowSide : std::size_t { ask = 0, bid = 1 };

struct ClassifiedEvent {
    std::int64_t time_ns = 0;
    FlowSide side = FlowSide::ask;
    std::size_t message_index = 0;  // row whose book snapshot follows the event

    double time_seconds() const { return static_cast<double>(time_ns) * 1e-9; }
};

struct ClassifyStats {
    std::size_t kept = 0;
    std::size_t dropped_deeper = 0;
    std::size_t dropped_hidden = 0;
    std::size_t dropped_unclassifiable = 0;  // auction / halt
};

struct ClassifiedFlow {
    std::vector<ClassifiedEvent> events;
    ClassifyStats stats;
};

// Level-I flow classification: bid events are buy market orders, level-I buy
// limit orders and level-I sell cancellations; ask events are the mirror set.
// Messages strictly deeper than level I are dropped, as are hidden executions
// and auction/halt messages. The pre-message book is the previous row's book.
inline ClassifiedFlow classify_level1(const ParsedLob& lob) {
    if (!lob.has_books()) throw DataError("classification requires book snapshots");
    ClassifiedFlow out;
    for (std::size_t i = 0; i < lob.messages.size(); ++i) {
        const LobMessage& m = lob.messages[i];
        // The first message has no predecessor; its own book stands in.
        const Level1Snapshot& before = lob.books[i == 0 ? 0 : i - 1];

        std::optional<FlowSide> side;
        switch (m.type) {
            case LobMessageType::execution_visible:
                // A visible execution against a sell limit is a buy market order.
                side = m.direction == OrderDirection::sell ? FlowSide::bid : FlowSide::ask;
                break;
            case LobMessageType::submission:
                if (m.direction == OrderDirection::buy) {
                    if (!before.bid_present() || m.price >= before.bid_price) side = FlowSide::bid;
                } else {
                    if (!before.ask_present() || m.price <= before.ask_price) side = FlowSide::ask;
                }
                if (!side) ++out.stats.dropped_deeper;
                break;
            case LobMessageType::partial_cancel:
            case LobMessageType::deletion:
                if (m.direction == OrderDirection::buy) {
                    if (before.bid_present() && m.price >= before.bid_price) side = FlowSide::ask;
                } else {
                    if (before.ask_present() && m.price <= before.ask_price) side = FlowSide::bid;
                }
                if (!side) ++out.stats.dropped_deeper;
                break;
            case LobMessageType::execution_hidden:
                ++out.stats.dropped_hidden;
                break;
            case LobMessageType::auction:
            case LobMessageType::halt:
                ++out.stats.dropped_unclassifiable;
                break;
        }
        if (side) {
            out.events.push_back(ClassifiedEvent{m.time_ns, *side, i});
            ++out.stats.kept;
        }
    }
    return out;
}

// State variable specification: the two-bin spread states or the five
// equal-width queue-imbalance bins QI in [-1,-0.6) [-0.6,-0.2) [-0.2,0.2)
// [0.2,0.6) [0.6,1].
struct StateVariableSpec {
    enum class Kind { spread, queue_imbalance };

    Kind kind = Kind::spread;
    std::int64_t tick_size = 100;  // in price units of 1e-4 currency

    static StateVariableSpec spread_states(std::int64_t tick_size) {
        if (tick_size <= 0) throw DataError("tick size must be positive");
        StateVariableSpec s;
        s.kind = Kind::spread;
        s.tick_size = tick_size;
        return s;
    }

    static StateVariableSpec queue_imbalance_states() {
        StateVariableSpec s;
        s.kind = Kind::queue_imbalance;
        return s;
    }

    std::size_t n_states() const { return kind == Kind::spread ? 2 : 5; }

    Dimensions dimensions() const {
        Dimensions d;
        d.n_event_types = 2;
        d.event_labels = {"ask", "bid"};
        if (kind == Kind::spread) {
            d.n_states = 2;
            d.state_labels = {"1", "2+"};
        } else {
            d.n_states = 5;
            d.state_labels = {"sell++", "sell+", "neutral", "buy+", "buy++"};
        }
        return d;
    }

    // State of a snapshot, or nullopt when undefined (an empty book side).
    std::optional<std::size_t> state_of(const Level1Snapshot& book) const {
        if (!book.ask_present() || !book.bid_present()) return std::nullopt;
        if (kind == Kind::spread) {
            const std::int64_t ticks = (book.ask_price - book.bid_price) / tick_size;
            return ticks == 1 ? 0u : 1u;
        }
        // Exact bin assignment in integers: QI = num/den with den > 0, cut
        // points at -3/5, -1/5, 1/5, 3/5 of den, lower edges inclusive.
        const std::int64_t num = book.bid_size - book.ask_size;
        const std::int64_t den = book.bid_size + book.ask_size;
        if (5 * num < -3 * den) return 0u;  // sell++
        if (5 * num < -den) return 1u;      // sell+
        if (5 * num < den) return 2u;       // neutral
        if (5 * num < 3 * den) return 3u;   // buy+
        return 4u;                          // buy++
    }
};

// Spread state: 0 for a one-tick spread, 1 for two ticks or more.
inline std::size_t spread_state(const Level1Snapshot& book, std::int64_t tick_size) {
    const auto state = StateVariableSpec::spread_states(tick_size).state_of(book);
    if (!state) throw DataError("spread undefined: a book side is empty");
    return *state;
}

// Queue-imbalance bin of (bid_size - ask_size)/(bid_size + ask_size).
inline std::size_t qi_state(const Level1Snapshot& book) {
    const auto state = StateVariableSpec::queue_imbalance_states().state_of(book);
    if (!state) throw DataError("queue imbalance undefined: a book side is empty");
    return *state;
}

struct IngestStats {
    ClassifyStats classification;
    std::size_t skipped_undefined_state = 0;
    std::size_t residual_ties = 0;       // distinct events sharing a nanosecond timestamp
    std::size_t outside_window = 0;      // events after the window end
    std::size_t history_events = 0;      // events at or before the window start
    bool initial_state_defaulted = false;
};

struct IngestResult {
    MarkedSequence sequence;
    Dimensions dims;
    IngestStats stats;
};

// Assembles the marked sequence: event types from the classified flow, the
// state sampled from the book immediately after each event, and the initial
// state from the book prevailing at the window start (the last message's book
// at or before it, whether or not that message classified). Events at or
// before the window start are kept as a history prefix when requested.
// Residual nanosecond ties (possible across directions or types) keep their
// stable input order; the float timestamp of the later event is nudged up by
// one ulp and the tie is counted.
inline IngestResult build_sequence(const ClassifiedFlow& flow, const ParsedLob& lob,
                                   const StateVariableSpec& spec, double window_start,
                                   double window_end, bool keep_history = false) {
    if (!(window_start < window_end)) throw DataError("ingest window is empty");
    if (!lob.has_books()) throw DataError("sequence assembly requires book snapshots");
    const std::vector<Level1Snapshot>& books = lob.books;
    IngestResult out;
    out.dims = spec.dimensions();
    out.stats.classification = flow.stats;
    out.sequence.window_start = window_start;
    out.sequence.window_end = window_end;

    // Initial state: last defined book state at or before the window start.
    std::optional<std::size_t> initial;
    for (std::size_t i = 0; i < lob.messages.size(); ++i) {
        if (lob.messages[i].time_seconds() > window_start) break;
        if (const auto state = spec.state_of(books[i])) initial = *state;
    }
    if (!initial) {
        out.stats.initial_state_defaulted = true;
        initial = 0;
    }
    out.sequence.initial_state = *initial;

    auto& seq = out.sequence;
    for (const auto& event : flow.events) {
        const double t_raw = event.time_seconds();
        if (t_raw > window_end) {
            ++out.stats.outside_window;
            continue;
        }
        const bool in_window = t_raw > window_start;
        if (!in_window) {
            ++out.stats.history_events;
            if (!keep_history) continue;
        }
        const auto state = spec.state_of(books[event.message_index]);
        if (!state) {
            ++out.stats.skipped_undefined_state;
            continue;
        }
        double t = t_raw;
        if (!seq.times.empty() && t <= seq.times.back()) {
            ++out.stats.residual_ties;
            t = std::nextafter(seq.times.back(), std::numeric_limits<double>::infinity());
        }
        seq.times.push_back(t);
        seq.events.push_back(static_cast<std::size_t>(event.side));
        seq.states.push_back(*state);
    }
    return out;
}

// Whole pipeline: parse, aggregate tied executions, classify, build.
inline IngestResult ingest_lob_files(const std::string& message_path, const std::string& book_path,
                                     const StateVariableSpec& spec, double window_start,
                                     double window_end, bool keep_history = false) {
    const ParsedLob parsed = parse_messages(message_path, book_path);
    const ParsedLob aggregated = aggregate_executions(parsed);
    const ClassifiedFlow flow = classify_level1(aggregated);
    return build_sequence(flow, aggregated, spec, window_start, window_end, keep_history);
}

}  // namespace sdhawkes
