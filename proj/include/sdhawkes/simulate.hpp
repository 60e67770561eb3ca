#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

#include "intensity.hpp"
#include "model.hpp"
#include "rng.hpp"

namespace sdhawkes {

struct SimulationConfig {
    std::size_t initial_state = 0;
    double start_time = 0.0;
    double horizon = 0.0;              // may be +inf when target_events > 0
    std::uint64_t seed = 0;
    std::uint64_t max_events = 10'000'000;  // explosion guard
    std::uint64_t target_events = 0;        // stop after this many events (0 = run to horizon)
};

struct SimulatedEvent {
    double time;
    std::size_t event;
    std::size_t state;
};

// One thinning step at a time. The dominating rate is the total intensity at
// the last checkpoint, which majorises the future intensity because the
// exponential kernels are non-increasing. On rejection the checkpoint moves
// to the candidate time and the rate is re-evaluated there.
//
// Draw order per accepted event: one uniform for the candidate gap, one for
// the acceptance, one for the event type, one for the state (the two-stage
// mark scheme). Fixed seeds therefore give bit-identical paths.
template <class Rng = Xoshiro256pp>
class ThinningStepper {
  public:
    ThinningStepper(const SdHawkesModel& model, std::size_t initial_state, double start_time, Rng rng)
        : model_(&model), state_(model, initial_state, start_time), rng_(std::move(rng)) {
        require_valid(model);
    }

    // Warm start from a history prefix: replays its events into the intensity
    // state so that the dominating rate reflects the supplied past.
    ThinningStepper(const SdHawkesModel& model, const MarkedSequence& history, Rng rng)
        : model_(&model),
          state_(model, history.initial_state,
                 history.times.empty() ? history.window_start
                                       : std::min(history.times.front(), history.window_start)),
          rng_(std::move(rng)) {
        require_valid(model);
        history.check(model.dims);
        for (std::size_t n = 0; n < history.size(); ++n) {
            state_.advance(history.times[n] - state_.current_time());
            state_.on_event(history.events[n], history.states[n]);
        }
        if (history.window_start > state_.current_time())
            state_.advance(history.window_start - state_.current_time());
    }

    void advance_to(double t) {
        if (t < state_.current_time()) throw DataError("cannot advance the stepper backwards");
        state_.advance(t - state_.current_time());
    }

    // Next event at a time <= horizon, or nullopt once the dominating process
    // passes the horizon (the state is then left advanced to the horizon).
    std::optional<SimulatedEvent> next(double horizon) {
        for (;;) {
            const double bound = state_.total_intensity();
            double gap = exponential_draw(rng_, bound);
            while (gap <= 0.0) gap = exponential_draw(rng_, bound);  // avoid zero-length gaps
            if (state_.current_time() + gap > horizon) {
                if (std::isfinite(horizon) && horizon > state_.current_time())
                    state_.advance(horizon - state_.current_time());
                return std::nullopt;
            }
            state_.advance(gap);
            if (rng_.uniform01() < state_.total_intensity() / bound) {
                const std::vector<double> lambda = state_.intensities();
                double total = 0.0;
                for (double v : lambda) total += v;
                const std::size_t event = weighted_index_draw(rng_, lambda, total);

                const std::size_t from = state_.current_state();
                const std::size_t n_states = model_->dims.n_states;
                std::vector<double> row(n_states);
                for (std::size_t x = 0; x < n_states; ++x) row[x] = model_->phi.at(event, from, x);
                const std::size_t next_state = weighted_index_draw(rng_, row, 1.0);

                state_.on_event(event, next_state);
                return SimulatedEvent{state_.current_time(), event, next_state};
            }
        }
    }

    const IntensityState& intensity_state() const { return state_; }

  private:
    const SdHawkesModel* model_;
    IntensityState state_;
    Rng rng_;
};

// Single iterative step, exposed for step-by-step harnesses.
template <class Rng>
std::optional<SimulatedEvent> simulate_next(ThinningStepper<Rng>& stepper, double horizon) {
    return stepper.next(horizon);
}

// Exact simulation by thinning over (start_time, horizon], or until
// target_events when set. Throws ExplosionError past the max_events guard.
inline MarkedSequence simulate(const SdHawkesModel& model, const SimulationConfig& config,
                               const MarkedSequence* history = nullptr) {
    if (config.max_events < 1) throw DataError("max_events must be >= 1");
    const bool by_count = config.target_events > 0;
    if (!by_count && !(config.horizon > config.start_time))
        throw DataError("horizon must exceed the start time");

    const double horizon = by_count && !(config.horizon > config.start_time)
                               ? std::numeric_limits<double>::infinity()
                               : config.horizon;

    if (history && !history->times.empty() && history->times.back() > config.start_time)
        throw DataError("history prefix extends beyond the simulation start time");

    Xoshiro256pp rng(config.seed);
    ThinningStepper<Xoshiro256pp> stepper =
        history ? ThinningStepper<Xoshiro256pp>(model, *history, std::move(rng))
                : ThinningStepper<Xoshiro256pp>(model, config.initial_state, config.start_time,
                                                std::move(rng));
    if (history) stepper.advance_to(config.start_time);

    MarkedSequence out;
    out.initial_state = history ? stepper.intensity_state().current_state() : config.initial_state;
    out.window_start = config.start_time;
    out.window_end = horizon;

    bool reached_target = false;
    while (true) {
        if (by_count && out.size() >= config.target_events) {
            reached_target = true;
            break;
        }
        if (out.size() >= config.max_events) throw ExplosionError(out.size());
        const auto event = stepper.next(horizon);
        if (!event) break;
        out.times.push_back(event->time);
        out.events.push_back(event->event);
        out.states.push_back(event->state);
    }

    // In count mode the observation window closes at the last event; when a
    // finite horizon cut the run short first, the window stays (t0, horizon].
    if (by_count && reached_target) out.window_end = out.times.back();
    if (!std::isfinite(out.window_end))
        throw NumericalError("simulation ended without a finite window");
    return out;
}

}  // namespace sdhawkes
