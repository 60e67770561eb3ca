#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "model.hpp"

namespace sdhawkes {

// Terms this small are flushed to zero when decaying, to keep the state out of
// denormal arithmetic. Invisible at the 1e-10 test tolerances.
inline constexpr double kDecayFlush = 1e-300;

// Rolling exponential sums over the event history. For every source stream
// c = (e', x') and target type e, with lag u_i = t - t_i over stream-c events
// strictly before t:
//
//   S[c][e]  = sum_i exp(-beta[c][e] u_i)
//   S1[c][e] = sum_i u_i exp(-beta[c][e] u_i)
//   C[c][e]  = (alpha[c][e]/beta[c][e]) * #events   (cumulative, not decayed)
//
// advance() applies the decay recursions, on_event() adds the unit term at
// lag zero. Intensities read from this state therefore exclude an event at
// exactly the current time until on_event() is called for it.
class IntensityState {
  public:
    explicit IntensityState(const SdHawkesModel& model, std::size_t initial_state = 0,
                            double start_time = 0.0)
        : model_(&model),
          n_events_(model.dims.n_event_types),
          n_streams_(model.dims.n_composite()),
          time_(start_time),
          start_time_(start_time),
          state_(initial_state),
          s_(n_streams_ * n_events_, 0.0),
          s1_(n_streams_ * n_events_, 0.0),
          c_(n_streams_ * n_events_, 0.0) {
        if (initial_state >= model.dims.n_states) throw DataError("initial state out of range");
    }

    double current_time() const { return time_; }
    std::size_t current_state() const { return state_; }

    void advance(double dt) {
        if (dt < 0.0) throw DataError("advance: negative time step");
        if (dt == 0.0) return;
        const auto& beta = model_->kernel.beta;
        for (std::size_t i = 0; i < s_.size(); ++i) {
            const double factor = std::exp(-beta[i] * dt);
            s1_[i] = factor * (s1_[i] + dt * s_[i]);
            s_[i] *= factor;
            if (s_[i] < kDecayFlush) s_[i] = 0.0;
            if (s1_[i] < kDecayFlush) s1_[i] = 0.0;
        }
        time_ += dt;
    }

    // Registers an event of type e with post-event state x at the current time.
    void on_event(std::size_t e, std::size_t x) {
        if (e >= n_events_ || x >= model_->dims.n_states) throw DataError("on_event: index out of range");
        const std::size_t c = model_->dims.composite(e, x);
        const std::size_t base = c * n_events_;
        for (std::size_t k = 0; k < n_events_; ++k) {
            s_[base + k] += 1.0;
            c_[base + k] += model_->kernel.alpha[base + k] / model_->kernel.beta[base + k];
        }
        state_ = x;
    }

    // lambda_e(t) from the strict past.
    double intensity(std::size_t e) const {
        const auto& alpha = model_->kernel.alpha;
        double lambda = model_->kernel.nu[e];
        for (std::size_t c = 0; c < n_streams_; ++c) lambda += alpha[c * n_events_ + e] * s_[c * n_events_ + e];
        return lambda;
    }

    std::vector<double> intensities() const {
        std::vector<double> out(n_events_);
        for (std::size_t e = 0; e < n_events_; ++e) out[e] = intensity(e);
        return out;
    }

    // Dominating rate R(t) = sum_e lambda_e(t).
    double total_intensity() const {
        double total = 0.0;
        for (std::size_t e = 0; e < n_events_; ++e) total += intensity(e);
        return total;
    }

    // R(t+) right after an event (e, x) at the current time; the thinning
    // bound must majorise this jump.
    double total_intensity_after(std::size_t e, std::size_t x) const {
        const std::size_t base = model_->dims.composite(e, x) * n_events_;
        double total = total_intensity();
        for (std::size_t k = 0; k < n_events_; ++k) total += model_->kernel.alpha[base + k];
        return total;
    }

    // Lifted intensities: row e, column x holds phi_e(X(t), x) * lambda_e(t).
    std::vector<double> lifted_intensities() const {
        const std::size_t n_states = model_->dims.n_states;
        std::vector<double> out(n_events_ * n_states);
        for (std::size_t e = 0; e < n_events_; ++e) {
            const double lambda = intensity(e);
            for (std::size_t x = 0; x < n_states; ++x)
                out[e * n_states + x] = model_->phi.at(e, state_, x) * lambda;
        }
        return out;
    }

    // Cumulative integral of lambda_e from the construction time to now,
    // via the closed-form identity over C and S. Only differences of this
    // value are meaningful when a history prefix has been replayed.
    double integrated_intensity(std::size_t e) const {
        const auto& kernel = model_->kernel;
        double value = kernel.nu[e] * (time_ - start_time_);
        for (std::size_t c = 0; c < n_streams_; ++c) {
            const std::size_t i = c * n_events_ + e;
            value += c_[i] - (kernel.alpha[i] / kernel.beta[i]) * s_[i];
        }
        return value;
    }

    double decayed_sum(std::size_t source_event, std::size_t source_state, std::size_t target) const {
        return s_[model_->kernel.index(source_event, source_state, target)];
    }

    double decayed_lag_sum(std::size_t source_event, std::size_t source_state, std::size_t target) const {
        return s1_[model_->kernel.index(source_event, source_state, target)];
    }

    const SdHawkesModel& model() const { return *model_; }

  private:
    const SdHawkesModel* model_;
    std::size_t n_events_;
    std::size_t n_streams_;
    double time_;
    double start_time_;
    std::size_t state_;
    std::vector<double> s_;
    std::vector<double> s1_;
    std::vector<double> c_;
};

}  // namespace sdhawkes
