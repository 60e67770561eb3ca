#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace sdhawkes {

// Invalid inputs or malformed data (CLI exit code 2).
struct DataError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Numerical failures: explosions, non-convergence (CLI exit code 3).
struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ExplosionError : NumericalError {
    explicit ExplosionError(std::uint64_t count)
        : NumericalError("simulation exceeded the explosion guard after " + std::to_string(count) +
                         " events"),
          event_count(count) {}

    std::uint64_t event_count;
};

}  // namespace sdhawkes
