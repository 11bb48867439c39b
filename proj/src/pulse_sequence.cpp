#include "fastgate/pulse_sequence.hpp"

#include <stdexcept>

namespace fastgate {

bool PulseSequence::is_expanded() const {
    for (int z : directions)
        if (z != 1 && z != -1) return false;
    return true;
}

double PulseSequence::span() const {
    return times.size() < 2 ? 0.0 : times.back() - times.front();
}

void PulseSequence::validate() const {
    if (times.size() != directions.size())
        throw std::invalid_argument("pulse sequence: times/directions length mismatch");
    for (std::size_t i = 1; i < times.size(); ++i)
        if (times[i] < times[i - 1])
            throw std::invalid_argument("pulse sequence: times must be nondecreasing");
}

void PulseSequence::validate_expanded() const {
    validate();
    if (!is_expanded())
        throw std::invalid_argument("pulse sequence: expected expanded form (z = +-1)");
}

}  // namespace fastgate
