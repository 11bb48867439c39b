#pragma once

#include <vector>

namespace fastgate {

// An SDK train: kick times t_m (s) and integer directions z_m. In expanded
// form every z_m is +-1; the stage-1 group form of the optimizer also uses
// this container with |z| <= z_max group amplitudes.
struct PulseSequence {
    std::vector<double> times;    // nondecreasing
    std::vector<int> directions;  // same length as times

    std::size_t size() const { return times.size(); }
    bool is_expanded() const;
    double span() const;  // t_last - t_first; 0 when size() < 2

    // Throws std::invalid_argument on mismatched lengths or unsorted times.
    void validate() const;
    // validate() plus all z = +-1; the gate_dynamics entry points call this.
    void validate_expanded() const;
};

}  // namespace fastgate
