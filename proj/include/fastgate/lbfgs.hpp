#pragma once

#include <functional>
#include <span>
#include <vector>

namespace fastgate {

// Objective callback: fill `grad` and return the cost at `x`.
using ObjectiveFn = std::function<double(std::span<const double>, std::span<double>)>;

struct LbfgsOptions {
    int max_iterations = 400;
    int history = 10;
    double grad_tolerance = 1e-10;   // on the max-norm of the gradient
    double step_tolerance = 1e-14;   // on the accepted relative decrease
    int max_line_search = 50;
};

struct LbfgsResult {
    std::vector<double> x;
    double value = 0.0;
    int iterations = 0;
    bool converged = false;  // gradient/step tolerance met (vs iteration cap)
};

// Limited-memory BFGS with Armijo backtracking. Deterministic; always
// returns the best accepted iterate (never worse than x0). The objective
// may have near-step features (tanh walls): failed line searches fall
// back to steepest descent once before giving up.
LbfgsResult lbfgs_minimize(const ObjectiveFn& f, std::vector<double> x0,
                           const LbfgsOptions& options = {});

}  // namespace fastgate
