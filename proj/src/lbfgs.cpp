#include "fastgate/lbfgs.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

namespace fastgate {

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double max_norm(std::span<const double> v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

}  // namespace

LbfgsResult lbfgs_minimize(const ObjectiveFn& f, std::vector<double> x0,
                           const LbfgsOptions& opt) {
    const std::size_t n = x0.size();
    LbfgsResult result;
    result.x = std::move(x0);

    std::vector<double> x = result.x, grad(n), grad_new(n), direction(n), x_new(n);
    double fx = f(x, grad);
    result.value = fx;
    result.x = x;

    struct Pair {
        std::vector<double> s, y;
        double rho;
    };
    std::deque<Pair> history;
    std::vector<double> alpha_buf;

    bool tried_reset = false;
    for (int iter = 0; iter < opt.max_iterations; ++iter) {
        result.iterations = iter;
        if (!std::isfinite(fx)) break;
        if (max_norm(grad) <= opt.grad_tolerance) {
            result.converged = true;
            break;
        }

        // two-loop recursion for d = -H g
        direction.assign(grad.begin(), grad.end());
        alpha_buf.assign(history.size(), 0.0);
        for (std::size_t i = history.size(); i-- > 0;) {
            const auto& p = history[i];
            alpha_buf[i] = p.rho * dot(p.s, direction);
            for (std::size_t k = 0; k < n; ++k) direction[k] -= alpha_buf[i] * p.y[k];
        }
        if (!history.empty()) {
            const auto& last = history.back();
            const double gamma = dot(last.s, last.y) / dot(last.y, last.y);
            for (auto& d : direction) d *= gamma;
        }
        for (std::size_t i = 0; i < history.size(); ++i) {
            const auto& p = history[i];
            const double beta = p.rho * dot(p.y, direction);
            for (std::size_t k = 0; k < n; ++k)
                direction[k] += (alpha_buf[i] - beta) * p.s[k];
        }
        for (auto& d : direction) d = -d;

        double dg = dot(direction, grad);
        if (!(dg < 0.0)) {  // not a descent direction; restart
            history.clear();
            for (std::size_t k = 0; k < n; ++k) direction[k] = -grad[k];
            dg = dot(direction, grad);
            if (!(dg < 0.0)) break;
        }

        // Armijo backtracking
        double step = history.empty() ? std::min(1.0, 1.0 / std::max(1.0, max_norm(grad)))
                                      : 1.0;
        double fx_new = fx;
        bool accepted = false;
        for (int ls = 0; ls < opt.max_line_search; ++ls) {
            for (std::size_t k = 0; k < n; ++k) x_new[k] = x[k] + step * direction[k];
            fx_new = f(x_new, grad_new);
            if (std::isfinite(fx_new) && fx_new <= fx + 1e-4 * step * dg) {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) {
            if (!history.empty() && !tried_reset) {
                history.clear();  // retry from steepest descent once
                tried_reset = true;
                continue;
            }
            break;
        }
        tried_reset = false;

        Pair p;
        p.s.resize(n);
        p.y.resize(n);
        for (std::size_t k = 0; k < n; ++k) {
            p.s[k] = x_new[k] - x[k];
            p.y[k] = grad_new[k] - grad[k];
        }
        const double sy = dot(p.s, p.y);
        if (sy > 1e-13 * std::sqrt(dot(p.s, p.s) * dot(p.y, p.y))) {
            p.rho = 1.0 / sy;
            history.push_back(std::move(p));
            if (int(history.size()) > opt.history) history.pop_front();
        }

        const double decrease = fx - fx_new;
        x.swap(x_new);
        grad.swap(grad_new);
        fx = fx_new;
        if (fx < result.value) {
            result.value = fx;
            result.x = x;
        }
        if (decrease <= opt.step_tolerance * (std::abs(fx) + 1e-30)) {
            result.converged = true;
            break;
        }
    }
    return result;
}

}  // namespace fastgate
