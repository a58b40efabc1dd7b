#pragma once

// Test-only oracles that stay independent of the library's computation
// paths: full trajectory enumeration for the discrete diffusion and central
// finite differences for scores.

#include <cmath>
#include <functional>
#include <vector>

#include "logiguide/testbed.hpp"

namespace logiguide::testing {

// Enumerates every trajectory (x_0, ..., x_T) of the discrete chain and
// accumulates the requested conditionals by direct summation. Exponential
// in the step count; fine at 9 states x 5 steps.
class TrajectoryOracle {
public:
    explicit TrajectoryOracle(const DiscreteDiffusion& dd) : dd_(dd) {}

    // P(x_0 in E | x_step = state)
    double event_posterior(const std::vector<std::uint8_t>& event, std::uint32_t step,
                           std::size_t state) const {
        double num = 0.0, den = 0.0;
        for_each_trajectory([&](const std::vector<std::size_t>& path, double p) {
            if (path[step] != state) return;
            den += p;
            if (event[path[0]]) num += p;
        });
        return num / den;
    }

    // P(x_{step-1} = j | x_0 in E, x_step = state), as a full row
    Vec conditional_reverse_row(const std::vector<std::uint8_t>& event, std::uint32_t step,
                                std::size_t state) const {
        Vec num(dd_.n_states(), 0.0);
        double den = 0.0;
        for_each_trajectory([&](const std::vector<std::size_t>& path, double p) {
            if (path[step] != state || !event[path[0]]) return;
            den += p;
            num[path[step - 1]] += p;
        });
        for (double& v : num) v /= den;
        return num;
    }

    Vec reverse_row(std::uint32_t step, std::size_t state) const {
        std::vector<std::uint8_t> all(dd_.n_states(), 1);
        return conditional_reverse_row(all, step, state);
    }

private:
    void for_each_trajectory(
        const std::function<void(const std::vector<std::size_t>&, double)>& visit) const {
        const std::size_t n = dd_.n_states();
        const std::uint32_t steps = dd_.steps();
        std::vector<std::size_t> path(steps + 1, 0);
        std::function<void(std::uint32_t, double)> rec = [&](std::uint32_t s, double p) {
            if (p == 0.0) return;
            if (s == steps) {
                visit(path, p);
                return;
            }
            for (std::size_t j = 0; j < n; ++j) {
                path[s + 1] = j;
                rec(s + 1, p * dd_.forward_kernel()[path[s]][j]);
            }
        };
        for (std::size_t x0 = 0; x0 < n; ++x0) {
            path[0] = x0;
            rec(0, dd_.terminal_distribution()[x0]);
        }
    }

    const DiscreteDiffusion& dd_;
};

// central finite difference of a scalar field
inline Vec finite_difference(const std::function<double(const Vec&)>& f, const Vec& x,
                             double h = 1e-5) {
    Vec grad(x.size());
    Vec probe = x;
    for (std::size_t j = 0; j < x.size(); ++j) {
        probe[j] = x[j] + h;
        const double hi = f(probe);
        probe[j] = x[j] - h;
        const double lo = f(probe);
        probe[j] = x[j];
        grad[j] = (hi - lo) / (2.0 * h);
    }
    return grad;
}

}  // namespace logiguide::testing
