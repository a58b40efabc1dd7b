#pragma once

// Small statistical helpers for the sampling tests: a chi-square
// goodness-of-fit p-value and a permutation-calibrated two-sample energy
// distance test.

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "logiguide/common.hpp"

namespace logiguide::testing {

// regularized upper incomplete gamma Q(a, x), by series / continued fraction
inline double gamma_q(double a, double x) {
    if (x < 0.0 || a <= 0.0) return 1.0;
    if (x == 0.0) return 1.0;
    const double gln = std::lgamma(a);
    if (x < a + 1.0) {
        // series for P(a, x), return 1 - P
        double ap = a, sum = 1.0 / a, del = sum;
        for (int i = 0; i < 500; ++i) {
            ap += 1.0;
            del *= x / ap;
            sum += del;
            if (std::fabs(del) < std::fabs(sum) * 1e-15) break;
        }
        return 1.0 - sum * std::exp(-x + a * std::log(x) - gln);
    }
    // Lentz continued fraction for Q
    double b = x + 1.0 - a, c = 1e300, d = 1.0 / b, h = d;
    for (int i = 1; i < 500; ++i) {
        const double an = -i * (i - a);
        b += 2.0;
        d = an * d + b;
        if (std::fabs(d) < 1e-300) d = 1e-300;
        c = b + an / c;
        if (std::fabs(c) < 1e-300) c = 1e-300;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < 1e-15) break;
    }
    return std::exp(-x + a * std::log(x) - gln) * h;
}

// chi-square upper-tail p-value
inline double chi2_pvalue(double statistic, double dof) {
    return gamma_q(0.5 * dof, 0.5 * statistic);
}

// goodness-of-fit p-value for observed counts against expected probabilities
inline double chi2_gof_pvalue(const std::vector<std::size_t>& counts, const Vec& expected_probs) {
    double n = 0.0;
    for (std::size_t c : counts) n += static_cast<double>(c);
    double stat = 0.0;
    double dof = -1.0;
    for (std::size_t i = 0; i < counts.size(); ++i) {
        const double e = n * expected_probs[i];
        if (e <= 0.0) continue;
        const double d = counts[i] - e;
        stat += d * d / e;
        dof += 1.0;
    }
    return chi2_pvalue(stat, dof);
}

// two-sample energy distance test; returns the permutation p-value
inline double energy_test_pvalue(const std::vector<Vec>& xs, const std::vector<Vec>& ys,
                                 int permutations, std::uint64_t seed) {
    const std::size_t n = xs.size(), m = ys.size(), total = n + m;
    std::vector<float> dist(total * total, 0.0f);
    std::vector<const Vec*> all;
    all.reserve(total);
    for (const Vec& x : xs) all.push_back(&x);
    for (const Vec& y : ys) all.push_back(&y);
    for (std::size_t i = 0; i < total; ++i)
        for (std::size_t j = i + 1; j < total; ++j) {
            double d2 = 0.0;
            for (std::size_t k = 0; k < all[i]->size(); ++k) {
                const double d = (*all[i])[k] - (*all[j])[k];
                d2 += d * d;
            }
            const float d = static_cast<float>(std::sqrt(d2));
            dist[i * total + j] = d;
            dist[j * total + i] = d;
        }

    std::vector<std::uint8_t> side(total, 0);
    for (std::size_t i = n; i < total; ++i) side[i] = 1;

    auto statistic = [&](const std::vector<std::uint8_t>& s) {
        double dxy = 0.0, dxx = 0.0, dyy = 0.0;
        for (std::size_t i = 0; i < total; ++i)
            for (std::size_t j = i + 1; j < total; ++j) {
                const double d = dist[i * total + j];
                if (s[i] != s[j])
                    dxy += d;
                else if (s[i] == 0)
                    dxx += d;
                else
                    dyy += d;
            }
        const double nn = static_cast<double>(n), mm = static_cast<double>(m);
        return 2.0 * dxy / (nn * mm) - 2.0 * dxx / (nn * nn) - 2.0 * dyy / (mm * mm);
    };

    const double observed = statistic(side);
    std::mt19937_64 rng(seed);
    int at_least = 0;
    std::vector<std::uint8_t> perm = side;
    for (int p = 0; p < permutations; ++p) {
        std::shuffle(perm.begin(), perm.end(), rng);
        if (statistic(perm) >= observed) ++at_least;
    }
    return (1.0 + at_least) / (1.0 + permutations);
}

}  // namespace logiguide::testing
