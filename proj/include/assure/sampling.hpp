#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "assure/errors.hpp"
#include "assure/rng.hpp"
#include "assure/stats.hpp"

namespace assure {

inline double draw_std_normal(RngStream& rng) { return stats::norm_quantile(rng.uniform01()); }

inline double draw_normal(RngStream& rng, double mean, double sd) {
    return mean + sd * draw_std_normal(rng);
}

// Normal truncated to (0, inf) by resampling.
inline double draw_normal_positive(RngStream& rng, double mean, double sd) {
    for (;;) {
        const double x = draw_normal(rng, mean, sd);
        if (x > 0.0) return x;
    }
}

// Marsaglia-Tsang squeeze; shape < 1 handled by the boost step X(a) = X(a+1) * U^{1/a}.
inline double draw_gamma(RngStream& rng, double shape, double rate) {
    if (!(shape > 0.0) || !(rate > 0.0)) throw InvalidPriorError("gamma draw: shape/rate must be > 0");
    double boost_factor = 1.0;
    double a = shape;
    if (a < 1.0) {
        boost_factor = std::pow(rng.uniform01(), 1.0 / a);
        a += 1.0;
    }
    const double d = a - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
        double x, v;
        do {
            x = draw_std_normal(rng);
            v = 1.0 + c * x;
        } while (v <= 0.0);
        v = v * v * v;
        const double u = rng.uniform01();
        if (u < 1.0 - 0.0331 * x * x * x * x) return boost_factor * d * v / rate;
        if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return boost_factor * d * v / rate;
    }
}

inline double draw_beta(RngStream& rng, double a, double b) {
    const double x = draw_gamma(rng, a, 1.0);
    const double y = draw_gamma(rng, b, 1.0);
    return x / (x + y);
}

// Symmetric Dirichlet(a, ..., a) on J categories.
inline std::vector<double> draw_symmetric_dirichlet(RngStream& rng, std::size_t j, double a) {
    if (!(a > 0.0)) throw InvalidPriorError("dirichlet draw: concentration must be > 0");
    std::vector<double> p(j);
    double total = 0.0;
    for (auto& x : p) {
        x = draw_gamma(rng, a, 1.0);
        total += x;
    }
    if (!(total > 0.0)) throw NumericalError("dirichlet draw underflowed to zero");
    for (auto& x : p) x /= total;
    return p;
}

// Multinomial via conditional binomials.
inline std::vector<int> draw_multinomial(RngStream& rng, int total, const std::vector<double>& p) {
    std::vector<int> n(p.size(), 0);
    if (p.empty()) return n;
    double rest = 0.0;
    for (double x : p) rest += x;
    int remaining = total;
    for (std::size_t j = 0; j + 1 < p.size(); ++j) {
        if (remaining <= 0) break;
        double q = rest > 0.0 ? p[j] / rest : 0.0;
        q = std::min(1.0, std::max(0.0, q));
        std::binomial_distribution<int> binom(remaining, q);
        n[j] = binom(rng);
        remaining -= n[j];
        rest -= p[j];
    }
    n.back() += remaining;
    return n;
}

}  // namespace assure
