#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include <boost/math/distributions/beta.hpp>
#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/gamma.hpp>
#include <boost/math/distributions/normal.hpp>

#include "assure/errors.hpp"

namespace assure::stats {

inline double norm_cdf(double x) { return 0.5 * std::erfc(-x * 0.7071067811865475244); }

inline double norm_quantile(double p) {
    return boost::math::quantile(boost::math::normal_distribution<double>(), p);
}

// Gamma distribution in shape/rate form throughout.
inline double gamma_cdf(double x, double shape, double rate) {
    return boost::math::cdf(boost::math::gamma_distribution<double>(shape, 1.0 / rate), x);
}

inline double gamma_quantile(double p, double shape, double rate) {
    return boost::math::quantile(boost::math::gamma_distribution<double>(shape, 1.0 / rate), p);
}

inline double beta_cdf(double x, double a, double b) {
    return boost::math::cdf(boost::math::beta_distribution<double>(a, b), x);
}

inline double beta_quantile(double p, double a, double b) {
    return boost::math::quantile(boost::math::beta_distribution<double>(a, b), p);
}

inline double chi_squared_cdf(double x, double df) {
    return boost::math::cdf(boost::math::chi_squared_distribution<double>(df), x);
}

inline double sample_mean(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

// Unbiased (n-1) sample variance.
inline double sample_variance(const std::vector<double>& v) {
    const std::size_t n = v.size();
    if (n < 2) return 0.0;
    const double m = sample_mean(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return s / static_cast<double>(n - 1);
}

inline double sample_sd(const std::vector<double>& v) { return std::sqrt(sample_variance(v)); }

// Quantile by linear interpolation between order statistics, index u*(N-1).
// `sorted` must be ascending and non-empty.
inline double interp_quantile(const std::vector<double>& sorted, double u) {
    if (sorted.empty()) throw MissingDataError("quantile of empty sample");
    if (u <= 0.0) return sorted.front();
    if (u >= 1.0) return sorted.back();
    const double pos = u * static_cast<double>(sorted.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(pos);
    const double frac = pos - static_cast<double>(lo);
    if (lo + 1 >= sorted.size()) return sorted.back();
    return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

inline double quantile_of(std::vector<double> v, double u) {
    std::sort(v.begin(), v.end());
    return interp_quantile(v, u);
}

}  // namespace assure::stats
