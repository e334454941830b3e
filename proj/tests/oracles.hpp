#pragma once

// Test-only oracles, independent of the implementation paths they check.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "assure/stats.hpp"
#include "assure/trial_model.hpp"

namespace oracles {

// Exact Gaussian posterior for (lambda, delta) when both variances are known:
// marginalise the cluster effects, invert the 2x2 GLS system per cluster with
// k_j = n_j / (vw + n_j * vb).
struct GlsPosterior {
    double mean_lambda, mean_delta, sd_lambda, sd_delta;
};

inline GlsPosterior gls_delta_posterior(const assure::TrialData& data, double vb, double vw,
                                        double m_lambda, double v_lambda, double m_delta,
                                        double v_delta) {
    double a11 = 1.0 / v_lambda, a12 = 0.0, a22 = 1.0 / v_delta;
    double b1 = m_lambda / v_lambda, b2 = m_delta / v_delta;
    for (std::size_t j = 0; j < data.layout.n_clusters(); ++j) {
        const double n = static_cast<double>(data.layout.sizes[j]);
        if (n == 0.0) continue;
        const double x = data.layout.arms[j] == assure::Arm::treatment ? 1.0 : 0.0;
        const double k = n / (vw + n * vb);
        double sum = 0.0;
        for (double y : data.outcomes[j]) sum += y;
        const double ybar = sum / n;
        a11 += k;
        a12 += k * x;
        a22 += k * x * x;
        b1 += k * ybar;
        b2 += k * x * ybar;
    }
    const double det = a11 * a22 - a12 * a12;
    const double v11 = a22 / det, v22 = a11 / det, v12 = -a12 / det;
    return {v11 * b1 + v12 * b2, v12 * b1 + v22 * b2, std::sqrt(v11), std::sqrt(v22)};
}

// Monte Carlo standard error of the mean of a correlated series (batch means).
inline double batch_means_se(const std::vector<double>& x, int n_batches = 50) {
    const std::size_t n = x.size();
    if (n < static_cast<std::size_t>(2 * n_batches)) n_batches = static_cast<int>(n / 2);
    const std::size_t len = n / n_batches;
    std::vector<double> means;
    for (int b = 0; b < n_batches; ++b) {
        double s = 0.0;
        for (std::size_t i = b * len; i < (b + 1) * len; ++i) s += x[i];
        means.push_back(s / static_cast<double>(len));
    }
    return assure::stats::sample_sd(means) / std::sqrt(static_cast<double>(n_batches));
}

// Chi-square goodness of fit on equiprobable bins defined through the
// analytic CDF; returns the p-value.
inline double chi_square_gof_pvalue(const std::vector<double>& draws,
                                    const std::function<double(double)>& cdf, int bins = 64) {
    std::vector<int> counts(static_cast<std::size_t>(bins), 0);
    for (double d : draws) {
        int b = static_cast<int>(cdf(d) * bins);
        b = std::clamp(b, 0, bins - 1);
        ++counts[static_cast<std::size_t>(b)];
    }
    const double expect = static_cast<double>(draws.size()) / bins;
    double stat = 0.0;
    for (int c : counts) stat += (c - expect) * (c - expect) / expect;
    return 1.0 - assure::stats::chi_squared_cdf(stat, bins - 1);
}

inline double ks_distance(std::vector<double> draws, const std::function<double(double)>& cdf) {
    std::sort(draws.begin(), draws.end());
    const double n = static_cast<double>(draws.size());
    double d = 0.0;
    for (std::size_t i = 0; i < draws.size(); ++i) {
        const double f = cdf(draws[i]);
        d = std::max(d, std::abs(f - static_cast<double>(i) / n));
        d = std::max(d, std::abs(static_cast<double>(i + 1) / n - f));
    }
    return d;
}

inline std::vector<double> ranks(const std::vector<double>& x) {
    std::vector<std::size_t> idx(x.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
    std::vector<double> r(x.size());
    for (std::size_t i = 0; i < idx.size(); ++i) r[idx[i]] = static_cast<double>(i + 1);
    return r;
}

inline double spearman(const std::vector<double>& x, const std::vector<double>& y) {
    const auto rx = ranks(x), ry = ranks(y);
    const double mx = assure::stats::sample_mean(rx), my = assure::stats::sample_mean(ry);
    double num = 0.0, dx = 0.0, dy = 0.0;
    for (std::size_t i = 0; i < rx.size(); ++i) {
        num += (rx[i] - mx) * (ry[i] - my);
        dx += (rx[i] - mx) * (rx[i] - mx);
        dy += (ry[i] - my) * (ry[i] - my);
    }
    return num / std::sqrt(dx * dy);
}

// Standard normal CDF by adaptive Simpson quadrature of the density; an
// independent route to the erfc-based implementation.
inline double simpson_normal_cdf(double x) {
    const auto pdf = [](double t) {
        return std::exp(-0.5 * t * t) / std::sqrt(2.0 * 3.14159265358979323846);
    };
    const double a = 0.0, b = std::abs(x);
    if (b == 0.0) return 0.5;
    const int n = 2000;  // fixed fine grid, |x| <= ~40 in practice
    const double h = b / n;
    double s = pdf(a) + pdf(b);
    for (int i = 1; i < n; ++i) s += 2.0 * (1.0 + (i % 2)) * pdf(a + i * h);
    const double integral = s * h / 3.0;
    return x > 0.0 ? 0.5 + integral : 0.5 - integral;
}

}  // namespace oracles
