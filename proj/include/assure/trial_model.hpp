#pragma once

#include <cmath>
#include <cstddef>
#include <numeric>
#include <string>
#include <vector>

#include "assure/errors.hpp"
#include "assure/rng.hpp"
#include "assure/sampling.hpp"

namespace assure {

enum class Arm : int { control = 0, treatment = 1 };

/*
 * Parameters of the linear mixed-effects outcome model: cluster j in arm
 * x_j contributes outcomes y_ij ~ N(lambda + x_j*delta + c_j, var_within)
 * with cluster effect c_j ~ N(0, var_between).
 */
struct ModelParams {
    double lambda = 0.0;
    double delta = 0.0;
    double var_between = 0.0;
    double var_within = 1.0;

    void validate() const {
        if (!(var_within > 0.0))
            throw InvalidParameterError("var_within must be > 0");
        if (var_between < 0.0)
            throw InvalidParameterError("var_between must be >= 0");
    }
};

struct ClusterLayout {
    std::vector<int> sizes;
    std::vector<Arm> arms;
    int total = 0;

    std::size_t n_clusters() const { return sizes.size(); }

    void validate() const {
        if (arms.size() != sizes.size())
            throw InvalidDesignError("layout: arms/sizes length mismatch");
        long long sum = 0;
        for (int n : sizes) {
            if (n < 0) throw InvalidDesignError("layout: negative cluster size");
            sum += n;
        }
        if (sum != total) throw InvalidDesignError("layout: sizes do not sum to total");
    }
};

struct TrialData {
    ClusterLayout layout;
    std::vector<std::vector<double>> outcomes;  // outcomes[j].size() == layout.sizes[j]

    void validate() const {
        layout.validate();
        if (outcomes.size() != layout.sizes.size())
            throw InvalidDataError("trial data: cluster count mismatch");
        for (std::size_t j = 0; j < outcomes.size(); ++j) {
            if (static_cast<int>(outcomes[j].size()) != layout.sizes[j])
                throw InvalidDataError("trial data: outcome count mismatch in cluster " +
                                       std::to_string(j));
            for (double y : outcomes[j])
                if (!std::isfinite(y)) throw InvalidDataError("trial data: non-finite outcome");
        }
    }
};

struct ClusterProbabilities {
    std::vector<double> p;

    void validate() const {
        double sum = 0.0;
        for (double x : p) {
            if (x < 0.0) throw InvalidDesignError("cluster probabilities must be >= 0");
            sum += x;
        }
        if (std::abs(sum - 1.0) > 1e-12)
            throw InvalidDesignError("cluster probabilities must sum to 1");
    }
};

// Balanced allocation: first half control, second half treatment; control
// gets the extra cluster when J is odd. Randomness lives in outcomes and
// sizes only.
inline std::vector<Arm> assign_arms(int j_clusters) {
    if (j_clusters < 2) throw InvalidDesignError("need at least 2 clusters");
    const int treated = j_clusters / 2;
    std::vector<Arm> arms(static_cast<std::size_t>(j_clusters), Arm::control);
    for (int j = j_clusters - treated; j < j_clusters; ++j)
        arms[static_cast<std::size_t>(j)] = Arm::treatment;
    return arms;
}

inline std::vector<int> allocate_clusters(int total, const ClusterProbabilities& probs,
                                          RngStream& rng) {
    if (total < 0) throw InvalidDesignError("total sample size must be >= 0");
    probs.validate();
    return draw_multinomial(rng, total, probs.p);
}

inline ClusterProbabilities sample_cluster_probabilities(int j_clusters, double a,
                                                         RngStream& rng) {
    if (j_clusters < 2) throw InvalidDesignError("need at least 2 clusters");
    if (!(a > 0.0)) throw InvalidPriorError("dirichlet concentration must be > 0");
    return ClusterProbabilities{draw_symmetric_dirichlet(rng, static_cast<std::size_t>(j_clusters), a)};
}

inline TrialData simulate_trial(const ModelParams& theta, const ClusterLayout& layout,
                                RngStream& rng) {
    theta.validate();
    layout.validate();
    const double sd_b = std::sqrt(theta.var_between);
    const double sd_w = std::sqrt(theta.var_within);
    TrialData data;
    data.layout = layout;
    data.outcomes.resize(layout.sizes.size());
    for (std::size_t j = 0; j < layout.sizes.size(); ++j) {
        // zero-size clusters still draw their effect; it is just unused
        const double c_j = draw_normal(rng, 0.0, sd_b);
        const double mu = theta.lambda +
                          (layout.arms[j] == Arm::treatment ? theta.delta : 0.0) + c_j;
        auto& ys = data.outcomes[j];
        ys.resize(static_cast<std::size_t>(layout.sizes[j]));
        for (auto& y : ys) y = draw_normal(rng, mu, sd_w);
    }
    return data;
}

inline double icc(double var_between, double var_within) {
    if (!(var_within > 0.0)) throw InvalidParameterError("var_within must be > 0");
    if (var_between < 0.0) throw InvalidParameterError("var_between must be >= 0");
    return var_between / (var_between + var_within);
}

// (rho, sigma^2_total) -> (var_between, var_within)
struct VarianceSplit {
    double var_between;
    double var_within;
};

inline VarianceSplit variances_from_icc(double rho, double sigma2_total) {
    if (rho < 0.0 || rho >= 1.0) throw InvalidParameterError("icc must lie in [0, 1)");
    if (!(sigma2_total > 0.0)) throw InvalidParameterError("total variance must be > 0");
    return {rho * sigma2_total, (1.0 - rho) * sigma2_total};
}

// Empirical coefficient of variation: sample sd / sample mean.
inline double cv_of_sizes(const std::vector<int>& sizes) {
    if (sizes.empty()) throw InvalidParameterError("cv of empty size list");
    double mean = 0.0;
    for (int n : sizes) mean += n;
    mean /= static_cast<double>(sizes.size());
    if (!(mean > 0.0)) throw InvalidParameterError("cv undefined: all sizes zero");
    if (sizes.size() < 2) return 0.0;
    double ss = 0.0;
    for (int n : sizes) ss += (n - mean) * (n - mean);
    return std::sqrt(ss / static_cast<double>(sizes.size() - 1)) / mean;
}

}  // namespace assure
