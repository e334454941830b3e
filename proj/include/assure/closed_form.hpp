#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <sstream>
#include <vector>

#include "assure/errors.hpp"
#include "assure/parallel.hpp"
#include "assure/priors.hpp"
#include "assure/rng.hpp"
#include "assure/stats.hpp"

namespace assure {

/*
 * Inputs for the closed-form power approximation of a two-arm cluster design
 * analysed by a one-tailed Wald test:
 *
 *   power = Phi( sqrt( J*nbar / (4 * [1 + {(nu^2+1)*nbar - 1} * rho] * sigma^2) )
 *                * delta_m  -  z_{1-alpha} )
 *
 * sigma is the overall outcome sd, rho the intra-cluster correlation and nu
 * the coefficient of variation of cluster sizes; the bracket is the design
 * effect for unequal cluster sizes.
 */
struct PowerInputs {
    int j_clusters;
    double n_bar;     // mean cluster size (need not be an integer)
    double delta_m;   // effect size used in the test
    double sigma;     // overall sd
    double rho;       // icc
    double nu;        // cv of cluster sizes
    double alpha = 0.05;

    void validate() const {
        if (j_clusters < 2) throw InvalidParameterError("need at least 2 clusters");
        if (!(n_bar > 0.0)) throw InvalidParameterError("mean cluster size must be > 0");
        if (!(sigma > 0.0)) throw InvalidParameterError("sigma must be > 0");
        if (rho < 0.0 || rho >= 1.0) throw InvalidParameterError("icc must lie in [0, 1)");
        if (nu < 0.0) throw InvalidParameterError("cv of cluster sizes must be >= 0");
        if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidParameterError("alpha must lie in (0, 1)");
        if (!(design_effect() > 0.0)) throw InvalidParameterError("design effect must be > 0");
    }

    double design_effect() const { return 1.0 + ((nu * nu + 1.0) * n_bar - 1.0) * rho; }
};

inline double power(const PowerInputs& in) {
    in.validate();
    const double z = stats::norm_quantile(1.0 - in.alpha);
    const double arg = std::sqrt(static_cast<double>(in.j_clusters) * in.n_bar /
                                 (4.0 * in.design_effect() * in.sigma * in.sigma)) *
                           in.delta_m -
                       z;
    return stats::norm_cdf(arg);
}

// Smallest n_total = J * nbar with power >= target, scanning integer nbar.
inline int power_sample_size(int j_clusters, double target, PowerInputs base,
                             int nbar_max = 1000000) {
    if (!(target > 0.0 && target < 1.0)) throw InvalidParameterError("target must lie in (0, 1)");
    base.j_clusters = j_clusters;
    double best = 0.0;
    for (int nbar = 1; nbar <= nbar_max; ++nbar) {
        base.n_bar = nbar;
        const double p = power(base);
        best = std::max(best, p);
        if (p >= target) return j_clusters * nbar;
        // with clustering the power has a finite ceiling; bail out once flat
        if (nbar > 16 && base.rho > 0.0) {
            PowerInputs limit = base;
            limit.n_bar = 1e9;
            if (power(limit) < target) break;
        }
    }
    std::ostringstream msg;
    msg << "power target " << target << " not attainable for J=" << j_clusters << " (max " << best
        << ")";
    throw NotAchievableError(msg.str(), best, 0);
}

enum class HybridMode { mcid, full };

/*
 * Hybrid assurance: Eq.-style power averaged over design-prior draws of
 * (sigma, rho, nu) and, in full mode, the effect delta as well. The draws are
 * taken on per-index substreams and reduced in index order, so the result is
 * deterministic for any worker count.
 */
inline double hybrid_assurance(const DesignPrior& design, int j_clusters, int n_total,
                               double alpha, HybridMode mode, double delta_m, int n_draws,
                               std::uint64_t seed, unsigned workers = 0) {
    design.validate();
    if (n_draws < 1) throw InvalidParameterError("need at least one design draw");
    if (std::holds_alternative<DirichletSizes>(design.size_spec))
        throw InvalidPriorError("hybrid methods need a nu prior for the cluster-size cv");
    if (mode == HybridMode::full &&
        std::holds_alternative<FixedValue>(design.delta_spec))
        throw InvalidPriorError("full hybrid needs a distributional delta prior");

    const double n_bar = static_cast<double>(n_total) / j_clusters;
    std::vector<double> powers(static_cast<std::size_t>(n_draws));
    parallel_for(powers.size(), workers, [&](std::size_t i) {
        RngStream rng = substream(seed, salts::kHybridDraw, i);
        const DesignDraw d = sample_design(design, j_clusters, rng);
        PowerInputs in;
        in.j_clusters = j_clusters;
        in.n_bar = n_bar;
        in.delta_m = mode == HybridMode::mcid ? delta_m : d.params.delta;
        in.sigma = d.sigma;
        in.rho = std::min(d.rho, 1.0 - 1e-12);
        in.nu = d.nu.value_or(0.0);
        in.alpha = alpha;
        powers[i] = power(in);
    });
    double sum = 0.0;
    for (double p : powers) sum += p;
    return sum / static_cast<double>(n_draws);
}

// Smallest n_total = J * nbar with hybrid assurance >= target. The same seed
// is used for every candidate (common random numbers), which keeps the scan
// monotone draw by draw.
inline int hybrid_sample_size(const DesignPrior& design, int j_clusters, double target,
                              double alpha, HybridMode mode, double delta_m, int n_draws,
                              std::uint64_t seed, int nbar_max = 10000, unsigned workers = 0) {
    if (!(target > 0.0 && target < 1.0)) throw InvalidParameterError("target must lie in (0, 1)");
    double best = 0.0;
    int best_n = 0;
    int flat_streak = 0;
    for (int nbar = 1; nbar <= nbar_max; ++nbar) {
        const int n_total = j_clusters * nbar;
        const double a =
            hybrid_assurance(design, j_clusters, n_total, alpha, mode, delta_m, n_draws, seed,
                             workers);
        if (a >= target) return n_total;
        // clustering caps each draw's power, so the average can plateau below
        // the target; give up once the scan stops improving
        flat_streak = a > best + 1e-7 ? 0 : flat_streak + 1;
        if (a > best) {
            best = a;
            best_n = n_total;
        }
        if (flat_streak >= 8) break;
    }
    std::ostringstream msg;
    msg << "hybrid target " << target << " not reached by nbar=" << nbar_max << " (max " << best
        << " at n_total=" << best_n << ")";
    throw NotAchievableError(msg.str(), best, best_n);
}

}  // namespace assure
