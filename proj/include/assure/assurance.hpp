#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "assure/errors.hpp"
#include "assure/mcmc.hpp"
#include "assure/parallel.hpp"
#include "assure/priors.hpp"
#include "assure/rng.hpp"
#include "assure/trial_model.hpp"

namespace assure {

struct AssuranceSpec {
    int j_clusters = 10;
    DesignPrior design_prior;
    AnalysisPrior analysis_prior;
    SuccessRule rule;
    int outer_samples = 1000;  // L
    McmcSettings mcmc;
    std::uint64_t base_seed = 1;
    unsigned workers = 0;

    void validate() const {
        if (j_clusters < 2) throw InvalidDesignError("need at least 2 clusters");
        if (outer_samples < 1) throw InvalidDesignError("outer sample count must be >= 1");
        design_prior.validate();
        analysis_prior.validate();
        rule.validate();
        mcmc.validate();
        if (!std::holds_alternative<DirichletSizes>(design_prior.size_spec))
            throw InvalidPriorError(
                "assurance needs a dirichlet cluster-size prior (nu priors are for the hybrid "
                "methods)");
    }
};

struct AssuranceResult {
    int n_total = 0;
    double estimate = 0.0;
    double mc_standard_error = 0.0;
    long successes = 0;
    long outer_samples = 0;  // effective L: attempted minus failed draws
    long failures = 0;
    double wall_time_s = 0.0;
    std::uint64_t seed = 0;
    std::vector<std::int8_t> indicators;  // 1 success, 0 failure-to-win, -1 failed draw
};

/*
 * Two-loop Monte Carlo assurance at total sample size n_total.
 *
 * Outer loop (parallel): draw psi from the design prior, allocate cluster
 * sizes, simulate the trial; inner loop: posterior chain under the analysis
 * prior, success indicator from the kept delta samples. Each outer draw uses
 * the substream (base_seed, n_total, l), so the result is bit-identical for
 * any worker count. Failed chains (numerical errors) are excluded from both
 * numerator and denominator; more than 1% of them aborts the estimate.
 */
inline AssuranceResult estimate_assurance(const AssuranceSpec& spec, int n_total) {
    spec.validate();
    if (n_total < 0) throw InvalidDesignError("total sample size must be >= 0");
    const auto t0 = std::chrono::steady_clock::now();

    const auto arms = assign_arms(spec.j_clusters);
    const std::size_t big_l = static_cast<std::size_t>(spec.outer_samples);

    std::vector<std::int8_t> indicator(big_l, 0);
    std::string first_failure;
    std::mutex failure_mutex;

    parallel_for(big_l, spec.workers, [&](std::size_t l) {
        RngStream rng = substream(spec.base_seed, salts::kAssuranceDraw,
                                  static_cast<std::uint64_t>(n_total), l);
        try {
            const DesignDraw psi = sample_design(spec.design_prior, spec.j_clusters, rng);
            ClusterLayout layout;
            layout.arms = arms;
            layout.total = n_total;
            layout.sizes = draw_multinomial(rng, n_total, *psi.cluster_probs);
            const TrialData data = simulate_trial(psi.params, layout, rng);
            McmcSettings settings = spec.mcmc;
            settings.allow_empty_arm = true;
            const PosteriorSamples post = run_chain(data, spec.analysis_prior, settings, rng);
            const double prob = posterior_prob_exceeds(post, spec.rule.threshold);
            indicator[l] = success_indicator(prob, spec.rule) ? 1 : 0;
        } catch (const NumericalError& e) {
            indicator[l] = -1;
            std::lock_guard<std::mutex> lock(failure_mutex);
            if (first_failure.empty()) first_failure = e.what();
        }
    });

    AssuranceResult res;
    res.n_total = n_total;
    res.seed = spec.base_seed;
    res.indicators = indicator;
    for (std::int8_t v : indicator) {
        if (v < 0)
            ++res.failures;
        else {
            ++res.outer_samples;
            res.successes += v;
        }
    }
    if (res.failures > 0 &&
        static_cast<double>(res.failures) > 0.01 * static_cast<double>(big_l)) {
        std::ostringstream msg;
        msg << res.failures << "/" << big_l << " outer draws failed; first: " << first_failure;
        throw NumericalError(msg.str());
    }
    if (res.outer_samples > 0) {
        res.estimate = static_cast<double>(res.successes) / static_cast<double>(res.outer_samples);
        res.mc_standard_error = std::sqrt(res.estimate * (1.0 - res.estimate) /
                                          static_cast<double>(res.outer_samples));
    }
    res.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return res;
}

struct SampleSizeSearch {
    int n_total = 0;
    int n_bar = 0;
    AssuranceResult at_chosen;
};

/*
 * Linear ascending scan over integer mean cluster sizes n_bar, total size
 * J * n_bar; returns the first candidate whose assurance estimate reaches the
 * target. Candidates are keyed by (base_seed, n_total) through the outer-draw
 * substreams, so a search is reproducible regardless of scheduling.
 */
inline SampleSizeSearch find_sample_size(const AssuranceSpec& spec, double target, int nbar_min,
                                         int nbar_max) {
    if (!(target > 0.0 && target < 1.0)) throw InvalidDesignError("target must lie in (0, 1)");
    if (nbar_min < 1 || nbar_max < nbar_min) throw InvalidDesignError("bad mean-size grid");
    double best = -1.0;
    int best_n = 0;
    for (int nbar = nbar_min; nbar <= nbar_max; ++nbar) {
        const int n_total = spec.j_clusters * nbar;
        AssuranceResult r = estimate_assurance(spec, n_total);
        if (r.estimate >= target) return {n_total, nbar, std::move(r)};
        if (r.estimate > best) {
            best = r.estimate;
            best_n = n_total;
        }
    }
    std::ostringstream msg;
    msg << "assurance target " << target << " not reached on grid; max estimate " << best
        << " at n_total=" << best_n;
    throw NotAchievableError(msg.str(), best, best_n);
}

struct SampleSizeResult {
    std::vector<int> per_run_sizes;
    std::vector<double> per_run_estimates;
    int modal_size = 0;
    double modal_proportion = 0.0;
    double assurance_at_mode = 0.0;  // mean estimate over the runs that chose the mode
};

// Repeats the search R times on derived seeds and reports the modal size,
// breaking frequency ties toward the smaller size.
inline SampleSizeResult modal_sample_size(const AssuranceSpec& spec, double target, int nbar_min,
                                          int nbar_max, int repetitions) {
    if (repetitions < 1) throw InvalidDesignError("repetitions must be >= 1");
    SampleSizeResult out;
    std::map<int, int> counts;
    for (int r = 0; r < repetitions; ++r) {
        AssuranceSpec rep_spec = spec;
        rep_spec.base_seed = derive_key(spec.base_seed, salts::kModalRep,
                                        static_cast<std::uint64_t>(r));
        const SampleSizeSearch found = find_sample_size(rep_spec, target, nbar_min, nbar_max);
        out.per_run_sizes.push_back(found.n_total);
        out.per_run_estimates.push_back(found.at_chosen.estimate);
        ++counts[found.n_total];
    }
    int best_count = 0;
    for (const auto& [size, count] : counts) {
        if (count > best_count) {  // map order makes ties resolve to the smaller size
            best_count = count;
            out.modal_size = size;
        }
    }
    out.modal_proportion = static_cast<double>(best_count) / static_cast<double>(repetitions);
    double sum = 0.0;
    int n = 0;
    for (std::size_t i = 0; i < out.per_run_sizes.size(); ++i) {
        if (out.per_run_sizes[i] == out.modal_size) {
            sum += out.per_run_estimates[i];
            ++n;
        }
    }
    out.assurance_at_mode = n > 0 ? sum / n : 0.0;
    return out;
}

/*
 * Smallest odd number of repetitions R such that, when each run finds the
 * correct size with probability p and otherwise lands one grid step high or
 * low with equal probability, the correct size is the strict plurality with
 * probability >= confidence. Estimated by Monte Carlo (1e5 replicates per
 * candidate R); odd R are scanned linearly up to 99, then bracketed by
 * doubling and bisected, since the plurality probability is increasing in R
 * up to simulation noise.
 */
inline int repetitions_needed(double per_run_correct_prob, double confidence,
                              std::uint64_t seed = 20240901, int max_repetitions = 9999) {
    if (!(per_run_correct_prob > 0.0 && per_run_correct_prob <= 1.0))
        throw InvalidParameterError("per-run probability must lie in (0, 1]");
    if (!(confidence > 0.0 && confidence < 1.0))
        throw InvalidParameterError("confidence must lie in (0, 1)");
    if (per_run_correct_prob == 1.0) return 1;

    constexpr int kReplicates = 100000;
    const double p = per_run_correct_prob;
    auto plurality_prob = [&](int reps) {
        RngStream rng = substream(seed, salts::kRepetitions, static_cast<std::uint64_t>(reps));
        int hit = 0;
        for (int i = 0; i < kReplicates; ++i) {
            std::binomial_distribution<int> correct(reps, p);
            const int n_correct = correct(rng);
            const int n_wrong = reps - n_correct;
            std::binomial_distribution<int> low_split(n_wrong, 0.5);
            const int n_low = n_wrong > 0 ? low_split(rng) : 0;
            const int n_high = n_wrong - n_low;
            hit += n_correct > n_low && n_correct > n_high;
        }
        return static_cast<double>(hit) / kReplicates;
    };

    if (max_repetitions % 2 == 0) --max_repetitions;
    if (plurality_prob(max_repetitions) < confidence) {
        std::ostringstream msg;
        msg << "plurality probability below " << confidence << " even at R=" << max_repetitions;
        throw NotAchievableError(msg.str(), 0.0, max_repetitions);
    }
    for (int r = 1; r <= std::min(99, max_repetitions); r += 2)
        if (plurality_prob(r) >= confidence) return r;

    int lo = 99, hi = 201;  // lo fails, find a passing hi
    while (hi < max_repetitions && plurality_prob(hi) < confidence) {
        lo = hi;
        hi = std::min(max_repetitions, 2 * hi + 1);
    }
    while (hi - lo > 2) {
        int mid = lo + (hi - lo) / 2;
        if (mid % 2 == 0) ++mid;
        if (mid >= hi) mid -= 2;
        if (plurality_prob(mid) >= confidence)
            hi = mid;
        else
            lo = mid;
    }
    return hi;
}

}  // namespace assure
