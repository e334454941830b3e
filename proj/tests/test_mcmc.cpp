#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "assure/mcmc.hpp"
#include "assure/rng.hpp"
#include "assure/trial_model.hpp"
#include "oracles.hpp"

using namespace assure;

namespace {

TrialData make_dataset(std::uint64_t seed, int j_n, int per_cluster, ModelParams theta) {
    RngStream rng = substream(seed, 900);
    ClusterLayout layout;
    layout.sizes.assign(j_n, per_cluster);
    layout.arms = assign_arms(j_n);
    layout.total = j_n * per_cluster;
    return simulate_trial(theta, layout, rng);
}

AnalysisPrior diffuse_prior(int family) {
    AnalysisPrior p;
    p.lambda_mean = 1.0;
    p.lambda_var = 1000.0;
    p.delta_mean = 0.0;
    p.delta_var = 1000.0;
    p.variance_family = variance_family_preset(family);
    return p;
}

}  // namespace

// Single-site conditionals against their analytic densities. Each update
// leaves its own conditioning state untouched, so repeated calls are iid
// draws from the full conditional.
TEST_CASE("full conditionals match their analytic form", "[mcmc]") {
    const ModelParams truth{10.0, 1.0, 0.5, 1.0};
    const TrialData data = make_dataset(41, 6, 10, truth);
    McmcSettings settings;
    GibbsSampler s(data, diffuse_prior(2), settings);
    s.set_state(9.8, 1.1, 0.6, 0.9);
    std::vector<double> c0 = {0.1, -0.2, 0.3, 0.0, -0.1, 0.2};
    s.set_cluster_effects(c0);

    // analytic pieces computed straight from the raw data
    const auto& layout = data.layout;
    double n_tot = 0.0, n_trt = 0.0;
    for (std::size_t j = 0; j < layout.n_clusters(); ++j) {
        n_tot += layout.sizes[j];
        if (layout.arms[j] == Arm::treatment) n_trt += layout.sizes[j];
    }
    const double tw = 1.0 / 0.9, tb = 1.0 / 0.6;
    const int n_draws = 100000;
    RngStream rng = substream(41, 901);

    SECTION("overall mean") {
        double resid = 0.0;
        for (std::size_t j = 0; j < layout.n_clusters(); ++j) {
            const double adj = (layout.arms[j] == Arm::treatment ? 1.1 : 0.0) + c0[j];
            for (double y : data.outcomes[j]) resid += y - adj;
        }
        const double prec = 1.0 / 1000.0 + tw * n_tot;
        const double mean = (1.0 / 1000.0 + tw * resid) / prec;
        std::vector<double> draws(n_draws);
        for (auto& d : draws) {
            s.update_lambda(rng);
            d = s.lambda();
            s.set_state(9.8, 1.1, 0.6, 0.9);  // restore the conditioning point
        }
        const double sd = std::sqrt(1.0 / prec);
        const double p = oracles::chi_square_gof_pvalue(
            draws, [&](double x) { return stats::norm_cdf((x - mean) / sd); });
        REQUIRE(p > 0.001);
    }

    SECTION("treatment effect") {
        double resid = 0.0;
        for (std::size_t j = 0; j < layout.n_clusters(); ++j) {
            if (layout.arms[j] != Arm::treatment) continue;
            for (double y : data.outcomes[j]) resid += y - 9.8 - c0[j];
        }
        const double prec = 1.0 / 1000.0 + tw * n_trt;
        const double mean = tw * resid / prec;
        std::vector<double> draws(n_draws);
        for (auto& d : draws) {
            s.update_delta(rng);
            d = s.delta();
            s.set_state(9.8, 1.1, 0.6, 0.9);
        }
        const double sd = std::sqrt(1.0 / prec);
        const double p = oracles::chi_square_gof_pvalue(
            draws, [&](double x) { return stats::norm_cdf((x - mean) / sd); });
        REQUIRE(p > 0.001);
    }

    SECTION("cluster effect") {
        const std::size_t j = 2;
        double resid = 0.0;
        for (double y : data.outcomes[j])
            resid += y - 9.8 - (layout.arms[j] == Arm::treatment ? 1.1 : 0.0);
        const double prec = tb + tw * layout.sizes[j];
        const double mean = tw * resid / prec;
        std::vector<double> draws(n_draws);
        for (auto& d : draws) {
            s.update_cluster_effects(rng);
            d = s.cluster_effects()[j];
            s.set_cluster_effects(c0);
        }
        const double sd = std::sqrt(1.0 / prec);
        const double p = oracles::chi_square_gof_pvalue(
            draws, [&](double x) { return stats::norm_cdf((x - mean) / sd); });
        REQUIRE(p > 0.001);
    }

    SECTION("precisions") {
        double sse = 0.0;
        for (std::size_t j = 0; j < layout.n_clusters(); ++j) {
            const double mu = 9.8 + (layout.arms[j] == Arm::treatment ? 1.1 : 0.0) + c0[j];
            for (double y : data.outcomes[j]) sse += (y - mu) * (y - mu);
        }
        double c2 = 0.0;
        for (double c : c0) c2 += c * c;
        std::vector<double> tws(n_draws), tbs(n_draws);
        for (int i = 0; i < n_draws; ++i) {
            s.update_variances_conjugate(rng);
            tws[i] = 1.0 / s.var_within();
            tbs[i] = 1.0 / s.var_between();
            s.set_state(9.8, 1.1, 0.6, 0.9);
        }
        const double pw = oracles::chi_square_gof_pvalue(tws, [&](double x) {
            return stats::gamma_cdf(x, 0.1 + n_tot / 2.0, 0.1 + sse / 2.0);
        });
        const double pb = oracles::chi_square_gof_pvalue(tbs, [&](double x) {
            return stats::gamma_cdf(x, 0.1 + 6.0 / 2.0, 0.1 + c2 / 2.0);
        });
        REQUIRE(pw > 0.001);
        REQUIRE(pb > 0.001);
    }
}

TEST_CASE("fixed-variance chain matches the exact gaussian posterior", "[mcmc]") {
    const ModelParams truth{10.0, 1.0, 0.5, 1.0};
    for (int j_n : {2, 6, 12}) {
        const TrialData data = make_dataset(50 + j_n, j_n, 8, truth);
        McmcSettings settings;
        settings.burn_in = 500;
        settings.kept_samples = 20000;
        settings.fixed_variances = std::make_pair(0.5, 1.0);
        RngStream rng = substream(51, static_cast<std::uint64_t>(j_n));
        const PosteriorSamples post = run_chain(data, diffuse_prior(2), settings, rng);

        const auto gls = oracles::gls_delta_posterior(data, 0.5, 1.0, 1.0, 1000.0, 0.0, 1000.0);
        const double se_mean = oracles::batch_means_se(post.delta);
        INFO("J=" << j_n << " gls mean " << gls.mean_delta << " mcmc "
                  << stats::sample_mean(post.delta));
        REQUIRE(std::abs(stats::sample_mean(post.delta) - gls.mean_delta) < 3.0 * se_mean);

        // delta-method standard error for the posterior sd
        std::vector<double> sq(post.delta.size());
        const double m = stats::sample_mean(post.delta);
        for (std::size_t i = 0; i < sq.size(); ++i)
            sq[i] = (post.delta[i] - m) * (post.delta[i] - m);
        const double sd_mcmc = stats::sample_sd(post.delta);
        const double se_sd = oracles::batch_means_se(sq) / (2.0 * sd_mcmc);
        REQUIRE(std::abs(sd_mcmc - gls.sd_delta) < 3.0 * se_sd);
    }
}

TEST_CASE("zero observations recover the effect prior in all families", "[mcmc]") {
    TrialData data;
    data.layout.sizes = {0, 0};
    data.layout.arms = assign_arms(2);
    data.layout.total = 0;
    data.outcomes = {{}, {}};

    for (int family = 1; family <= 6; ++family) {
        AnalysisPrior prior = diffuse_prior(family);
        prior.delta_mean = 0.7;
        prior.delta_var = 4.0;
        McmcSettings settings;
        settings.burn_in = 500;
        settings.kept_samples = 30000;
        RngStream rng = substream(52, static_cast<std::uint64_t>(family));
        const PosteriorSamples post = run_chain(data, prior, settings, rng);

        // with no data the delta draws are iid from N(0.7, 4)
        const double mean = stats::sample_mean(post.delta);
        const double var = stats::sample_variance(post.delta);
        const double n = static_cast<double>(post.delta.size());
        INFO("family " << family << " mean " << mean << " var " << var);
        REQUIRE(std::abs(mean - 0.7) < 3.0 * std::sqrt(4.0 / n));
        REQUIRE(std::abs(var - 4.0) < 3.0 * 4.0 * std::sqrt(2.0 / (n - 1.0)));
    }
}

TEST_CASE("posterior for the effect tightens with the sample size", "[mcmc]") {
    const ModelParams truth{10.0, 1.0, 2.0, 1.0};
    const int j_list[] = {6, 12, 25, 50};
    double prev_mean_sd = 1e9;
    for (int idx = 0; idx < 4; ++idx) {
        double sum_sd = 0.0;
        for (std::uint64_t seed = 0; seed < 10; ++seed) {
            const TrialData data = make_dataset(600 + seed * 7 + idx, j_list[idx], 10, truth);
            McmcSettings settings;
            settings.burn_in = 500;
            settings.kept_samples = 3000;
            RngStream rng = substream(53, seed, static_cast<std::uint64_t>(idx));
            const PosteriorSamples post = run_chain(data, diffuse_prior(2), settings, rng);
            sum_sd += stats::sample_sd(post.delta);
        }
        const double mean_sd = sum_sd / 10.0;
        INFO("J=" << j_list[idx] << " mean posterior sd " << mean_sd);
        REQUIRE(mean_sd < prev_mean_sd);
        prev_mean_sd = mean_sd;
    }
}

TEST_CASE("all six families agree on a large common dataset", "[mcmc]") {
    const ModelParams truth{10.0, 1.0, 2.0, 1.0};
    const TrialData data = make_dataset(54, 50, 10, truth);
    McmcSettings settings;
    settings.burn_in = 1000;
    settings.kept_samples = 10000;
    std::vector<double> probs;
    for (int family = 1; family <= 6; ++family) {
        RngStream rng = substream(54, static_cast<std::uint64_t>(family));
        const PosteriorSamples post = run_chain(data, diffuse_prior(family), settings, rng);
        probs.push_back(posterior_prob_exceeds(post, 0.0));
    }
    for (double a : probs)
        for (double b : probs) REQUIRE(std::abs(a - b) < 0.03);
}

TEST_CASE("chains are bit-reproducible", "[mcmc]") {
    const ModelParams truth{10.0, 1.0, 2.0, 1.0};
    const TrialData data = make_dataset(55, 8, 10, truth);
    McmcSettings settings;
    settings.burn_in = 200;
    settings.kept_samples = 500;
    for (int family : {2, 5}) {
        RngStream r1 = substream(55, static_cast<std::uint64_t>(family));
        RngStream r2 = substream(55, static_cast<std::uint64_t>(family));
        const PosteriorSamples a = run_chain(data, diffuse_prior(family), settings, r1);
        const PosteriorSamples b = run_chain(data, diffuse_prior(family), settings, r2);
        REQUIRE(a.delta == b.delta);
        REQUIRE(a.var_between == b.var_between);
    }
}

TEST_CASE("an empty arm is rejected unless explicitly allowed", "[mcmc]") {
    TrialData data;
    data.layout.sizes = {5, 0};
    data.layout.arms = {Arm::control, Arm::treatment};
    data.layout.total = 5;
    data.outcomes = {{1.0, 2.0, 1.5, 0.5, 1.2}, {}};
    McmcSettings settings;
    settings.burn_in = 50;
    settings.kept_samples = 100;
    RngStream rng = substream(56, 0);
    REQUIRE_THROWS_AS(run_chain(data, diffuse_prior(2), settings, rng), InvalidDataError);
    settings.allow_empty_arm = true;
    REQUIRE_NOTHROW(run_chain(data, diffuse_prior(2), settings, rng));
}

TEST_CASE("posterior probability counts strict exceedances", "[mcmc]") {
    PosteriorSamples s;
    s.delta = {0.5, 1.5, -0.2, 2.0};
    REQUIRE(posterior_prob_exceeds(s, 0.0) == 0.75);
    s.delta = {-1.0, -2.0, -0.5};
    REQUIRE(posterior_prob_exceeds(s, 0.0) == 0.0);
    REQUIRE(posterior_prob_exceeds(s, -1e300) == 1.0);
}

TEST_CASE("success rule is a strict comparison", "[mcmc]") {
    SuccessRule rule;
    rule.confidence = 0.95;
    REQUIRE(success_indicator(0.98, rule));
    REQUIRE_FALSE(success_indicator(0.95, rule));
    REQUIRE_FALSE(success_indicator(0.43, rule));
}

TEST_CASE("trace sink sees every kept sample", "[mcmc]") {
    const ModelParams truth{10.0, 1.0, 1.0, 1.0};
    const TrialData data = make_dataset(57, 4, 6, truth);
    McmcSettings settings;
    settings.burn_in = 50;
    settings.kept_samples = 120;
    settings.thin = 2;
    RngStream rng = substream(57, 1);
    std::vector<double> traced;
    const PosteriorSamples post =
        run_chain(data, diffuse_prior(2), settings, rng,
                  [&](int, double, double d, double, double) { traced.push_back(d); });
    REQUIRE(traced.size() == post.delta.size());
    REQUIRE(traced == post.delta);
}

TEST_CASE("metropolis step sizes adapt to a sane acceptance rate", "[mcmc]") {
    const ModelParams truth{10.0, 1.0, 2.0, 1.0};
    const TrialData data = make_dataset(58, 12, 10, truth);
    McmcSettings settings;
    settings.burn_in = 3000;
    settings.kept_samples = 4000;
    for (int family : {3, 4, 5, 6}) {
        RngStream rng = substream(58, static_cast<std::uint64_t>(family));
        const PosteriorSamples post = run_chain(data, diffuse_prior(family), settings, rng);
        REQUIRE(post.acceptance_rates.size() == 2);
        for (double rate : post.acceptance_rates) {
            INFO("family " << family << " acceptance " << rate);
            REQUIRE(rate > 0.2);
            REQUIRE(rate < 0.75);
        }
    }
}
