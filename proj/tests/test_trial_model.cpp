#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "assure/rng.hpp"
#include "assure/trial_model.hpp"

using namespace assure;

TEST_CASE("arm assignment is balanced with control taking the extra", "[trial_model]") {
    const auto count = [](const std::vector<Arm>& arms, Arm which) {
        int n = 0;
        for (Arm a : arms) n += a == which;
        return n;
    };

    auto a40 = assign_arms(40);
    REQUIRE(count(a40, Arm::treatment) == 20);
    REQUIRE(count(a40, Arm::control) == 20);

    auto a2 = assign_arms(2);
    REQUIRE(count(a2, Arm::treatment) == 1);
    REQUIRE(count(a2, Arm::control) == 1);

    auto a7 = assign_arms(7);
    REQUIRE(count(a7, Arm::treatment) == 3);
    REQUIRE(count(a7, Arm::control) == 4);
    // deterministic ordering: first half control, second half treatment
    for (int j = 0; j < 4; ++j) REQUIRE(a7[j] == Arm::control);
    for (int j = 4; j < 7; ++j) REQUIRE(a7[j] == Arm::treatment);

    REQUIRE_THROWS_AS(assign_arms(1), InvalidDesignError);
}

TEST_CASE("multinomial allocation sums to the total", "[trial_model]") {
    RngStream rng = substream(1, 11);
    ClusterProbabilities p{{0.25, 0.25, 0.25, 0.25}};
    const auto sizes = allocate_clusters(100, p, rng);
    int total = 0;
    for (int n : sizes) total += n;
    REQUIRE(total == 100);
}

TEST_CASE("degenerate category takes everything", "[trial_model]") {
    RngStream rng = substream(1, 12);
    ClusterProbabilities p{{1.0, 0.0, 0.0}};
    const auto sizes = allocate_clusters(50, p, rng);
    REQUIRE(sizes == std::vector<int>{50, 0, 0});
}

TEST_CASE("allocation means match total times probability", "[trial_model]") {
    RngStream rng = substream(1, 13);
    ClusterProbabilities p{{0.1, 0.2, 0.3, 0.4}};
    const int total = 100, reps = 4000;
    std::vector<double> sums(4, 0.0);
    for (int r = 0; r < reps; ++r) {
        const auto sizes = allocate_clusters(total, p, rng);
        for (int j = 0; j < 4; ++j) sums[j] += sizes[j];
    }
    for (int j = 0; j < 4; ++j) {
        const double expect = total * p.p[j];
        const double se = std::sqrt(total * p.p[j] * (1.0 - p.p[j]) / reps);
        REQUIRE(std::abs(sums[j] / reps - expect) < 3.0 * se);
    }
}

TEST_CASE("dirichlet draws form a simplex point", "[trial_model]") {
    RngStream rng = substream(1, 14);
    for (double a : {100.0, 7.0}) {
        const auto p = sample_cluster_probabilities(a == 7.0 ? 50 : 10, a, rng);
        double sum = 0.0;
        for (double x : p.p) {
            REQUIRE(x >= 0.0);
            sum += x;
        }
        REQUIRE(std::abs(sum - 1.0) < 1e-12);
        REQUIRE_NOTHROW(p.validate());
    }
    REQUIRE_THROWS_AS(sample_cluster_probabilities(10, 0.0, rng), InvalidPriorError);
}

TEST_CASE("huge concentration collapses to equal probabilities", "[trial_model]") {
    RngStream rng = substream(1, 15);
    const auto p = sample_cluster_probabilities(10, 1e9, rng);
    for (double x : p.p) REQUIRE(std::abs(x - 0.1) < 1e-3);
}

TEST_CASE("near-degenerate noise pins outcomes at the arm means", "[trial_model]") {
    RngStream rng = substream(1, 16);
    ModelParams theta{10.0, 1.0, 0.0, 1e-12};
    ClusterLayout layout;
    layout.sizes = {4, 4};
    layout.arms = assign_arms(2);
    layout.total = 8;
    const TrialData data = simulate_trial(theta, layout, rng);
    for (double y : data.outcomes[0]) REQUIRE(std::abs(y - 10.0) < 1e-4);
    for (double y : data.outcomes[1]) REQUIRE(std::abs(y - 11.0) < 1e-4);
}

TEST_CASE("control-arm mean lands near the overall mean", "[trial_model]") {
    RngStream rng = substream(1, 17);
    ModelParams theta{10.0, 1.0, 2.0, 1.0};
    const int j_n = 20, per = 5000;
    ClusterLayout layout;
    layout.sizes.assign(j_n, per);
    layout.arms = assign_arms(j_n);
    layout.total = j_n * per;
    const TrialData data = simulate_trial(theta, layout, rng);
    double sum = 0.0;
    long n = 0;
    for (int j = 0; j < j_n; ++j) {
        if (layout.arms[j] != Arm::control) continue;
        for (double y : data.outcomes[j]) sum += y;
        n += layout.sizes[j];
    }
    // cluster effects dominate the arm-mean standard error
    const double se = std::sqrt(theta.var_between / 10 + theta.var_within / n);
    REQUIRE(std::abs(sum / n - 10.0) < 3.0 * se);
}

TEST_CASE("zero-size clusters contribute nothing but stay valid", "[trial_model]") {
    RngStream rng = substream(1, 18);
    ModelParams theta{0.0, 0.0, 1.0, 1.0};
    ClusterLayout layout;
    layout.sizes = {5, 0, 3};
    layout.arms = {Arm::control, Arm::control, Arm::treatment};
    layout.total = 8;
    const TrialData data = simulate_trial(theta, layout, rng);
    REQUIRE(data.outcomes[1].empty());
    REQUIRE_NOTHROW(data.validate());
}

TEST_CASE("outcome counts always match the layout total", "[trial_model]") {
    RngStream rng = substream(1, 19);
    ModelParams theta{5.0, -1.0, 0.5, 2.0};
    for (int rep = 0; rep < 20; ++rep) {
        const int j_n = 2 + static_cast<int>(rng() % 8);
        ClusterProbabilities p = sample_cluster_probabilities(j_n, 3.0, rng);
        ClusterLayout layout;
        layout.total = static_cast<int>(rng() % 200);
        layout.sizes = allocate_clusters(layout.total, p, rng);
        layout.arms = assign_arms(j_n);
        const TrialData data = simulate_trial(theta, layout, rng);
        long total = 0;
        for (const auto& ys : data.outcomes) total += static_cast<long>(ys.size());
        REQUIRE(total == layout.total);
    }
}

TEST_CASE("null treatment effect keeps arms exchangeable", "[trial_model]") {
    RngStream rng = substream(1, 20);
    ModelParams theta{10.0, 0.0, 2.0, 1.0};
    const int reps = 400;
    std::vector<double> diffs;
    for (int r = 0; r < reps; ++r) {
        ClusterLayout layout;
        layout.sizes.assign(6, 10);
        layout.arms = assign_arms(6);
        layout.total = 60;
        const TrialData data = simulate_trial(theta, layout, rng);
        double mt = 0.0, mc = 0.0;
        long nt = 0, nc = 0;
        for (int j = 0; j < 6; ++j) {
            for (double y : data.outcomes[j]) {
                if (layout.arms[j] == Arm::treatment) {
                    mt += y;
                    ++nt;
                } else {
                    mc += y;
                    ++nc;
                }
            }
        }
        diffs.push_back(mt / nt - mc / nc);
    }
    const double mean = stats::sample_mean(diffs);
    const double se = stats::sample_sd(diffs) / std::sqrt(static_cast<double>(reps));
    REQUIRE(std::abs(mean) < 3.0 * se);
}

TEST_CASE("icc arithmetic", "[trial_model]") {
    REQUIRE(icc(2.0, 1.0) == Catch::Approx(2.0 / 3.0).epsilon(1e-15));
    REQUIRE(icc(0.0, 5.0) == 0.0);
    REQUIRE_THROWS_AS(icc(1.0, 0.0), InvalidParameterError);
    REQUIRE_THROWS_AS(icc(1.0, -2.0), InvalidParameterError);

    // (rho, sigma^2) -> variances -> rho round trip
    const auto split = variances_from_icc(0.028, 69.2224);
    REQUIRE(icc(split.var_between, split.var_within) == Catch::Approx(0.028).epsilon(1e-12));
    REQUIRE(split.var_between + split.var_within == Catch::Approx(69.2224).epsilon(1e-12));

    // monotone in the between-cluster variance
    double prev = -1.0;
    for (double vb : {0.0, 0.1, 0.5, 1.0, 5.0, 100.0}) {
        const double r = icc(vb, 3.0);
        REQUIRE(r > prev);
        REQUIRE(r >= 0.0);
        REQUIRE(r < 1.0);
        prev = r;
    }
}

TEST_CASE("cv of sizes", "[trial_model]") {
    REQUIRE(cv_of_sizes({5, 5, 5, 5}) == 0.0);
    REQUIRE(cv_of_sizes({2, 4}) == Catch::Approx(std::sqrt(2.0) / 3.0).epsilon(1e-15));
    REQUIRE_THROWS_AS(cv_of_sizes({0, 0, 0}), InvalidParameterError);
    REQUIRE_THROWS_AS(cv_of_sizes({}), InvalidParameterError);
}

TEST_CASE("dirichlet-multinomial cluster sizes have the expected spread", "[trial_model]") {
    RngStream rng = substream(1, 21);
    const int j_n = 50, total = 250, reps = 3000;
    double sum_cv = 0.0;
    for (int r = 0; r < reps; ++r) {
        const auto p = sample_cluster_probabilities(j_n, 7.0, rng);
        const auto sizes = allocate_clusters(total, p, rng);
        sum_cv += cv_of_sizes(sizes);
    }
    const double mean_cv = sum_cv / reps;
    REQUIRE(mean_cv > 0.34);
    REQUIRE(mean_cv < 0.64);
}

TEST_CASE("tight concentration keeps size spread small", "[trial_model]") {
    RngStream rng = substream(1, 22);
    const int j_n = 10, total = 500, reps = 1000;
    double sum_cv = 0.0;
    for (int r = 0; r < reps; ++r) {
        const auto p = sample_cluster_probabilities(j_n, 100.0, rng);
        sum_cv += cv_of_sizes(allocate_clusters(total, p, rng));
    }
    REQUIRE(sum_cv / reps < 0.15);
}
