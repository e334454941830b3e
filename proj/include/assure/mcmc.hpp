#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "assure/errors.hpp"
#include "assure/priors.hpp"
#include "assure/rng.hpp"
#include "assure/sampling.hpp"
#include "assure/trial_model.hpp"

namespace assure {

struct McmcSettings {
    int burn_in = 1000;
    int kept_samples = 1000;  // K
    int thin = 1;
    double mh_target_acceptance = 0.44;
    bool adapt_during_burn_in = true;
    // Simulated designs can randomly leave an arm empty; the assurance loop
    // sets this so such trials are analysed (the effect keeps its prior and
    // the trial fails) instead of rejected.
    bool allow_empty_arm = false;
    // Validation mode: hold (var_between, var_within) at known values and
    // skip the variance update entirely.
    std::optional<std::pair<double, double>> fixed_variances;

    void validate() const {
        if (burn_in < 0) throw InvalidParameterError("burn_in must be >= 0");
        if (kept_samples < 1) throw InvalidParameterError("kept_samples must be >= 1");
        if (thin < 1) throw InvalidParameterError("thin must be >= 1");
        if (!(mh_target_acceptance > 0.0 && mh_target_acceptance < 1.0))
            throw InvalidParameterError("mh_target_acceptance must lie in (0, 1)");
    }
};

struct PosteriorSamples {
    std::vector<double> delta;
    std::vector<double> lambda;
    std::vector<double> var_between;
    std::vector<double> var_within;
    std::vector<double> acceptance_rates;  // one per MH coordinate, empty for conjugate runs
};

struct SuccessRule {
    double threshold = 0.0;  // delta* in the success event delta > delta*
    double confidence = 0.95;

    void validate() const {
        if (!(confidence > 0.0 && confidence < 1.0))
            throw InvalidParameterError("confidence must lie in (0, 1)");
    }
};

inline double posterior_prob_exceeds(const PosteriorSamples& samples, double threshold) {
    if (samples.delta.empty()) throw InvalidDataError("no posterior samples");
    std::size_t count = 0;
    for (double d : samples.delta) count += d > threshold;
    return static_cast<double>(count) / static_cast<double>(samples.delta.size());
}

// Strict comparison: the trial succeeds when the posterior probability
// exceeds the confidence level.
inline bool success_indicator(double prob, const SuccessRule& rule) {
    return prob > rule.confidence;
}

namespace detail {

// Per-cluster sufficient statistics; every Gibbs update is O(J) given these.
struct ClusterStats {
    std::vector<double> n;     // cluster sizes
    std::vector<double> sum;   // sum of outcomes
    std::vector<double> ssc;   // centred sum of squares within the cluster
    std::vector<double> mean;  // cluster mean (0 for empty clusters)
    std::vector<double> x;     // 1 for treatment, 0 for control
    double n_total = 0.0;
    double n_treated = 0.0;

    explicit ClusterStats(const TrialData& data) {
        const std::size_t j_n = data.layout.n_clusters();
        n.resize(j_n);
        sum.resize(j_n);
        ssc.resize(j_n);
        mean.resize(j_n);
        x.resize(j_n);
        for (std::size_t j = 0; j < j_n; ++j) {
            const auto& ys = data.outcomes[j];
            n[j] = static_cast<double>(ys.size());
            x[j] = data.layout.arms[j] == Arm::treatment ? 1.0 : 0.0;
            double s = 0.0;
            for (double y : ys) s += y;
            sum[j] = s;
            mean[j] = ys.empty() ? 0.0 : s / n[j];
            double m2 = 0.0;
            for (double y : ys) m2 += (y - mean[j]) * (y - mean[j]);
            ssc[j] = m2;
            n_total += n[j];
            n_treated += x[j] * n[j];
        }
    }
};

}  // namespace detail

/*
 * Gibbs sampler for the random-intercept model under any AnalysisPrior.
 * Sweep order: lambda -> delta -> cluster effects -> variance block.
 * Gamma-precision families use exact conjugate draws; the other families
 * update the variance block by random-walk Metropolis on unconstrained
 * transforms (log variances for families 3-4; logit icc + log var_within
 * for families 5-6), with step sizes adapted during burn-in only.
 *
 * Exposed as a class so tests can drive single-site updates directly.
 */
class GibbsSampler {
  public:
    GibbsSampler(const TrialData& data, const AnalysisPrior& prior, const McmcSettings& settings)
        : prior_(prior), settings_(settings), stats_(data) {
        prior_.validate();
        settings_.validate();
        data.validate();
        if (!settings_.allow_empty_arm && stats_.n_total > 0.0 &&
            (stats_.n_treated == 0.0 || stats_.n_treated == stats_.n_total))
            throw InvalidDataError("each arm needs at least one observation");
        parameterise_by_icc_ = std::holds_alternative<UniformIcc>(prior_.variance_family) ||
                               std::holds_alternative<BetaIcc>(prior_.variance_family);
        init_state();
    }

    // --- state access (read-mostly; tests also poke values in) ---
    double lambda() const { return lambda_; }
    double delta() const { return delta_; }
    double var_between() const { return var_between_; }
    double var_within() const { return var_within_; }
    const std::vector<double>& cluster_effects() const { return c_; }
    void set_state(double lambda, double delta, double vb, double vw) {
        lambda_ = lambda;
        delta_ = delta;
        set_variances(vb, vw);
    }
    void set_cluster_effects(std::vector<double> c) { c_ = std::move(c); }

    // --- single-site updates ---
    void update_lambda(RngStream& rng) {
        const double tw = 1.0 / var_within_;
        double prec = 1.0 / prior_.lambda_var;
        double num = prior_.lambda_mean / prior_.lambda_var;
        if (stats_.n_total > 0.0) {
            prec += tw * stats_.n_total;
            double resid = 0.0;
            for (std::size_t j = 0; j < stats_.n.size(); ++j)
                resid += stats_.sum[j] - stats_.n[j] * (stats_.x[j] * delta_ + c_[j]);
            num += tw * resid;
        }
        lambda_ = draw_normal(rng, num / prec, std::sqrt(1.0 / prec));
    }

    void update_delta(RngStream& rng) {
        const double tw = 1.0 / var_within_;
        double prec = 1.0 / prior_.delta_var;
        double num = prior_.delta_mean / prior_.delta_var;
        if (stats_.n_treated > 0.0) {
            prec += tw * stats_.n_treated;
            double resid = 0.0;
            for (std::size_t j = 0; j < stats_.n.size(); ++j)
                if (stats_.x[j] > 0.0)
                    resid += stats_.sum[j] - stats_.n[j] * (lambda_ + c_[j]);
            num += tw * resid;
        }
        delta_ = draw_normal(rng, num / prec, std::sqrt(1.0 / prec));
    }

    void update_cluster_effects(RngStream& rng) {
        const double tb = 1.0 / var_between_;
        const double tw = 1.0 / var_within_;
        for (std::size_t j = 0; j < c_.size(); ++j) {
            double prec = tb;
            double num = 0.0;
            if (stats_.n[j] > 0.0) {
                prec += tw * stats_.n[j];
                num = tw * (stats_.sum[j] - stats_.n[j] * (lambda_ + stats_.x[j] * delta_));
            }
            c_[j] = draw_normal(rng, num / prec, std::sqrt(1.0 / prec));
        }
    }

    // Exact conjugate draw for families 1-2. Precisions are clamped away from
    // 0/inf: very diffuse priors with no data can underflow a gamma draw to
    // exactly zero in double precision.
    void update_variances_conjugate(RngStream& rng) {
        const auto& fam = std::get<GammaPrecision>(prior_.variance_family);
        const double tw = std::clamp(
            draw_gamma(rng, fam.r_w + 0.5 * stats_.n_total, fam.s_w + 0.5 * sse_within()),
            1e-290, 1e290);
        const double tb = std::clamp(
            draw_gamma(rng, fam.r_b + 0.5 * static_cast<double>(c_.size()),
                       fam.s_b + 0.5 * sum_c_squared()),
            1e-290, 1e290);
        var_within_ = 1.0 / tw;
        var_between_ = 1.0 / tb;
    }

    // One MH pass over the variance-block coordinates. Returns per-coordinate
    // acceptance indicators (used for adaptation and reporting).
    std::pair<bool, bool> update_variances_metropolis(RngStream& rng) {
        bool acc0, acc1;
        if (!parameterise_by_icc_) {
            // coordinates (log vb, log vw); they separate in the target
            auto u = mh_step(rng, 0, std::log(var_between_), [&](double v) {
                return log_prior_transformed(v, std::log(var_within_)) + loglik_between(std::exp(v));
            });
            if ((acc0 = u.has_value())) var_between_ = std::exp(*u);
            auto w = mh_step(rng, 1, std::log(var_within_), [&](double v) {
                return log_prior_transformed(std::log(var_between_), v) + loglik_within(std::exp(v));
            });
            if ((acc1 = w.has_value())) var_within_ = std::exp(*w);
        } else {
            // coordinates (logit rho, log vw); vb = rho/(1-rho) * vw couples them
            auto t = mh_step(rng, 0, std::log(rho_) - std::log1p(-rho_), [&](double v) {
                return log_prior_transformed(v, std::log(var_within_)) +
                       loglik_between(std::exp(v) * var_within_);
            });
            if ((acc0 = t.has_value())) {
                rho_ = 1.0 / (1.0 + std::exp(-*t));
                var_between_ = rho_ / (1.0 - rho_) * var_within_;
            }
            const double t_cur = std::log(rho_) - std::log1p(-rho_);
            auto w = mh_step(rng, 1, std::log(var_within_), [&](double v) {
                return log_prior_transformed(t_cur, v) + loglik_within(std::exp(v)) +
                       loglik_between(std::exp(t_cur) * std::exp(v));
            });
            if ((acc1 = w.has_value())) {
                var_within_ = std::exp(*w);
                var_between_ = rho_ / (1.0 - rho_) * var_within_;
            }
        }
        return {acc0, acc1};
    }

    void sweep(RngStream& rng, bool adapt_now) {
        update_lambda(rng);
        update_delta(rng);
        update_cluster_effects(rng);
        if (settings_.fixed_variances) return;
        if (std::holds_alternative<GammaPrecision>(prior_.variance_family)) {
            update_variances_conjugate(rng);
        } else {
            const auto [a0, a1] = update_variances_metropolis(rng);
            if (adapt_now && settings_.adapt_during_burn_in) {
                adapt(0, a0);
                adapt(1, a1);
            } else {
                ++proposals_;
                accepts_[0] += a0;
                accepts_[1] += a1;
            }
        }
    }

    double mh_step_size(int coord) const { return std::exp(log_step_[coord]); }
    double rho_state() const { return rho_; }

    std::vector<double> acceptance_rates() const {
        if (std::holds_alternative<GammaPrecision>(prior_.variance_family) ||
            settings_.fixed_variances || proposals_ == 0)
            return {};
        return {static_cast<double>(accepts_[0]) / static_cast<double>(proposals_),
                static_cast<double>(accepts_[1]) / static_cast<double>(proposals_)};
    }

    double sse_within() const {
        double sse = 0.0;
        for (std::size_t j = 0; j < stats_.n.size(); ++j) {
            if (stats_.n[j] == 0.0) continue;
            const double dev = stats_.mean[j] - lambda_ - stats_.x[j] * delta_ - c_[j];
            sse += stats_.ssc[j] + stats_.n[j] * dev * dev;
        }
        return sse;
    }

    double sum_c_squared() const {
        double s = 0.0;
        for (double c : c_) s += c * c;
        return s;
    }

  private:
    void init_state() {
        const std::size_t j_n = stats_.n.size();
        c_.assign(j_n, 0.0);
        // moment-based start; deterministic so chains differ only via streams
        double mean_c = 0.0, mean_t = 0.0, n_c = 0.0, n_t = 0.0;
        for (std::size_t j = 0; j < j_n; ++j) {
            if (stats_.x[j] > 0.0) {
                mean_t += stats_.sum[j];
                n_t += stats_.n[j];
            } else {
                mean_c += stats_.sum[j];
                n_c += stats_.n[j];
            }
        }
        mean_c = n_c > 0.0 ? mean_c / n_c : prior_.lambda_mean;
        mean_t = n_t > 0.0 ? mean_t / n_t : mean_c + prior_.delta_mean;
        lambda_ = mean_c;
        delta_ = mean_t - mean_c;

        double vw = 1.0, vb = 1.0;
        if (stats_.n_total > j_n && stats_.n_total > 0.0) {
            double ssc = 0.0;
            for (double s : stats_.ssc) ssc += s;
            vw = std::max(1e-8, ssc / stats_.n_total);
            double bss = 0.0;
            std::size_t used = 0;
            for (std::size_t j = 0; j < j_n; ++j) {
                if (stats_.n[j] == 0.0) continue;
                const double dev = stats_.mean[j] - lambda_ - stats_.x[j] * delta_;
                bss += dev * dev;
                ++used;
            }
            vb = used > 1 ? std::max(1e-8, bss / static_cast<double>(used)) : vw;
        }
        if (settings_.fixed_variances) {
            vb = settings_.fixed_variances->first;
            vw = settings_.fixed_variances->second;
            if (!(vw > 0.0) || vb < 0.0)
                throw InvalidParameterError("fixed variances invalid");
        }
        clamp_into_support(vb, vw);
        set_variances(vb, vw);
        log_step_ = {std::log(0.5), std::log(0.5)};
        accepts_ = {0, 0};
        proposals_ = 0;
        adapt_batch_ = {0, 0};
        adapt_accepts_ = {0, 0};
    }

    void set_variances(double vb, double vw) {
        var_between_ = vb;
        var_within_ = vw;
        rho_ = vb / (vb + vw);
        rho_ = std::clamp(rho_, 1e-12, 1.0 - 1e-12);
    }

    // Keep the deterministic start inside the family's support.
    void clamp_into_support(double& vb, double& vw) const {
        std::visit(
            [&](const auto& fam) {
                using T = std::decay_t<decltype(fam)>;
                if constexpr (std::is_same_v<T, LogUniformBoth>) {
                    vb = std::clamp(vb, std::exp(fam.l_b) * 1.01, std::exp(fam.u_b) * 0.99);
                    vw = std::clamp(vw, std::exp(fam.l_w) * 1.01, std::exp(fam.u_w) * 0.99);
                } else if constexpr (std::is_same_v<T, UniformBetweenLogUniformWithin>) {
                    const double lo = std::max(fam.l_b, 1e-8);
                    vb = std::clamp(vb, lo + 1e-9, fam.u_b * 0.99);
                    vw = std::clamp(vw, std::exp(fam.l_w) * 1.01, std::exp(fam.u_w) * 0.99);
                } else if constexpr (std::is_same_v<T, UniformIcc>) {
                    vw = std::clamp(vw, std::exp(fam.l_w) * 1.01, std::exp(fam.u_w) * 0.99);
                    double rho = vb / (vb + vw);
                    rho = std::clamp(rho, std::max(fam.l_rho, 1e-6) + 1e-9,
                                     std::min(fam.u_rho, 1.0 - 1e-6) - 1e-9);
                    vb = rho / (1.0 - rho) * vw;
                } else if constexpr (std::is_same_v<T, BetaIcc>) {
                    vw = std::clamp(vw, std::exp(fam.l_w) * 1.01, std::exp(fam.u_w) * 0.99);
                    double rho = vb / (vb + vw);
                    rho = std::clamp(rho, 1e-6, 1.0 - 1e-6);
                    vb = rho / (1.0 - rho) * vw;
                } else {
                    vb = std::max(vb, 1e-10);
                }
            },
            prior_.variance_family);
    }

    double loglik_between(double vb) const {
        if (!(vb > 0.0)) return kNegInf;
        return -0.5 * static_cast<double>(c_.size()) * std::log(vb) -
               0.5 * sum_c_squared() / vb;
    }

    double loglik_within(double vw) const {
        if (!(vw > 0.0)) return kNegInf;
        if (stats_.n_total == 0.0) return 0.0;
        return -0.5 * stats_.n_total * std::log(vw) - 0.5 * sse_within() / vw;
    }

    // log prior density in the MH coordinates, including transform Jacobians.
    // For families 3-4 the coordinates are (log vb, log vw); for 5-6 they are
    // (logit rho, log vw).
    double log_prior_transformed(double first, double w) const {
        return std::visit(
            [&](const auto& fam) -> double {
                using T = std::decay_t<decltype(fam)>;
                if constexpr (std::is_same_v<T, LogUniformBoth>) {
                    if (first < fam.l_b || first > fam.u_b || w < fam.l_w || w > fam.u_w)
                        return kNegInf;
                    return 0.0;
                } else if constexpr (std::is_same_v<T, UniformBetweenLogUniformWithin>) {
                    const double vb = std::exp(first);
                    if (vb < fam.l_b || vb > fam.u_b || w < fam.l_w || w > fam.u_w)
                        return kNegInf;
                    return first;  // d vb / d log vb
                } else if constexpr (std::is_same_v<T, UniformIcc>) {
                    const double rho = 1.0 / (1.0 + std::exp(-first));
                    if (rho < fam.l_rho || rho > fam.u_rho || w < fam.l_w || w > fam.u_w)
                        return kNegInf;
                    return std::log(rho) + std::log1p(-rho);
                } else if constexpr (std::is_same_v<T, BetaIcc>) {
                    const double rho = 1.0 / (1.0 + std::exp(-first));
                    if (w < fam.l_w || w > fam.u_w) return kNegInf;
                    return fam.r_rho * std::log(rho) + fam.s_rho * std::log1p(-rho);
                } else {
                    return kNegInf;  // conjugate families never reach the MH path
                }
            },
            prior_.variance_family);
    }

    // Random-walk step on one coordinate; returns the new value if accepted.
    template <typename LogTarget>
    std::optional<double> mh_step(RngStream& rng, int coord, double current, LogTarget&& logt) {
        const double step = std::exp(log_step_[coord]);
        const double proposal = current + step * draw_std_normal(rng);
        const double lp_new = logt(proposal);
        if (lp_new <= kNegInf) return std::nullopt;
        const double log_ratio = lp_new - logt(current);
        if (log_ratio >= 0.0 || std::log(rng.uniform01()) < log_ratio) return proposal;
        return std::nullopt;
    }

    // Batch Robbins-Monro adaptation toward the target acceptance rate.
    void adapt(int coord, bool accepted) {
        adapt_accepts_[coord] += accepted;
        if (++adapt_batch_[coord] < 50) return;
        ++adapt_rounds_;
        const double rate = adapt_accepts_[coord] / 50.0;
        const double gain = std::min(0.2, 1.0 / std::sqrt(static_cast<double>(adapt_rounds_)));
        log_step_[coord] += rate > settings_.mh_target_acceptance ? gain : -gain;
        log_step_[coord] = std::clamp(log_step_[coord], std::log(1e-4), std::log(50.0));
        adapt_batch_[coord] = 0;
        adapt_accepts_[coord] = 0;
    }

    AnalysisPrior prior_;
    McmcSettings settings_;
    detail::ClusterStats stats_;
    bool parameterise_by_icc_ = false;

    double lambda_ = 0.0, delta_ = 0.0;
    double var_between_ = 1.0, var_within_ = 1.0, rho_ = 0.5;
    std::vector<double> c_;

    std::array<double, 2> log_step_{};
    std::array<long, 2> accepts_{};
    long proposals_ = 0;
    std::array<int, 2> adapt_batch_{};
    std::array<int, 2> adapt_accepts_{};
    long adapt_rounds_ = 0;
};

// Optional per-chain trace sink: called once per kept sample.
using TraceSink = std::function<void(int iteration, double lambda, double delta,
                                     double var_between, double var_within)>;

inline PosteriorSamples run_chain(const TrialData& data, const AnalysisPrior& prior,
                                  const McmcSettings& settings, RngStream& rng,
                                  const TraceSink& trace = nullptr) {
    GibbsSampler sampler(data, prior, settings);
    PosteriorSamples out;
    out.delta.reserve(static_cast<std::size_t>(settings.kept_samples));
    out.lambda.reserve(static_cast<std::size_t>(settings.kept_samples));
    out.var_between.reserve(static_cast<std::size_t>(settings.kept_samples));
    out.var_within.reserve(static_cast<std::size_t>(settings.kept_samples));

    const long total =
        settings.burn_in + static_cast<long>(settings.kept_samples) * settings.thin;
    int kept = 0;
    for (long it = 0; it < total; ++it) {
        sampler.sweep(rng, it < settings.burn_in);
        if (it < settings.burn_in) continue;
        if ((it - settings.burn_in) % settings.thin != 0) continue;
        const double d = sampler.delta(), l = sampler.lambda();
        if (!std::isfinite(d) || !std::isfinite(l)) {
            std::ostringstream msg;
            msg << "non-finite chain state at iteration " << it << " (lambda=" << l
                << ", delta=" << d << ", vb=" << sampler.var_between()
                << ", vw=" << sampler.var_within() << ")";
            throw NumericalError(msg.str());
        }
        out.delta.push_back(d);
        out.lambda.push_back(l);
        out.var_between.push_back(sampler.var_between());
        out.var_within.push_back(sampler.var_within());
        if (trace) trace(kept, l, d, sampler.var_between(), sampler.var_within());
        ++kept;
    }
    out.acceptance_rates = sampler.acceptance_rates();
    return out;
}

}  // namespace assure
