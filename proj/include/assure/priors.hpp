#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "assure/errors.hpp"
#include "assure/rng.hpp"
#include "assure/sampling.hpp"
#include "assure/stats.hpp"
#include "assure/trial_model.hpp"

namespace assure {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// ---------------------------------------------------------------------------
// Analysis priors: Normal on (lambda, delta) plus one of six variance families.
// ---------------------------------------------------------------------------

// Families 1-2: independent Gamma priors on the precisions 1/var.
struct GammaPrecision {
    double r_b, s_b, r_w, s_w;
};

// Family 3: log(var_between) and log(var_within) both uniform.
struct LogUniformBoth {
    double l_b, u_b, l_w, u_w;
};

// Family 4: var_between uniform, log(var_within) uniform.
struct UniformBetweenLogUniformWithin {
    double l_b, u_b, l_w, u_w;
};

// Family 5: icc uniform, log(var_within) uniform.
struct UniformIcc {
    double l_rho, u_rho, l_w, u_w;
};

// Family 6: icc Beta, log(var_within) uniform.
struct BetaIcc {
    double r_rho, s_rho, l_w, u_w;
};

using VarianceFamily = std::variant<GammaPrecision, LogUniformBoth,
                                    UniformBetweenLogUniformWithin, UniformIcc, BetaIcc>;

struct AnalysisPrior {
    double lambda_mean = 0.0;
    double lambda_var = 1000.0;
    double delta_mean = 0.0;
    double delta_var = 1000.0;
    VarianceFamily variance_family = GammaPrecision{0.1, 0.1, 0.1, 0.1};

    void validate() const {
        if (!(lambda_var > 0.0) || !(delta_var > 0.0))
            throw InvalidPriorError("analysis prior: location variances must be > 0");
        std::visit(
            [](const auto& fam) {
                using T = std::decay_t<decltype(fam)>;
                if constexpr (std::is_same_v<T, GammaPrecision>) {
                    if (!(fam.r_b > 0 && fam.s_b > 0 && fam.r_w > 0 && fam.s_w > 0))
                        throw InvalidPriorError("gamma precision prior: parameters must be > 0");
                } else if constexpr (std::is_same_v<T, LogUniformBoth> ||
                                     std::is_same_v<T, UniformBetweenLogUniformWithin>) {
                    if (!(fam.l_b < fam.u_b) || !(fam.l_w < fam.u_w))
                        throw InvalidPriorError("interval prior: need lower < upper");
                } else if constexpr (std::is_same_v<T, UniformIcc>) {
                    if (!(fam.l_rho < fam.u_rho) || fam.l_rho < 0.0 || fam.u_rho > 1.0)
                        throw InvalidPriorError("icc bounds must satisfy 0 <= lower < upper <= 1");
                    if (!(fam.l_w < fam.u_w))
                        throw InvalidPriorError("interval prior: need lower < upper");
                } else if constexpr (std::is_same_v<T, BetaIcc>) {
                    if (!(fam.r_rho > 0 && fam.s_rho > 0))
                        throw InvalidPriorError("beta icc prior: shapes must be > 0");
                    if (!(fam.l_w < fam.u_w))
                        throw InvalidPriorError("interval prior: need lower < upper");
                }
            },
            variance_family);
    }
};

// The six standard variance-family presets, by 1-based index.
inline VarianceFamily variance_family_preset(int index) {
    switch (index) {
        case 1: return GammaPrecision{0.001, 0.001, 0.001, 0.001};
        case 2: return GammaPrecision{0.1, 0.1, 0.1, 0.1};
        case 3: return LogUniformBoth{-10.0, 10.0, -10.0, 10.0};
        case 4: return UniformBetweenLogUniformWithin{0.0, 100.0, -10.0, 10.0};
        case 5: return UniformIcc{0.0, 1.0, -10.0, 10.0};
        case 6: return BetaIcc{1.0, 1.0, -10.0, 10.0};
        default: throw InvalidPriorError("variance family index must be 1..6");
    }
}

/*
 * log prior density of (var_between, var_within), up to an additive constant,
 * in variance space. Families stated on transformed scales pick up the
 * change-of-variables terms: log-uniform on v gives 1/v; priors on the icc
 * rho = vb/(vb+vw) give |d rho/d vb| = vw/(vb+vw)^2.
 * Returns -inf outside the support.
 */
inline double log_density_variance_family(const VarianceFamily& family, double var_between,
                                          double var_within) {
    if (!(var_within > 0.0) || var_between < 0.0) return kNegInf;
    return std::visit(
        [&](const auto& fam) -> double {
            using T = std::decay_t<decltype(fam)>;
            const double vb = var_between, vw = var_within;
            if constexpr (std::is_same_v<T, GammaPrecision>) {
                if (!(vb > 0.0)) return kNegInf;
                // inverse-gamma densities for the variances
                return -(fam.r_b + 1.0) * std::log(vb) - fam.s_b / vb
                       - (fam.r_w + 1.0) * std::log(vw) - fam.s_w / vw;
            } else if constexpr (std::is_same_v<T, LogUniformBoth>) {
                if (!(vb > 0.0)) return kNegInf;
                const double lb = std::log(vb), lw = std::log(vw);
                if (lb < fam.l_b || lb > fam.u_b || lw < fam.l_w || lw > fam.u_w) return kNegInf;
                return -lb - lw;
            } else if constexpr (std::is_same_v<T, UniformBetweenLogUniformWithin>) {
                const double lw = std::log(vw);
                if (vb < fam.l_b || vb > fam.u_b || lw < fam.l_w || lw > fam.u_w) return kNegInf;
                return -lw;
            } else if constexpr (std::is_same_v<T, UniformIcc>) {
                const double lw = std::log(vw);
                if (lw < fam.l_w || lw > fam.u_w) return kNegInf;
                const double rho = vb / (vb + vw);
                if (rho < fam.l_rho || rho > fam.u_rho) return kNegInf;
                return std::log(vw) - 2.0 * std::log(vb + vw) - lw;
            } else {  // BetaIcc
                const double lw = std::log(vw);
                if (lw < fam.l_w || lw > fam.u_w) return kNegInf;
                const double rho = vb / (vb + vw);
                if (rho <= 0.0 || rho >= 1.0) return kNegInf;
                return (fam.r_rho - 1.0) * std::log(rho) + (fam.s_rho - 1.0) * std::log1p(-rho)
                       + std::log(vw) - 2.0 * std::log(vb + vw) - lw;
            }
        },
        family);
}

// ---------------------------------------------------------------------------
// Design priors
// ---------------------------------------------------------------------------

struct FixedValue {
    double value;
};
struct NormalSpec {
    double mean;
    double var;
};
struct TruncatedNormalSpec {
    double mean;
    double var;
    double low = kNegInf;
    double high = std::numeric_limits<double>::infinity();
};

// Independent truncated-positive Normal priors on the two variances.
struct VariancesTruncNormal {
    double vb_mean, vb_var, vw_mean, vw_var;
};
// Gamma prior on the overall sd sigma, moment-matched; needs an icc spec to
// split sigma^2 into the two variance components.
struct SigmaGamma {
    double mean, var;
};
// Point mass on the overall sd (degenerate prior); also needs an icc spec.
struct SigmaFixed {
    double value;
};
using SigmaSpec = std::variant<VariancesTruncNormal, SigmaGamma, SigmaFixed>;

struct BetaMoments {
    double mean, var;
};
struct EmpiricalMarginal {
    std::vector<double> samples;  // sorted ascending

    void validate() const {
        if (samples.size() < 2) throw MissingDataError("empirical marginal: too few samples");
        for (std::size_t i = 0; i + 1 < samples.size(); ++i)
            if (samples[i] > samples[i + 1])
                throw InvalidPriorError("empirical marginal: samples not sorted");
        for (double x : samples)
            if (!std::isfinite(x)) throw InvalidPriorError("empirical marginal: non-finite value");
    }
};
using IccSpec = std::variant<std::monostate, BetaMoments, EmpiricalMarginal, FixedValue>;

struct DirichletSizes {
    double a;
};
struct NuGamma {
    double mean, var;
};
struct NuFixed {
    double value;
};
using SizeSpec = std::variant<DirichletSizes, NuGamma, NuFixed>;

using LambdaSpec = std::variant<FixedValue, NormalSpec>;
using DeltaSpec = std::variant<FixedValue, NormalSpec, TruncatedNormalSpec>;

struct DesignPrior {
    LambdaSpec lambda_spec = FixedValue{0.0};
    DeltaSpec delta_spec = FixedValue{0.0};
    SigmaSpec sigma_spec = VariancesTruncNormal{1.0, 0.04, 1.0, 0.01};
    IccSpec icc_spec = std::monostate{};
    std::optional<double> copula_corr;  // between sigma and rho
    SizeSpec size_spec = DirichletSizes{100.0};

    bool has_icc() const { return !std::holds_alternative<std::monostate>(icc_spec); }

    void validate() const {
        const bool sigma_needs_icc = std::holds_alternative<SigmaGamma>(sigma_spec) ||
                                     std::holds_alternative<SigmaFixed>(sigma_spec);
        if (sigma_needs_icc && !has_icc())
            throw InvalidPriorError("design prior: a sigma prior needs an icc prior to split variances");
        if (copula_corr) {
            if (std::abs(*copula_corr) > 1.0)
                throw InvalidPriorError("copula correlation must lie in [-1, 1]");
            if (!has_icc() || !std::holds_alternative<SigmaGamma>(sigma_spec))
                throw InvalidPriorError("copula requires both a gamma sigma prior and an icc prior");
        }
        if (const auto* g = std::get_if<SigmaGamma>(&sigma_spec))
            if (!(g->mean > 0.0 && g->var > 0.0))
                throw InvalidPriorError("sigma prior moments must be > 0");
        if (const auto* f = std::get_if<SigmaFixed>(&sigma_spec))
            if (!(f->value > 0.0)) throw InvalidPriorError("sigma must be > 0");
        if (const auto* v = std::get_if<VariancesTruncNormal>(&sigma_spec))
            if (!(v->vb_var > 0.0 && v->vw_var > 0.0 && v->vw_mean > 0.0))
                throw InvalidPriorError("variance prior spread must be > 0");
        if (const auto* b = std::get_if<BetaMoments>(&icc_spec))
            if (!(b->mean > 0.0 && b->mean < 1.0 && b->var > 0.0 &&
                  b->var < b->mean * (1.0 - b->mean)))
                throw InvalidPriorError("icc beta moments invalid (need var < mean*(1-mean))");
        if (const auto* e = std::get_if<EmpiricalMarginal>(&icc_spec)) e->validate();
        if (const auto* f = std::get_if<FixedValue>(&icc_spec))
            if (f->value < 0.0 || f->value >= 1.0)
                throw InvalidPriorError("fixed icc must lie in [0, 1)");
        if (const auto* d = std::get_if<DirichletSizes>(&size_spec))
            if (!(d->a > 0.0)) throw InvalidPriorError("dirichlet concentration must be > 0");
        if (const auto* n = std::get_if<NuGamma>(&size_spec))
            if (!(n->mean > 0.0 && n->var > 0.0))
                throw InvalidPriorError("nu prior moments must be > 0");
        if (const auto* n = std::get_if<NuFixed>(&size_spec))
            if (n->value < 0.0) throw InvalidPriorError("fixed nu must be >= 0");
        if (const auto* n = std::get_if<NormalSpec>(&delta_spec))
            if (!(n->var > 0.0)) throw InvalidPriorError("delta prior variance must be > 0");
        if (const auto* n = std::get_if<NormalSpec>(&lambda_spec))
            if (!(n->var > 0.0)) throw InvalidPriorError("lambda prior variance must be > 0");
    }
};

struct GammaShapeRate {
    double shape;
    double rate;
};

// Moment matching: shape = m^2/v, rate = m/v.
inline GammaShapeRate gamma_from_moments(double mean, double variance) {
    if (!(mean > 0.0) || !(variance > 0.0))
        throw InvalidPriorError("gamma moments must be > 0");
    return {mean * mean / variance, mean / variance};
}

inline std::pair<double, double> beta_from_moments(double mean, double variance) {
    if (!(mean > 0.0 && mean < 1.0 && variance > 0.0 && variance < mean * (1.0 - mean)))
        throw InvalidPriorError("beta moments invalid");
    const double t = mean * (1.0 - mean) / variance - 1.0;
    return {mean * t, (1.0 - mean) * t};
}

// Inverse empirical CDF: linear interpolation between order statistics.
inline double empirical_quantile(const EmpiricalMarginal& marginal, double u) {
    if (marginal.samples.empty()) throw MissingDataError("empirical marginal has no samples");
    return stats::interp_quantile(marginal.samples, std::clamp(u, 0.0, 1.0));
}

// One-column text file, one value per line; a non-numeric first line is
// treated as a header.
inline EmpiricalMarginal load_empirical_samples(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw MissingDataError("cannot open sample file: " + path);
    EmpiricalMarginal m;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ss(line);
        double x;
        if (ss >> x) {
            m.samples.push_back(x);
        } else if (!first) {
            throw InvalidPriorError("sample file: unparseable line in " + path);
        }
        first = false;
    }
    if (m.samples.size() < 2) throw MissingDataError("sample file has too few values: " + path);
    std::sort(m.samples.begin(), m.samples.end());
    return m;
}

// One draw of (sigma, rho) through a Gaussian copula: correlated standard
// normals -> uniforms -> marginal inverse CDFs.
inline std::pair<double, double> copula_sample(const GammaShapeRate& sigma_marginal,
                                               const IccSpec& icc_marginal, double corr,
                                               RngStream& rng) {
    if (std::abs(corr) > 1.0) throw InvalidPriorError("copula correlation must lie in [-1, 1]");
    const double z1 = draw_std_normal(rng);
    const double z2 = corr * z1 + std::sqrt(std::max(0.0, 1.0 - corr * corr)) * draw_std_normal(rng);
    const double u1 = stats::norm_cdf(z1);
    const double u2 = stats::norm_cdf(z2);
    const double sigma = stats::gamma_quantile(u1, sigma_marginal.shape, sigma_marginal.rate);
    double rho;
    if (const auto* b = std::get_if<BetaMoments>(&icc_marginal)) {
        const auto [a, bb] = beta_from_moments(b->mean, b->var);
        rho = stats::beta_quantile(u2, a, bb);
    } else if (const auto* e = std::get_if<EmpiricalMarginal>(&icc_marginal)) {
        rho = empirical_quantile(*e, u2);
    } else {
        throw MissingDataError("copula requested without an icc marginal");
    }
    return {sigma, rho};
}

inline double draw_icc_marginal(const IccSpec& icc_marginal, RngStream& rng) {
    if (const auto* b = std::get_if<BetaMoments>(&icc_marginal)) {
        const auto [a, bb] = beta_from_moments(b->mean, b->var);
        return stats::beta_quantile(rng.uniform01(), a, bb);
    }
    if (const auto* e = std::get_if<EmpiricalMarginal>(&icc_marginal))
        return empirical_quantile(*e, rng.uniform01());
    if (const auto* f = std::get_if<FixedValue>(&icc_marginal)) return f->value;
    throw MissingDataError("icc draw requested without an icc prior");
}

/*
 * One joint draw from the design prior. Draw order is fixed (lambda, delta,
 * variance block, size block) so a given stream always yields the same psi.
 */
struct DesignDraw {
    ModelParams params;
    double sigma = 0.0;  // overall sd, sqrt(vb + vw)
    double rho = 0.0;    // icc implied by the draw
    std::optional<double> nu;
    std::optional<std::vector<double>> cluster_probs;
};

inline DesignDraw sample_design(const DesignPrior& prior, int j_clusters, RngStream& rng) {
    prior.validate();
    DesignDraw d;

    d.params.lambda = std::visit(
        [&](const auto& s) -> double {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, FixedValue>) return s.value;
            else return draw_normal(rng, s.mean, std::sqrt(s.var));
        },
        prior.lambda_spec);

    d.params.delta = std::visit(
        [&](const auto& s) -> double {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, FixedValue>) {
                return s.value;
            } else if constexpr (std::is_same_v<T, NormalSpec>) {
                return draw_normal(rng, s.mean, std::sqrt(s.var));
            } else {
                for (;;) {
                    const double x = draw_normal(rng, s.mean, std::sqrt(s.var));
                    if (x >= s.low && x <= s.high) return x;
                }
            }
        },
        prior.delta_spec);

    if (const auto* v = std::get_if<VariancesTruncNormal>(&prior.sigma_spec)) {
        d.params.var_between = draw_normal_positive(rng, v->vb_mean, std::sqrt(v->vb_var));
        d.params.var_within = draw_normal_positive(rng, v->vw_mean, std::sqrt(v->vw_var));
        d.sigma = std::sqrt(d.params.var_between + d.params.var_within);
        d.rho = icc(d.params.var_between, d.params.var_within);
    } else {
        if (const auto* g = std::get_if<SigmaGamma>(&prior.sigma_spec)) {
            const auto marg = gamma_from_moments(g->mean, g->var);
            if (prior.copula_corr) {
                auto [sigma, rho] = copula_sample(marg, prior.icc_spec, *prior.copula_corr, rng);
                d.sigma = sigma;
                d.rho = rho;
            } else {
                d.sigma = stats::gamma_quantile(rng.uniform01(), marg.shape, marg.rate);
                d.rho = draw_icc_marginal(prior.icc_spec, rng);
            }
        } else {
            d.sigma = std::get<SigmaFixed>(prior.sigma_spec).value;
            d.rho = draw_icc_marginal(prior.icc_spec, rng);
        }
        const auto split = variances_from_icc(d.rho, d.sigma * d.sigma);
        d.params.var_between = split.var_between;
        d.params.var_within = split.var_within;
    }

    if (const auto* dir = std::get_if<DirichletSizes>(&prior.size_spec)) {
        d.cluster_probs =
            draw_symmetric_dirichlet(rng, static_cast<std::size_t>(j_clusters), dir->a);
    } else if (const auto* n = std::get_if<NuGamma>(&prior.size_spec)) {
        const auto marg = gamma_from_moments(n->mean, n->var);
        d.nu = stats::gamma_quantile(rng.uniform01(), marg.shape, marg.rate);
    } else {
        d.nu = std::get<NuFixed>(prior.size_spec).value;
    }
    return d;
}

}  // namespace assure
