#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "assure/assurance.hpp"
#include "assure/closed_form.hpp"
#include "assure/config.hpp"
#include "assure/csv.hpp"
#include "assure/errors.hpp"
#include "assure/mcmc.hpp"
#include "assure/priors.hpp"
#include "assure/trial_model.hpp"
#include "assure/version.hpp"

namespace assure::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitNotAchievable = 3;
inline constexpr int kExitNumerical = 4;

struct CliOverrides {
    std::optional<std::uint64_t> seed;
    std::optional<unsigned> workers;
    std::optional<std::string> out;
};

struct RunContext {
    std::uint64_t seed = 1;
    unsigned workers = 0;
    std::string out_path;  // empty means stdout
    std::string config_dir;
};

inline std::string dir_of(const std::string& path) {
    const auto slash = path.find_last_of('/');
    return slash == std::string::npos ? std::string(".") : path.substr(0, slash);
}

inline RunContext make_context(const IniConfig& cfg, const CliOverrides& over,
                               const std::string& config_path) {
    RunContext ctx;
    // read the file values unconditionally so overridden keys still count as
    // consumed, then let the command line win
    const auto file_seed = static_cast<std::uint64_t>(cfg.get_int("run", "seed", 1));
    const auto file_workers = static_cast<unsigned>(cfg.get_int("run", "workers", 0));
    const auto file_out = cfg.get_string("run", "out", "");
    ctx.seed = over.seed ? *over.seed : file_seed;
    ctx.workers = over.workers ? *over.workers : file_workers;
    ctx.out_path = over.out ? *over.out : file_out;
    ctx.config_dir = dir_of(config_path);
    return ctx;
}

// ---------------------------------------------------------------------------
// config -> module structs
// ---------------------------------------------------------------------------

inline VarianceFamily read_variance_family(const IniConfig& cfg, int index) {
    VarianceFamily fam = variance_family_preset(index);
    const char* s = "analysis_prior";
    switch (index) {
        case 1:
        case 2: {
            auto& g = std::get<GammaPrecision>(fam);
            g.r_b = cfg.get_real(s, "r_b", g.r_b);
            g.s_b = cfg.get_real(s, "s_b", g.s_b);
            g.r_w = cfg.get_real(s, "r_w", g.r_w);
            g.s_w = cfg.get_real(s, "s_w", g.s_w);
            break;
        }
        case 3: {
            auto& u = std::get<LogUniformBoth>(fam);
            u.l_b = cfg.get_real(s, "l_b", u.l_b);
            u.u_b = cfg.get_real(s, "u_b", u.u_b);
            u.l_w = cfg.get_real(s, "l_w", u.l_w);
            u.u_w = cfg.get_real(s, "u_w", u.u_w);
            break;
        }
        case 4: {
            auto& u = std::get<UniformBetweenLogUniformWithin>(fam);
            u.l_b = cfg.get_real(s, "l_b", u.l_b);
            u.u_b = cfg.get_real(s, "u_b", u.u_b);
            u.l_w = cfg.get_real(s, "l_w", u.l_w);
            u.u_w = cfg.get_real(s, "u_w", u.u_w);
            break;
        }
        case 5: {
            auto& u = std::get<UniformIcc>(fam);
            u.l_rho = cfg.get_real(s, "l_rho", u.l_rho);
            u.u_rho = cfg.get_real(s, "u_rho", u.u_rho);
            u.l_w = cfg.get_real(s, "l_w", u.l_w);
            u.u_w = cfg.get_real(s, "u_w", u.u_w);
            break;
        }
        case 6: {
            auto& u = std::get<BetaIcc>(fam);
            u.r_rho = cfg.get_real(s, "r_rho", u.r_rho);
            u.s_rho = cfg.get_real(s, "s_rho", u.s_rho);
            u.l_w = cfg.get_real(s, "l_w", u.l_w);
            u.u_w = cfg.get_real(s, "u_w", u.u_w);
            break;
        }
        default:
            throw ConfigError("analysis_prior.family must be 1..6");
    }
    return fam;
}

inline AnalysisPrior read_analysis_prior(const IniConfig& cfg, bool with_family = true) {
    AnalysisPrior p;
    p.lambda_mean = cfg.get_real("analysis_prior", "m_lambda", 0.0);
    p.lambda_var = cfg.get_real("analysis_prior", "v_lambda", 1000.0);
    p.delta_mean = cfg.get_real("analysis_prior", "m_delta", 0.0);
    p.delta_var = cfg.get_real("analysis_prior", "v_delta", 1000.0);
    if (with_family) {
        const int family = static_cast<int>(cfg.get_int("analysis_prior", "family", 2));
        p.variance_family = read_variance_family(cfg, family);
    }
    p.validate();
    return p;
}

inline McmcSettings read_mcmc(const IniConfig& cfg) {
    McmcSettings m;
    m.burn_in = static_cast<int>(cfg.get_int("mcmc", "burn_in", 1000));
    m.kept_samples = static_cast<int>(cfg.get_int("mcmc", "samples", 1000));
    m.thin = static_cast<int>(cfg.get_int("mcmc", "thin", 1));
    m.mh_target_acceptance = cfg.get_real("mcmc", "target_acceptance", 0.44);
    m.adapt_during_burn_in = cfg.get_bool("mcmc", "adapt", true);
    m.validate();
    return m;
}

inline SuccessRule read_rule(const IniConfig& cfg) {
    SuccessRule r;
    r.confidence = cfg.get_real("success", "gamma", 0.95);
    r.threshold = cfg.get_real("success", "threshold", 0.0);
    r.validate();
    return r;
}

inline DesignPrior read_design_prior(const IniConfig& cfg, const std::string& config_dir) {
    const char* s = "design_prior";
    DesignPrior d;

    const std::string lam = cfg.get_string(s, "lambda_kind", "fixed");
    if (lam == "fixed") {
        d.lambda_spec = FixedValue{cfg.get_real(s, "lambda_value", 0.0)};
    } else if (lam == "normal") {
        d.lambda_spec = NormalSpec{cfg.get_real(s, "lambda_mean"), cfg.get_real(s, "lambda_var")};
    } else {
        throw ConfigError("design_prior.lambda_kind must be fixed|normal",
                          cfg.line_of(s, "lambda_kind"));
    }

    const std::string del = cfg.get_string(s, "delta_kind", "fixed");
    if (del == "fixed") {
        d.delta_spec = FixedValue{cfg.get_real(s, "delta_value", 0.0)};
    } else if (del == "normal") {
        d.delta_spec = NormalSpec{cfg.get_real(s, "delta_mean"), cfg.get_real(s, "delta_var")};
    } else if (del == "truncated_normal") {
        TruncatedNormalSpec t;
        t.mean = cfg.get_real(s, "delta_mean");
        t.var = cfg.get_real(s, "delta_var");
        t.low = cfg.get_real(s, "delta_low", kNegInf);
        t.high = cfg.get_real(s, "delta_high", std::numeric_limits<double>::infinity());
        d.delta_spec = t;
    } else {
        throw ConfigError("design_prior.delta_kind must be fixed|normal|truncated_normal",
                          cfg.line_of(s, "delta_kind"));
    }

    const std::string sig = cfg.get_string(s, "sigma_kind", "variances_normal");
    if (sig == "variances_normal") {
        d.sigma_spec = VariancesTruncNormal{
            cfg.get_real(s, "var_between_mean"), cfg.get_real(s, "var_between_var"),
            cfg.get_real(s, "var_within_mean"), cfg.get_real(s, "var_within_var")};
    } else if (sig == "sigma_gamma") {
        d.sigma_spec = SigmaGamma{cfg.get_real(s, "sigma_mean"), cfg.get_real(s, "sigma_var")};
    } else if (sig == "fixed") {
        d.sigma_spec = SigmaFixed{cfg.get_real(s, "sigma_value")};
    } else {
        throw ConfigError("design_prior.sigma_kind must be variances_normal|sigma_gamma|fixed",
                          cfg.line_of(s, "sigma_kind"));
    }

    const std::string icc_kind = cfg.get_string(s, "icc_kind", "none");
    if (icc_kind == "none") {
        d.icc_spec = std::monostate{};
    } else if (icc_kind == "beta") {
        d.icc_spec = BetaMoments{cfg.get_real(s, "icc_mean"), cfg.get_real(s, "icc_var")};
    } else if (icc_kind == "empirical") {
        std::string path = cfg.get_string(s, "icc_file");
        if (!path.empty() && path.front() != '/') path = config_dir + "/" + path;
        d.icc_spec = load_empirical_samples(path);
    } else if (icc_kind == "fixed") {
        d.icc_spec = FixedValue{cfg.get_real(s, "icc_value")};
    } else {
        throw ConfigError("design_prior.icc_kind must be none|beta|empirical|fixed",
                          cfg.line_of(s, "icc_kind"));
    }

    if (cfg.has(s, "copula_corr")) d.copula_corr = cfg.get_real(s, "copula_corr");

    const std::string size_kind = cfg.get_string(s, "size_kind", "dirichlet");
    if (size_kind == "dirichlet") {
        d.size_spec = DirichletSizes{cfg.get_real(s, "dirichlet_a", 100.0)};
    } else if (size_kind == "nu_gamma") {
        d.size_spec = NuGamma{cfg.get_real(s, "nu_mean"), cfg.get_real(s, "nu_var")};
    } else if (size_kind == "nu_fixed") {
        d.size_spec = NuFixed{cfg.get_real(s, "nu_value")};
    } else {
        throw ConfigError("design_prior.size_kind must be dirichlet|nu_gamma|nu_fixed",
                          cfg.line_of(s, "size_kind"));
    }

    try {
        d.validate();
    } catch (const InvalidPriorError& e) {
        throw ConfigError(std::string("design prior: ") + e.what());
    }
    return d;
}

inline ModelParams read_truth(const IniConfig& cfg) {
    ModelParams m;
    m.lambda = cfg.get_real("model", "lambda", 0.0);
    m.delta = cfg.get_real("model", "delta", 0.0);
    m.var_between = cfg.get_real("model", "var_between", 0.0);
    m.var_within = cfg.get_real("model", "var_within", 1.0);
    m.validate();
    return m;
}

// ---------------------------------------------------------------------------
// output plumbing
// ---------------------------------------------------------------------------

class CommandOutput {
  public:
    explicit CommandOutput(std::ostream& final_out) : final_out_(final_out) {}

    CsvWriter& csv() { return writer_; }
    std::ostringstream& buffer() { return body_; }

    // Provenance comment goes first; body was buffered so the wall time can
    // land in the comment without touching the (byte-stable) body.
    void flush(const std::string& cmd, std::uint64_t seed, long big_l, long big_k,
               unsigned workers, double wall_s) {
        char head[256];
        std::snprintf(head, sizeof head,
                      "# assure-crt v%s cmd=%s seed=%llu L=%ld K=%ld workers=%u wall_time_s=%.3f",
                      kVersion, cmd.c_str(), static_cast<unsigned long long>(seed), big_l, big_k,
                      workers, wall_s);
        final_out_ << head << "\n" << body_.str();
        final_out_.flush();
    }

  private:
    std::ostringstream body_;
    CsvWriter writer_{body_};
    std::ostream& final_out_;
};

using F = CsvWriter;

// ---------------------------------------------------------------------------
// subcommands
// ---------------------------------------------------------------------------

inline int cmd_power(const IniConfig& cfg, const CliOverrides& over,
                     const std::string& config_path, std::ostream& out) {
    const auto t0 = std::chrono::steady_clock::now();
    const RunContext ctx = make_context(cfg, over, config_path);
    PowerInputs base;
    base.alpha = cfg.get_real("power", "alpha", 0.05);
    base.delta_m = cfg.get_real("power", "delta_m");
    base.sigma = cfg.get_real("power", "sigma");
    base.rho = cfg.get_real("power", "rho");
    base.nu = cfg.get_real("power", "nu", 0.0);
    base.n_bar = 1.0;
    const double target = cfg.get_real("power", "target", 0.8);
    const int j_min = static_cast<int>(cfg.get_int("power", "clusters_min"));
    const int j_max = static_cast<int>(cfg.get_int("power", "clusters_max", j_min));
    if (j_max < j_min) throw ConfigError("power.clusters_max < power.clusters_min");
    cfg.finalize();

    CommandOutput co(out);
    co.csv().header({"method", "J", "n_T"});
    for (int j = j_min; j <= j_max; ++j) {
        const int n = power_sample_size(j, target, base);
        co.csv().row({"power", F::field(j), F::field(n)});
    }
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    co.flush("power", ctx.seed, 0, 0, 0, wall);
    return kExitOk;
}

inline int cmd_assurance(const IniConfig& cfg, const CliOverrides& over,
                         const std::string& config_path, std::ostream& out) {
    const auto t0 = std::chrono::steady_clock::now();
    const RunContext ctx = make_context(cfg, over, config_path);
    AssuranceSpec spec;
    spec.j_clusters = static_cast<int>(cfg.get_int("design", "clusters"));
    spec.design_prior = read_design_prior(cfg, ctx.config_dir);
    spec.analysis_prior = read_analysis_prior(cfg);
    spec.rule = read_rule(cfg);
    spec.mcmc = read_mcmc(cfg);
    spec.outer_samples = static_cast<int>(cfg.get_int("assurance", "L", 1000));
    spec.base_seed = ctx.seed;
    spec.workers = ctx.workers;

    std::vector<long> nbars;
    if (cfg.has("assurance", "nbar_list")) {
        nbars = cfg.get_int_list("assurance", "nbar_list");
    } else {
        const long lo = cfg.get_int("assurance", "nbar_min", 1);
        const long hi = cfg.get_int("assurance", "nbar_max", lo);
        for (long v = lo; v <= hi; ++v) nbars.push_back(v);
    }
    cfg.finalize();

    CommandOutput co(out);
    co.csv().header({"n_T", "estimate", "mc_se", "successes", "failures", "L", "K", "seed"});
    for (long nbar : nbars) {
        const AssuranceResult r = estimate_assurance(spec, spec.j_clusters * static_cast<int>(nbar));
        co.csv().row({F::field(r.n_total), F::field(r.estimate), F::field(r.mc_standard_error),
                      F::field(r.successes), F::field(r.failures), F::field(r.outer_samples),
                      F::field(long(spec.mcmc.kept_samples)), F::field(static_cast<unsigned long long>(ctx.seed))});
    }
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    co.flush("assurance", ctx.seed, spec.outer_samples, spec.mcmc.kept_samples, ctx.workers, wall);
    return kExitOk;
}

inline int cmd_samplesize(const IniConfig& cfg, const CliOverrides& over,
                          const std::string& config_path, std::ostream& out) {
    const auto t0 = std::chrono::steady_clock::now();
    const RunContext ctx = make_context(cfg, over, config_path);
    AssuranceSpec spec;
    spec.j_clusters = static_cast<int>(cfg.get_int("design", "clusters"));
    spec.design_prior = read_design_prior(cfg, ctx.config_dir);
    spec.analysis_prior = read_analysis_prior(cfg);
    spec.rule = read_rule(cfg);
    spec.mcmc = read_mcmc(cfg);
    spec.outer_samples = static_cast<int>(cfg.get_int("assurance", "L", 1000));
    spec.base_seed = ctx.seed;
    spec.workers = ctx.workers;
    const double target = cfg.get_real("assurance", "target", 0.8);
    const int nbar_min = static_cast<int>(cfg.get_int("assurance", "nbar_min", 1));
    const int nbar_max = static_cast<int>(cfg.get_int("assurance", "nbar_max", 20));
    const int reps = static_cast<int>(cfg.get_int("assurance", "repetitions", 1));
    cfg.finalize();

    const SampleSizeResult res = modal_sample_size(spec, target, nbar_min, nbar_max, reps);

    CommandOutput co(out);
    co.csv().header({"rep", "n_T", "assurance", "modal_proportion", "repetitions_needed"});
    for (std::size_t i = 0; i < res.per_run_sizes.size(); ++i)
        co.csv().row({F::field(long(i + 1)), F::field(res.per_run_sizes[i]),
                      F::field(res.per_run_estimates[i]), "", ""});
    std::string reps_needed;
    try {
        reps_needed = F::field(long(repetitions_needed(res.modal_proportion, 0.9)));
    } catch (const NotAchievableError&) {
        reps_needed = "";
    }
    co.csv().row({"mode", F::field(res.modal_size), F::field(res.assurance_at_mode),
                  F::field(res.modal_proportion), reps_needed});
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    co.flush("samplesize", ctx.seed, spec.outer_samples, spec.mcmc.kept_samples, ctx.workers, wall);
    return kExitOk;
}

inline int cmd_hybrid(const IniConfig& cfg, const CliOverrides& over,
                      const std::string& config_path, std::ostream& out) {
    const auto t0 = std::chrono::steady_clock::now();
    const RunContext ctx = make_context(cfg, over, config_path);
    const DesignPrior design = read_design_prior(cfg, ctx.config_dir);
    const std::string mode_s = cfg.get_string("hybrid", "mode", "mcid");
    HybridMode mode;
    if (mode_s == "mcid")
        mode = HybridMode::mcid;
    else if (mode_s == "full")
        mode = HybridMode::full;
    else
        throw ConfigError("hybrid.mode must be mcid|full", cfg.line_of("hybrid", "mode"));
    const double alpha = cfg.get_real("hybrid", "alpha", 0.05);
    const double delta_m = cfg.get_real("hybrid", "delta_m", 0.0);
    const double target = cfg.get_real("hybrid", "target", 0.8);
    const int draws = static_cast<int>(cfg.get_int("hybrid", "draws", 100000));
    const int j_min = static_cast<int>(cfg.get_int("hybrid", "clusters_min"));
    const int j_max = static_cast<int>(cfg.get_int("hybrid", "clusters_max", j_min));
    const int nbar_max = static_cast<int>(cfg.get_int("hybrid", "nbar_max", 10000));
    cfg.finalize();

    CommandOutput co(out);
    co.csv().header({"method", "J", "n_T"});
    const std::string method = mode == HybridMode::mcid ? "hybrid_mcid" : "hybrid_full";
    for (int j = j_min; j <= j_max; ++j) {
        const int n = hybrid_sample_size(design, j, target, alpha, mode, delta_m, draws, ctx.seed,
                                         nbar_max, ctx.workers);
        co.csv().row({method, F::field(j), F::field(n)});
    }
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    co.flush("hybrid", ctx.seed, draws, 0, ctx.workers, wall);
    return kExitOk;
}

inline int cmd_posterior(const IniConfig& cfg, const CliOverrides& over,
                         const std::string& config_path, std::ostream& out) {
    const auto t0 = std::chrono::steady_clock::now();
    const RunContext ctx = make_context(cfg, over, config_path);
    const ModelParams truth = read_truth(cfg);
    const AnalysisPrior base_prior = read_analysis_prior(cfg, false);
    const McmcSettings mcmc = read_mcmc(cfg);
    const SuccessRule rule = read_rule(cfg);
    const auto j_list = cfg.get_int_list("posterior", "clusters_list");
    const int nbar = static_cast<int>(cfg.get_int("posterior", "nbar", 10));
    const std::string trace_path = cfg.get_string("posterior", "trace_file", "");
    cfg.finalize();

    std::ofstream trace_out;
    std::optional<CsvWriter> trace_csv;
    if (!trace_path.empty()) {
        trace_out.open(trace_path);
        if (!trace_out) throw ConfigError("cannot open trace file " + trace_path);
        trace_csv.emplace(trace_out);
        trace_csv->header({"J", "family", "iteration", "lambda", "delta", "var_between",
                           "var_within"});
    }

    CommandOutput co(out);
    co.csv().header({"J", "n_T", "family", "pr_exceeds", "mean", "sd", "q025", "q500", "q975"});
    for (long j : j_list) {
        const int n_total = static_cast<int>(j) * nbar;
        // one dataset per sample size, shared by all six families
        RngStream data_rng = substream(ctx.seed, salts::kPosteriorData, static_cast<std::uint64_t>(j));
        ClusterLayout layout;
        layout.arms = assign_arms(static_cast<int>(j));
        layout.total = n_total;
        ClusterProbabilities probs;
        probs.p.assign(static_cast<std::size_t>(j), 1.0 / static_cast<double>(j));
        layout.sizes = allocate_clusters(n_total, probs, data_rng);
        const TrialData data = simulate_trial(truth, layout, data_rng);

        for (int family = 1; family <= 6; ++family) {
            AnalysisPrior prior = base_prior;
            prior.variance_family = variance_family_preset(family);
            RngStream chain_rng = substream(ctx.seed, salts::kPosteriorChain,
                                            static_cast<std::uint64_t>(j),
                                            static_cast<std::uint64_t>(family));
            TraceSink sink;
            if (trace_csv) {
                sink = [&](int it, double l, double d, double vb, double vw) {
                    trace_csv->row({F::field(long(j)), F::field(family), F::field(it), F::field(l),
                                    F::field(d), F::field(vb), F::field(vw)});
                };
            }
            const PosteriorSamples post = run_chain(data, prior, mcmc, chain_rng, sink);
            std::vector<double> sorted = post.delta;
            std::sort(sorted.begin(), sorted.end());
            co.csv().row({F::field(long(j)), F::field(n_total), F::field(family),
                          F::field(posterior_prob_exceeds(post, rule.threshold)),
                          F::field(stats::sample_mean(post.delta)),
                          F::field(stats::sample_sd(post.delta)),
                          F::field(stats::interp_quantile(sorted, 0.025)),
                          F::field(stats::interp_quantile(sorted, 0.5)),
                          F::field(stats::interp_quantile(sorted, 0.975))});
        }
    }
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    co.flush("posterior", ctx.seed, 0, mcmc.kept_samples, ctx.workers, wall);
    return kExitOk;
}

inline int cmd_mc_study(const IniConfig& cfg, const CliOverrides& over,
                        const std::string& config_path, std::ostream& out) {
    const auto t0 = std::chrono::steady_clock::now();
    const RunContext ctx = make_context(cfg, over, config_path);
    AssuranceSpec spec;
    spec.j_clusters = static_cast<int>(cfg.get_int("design", "clusters"));
    spec.design_prior = read_design_prior(cfg, ctx.config_dir);
    spec.analysis_prior = read_analysis_prior(cfg);
    spec.rule = read_rule(cfg);
    spec.mcmc = read_mcmc(cfg);
    spec.workers = ctx.workers;
    const auto l_grid = cfg.get_int_list("mc_study", "L_grid");
    const auto k_grid = cfg.get_int_list("mc_study", "K_grid");
    const int reps = static_cast<int>(cfg.get_int("mc_study", "repetitions", 100));
    const int nbar = static_cast<int>(cfg.get_int("mc_study", "nbar", 5));
    cfg.finalize();

    const int n_total = spec.j_clusters * nbar;
    CommandOutput co(out);
    co.csv().header({"L", "K", "rep", "n_T", "estimate", "mc_se", "successes"});
    std::vector<std::string> timing;
    for (long big_l : l_grid) {
        for (long big_k : k_grid) {
            for (int rep = 0; rep < reps; ++rep) {
                AssuranceSpec cell = spec;
                cell.outer_samples = static_cast<int>(big_l);
                cell.mcmc.kept_samples = static_cast<int>(big_k);
                cell.base_seed = derive_key(ctx.seed, salts::kMcStudy,
                                            static_cast<std::uint64_t>(big_l * 1000003 + big_k),
                                            static_cast<std::uint64_t>(rep));
                const AssuranceResult r = estimate_assurance(cell, n_total);
                co.csv().row({F::field(big_l), F::field(big_k), F::field(long(rep)),
                              F::field(r.n_total), F::field(r.estimate),
                              F::field(r.mc_standard_error), F::field(r.successes)});
                char t[128];
                std::snprintf(t, sizeof t, "timing L=%ld K=%ld rep=%d wall_time_s=%.4f", big_l,
                              big_k, rep, r.wall_time_s);
                timing.emplace_back(t);
            }
        }
    }
    // per-cell timings ride along as comments so the body stays byte-stable
    for (const auto& t : timing) co.csv().comment(t);
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    co.flush("mc-study", ctx.seed, l_grid.front(), k_grid.front(), ctx.workers, wall);
    return kExitOk;
}

inline int cmd_sweep(const IniConfig& cfg, const CliOverrides& over,
                     const std::string& config_path, std::ostream& out) {
    const auto t0 = std::chrono::steady_clock::now();
    const RunContext ctx = make_context(cfg, over, config_path);
    DesignPrior design = read_design_prior(cfg, ctx.config_dir);
    if (!std::holds_alternative<NormalSpec>(design.delta_spec))
        throw ConfigError("sweep needs design_prior.delta_kind = normal");

    const std::string param = cfg.get_string("sweep", "param");
    if (param != "mean" && param != "sd")
        throw ConfigError("sweep.param must be mean|sd", cfg.line_of("sweep", "param"));
    std::vector<double> grid;
    if (cfg.has("sweep", "grid")) {
        grid = cfg.get_real_list("sweep", "grid");
    } else {
        const double lo = cfg.get_real("sweep", "grid_min");
        const double hi = cfg.get_real("sweep", "grid_max");
        const double step = cfg.get_real("sweep", "grid_step");
        if (!(step > 0.0)) throw ConfigError("sweep.grid_step must be > 0");
        for (double v = lo; v <= hi + 1e-12; v += step) grid.push_back(v);
    }
    const double mcid = cfg.get_real("sweep", "mcid");
    std::vector<std::string> methods;
    {
        std::istringstream ss(cfg.get_string("sweep", "methods", "bayes"));
        std::string m;
        while (std::getline(ss, m, ',')) {
            if (!m.empty()) methods.push_back(m);
        }
    }
    const double alpha = cfg.get_real("sweep", "alpha", 0.05);
    const int draws = static_cast<int>(cfg.get_int("sweep", "draws", 100000));

    AssuranceSpec spec;
    spec.j_clusters = static_cast<int>(cfg.get_int("design", "clusters"));
    spec.analysis_prior = read_analysis_prior(cfg);
    spec.rule = read_rule(cfg);
    spec.mcmc = read_mcmc(cfg);
    spec.outer_samples = static_cast<int>(cfg.get_int("assurance", "L", 1000));
    spec.workers = ctx.workers;
    const double target = cfg.get_real("assurance", "target", 0.8);
    const int nbar_min = static_cast<int>(cfg.get_int("assurance", "nbar_min", 1));
    const int nbar_max = static_cast<int>(cfg.get_int("assurance", "nbar_max", 20));
    const int reps = static_cast<int>(cfg.get_int("assurance", "repetitions", 1));
    cfg.finalize();

    const NormalSpec base_delta = std::get<NormalSpec>(design.delta_spec);

    CommandOutput co(out);
    co.csv().header({"param", "value", "method", "n_T", "pr_exceeds_mcid"});
    for (double value : grid) {
        NormalSpec delta = base_delta;
        if (param == "mean")
            delta.mean = value;
        else
            delta.var = value * value;
        design.delta_spec = delta;
        const double exceed = 1.0 - stats::norm_cdf((mcid - delta.mean) / std::sqrt(delta.var));

        for (const auto& method : methods) {
            std::string n_str;
            if (method == "bayes") {
                AssuranceSpec pt = spec;
                pt.design_prior = design;
                pt.base_seed = derive_key(
                    ctx.seed, salts::kSweep,
                    static_cast<std::uint64_t>(static_cast<std::int64_t>(std::llround(value * 1e6))));
                try {
                    if (reps > 1) {
                        const auto res = modal_sample_size(pt, target, nbar_min, nbar_max, reps);
                        n_str = F::field(res.modal_size);
                    } else {
                        const auto res = find_sample_size(pt, target, nbar_min, nbar_max);
                        n_str = F::field(res.n_total);
                    }
                } catch (const NotAchievableError&) {
                    n_str = "";
                }
            } else if (method == "hybrid_full" || method == "hybrid_mcid") {
                const HybridMode mode =
                    method == "hybrid_full" ? HybridMode::full : HybridMode::mcid;
                try {
                    n_str = F::field(hybrid_sample_size(design, spec.j_clusters, target, alpha,
                                                        mode, mcid, draws, ctx.seed, 10000,
                                                        ctx.workers));
                } catch (const NotAchievableError&) {
                    n_str = "";
                }
            } else {
                throw ConfigError("sweep method must be bayes|hybrid_full|hybrid_mcid");
            }
            co.csv().row({param, F::field(value), method, n_str, F::field(exceed)});
        }
    }
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    co.flush("sweep", ctx.seed, spec.outer_samples, spec.mcmc.kept_samples, ctx.workers, wall);
    return kExitOk;
}

// ---------------------------------------------------------------------------

inline int dispatch(const std::string& command, const std::string& config_path,
                    const CliOverrides& over, std::ostream& out) {
    const IniConfig cfg = IniConfig::parse_file(config_path);
    if (command == "power") return cmd_power(cfg, over, config_path, out);
    if (command == "assurance") return cmd_assurance(cfg, over, config_path, out);
    if (command == "samplesize") return cmd_samplesize(cfg, over, config_path, out);
    if (command == "hybrid") return cmd_hybrid(cfg, over, config_path, out);
    if (command == "posterior") return cmd_posterior(cfg, over, config_path, out);
    if (command == "mc-study") return cmd_mc_study(cfg, over, config_path, out);
    if (command == "sweep") return cmd_sweep(cfg, over, config_path, out);
    throw ConfigError("unknown command " + command);
}

}  // namespace assure::cli
