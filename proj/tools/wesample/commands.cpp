#include "commands.hpp"

#include "we/coarse.hpp"
#include "we/csv.hpp"
#include "we/diagnostics.hpp"
#include "we/engine.hpp"
#include "we/hill.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <ostream>
#include <sstream>
#include <thread>

namespace wesample {

namespace {

using we::csv::format_double;

unsigned worker_count(const ExperimentConfig& config) {
    if (config.threads != 0) return config.threads;
    return std::max(1u, std::thread::hardware_concurrency());
}

std::string output_path(const ExperimentConfig& config, const std::string& name) {
    return (std::filesystem::path(config.out) / name).string();
}

void prepare_output(const ExperimentConfig& config) {
    std::filesystem::create_directories(config.out);
}

we::CoarseChain coarse_chain(const ExperimentConfig& config, const Problem& problem,
                             const we::Distribution& zeta) {
    if (config.coarse_builder == "mc") {
        return we::build_coarse_mc(we::KernelSampler(problem.K), problem.bins, zeta, problem.f,
                                   config.coarse_samples, config.seed);
    }
    return we::build_coarse_exact(problem.K, problem.bins, zeta, problem.f);
}

we::StationaryConfig stationary_config(const ExperimentConfig& config, we::PolicyKind mode,
                                       const we::Distribution& zeta, const we::CoarseChain& chain) {
    we::StationaryConfig s;
    s.policy = mode;
    s.particles = config.particles;
    s.floor_per_bin = config.floor_per_bin;
    s.per_bin_target = config.per_bin_target;
    s.placement = config.placement;
    s.zeta = zeta;
    s.coarse = chain;
    return s;
}

std::string mode_name(we::PolicyKind k) { return we::to_string(k); }

void write_v_rows(std::ostream& os, const we::VTable& v, std::initializer_list<unsigned> rows) {
    os << "p,r,value\n";
    for (unsigned p : rows) {
        if (p >= v.v.size()) continue;
        for (std::size_t r = 0; r < v.v[p].size(); ++r) {
            os << p << ',' << r + 1 << ',' << format_double(v.v[p][r]) << '\n';
        }
    }
}

}  // namespace

int cmd_coarse(const ExperimentConfig& config, std::ostream& log) {
    prepare_output(config);
    const auto problem = build_problem(config);
    const auto zeta = build_zeta(config.zeta, problem.K);
    const unsigned horizon = std::max(1u, config.horizons.back());
    const auto model = we::CoarseModel::from_chain(coarse_chain(config, problem, zeta), horizon);
    we::write_coarse_model(model, config.out, config.hash_comment());

    const double lambda2 = we::second_eigenvalue_modulus(model.P);
    log << "coarse model: " << model.P.size() << " bins, horizon " << horizon << ", builder "
        << config.coarse_builder << '\n';
    log << "lambda_2(P) = " << format_double(lambda2);
    if (lambda2 > 0.0 && lambda2 < 1.0) {
        log << " (bias factor lambda_2^n = " << format_double(std::pow(lambda2, horizon)) << " at n = "
            << horizon << ')';
    }
    log << '\n';
    log << "min v before clamp = " << format_double(model.v.min_before_clamp) << '\n';
    return kSuccess;
}

int cmd_run(const ExperimentConfig& config, std::ostream& log) {
    prepare_output(config);
    const auto problem = build_problem(config);
    const std::size_t S = problem.K.size();
    const auto zeta = build_zeta(config.zeta, problem.K);
    const auto chain = coarse_chain(config, problem, zeta);
    const auto pi = we::stationary(problem.K);
    const double pi_f = we::integrate(pi, problem.f);
    const std::string comment = config.hash_comment();

    std::ostringstream summary;
    we::csv::write_comment(summary, comment);
    summary << "mode,n,replicates,mean,std,std_err,exact,stationary,extinct,warning\n";

    double f_total = 0.0;
    for (double v : problem.f.values()) f_total += v;

    for (const auto mode : config.modes) {
        const auto reps = config.reps.at(mode);
        const auto experiment = we::stationary_experiment(
            problem.K, problem.f, problem.bins, stationary_config(config, mode, zeta, chain), config.seed);
        for (const unsigned n : config.horizons) {
            we::ReplicateOptions opts;
            opts.seed = config.seed;
            opts.threads = worker_count(config);
            const auto runs = we::run_replicates(experiment, n, reps, opts);

            std::ostringstream os;
            we::write_run_records(os, runs, comment, true);
            we::csv::write_file(output_path(config, "run_" + mode_name(mode) + "_n" + std::to_string(n) + ".csv"),
                                os.str());

            std::vector<double> eta(runs.size());
            std::size_t extinct = 0;
            for (std::size_t i = 0; i < runs.size(); ++i) {
                eta[i] = runs[i].final_eta;
                if (runs[i].extinct) ++extinct;
            }
            const auto stats = we::sample_stats(eta);
            const double se = stats.std / std::sqrt(static_cast<double>(reps));
            const double exact = we::exact_reference(experiment, n);
            const bool warn = static_cast<double>(extinct) > 0.01 * static_cast<double>(reps);
            summary << mode_name(mode) << ',' << n << ',' << reps << ',' << format_double(stats.mean) << ','
                    << format_double(stats.std) << ',' << format_double(se) << ',' << format_double(exact)
                    << ',' << format_double(pi_f) << ',' << extinct << ','
                    << (warn ? "extinction_above_1pct" : "") << '\n';
            log << mode_name(mode) << " n=" << n << ": mean " << format_double(stats.mean) << " +- "
                << format_double(se) << " (exact " << format_double(exact) << ")\n";
            if (warn) {
                log << "warning: " << extinct << " of " << reps << " " << mode_name(mode)
                    << " replicates went extinct at n=" << n << '\n';
            }

            if (mode == we::PolicyKind::Adaptive && n > 0) {
                const auto model = we::CoarseModel::from_chain(chain, n);
                std::ostringstream vs;
                we::csv::write_comment(vs, comment);
                write_v_rows(vs, model.v, {0u, n - 1});
                we::csv::write_file(output_path(config, "v_n" + std::to_string(n) + ".csv"), vs.str());
            }

            if (n != config.horizons.back()) continue;
            // Per-replicate normalized positions, averaged over surviving replicates.
            std::vector<double> by_count(S, 0.0), by_weight(S, 0.0);
            std::size_t alive = 0;
            for (const auto& r : runs) {
                const auto& e = r.final_ensemble;
                if (e.empty()) continue;
                ++alive;
                const double total = e.total_weight();
                const double inv_count = 1.0 / static_cast<double>(e.size());
                for (const auto& p : e.particles) {
                    by_count[p.state] += inv_count;
                    by_weight[p.state] += p.weight / total;
                }
            }
            std::ostringstream hs;
            we::csv::write_comment(hs, comment);
            hs << "i,count_normalized,weight_normalized,f_bar,pi\n";
            for (std::size_t x = 0; x < S; ++x) {
                const double scale = alive > 0 ? 1.0 / static_cast<double>(alive) : 0.0;
                const double fbar = f_total != 0.0 ? problem.f[x] / f_total : problem.f[x];
                hs << x + 1 << ',' << format_double(by_count[x] * scale) << ','
                   << format_double(by_weight[x] * scale) << ',' << format_double(fbar) << ','
                   << format_double(pi[x]) << '\n';
            }
            we::csv::write_file(output_path(config, "hist_" + mode_name(mode) + ".csv"), hs.str());
        }
    }
    we::csv::write_file(output_path(config, "summary.csv"), summary.str());
    return kSuccess;
}

int cmd_diagnose(const ExperimentConfig& config, std::ostream& log) {
    prepare_output(config);
    const auto problem = build_problem(config);
    const auto zeta = build_zeta(config.zeta, problem.K);
    const auto chain = coarse_chain(config, problem, zeta);

    std::vector<we::CheckReport> reports;
    for (const auto mode : config.modes) {
        const auto experiment = we::stationary_experiment(
            problem.K, problem.f, problem.bins, stationary_config(config, mode, zeta, chain), config.seed);
        we::ReplicateOptions opts;
        opts.seed = config.seed;
        opts.threads = worker_count(config);
        opts.child_weight_scale = config.corrupt_weight_scale;
        for (const unsigned n : config.diagnose_horizons) {
            reports.push_back(we::check_unbiasedness(experiment, n, config.diagnose_reps, opts));
        }
        reports.push_back(we::check_doob_identity(experiment, config.doob_horizon, config.doob_reps, opts));
    }

    std::ostringstream os;
    we::write_reports(os, reports, config.hash_comment());
    we::csv::write_file(output_path(config, "diagnostics.csv"), os.str());

    bool all = true;
    for (const auto& r : reports) {
        log << (r.pass ? "PASS " : "FAIL ") << r.check << " mode=" << r.policy << " n=" << r.n
            << " value=" << format_double(r.value) << " reference=" << format_double(r.reference)
            << " z=" << format_double(r.z) << '\n';
        all = all && r.pass;
    }
    return all ? kSuccess : kCheckFailure;
}

int cmd_hill(const ExperimentConfig& config, std::ostream& log) {
    prepare_output(config);
    const auto problem = build_problem(config);
    const std::size_t S = problem.K.size();
    constexpr std::size_t kOracleLimit = 10000;
    const bool oracle = S <= kOracleLimit;

    std::vector<double> rho(S, 0.0);
    double rho_total = 0.0;
    for (const auto& [x, m] : config.hill_source) {
        if (x >= S) throw ConfigError("hill_source: state " + std::to_string(x + 1) + " is outside the chain");
        rho[x] += m;
        rho_total += m;
    }
    for (double& r : rho) r /= rho_total;
    we::Distribution source(std::move(rho), 1e-9);

    const bool hitting = !config.hill_a.empty();
    we::StateSet sink = we::make_state_set(config.hill_sink, S);
    if (hitting) {
        std::vector<we::State> both = config.hill_a;
        both.insert(both.end(), config.hill_b.begin(), config.hill_b.end());
        sink = we::make_state_set(both, S);
    }
    const we::SourceSinkSpec spec{problem.K, sink, source};
    spec.validate();

    we::HillRunConfig run;
    run.bins = problem.bins;
    run.horizon = config.hill_horizon;
    run.replicates = config.hill_reps;
    run.seed = config.seed;
    run.threads = worker_count(config);
    run.stationary.policy = config.hill_mode;
    run.stationary.particles = config.particles;
    run.stationary.floor_per_bin = config.floor_per_bin;
    run.stationary.per_bin_target = config.per_bin_target;
    run.stationary.placement = config.placement;
    // "equilibrium" refers to the unmodified chain: the source-sink law is the unknown.
    run.stationary.zeta = build_zeta(config.hill_zeta, problem.K);

    std::ostringstream os;
    we::csv::write_comment(os, config.hash_comment());
    os << "quantity,n,policy,estimate,std_err,exact_n,oracle,z,replicates,invalid,extinct\n";
    const auto row = [&](const std::string& quantity, double estimate, double se, double exact_n,
                         double truth, const we::HillEstimate& h) {
        os << quantity << ',' << run.horizon << ',' << mode_name(config.hill_mode) << ','
           << format_double(estimate) << ',' << format_double(se) << ','
           << (std::isnan(exact_n) ? "" : format_double(exact_n)) << ',';
        if (oracle) {
            os << format_double(truth) << ',' << format_double(se > 0.0 ? (estimate - truth) / se : 0.0);
        } else {
            os << ',';
        }
        os << ',' << h.replicates << ',' << h.invalid << ',' << h.extinct << '\n';
        log << quantity << " = " << format_double(estimate) << " +- " << format_double(se);
        if (oracle) log << " (oracle " << format_double(truth) << ")";
        log << '\n';
    };

    const auto K = we::source_sink_kernel(spec);
    const we::HillEstimate* per_replicate = nullptr;
    we::HillEstimate single;
    we::HittingEstimate pair;
    if (hitting) {
        pair = we::we_hitting_probability(spec, config.hill_a, config.hill_b, run);
        double truth = NAN;
        if (oracle) truth = we::hitting_probability(we::stationary(K), config.hill_a, config.hill_b);
        const double exact_n = pair.numerator.eta_exact / pair.denominator.eta_exact;
        row("hitting_probability", pair.probability, pair.std_err, exact_n, truth, pair.denominator);
        per_replicate = &pair.denominator;
    } else {
        single = we::we_hill_mfpt(spec, run);
        double pi_f = NAN, mfpt = NAN;
        if (oracle) {
            pi_f = we::mass_on(we::stationary(K).values(), spec.sink);
            mfpt = we::direct_mfpt(problem.K, source, spec.sink);
        }
        row("pi_F", single.eta_mean, single.eta_std_err, single.eta_exact, pi_f, single);
        row("mfpt", single.mfpt, single.mfpt_std_err, 1.0 / single.eta_exact, mfpt, single);
        per_replicate = &single;
        if (single.invalid > 0) {
            log << single.invalid << " of " << single.replicates
                << " replicates had eta_n(1_F) = 0 and are excluded from the reciprocals\n";
        }
    }
    we::csv::write_file(output_path(config, "hill.csv"), os.str());

    std::ostringstream rs;
    we::csv::write_comment(rs, config.hash_comment());
    rs << "replicate,eta_f,reciprocal,valid\n";
    for (std::size_t i = 0; i < per_replicate->eta.size(); ++i) {
        const double e = per_replicate->eta[i];
        rs << i << ',' << format_double(e) << ',' << (e > 0.0 ? format_double(1.0 / e) : "") << ','
           << (e > 0.0 ? 1 : 0) << '\n';
    }
    we::csv::write_file(output_path(config, "hill_replicates.csv"), rs.str());
    return kSuccess;
}

}  // namespace wesample
