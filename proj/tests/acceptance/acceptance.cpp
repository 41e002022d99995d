// Acceptance suite: one PASS/FAIL line per criterion. Exact references come
// from the plain-vector oracles in support/oracles.hpp, never from the library
// code under test.
//
// Usage: we_acceptance <scratch-dir>

#include "commands.hpp"
#include "config.hpp"
#include "oracles.hpp"

#include "we/coarse.hpp"
#include "we/csv.hpp"
#include "we/diagnostics.hpp"
#include "we/engine.hpp"
#include "we/hill.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

namespace fs = std::filesystem;
using namespace we;

namespace {

// Fixed per-criterion settings. Tolerances are the ones the criteria name.
constexpr double kZ = 4.0;
constexpr std::size_t kParticles = 150;
constexpr double kFloor = 1.0;
constexpr double kPerBin = 5.0;
constexpr double kLinearAlgebraTol = 1e-10;
constexpr double kGridStep = 0.01;
constexpr double kGridSlack = 1e-10;
constexpr double kRoundoff = 1e-12;
constexpr double kVClamp = -1e-10;
constexpr double kStdGapSe = 3.0;
constexpr std::size_t kBootstrap = 200;
constexpr double kBudgetC1 = 120.0, kBudgetC2 = 120.0, kBudgetC7 = 180.0;  // seconds

const std::vector<State> kF{27, 28, 29, 30, 31, 32};  // states 28..33

unsigned threads() { return std::max(1u, std::thread::hardware_concurrency()); }

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

// Extinctions seen in runs at N = 150, Ñ = 1 (criterion 9).
struct ExtinctionLedger {
    std::size_t runs = 0;
    std::size_t extinct = 0;
    void add(const std::vector<RunRecord>& records) {
        runs += records.size();
        for (const auto& r : records) extinct += r.extinct ? 1 : 0;
    }
} extinctions;

struct Result {
    bool pass = false;
    std::string detail;
};

// ---------------------------------------------------------------------------
// Independent oracle for the three-well setup.

struct ThreeWellOracle {
    oracle::Mat K;            // Q^4
    oracle::Vec f;            // indicator of states 28..33
    oracle::Vec pi;           // stationary law of K
    oracle::Vec nu0;          // E[eta_0] of the stratified stationary start
    oracle::Vec mu;           // coarse stationary law
    double pi_f = 0.0;

    ThreeWellOracle() {
        K = oracle::matpow(oracle::three_well_Q(), 4);
        f.assign(90, 0.0);
        for (State x : kF) f[x] = 1.0;
        pi = oracle::stationary(K);
        pi_f = oracle::dot(pi, f);

        // Coarse chain over 30 bins of width 3 with uniform sampling measure,
        // its stationary law mu, then 5 particles per bin placed round-robin
        // (2, 2, 1 over the bin's states), each of weight mu_r / 5.
        oracle::Mat P(30, oracle::Vec(30, 0.0));
        for (std::size_t r = 0; r < 30; ++r)
            for (std::size_t x = 3 * r; x < 3 * r + 3; ++x)
                for (std::size_t y = 0; y < 90; ++y) P[r][y / 3] += K[x][y] / 3.0;
        mu = oracle::stationary(P);
        nu0.assign(90, 0.0);
        const double per_bin = static_cast<double>(kParticles) / 30.0;
        for (std::size_t r = 0; r < 30; ++r)
            for (std::size_t k = 0; k < static_cast<std::size_t>(per_bin); ++k) nu0[3 * r + k % 3] += mu[r] / per_bin;
    }

    // Naive WE is independent walkers: Var eta_n = sum_i w_i^2 p_i (1 - p_i), p_i = (K^n f)(x_i).
    double naive_std(unsigned n) const {
        const auto p = oracle::matvec(oracle::matpow(K, n), f);
        const std::size_t per_bin = kParticles / 30;
        double var = 0.0;
        for (std::size_t r = 0; r < 30; ++r) {
            for (std::size_t k = 0; k < per_bin; ++k) {
                const double w = mu[r] / static_cast<double>(per_bin);
                const double q = p[3 * r + k % 3];
                var += w * w * q * (1.0 - q);
            }
        }
        return std::sqrt(var);
    }

    double expected(unsigned n) const {
        oracle::Vec nu = nu0;
        for (unsigned k = 0; k < n; ++k) nu = oracle::vecmat(nu, K);
        return oracle::dot(nu, f);
    }
};

const ThreeWellOracle& truth() {
    static const ThreeWellOracle o;
    return o;
}

Experiment three_well_experiment(PolicyKind kind, std::uint64_t seed) {
    StationaryConfig cfg;
    cfg.policy = kind;
    cfg.particles = kParticles;
    cfg.floor_per_bin = kFloor;
    cfg.per_bin_target = kPerBin;
    return stationary_experiment(build_three_well_chain().K, Observable::indicator(90, kF),
                                 BinPartition::contiguous(90, 3), cfg, seed);
}

std::vector<double> finals(const std::vector<RunRecord>& runs) {
    std::vector<double> out;
    out.reserve(runs.size());
    for (const auto& r : runs) out.push_back(r.final_eta);
    return out;
}

// ---------------------------------------------------------------------------

Result criterion1() {
    const auto t0 = std::chrono::steady_clock::now();
    constexpr std::uint64_t seed = 1001;
    constexpr std::size_t reps = 2000;
    Result res{true, ""};
    double worst = 0.0;
    for (auto kind : {PolicyKind::Adaptive, PolicyKind::Traditional, PolicyKind::Naive}) {
        const auto exp = three_well_experiment(kind, seed);
        for (unsigned n : {1u, 5u}) {
            ReplicateOptions o;
            o.seed = seed;
            o.threads = threads();
            const auto runs = run_replicates(exp, n, reps, o);
            extinctions.add(runs);
            const auto s = sample_stats(finals(runs));
            const double exact = truth().expected(n);
            const double z = std::abs(s.mean - exact) / (s.std / std::sqrt(static_cast<double>(reps)));
            worst = std::max(worst, z);
            res.pass = res.pass && z <= kZ;
            res.detail += to_string(kind) + " n=" + std::to_string(n) + " z=" + fmt(z) + "; ";
        }
    }
    const double elapsed = seconds_since(t0);
    res.pass = res.pass && elapsed < kBudgetC1;
    res.detail += "max z=" + fmt(worst) + ", " + fmt(elapsed) + " s";
    return res;
}

// Criteria 2 and 10 share the end-to-end CLI run.
struct CliRun {
    fs::path dir;
    double seconds = 0.0;
};

CliRun cli_run(const fs::path& dir, unsigned thread_count) {
    wesample::RawConfig raw;
    raw.set("modes", "adaptive");
    raw.set("horizons", "30");
    raw.set("reps", "1000");
    raw.set("seed", "1002");
    raw.set("threads", std::to_string(thread_count));
    raw.set("out", dir.string());
    fs::remove_all(dir);
    const auto t0 = std::chrono::steady_clock::now();
    std::ostringstream log;
    const int rc = wesample::cmd_run(wesample::resolve(raw), log);
    if (rc != wesample::kSuccess) throw std::runtime_error("wesample run failed with exit " + std::to_string(rc));
    return {dir, seconds_since(t0)};
}

std::map<std::string, std::string> summary_row(const fs::path& dir) {
    std::istringstream is(csv::read_file((dir / "summary.csv").string()));
    const auto rows = csv::read_rows(is, "mode,n,replicates,mean,std,std_err,exact,stationary,extinct,warning");
    if (rows.size() != 1) throw std::runtime_error("summary.csv: expected one row");
    const std::vector<std::string> names{"mode", "n", "replicates", "mean", "std", "std_err",
                                         "exact", "stationary", "extinct", "warning"};
    std::map<std::string, std::string> out;
    for (std::size_t i = 0; i < names.size() && i < rows[0].size(); ++i) out[names[i]] = rows[0][i];
    return out;
}

Result criterion2(const CliRun& run) {
    const auto row = summary_row(run.dir);
    const double mean = std::stod(row.at("mean"));
    const double se = std::stod(row.at("std_err"));
    const std::size_t extinct = std::stoul(row.at("extinct"));
    extinctions.runs += std::stoul(row.at("replicates"));
    extinctions.extinct += extinct;
    const double gap = std::abs(mean - truth().pi_f);
    const bool pass = gap <= kZ * se && run.seconds < kBudgetC2;
    return {pass, "mean=" + fmt(mean) + " pi(f)=" + fmt(truth().pi_f) + " |gap|/SE=" + fmt(gap / se) +
                      ", " + fmt(run.seconds) + " s"};
}

Result criterion3() {
    constexpr std::uint64_t seed = 1003;
    constexpr std::size_t reps = 1000;
    constexpr unsigned n = 30;
    std::vector<std::vector<double>> eta;
    const std::vector<PolicyKind> order{PolicyKind::Adaptive, PolicyKind::Traditional, PolicyKind::Naive};
    for (auto kind : order) {
        ReplicateOptions o;
        o.seed = seed;
        o.threads = threads();
        const auto runs = run_replicates(three_well_experiment(kind, seed), n, reps, o);
        extinctions.add(runs);
        eta.push_back(finals(runs));
    }
    // Bootstrap SE of each sample std; resample b draws from (seed, b, mode, Bootstrap).
    std::vector<double> sd(3), sd_se(3);
    for (std::size_t m = 0; m < 3; ++m) {
        sd[m] = sample_stats(eta[m]).std;
        std::vector<double> boot(kBootstrap);
        std::vector<double> resample(reps);
        for (std::size_t b = 0; b < kBootstrap; ++b) {
            const RngStream rng(seed, b, m, Purpose::Bootstrap);
            for (std::size_t i = 0; i < reps; ++i) {
                resample[i] = eta[m][static_cast<std::size_t>(rng.uniform_at(i) * static_cast<double>(reps))];
            }
            boot[b] = sample_stats(resample).std;
        }
        sd_se[m] = sample_stats(boot).std;
    }
    const auto gap = [&](std::size_t a, std::size_t b) {
        return (sd[b] - sd[a]) / std::sqrt(sd_se[a] * sd_se[a] + sd_se[b] * sd_se[b]);
    };
    const double g1 = gap(0, 1), g2 = gap(1, 2);
    const bool pass = sd[0] < sd[1] && sd[1] < sd[2] && g1 > kStdGapSe && g2 > kStdGapSe;
    return {pass, "std adaptive=" + fmt(sd[0]) + " traditional=" + fmt(sd[1]) + " naive=" + fmt(sd[2]) +
                      " (exact naive " + fmt(truth().naive_std(n)) + "); bootstrap SE " + fmt(sd_se[0]) + ", " + fmt(sd_se[1]) + ", " + fmt(sd_se[2]) + "; gaps " +
                      fmt(g1) + " and " + fmt(g2) + " combined SE"};
}

Result criterion4() {
    constexpr std::uint64_t seed = 1004;
    ReplicateOptions o;
    o.seed = seed;
    o.threads = threads();
    const auto exp = three_well_experiment(PolicyKind::Adaptive, seed);
    const auto rep = check_doob_identity(exp, 5, 5000, o);
    // The same replicates again to count extinctions (draws are keyed, so identical).
    extinctions.add(run_replicates(exp, 5, 5000, o));
    return {rep.pass, "E[M_n^2]=" + fmt(rep.value) + " rhs=" + fmt(rep.reference) + " z=" + fmt(rep.z)};
}

Result criterion5() {
    // 2-state chain, f = 1 on state 2, n = 1; particles (s1, 0.5), (s2, 0.3), (s1, 0.2); N = 3.
    const TransitionMatrix K{{0.5, 0.5}, {0.2, 0.8}};
    const Observable f{0.0, 1.0};
    const GSequence g(K, f, 1);
    Ensemble e;
    e.particles = {{0, 0.5}, {1, 0.3}, {0, 0.2}};
    constexpr double N = 3.0;
    const auto beta = optimal_allocation(e, g, 0, N);
    const double best = conditional_mutation_variance(e, beta, g, 0);

    // Independent evaluation of sum_j w_j^2 / beta_j * local(x_j) for the grid.
    const oracle::Vec local{0.5 - 0.25, 0.8 - 0.64};
    const double w[3] = {0.5, 0.3, 0.2};
    const std::size_t x[3] = {0, 1, 0};
    const int steps = static_cast<int>(std::lround(N / kGridStep));
    double grid_min = INFINITY;
    std::size_t points = 0;
    for (int a = 1; a < steps; ++a) {
        for (int b = 1; a + b < steps; ++b) {
            const double bs[3] = {a * kGridStep, b * kGridStep, (steps - a - b) * kGridStep};
            double v = 0.0;
            for (int j = 0; j < 3; ++j) v += w[j] * w[j] / bs[j] * local[x[j]];
            grid_min = std::min(grid_min, v);
            ++points;
        }
    }
    const bool pass = grid_min >= best - kGridSlack;
    return {pass, "formula beta=(" + fmt(beta[0]) + ", " + fmt(beta[1]) + ", " + fmt(beta[2]) +
                      ") variance=" + fmt(best) + "; grid min over " + std::to_string(points) +
                      " points=" + fmt(grid_min)};
}

Result criterion6() {
    const auto K = build_three_well_chain().K;
    const auto chain = build_coarse_exact(K, BinPartition::contiguous(90, 3), Distribution::uniform(90),
                                          Observable::indicator(90, kF));
    const auto table = compute_v(chain.P, chain.u, 30);
    double post_min = INFINITY;
    for (const auto& row : table.v)
        for (double v : row) post_min = std::min(post_min, v);
    const bool pass = table.v.size() == 30 && post_min >= 0.0 && table.min_before_clamp >= kVClamp;
    return {pass, "pre-clamp min=" + fmt(table.min_before_clamp) + " post-clamp min=" + fmt(post_min)};
}

Result criterion7() {
    const auto t0 = std::chrono::steady_clock::now();
    Result res{true, ""};

    // 2-state: K0 leaks from state 1 to the sink {2} with probability 0.1.
    {
        const TransitionMatrix K0{{0.9, 0.1}, {0.0, 1.0}};
        const SourceSinkSpec spec{K0, {1}, Distribution::point_mass(2, 0)};
        const auto pi = stationary(source_sink_kernel(spec));
        const double hill = 1.0 / pi[1];
        const double direct = direct_mfpt(K0, spec.source, spec.sink);
        const bool ok = std::abs(hill - 10.0) <= kLinearAlgebraTol && std::abs(direct - 10.0) <= kLinearAlgebraTol;
        res.pass = res.pass && ok;
        res.detail += "2-state 1/pi(F)=" + fmt(hill) + " direct=" + fmt(direct) + "; ";
    }
    // 3-state symmetric line, source in the middle, A = {1}, B = {3}.
    {
        const TransitionMatrix K0{{0.5, 0.5, 0.0}, {0.5, 0.0, 0.5}, {0.0, 0.5, 0.5}};
        const SourceSinkSpec spec{K0, {0, 2}, Distribution::point_mass(3, 1)};
        const auto pi = stationary(source_sink_kernel(spec));
        const double p = hitting_probability(pi, StateSet{0}, StateSet{2});
        res.pass = res.pass && std::abs(p - 0.5) <= kLinearAlgebraTol;
        res.detail += "3-state P=" + fmt(p) + "; ";
    }
    // Three-well: rho = delta_1, F = {81..90}; WE vs the absorbing-chain oracle.
    {
        const auto Kq = build_three_well_chain().K;
        const SourceSinkSpec spec{Kq, make_state_set({80, 81, 82, 83, 84, 85, 86, 87, 88, 89}, 90),
                                  Distribution::point_mass(90, 0)};
        const auto Q4 = truth().K;
        oracle::Vec rho(90, 0.0);
        rho[0] = 1.0;
        const double oracle_mfpt = oracle::cycle_sum(Q4, rho, spec.sink, oracle::Vec(90, 1.0));

        HillRunConfig cfg;
        cfg.bins = BinPartition::contiguous(90, 3);
        cfg.stationary.policy = PolicyKind::Adaptive;
        cfg.stationary.particles = kParticles;
        cfg.stationary.floor_per_bin = kFloor;
        // Sampling measure: equilibrium of the unmodified chain.
        cfg.stationary.zeta = stationary(Kq);
        cfg.horizon = 300;
        cfg.replicates = 1000;
        cfg.seed = 1007;
        cfg.threads = threads();
        const auto est = we_hill_mfpt(spec, cfg);
        extinctions.runs += est.replicates;
        extinctions.extinct += est.extinct;
        const double z = (est.mfpt - oracle_mfpt) / est.mfpt_std_err;
        res.pass = res.pass && std::abs(z) <= kZ;
        res.detail += "three-well MFPT WE=" + fmt(est.mfpt) + " +- " + fmt(est.mfpt_std_err) +
                      " oracle=" + fmt(oracle_mfpt) + " z=" + fmt(z) + "; ";
    }
    const double elapsed = seconds_since(t0);
    res.pass = res.pass && elapsed < kBudgetC7;
    res.detail += fmt(elapsed) + " s";
    return res;
}

Result criterion8() {
    Result res{true, ""};
    const auto chain = build_three_well_chain();
    const auto f = Observable::indicator(90, kF);

    // (a) Naive WE equals N plain chains driven by the same draws.
    {
        const auto exp = three_well_experiment(PolicyKind::Naive, 1008);
        const unsigned n = 30;
        const std::uint64_t replicate = 3;
        RunOptions o;
        o.seed = 1008;
        o.replicate = replicate;
        const auto init = exp.initial(replicate);
        const auto rec = run_we(chain.K, f, exp.policy, nullptr, init, n, o);
        std::vector<std::size_t> walkers;
        for (const auto& p : init.particles) walkers.push_back(p.state);
        for (unsigned p = 0; p < n; ++p) {
            const RngStream rng(1008, replicate, p, Purpose::Mutation);
            for (std::size_t i = 0; i < walkers.size(); ++i)
                walkers[i] = oracle::scan_sample(truth().K[walkers[i]], rng.uniform_at(i));
        }
        bool same = rec.final_ensemble.size() == walkers.size();
        double eta = 0.0;
        for (std::size_t i = 0; same && i < walkers.size(); ++i) {
            same = rec.final_ensemble.particles[i].state == walkers[i] &&
                   rec.final_ensemble.particles[i].weight == init.particles[i].weight;
            eta += init.particles[i].weight * truth().f[walkers[i]];
        }
        same = same && std::abs(rec.final_eta - eta) <= 1e-14;
        res.pass = res.pass && same;
        res.detail += std::string("naive == plain chains: ") + (same ? "yes" : "no") + "; ";
    }
    // (b) f = 1: every conditional variance term vanishes under naive selection,
    // and the mutation term vanishes under every policy.
    {
        const auto one = Observable::constant(90, 1.0);
        const unsigned n = 10;
        double naive_max = 0.0, mutation_max = 0.0, adaptive_selection = 0.0;
        for (auto kind : {PolicyKind::Naive, PolicyKind::Adaptive, PolicyKind::Traditional}) {
            StationaryConfig cfg;
            cfg.policy = kind;
            const auto exp = stationary_experiment(chain.K, one, BinPartition::contiguous(90, 3), cfg, 1008);
            ReplicateOptions o;
            o.seed = 1008;
            o.threads = threads();
            for (const auto& s : doob_samples(exp, n, 50, o)) {
                for (unsigned p = 0; p < n; ++p) {
                    mutation_max = std::max(mutation_max, std::abs(s.mutation[p]));
                    if (kind == PolicyKind::Naive) naive_max = std::max(naive_max, std::abs(s.selection[p]));
                    if (kind == PolicyKind::Adaptive) adaptive_selection = std::max(adaptive_selection, s.selection[p]);
                }
            }
        }
        // K1 = 1 only up to the row-sum roundoff of K.
        const bool ok = naive_max == 0.0 && mutation_max <= kRoundoff;
        res.pass = res.pass && ok;
        res.detail += "f=1 max mutation term=" + fmt(mutation_max) + " naive selection term=" +
                      fmt(naive_max) + " (adaptive selection term " + fmt(adaptive_selection) +
                      ": random total weight); ";
    }
    // (c) Integer beta rounds deterministically.
    {
        bool ok = true;
        RngStream rng(1008, 0, 0, Purpose::Test);
        for (double b : {0.0, 1.0, 2.0, 5.0, 17.0})
            for (int i = 0; i < 10000; ++i) ok = ok && stochastic_round(b, rng) == static_cast<unsigned>(b);
        res.pass = res.pass && ok;
        res.detail += std::string("integer rounding deterministic: ") + (ok ? "yes" : "no");
    }
    return res;
}

Result criterion10(const CliRun& first, const CliRun& second) {
    std::size_t files = 0;
    std::string mismatch;
    for (const auto& entry : fs::directory_iterator(first.dir)) {
        if (entry.path().extension() != ".csv") continue;
        ++files;
        const auto other = second.dir / entry.path().filename();
        if (!fs::exists(other) || csv::read_file(entry.path().string()) != csv::read_file(other.string())) {
            mismatch += entry.path().filename().string() + " ";
        }
    }
    std::size_t other_files = 0;
    for (const auto& entry : fs::directory_iterator(second.dir)) other_files += entry.path().extension() == ".csv";
    const bool pass = files > 0 && files == other_files && mismatch.empty();
    return {pass, std::to_string(files) + " CSV files compared (1 vs " + std::to_string(std::max(4u, threads())) +
                      " threads)" + (mismatch.empty() ? "" : "; differ: " + mismatch)};
}

}  // namespace

int main(int argc, char** argv) {
    const fs::path scratch = argc > 1 ? fs::path(argv[1]) : fs::temp_directory_path() / "we_acceptance";
    fs::create_directories(scratch);

    int failures = 0;
    const auto report = [&](int id, const std::string& name, const std::function<Result()>& body) {
        Result r;
        try {
            r = body();
        } catch (const std::exception& e) {
            r = {false, std::string("exception: ") + e.what()};
        }
        if (!r.pass) ++failures;
        std::cout << (r.pass ? "PASS" : "FAIL") << " criterion " << id << " (" << name << "): " << r.detail
                  << std::endl;
    };

    std::optional<CliRun> first, second;
    report(1, "unbiasedness", criterion1);
    report(2, "stationary convergence", [&] {
        first = cli_run(scratch / "c2_run_a", 1);
        return criterion2(*first);
    });
    report(3, "variance ordering", criterion3);
    report(4, "Doob identity", criterion4);
    report(5, "optimal allocation", criterion5);
    report(6, "Jensen nonnegativity", criterion6);
    report(7, "Hill relation", criterion7);
    report(8, "degeneracy checks", criterion8);
    report(9, "extinction", [] {
        return Result{extinctions.runs > 0 && extinctions.extinct == 0,
                      std::to_string(extinctions.extinct) + " extinct of " + std::to_string(extinctions.runs) +
                          " replicates"};
    });
    report(10, "determinism", [&] {
        if (!first) throw std::runtime_error("criterion 2 run is missing");
        second = cli_run(scratch / "c2_run_b", std::max(4u, threads()));
        return criterion10(*first, *second);
    });

    std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << std::endl;
    return failures == 0 ? 0 : 1;
}
