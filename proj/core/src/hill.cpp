#include "we/hill.hpp"

#include "we/diagnostics.hpp"
#include "we/error.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <memory>
#include <stdexcept>
#include <string>

namespace we {

StateSet make_state_set(std::vector<State> states, std::size_t num_states) {
    for (State x : states) {
        if (x >= num_states) {
            throw std::invalid_argument("state " + std::to_string(x + 1) + " is outside 1.." +
                                        std::to_string(num_states));
        }
    }
    std::sort(states.begin(), states.end());
    states.erase(std::unique(states.begin(), states.end()), states.end());
    return states;
}

double mass_on(std::span<const double> measure, std::span<const State> set) {
    double s = 0.0;
    for (State x : set) s += measure[x];
    return s;
}

SelectionPolicy make_policy(const BinPartition& bins, const StationaryConfig& config) {
    switch (config.policy) {
        case PolicyKind::Adaptive:
            return SelectionPolicy::adaptive(bins, static_cast<double>(config.particles),
                                             config.floor_per_bin);
        case PolicyKind::Traditional:
            return SelectionPolicy::traditional(bins, config.per_bin_target);
        case PolicyKind::Naive:
            return SelectionPolicy::naive(bins);
        case PolicyKind::User:
            break;
    }
    throw std::invalid_argument("make_policy: user policies cannot be built from a config");
}

Experiment stationary_experiment(const TransitionMatrix& K, const Observable& f,
                                 const BinPartition& bins, const StationaryConfig& config,
                                 std::uint64_t seed) {
    if (bins.num_states() != K.size()) {
        throw std::invalid_argument("stationary_experiment: bins cover " +
                                    std::to_string(bins.num_states()) + " states, chain has " +
                                    std::to_string(K.size()));
    }
    const Distribution zeta = config.zeta ? *config.zeta : Distribution::uniform(K.size());
    if (zeta.size() != K.size()) throw std::invalid_argument("stationary_experiment: zeta has wrong size");

    auto chain = config.coarse ? *config.coarse : build_coarse_exact(K, bins, zeta, f);
    if (chain.P.size() != bins.num_bins()) {
        throw std::invalid_argument("stationary_experiment: coarse chain has the wrong bin count");
    }
    const Distribution mu = coarse_stationary(chain.P);

    Experiment e{K, f, make_policy(bins, config), std::nullopt, {}, {}};
    if (config.policy == PolicyKind::Adaptive) e.coarse = std::move(chain);

    const Distribution* within = config.zeta ? &*config.zeta : nullptr;
    e.initial_mean = stationary_init_mean(mu, bins, config.particles, config.placement, within);
    // Owned copies keep the builder valid after this function returns.
    auto zeta_copy = std::make_shared<const std::optional<Distribution>>(config.zeta);
    e.initial = [mu, bins, n = config.particles, placement = config.placement, zeta_copy,
                 seed](std::uint64_t replicate) {
        const RngStream rng(seed, replicate, 0, Purpose::Initial);
        const Distribution* w = *zeta_copy ? &**zeta_copy : nullptr;
        return stationary_init_ensemble(mu, bins, n, placement, w, &rng);
    };
    return e;
}

// ---------------------------------------------------------------------------

void SourceSinkSpec::validate() const {
    const std::size_t n = base_kernel.size();
    if (sink.empty()) throw std::invalid_argument("source-sink spec: sink set is empty");
    if (source.size() != n) throw std::invalid_argument("source-sink spec: source has wrong size");
    for (std::size_t i = 0; i < sink.size(); ++i) {
        if (sink[i] >= n) throw std::invalid_argument("source-sink spec: sink state out of range");
        if (i > 0 && sink[i] <= sink[i - 1]) {
            throw std::invalid_argument("source-sink spec: sink set must be sorted and unique");
        }
    }
    for (State x : sink) {
        if (source[x] > 0.0) {
            throw std::invalid_argument("source-sink spec: source puts mass " +
                                        std::to_string(source[x]) + " on sink state " +
                                        std::to_string(x + 1));
        }
    }
}

TransitionMatrix source_sink_kernel(const SourceSinkSpec& spec) {
    spec.validate();
    const std::size_t n = spec.base_kernel.size();
    const auto reentry = apply_left(spec.source.values(), spec.base_kernel);
    std::vector<double> entries(spec.base_kernel.entries().begin(), spec.base_kernel.entries().end());
    for (State x : spec.sink) std::copy(reentry.begin(), reentry.end(), entries.begin() + x * n);
    return TransitionMatrix(n, std::move(entries), 1e-10);
}

double general_hill_average(const Distribution& pi, const Observable& g, std::span<const State> F) {
    const double piF = mass_on(pi.values(), F);
    if (!(piF > 0.0)) throw NumericalError("general_hill_average: pi(F) = 0");
    return integrate(pi, g) / piF;
}

double hitting_probability(const Distribution& pi, std::span<const State> A,
                           std::span<const State> B) {
    for (State a : A) {
        if (std::find(B.begin(), B.end(), a) != B.end()) {
            throw std::invalid_argument("hitting_probability: A and B overlap at state " +
                                        std::to_string(a + 1));
        }
    }
    if (B.empty()) return 0.0;
    const double b = mass_on(pi.values(), B);
    const double ab = mass_on(pi.values(), A) + b;
    if (!(ab > 0.0)) throw NumericalError("hitting_probability: pi(A u B) = 0");
    return std::clamp(b / ab, 0.0, 1.0);
}

namespace {

// For x outside F, t(x) = E^x[sum_{p=1}^{tau_F} g(X_p)] solves
// t = K0 g + K0|_{F^c} t.
std::vector<double> absorbing_solve(const TransitionMatrix& K0, std::span<const State> F,
                                    const Observable& g, std::vector<State>& outside) {
    const std::size_t n = K0.size();
    std::vector<char> in_f(n, 0);
    for (State x : F) in_f.at(x) = 1;
    outside.clear();
    for (State x = 0; x < n; ++x) {
        if (!in_f[x]) outside.push_back(x);
    }
    const auto m = static_cast<Eigen::Index>(outside.size());
    Eigen::MatrixXd A = Eigen::MatrixXd::Identity(m, m);
    Eigen::VectorXd rhs(m);
    for (Eigen::Index i = 0; i < m; ++i) {
        const auto row = K0.row(outside[i]);
        double r = 0.0;
        for (State y = 0; y < n; ++y) r += row[y] * g[y];
        rhs(i) = r;
        for (Eigen::Index j = 0; j < m; ++j) A(i, j) -= row[outside[j]];
    }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(A);
    if (m > 0 && !lu.isInvertible()) {
        throw NumericalError("direct_mfpt: F is not reachable from every state outside it");
    }
    Eigen::VectorXd t = m > 0 ? Eigen::VectorXd(lu.solve(rhs)) : Eigen::VectorXd(0);
    const double residual = m > 0 ? (A * t - rhs).cwiseAbs().maxCoeff() : 0.0;
    if (!std::isfinite(residual) || residual > 1e-8 * std::max(1.0, t.cwiseAbs().maxCoeff())) {
        throw NumericalError("direct_mfpt: absorbing system is numerically singular (residual " +
                             std::to_string(residual) + ")");
    }
    return {t.data(), t.data() + t.size()};
}

}  // namespace

double direct_cycle_sum(const TransitionMatrix& K0, const Distribution& rho,
                        std::span<const State> F, const Observable& g) {
    if (F.empty()) throw std::invalid_argument("direct_mfpt: sink set is empty");
    if (rho.size() != K0.size() || g.size() != K0.size()) {
        throw std::invalid_argument("direct_mfpt: dimension mismatch");
    }
    std::vector<State> outside;
    const auto t = absorbing_solve(K0, F, g, outside);
    double s = 0.0;
    for (std::size_t i = 0; i < outside.size(); ++i) s += rho[outside[i]] * t[i];
    for (State x : F) {
        if (rho[x] > 0.0) throw std::invalid_argument("direct_mfpt: source puts mass on F");
    }
    return s;
}

double direct_mfpt(const TransitionMatrix& K0, const Distribution& rho, std::span<const State> F) {
    return direct_cycle_sum(K0, rho, F, Observable::constant(K0.size(), 1.0));
}

// ---------------------------------------------------------------------------

namespace {

HillEstimate run_indicator(const TransitionMatrix& K, std::span<const State> set,
                           const HillRunConfig& config) {
    std::vector<double> indicator(K.size(), 0.0);
    for (State x : set) indicator[x] = 1.0;
    const Observable f(std::move(indicator));
    const auto experiment = stationary_experiment(K, f, config.bins, config.stationary, config.seed);

    ReplicateOptions opts;
    opts.seed = config.seed;
    opts.threads = config.threads;
    const auto runs = run_replicates(experiment, config.horizon, config.replicates, opts);

    HillEstimate est;
    est.replicates = runs.size();
    est.eta.reserve(runs.size());
    for (const auto& r : runs) {
        est.eta.push_back(r.final_eta);
        if (r.extinct) ++est.extinct;
        if (r.final_eta > 0.0) {
            est.reciprocals.push_back(1.0 / r.final_eta);
        } else {
            ++est.invalid;
        }
    }
    const auto stats = sample_stats(est.eta);
    est.eta_mean = stats.mean;
    est.eta_std = stats.std;
    est.eta_std_err = stats.std / std::sqrt(static_cast<double>(std::max<std::size_t>(1, runs.size())));
    est.eta_exact = exact_reference(experiment, config.horizon);
    if (est.eta_mean > 0.0) {
        est.mfpt = 1.0 / est.eta_mean;
        est.mfpt_std_err = est.eta_std_err / (est.eta_mean * est.eta_mean);
    } else {
        est.mfpt = INFINITY;
        est.mfpt_std_err = INFINITY;
    }
    return est;
}

}  // namespace

HillEstimate we_hill_mfpt(const SourceSinkSpec& spec, const HillRunConfig& config) {
    const auto K = source_sink_kernel(spec);
    return run_indicator(K, spec.sink, config);
}

HittingEstimate we_hitting_probability(const SourceSinkSpec& spec, std::span<const State> A,
                                       std::span<const State> B, const HillRunConfig& config) {
    const std::size_t n = spec.base_kernel.size();
    std::vector<State> both(A.begin(), A.end());
    both.insert(both.end(), B.begin(), B.end());
    const auto sorted = make_state_set(both, n);
    if (sorted.size() != both.size()) {
        throw std::invalid_argument("we_hitting_probability: A and B overlap");
    }
    SourceSinkSpec sink_spec{spec.base_kernel, sorted, spec.source};
    const auto K = source_sink_kernel(sink_spec);

    HittingEstimate h;
    h.numerator = run_indicator(K, make_state_set({B.begin(), B.end()}, n), config);
    h.denominator = run_indicator(K, sorted, config);
    const double a = h.numerator.eta_mean;
    const double b = h.denominator.eta_mean;
    if (!(b > 0.0)) throw NumericalError("we_hitting_probability: every replicate missed A u B");
    h.probability = a / b;

    const std::size_t m = h.numerator.eta.size();
    double cov = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        cov += (h.numerator.eta[i] - a) * (h.denominator.eta[i] - b);
    }
    cov = m > 1 ? cov / static_cast<double>(m - 1) : 0.0;
    const double va = h.numerator.eta_std * h.numerator.eta_std;
    const double vb = h.denominator.eta_std * h.denominator.eta_std;
    const double R = h.probability;
    const double var = (va + R * R * vb - 2.0 * R * cov) / (b * b * static_cast<double>(std::max<std::size_t>(1, m)));
    h.std_err = std::sqrt(std::max(var, 0.0));
    return h;
}

}  // namespace we
