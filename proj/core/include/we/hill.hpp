#pragma once

// Stationary averages from a coarse-preconditioned start, and the source-sink
// construction that turns mean first-passage times and hitting probabilities
// into stationary averages (Hill relation).

#include "we/coarse.hpp"
#include "we/engine.hpp"
#include "we/markov.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace we {

/// Sorted, duplicate-free set of 0-based states.
using StateSet = std::vector<State>;

/// Throws std::invalid_argument on out-of-range entries; sorts and dedups.
StateSet make_state_set(std::vector<State> states, std::size_t num_states);

/// Sum of `measure` over `set`.
double mass_on(std::span<const double> measure, std::span<const State> set);

// --- stationary workflow ----------------------------------------------------

struct StationaryConfig {
    PolicyKind policy = PolicyKind::Adaptive;
    std::size_t particles = 150;         ///< N
    double floor_per_bin = 1.0;          ///< Ñ (adaptive)
    double per_bin_target = 5.0;         ///< traditional
    Placement placement = Placement::Stratified;
    /// Sampling measure for the coarse model and for Sampled placement;
    /// uniform when empty.
    std::optional<Distribution> zeta;
    /// Precomputed coarse chain (e.g. a Monte Carlo build); when empty the
    /// exact zeta-weighted aggregate is used.
    std::optional<CoarseChain> coarse;
};

/// Builds (or takes) the coarse model over `bins`, starts every replicate from
/// stationary_init_ensemble(mu, bins, N) and wires the configured policy.
/// Sampled placement draws replicate r from stream (seed, r, 0, Initial).
Experiment stationary_experiment(const TransitionMatrix& K, const Observable& f,
                                 const BinPartition& bins, const StationaryConfig& config,
                                 std::uint64_t seed);

SelectionPolicy make_policy(const BinPartition& bins, const StationaryConfig& config);

// --- source-sink and Hill relation -------------------------------------------

struct SourceSinkSpec {
    TransitionMatrix base_kernel;   ///< K0
    StateSet sink;                  ///< F, nonempty
    Distribution source;            ///< rho, no mass on F

    /// Throws std::invalid_argument when an invariant fails.
    void validate() const;
};

/// K = K0 outside F and rho K0 on every row in F.
TransitionMatrix source_sink_kernel(const SourceSinkSpec& spec);

/// pi(g) / pi(F) = E^rho[sum_{p=1}^{tau_F} g(X_p)]. Throws NumericalError when pi(F) = 0.
double general_hill_average(const Distribution& pi, const Observable& g, std::span<const State> F);

/// pi(B) / pi(A u B) = P^rho[tau_B < tau_A] for the sink A u B.
/// 0 when B is empty; throws on overlap or a zero denominator.
double hitting_probability(const Distribution& pi, std::span<const State> A,
                           std::span<const State> B);

/// E^rho[tau_F] = sum_x rho(x) t(x) with t = 1 + K0|_{F^c} t, by dense LU.
/// Throws NumericalError when the system is singular (F not reachable).
double direct_mfpt(const TransitionMatrix& K0, const Distribution& rho, std::span<const State> F);

/// E^rho[sum_{p=1}^{tau_F} g(X_p)] by the same absorbing-chain solve; the
/// independent side of the renewal identity.
double direct_cycle_sum(const TransitionMatrix& K0, const Distribution& rho,
                        std::span<const State> F, const Observable& g);

struct HillRunConfig {
    StationaryConfig stationary;
    BinPartition bins = BinPartition::singletons(1);
    unsigned horizon = 30;
    std::size_t replicates = 1000;
    std::uint64_t seed = 0;
    unsigned threads = 1;
};

struct HillEstimate {
    double eta_mean = 0.0;        ///< replicate mean of eta_n(1_F)
    double eta_std = 0.0;
    double eta_std_err = 0.0;
    double eta_exact = 0.0;       ///< nu_0 K^n 1_F
    double mfpt = 0.0;            ///< 1 / eta_mean (ratio of means)
    double mfpt_std_err = 0.0;    ///< delta method
    std::size_t replicates = 0;
    std::size_t invalid = 0;      ///< replicates with eta_n <= 0, excluded from reciprocals
    std::size_t extinct = 0;
    std::vector<double> eta;          ///< per replicate
    std::vector<double> reciprocals;  ///< 1 / eta_n for the valid replicates
};

/// Stationary workflow on the source-sink kernel with f = 1_F.
HillEstimate we_hill_mfpt(const SourceSinkSpec& spec, const HillRunConfig& config);

struct HittingEstimate {
    double probability = 0.0;     ///< mean eta(1_B) / mean eta(1_{A u B})
    double std_err = 0.0;         ///< delta method with the paired covariance
    HillEstimate numerator;       ///< f = 1_B
    HillEstimate denominator;     ///< f = 1_{A u B}
};

/// P^rho[tau_B < tau_A] using the sink A u B. Both runs share the seed so
/// replicates pair up; `spec.sink` is ignored.
HittingEstimate we_hitting_probability(const SourceSinkSpec& spec, std::span<const State> A,
                                       std::span<const State> B, const HillRunConfig& config);

}  // namespace we
