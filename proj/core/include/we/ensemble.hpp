#pragma once

#include "we/markov.hpp"
#include "we/rng.hpp"

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace we {

struct Particle {
    State state = 0;
    double weight = 0.0;

    friend bool operator==(const Particle&, const Particle&) = default;
};

/// Particles and weights at one generation. Empty only after extinction.
struct Ensemble {
    unsigned generation = 0;
    std::vector<Particle> particles;

    bool empty() const noexcept { return particles.empty(); }
    std::size_t size() const noexcept { return particles.size(); }
    double total_weight() const noexcept;

    /// The weighted empirical measure as a dense vector over `num_states`.
    std::vector<double> measure(std::size_t num_states) const;

    friend bool operator==(const Ensemble&, const Ensemble&) = default;
};

/// Disjoint cover of the state space by bins 0..R-1; every bin is nonempty.
class BinPartition {
public:
    explicit BinPartition(std::vector<std::size_t> bin_of);

    /// Consecutive blocks of `width` states (the last block may be short).
    static BinPartition contiguous(std::size_t num_states, std::size_t width);
    /// One bin per state.
    static BinPartition singletons(std::size_t num_states);

    std::size_t num_states() const noexcept { return bin_of_.size(); }
    std::size_t num_bins() const noexcept { return members_.size(); }
    std::size_t bin_of(State x) const { return bin_of_[x]; }
    std::span<const State> members(std::size_t bin) const { return members_[bin]; }
    std::span<const std::size_t> assignment() const noexcept { return bin_of_; }

private:
    std::vector<std::size_t> bin_of_;
    std::vector<std::vector<State>> members_;
};

enum class Placement { Sampled, Stratified };

/// Largest-remainder apportionment of `total` items by nonnegative `shares`
/// (need not be normalized). Ties go to the lower index.
std::vector<std::size_t> apportion(std::span<const double> shares, std::size_t total);

/// N0 particles of weight 1/N0 whose states follow `initial`: i.i.d. draws in
/// Sampled mode, largest-remainder counts per state in Stratified mode.
Ensemble init_ensemble(const Distribution& initial, std::size_t n0, Placement placement,
                       const RngStream& rng);

/// Coarse-preconditioned start for stationary averages: about N/R particles per
/// bin (largest remainder), each carrying mu_r / (count in bin r).
///
/// Within a bin, Stratified placement spreads particles round-robin over the
/// bin's states; Sampled placement draws each state from `within_bin` restricted
/// to the bin (uniform when `within_bin` is null).
Ensemble stationary_init_ensemble(const Distribution& mu, const BinPartition& bins, std::size_t n,
                                  Placement placement = Placement::Stratified,
                                  const Distribution* within_bin = nullptr,
                                  const RngStream* rng = nullptr);

/// E[eta_0] for stationary_init_ensemble with the same arguments: the
/// deterministic empirical measure for Stratified placement, and
/// mu_r * zeta(x) / zeta(B^r) for Sampled placement.
std::vector<double> stationary_init_mean(const Distribution& mu, const BinPartition& bins,
                                         std::size_t n, Placement placement,
                                         const Distribution* within_bin = nullptr);

/// eta(f) = sum_j w_j f(x_j); 0 for an empty ensemble.
double empirical_estimate(const Ensemble& e, const Observable& f);

struct BinTotals {
    std::vector<std::size_t> count;
    std::vector<double> weight;
};

BinTotals bin_totals(const Ensemble& e, const BinPartition& bins);

}  // namespace we
