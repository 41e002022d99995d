#pragma once

// Markov-state-model preconditioner: a coarse chain P over bins, the
// bin-averaged observable u, the coarse stationary vector mu and the table
// v_p = P (P^{n-p-1} u)^2 - (P^{n-p} u)^2 that steers particle allocation.

#include "we/ensemble.hpp"
#include "we/markov.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace we {

struct CoarseChain {
    TransitionMatrix P;
    std::vector<double> u;
};

/// Exact zeta-weighted aggregation of K and f over the bins.
CoarseChain build_coarse_exact(const TransitionMatrix& K, const BinPartition& bins,
                               const Distribution& zeta, const Observable& f);

/// Monte Carlo estimate from one-step transitions. The budget is split over
/// start states by largest remainder on zeta; start state x uses the stream
/// (seed, 0, x, CoarseSampling).
CoarseChain build_coarse_mc(const KernelSampler& sampler, const BinPartition& bins,
                            const Distribution& zeta, const Observable& f,
                            std::size_t total_samples, std::uint64_t seed);

struct VTable {
    std::vector<std::vector<double>> v;   ///< v[p][r], p = 0..n-1, clamped at 0
    double min_before_clamp = 0.0;
};

/// Roundoff in [-1e-10, 0) is clamped to 0; anything more negative throws NumericalError.
VTable compute_v(const TransitionMatrix& P, std::span<const double> u, unsigned horizon);

inline constexpr double kVClampThreshold = 1e-10;

Distribution coarse_stationary(const TransitionMatrix& P);

/// Everything adaptive selection and the stationary start need for horizon n.
struct CoarseModel {
    TransitionMatrix P;
    std::vector<double> u;
    Distribution mu;
    VTable v;
    unsigned horizon = 0;

    static CoarseModel from_chain(CoarseChain chain, unsigned horizon);

    std::span<const double> v_row(unsigned p) const { return v.v.at(p); }
};

/// Writes P.csv, u.csv, mu.csv and v.csv (columns p,r,value; 0-based p,
/// 1-based r) into `directory`, which must exist.
void write_coarse_model(const CoarseModel& model, const std::string& directory,
                        const std::string& comment = {});
CoarseModel read_coarse_model(const std::string& directory);

}  // namespace we
