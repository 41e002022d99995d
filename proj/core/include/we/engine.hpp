#pragma once

#include "we/coarse.hpp"
#include "we/ensemble.hpp"
#include "we/markov.hpp"
#include "we/rng.hpp"
#include "we/selection.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace we {

/// Each selected particle moves by one independent draw from its row of K.
/// Draw i of `rng` moves child i. Weights are carried over unchanged.
Ensemble mutate(const SelectionOutcome& selection, const KernelSampler& sampler,
                const RngStream& rng, unsigned next_generation);
Ensemble mutate(const SelectionOutcome& selection, const TransitionMatrix& K,
                const RngStream& rng, unsigned next_generation);

struct GenerationRecord {
    unsigned p = 0;
    double eta_f = 0.0;
    double total_weight = 0.0;
    std::size_t num_particles = 0;
    std::vector<std::size_t> bin_count;   ///< empty when the policy has no bins
    std::vector<double> bin_weight;

    friend bool operator==(const GenerationRecord&, const GenerationRecord&) = default;
};

struct RunRecord {
    std::uint64_t replicate = 0;
    std::vector<GenerationRecord> generations;  ///< p = 0 .. min(n, tau_kill)
    bool extinct = false;
    double final_eta = 0.0;                     ///< eta_n(f); 0 after extinction
    Ensemble final_ensemble;

    friend bool operator==(const RunRecord&, const RunRecord&) = default;
};

/// Called once per generation p < n with the ensemble before selection and the
/// selection outcome; the diagnostics use it to evaluate conditional variances.
using SelectionObserver =
    std::function<void(unsigned p, const Ensemble& before, const SelectionOutcome& selection)>;

struct RunOptions {
    std::uint64_t seed = 0;
    std::uint64_t replicate = 0;
    SelectionObserver observer;
    /// Negative-control hook forwarded to select(); 1 for every real run.
    double child_weight_scale = 1.0;
};

/// Alternates selection and mutation for p = 0..n-1 and records eta_p(f) for
/// every p up to min(n, tau_kill). Generation p draws its selection from stream
/// (seed, replicate, p, Selection) and its mutation from (seed, replicate, p, Mutation).
RunRecord run_we(const KernelSampler& sampler, const Observable& f, const SelectionPolicy& policy,
                 const CoarseModel* coarse, Ensemble init, unsigned n, const RunOptions& options);
RunRecord run_we(const TransitionMatrix& K, const Observable& f, const SelectionPolicy& policy,
                 const CoarseModel* coarse, Ensemble init, unsigned n, const RunOptions& options);

/// CSV with header `replicate,p,eta_f,total_weight,num_particles,extinct`.
/// With `final_only` each replicate contributes just its last generation.
void write_run_records(std::ostream& os, std::span<const RunRecord> records,
                       std::string_view comment = {}, bool final_only = false);

/// Calls body(i) for i in [0, count) on up to `threads` workers. Each index
/// runs exactly once; callers write results into per-index slots.
void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& body);

/// A complete sampling setup that replicates can be drawn from.
struct Experiment {
    TransitionMatrix K;
    Observable f;
    SelectionPolicy policy;
    /// Required for adaptive selection; v is recomputed for each horizon.
    std::optional<CoarseChain> coarse;
    /// Builds the generation-0 ensemble for a replicate.
    std::function<Ensemble(std::uint64_t replicate)> initial;
    /// E[eta_0] as a measure over states; the exact reference is initial_mean K^n f.
    std::vector<double> initial_mean;
};

/// nu_0 K^n f with nu_0 = experiment.initial_mean.
double exact_reference(const Experiment& experiment, unsigned n);

struct ReplicateOptions {
    std::uint64_t seed = 0;
    unsigned threads = 1;
    std::uint64_t first_replicate = 0;
    double child_weight_scale = 1.0;
    /// Per-replicate observer factory; may be empty.
    std::function<SelectionObserver(std::uint64_t replicate)> observer_for;
};

/// Runs `reps` independent replicates of the experiment at horizon n.
/// Results are ordered by replicate and independent of the thread count.
std::vector<RunRecord> run_replicates(const Experiment& experiment, unsigned n, std::size_t reps,
                                      const ReplicateOptions& options);

}  // namespace we
