#pragma once

// Numerical checks of the martingale structure of a weighted ensemble:
// unbiasedness of eta_n(f), the exact conditional mutation/selection variance
// terms, the Doob decomposition of E[M_n^2], and the variance-optimal mean
// children counts.

#include "we/engine.hpp"
#include "we/markov.hpp"
#include "we/selection.hpp"

#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace we {

/// g[p] = K^{n-p} f for p = 0..n.
class GSequence {
public:
    GSequence(const TransitionMatrix& K, const Observable& f, unsigned n);

    unsigned horizon() const noexcept { return static_cast<unsigned>(g_.size() - 1); }
    const Observable& operator[](unsigned p) const { return g_.at(p); }

    /// K g_{p+1}^2 - g_p^2, the one-step conditional variance of g_{p+1}; p < n.
    const Observable& local_variance(unsigned p) const { return local_.at(p); }

private:
    std::vector<Observable> g_;
    std::vector<Observable> local_;
};

inline GSequence g_sequence(const TransitionMatrix& K, const Observable& f, unsigned n) {
    return GSequence(K, f, n);
}

/// sum_i w_hat_i^2 [K g_{p+1}^2 - g_p^2](x_hat_i).
double mutation_variance_term(const SelectionOutcome& selected, const GSequence& g, unsigned p);

/// sum_j w_j^2 (E[C_j^2] / beta_j^2 - 1) g_p(x_j)^2 under stochastic rounding.
/// Throws std::invalid_argument when some beta_j <= 0.
double selection_variance_term(const Ensemble& e, std::span<const double> beta, const GSequence& g,
                               unsigned p);
double selection_variance_term(const Ensemble& e, const SelectionPolicy& policy,
                               std::span<const double> v, const GSequence& g, unsigned p);

/// Expected mutation variance given the pre-selection ensemble:
/// sum_j w_j^2 / beta_j * [K g_{p+1}^2 - g_p^2](x_j). Terms with zero local
/// variance count as 0; beta_j = 0 elsewhere gives +infinity.
double conditional_mutation_variance(const Ensemble& e, std::span<const double> beta,
                                     const GSequence& g, unsigned p);

/// beta_j = N w_j sqrt(local_j) / sum_l w_l sqrt(local_l). Throws NumericalError
/// when every local variance vanishes.
std::vector<double> optimal_allocation(const Ensemble& e, const GSequence& g, unsigned p,
                                       double target_total);

struct CheckReport {
    std::string check;
    unsigned n = 0;
    std::string policy;
    double value = 0.0;          ///< MC estimate (mean eta_n(f), or E[M_n^2])
    double reference = 0.0;      ///< exact value, or right-hand side of the identity
    double std_err = 0.0;
    double z = 0.0;
    bool pass = false;
    std::size_t replicates = 0;
    std::size_t extinct = 0;
    double sample_std = 0.0;
};

inline constexpr double kZThreshold = 4.0;

/// Replicate mean of eta_n(f) against nu_0 K^n f, with
/// z = |mean - exact| / (std / sqrt(reps)); fails when z > 4. Needs reps >= 100.
CheckReport check_unbiasedness(const Experiment& experiment, unsigned n, std::size_t reps,
                               const ReplicateOptions& options);

/// Compares the MC estimate of E[M_n^2] with E[M_0^2] plus the per-generation
/// conditional variance terms, evaluated exactly along each replicate and
/// averaged. Fails when the gap exceeds 4 combined standard errors.
CheckReport check_doob_identity(const Experiment& experiment, unsigned n, std::size_t reps,
                                const ReplicateOptions& options);

/// Per-replicate pieces of the Doob identity; exposed for tests.
struct DoobSample {
    double m0_squared = 0.0;
    double mn_squared = 0.0;
    std::vector<double> mutation;   ///< per generation p < n
    std::vector<double> selection;  ///< per generation p < n
};
std::vector<DoobSample> doob_samples(const Experiment& experiment, unsigned n, std::size_t reps,
                                     const ReplicateOptions& options);

/// CSV with header `check,n,policy,value,exact_or_rhs,std_err,z,pass`.
void write_reports(std::ostream& os, std::span<const CheckReport> reports,
                   std::string_view comment = {});

/// Sample mean and unbiased sample standard deviation (compensated sums).
struct SampleStats {
    double mean = 0.0;
    double std = 0.0;
    std::size_t count = 0;
};
SampleStats sample_stats(std::span<const double> xs);

}  // namespace we
