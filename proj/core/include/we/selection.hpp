#pragma once

// Selection step of a weighted ensemble: per-particle mean children counts,
// stochastic rounding of those means to integers, and reweighting of children
// by parent weight / mean children count.

#include "we/ensemble.hpp"
#include "we/rng.hpp"

#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace we {

enum class PolicyKind { Adaptive, Traditional, Naive, User };

std::string to_string(PolicyKind kind);
PolicyKind parse_policy_kind(const std::string& name);

/// Supplies beta_j > 0 for every particle of the ensemble at generation p.
using MeanChildrenFn = std::function<std::vector<double>(const Ensemble&)>;

/// How many children each particle receives in expectation.
///
/// - Adaptive: bin targets (N - Ñ R) sqrt(v_p^r) w_r / sum_s sqrt(v_p^s) w_s + Ñ,
///   with w_r the bin's particle weight; needs the coarse v_p table.
/// - Traditional: the same target for every occupied bin.
/// - Naive: every particle is copied exactly once.
/// - User: beta supplied by a callback; children get weight w_j / beta_j.
class SelectionPolicy {
public:
    static SelectionPolicy adaptive(BinPartition bins, double target_total, double floor_per_bin);
    static SelectionPolicy traditional(BinPartition bins, double per_bin_target);
    static SelectionPolicy naive();
    /// Naive policy that still carries bins for per-bin bookkeeping.
    static SelectionPolicy naive(BinPartition bins);
    static SelectionPolicy user(MeanChildrenFn mean_children);

    PolicyKind kind() const noexcept { return kind_; }
    const BinPartition* bins() const noexcept { return bins_.get(); }
    double target_total() const noexcept { return target_total_; }
    double floor_per_bin() const noexcept { return floor_per_bin_; }
    double per_bin_target() const noexcept { return per_bin_target_; }
    const MeanChildrenFn& mean_children_fn() const noexcept { return user_; }

private:
    PolicyKind kind_ = PolicyKind::Naive;
    std::shared_ptr<const BinPartition> bins_;
    double target_total_ = 0.0;
    double floor_per_bin_ = 0.0;
    double per_bin_target_ = 0.0;
    MeanChildrenFn user_;
};

struct SelectionOutcome {
    std::vector<Particle> selected;           ///< children, grouped by parent
    std::vector<std::size_t> parent_of;       ///< per child: index into the input ensemble
    std::vector<unsigned> children_count;     ///< per parent: C_p^j
    std::vector<double> mean_children;        ///< per parent: beta_p^j
    std::vector<double> bin_targets;          ///< per bin N_p^r (empty for naive/user)
};

/// C in {floor(beta), floor(beta)+1} with E[C] = beta, given u uniform on [0,1).
unsigned stochastic_round(double beta, double u);
unsigned stochastic_round(double beta, RngStream& rng);

/// E[C^2] of the stochastic-rounding law: floor^2 + (2 floor + 1)(beta - floor).
double stochastic_round_second_moment(double beta);

/// Per-bin targets N_p^r. Requires 0 < Ñ < N/R and v >= 0. When no occupied
/// bin has positive v, every bin gets Ñ.
std::vector<double> allocate_targets(std::span<const double> bin_weight,
                                     std::span<const double> v, double target_total,
                                     double floor_per_bin);

/// beta_p^j for every particle of a nonempty ensemble, plus the bin targets used.
struct MeanChildren {
    std::vector<double> beta;
    std::vector<double> bin_targets;
};
MeanChildren mean_children(const Ensemble& e, const SelectionPolicy& policy,
                           std::span<const double> v);

/// One selection step. `v` is the coarse v_p row (adaptive only). Draw j of
/// `rng` decides the rounding of particle j. `child_weight_scale` multiplies
/// every child weight and exists only as a negative-control hook (any value
/// other than 1 breaks unbiasedness).
SelectionOutcome select(const Ensemble& e, const SelectionPolicy& policy,
                        std::span<const double> v, const RngStream& rng,
                        double child_weight_scale = 1.0);

}  // namespace we
