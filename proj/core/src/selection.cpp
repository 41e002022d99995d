#include "we/selection.hpp"

#include <cmath>
#include <stdexcept>

namespace we {

std::string to_string(PolicyKind kind) {
    switch (kind) {
        case PolicyKind::Adaptive: return "adaptive";
        case PolicyKind::Traditional: return "traditional";
        case PolicyKind::Naive: return "naive";
        case PolicyKind::User: return "user";
    }
    return "unknown";
}

PolicyKind parse_policy_kind(const std::string& name) {
    if (name == "adaptive") return PolicyKind::Adaptive;
    if (name == "traditional") return PolicyKind::Traditional;
    if (name == "naive") return PolicyKind::Naive;
    throw std::invalid_argument("unknown mode '" + name +
                                "' (expected adaptive, traditional or naive)");
}

SelectionPolicy SelectionPolicy::adaptive(BinPartition bins, double target_total,
                                          double floor_per_bin) {
    const double r = static_cast<double>(bins.num_bins());
    if (!(target_total > 0.0)) throw std::invalid_argument("adaptive policy: N must be positive");
    if (!(floor_per_bin > 0.0) || !(floor_per_bin < target_total / r)) {
        throw std::invalid_argument("adaptive policy: need 0 < Ñ < N/R (Ñ = " +
                                    std::to_string(floor_per_bin) +
                                    ", N/R = " + std::to_string(target_total / r) + ")");
    }
    SelectionPolicy p;
    p.kind_ = PolicyKind::Adaptive;
    p.bins_ = std::make_shared<const BinPartition>(std::move(bins));
    p.target_total_ = target_total;
    p.floor_per_bin_ = floor_per_bin;
    return p;
}

SelectionPolicy SelectionPolicy::traditional(BinPartition bins, double per_bin_target) {
    if (!(per_bin_target > 0.0)) {
        throw std::invalid_argument("traditional policy: per-bin target must be positive");
    }
    SelectionPolicy p;
    p.kind_ = PolicyKind::Traditional;
    p.target_total_ = per_bin_target * static_cast<double>(bins.num_bins());
    p.bins_ = std::make_shared<const BinPartition>(std::move(bins));
    p.per_bin_target_ = per_bin_target;
    return p;
}

SelectionPolicy SelectionPolicy::naive() { return {}; }

SelectionPolicy SelectionPolicy::naive(BinPartition bins) {
    SelectionPolicy p;
    p.bins_ = std::make_shared<const BinPartition>(std::move(bins));
    return p;
}

SelectionPolicy SelectionPolicy::user(MeanChildrenFn mean_children) {
    if (!mean_children) throw std::invalid_argument("user policy: empty callback");
    SelectionPolicy p;
    p.kind_ = PolicyKind::User;
    p.user_ = std::move(mean_children);
    return p;
}

// ---------------------------------------------------------------------------

unsigned stochastic_round(double beta, double u) {
    if (!(beta >= 0.0) || !std::isfinite(beta)) {
        throw std::invalid_argument("stochastic_round: beta must be finite and nonnegative");
    }
    const double whole = std::floor(beta);
    const double frac = beta - whole;
    return static_cast<unsigned>(whole) + (u < frac ? 1u : 0u);
}

unsigned stochastic_round(double beta, RngStream& rng) { return stochastic_round(beta, rng.uniform()); }

double stochastic_round_second_moment(double beta) {
    const double whole = std::floor(beta);
    return whole * whole + (2.0 * whole + 1.0) * (beta - whole);
}

std::vector<double> allocate_targets(std::span<const double> bin_weight,
                                     std::span<const double> v, double target_total,
                                     double floor_per_bin) {
    const std::size_t r = bin_weight.size();
    if (v.size() != r) throw std::invalid_argument("allocate_targets: v has wrong length");
    if (r == 0) throw std::invalid_argument("allocate_targets: no bins");
    if (!(floor_per_bin > 0.0) || !(floor_per_bin < target_total / static_cast<double>(r))) {
        throw std::invalid_argument("allocate_targets: need 0 < Ñ < N/R");
    }
    std::vector<double> score(r);
    double denominator = 0.0;
    for (std::size_t b = 0; b < r; ++b) {
        if (!(v[b] >= 0.0)) throw std::invalid_argument("allocate_targets: negative v");
        score[b] = std::sqrt(v[b]) * bin_weight[b];
        denominator += score[b];
    }
    std::vector<double> targets(r, floor_per_bin);
    if (denominator > 0.0) {
        const double spread = target_total - floor_per_bin * static_cast<double>(r);
        for (std::size_t b = 0; b < r; ++b) targets[b] += spread * score[b] / denominator;
    }
    return targets;
}

MeanChildren mean_children(const Ensemble& e, const SelectionPolicy& policy,
                           std::span<const double> v) {
    MeanChildren out;
    out.beta.resize(e.size(), 1.0);
    switch (policy.kind()) {
        case PolicyKind::Naive:
            return out;
        case PolicyKind::User: {
            out.beta = policy.mean_children_fn()(e);
            if (out.beta.size() != e.size()) {
                throw std::invalid_argument("user policy returned the wrong number of means");
            }
            for (double b : out.beta) {
                if (!(b > 0.0) || !std::isfinite(b)) {
                    throw std::invalid_argument("user policy: every mean children count must be > 0");
                }
            }
            return out;
        }
        case PolicyKind::Adaptive:
        case PolicyKind::Traditional:
            break;
    }

    const BinPartition& bins = *policy.bins();
    const auto totals = bin_totals(e, bins);
    if (policy.kind() == PolicyKind::Adaptive) {
        if (v.size() != bins.num_bins()) {
            throw std::invalid_argument("adaptive selection: v_p has " + std::to_string(v.size()) +
                                        " entries for " + std::to_string(bins.num_bins()) + " bins");
        }
        out.bin_targets =
            allocate_targets(totals.weight, v, policy.target_total(), policy.floor_per_bin());
    } else {
        out.bin_targets.assign(bins.num_bins(), policy.per_bin_target());
    }
    for (std::size_t j = 0; j < e.size(); ++j) {
        const auto r = bins.bin_of(e.particles[j].state);
        const double bar = totals.weight[r] / out.bin_targets[r];
        out.beta[j] = e.particles[j].weight / bar;
    }
    return out;
}

SelectionOutcome select(const Ensemble& e, const SelectionPolicy& policy,
                        std::span<const double> v, const RngStream& rng,
                        double child_weight_scale) {
    if (e.empty()) throw std::invalid_argument("select: empty ensemble");
    SelectionOutcome out;
    auto means = mean_children(e, policy, v);
    out.bin_targets = std::move(means.bin_targets);
    out.mean_children = std::move(means.beta);
    out.children_count.resize(e.size());
    out.selected.reserve(e.size());
    out.parent_of.reserve(e.size());

    const bool binned = policy.kind() == PolicyKind::Adaptive ||
                        policy.kind() == PolicyKind::Traditional;
    std::vector<double> bar;
    if (binned) {
        const auto totals = bin_totals(e, *policy.bins());
        bar.resize(totals.weight.size());
        for (std::size_t r = 0; r < bar.size(); ++r) bar[r] = totals.weight[r] / out.bin_targets[r];
    }

    for (std::size_t j = 0; j < e.size(); ++j) {
        const Particle& parent = e.particles[j];
        const double beta = out.mean_children[j];
        const unsigned c = policy.kind() == PolicyKind::Naive
                               ? 1u
                               : stochastic_round(beta, rng.uniform_at(j));
        out.children_count[j] = c;
        // Binned policies give every child in B^r the common weight w_bar_r.
        const double child_weight =
            (binned ? bar[policy.bins()->bin_of(parent.state)] : parent.weight / beta) *
            child_weight_scale;
        for (unsigned k = 0; k < c; ++k) {
            out.selected.push_back({parent.state, child_weight});
            out.parent_of.push_back(j);
        }
    }
    return out;
}

}  // namespace we
