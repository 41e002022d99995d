#include "we/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace we {

double Ensemble::total_weight() const noexcept {
    double s = 0.0;
    for (const auto& p : particles) s += p.weight;
    return s;
}

std::vector<double> Ensemble::measure(std::size_t num_states) const {
    std::vector<double> m(num_states, 0.0);
    for (const auto& p : particles) m.at(p.state) += p.weight;
    return m;
}

// ---------------------------------------------------------------------------

BinPartition::BinPartition(std::vector<std::size_t> bin_of) : bin_of_(std::move(bin_of)) {
    if (bin_of_.empty()) throw std::invalid_argument("BinPartition: empty state space");
    const std::size_t r = *std::max_element(bin_of_.begin(), bin_of_.end()) + 1;
    members_.resize(r);
    for (State x = 0; x < bin_of_.size(); ++x) members_[bin_of_[x]].push_back(x);
    for (std::size_t b = 0; b < r; ++b) {
        if (members_[b].empty()) {
            throw std::invalid_argument("BinPartition: bin " + std::to_string(b + 1) +
                                        " has no states");
        }
    }
}

BinPartition BinPartition::contiguous(std::size_t num_states, std::size_t width) {
    if (width == 0) throw std::invalid_argument("BinPartition: bin width must be positive");
    std::vector<std::size_t> b(num_states);
    for (State x = 0; x < num_states; ++x) b[x] = x / width;
    return BinPartition(std::move(b));
}

BinPartition BinPartition::singletons(std::size_t num_states) {
    return contiguous(num_states, 1);
}

// ---------------------------------------------------------------------------

std::vector<std::size_t> apportion(std::span<const double> shares, std::size_t total) {
    const double sum = std::accumulate(shares.begin(), shares.end(), 0.0);
    if (shares.empty() || !(sum > 0.0)) {
        throw std::invalid_argument("apportion: shares must have positive total");
    }
    std::vector<std::size_t> counts(shares.size());
    std::vector<double> remainder(shares.size());
    std::size_t assigned = 0;
    for (std::size_t i = 0; i < shares.size(); ++i) {
        if (shares[i] < 0.0) throw std::invalid_argument("apportion: negative share");
        const double quota = static_cast<double>(total) * shares[i] / sum;
        counts[i] = static_cast<std::size_t>(std::floor(quota));
        remainder[i] = quota - static_cast<double>(counts[i]);
        assigned += counts[i];
    }
    std::vector<std::size_t> order(shares.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b]; });
    for (std::size_t k = 0; assigned < total; ++k, ++assigned) ++counts[order[k % order.size()]];
    return counts;
}

Ensemble init_ensemble(const Distribution& initial, std::size_t n0, Placement placement,
                       const RngStream& rng) {
    if (n0 == 0) throw std::invalid_argument("init_ensemble: N0 must be positive");
    Ensemble e;
    e.particles.reserve(n0);
    const double w = 1.0 / static_cast<double>(n0);
    if (placement == Placement::Stratified) {
        const auto counts = apportion(initial.values(), n0);
        for (State x = 0; x < counts.size(); ++x) {
            for (std::size_t k = 0; k < counts[x]; ++k) e.particles.push_back({x, w});
        }
    } else {
        std::vector<double> cumulative(initial.size());
        std::partial_sum(initial.values().begin(), initial.values().end(), cumulative.begin());
        State last = 0;
        for (State x = 0; x < initial.size(); ++x) {
            if (initial[x] > 0.0) last = x;
        }
        for (std::size_t j = 0; j < n0; ++j) {
            const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), rng.uniform_at(j));
            const State x = it == cumulative.end() ? last : static_cast<State>(it - cumulative.begin());
            e.particles.push_back({x, w});
        }
    }
    return e;
}

namespace {

std::vector<std::size_t> per_bin_counts(const BinPartition& bins, std::size_t n) {
    if (n < bins.num_bins()) {
        throw std::invalid_argument("stationary_init_ensemble: N = " + std::to_string(n) +
                                    " is smaller than the number of bins " +
                                    std::to_string(bins.num_bins()));
    }
    const std::vector<double> equal(bins.num_bins(), 1.0);
    return apportion(equal, n);
}

void check_mu(const Distribution& mu, const BinPartition& bins) {
    if (mu.size() != bins.num_bins()) {
        throw std::invalid_argument("stationary_init_ensemble: mu has " +
                                    std::to_string(mu.size()) + " entries for " +
                                    std::to_string(bins.num_bins()) + " bins");
    }
}

std::vector<double> within_bin_weights(const BinPartition& bins, std::size_t bin,
                                       const Distribution* within_bin) {
    const auto members = bins.members(bin);
    std::vector<double> w(members.size(), 1.0);
    if (within_bin != nullptr) {
        for (std::size_t k = 0; k < members.size(); ++k) w[k] = (*within_bin)[members[k]];
    }
    const double total = std::accumulate(w.begin(), w.end(), 0.0);
    if (!(total > 0.0)) {
        throw std::invalid_argument("stationary_init_ensemble: placement measure vanishes on bin " +
                                    std::to_string(bin + 1));
    }
    for (double& v : w) v /= total;
    return w;
}

}  // namespace

Ensemble stationary_init_ensemble(const Distribution& mu, const BinPartition& bins, std::size_t n,
                                  Placement placement, const Distribution* within_bin,
                                  const RngStream* rng) {
    check_mu(mu, bins);
    const auto counts = per_bin_counts(bins, n);
    if (placement == Placement::Sampled && rng == nullptr) {
        throw std::invalid_argument("stationary_init_ensemble: sampled placement needs a stream");
    }
    Ensemble e;
    e.particles.reserve(n);
    std::uint64_t draw = 0;
    for (std::size_t r = 0; r < bins.num_bins(); ++r) {
        const auto members = bins.members(r);
        const double w = mu[r] / static_cast<double>(counts[r]);
        std::vector<double> cumulative;
        if (placement == Placement::Sampled) {
            cumulative = within_bin_weights(bins, r, within_bin);
            std::partial_sum(cumulative.begin(), cumulative.end(), cumulative.begin());
        }
        for (std::size_t k = 0; k < counts[r]; ++k) {
            State x;
            if (placement == Placement::Stratified) {
                x = members[k % members.size()];
            } else {
                const double u = rng->uniform_at(draw++);
                auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
                if (it == cumulative.end()) --it;
                x = members[static_cast<std::size_t>(it - cumulative.begin())];
            }
            // Zero-weight particles are never created.
            if (w > 0.0) e.particles.push_back({x, w});
        }
    }
    return e;
}

std::vector<double> stationary_init_mean(const Distribution& mu, const BinPartition& bins,
                                         std::size_t n, Placement placement,
                                         const Distribution* within_bin) {
    check_mu(mu, bins);
    const auto counts = per_bin_counts(bins, n);
    std::vector<double> m(bins.num_states(), 0.0);
    for (std::size_t r = 0; r < bins.num_bins(); ++r) {
        const auto members = bins.members(r);
        if (placement == Placement::Stratified) {
            const double w = mu[r] / static_cast<double>(counts[r]);
            for (std::size_t k = 0; k < counts[r]; ++k) m[members[k % members.size()]] += w;
        } else {
            const auto w = within_bin_weights(bins, r, within_bin);
            for (std::size_t k = 0; k < members.size(); ++k) m[members[k]] += mu[r] * w[k];
        }
    }
    return m;
}

double empirical_estimate(const Ensemble& e, const Observable& f) {
    double s = 0.0;
    for (const auto& p : e.particles) s += p.weight * f[p.state];
    return s;
}

BinTotals bin_totals(const Ensemble& e, const BinPartition& bins) {
    BinTotals t{std::vector<std::size_t>(bins.num_bins(), 0),
                std::vector<double>(bins.num_bins(), 0.0)};
    for (const auto& p : e.particles) {
        const auto r = bins.bin_of(p.state);
        ++t.count[r];
        t.weight[r] += p.weight;
    }
    return t;
}

}  // namespace we
