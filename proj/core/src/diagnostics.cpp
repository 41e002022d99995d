#include "we/diagnostics.hpp"

#include "we/csv.hpp"
#include "we/error.hpp"

#include <cmath>
#include <ostream>
#include <stdexcept>

namespace we {

namespace {

// Neumaier-compensated running sum.
class CompensatedSum {
public:
    void add(double x) {
        const double t = sum_ + x;
        if (std::abs(sum_) >= std::abs(x)) {
            carry_ += (sum_ - t) + x;
        } else {
            carry_ += (x - t) + sum_;
        }
        sum_ = t;
    }
    double value() const { return sum_ + carry_; }

private:
    double sum_ = 0.0;
    double carry_ = 0.0;
};

// |value - reference| / se.
double z_score(double value, double reference, double se) {
    const double diff = std::abs(value - reference);
    if (se > 0.0) return diff / se;
    return diff == 0.0 ? 0.0 : INFINITY;
}

}  // namespace

SampleStats sample_stats(std::span<const double> xs) {
    SampleStats s;
    s.count = xs.size();
    if (xs.empty()) return s;
    CompensatedSum sum;
    for (double x : xs) sum.add(x);
    s.mean = sum.value() / static_cast<double>(xs.size());
    if (xs.size() > 1) {
        CompensatedSum sq;
        for (double x : xs) sq.add((x - s.mean) * (x - s.mean));
        s.std = std::sqrt(sq.value() / static_cast<double>(xs.size() - 1));
    }
    return s;
}

// ---------------------------------------------------------------------------

GSequence::GSequence(const TransitionMatrix& K, const Observable& f, unsigned n) {
    if (f.size() != K.size()) throw std::invalid_argument("GSequence: observable has wrong size");
    g_.resize(n + 1);
    g_[n] = f;
    for (unsigned p = n; p > 0; --p) g_[p - 1] = apply_right(K, g_[p]);
    local_.reserve(n);
    for (unsigned p = 0; p < n; ++p) {
        const auto ahead = apply_right(K, g_[p + 1].squared());
        std::vector<double> lv(K.size());
        for (State x = 0; x < K.size(); ++x) lv[x] = ahead[x] - g_[p][x] * g_[p][x];
        local_.emplace_back(std::move(lv));
    }
}

double mutation_variance_term(const SelectionOutcome& selected, const GSequence& g, unsigned p) {
    const auto& local = g.local_variance(p);
    double s = 0.0;
    for (const auto& child : selected.selected) s += child.weight * child.weight * local[child.state];
    return s;
}

double selection_variance_term(const Ensemble& e, std::span<const double> beta, const GSequence& g,
                               unsigned p) {
    if (beta.size() != e.size()) {
        throw std::invalid_argument("selection_variance_term: beta has wrong length");
    }
    const auto& gp = g[p];
    double s = 0.0;
    for (std::size_t j = 0; j < e.size(); ++j) {
        const double b = beta[j];
        if (!(b > 0.0)) {
            throw std::invalid_argument("selection_variance_term: particle " + std::to_string(j) +
                                        " has mean children count " + std::to_string(b));
        }
        const double w = e.particles[j].weight;
        const double gx = gp[e.particles[j].state];
        const double ratio = stochastic_round_second_moment(b) / (b * b) - 1.0;
        s += w * w * ratio * gx * gx;
    }
    return s;
}

double selection_variance_term(const Ensemble& e, const SelectionPolicy& policy,
                               std::span<const double> v, const GSequence& g, unsigned p) {
    return selection_variance_term(e, mean_children(e, policy, v).beta, g, p);
}

double conditional_mutation_variance(const Ensemble& e, std::span<const double> beta,
                                     const GSequence& g, unsigned p) {
    if (beta.size() != e.size()) {
        throw std::invalid_argument("conditional_mutation_variance: beta has wrong length");
    }
    const auto& local = g.local_variance(p);
    double s = 0.0;
    for (std::size_t j = 0; j < e.size(); ++j) {
        const double lv = local[e.particles[j].state];
        // A particle with nothing left to vary contributes 0 even when beta_j = 0.
        if (lv == 0.0) continue;
        if (!(beta[j] > 0.0)) return INFINITY;
        const double w = e.particles[j].weight;
        s += w * w / beta[j] * lv;
    }
    return s;
}

std::vector<double> optimal_allocation(const Ensemble& e, const GSequence& g, unsigned p,
                                       double target_total) {
    const auto& local = g.local_variance(p);
    std::vector<double> score(e.size());
    double denominator = 0.0;
    for (std::size_t j = 0; j < e.size(); ++j) {
        // Jensen makes local >= 0 up to roundoff.
        const double lv = std::max(local[e.particles[j].state], 0.0);
        score[j] = e.particles[j].weight * std::sqrt(lv);
        denominator += score[j];
    }
    if (!(denominator > 0.0)) {
        throw NumericalError("optimal_allocation: every local variance vanishes; any allocation "
                             "is optimal");
    }
    for (double& s : score) s = target_total * s / denominator;
    return score;
}

// ---------------------------------------------------------------------------

CheckReport check_unbiasedness(const Experiment& experiment, unsigned n, std::size_t reps,
                               const ReplicateOptions& options) {
    if (reps < 100) throw std::invalid_argument("check_unbiasedness: needs at least 100 replicates");
    const auto runs = run_replicates(experiment, n, reps, options);
    std::vector<double> eta(runs.size());
    CheckReport r;
    for (std::size_t i = 0; i < runs.size(); ++i) {
        eta[i] = runs[i].final_eta;
        if (runs[i].extinct) ++r.extinct;
    }
    const auto stats = sample_stats(eta);
    r.check = "unbiasedness";
    r.n = n;
    r.policy = to_string(experiment.policy.kind());
    r.value = stats.mean;
    r.reference = exact_reference(experiment, n);
    r.sample_std = stats.std;
    r.replicates = reps;
    r.std_err = stats.std / std::sqrt(static_cast<double>(reps));
    r.z = z_score(r.value, r.reference, r.std_err);
    r.pass = r.z <= kZThreshold;
    return r;
}

std::vector<DoobSample> doob_samples(const Experiment& experiment, unsigned n, std::size_t reps,
                                     const ReplicateOptions& options) {
    const GSequence g(experiment.K, experiment.f, n);
    std::vector<DoobSample> samples(reps);
    ReplicateOptions opts = options;
    opts.observer_for = [&](std::uint64_t replicate) -> SelectionObserver {
        auto* sample = &samples[replicate - options.first_replicate];
        sample->mutation.assign(n, 0.0);
        sample->selection.assign(n, 0.0);
        return [sample, &g](unsigned p, const Ensemble& before, const SelectionOutcome& out) {
            sample->selection[p] = selection_variance_term(before, out.mean_children, g, p);
            sample->mutation[p] = mutation_variance_term(out, g, p);
        };
    };
    // M_0 needs the initial ensemble; rebuilding it is cheap and deterministic.
    const auto runs = run_replicates(experiment, n, reps, opts);
    for (std::size_t i = 0; i < reps; ++i) {
        const auto init = experiment.initial(options.first_replicate + i);
        const double m0 = empirical_estimate(init, g[0]);
        samples[i].m0_squared = m0 * m0;
        samples[i].mn_squared = runs[i].final_eta * runs[i].final_eta;
        if (samples[i].mutation.empty()) {
            samples[i].mutation.assign(n, 0.0);
            samples[i].selection.assign(n, 0.0);
        }
    }
    return samples;
}

CheckReport check_doob_identity(const Experiment& experiment, unsigned n, std::size_t reps,
                                const ReplicateOptions& options) {
    const auto samples = doob_samples(experiment, n, reps, options);
    std::vector<double> lhs(reps), rhs(reps);
    for (std::size_t i = 0; i < reps; ++i) {
        CompensatedSum s;
        s.add(samples[i].m0_squared);
        for (unsigned p = 0; p < n; ++p) {
            s.add(samples[i].mutation[p]);
            s.add(samples[i].selection[p]);
        }
        lhs[i] = samples[i].mn_squared;
        rhs[i] = s.value();
    }
    const auto l = sample_stats(lhs);
    const auto r = sample_stats(rhs);
    CheckReport rep;
    rep.check = "doob_identity";
    rep.n = n;
    rep.policy = to_string(experiment.policy.kind());
    rep.value = l.mean;
    rep.reference = r.mean;
    rep.sample_std = l.std;
    rep.replicates = reps;
    rep.std_err = std::sqrt(l.std * l.std / static_cast<double>(reps) +
                            r.std * r.std / static_cast<double>(reps));
    rep.z = z_score(rep.value, rep.reference, rep.std_err);
    // When both sides are deterministic (n = 0, or a deterministic chain), the
    // identity must hold to roundoff.
    if (rep.std_err == 0.0) {
        rep.pass = std::abs(rep.value - rep.reference) <= 1e-12 * std::max(1.0, std::abs(rep.reference));
        rep.z = 0.0;
    } else {
        rep.pass = rep.z <= kZThreshold;
    }
    return rep;
}

void write_reports(std::ostream& os, std::span<const CheckReport> reports,
                   std::string_view comment) {
    csv::write_comment(os, comment);
    os << "check,n,policy,value,exact_or_rhs,std_err,z,pass\n";
    for (const auto& r : reports) {
        os << r.check << ',' << r.n << ',' << r.policy << ',' << csv::format_double(r.value) << ','
           << csv::format_double(r.reference) << ',' << csv::format_double(r.std_err) << ','
           << csv::format_double(r.z) << ',' << (r.pass ? 1 : 0) << '\n';
    }
}

}  // namespace we
