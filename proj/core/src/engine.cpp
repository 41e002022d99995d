#include "we/engine.hpp"

#include "we/csv.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <ostream>
#include <stdexcept>
#include <thread>

namespace we {

Ensemble mutate(const SelectionOutcome& selection, const KernelSampler& sampler,
                const RngStream& rng, unsigned next_generation) {
    Ensemble next;
    next.generation = next_generation;
    next.particles.resize(selection.selected.size());
    for (std::size_t i = 0; i < selection.selected.size(); ++i) {
        const Particle& child = selection.selected[i];
        next.particles[i] = {sampler.sample(child.state, rng.uniform_at(i)), child.weight};
    }
    return next;
}

Ensemble mutate(const SelectionOutcome& selection, const TransitionMatrix& K,
                const RngStream& rng, unsigned next_generation) {
    return mutate(selection, KernelSampler(K), rng, next_generation);
}

namespace {

GenerationRecord record_of(unsigned p, const Ensemble& e, const Observable& f,
                           const BinPartition* bins) {
    GenerationRecord g;
    g.p = p;
    g.eta_f = empirical_estimate(e, f);
    g.total_weight = e.total_weight();
    g.num_particles = e.size();
    if (bins != nullptr) {
        auto totals = bin_totals(e, *bins);
        g.bin_count = std::move(totals.count);
        g.bin_weight = std::move(totals.weight);
    }
    return g;
}

}  // namespace

RunRecord run_we(const KernelSampler& sampler, const Observable& f, const SelectionPolicy& policy,
                 const CoarseModel* coarse, Ensemble init, unsigned n, const RunOptions& options) {
    if (f.size() != sampler.size()) throw std::invalid_argument("run_we: observable has wrong size");
    if (policy.kind() == PolicyKind::Adaptive) {
        // n = 0 never selects, so no v table is needed.
        if (n > 0 && coarse == nullptr) {
            throw std::invalid_argument("run_we: adaptive policy needs a coarse model");
        }
        if (n > 0 && coarse->horizon != n) {
            throw std::invalid_argument("run_we: coarse model built for horizon " +
                                        std::to_string(coarse->horizon) + ", run horizon is " +
                                        std::to_string(n));
        }
    }
    for (const auto& p : init.particles) {
        if (p.state >= sampler.size() || !(p.weight > 0.0)) {
            throw std::invalid_argument("run_we: initial particle outside the state space or "
                                        "with nonpositive weight");
        }
    }

    RunRecord rec;
    rec.replicate = options.replicate;
    Ensemble current = std::move(init);
    current.generation = 0;
    const BinPartition* bins = policy.bins();
    for (unsigned p = 0;; ++p) {
        rec.generations.push_back(record_of(p, current, f, bins));
        if (current.empty()) {
            rec.extinct = true;
            break;
        }
        if (p == n) break;
        std::span<const double> v;
        if (policy.kind() == PolicyKind::Adaptive) v = coarse->v_row(p);
        const RngStream select_rng(options.seed, options.replicate, p, Purpose::Selection);
        const auto outcome = select(current, policy, v, select_rng, options.child_weight_scale);
        if (options.observer) options.observer(p, current, outcome);
        const RngStream mutate_rng(options.seed, options.replicate, p, Purpose::Mutation);
        current = mutate(outcome, sampler, mutate_rng, p + 1);
    }
    rec.final_eta = rec.extinct ? 0.0 : rec.generations.back().eta_f;
    rec.final_ensemble = std::move(current);
    return rec;
}

RunRecord run_we(const TransitionMatrix& K, const Observable& f, const SelectionPolicy& policy,
                 const CoarseModel* coarse, Ensemble init, unsigned n, const RunOptions& options) {
    return run_we(KernelSampler(K), f, policy, coarse, std::move(init), n, options);
}

void write_run_records(std::ostream& os, std::span<const RunRecord> records,
                       std::string_view comment, bool final_only) {
    csv::write_comment(os, comment);
    os << "replicate,p,eta_f,total_weight,num_particles,extinct\n";
    for (const auto& r : records) {
        const std::size_t first = final_only && !r.generations.empty() ? r.generations.size() - 1 : 0;
        for (std::size_t k = first; k < r.generations.size(); ++k) {
            const auto& g = r.generations[k];
            os << r.replicate << ',' << g.p << ',' << csv::format_double(g.eta_f) << ','
               << csv::format_double(g.total_weight) << ',' << g.num_particles << ','
               << (r.extinct ? 1 : 0) << '\n';
        }
    }
}

void parallel_for(std::size_t count, unsigned threads,
                  const std::function<void(std::size_t)>& body) {
    const unsigned workers =
        static_cast<unsigned>(std::min<std::size_t>(std::max(1u, threads), count));
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i) body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < count; i = next++) {
                try {
                    body(i);
                } catch (...) {
                    std::lock_guard lock(failure_mutex);
                    if (!failure) failure = std::current_exception();
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
}

double exact_reference(const Experiment& experiment, unsigned n) {
    std::vector<double> nu = experiment.initial_mean;
    for (unsigned k = 0; k < n; ++k) nu = apply_left(nu, experiment.K);
    return integrate(nu, experiment.f);
}

std::vector<RunRecord> run_replicates(const Experiment& experiment, unsigned n, std::size_t reps,
                                      const ReplicateOptions& options) {
    if (!experiment.initial) throw std::invalid_argument("run_replicates: no initial ensemble builder");
    std::optional<CoarseModel> coarse;
    if (experiment.policy.kind() == PolicyKind::Adaptive) {
        if (!experiment.coarse) {
            throw std::invalid_argument("run_replicates: adaptive policy needs a coarse model");
        }
        if (n > 0) coarse = CoarseModel::from_chain(*experiment.coarse, n);
    }
    const KernelSampler sampler(experiment.K);
    std::vector<RunRecord> out(reps);
    parallel_for(reps, options.threads, [&](std::size_t i) {
        RunOptions run;
        run.seed = options.seed;
        run.replicate = options.first_replicate + i;
        run.child_weight_scale = options.child_weight_scale;
        if (options.observer_for) run.observer = options.observer_for(run.replicate);
        out[i] = run_we(sampler, experiment.f, experiment.policy, coarse ? &*coarse : nullptr,
                        experiment.initial(run.replicate), n, run);
    });
    return out;
}

}  // namespace we
