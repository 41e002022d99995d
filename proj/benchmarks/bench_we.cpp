#include "we/coarse.hpp"
#include "we/engine.hpp"
#include "we/hill.hpp"
#include "we/selection.hpp"

#include <benchmark/benchmark.h>

using namespace we;

namespace {

const std::vector<State> kF{27, 28, 29, 30, 31, 32};

Experiment three_well(PolicyKind kind) {
    StationaryConfig cfg;
    cfg.policy = kind;
    return stationary_experiment(build_three_well_chain().K, Observable::indicator(90, kF),
                                 BinPartition::contiguous(90, 3), cfg, 0);
}

void BM_Select(benchmark::State& state) {
    const auto kind = static_cast<PolicyKind>(state.range(0));
    const auto exp = three_well(kind);
    const auto init = exp.initial(0);
    std::optional<CoarseModel> model;
    if (exp.coarse) model = CoarseModel::from_chain(*exp.coarse, 30);
    const auto v = model ? model->v_row(0) : std::span<const double>{};
    std::uint64_t g = 0;
    for (auto _ : state) {
        auto out = select(init, exp.policy, v, RngStream(0, 0, g++, Purpose::Selection));
        benchmark::DoNotOptimize(out.selected.data());
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(init.size()));
    state.SetLabel(to_string(kind));
}
BENCHMARK(BM_Select)->Arg(static_cast<int>(PolicyKind::Adaptive))->Arg(static_cast<int>(PolicyKind::Traditional));

void BM_Mutate(benchmark::State& state) {
    const KernelSampler sampler(build_three_well_chain().K);
    SelectionOutcome s;
    for (std::size_t i = 0; i < static_cast<std::size_t>(state.range(0)); ++i) s.selected.push_back({i % 90, 1.0});
    std::uint64_t g = 0;
    for (auto _ : state) {
        auto next = mutate(s, sampler, RngStream(0, 0, g++, Purpose::Mutation), 1);
        benchmark::DoNotOptimize(next.particles.data());
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Mutate)->Arg(150)->Arg(10000);

void BM_RunWE(benchmark::State& state) {
    const auto exp = three_well(PolicyKind::Adaptive);
    const unsigned n = static_cast<unsigned>(state.range(0));
    const KernelSampler sampler(exp.K);
    const auto model = CoarseModel::from_chain(*exp.coarse, n);
    std::uint64_t rep = 0;
    for (auto _ : state) {
        RunOptions o;
        o.replicate = rep++;
        auto rec = run_we(sampler, exp.f, exp.policy, &model, exp.initial(o.replicate), n, o);
        benchmark::DoNotOptimize(rec.final_eta);
    }
}
BENCHMARK(BM_RunWE)->Arg(30)->Arg(300)->Unit(benchmark::kMicrosecond);

void BM_ComputeV(benchmark::State& state) {
    const auto exp = three_well(PolicyKind::Adaptive);
    for (auto _ : state) {
        auto t = compute_v(exp.coarse->P, exp.coarse->u, static_cast<unsigned>(state.range(0)));
        benchmark::DoNotOptimize(t.v.data());
    }
}
BENCHMARK(BM_ComputeV)->Arg(30)->Arg(300);

}  // namespace

BENCHMARK_MAIN();
