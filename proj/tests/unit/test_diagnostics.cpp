#include "we/diagnostics.hpp"
#include "we/error.hpp"
#include "we/hill.hpp"

#include <doctest.h>

#include <cmath>
#include <numeric>
#include <stdexcept>

using namespace we;

namespace {

const std::vector<State> kF{27, 28, 29, 30, 31, 32};

Experiment three_well(PolicyKind kind, std::uint64_t seed) {
    StationaryConfig cfg;
    cfg.policy = kind;
    return stationary_experiment(build_three_well_chain().K, Observable::indicator(90, kF),
                                 BinPartition::contiguous(90, 3), cfg, seed);
}

}  // namespace

TEST_CASE("sample_stats") {
    const std::vector<double> xs{1.0, 2.0, 3.0, 4.0};
    const auto s = sample_stats(xs);
    CHECK(s.mean == 2.5);
    CHECK(s.std == doctest::Approx(std::sqrt(5.0 / 3.0)));
    CHECK(sample_stats(std::vector<double>{7.0}).std == 0.0);
    CHECK(sample_stats(std::vector<double>{}).count == 0);
}

TEST_CASE("g sequence") {
    const TransitionMatrix K{{0.9, 0.1}, {0.2, 0.8}};
    const Observable f{0.0, 1.0};
    const GSequence g(K, f, 2);
    CHECK(g.horizon() == 2);
    CHECK(g[2][1] == 1.0);
    CHECK(g[1][0] == doctest::Approx(0.1));
    CHECK(g[0][0] == doctest::Approx(0.9 * 0.1 + 0.1 * 0.8));
    // local variance at p = 1 is the Bernoulli variance K(x, 2)(1 - K(x, 2)).
    CHECK(g.local_variance(1)[0] == doctest::Approx(0.09));
    CHECK(g.local_variance(1)[1] == doctest::Approx(0.16));
    CHECK_THROWS(g.local_variance(2));

    const GSequence id(TransitionMatrix::identity(2), Observable{3.0, 4.0}, 5);
    for (unsigned p = 0; p <= 5; ++p) CHECK(id[p][1] == 4.0);
}

TEST_CASE("variance terms") {
    const TransitionMatrix K{{0.9, 0.1}, {0.0, 1.0}};
    const GSequence g(K, Observable{0.0, 1.0}, 1);
    SelectionOutcome out;
    out.selected = {{0, 1.0}};
    CHECK(mutation_variance_term(out, g, 0) == doctest::Approx(0.09));
    out.selected = {{0, 0.5}, {0, 0.5}, {1, 0.3}};
    CHECK(mutation_variance_term(out, g, 0) == doctest::Approx(2 * 0.25 * 0.09));

    Ensemble e;
    e.particles = {{1, 1.0}};
    const std::vector<double> half{0.5};
    CHECK(selection_variance_term(e, half, g, 0) == doctest::Approx(1.0));
    const std::vector<double> two{2.0};
    CHECK(selection_variance_term(e, two, g, 0) == doctest::Approx(0.0));
    const std::vector<double> zero{0.0};
    CHECK_THROWS_AS(selection_variance_term(e, zero, g, 0), std::invalid_argument);
    CHECK(selection_variance_term(e, SelectionPolicy::naive(), {}, g, 0) == 0.0);

    Ensemble e0;
    e0.particles = {{0, 1.0}};
    CHECK(conditional_mutation_variance(e0, half, g, 0) == doctest::Approx(0.09 / 0.5));
}

TEST_CASE("optimal allocation") {
    const TransitionMatrix K{{0.5, 0.5}, {0.5, 0.5}};
    const GSequence g(K, Observable{0.0, 1.0}, 1);
    Ensemble e;
    e.particles = {{0, 0.75}, {1, 0.25}};
    const auto beta = optimal_allocation(e, g, 0, 4.0);
    CHECK(beta[0] == doctest::Approx(3.0));
    CHECK(beta[1] == doctest::Approx(1.0));

    // Grid search over beta_1 + beta_2 = 4 never beats it.
    const double best = conditional_mutation_variance(e, beta, g, 0);
    for (double b = 0.05; b < 4.0; b += 0.05) {
        const std::vector<double> alt{b, 4.0 - b};
        CHECK(conditional_mutation_variance(e, alt, g, 0) >= best - 1e-15);
    }

    const GSequence flat(TransitionMatrix::identity(2), Observable{0.0, 1.0}, 1);
    CHECK_THROWS_AS(optimal_allocation(e, flat, 0, 4.0), NumericalError);
}

TEST_CASE("optimal allocation beats traditional on the three-well chain") {
    const auto exp = three_well(PolicyKind::Traditional, 2);
    const unsigned n = 10;
    const GSequence g(exp.K, exp.f, n);
    const auto init = exp.initial(0);
    const auto trad = mean_children(init, exp.policy, {});
    const double total = std::accumulate(trad.beta.begin(), trad.beta.end(), 0.0);
    const auto opt = optimal_allocation(init, g, n - 1, total);
    CHECK(std::accumulate(opt.begin(), opt.end(), 0.0) == doctest::Approx(total));
    const double v_opt = conditional_mutation_variance(init, opt, g, n - 1);
    const double v_trad = conditional_mutation_variance(init, trad.beta, g, n - 1);
    CHECK(v_opt <= v_trad);
    CHECK(v_opt < 0.9 * v_trad);
}

TEST_CASE("Doob identity") {
    SUBCASE("n = 0 holds exactly") {
        const auto exp = three_well(PolicyKind::Adaptive, 1);
        const auto r = check_doob_identity(exp, 0, 100, {});
        CHECK(r.pass);
        CHECK(r.value == r.reference);
    }
    SUBCASE("single naive particle") {
        // M_n = f(X_n) for one walker; E[f(X_1)^2] = E[g_0^2] + E[local variance].
        Experiment exp;
        exp.K = TransitionMatrix{{0.9, 0.1}, {0.2, 0.8}};
        exp.f = Observable{0.0, 1.0};
        exp.policy = SelectionPolicy::naive();
        exp.initial = [](std::uint64_t) {
            Ensemble e;
            e.particles = {{0, 1.0}};
            return e;
        };
        exp.initial_mean = {1.0, 0.0};
        ReplicateOptions o;
        o.seed = 4;
        const auto samples = doob_samples(exp, 1, 10, o);
        for (const auto& s : samples) {
            CHECK(s.m0_squared == doctest::Approx(0.01));
            CHECK(s.mutation[0] == doctest::Approx(0.09));
            CHECK(s.selection[0] == 0.0);
        }
        const auto r = check_doob_identity(exp, 1, 20000, o);
        CHECK(r.reference == doctest::Approx(0.1));
        CHECK(r.pass);
    }
    SUBCASE("three-well, adaptive and traditional") {
        for (auto kind : {PolicyKind::Adaptive, PolicyKind::Traditional}) {
            ReplicateOptions o;
            o.seed = 8;
            o.threads = 4;
            const auto r = check_doob_identity(three_well(kind, 8), 5, 3000, o);
            INFO(to_string(kind), " z=", r.z);
            CHECK(r.pass);
        }
    }
}

TEST_CASE("unbiasedness check") {
    const auto exp = three_well(PolicyKind::Adaptive, 6);
    ReplicateOptions o;
    o.seed = 6;
    o.threads = 4;
    CHECK_THROWS_AS(check_unbiasedness(exp, 1, 99, o), std::invalid_argument);
    const auto good = check_unbiasedness(exp, 5, 1000, o);
    CHECK(good.pass);
    CHECK(good.reference == doctest::Approx(exact_reference(exp, 5)));

    // Negative control: doubling every child weight must be caught.
    o.child_weight_scale = 2.0;
    const auto bad = check_unbiasedness(exp, 5, 1000, o);
    CHECK_FALSE(bad.pass);
    CHECK(bad.z > 4.0);
}
