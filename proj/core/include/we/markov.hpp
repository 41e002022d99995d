#pragma once

// Finite-state Markov chains: transition matrices, distributions, observables
// and the kernel algebra between them. States are 0-based here; every file
// and command-line surface converts to 1-based indices.

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace we {

using State = std::size_t;

/// Dense, row-major, row-stochastic matrix. Immutable after construction.
class TransitionMatrix {
public:
    static constexpr double kRowSumTolerance = 1e-12;

    TransitionMatrix() = default;

    /// Validates nonnegativity and row sums (|sum - 1| <= row_tolerance).
    TransitionMatrix(std::size_t size, std::vector<double> row_major,
                     double row_tolerance = kRowSumTolerance);
    TransitionMatrix(std::initializer_list<std::initializer_list<double>> rows);

    static TransitionMatrix identity(std::size_t size);

    std::size_t size() const noexcept { return size_; }
    double operator()(State from, State to) const { return entries_[from * size_ + to]; }
    std::span<const double> row(State from) const {
        return {entries_.data() + from * size_, size_};
    }
    std::span<const double> entries() const noexcept { return entries_; }

    /// Matrix product; the result is checked against a looser 1e-10 row tolerance.
    TransitionMatrix operator*(const TransitionMatrix& rhs) const;

    friend bool operator==(const TransitionMatrix&, const TransitionMatrix&) = default;

private:
    std::size_t size_ = 0;
    std::vector<double> entries_;
};

/// Probability vector over states.
class Distribution {
public:
    static constexpr double kMassTolerance = 1e-12;

    Distribution() = default;
    explicit Distribution(std::vector<double> mass, double tolerance = kMassTolerance);
    Distribution(std::initializer_list<double> mass) : Distribution(std::vector<double>(mass)) {}

    static Distribution point_mass(std::size_t size, State at);
    static Distribution uniform(std::size_t size);

    std::size_t size() const noexcept { return mass_.size(); }
    double operator[](State x) const { return mass_[x]; }
    std::span<const double> values() const noexcept { return mass_; }

    /// Mass of a set of states.
    double mass_of(std::span<const State> states) const;

private:
    std::vector<double> mass_;
};

/// Real function on the state space; all values finite.
class Observable {
public:
    Observable() = default;
    explicit Observable(std::vector<double> values);
    Observable(std::initializer_list<double> values) : Observable(std::vector<double>(values)) {}

    static Observable constant(std::size_t size, double c);
    static Observable indicator(std::size_t size, std::span<const State> states);

    std::size_t size() const noexcept { return values_.size(); }
    double operator[](State x) const { return values_[x]; }
    std::span<const double> values() const noexcept { return values_; }

    /// Entrywise square.
    Observable squared() const;

private:
    std::vector<double> values_;
};

/// (Kf)(x) = sum_y K(x,y) f(y).
Observable apply_right(const TransitionMatrix& K, const Observable& f);

/// (zeta K)(y) = sum_x zeta(x) K(x,y).
Distribution apply_left(const Distribution& zeta, const TransitionMatrix& K);

/// Left action on an arbitrary finite signed measure (e.g. an empirical one).
std::vector<double> apply_left(std::span<const double> measure, const TransitionMatrix& K);

/// zeta(f) = sum_x zeta(x) f(x); works for any measure given as a vector.
double integrate(std::span<const double> measure, const Observable& f);
inline double integrate(const Distribution& zeta, const Observable& f) {
    return integrate(zeta.values(), f);
}

/// K^n by repeated squaring; K^0 is the identity.
TransitionMatrix power(const TransitionMatrix& K, unsigned n);

struct StationaryOptions {
    double tolerance = 1e-12;
    std::size_t max_iterations = 1'000'000;
    /// Chains up to this size are solved directly before iterating.
    std::size_t dense_limit = 2000;
};

/// Normalized left eigenvector for eigenvalue 1. Throws ConvergenceError when
/// max|pi K - pi| cannot be pushed below options.tolerance.
Distribution stationary(const TransitionMatrix& K, const StationaryOptions& options = {});

/// max|pi K - pi|.
double stationary_residual(const Distribution& pi, const TransitionMatrix& K);

/// Modulus of the second-largest eigenvalue (by modulus); 0 for a 1-state chain.
double second_eigenvalue_modulus(const TransitionMatrix& P);

/// Inverse-CDF sampler over the rows of a transition matrix.
class KernelSampler {
public:
    explicit KernelSampler(const TransitionMatrix& K);

    /// Next state from `from`, given a uniform variate u in [0, 1).
    /// Returns the first y with u < sum_{z<=y} K(from,z); zero-probability
    /// states are never returned.
    State sample(State from, double u) const;

    std::size_t size() const noexcept { return size_; }

private:
    std::size_t size_;
    std::vector<double> cumulative_;
    std::vector<State> last_positive_;
};

struct ThreeWellChain {
    TransitionMatrix Q;  ///< single-step chain
    TransitionMatrix K;  ///< resampling kernel Q^lag
};

/// 90-state birth-death chain with three potential wells:
/// Q(i,i+1) = 2/5 + m(i)/5, Q(i,i-1) = 2/5 - m(i)/5, m(j) = sin(6 pi j / 90)
/// (1-based i). Missing boundary moves are absorbed into the diagonal.
ThreeWellChain build_three_well_chain(unsigned lag = 4);

inline constexpr std::size_t kThreeWellStates = 90;

}  // namespace we
