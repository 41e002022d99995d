#include "we/markov.hpp"

#include "we/error.hpp"

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace we {

namespace {

using RowMajorMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

void require_same_size(std::size_t a, std::size_t b, const char* what) {
    if (a != b) {
        throw std::invalid_argument(std::string(what) + ": dimension mismatch (" +
                                    std::to_string(a) + " vs " + std::to_string(b) + ")");
    }
}

Eigen::Map<const RowMajorMatrix> as_eigen(const TransitionMatrix& K) {
    return {K.entries().data(), static_cast<Eigen::Index>(K.size()),
            static_cast<Eigen::Index>(K.size())};
}

std::vector<double> left_step(std::span<const double> measure, const TransitionMatrix& K) {
    const std::size_t n = K.size();
    std::vector<double> out(n, 0.0);
    for (State x = 0; x < n; ++x) {
        const double m = measure[x];
        if (m == 0.0) continue;
        const auto row = K.row(x);
        for (State y = 0; y < n; ++y) out[y] += m * row[y];
    }
    return out;
}

double residual_of(std::span<const double> pi, const TransitionMatrix& K) {
    const auto next = left_step(pi, K);
    double r = 0.0;
    for (std::size_t i = 0; i < next.size(); ++i) r = std::max(r, std::abs(next[i] - pi[i]));
    return r;
}

// Solves pi (K - I) = 0, sum(pi) = 1 by replacing one balance equation with
// the normalization. Returns an empty vector when the system is singular.
std::vector<double> dense_stationary(const TransitionMatrix& K) {
    const auto n = static_cast<Eigen::Index>(K.size());
    Eigen::MatrixXd A = as_eigen(K).transpose();
    A -= Eigen::MatrixXd::Identity(n, n);
    A.row(n - 1).setOnes();
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
    rhs(n - 1) = 1.0;

    Eigen::FullPivLU<Eigen::MatrixXd> lu(A);
    if (!lu.isInvertible()) return {};
    Eigen::VectorXd x = lu.solve(rhs);

    std::vector<double> pi(static_cast<std::size_t>(n));
    double total = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        double v = x(i);
        if (!std::isfinite(v) || v < -1e-10) return {};
        v = std::max(v, 0.0);
        pi[static_cast<std::size_t>(i)] = v;
        total += v;
    }
    if (!(total > 0.0)) return {};
    for (double& v : pi) v /= total;
    return pi;
}

}  // namespace

// ---------------------------------------------------------------------------
// TransitionMatrix

TransitionMatrix::TransitionMatrix(std::size_t size, std::vector<double> row_major,
                                   double row_tolerance)
    : size_(size), entries_(std::move(row_major)) {
    if (size_ == 0) throw std::invalid_argument("TransitionMatrix: state space must be nonempty");
    if (entries_.size() != size_ * size_) {
        throw std::invalid_argument("TransitionMatrix: expected " + std::to_string(size_ * size_) +
                                    " entries, got " + std::to_string(entries_.size()));
    }
    for (State x = 0; x < size_; ++x) {
        double sum = 0.0;
        for (State y = 0; y < size_; ++y) {
            const double v = entries_[x * size_ + y];
            if (!std::isfinite(v) || v < 0.0) {
                throw std::invalid_argument("TransitionMatrix: entry (" + std::to_string(x + 1) +
                                            "," + std::to_string(y + 1) +
                                            ") is not a probability");
            }
            sum += v;
        }
        if (std::abs(sum - 1.0) > row_tolerance) {
            throw std::invalid_argument("TransitionMatrix: row " + std::to_string(x + 1) +
                                        " sums to " + std::to_string(sum));
        }
    }
}

TransitionMatrix::TransitionMatrix(std::initializer_list<std::initializer_list<double>> rows) {
    std::vector<double> flat;
    for (const auto& r : rows) {
        if (r.size() != rows.size()) {
            throw std::invalid_argument("TransitionMatrix: matrix must be square");
        }
        flat.insert(flat.end(), r.begin(), r.end());
    }
    *this = TransitionMatrix(rows.size(), std::move(flat));
}

TransitionMatrix TransitionMatrix::identity(std::size_t size) {
    std::vector<double> e(size * size, 0.0);
    for (std::size_t i = 0; i < size; ++i) e[i * size + i] = 1.0;
    return TransitionMatrix(size, std::move(e));
}

TransitionMatrix TransitionMatrix::operator*(const TransitionMatrix& rhs) const {
    require_same_size(size_, rhs.size_, "TransitionMatrix product");
    const std::size_t n = size_;
    std::vector<double> out(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t k = 0; k < n; ++k) {
            const double a = entries_[i * n + k];
            if (a == 0.0) continue;
            const double* b = rhs.entries_.data() + k * n;
            double* o = out.data() + i * n;
            for (std::size_t j = 0; j < n; ++j) o[j] += a * b[j];
        }
    }
    return TransitionMatrix(n, std::move(out), 1e-10);
}

// ---------------------------------------------------------------------------
// Distribution / Observable

Distribution::Distribution(std::vector<double> mass, double tolerance) : mass_(std::move(mass)) {
    if (mass_.empty()) throw std::invalid_argument("Distribution: empty");
    double sum = 0.0;
    for (std::size_t i = 0; i < mass_.size(); ++i) {
        if (!std::isfinite(mass_[i]) || mass_[i] < 0.0) {
            throw std::invalid_argument("Distribution: entry " + std::to_string(i + 1) +
                                        " is negative or not finite");
        }
        sum += mass_[i];
    }
    if (std::abs(sum - 1.0) > tolerance) {
        throw std::invalid_argument("Distribution: total mass " + std::to_string(sum) + " != 1");
    }
}

Distribution Distribution::point_mass(std::size_t size, State at) {
    if (at >= size) throw std::invalid_argument("Distribution::point_mass: state out of range");
    std::vector<double> m(size, 0.0);
    m[at] = 1.0;
    return Distribution(std::move(m));
}

Distribution Distribution::uniform(std::size_t size) {
    if (size == 0) throw std::invalid_argument("Distribution::uniform: empty state space");
    return Distribution(std::vector<double>(size, 1.0 / static_cast<double>(size)));
}

double Distribution::mass_of(std::span<const State> states) const {
    double s = 0.0;
    for (State x : states) s += mass_.at(x);
    return s;
}

Observable::Observable(std::vector<double> values) : values_(std::move(values)) {
    for (std::size_t i = 0; i < values_.size(); ++i) {
        if (!std::isfinite(values_[i])) {
            throw std::invalid_argument("Observable: value at state " + std::to_string(i + 1) +
                                        " is not finite");
        }
    }
}

Observable Observable::constant(std::size_t size, double c) {
    return Observable(std::vector<double>(size, c));
}

Observable Observable::indicator(std::size_t size, std::span<const State> states) {
    std::vector<double> v(size, 0.0);
    for (State x : states) {
        if (x >= size) throw std::invalid_argument("Observable::indicator: state out of range");
        v[x] = 1.0;
    }
    return Observable(std::move(v));
}

Observable Observable::squared() const {
    std::vector<double> v(values_);
    for (double& x : v) x *= x;
    return Observable(std::move(v));
}

// ---------------------------------------------------------------------------
// Kernel algebra

Observable apply_right(const TransitionMatrix& K, const Observable& f) {
    require_same_size(K.size(), f.size(), "apply_right");
    std::vector<double> out(K.size(), 0.0);
    const auto fv = f.values();
    for (State x = 0; x < K.size(); ++x) {
        const auto row = K.row(x);
        double s = 0.0;
        for (State y = 0; y < K.size(); ++y) s += row[y] * fv[y];
        out[x] = s;
    }
    return Observable(std::move(out));
}

Distribution apply_left(const Distribution& zeta, const TransitionMatrix& K) {
    require_same_size(zeta.size(), K.size(), "apply_left");
    return Distribution(left_step(zeta.values(), K), 1e-10);
}

std::vector<double> apply_left(std::span<const double> measure, const TransitionMatrix& K) {
    require_same_size(measure.size(), K.size(), "apply_left");
    return left_step(measure, K);
}

double integrate(std::span<const double> measure, const Observable& f) {
    require_same_size(measure.size(), f.size(), "integrate");
    double s = 0.0;
    for (std::size_t i = 0; i < measure.size(); ++i) s += measure[i] * f[i];
    return s;
}

TransitionMatrix power(const TransitionMatrix& K, unsigned n) {
    TransitionMatrix result = TransitionMatrix::identity(K.size());
    TransitionMatrix base = K;
    bool first = true;
    while (n > 0) {
        if (n & 1u) {
            result = first ? base : result * base;
            first = false;
        }
        n >>= 1u;
        if (n > 0) base = base * base;
    }
    return result;
}

double stationary_residual(const Distribution& pi, const TransitionMatrix& K) {
    require_same_size(pi.size(), K.size(), "stationary_residual");
    return residual_of(pi.values(), K);
}

Distribution stationary(const TransitionMatrix& K, const StationaryOptions& options) {
    const std::size_t n = K.size();
    if (n == 1) return Distribution({1.0});

    if (n <= options.dense_limit) {
        auto pi = dense_stationary(K);
        if (!pi.empty() && residual_of(pi, K) <= options.tolerance) {
            return Distribution(std::move(pi), 1e-10);
        }
    }

    std::vector<double> pi(n, 1.0 / static_cast<double>(n));
    double residual = 0.0;
    for (std::size_t it = 0; it < options.max_iterations; ++it) {
        auto next = left_step(pi, K);
        residual = 0.0;
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            residual = std::max(residual, std::abs(next[i] - pi[i]));
            total += next[i];
        }
        for (double& v : next) v /= total;
        pi = std::move(next);
        if (residual <= options.tolerance) {
            residual = residual_of(pi, K);
            if (residual <= options.tolerance) return Distribution(std::move(pi), 1e-10);
        }
    }
    throw ConvergenceError("stationary: power iteration did not converge", residual);
}

double second_eigenvalue_modulus(const TransitionMatrix& P) {
    const auto n = static_cast<Eigen::Index>(P.size());
    if (n == 1) return 0.0;
    Eigen::MatrixXd A = as_eigen(P);
    Eigen::EigenSolver<Eigen::MatrixXd> solver(A, /*computeEigenvectors=*/false);
    if (solver.info() != Eigen::Success) {
        throw ConvergenceError("second_eigenvalue_modulus: eigensolver failed", -1.0);
    }
    std::vector<double> moduli;
    moduli.reserve(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) moduli.push_back(std::abs(solver.eigenvalues()(i)));
    std::sort(moduli.begin(), moduli.end(), std::greater<>());
    return std::clamp(moduli[1], 0.0, 1.0);
}

// ---------------------------------------------------------------------------

KernelSampler::KernelSampler(const TransitionMatrix& K)
    : size_(K.size()), cumulative_(K.size() * K.size()), last_positive_(K.size(), 0) {
    for (State x = 0; x < size_; ++x) {
        const auto row = K.row(x);
        double c = 0.0;
        for (State y = 0; y < size_; ++y) {
            c += row[y];
            cumulative_[x * size_ + y] = c;
            if (row[y] > 0.0) last_positive_[x] = y;
        }
    }
}

State KernelSampler::sample(State from, double u) const {
    const double* begin = cumulative_.data() + from * size_;
    const double* end = begin + size_;
    const double* it = std::upper_bound(begin, end, u);
    if (it == end) return last_positive_[from];
    return static_cast<State>(it - begin);
}

// ---------------------------------------------------------------------------

ThreeWellChain build_three_well_chain(unsigned lag) {
    constexpr std::size_t n = kThreeWellStates;
    auto m = [](std::size_t j) {
        return std::sin(6.0 * std::numbers::pi * static_cast<double>(j) / 90.0);
    };
    std::vector<double> q(n * n, 0.0);
    for (std::size_t i = 1; i <= n; ++i) {
        const std::size_t row = (i - 1) * n;
        double off = 0.0;
        if (i < n) {
            const double up = 0.4 + m(i) / 5.0;
            q[row + i] = up;
            off += up;
        }
        if (i > 1) {
            const double down = 0.4 - m(i) / 5.0;
            q[row + i - 2] = down;
            off += down;
        }
        q[row + i - 1] = 1.0 - off;
    }
    TransitionMatrix Q(n, std::move(q));
    return {Q, power(Q, lag)};
}

}  // namespace we
