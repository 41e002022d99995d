#include "we/coarse.hpp"

#include "we/csv.hpp"
#include "we/error.hpp"
#include "we/rng.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace we {

namespace {

void check_inputs(std::size_t n, const BinPartition& bins, const Distribution& zeta,
                  const Observable& f, const char* who) {
    if (bins.num_states() != n || zeta.size() != n || f.size() != n) {
        throw std::invalid_argument(std::string(who) + ": dimension mismatch");
    }
}

std::vector<double> matvec(const TransitionMatrix& P, std::span<const double> x) {
    std::vector<double> y(P.size(), 0.0);
    for (State r = 0; r < P.size(); ++r) {
        const auto row = P.row(r);
        double s = 0.0;
        for (State c = 0; c < P.size(); ++c) s += row[c] * x[c];
        y[r] = s;
    }
    return y;
}

}  // namespace

CoarseChain build_coarse_exact(const TransitionMatrix& K, const BinPartition& bins,
                               const Distribution& zeta, const Observable& f) {
    check_inputs(K.size(), bins, zeta, f, "build_coarse_exact");
    const std::size_t R = bins.num_bins();
    std::vector<double> P(R * R, 0.0);
    std::vector<double> u(R, 0.0);
    for (std::size_t r = 0; r < R; ++r) {
        double mass = 0.0;
        for (State x : bins.members(r)) mass += zeta[x];
        if (!(mass > 0.0)) {
            throw std::invalid_argument("build_coarse_exact: bin " + std::to_string(r + 1) +
                                        " has zero sampling mass");
        }
        for (State x : bins.members(r)) {
            const double w = zeta[x] / mass;
            if (w == 0.0) continue;
            u[r] += w * f[x];
            const auto row = K.row(x);
            for (State y = 0; y < K.size(); ++y) P[r * R + bins.bin_of(y)] += w * row[y];
        }
    }
    return {TransitionMatrix(R, std::move(P)), std::move(u)};
}

CoarseChain build_coarse_mc(const KernelSampler& sampler, const BinPartition& bins,
                            const Distribution& zeta, const Observable& f,
                            std::size_t total_samples, std::uint64_t seed) {
    check_inputs(sampler.size(), bins, zeta, f, "build_coarse_mc");
    const std::size_t R = bins.num_bins();
    if (total_samples < R) {
        throw std::invalid_argument("build_coarse_mc: sample budget " +
                                    std::to_string(total_samples) + " is below the bin count " +
                                    std::to_string(R));
    }
    const auto starts = apportion(zeta.values(), total_samples);

    std::vector<double> counts(R * R, 0.0);
    std::vector<double> visits(R, 0.0);
    std::vector<double> f_sum(R, 0.0);
    for (State x = 0; x < starts.size(); ++x) {
        if (starts[x] == 0) continue;
        const auto r = bins.bin_of(x);
        const RngStream rng(seed, 0, x, Purpose::CoarseSampling);
        for (std::size_t k = 0; k < starts[x]; ++k) {
            const State y = sampler.sample(x, rng.uniform_at(k));
            counts[r * R + bins.bin_of(y)] += 1.0;
        }
        visits[r] += static_cast<double>(starts[x]);
        f_sum[r] += static_cast<double>(starts[x]) * f[x];
    }
    std::vector<double> u(R);
    for (std::size_t r = 0; r < R; ++r) {
        if (visits[r] == 0.0) {
            throw std::invalid_argument("build_coarse_mc: bin " + std::to_string(r + 1) +
                                        " received no samples; increase the sample budget");
        }
        for (std::size_t s = 0; s < R; ++s) counts[r * R + s] /= visits[r];
        u[r] = f_sum[r] / visits[r];
    }
    return {TransitionMatrix(R, std::move(counts)), std::move(u)};
}

VTable compute_v(const TransitionMatrix& P, std::span<const double> u, unsigned horizon) {
    if (u.size() != P.size()) throw std::invalid_argument("compute_v: u has wrong length");
    if (horizon == 0) throw std::invalid_argument("compute_v: horizon must be at least 1");

    // w[k] = P^k u for k = 0..n.
    std::vector<std::vector<double>> w;
    w.reserve(horizon + 1);
    w.emplace_back(u.begin(), u.end());
    for (unsigned k = 1; k <= horizon; ++k) w.push_back(matvec(P, w.back()));

    VTable table;
    table.v.resize(horizon);
    table.min_before_clamp = 0.0;
    bool first = true;
    for (unsigned p = 0; p < horizon; ++p) {
        const auto& ahead = w[horizon - p - 1];
        std::vector<double> sq(ahead.size());
        for (std::size_t r = 0; r < sq.size(); ++r) sq[r] = ahead[r] * ahead[r];
        auto row = matvec(P, sq);
        const auto& now = w[horizon - p];
        for (std::size_t r = 0; r < row.size(); ++r) {
            row[r] -= now[r] * now[r];
            if (first || row[r] < table.min_before_clamp) table.min_before_clamp = row[r];
            first = false;
            if (row[r] < 0.0) {
                if (row[r] < -kVClampThreshold) {
                    throw NumericalError("compute_v: v[" + std::to_string(p) + "][" +
                                         std::to_string(r + 1) + "] = " + std::to_string(row[r]) +
                                         " is negative beyond roundoff");
                }
                row[r] = 0.0;
            }
        }
        table.v[p] = std::move(row);
    }
    return table;
}

Distribution coarse_stationary(const TransitionMatrix& P) { return stationary(P); }

CoarseModel CoarseModel::from_chain(CoarseChain chain, unsigned horizon) {
    CoarseModel m;
    m.mu = coarse_stationary(chain.P);
    m.v = compute_v(chain.P, chain.u, horizon);
    m.P = std::move(chain.P);
    m.u = std::move(chain.u);
    m.horizon = horizon;
    return m;
}

// ---------------------------------------------------------------------------

void write_coarse_model(const CoarseModel& model, const std::string& directory,
                        const std::string& comment) {
    {
        std::ostringstream os;
        csv::write_matrix(os, model.P, comment);
        csv::write_file(directory + "/P.csv", os.str());
    }
    {
        std::ostringstream os;
        csv::write_vector(os, model.u, comment);
        csv::write_file(directory + "/u.csv", os.str());
    }
    {
        std::ostringstream os;
        csv::write_vector(os, model.mu.values(), comment);
        csv::write_file(directory + "/mu.csv", os.str());
    }
    std::ostringstream os;
    csv::write_comment(os, comment);
    os << "p,r,value\n";
    for (std::size_t p = 0; p < model.v.v.size(); ++p) {
        for (std::size_t r = 0; r < model.v.v[p].size(); ++r) {
            os << p << ',' << r + 1 << ',' << csv::format_double(model.v.v[p][r]) << '\n';
        }
    }
    csv::write_file(directory + "/v.csv", os.str());
}

CoarseModel read_coarse_model(const std::string& directory) {
    CoarseModel m;
    {
        std::istringstream is(csv::read_file(directory + "/P.csv"));
        m.P = csv::read_matrix(is);
    }
    {
        std::istringstream is(csv::read_file(directory + "/u.csv"));
        m.u = csv::read_vector(is);
    }
    {
        std::istringstream is(csv::read_file(directory + "/mu.csv"));
        m.mu = Distribution(csv::read_vector(is), 1e-10);
    }
    std::istringstream is(csv::read_file(directory + "/v.csv"));
    const auto rows = csv::read_rows(is, "p,r,value");
    const std::size_t R = m.P.size();
    if (m.u.size() != R || m.mu.size() != R) {
        throw std::invalid_argument("read_coarse_model: inconsistent bin counts");
    }
    if (rows.size() % R != 0) throw std::invalid_argument("read_coarse_model: v.csv is ragged");
    m.horizon = static_cast<unsigned>(rows.size() / R);
    m.v.v.assign(m.horizon, std::vector<double>(R, 0.0));
    for (const auto& row : rows) {
        const auto p = std::stoul(row[0]);
        const auto r = std::stoul(row[1]);
        if (p >= m.horizon || r < 1 || r > R) {
            throw std::invalid_argument("read_coarse_model: v.csv index out of range");
        }
        m.v.v[p][r - 1] = std::stod(row[2]);
    }
    m.v.min_before_clamp = 0.0;
    for (const auto& row : m.v.v) {
        for (double x : row) m.v.min_before_clamp = std::min(m.v.min_before_clamp, x);
    }
    return m;
}

}  // namespace we
