#pragma once

// Flat `key = value` configuration for wesample. Every key has a default (the
// three-well preset); files and `--set` overrides only replace values.

#include "we/ensemble.hpp"
#include "we/markov.hpp"
#include "we/selection.hpp"

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace wesample {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Key/value pairs after defaults, file and overrides have been merged.
class RawConfig {
public:
    /// All keys at their defaults.
    RawConfig();

    /// Lines `key = value`; `#` starts a comment. Unknown keys are errors.
    void merge_text(std::string_view text, std::string_view origin = "config");
    /// `key=value`.
    void apply_override(std::string_view assignment);
    void set(const std::string& key, const std::string& value);
    const std::string& get(const std::string& key) const;

    const std::map<std::string, std::string>& values() const noexcept { return values_; }

private:
    std::map<std::string, std::string> values_;
};

struct ExperimentConfig {
    std::string chain;                    ///< "three-well" or "file"
    std::string chain_file;
    unsigned lag = 4;
    std::size_t bin_width = 3;
    std::string bins_file;
    std::vector<we::State> observable;    ///< 0-based support of the indicator f
    std::string observable_file;
    std::vector<we::PolicyKind> modes;
    std::size_t particles = 150;
    double floor_per_bin = 1.0;
    double per_bin_target = 5.0;
    std::vector<unsigned> horizons;
    std::map<we::PolicyKind, std::size_t> reps;
    std::uint64_t seed = 0;
    unsigned threads = 1;
    std::string out;
    we::Placement placement = we::Placement::Stratified;
    std::string zeta;                     ///< uniform | equilibrium | CSV path
    std::string coarse_builder;           ///< exact | mc
    std::size_t coarse_samples = 0;

    std::vector<unsigned> diagnose_horizons;
    std::size_t diagnose_reps = 0;
    unsigned doob_horizon = 5;
    std::size_t doob_reps = 0;
    double corrupt_weight_scale = 1.0;

    std::vector<we::State> hill_sink;
    std::vector<std::pair<we::State, double>> hill_source;
    unsigned hill_horizon = 300;
    std::size_t hill_reps = 0;
    we::PolicyKind hill_mode = we::PolicyKind::Adaptive;
    std::vector<we::State> hill_a;
    std::vector<we::State> hill_b;
    std::string hill_zeta;

    /// Sorted `key=value` lines of every setting that can change results
    /// (threads and the output directory are left out).
    std::string canonical;
    std::uint64_t hash = 0;

    std::string hash_hex() const;
    /// `config_hash=<hex>`, the comment line written at the top of every CSV.
    std::string hash_comment() const;
};

/// Parses and validates every key. Throws ConfigError.
ExperimentConfig resolve(const RawConfig& raw);

/// 64-bit FNV-1a.
std::uint64_t fnv1a64(std::string_view bytes);

/// "28-33", "1,5,7-9"; 1-based in the text, 0-based in the result. Empty text
/// gives an empty list.
std::vector<we::State> parse_state_list(std::string_view text);

struct Problem {
    we::TransitionMatrix K;
    we::Observable f;
    we::BinPartition bins;
};

/// Chain, observable and bins described by the config, checked against each other.
Problem build_problem(const ExperimentConfig& config);

/// "uniform", "equilibrium" (stationary law of K) or a vector CSV path.
we::Distribution build_zeta(std::string_view which, const we::TransitionMatrix& K);

}  // namespace wesample
