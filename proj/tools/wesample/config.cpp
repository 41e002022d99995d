#include "config.hpp"

#include "we/csv.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <sstream>

namespace wesample {

namespace {

const std::map<std::string, std::string>& defaults() {
    static const std::map<std::string, std::string> d = {
        {"chain", "three-well"},
        {"chain_file", ""},
        {"lag", "4"},
        {"bin_width", "3"},
        {"bins_file", ""},
        {"observable", "28-33"},
        {"observable_file", ""},
        {"modes", "adaptive,traditional,naive"},
        {"particles", "150"},
        {"floor_per_bin", "1"},
        {"per_bin_target", "5"},
        {"horizons", "5,10,15,20,25,30"},
        {"reps", ""},
        {"reps_adaptive", "1000"},
        {"reps_traditional", "10000"},
        {"reps_naive", "50000"},
        {"seed", "0"},
        {"threads", "1"},
        {"out", "results"},
        {"placement", "stratified"},
        {"zeta", "uniform"},
        {"coarse_builder", "exact"},
        {"coarse_samples", "100000"},
        {"diagnose_horizons", "1,5"},
        {"diagnose_reps", "2000"},
        {"doob_horizon", "5"},
        {"doob_reps", "5000"},
        {"corrupt_weight_scale", "1"},
        {"hill_sink", "81-90"},
        {"hill_source", "1"},
        {"hill_horizon", "300"},
        {"hill_reps", "1000"},
        {"hill_mode", "adaptive"},
        {"hill_a", ""},
        {"hill_b", ""},
        {"hill_zeta", "equilibrium"},
    };
    return d;
}

std::string_view trim(std::string_view s) {
    const auto* ws = " \t\r\n";
    const auto b = s.find_first_not_of(ws);
    if (b == std::string_view::npos) return {};
    return s.substr(b, s.find_last_not_of(ws) - b + 1);
}

std::vector<std::string_view> split(std::string_view s, char sep) {
    std::vector<std::string_view> parts;
    if (trim(s).empty()) return parts;
    std::size_t start = 0;
    while (true) {
        const auto pos = s.find(sep, start);
        parts.push_back(trim(s.substr(start, pos == std::string_view::npos ? pos : pos - start)));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return parts;
}

template <class T>
T parse_number(std::string_view text, const std::string& key) {
    text = trim(text);
    T value{};
    const auto* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, value);
    if (text.empty() || ec != std::errc{} || ptr != end) {
        throw ConfigError(key + ": cannot parse '" + std::string(text) + "' as a number");
    }
    return value;
}

std::size_t parse_count(const RawConfig& raw, const std::string& key) {
    return parse_number<std::size_t>(raw.get(key), key);
}

unsigned parse_unsigned(const RawConfig& raw, const std::string& key) {
    return parse_number<unsigned>(raw.get(key), key);
}

double parse_real(const RawConfig& raw, const std::string& key) {
    return parse_number<double>(raw.get(key), key);
}

std::vector<unsigned> parse_horizons(const RawConfig& raw, const std::string& key) {
    std::vector<unsigned> hs;
    for (auto part : split(raw.get(key), ',')) hs.push_back(parse_number<unsigned>(part, key));
    if (hs.empty()) throw ConfigError(key + ": at least one horizon is required");
    for (std::size_t i = 1; i < hs.size(); ++i) {
        if (hs[i] <= hs[i - 1]) throw ConfigError(key + ": horizons must be strictly ascending");
    }
    return hs;
}

we::PolicyKind parse_mode(std::string_view text, const std::string& key) {
    const std::string name(trim(text));
    if (name == "adaptive") return we::PolicyKind::Adaptive;
    if (name == "traditional") return we::PolicyKind::Traditional;
    if (name == "naive") return we::PolicyKind::Naive;
    throw ConfigError(key + ": unknown mode '" + name + "' (adaptive, traditional, naive)");
}

}  // namespace

// ---------------------------------------------------------------------------

RawConfig::RawConfig() : values_(defaults()) {}

void RawConfig::set(const std::string& key, const std::string& value) {
    auto it = values_.find(key);
    if (it == values_.end()) throw ConfigError("unknown config key '" + key + "'");
    it->second = value;
}

const std::string& RawConfig::get(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) throw ConfigError("unknown config key '" + key + "'");
    return it->second;
}

void RawConfig::merge_text(std::string_view text, std::string_view origin) {
    std::size_t line_no = 0;
    std::istringstream is{std::string(text)};
    std::string line;
    while (std::getline(is, line)) {
        ++line_no;
        auto body = std::string_view(line);
        if (auto hash = body.find('#'); hash != std::string_view::npos) body = body.substr(0, hash);
        body = trim(body);
        if (body.empty()) continue;
        const auto eq = body.find('=');
        if (eq == std::string_view::npos) {
            throw ConfigError(std::string(origin) + ":" + std::to_string(line_no) +
                              ": expected key = value");
        }
        const std::string key(trim(body.substr(0, eq)));
        try {
            set(key, std::string(trim(body.substr(eq + 1))));
        } catch (const ConfigError& e) {
            throw ConfigError(std::string(origin) + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
}

void RawConfig::apply_override(std::string_view assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string_view::npos) {
        throw ConfigError("override '" + std::string(assignment) + "' is not key=value");
    }
    set(std::string(trim(assignment.substr(0, eq))), std::string(trim(assignment.substr(eq + 1))));
}

// ---------------------------------------------------------------------------

std::uint64_t fnv1a64(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string ExperimentConfig::hash_hex() const {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(hash));
    return buf;
}

std::string ExperimentConfig::hash_comment() const { return "config_hash=" + hash_hex(); }

std::vector<we::State> parse_state_list(std::string_view text) {
    std::vector<we::State> states;
    for (auto part : split(text, ',')) {
        const auto dash = part.find('-');
        std::size_t lo, hi;
        if (dash == std::string_view::npos) {
            lo = hi = parse_number<std::size_t>(part, "state list");
        } else {
            lo = parse_number<std::size_t>(part.substr(0, dash), "state list");
            hi = parse_number<std::size_t>(part.substr(dash + 1), "state list");
        }
        if (lo == 0 || hi < lo) {
            throw ConfigError("state list: bad entry '" + std::string(part) +
                              "' (states are 1-based, ranges ascending)");
        }
        for (std::size_t x = lo; x <= hi; ++x) states.push_back(x - 1);
    }
    std::sort(states.begin(), states.end());
    states.erase(std::unique(states.begin(), states.end()), states.end());
    return states;
}

ExperimentConfig resolve(const RawConfig& raw) {
    ExperimentConfig c;
    c.chain = raw.get("chain");
    if (c.chain != "three-well" && c.chain != "file") {
        throw ConfigError("chain: expected 'three-well' or 'file', got '" + c.chain + "'");
    }
    c.chain_file = raw.get("chain_file");
    if (c.chain == "file" && c.chain_file.empty()) throw ConfigError("chain = file needs chain_file");
    c.lag = parse_unsigned(raw, "lag");
    if (c.lag == 0) throw ConfigError("lag: must be at least 1");
    c.bin_width = parse_count(raw, "bin_width");
    if (c.bin_width == 0) throw ConfigError("bin_width: must be at least 1");
    c.bins_file = raw.get("bins_file");
    c.observable = parse_state_list(raw.get("observable"));
    c.observable_file = raw.get("observable_file");
    if (c.observable.empty() && c.observable_file.empty()) {
        throw ConfigError("observable: give a state list or observable_file");
    }

    for (auto part : split(raw.get("modes"), ',')) {
        const auto m = parse_mode(part, "modes");
        if (std::find(c.modes.begin(), c.modes.end(), m) != c.modes.end()) {
            throw ConfigError("modes: '" + std::string(part) + "' listed twice");
        }
        c.modes.push_back(m);
    }
    if (c.modes.empty()) throw ConfigError("modes: at least one mode is required");

    c.particles = parse_count(raw, "particles");
    if (c.particles == 0) throw ConfigError("particles: must be positive");
    c.floor_per_bin = parse_real(raw, "floor_per_bin");
    c.per_bin_target = parse_real(raw, "per_bin_target");
    if (!(c.per_bin_target > 0.0)) throw ConfigError("per_bin_target: must be positive");
    c.horizons = parse_horizons(raw, "horizons");

    const bool shared_reps = !raw.get("reps").empty();
    const auto reps_for = [&](const std::string& key) {
        const auto n = shared_reps ? parse_count(raw, "reps") : parse_count(raw, key);
        if (n < 2) throw ConfigError(key + ": need at least 2 replicates for a standard error");
        return n;
    };
    c.reps[we::PolicyKind::Adaptive] = reps_for("reps_adaptive");
    c.reps[we::PolicyKind::Traditional] = reps_for("reps_traditional");
    c.reps[we::PolicyKind::Naive] = reps_for("reps_naive");

    c.seed = parse_number<std::uint64_t>(raw.get("seed"), "seed");
    c.threads = parse_unsigned(raw, "threads");
    c.out = raw.get("out");
    if (c.out.empty()) throw ConfigError("out: output directory is empty");

    const auto& placement = raw.get("placement");
    if (placement == "stratified") {
        c.placement = we::Placement::Stratified;
    } else if (placement == "sampled") {
        c.placement = we::Placement::Sampled;
    } else {
        throw ConfigError("placement: expected 'stratified' or 'sampled'");
    }
    c.zeta = raw.get("zeta");
    c.coarse_builder = raw.get("coarse_builder");
    if (c.coarse_builder != "exact" && c.coarse_builder != "mc") {
        throw ConfigError("coarse_builder: expected 'exact' or 'mc'");
    }
    c.coarse_samples = parse_count(raw, "coarse_samples");

    c.diagnose_horizons = parse_horizons(raw, "diagnose_horizons");
    c.diagnose_reps = reps_for("diagnose_reps");
    c.doob_horizon = parse_unsigned(raw, "doob_horizon");
    c.doob_reps = reps_for("doob_reps");
    c.corrupt_weight_scale = parse_real(raw, "corrupt_weight_scale");
    if (!(c.corrupt_weight_scale > 0.0)) throw ConfigError("corrupt_weight_scale: must be positive");

    c.hill_sink = parse_state_list(raw.get("hill_sink"));
    for (auto part : split(raw.get("hill_source"), ',')) {
        const auto colon = part.find(':');
        const auto state = parse_number<std::size_t>(part.substr(0, colon), "hill_source");
        if (state == 0) throw ConfigError("hill_source: states are 1-based");
        const double mass =
            colon == std::string_view::npos ? 1.0 : parse_number<double>(part.substr(colon + 1), "hill_source");
        if (!(mass > 0.0)) throw ConfigError("hill_source: masses must be positive");
        c.hill_source.emplace_back(state - 1, mass);
    }
    if (c.hill_source.empty()) throw ConfigError("hill_source: empty");
    c.hill_horizon = parse_unsigned(raw, "hill_horizon");
    c.hill_reps = reps_for("hill_reps");
    c.hill_mode = parse_mode(raw.get("hill_mode"), "hill_mode");
    c.hill_a = parse_state_list(raw.get("hill_a"));
    c.hill_b = parse_state_list(raw.get("hill_b"));
    if (c.hill_a.empty() != c.hill_b.empty()) {
        throw ConfigError("hill_a and hill_b must be given together");
    }
    c.hill_zeta = raw.get("hill_zeta");

    std::string canonical;
    for (const auto& [key, value] : raw.values()) {
        if (key == "threads" || key == "out") continue;
        canonical += key + "=" + value + "\n";
    }
    c.canonical = std::move(canonical);
    c.hash = fnv1a64(c.canonical);
    return c;
}

// ---------------------------------------------------------------------------

Problem build_problem(const ExperimentConfig& config) {
    we::TransitionMatrix K;
    if (config.chain == "three-well") {
        K = we::build_three_well_chain(config.lag).K;
    } else {
        std::istringstream is(we::csv::read_file(config.chain_file));
        K = we::csv::read_matrix(is);
        if (config.lag > 1) K = we::power(K, config.lag);
    }
    const std::size_t n = K.size();

    we::Observable f;
    if (!config.observable_file.empty()) {
        std::istringstream is(we::csv::read_file(config.observable_file));
        f = we::Observable(we::csv::read_vector(is));
    } else {
        for (auto x : config.observable) {
            if (x >= n) {
                throw ConfigError("observable: state " + std::to_string(x + 1) + " exceeds chain size " +
                                  std::to_string(n));
            }
        }
        f = we::Observable::indicator(n, config.observable);
    }
    if (f.size() != n) throw ConfigError("observable: length does not match the chain");

    std::vector<std::size_t> assignment;
    if (!config.bins_file.empty()) {
        std::istringstream is(we::csv::read_file(config.bins_file));
        const auto rows = we::csv::read_rows(is, "i,bin");
        assignment.assign(n, 0);
        std::vector<char> seen(n, 0);
        for (const auto& row : rows) {
            const auto i = std::stoul(row.at(0));
            const auto b = std::stoul(row.at(1));
            if (i < 1 || i > n || b < 1) throw ConfigError("bins_file: index out of range");
            assignment[i - 1] = b - 1;
            seen[i - 1] = 1;
        }
        if (std::find(seen.begin(), seen.end(), 0) != seen.end()) {
            throw ConfigError("bins_file: every state needs a bin");
        }
        return {std::move(K), std::move(f), we::BinPartition(std::move(assignment))};
    }
    auto bins = we::BinPartition::contiguous(n, config.bin_width);
    return {std::move(K), std::move(f), std::move(bins)};
}

we::Distribution build_zeta(std::string_view which, const we::TransitionMatrix& K) {
    if (which == "uniform") return we::Distribution::uniform(K.size());
    if (which == "equilibrium") return we::stationary(K);
    std::istringstream is(we::csv::read_file(std::string(which)));
    auto values = we::csv::read_vector(is);
    if (values.size() != K.size()) throw ConfigError("zeta file: length does not match the chain");
    double total = 0.0;
    for (double v : values) total += v;
    if (!(total > 0.0)) throw ConfigError("zeta file: no positive mass");
    for (double& v : values) v /= total;
    return we::Distribution(std::move(values), 1e-9);
}

}  // namespace wesample
