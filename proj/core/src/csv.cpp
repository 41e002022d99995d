#include "we/csv.hpp"

#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace we::csv {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

std::size_t parse_index(const std::string& s) {
    std::size_t pos = 0;
    const long long v = std::stoll(s, &pos);
    if (pos != s.size() || v < 1) throw std::invalid_argument("csv: bad 1-based index '" + s + "'");
    return static_cast<std::size_t>(v);
}

double parse_value(const std::string& s) {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument("csv: bad number '" + s + "'");
    return v;
}

}  // namespace

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void write_comment(std::ostream& os, std::string_view comment) {
    if (!comment.empty()) os << "# " << comment << '\n';
}

std::vector<std::string> split_line(std::string_view line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        out.emplace_back(trim(line.substr(start, comma - start)));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return out;
}

std::vector<std::vector<std::string>> read_rows(std::istream& is, std::string_view header) {
    std::string line;
    bool seen_header = false;
    std::vector<std::vector<std::string>> rows;
    const auto expected = split_line(header);
    while (std::getline(is, line)) {
        const auto t = trim(line);
        if (t.empty() || t.front() == '#') continue;
        auto fields = split_line(t);
        if (!seen_header) {
            if (fields != expected) {
                throw std::invalid_argument("csv: expected header '" + std::string(header) +
                                            "', got '" + std::string(t) + "'");
            }
            seen_header = true;
            continue;
        }
        if (fields.size() != expected.size()) {
            throw std::invalid_argument("csv: row '" + std::string(t) + "' has wrong field count");
        }
        rows.push_back(std::move(fields));
    }
    if (!seen_header) throw std::invalid_argument("csv: missing header '" + std::string(header) + "'");
    return rows;
}

void write_matrix(std::ostream& os, const TransitionMatrix& K, std::string_view comment) {
    write_comment(os, comment);
    os << "i,j,value\n";
    for (State x = 0; x < K.size(); ++x) {
        for (State y = 0; y < K.size(); ++y) {
            os << x + 1 << ',' << y + 1 << ',' << format_double(K(x, y)) << '\n';
        }
    }
}

TransitionMatrix read_matrix(std::istream& is) {
    std::map<std::pair<std::size_t, std::size_t>, double> cells;
    std::size_t n = 0;
    for (const auto& row : read_rows(is, "i,j,value")) {
        const auto i = parse_index(row[0]);
        const auto j = parse_index(row[1]);
        if (!cells.emplace(std::pair{i, j}, parse_value(row[2])).second) {
            throw std::invalid_argument("csv: duplicate matrix entry (" + row[0] + "," + row[1] + ")");
        }
        n = std::max({n, i, j});
    }
    if (n == 0) throw std::invalid_argument("csv: empty matrix");
    std::vector<double> dense(n * n, 0.0);
    for (const auto& [ij, v] : cells) dense[(ij.first - 1) * n + (ij.second - 1)] = v;
    return TransitionMatrix(n, std::move(dense));
}

void write_vector(std::ostream& os, std::span<const double> values, std::string_view comment) {
    write_comment(os, comment);
    os << "i,value\n";
    for (std::size_t i = 0; i < values.size(); ++i) {
        os << i + 1 << ',' << format_double(values[i]) << '\n';
    }
}

std::vector<double> read_vector(std::istream& is) {
    std::map<std::size_t, double> cells;
    std::size_t n = 0;
    for (const auto& row : read_rows(is, "i,value")) {
        const auto i = parse_index(row[0]);
        if (!cells.emplace(i, parse_value(row[1])).second) {
            throw std::invalid_argument("csv: duplicate vector entry " + row[0]);
        }
        n = std::max(n, i);
    }
    std::vector<double> out(n, 0.0);
    for (const auto& [i, v] : cells) out[i - 1] = v;
    return out;
}

void write_file(const std::string& path, const std::string& contents) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open '" + path + "' for writing");
    os << contents;
    if (!os) throw std::runtime_error("write to '" + path + "' failed");
}

std::string read_file(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::invalid_argument("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

}  // namespace we::csv
