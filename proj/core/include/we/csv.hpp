#pragma once

// CSV serialization. Indices in files are 1-based. Lines starting with '#'
// are comments (used for the config-hash stamp) and are skipped on read.

#include "we/markov.hpp"

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace we::csv {

/// Round-trippable decimal text for a double (17 significant digits).
std::string format_double(double v);

/// Writes "# <comment>\n" when comment is nonempty.
void write_comment(std::ostream& os, std::string_view comment);

/// Header `i,j,value`, one row per entry (dense).
void write_matrix(std::ostream& os, const TransitionMatrix& K, std::string_view comment = {});
TransitionMatrix read_matrix(std::istream& is);

/// Header `i,value`.
void write_vector(std::ostream& os, std::span<const double> values, std::string_view comment = {});
std::vector<double> read_vector(std::istream& is);

/// Splits one CSV line on commas (no quoting; the formats here never need it).
std::vector<std::string> split_line(std::string_view line);

/// Reads all non-comment lines after the header; validates the header text.
std::vector<std::vector<std::string>> read_rows(std::istream& is, std::string_view header);

void write_file(const std::string& path, const std::string& contents);
std::string read_file(const std::string& path);

}  // namespace we::csv
