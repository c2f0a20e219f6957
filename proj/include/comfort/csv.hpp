#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace comfort::csv {

/// Parsed file: '#'-prefixed lines before the header are kept as metadata.
struct Table {
  std::vector<std::string> comments;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::size_t first_data_line = 0;  // 1-based line number of rows[0]

  std::size_t column(std::string_view name) const;  // throws ParseError
};

Table read(const std::string& path);
Table parse(std::istream& in, const std::string& source_name);

std::vector<std::string> split_line(std::string_view line);
std::string join_line(const std::vector<std::string>& fields);

/// Shortest decimal representation that round-trips exactly.
std::string format_double(double v);
double parse_double(std::string_view s);
long parse_long(std::string_view s);

}  // namespace comfort::csv
