#ifndef MRP_CSV_HPP
#define MRP_CSV_HPP

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace mrp::csv {

/// Comma-delimited text with a required header row.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  /// 1-based source line of each row (header is line 1).
  std::vector<int> lines;

  std::optional<std::size_t> column(std::string_view name) const;
};

Table read(std::istream& in, const std::string& source_name);
Table read_file(const std::filesystem::path& path);

/// Parses a double; empty optional on failure or trailing garbage.
std::optional<double> parse_double(std::string_view text);
std::optional<long long> parse_int(std::string_view text);

/// Shortest round-trip decimal representation.
std::string format_double(double value);

std::string join(const std::vector<std::string>& fields, char sep = ',');

}  // namespace mrp::csv

#endif  // MRP_CSV_HPP
