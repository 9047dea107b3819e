#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace stratalloc {

// In-memory CSV table. The first row of the file is the header; every data
// row has exactly header.size() cells.
class Table {
 public:
  Table() = default;
  explicit Table(std::vector<std::string> header);

  const std::vector<std::string>& header() const { return header_; }
  const std::vector<std::vector<std::string>>& rows() const { return rows_; }
  std::size_t num_rows() const { return rows_.size(); }
  std::size_t num_cols() const { return header_.size(); }

  // Name used in error messages (usually the source path).
  const std::string& source() const { return source_; }
  void set_source(std::string source) { source_ = std::move(source); }

  std::optional<std::size_t> find(std::string_view column) const;
  // Throws SchemaError("missing column ...") when absent.
  std::size_t require(std::string_view column) const;
  bool has(std::string_view column) const { return find(column).has_value(); }

  const std::string& cell(std::size_t row, std::size_t col) const { return rows_[row][col]; }

  // Numeric accessors report the 1-based data row and the column name on failure.
  double number(std::size_t row, std::size_t col) const;
  long long count(std::size_t row, std::size_t col) const;

  void add_row(std::vector<std::string> row);
  void add_column(std::string name, std::vector<std::string> values);

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
  std::string source_;
};

Table parse_csv(std::string_view text, std::string source = "<memory>");
Table read_csv(const std::string& path);

void write_csv(std::ostream& out, const Table& table);
void write_csv(const std::string& path, const Table& table);
std::string to_csv_string(const Table& table);

// Shortest decimal text that parses back to the same double.
std::string format_number(double value);
std::string format_count(long long value);

// Parses a full cell as a double; returns nullopt on junk or empty input.
std::optional<double> parse_double(std::string_view text);

}  // namespace stratalloc
