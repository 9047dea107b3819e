#include "stratalloc/csv.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "stratalloc/error.hpp"

namespace stratalloc {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::Schema: return "schema error";
    case ErrorKind::Parse: return "parse error";
    case ErrorKind::Reference: return "reference error";
    case ErrorKind::Infeasible: return "infeasibility error";
    case ErrorKind::Convergence: return "convergence error";
    case ErrorKind::Invalid: return "invalid argument";
  }
  return "error";
}

Table::Table(std::vector<std::string> header) : header_(std::move(header)) {}

std::optional<std::size_t> Table::find(std::string_view column) const {
  for (std::size_t i = 0; i < header_.size(); ++i) {
    if (header_[i] == column) return i;
  }
  return std::nullopt;
}

std::size_t Table::require(std::string_view column) const {
  if (auto idx = find(column)) return *idx;
  throw SchemaError("missing column '" + std::string(column) + "' in " + source_);
}

double Table::number(std::size_t row, std::size_t col) const {
  const std::string& text = rows_[row][col];
  if (auto v = parse_double(text)) return *v;
  throw ParseError("non-numeric cell '" + text + "' at row " + std::to_string(row + 1) +
                   ", column " + header_[col] + " in " + source_);
}

long long Table::count(std::size_t row, std::size_t col) const {
  const double v = number(row, col);
  const double r = std::round(v);
  if (std::fabs(v - r) > 1e-9) {
    throw ParseError("non-integer count '" + rows_[row][col] + "' at row " +
                     std::to_string(row + 1) + ", column " + header_[col] + " in " + source_);
  }
  return static_cast<long long>(r);
}

void Table::add_row(std::vector<std::string> row) {
  if (row.size() != header_.size()) {
    throw SchemaError("row of width " + std::to_string(row.size()) + " does not match header width " +
                      std::to_string(header_.size()) + " in " + source_);
  }
  rows_.push_back(std::move(row));
}

void Table::add_column(std::string name, std::vector<std::string> values) {
  if (values.size() != rows_.size()) {
    throw SchemaError("column '" + name + "' has " + std::to_string(values.size()) +
                      " values for " + std::to_string(rows_.size()) + " rows");
  }
  header_.push_back(std::move(name));
  for (std::size_t i = 0; i < rows_.size(); ++i) rows_[i].push_back(std::move(values[i]));
}

namespace {

// Splits one logical record; handles RFC 4180 quoting including embedded newlines.
std::vector<std::vector<std::string>> split_records(std::string_view text) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  bool any = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field.push_back(c);
      }
      continue;
    }
    switch (c) {
      case '"':
        quoted = true;
        any = true;
        break;
      case ',':
        fields.push_back(std::move(field));
        field.clear();
        any = true;
        break;
      case '\r':
        break;
      case '\n':
        if (any || !field.empty()) {
          fields.push_back(std::move(field));
          records.push_back(std::move(fields));
        }
        fields.clear();
        field.clear();
        any = false;
        break;
      default:
        field.push_back(c);
        any = true;
    }
  }
  if (any || !field.empty()) {
    fields.push_back(std::move(field));
    records.push_back(std::move(fields));
  }
  return records;
}

std::string quote_if_needed(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

}  // namespace

Table parse_csv(std::string_view text, std::string source) {
  if (text.size() >= 3 && static_cast<unsigned char>(text[0]) == 0xEF &&
      static_cast<unsigned char>(text[1]) == 0xBB && static_cast<unsigned char>(text[2]) == 0xBF) {
    text.remove_prefix(3);
  }
  auto records = split_records(text);
  if (records.empty()) throw SchemaError("empty CSV (no header row) in " + source);
  Table table(std::move(records.front()));
  table.set_source(source);
  for (std::size_t r = 1; r < records.size(); ++r) {
    if (records[r].size() != table.num_cols()) {
      throw ParseError("row " + std::to_string(r) + " has " + std::to_string(records[r].size()) +
                       " cells, header has " + std::to_string(table.num_cols()) + " in " + source);
    }
    table.add_row(std::move(records[r]));
  }
  return table;
}

Table read_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ReferenceError("cannot open file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_csv(buf.str(), path);
}

void write_csv(std::ostream& out, const Table& table) {
  auto write_row = [&out](const std::vector<std::string>& row) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out << ',';
      out << quote_if_needed(row[i]);
    }
    out << '\n';
  };
  write_row(table.header());
  for (const auto& row : table.rows()) write_row(row);
}

void write_csv(const std::string& path, const Table& table) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ReferenceError("cannot write file '" + path + "'");
  write_csv(out, table);
}

std::string to_csv_string(const Table& table) {
  std::ostringstream out;
  write_csv(out, table);
  return out.str();
}

std::string format_number(double value) {
  if (std::isnan(value)) return "NA";
  if (value == 0.0) return "0";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

std::string format_count(long long value) { return std::to_string(value); }

std::optional<double> parse_double(std::string_view text) {
  while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) text.remove_prefix(1);
  while (!text.empty() && (text.back() == ' ' || text.back() == '\t')) text.remove_suffix(1);
  if (text.empty()) return std::nullopt;
  if (text.front() == '+') text.remove_prefix(1);
  double value = 0.0;
  auto res = std::from_chars(text.data(), text.data() + text.size(), value);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size()) return std::nullopt;
  return value;
}

}  // namespace stratalloc
