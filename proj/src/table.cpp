#include "aipw/table.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include "aipw/error.hpp"

namespace aipw {

namespace {

bool needs_quotes(std::string_view s) { return s.find_first_of(",\"\r\n") != std::string_view::npos; }

void write_field(std::ostream& os, std::string_view s) {
  if (!needs_quotes(s)) {
    os << s;
    return;
  }
  os << '"';
  for (char c : s) {
    if (c == '"') os << '"';
    os << c;
  }
  os << '"';
}

std::string markdown_cell(std::string_view s) {
  std::string out;
  for (char c : s) {
    if (c == '|') out += '\\';
    out += c == '\n' ? ' ' : c;
  }
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

// Splits one logical record; quoted fields may span physical lines.
bool read_record(std::istream& is, std::vector<std::string>& fields, std::size_t& line) {
  fields.clear();
  std::string field;
  bool quoted = false, any = false, was_quoted = false;
  char c;
  while (is.get(c)) {
    any = true;
    if (quoted) {
      if (c == '"') {
        if (is.peek() == '"') {
          is.get(c);
          field += '"';
        } else {
          quoted = false;
        }
      } else {
        if (c == '\n') ++line;
        field += c;
      }
      continue;
    }
    if (c == '"' && trim(field).empty()) {
      field.clear();
      quoted = was_quoted = true;
    } else if (c == ',') {
      fields.push_back(was_quoted ? field : std::string(trim(field)));
      field.clear();
      was_quoted = false;
    } else if (c == '\n') {
      ++line;
      fields.push_back(was_quoted ? field : std::string(trim(field)));
      return true;
    } else if (!was_quoted) {
      field += c;
    }
  }
  if (quoted) throw Error(ErrorCode::DataError, "line " + std::to_string(line) + ": unterminated quoted field");
  if (!any) return false;
  fields.push_back(was_quoted ? field : std::string(trim(field)));
  return true;
}

}  // namespace

std::size_t Table::column_index(std::string_view name) const {
  auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) throw Error(ErrorCode::MissingColumn, "no column named '" + std::string(name) + "'");
  return static_cast<std::size_t>(it - header.begin());
}

std::string format_double(double v) {
  if (std::isnan(v)) return "NA";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

double parse_double(std::string_view s) {
  s = trim(s);
  if (s.empty() || s == "NA") return std::numeric_limits<double>::quiet_NaN();
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  if (s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || end != s.data() + s.size()) {
    throw Error(ErrorCode::DataError, "not a number: '" + std::string(s) + "'");
  }
  return v;
}

void write_table(std::ostream& os, const Table& t, TableFormat format) {
  for (const auto& c : t.comments) os << "# " << c << '\n';
  if (format == TableFormat::Csv) {
    auto write_row = [&](const std::vector<std::string>& row) {
      for (std::size_t k = 0; k < row.size(); ++k) {
        if (k) os << ',';
        write_field(os, row[k]);
      }
      os << '\n';
    };
    write_row(t.header);
    for (const auto& r : t.rows) write_row(r);
    return;
  }
  if (!t.comments.empty()) os << '\n';
  auto write_row = [&](const std::vector<std::string>& row) {
    os << '|';
    for (const auto& cell : row) os << ' ' << markdown_cell(cell) << " |";
    os << '\n';
  };
  write_row(t.header);
  os << '|';
  for (std::size_t k = 0; k < t.header.size(); ++k) os << " --- |";
  os << '\n';
  for (const auto& r : t.rows) write_row(r);
}

Table read_csv(std::istream& is) {
  Table t;
  std::size_t line = 1;
  // Comment lines only precede the header.
  while (is.peek() == '#') {
    std::string text;
    std::getline(is, text);
    ++line;
    std::string_view v = text;
    v.remove_prefix(1);
    if (!v.empty() && v.front() == ' ') v.remove_prefix(1);
    if (!v.empty() && v.back() == '\r') v.remove_suffix(1);
    t.comments.emplace_back(v);
  }
  std::vector<std::string> fields;
  if (!read_record(is, t.header, line)) throw Error(ErrorCode::DataError, "missing header row");
  for (std::size_t k = 0; k < t.header.size(); ++k) {
    if (t.header[k].empty()) throw Error(ErrorCode::DataError, "empty name for column " + std::to_string(k + 1));
    for (std::size_t j = 0; j < k; ++j) {
      if (t.header[j] == t.header[k]) throw Error(ErrorCode::DataError, "duplicate column '" + t.header[k] + "'");
    }
  }
  for (;;) {
    const std::size_t record_line = line;
    if (!read_record(is, fields, line)) break;
    if (fields.size() == 1 && fields[0].empty()) continue;  // blank line
    if (fields.size() != t.header.size()) {
      throw Error(ErrorCode::DataError, "line " + std::to_string(record_line) + ": expected " +
                                            std::to_string(t.header.size()) + " fields, found " +
                                            std::to_string(fields.size()));
    }
    t.rows.push_back(fields);
  }
  return t;
}

Table read_csv_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::DataError, "cannot open data file '" + path.string() + "'");
  return read_csv(in);
}

Dataset dataset_from_table(const Table& table, const DataColumns& roles) {
  const std::size_t t_col = table.column_index(roles.t);
  const std::size_t y_col = table.column_index(roles.y);
  const std::size_t n = table.rows.size();
  std::vector<double> t(n), y(n);
  std::map<std::string, std::vector<double>> columns;
  for (std::size_t k = 0; k < table.header.size(); ++k) {
    if (k != t_col && k != y_col) columns[table.header[k]].resize(n);
  }
  for (std::size_t i = 0; i < n; ++i) {
    const auto& row = table.rows[i];
    for (std::size_t k = 0; k < row.size(); ++k) {
      double v;
      try {
        v = parse_double(row[k]);
      } catch (const Error&) {
        throw Error(ErrorCode::DataError, "row " + std::to_string(i + 1) + ": column '" + table.header[k] +
                                              "' is not a number ('" + row[k] + "')");
      }
      if (k == t_col) {
        t[i] = v;
      } else if (k == y_col) {
        y[i] = v;
      } else {
        columns[table.header[k]][i] = v;
      }
    }
  }
  return Dataset(std::move(t), std::move(y), std::move(columns));
}

}  // namespace aipw
