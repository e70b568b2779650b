#pragma once

// Delimited tables: comma-separated with a required header, optional leading
// "# " comment lines, RFC 4180 quoting. Floats use the shortest text that
// reads back to the same double.

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "aipw/models.hpp"

namespace aipw {

struct Table {
  std::vector<std::string> comments;  // without the leading "# "
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column_index(std::string_view name) const;  // throws MissingColumn
};

enum class TableFormat { Csv, Markdown };

std::string format_double(double v);
// Accepts anything format_double produces, plus "NA"/"" as NaN.
double parse_double(std::string_view s);

void write_table(std::ostream& os, const Table& t, TableFormat format = TableFormat::Csv);
Table read_csv(std::istream& is);
Table read_csv_file(const std::filesystem::path& path);

// Column roles for a data file. Every other column is loaded as a covariate.
struct DataColumns {
  std::string t = "t";
  std::string y = "y";
};

// Throws DataError with 1-based line numbers for malformed cells.
Dataset dataset_from_table(const Table& table, const DataColumns& roles);

}  // namespace aipw
