#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "changeplane/types.hpp"

namespace changeplane::cli {

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

/// RFC 4180: comma separated, optional double quotes with "" escapes,
/// LF or CRLF line ends, quoted fields may span lines. A UTF-8 byte order
/// mark is skipped. Throws Error{parse} on malformed input and Error{io} on an
/// empty stream.
CsvTable parse_csv(std::istream& in);
CsvTable read_csv_file(const std::string& path);

/// Quotes a field when it contains a comma, quote or line break.
std::string csv_escape(const std::string& field);

/// %.17g; non-finite values print as nan, inf and -inf.
std::string format_number(double value);

struct ColumnSpec {
  std::string response;
  std::vector<std::string> baseline;
  std::vector<std::string> difference;
  std::vector<std::string> grouping;
  bool add_intercept_x = false;
  bool add_intercept_z = false;
  bool add_intercept_u = false;
};

ColumnSpec parse_column_spec(const std::string& json_text);
ColumnSpec read_column_spec_file(const std::string& path);
std::string column_spec_to_json(const ColumnSpec& spec);

/// Maps columns per spec, prepending columns of ones where flagged. Row order
/// is preserved. Missing columns raise Error{missing_column} naming the
/// column; a non-numeric cell raises Error{parse} citing (data row, "column")
/// with data rows counted from 1.
Dataset dataset_from_table(const CsvTable& table, const ColumnSpec& spec);
Dataset load_csv(const std::string& path, const ColumnSpec& spec);

}  // namespace changeplane::cli
