#include "csv.hpp"

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

namespace changeplane::cli {

namespace {

using nlohmann::json;

std::string location(std::size_t line) {
  return "line " + std::to_string(line);
}

}  // namespace

CsvTable parse_csv(std::istream& in) {
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (text.rfind("\xEF\xBB\xBF", 0) == 0) text.erase(0, 3);
  if (text.empty()) throw Error(ErrorKind::io, "CSV input is empty");

  std::vector<std::vector<std::string>> records;
  std::vector<std::string> record;
  std::string field;
  bool quoted = false;       // inside a quoted field
  bool was_quoted = false;   // current field opened with a quote
  std::size_t line = 1;
  std::size_t quote_line = 0;

  const auto end_field = [&] {
    record.push_back(field);
    field.clear();
    was_quoted = false;
  };
  const auto end_record = [&] {
    end_field();
    // A lone empty field is a blank line.
    if (!(record.size() == 1 && record[0].empty())) records.push_back(std::move(record));
    record.clear();
  };

  for (std::size_t k = 0; k < text.size(); ++k) {
    const char c = text[k];
    if (quoted) {
      if (c == '"') {
        if (k + 1 < text.size() && text[k + 1] == '"') {
          field.push_back('"');
          ++k;
        } else {
          quoted = false;
        }
      } else {
        if (c == '\n') ++line;
        field.push_back(c);
      }
      continue;
    }
    switch (c) {
      case '"':
        if (!field.empty() || was_quoted) {
          throw Error(ErrorKind::parse, "unexpected quote in CSV at " + location(line));
        }
        quoted = true;
        was_quoted = true;
        quote_line = line;
        break;
      case ',':
        end_field();
        break;
      case '\r':
        if (k + 1 < text.size() && text[k + 1] == '\n') break;
        field.push_back(c);
        break;
      case '\n':
        end_record();
        ++line;
        break;
      default:
        if (was_quoted) {
          throw Error(ErrorKind::parse, "text after closing quote in CSV at " + location(line));
        }
        field.push_back(c);
    }
  }
  if (quoted) {
    throw Error(ErrorKind::parse, "unterminated quoted field starting at " + location(quote_line));
  }
  if (!field.empty() || !record.empty() || was_quoted) end_record();
  if (records.empty()) throw Error(ErrorKind::io, "CSV input is empty");

  CsvTable table;
  table.header = std::move(records.front());
  for (std::size_t r = 1; r < records.size(); ++r) {
    if (records[r].size() != table.header.size()) {
      std::ostringstream msg;
      msg << "CSV data row " << r << " has " << records[r].size() << " fields, header has "
          << table.header.size();
      throw Error(ErrorKind::parse, msg.str());
    }
    table.rows.push_back(std::move(records[r]));
  }
  return table;
}

CsvTable read_csv_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::io, "cannot open '" + path + "'");
  return parse_csv(in);
}

std::string csv_escape(const std::string& field) {
  if (field.find_first_of(",\"\r\n") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

std::string format_number(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

namespace {

std::vector<std::string> name_list(const json& j, const std::string& key) {
  if (!j.contains(key)) return {};
  const json& v = j.at(key);
  if (!v.is_array()) throw Error(ErrorKind::parse, "column spec: /" + key + " must be an array");
  std::vector<std::string> out;
  for (std::size_t k = 0; k < v.size(); ++k) {
    if (!v[k].is_string()) {
      throw Error(ErrorKind::parse,
                  "column spec: /" + key + "/" + std::to_string(k) + " must be a string");
    }
    out.push_back(v[k].get<std::string>());
  }
  return out;
}

bool flag(const json& j, const std::string& key) {
  if (!j.contains(key)) return false;
  if (!j.at(key).is_boolean()) {
    throw Error(ErrorKind::parse, "column spec: /" + key + " must be a boolean");
  }
  return j.at(key).get<bool>();
}

}  // namespace

ColumnSpec parse_column_spec(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::parse, std::string("column spec is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw Error(ErrorKind::parse, "column spec must be a JSON object");
  static const std::set<std::string> known{"response",        "baseline",        "difference",
                                           "grouping",        "add_intercept_x", "add_intercept_z",
                                           "add_intercept_u"};
  for (const auto& item : j.items()) {
    if (!known.count(item.key())) {
      throw Error(ErrorKind::parse, "column spec: unknown key /" + item.key());
    }
  }
  if (!j.contains("response") || !j.at("response").is_string()) {
    throw Error(ErrorKind::parse, "column spec: /response must be a string");
  }
  ColumnSpec spec;
  spec.response = j.at("response").get<std::string>();
  spec.baseline = name_list(j, "baseline");
  spec.difference = name_list(j, "difference");
  spec.grouping = name_list(j, "grouping");
  spec.add_intercept_x = flag(j, "add_intercept_x");
  spec.add_intercept_z = flag(j, "add_intercept_z");
  spec.add_intercept_u = flag(j, "add_intercept_u");

  const auto check_block = [&](const std::vector<std::string>& names, const char* block) {
    std::set<std::string> seen;
    for (const auto& name : names) {
      if (name == spec.response) {
        throw Error(ErrorKind::invalid_argument,
                    "column spec: response '" + name + "' also listed in " + block);
      }
      if (!seen.insert(name).second) {
        throw Error(ErrorKind::invalid_argument,
                    "column spec: '" + name + "' listed twice in " + block);
      }
    }
  };
  check_block(spec.baseline, "baseline");
  check_block(spec.difference, "difference");
  check_block(spec.grouping, "grouping");
  return spec;
}

ColumnSpec read_column_spec_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::io, "cannot open '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_column_spec(buf.str());
}

std::string column_spec_to_json(const ColumnSpec& spec) {
  json j;
  j["response"] = spec.response;
  j["baseline"] = spec.baseline;
  j["difference"] = spec.difference;
  j["grouping"] = spec.grouping;
  j["add_intercept_x"] = spec.add_intercept_x;
  j["add_intercept_z"] = spec.add_intercept_z;
  j["add_intercept_u"] = spec.add_intercept_u;
  return j.dump(2) + "\n";
}

Dataset dataset_from_table(const CsvTable& table, const ColumnSpec& spec) {
  std::map<std::string, std::size_t> index;
  for (std::size_t c = 0; c < table.header.size(); ++c) {
    if (!index.emplace(table.header[c], c).second) {
      throw Error(ErrorKind::parse, "duplicate CSV column '" + table.header[c] + "'");
    }
  }
  const auto column = [&](const std::string& name) {
    const auto it = index.find(name);
    if (it == index.end()) {
      throw Error(ErrorKind::missing_column, "column '" + name + "' not found in CSV header");
    }
    return it->second;
  };
  if (table.rows.empty()) throw Error(ErrorKind::io, "CSV has a header but no data rows");

  const auto n = static_cast<Index>(table.rows.size());
  const auto value = [&](Index row, std::size_t col) {
    const std::string& cell = table.rows[static_cast<std::size_t>(row)][col];
    const char* begin = cell.c_str();
    char* end = nullptr;
    errno = 0;
    const double v = std::strtod(begin, &end);
    while (end && (*end == ' ' || *end == '\t')) ++end;
    if (cell.empty() || end == begin || *end != '\0' || errno == ERANGE) {
      std::ostringstream msg;
      msg << "non-numeric cell '" << cell << "' at (" << row + 1 << ", \"" << table.header[col]
          << "\")";
      throw Error(ErrorKind::parse, msg.str());
    }
    return v;
  };
  const auto block = [&](const std::vector<std::string>& names, bool intercept) {
    std::vector<std::size_t> cols;
    for (const auto& name : names) cols.push_back(column(name));
    const Index offset = intercept ? 1 : 0;
    Matrix M(n, static_cast<Index>(cols.size()) + offset);
    for (Index i = 0; i < n; ++i) {
      if (intercept) M(i, 0) = 1.0;
      for (std::size_t k = 0; k < cols.size(); ++k) {
        M(i, static_cast<Index>(k) + offset) = value(i, cols[k]);
      }
    }
    return M;
  };

  Dataset d;
  const std::size_t ycol = column(spec.response);
  d.X = block(spec.baseline, spec.add_intercept_x);
  d.Z = block(spec.difference, spec.add_intercept_z);
  d.U = block(spec.grouping, spec.add_intercept_u);
  d.y.resize(n);
  for (Index i = 0; i < n; ++i) d.y(i) = value(i, ycol);
  return d;
}

Dataset load_csv(const std::string& path, const ColumnSpec& spec) {
  return dataset_from_table(read_csv_file(path), spec);
}

}  // namespace changeplane::cli
