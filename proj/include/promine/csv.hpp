#pragma once

#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "promine/errors.hpp"

namespace promine {

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

// Comma separator, double-quote escaping, header row required by callers.
// Handles quoted fields with embedded commas, quotes ("") and newlines.
inline CsvTable read_csv(std::istream& in) {
  CsvTable table;
  std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  // strip UTF-8 BOM
  if (content.size() >= 3 && content[0] == '\xEF' && content[1] == '\xBB' && content[2] == '\xBF')
    content.erase(0, 3);

  std::vector<std::string> record;
  std::string field;
  bool in_quotes = false;
  bool record_started = false;
  std::size_t record_no = 1;

  auto end_field = [&] {
    record.push_back(field);
    field.clear();
  };
  auto end_record = [&] {
    end_field();
    if (record_no == 1) {
      table.header = record;
    } else {
      if (record.size() != table.header.size())
        throw row_error("row " + std::to_string(record_no - 1) + ": expected " +
                        std::to_string(table.header.size()) + " fields, got " +
                        std::to_string(record.size()));
      table.rows.push_back(record);
    }
    record.clear();
    record_started = false;
    ++record_no;
  };

  for (std::size_t i = 0; i < content.size(); ++i) {
    char c = content[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < content.size() && content[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        field.push_back(c);
      }
      continue;
    }
    switch (c) {
      case '"':
        in_quotes = true;
        record_started = true;
        break;
      case ',':
        end_field();
        record_started = true;
        break;
      case '\r':
        if (i + 1 < content.size() && content[i + 1] == '\n') ++i;
        end_record();
        break;
      case '\n':
        end_record();
        break;
      default:
        field.push_back(c);
        record_started = true;
    }
  }
  if (in_quotes) throw row_error("unterminated quoted field at end of input");
  if (record_started || !field.empty() || !record.empty()) end_record();
  return table;
}

inline std::string csv_escape(const std::string& s) {
  bool needs_quotes = false;
  for (char c : s) {
    if (c == ',' || c == '"' || c == '\n' || c == '\r') {
      needs_quotes = true;
      break;
    }
  }
  if (!needs_quotes) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += "\"\"";
    else out.push_back(c);
  }
  out.push_back('"');
  return out;
}

inline void write_csv_record(std::ostream& os, const std::vector<std::string>& fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) os.put(',');
    os << csv_escape(fields[i]);
  }
  os.put('\n');
}

inline void write_csv(std::ostream& os, const CsvTable& table) {
  write_csv_record(os, table.header);
  for (const auto& row : table.rows) write_csv_record(os, row);
}

}  // namespace promine
