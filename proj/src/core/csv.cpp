#include "core/csv.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "core/errors.hpp"

namespace hierlogit {

int CsvTable::column(const std::string& name) const {
  for (size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return static_cast<int>(i);
  }
  return -1;
}

namespace {

// Splits the raw text into records honoring quoted fields, then fields.
std::vector<std::vector<std::string>> parse_records(const std::string& text,
                                                    size_t start,
                                                    std::vector<std::string>* comments) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> fields;
  std::string field;
  bool in_quotes = false;
  bool at_line_start = true;
  bool in_comment = false;
  std::string comment_line;

  auto end_field = [&]() {
    fields.push_back(field);
    field.clear();
  };
  auto end_record = [&]() {
    end_field();
    records.push_back(std::move(fields));
    fields.clear();
  };

  for (size_t i = start; i < text.size(); ++i) {
    const char c = text[i];
    if (in_comment) {
      if (c == '\n') {
        if (comments) {
          std::string trimmed = comment_line;
          if (!trimmed.empty() && trimmed.back() == '\r') trimmed.pop_back();
          if (!trimmed.empty() && trimmed.front() == ' ') trimmed.erase(0, 1);
          comments->push_back(trimmed);
        }
        comment_line.clear();
        in_comment = false;
        at_line_start = true;
      } else {
        comment_line.push_back(c);
      }
      continue;
    }
    if (at_line_start && !in_quotes && c == '#' && records.empty() &&
        fields.empty() && field.empty()) {
      in_comment = true;
      continue;
    }
    at_line_start = false;
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
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
        break;
      case ',':
        end_field();
        break;
      case '\r':
        break;  // handled with the following '\n'
      case '\n':
        end_record();
        at_line_start = true;
        break;
      default:
        field.push_back(c);
    }
  }
  if (in_quotes) {
    throw Error(ErrorCode::MalformedNumeric, "unterminated quoted field");
  }
  if (!field.empty() || !fields.empty()) end_record();
  return records;
}

}  // namespace

CsvTable parse_csv(const std::string& text) {
  CsvTable table;
  auto records = parse_records(text, 0, &table.comments);
  if (records.empty()) return table;
  table.header = std::move(records.front());
  table.rows.assign(std::make_move_iterator(records.begin() + 1),
                    std::make_move_iterator(records.end()));
  for (size_t r = 0; r < table.rows.size(); ++r) {
    if (table.rows[r].size() != table.header.size()) {
      std::ostringstream msg;
      msg << "row " << (r + 1) << " has " << table.rows[r].size()
          << " fields, header has " << table.header.size();
      throw Error(ErrorCode::MalformedNumeric, msg.str());
    }
  }
  return table;
}

CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorCode::MissingInput, "cannot open " + path.string());
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_csv(buffer.str());
}

std::string csv_escape(const std::string& field) {
  if (field.find_first_of(",\"\n\r") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += "\"\"";
    else out.push_back(c);
  }
  out.push_back('"');
  return out;
}

std::string format_csv_row(const std::vector<std::string>& fields) {
  std::string line;
  for (size_t i = 0; i < fields.size(); ++i) {
    if (i) line.push_back(',');
    line += csv_escape(fields[i]);
  }
  return line;
}

void write_csv(const std::filesystem::path& path,
               const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows,
               const std::vector<std::string>& comments) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw Error(ErrorCode::MissingInput, "cannot write " + path.string());
  }
  for (const auto& c : comments) out << "# " << c << "\n";
  out << format_csv_row(header) << "\n";
  for (const auto& row : rows) out << format_csv_row(row) << "\n";
}

std::string format_double(double value) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", value);
  return buf;
}

}  // namespace hierlogit
