#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace hierlogit {

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  // Leading '#' lines found before the header (artifact header blocks).
  std::vector<std::string> comments;

  int column(const std::string& name) const;  // -1 when absent
};

// RFC-4180 reader: quoted fields, doubled quotes, embedded newlines,
// LF or CRLF endings. Lines starting with '#' before the header row are
// collected as comments.
CsvTable read_csv(const std::filesystem::path& path);
CsvTable parse_csv(const std::string& text);

std::string csv_escape(const std::string& field);
std::string format_csv_row(const std::vector<std::string>& fields);

// Writes comments (each prefixed "# "), then header, then rows, LF endings.
void write_csv(const std::filesystem::path& path,
               const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows,
               const std::vector<std::string>& comments = {});

// Locale-independent double formatting with enough digits to round-trip.
std::string format_double(double value);

}  // namespace hierlogit
