#pragma once

#include <string>
#include <vector>

namespace ulo {

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

// Fields in this project never contain commas or quotes, so rows are plain
// comma joins. Doubles go through fmt_double for lossless round-trips.
void write_csv(const std::string& path, const CsvTable& table);

// Throws FormatError naming the 1-based line number on ragged rows.
CsvTable read_csv(const std::string& path);

// Shortest representation that parses back to the identical double.
std::string fmt_double(double v);
double parse_double(const std::string& s);  // strict; FormatError otherwise
int64_t parse_int(const std::string& s);

}  // namespace ulo
