#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace amimpute {

// Comma-separated text with a header row. No quoting: fields may not contain commas.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(const std::string& name) const;  // throws ParseError naming the column
  bool has_column(const std::string& name) const;

  // Empty cells are nullopt when allow_missing, otherwise a ParseError with row context.
  std::vector<std::optional<double>> numeric(const std::string& name, bool allow_missing) const;
  std::vector<double> numeric(const std::string& name) const;
};

CsvTable read_csv(const std::filesystem::path& path);
void write_csv(const std::filesystem::path& path, const CsvTable& table);

// Shortest decimal string that round-trips the double.
std::string format_double(double value);

}  // namespace amimpute
