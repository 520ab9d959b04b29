#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace magtopt {

std::uint64_t fnv1a64(std::string_view data);
std::string hex64(std::uint64_t v);
/// Shortest round-trip form with 17 significant digits.
std::string fmt17(double v);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::string> comments;  ///< lines starting with '#', without the '#'
  std::vector<std::vector<double>> rows;
};

/// Reads a numeric CSV with one header row. Comment lines start with '#'.
CsvTable read_numeric_csv(const std::filesystem::path& path);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view text);

}  // namespace magtopt
