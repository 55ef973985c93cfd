#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace postseg::csv {

/// Shortest decimal text that parses back to the same double.
std::string format_double(double value);
double parse_double(const std::string& text);

std::vector<std::string> split_line(const std::string& line);

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

Table read(const std::filesystem::path& path);
void write(const Table& table, const std::filesystem::path& path);

}  // namespace postseg::csv
