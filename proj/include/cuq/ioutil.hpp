#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace cuq {

// shortest round-trip decimal form; parsing it back yields the same double
std::string format_double(double v);

// write-then-rename so readers never observe a partial file
void write_text_atomic(const std::filesystem::path& path, const std::string& content);

std::string read_text(const std::filesystem::path& path);

std::vector<std::string> split_csv_line(const std::string& line);

// whole file -> rows of fields; skips a UTF-8 BOM and blank trailing lines
std::vector<std::vector<std::string>> read_csv(const std::filesystem::path& path);

std::string trim(const std::string& s);

}  // namespace cuq
