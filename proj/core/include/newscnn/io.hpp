#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace newscnn {

// Writes `contents` to a sibling temp file and renames it over `path`, so a
// reader never observes a partially written file.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

std::string read_file(const std::filesystem::path& path);

// Shortest round-trip decimal representation of a double.
std::string format_double(double value);

}  // namespace newscnn
