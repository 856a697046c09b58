#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace glab {

// Shortest round-trip decimal form; "nan", "inf" and "-inf" for non-finite values.
std::string format_double(double v);

// Writes `contents` to a sibling temporary file and renames it over `path`.
void write_file_atomically(const std::filesystem::path& path, std::string_view contents);

}  // namespace glab
