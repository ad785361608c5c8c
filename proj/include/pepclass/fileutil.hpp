#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace pepclass {

/// Writes to a sibling temporary file and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

/// Throws std::runtime_error naming the path when it cannot be read.
std::string read_file(const std::filesystem::path& path);

/// %.17g formatting; round-trips every finite double.
std::string format_real(double v);

}  // namespace pepclass
