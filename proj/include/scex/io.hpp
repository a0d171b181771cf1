#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace scex {

std::string read_text_file(const std::filesystem::path& path);

/// Writes via a sibling temp file and rename, so readers never observe a
/// partially written file.
void write_text_file_atomic(const std::filesystem::path& path, std::string_view content);

/// Shortest decimal text that parses back to exactly the same double.
std::string format_double(double v);

}  // namespace scex
