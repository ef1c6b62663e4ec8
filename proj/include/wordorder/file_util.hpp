#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace wordorder {

std::string read_file(const std::filesystem::path& path);
std::vector<std::string> read_lines(const std::filesystem::path& path);

/// Writes to `path.tmp` then renames over `path`, so readers never see a partial file.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

}  // namespace wordorder
