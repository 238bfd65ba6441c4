#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace wesnet {

/// Writes via a sibling temp file and rename, so readers never see a partial file.
/// Throws IoError carrying the path and OS error text.
void write_file_atomic(const std::filesystem::path& path, std::string_view bytes);

std::string read_file(const std::filesystem::path& path);

/// Creates the directory if needed and verifies it accepts new files.
void ensure_writable_dir(const std::filesystem::path& dir);

/// Throws IoError if `path` exists and `overwrite` is false.
void guard_overwrite(const std::filesystem::path& path, bool overwrite);

}  // namespace wesnet
