#pragma once

// Low-level file helpers behind CoverageStore, exposed for tests.

#include <filesystem>
#include <string>
#include <string_view>

namespace ubrl::store_io {

/// Writes everything to `fd`; ENOSPC and other failures throw StorageFull.
void write_all(int fd, std::string_view content, const std::string& what);
/// Writes to <path>.tmp and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);
void append_line(const std::filesystem::path& path, std::string_view line);
std::string sha256_hex(std::string_view data);

} // namespace ubrl::store_io
