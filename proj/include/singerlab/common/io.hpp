#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace singerlab {

// Writes via a sibling temporary file and rename, so readers never see a
// partially written artifact.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

std::string read_file(const std::filesystem::path& path);

// Hex SHA-256-free digest (FNV-1a 64) of bytes; used for config hashes and
// parameter checksums, not for security.
std::string digest_hex(std::string_view bytes);

void log_info(std::string_view msg);
void log_warn(std::string_view msg);
void set_log_quiet(bool quiet);

}  // namespace singerlab
