#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace hawk::util {

// SHA-256 digest as a lowercase hex string.
std::string sha256_hex(std::string_view data);

// FNV-1a 64-bit; used for deterministic mock fillers and fault draws.
std::uint64_t fnv1a64(std::string_view data);

// Glob match with '*' (any run) and '?' (single char). Case sensitive.
bool glob_match(std::string_view pattern, std::string_view text);

std::string trim(std::string_view s);
std::string to_lower(std::string_view s);
std::vector<std::string> split(std::string_view s, char sep);

// Whole-file read/write. Throws Error(io_error) on failure.
std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view data);

// Write to <path>.tmp then rename, so readers never observe a torn file.
void write_file_atomic(const std::filesystem::path& path, std::string_view data);

std::int64_t now_ms();

}  // namespace hawk::util
