#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace gpmap {

/// Thrown for problems in input data or file content (CLI exit code 2).
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Thrown for bad invocations: missing flags, invalid argument combinations
/// (CLI exit code 1).
class UsageError : public std::runtime_error {
 public:
  explicit UsageError(const std::string& msg) : std::runtime_error(msg) {}
};

// ---------------------------------------------------------------------------
// Hashing
// ---------------------------------------------------------------------------

/// FNV-1a 64-bit. Used for stable content ids and artifact hashes.
inline std::uint64_t fnv64(std::string_view data, std::uint64_t seed = 0xcbf29ce484222325ull) {
  std::uint64_t h = seed;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::string to_hex(std::uint64_t v);

/// FNV-1a over a whole file's bytes, formatted as 16 hex digits.
std::string hash_file(const std::filesystem::path& path);

/// Mixes a base seed with a purpose label so independent sampling stages
/// draw from unrelated streams.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view purpose);

// ---------------------------------------------------------------------------
// String helpers (ASCII-oriented; tokenization lives in metrics.hpp)
// ---------------------------------------------------------------------------

std::string ascii_lower(std::string_view s);
std::string trim(std::string_view s);
std::vector<std::string> split(std::string_view s, char delim);

/// Splits on `delim`, trims each piece, drops empties. NCBI-style "-"
/// placeholders also count as empty.
std::vector<std::string> split_list_field(std::string_view s, char delim = '|');

bool is_token_char(unsigned char c);

/// Replaces whole-token occurrences of `surface` in `text` with `marker`.
/// Boundaries follow the tokenizer's notion of a token character. Returns
/// the number of replacements.
std::size_t replace_surface(std::string& text, std::string_view surface, std::string_view marker);

// ---------------------------------------------------------------------------
// Line-oriented IO
// ---------------------------------------------------------------------------

/// Calls fn(line_number, line) for each line (1-based, no trailing '\n').
/// Throws DataError if the file cannot be opened.
void for_each_line(const std::filesystem::path& path,
                   const std::function<void(std::size_t, const std::string&)>& fn);

void write_text_file(const std::filesystem::path& path, std::string_view content);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace gpmap
