#include "gpmap/util.hpp"

#include <cctype>
#include <fstream>
#include <sstream>

namespace gpmap {

std::string to_hex(std::uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[i] = digits[v & 0xf];
    v >>= 4;
  }
  return out;
}

std::string hash_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open file for hashing: " + path.string());
  std::uint64_t h = 0xcbf29ce484222325ull;
  char buf[1 << 16];
  while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
    h = fnv64(std::string_view(buf, static_cast<std::size_t>(in.gcount())), h);
  }
  return to_hex(h);
}

std::uint64_t derive_seed(std::uint64_t seed, std::string_view purpose) {
  // splitmix64 finalizer over (seed ^ label hash)
  std::uint64_t z = seed ^ fnv64(purpose);
  z += 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

std::string ascii_lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

std::vector<std::string> split(std::string_view s, char delim) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= s.size(); ++i) {
    if (i == s.size() || s[i] == delim) {
      out.emplace_back(s.substr(start, i - start));
      start = i + 1;
    }
  }
  return out;
}

std::vector<std::string> split_list_field(std::string_view s, char delim) {
  std::vector<std::string> out;
  for (const auto& piece : split(s, delim)) {
    std::string t = trim(piece);
    if (!t.empty() && t != "-") out.push_back(std::move(t));
  }
  return out;
}

bool is_token_char(unsigned char c) {
  // Letters and digits extend tokens; bytes >= 0x80 (multi-byte UTF-8) are
  // treated as letters so non-ASCII words stay intact.
  return std::isalnum(c) || c >= 0x80;
}

std::size_t replace_surface(std::string& text, std::string_view surface, std::string_view marker) {
  if (surface.empty()) return 0;
  std::string out;
  out.reserve(text.size());
  std::size_t replaced = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t hit = text.find(surface, pos);
    if (hit == std::string::npos) {
      out.append(text, pos, text.size() - pos);
      break;
    }
    bool left_ok = hit == 0 || !is_token_char(static_cast<unsigned char>(text[hit - 1]));
    std::size_t end = hit + surface.size();
    bool right_ok = end >= text.size() || !is_token_char(static_cast<unsigned char>(text[end]));
    out.append(text, pos, hit - pos);
    if (left_ok && right_ok) {
      out.append(marker);
      ++replaced;
    } else {
      out.append(surface);
    }
    pos = end;
  }
  text = std::move(out);
  return replaced;
}

void for_each_line(const std::filesystem::path& path,
                   const std::function<void(std::size_t, const std::string&)>& fn) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open file: " + path.string());
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    fn(++n, line);
  }
}

void write_text_file(const std::filesystem::path& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open file for writing: " + path.string());
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw DataError("write failed: " + path.string());
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open file: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace gpmap
