#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <filesystem>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace nbfrom {

template <class T>
void write_le(std::ostream& out, T value) {
  using U = std::conditional_t<sizeof(T) == 8, std::uint64_t, std::uint32_t>;
  static_assert(sizeof(T) == sizeof(U));
  auto bits = std::bit_cast<U>(value);
  std::array<char, sizeof(U)> bytes;
  for (std::size_t i = 0; i < sizeof(U); ++i) {
    bytes[i] = static_cast<char>(bits & 0xffu);
    bits >>= 8;
  }
  out.write(bytes.data(), bytes.size());
}

template <class T>
T read_le(std::istream& in) {
  using U = std::conditional_t<sizeof(T) == 8, std::uint64_t, std::uint32_t>;
  std::array<char, sizeof(U)> bytes;
  in.read(bytes.data(), bytes.size());
  if (!in) throw std::runtime_error("unexpected end of binary data");
  U bits = 0;
  for (std::size_t i = sizeof(U); i-- > 0;) {
    bits = (bits << 8) | static_cast<unsigned char>(bytes[i]);
  }
  return std::bit_cast<T>(bits);
}

/// Writes `content` to a sibling temp file and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

std::string read_file(const std::filesystem::path& path);

/// Shortest exact form is not required; always 17 significant digits.
std::string format_double(double value);
void append_double(std::string& out, double value);

/// Parses a complete token as a double; throws std::invalid_argument otherwise.
double parse_double(std::string_view token);

/// Splits a CSV line on commas (no quoting).
std::vector<std::string_view> split_csv(std::string_view line);

/// Row-oriented text reader that tracks line numbers for error messages.
class LineReader {
 public:
  explicit LineReader(const std::filesystem::path& path);

  /// Next non-empty line, without trailing '\r'. False at end of file.
  bool next(std::string_view& line);
  std::size_t line_number() const { return line_no_; }
  const std::filesystem::path& path() const { return path_; }

  /// Throws std::runtime_error formatted as "<path>:<line>: <message>".
  [[noreturn]] void fail(const std::string& message) const;

 private:
  std::filesystem::path path_;
  std::string content_;
  std::size_t pos_ = 0;
  std::size_t line_no_ = 0;
};

/// 64-bit FNV-1a, used for config and mesh fingerprints.
std::uint64_t fnv1a(std::string_view bytes, std::uint64_t seed = 0xcbf29ce484222325ULL);
std::string hex64(std::uint64_t value);

}  // namespace nbfrom
