#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "forge/errors.hpp"

namespace forge::util {

// Whitespace here always means the ASCII set " \t\n\r\v\f"; none of the
// text paths do Unicode-aware whitespace handling.
bool is_space(char c);

std::string_view trim(std::string_view s);

// Raw whitespace-delimited tokens. Punctuation stays attached.
std::vector<std::string_view> split_whitespace(std::string_view s);

std::vector<std::string> split(std::string_view s, char sep);

std::string base64_encode(const void* data, std::size_t len);
std::vector<std::uint8_t> base64_decode(std::string_view s);

// Checked 64-bit arithmetic; throws DataError instead of wrapping.
std::uint64_t checked_add_u64(std::uint64_t a, std::uint64_t b, const char* what);
std::uint64_t checked_mul_u64(std::uint64_t a, std::uint64_t b, const char* what);

// Fixed-precision formatting to keep report bytes stable across runs.
std::string format_double(double v, int precision);
std::string format_with_commas(std::uint64_t v);

// One CSV record. Handles double-quoted fields with "" escapes; no
// multi-line fields.
std::vector<std::string> parse_csv_line(std::string_view line);
std::string csv_escape(std::string_view field);

// Column-aligned plain text or Markdown ("| a | b |") tables.
class TextTable {
  public:
    explicit TextTable(std::vector<std::string> headers);
    void add_row(std::vector<std::string> cells);
    std::string str() const;
    std::string markdown() const;

  private:
    std::vector<std::string> headers_;
    std::vector<std::vector<std::string>> rows_;
    std::vector<std::size_t> widths_;
};

std::string read_file(const std::string& path);

}  // namespace forge::util
