#include "forge/util.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace forge::util {

bool is_space(char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f';
}

std::string_view trim(std::string_view s) {
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && is_space(s[b])) ++b;
    while (e > b && is_space(s[e - 1])) --e;
    return s.substr(b, e - b);
}

std::vector<std::string_view> split_whitespace(std::string_view s) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < s.size()) {
        while (i < s.size() && is_space(s[i])) ++i;
        std::size_t start = i;
        while (i < s.size() && !is_space(s[i])) ++i;
        if (i > start) out.push_back(s.substr(start, i - start));
    }
    return out;
}

std::vector<std::string> split(std::string_view s, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= s.size(); ++i) {
        if (i == s.size() || s[i] == sep) {
            out.emplace_back(s.substr(start, i - start));
            start = i + 1;
        }
    }
    return out;
}

static const char kB64Alphabet[] =
    "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

std::string base64_encode(const void* data, std::size_t len) {
    const auto* p = static_cast<const std::uint8_t*>(data);
    std::string out;
    out.reserve((len + 2) / 3 * 4);
    std::size_t i = 0;
    for (; i + 3 <= len; i += 3) {
        std::uint32_t v = (p[i] << 16) | (p[i + 1] << 8) | p[i + 2];
        out.push_back(kB64Alphabet[(v >> 18) & 63]);
        out.push_back(kB64Alphabet[(v >> 12) & 63]);
        out.push_back(kB64Alphabet[(v >> 6) & 63]);
        out.push_back(kB64Alphabet[v & 63]);
    }
    if (i < len) {
        std::uint32_t v = p[i] << 16;
        bool two = i + 1 < len;
        if (two) v |= p[i + 1] << 8;
        out.push_back(kB64Alphabet[(v >> 18) & 63]);
        out.push_back(kB64Alphabet[(v >> 12) & 63]);
        out.push_back(two ? kB64Alphabet[(v >> 6) & 63] : '=');
        out.push_back('=');
    }
    return out;
}

std::vector<std::uint8_t> base64_decode(std::string_view s) {
    static int table[256];
    static bool init = [] {
        for (int& t : table) t = -1;
        for (int i = 0; i < 64; ++i) table[static_cast<unsigned char>(kB64Alphabet[i])] = i;
        return true;
    }();
    (void)init;

    std::vector<std::uint8_t> out;
    out.reserve(s.size() / 4 * 3);
    int val = 0;
    int bits = -8;
    for (char c : s) {
        if (c == '=' || is_space(c)) continue;
        int d = table[static_cast<unsigned char>(c)];
        if (d < 0) throw FormatError("base64: invalid character");
        val = (val << 6) | d;
        bits += 6;
        if (bits >= 0) {
            out.push_back(static_cast<std::uint8_t>((val >> bits) & 0xFF));
            bits -= 8;
        }
    }
    return out;
}

std::uint64_t checked_add_u64(std::uint64_t a, std::uint64_t b, const char* what) {
    std::uint64_t r = 0;
    if (__builtin_add_overflow(a, b, &r) || r > static_cast<std::uint64_t>(INT64_MAX))
        throw DataError(std::string(what) + ": 64-bit overflow");
    return r;
}

std::uint64_t checked_mul_u64(std::uint64_t a, std::uint64_t b, const char* what) {
    std::uint64_t r = 0;
    if (__builtin_mul_overflow(a, b, &r) || r > static_cast<std::uint64_t>(INT64_MAX))
        throw DataError(std::string(what) + ": 64-bit overflow");
    return r;
}

std::string format_double(double v, int precision) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", precision, v);
    return buf;
}

std::string format_with_commas(std::uint64_t v) {
    std::string digits = std::to_string(v);
    std::string out;
    int pos = static_cast<int>(digits.size());
    for (int i = 0; i < static_cast<int>(digits.size()); ++i) {
        out.push_back(digits[i]);
        --pos;
        if (pos > 0 && pos % 3 == 0) out.push_back(',');
    }
    return out;
}

std::vector<std::string> parse_csv_line(std::string_view line) {
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur.push_back('"');
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur.push_back(c);
            }
        } else if (c == '"' && cur.empty()) {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(cur);
            cur.clear();
        } else if (c == '\r' && i + 1 == line.size()) {
            // tolerate CRLF
        } else {
            cur.push_back(c);
        }
    }
    fields.push_back(cur);
    return fields;
}

std::string csv_escape(std::string_view field) {
    bool needs = field.find_first_of(",\"\n") != std::string_view::npos;
    if (!needs) return std::string(field);
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += "\"\"";
        else out.push_back(c);
    }
    out.push_back('"');
    return out;
}

TextTable::TextTable(std::vector<std::string> headers) : headers_(std::move(headers)) {
    widths_.resize(headers_.size());
    for (std::size_t i = 0; i < headers_.size(); ++i) widths_[i] = headers_[i].size();
}

void TextTable::add_row(std::vector<std::string> cells) {
    cells.resize(headers_.size());
    for (std::size_t i = 0; i < cells.size(); ++i)
        widths_[i] = std::max(widths_[i], cells[i].size());
    rows_.push_back(std::move(cells));
}

static void append_padded(std::string& out, const std::string& cell, std::size_t w) {
    out += cell;
    out.append(w - cell.size(), ' ');
}

std::string TextTable::str() const {
    std::string out;
    std::size_t total = 0;
    for (std::size_t i = 0; i < headers_.size(); ++i) {
        append_padded(out, headers_[i], widths_[i]);
        if (i + 1 < headers_.size()) out += "  ";
        total += widths_[i] + (i + 1 < headers_.size() ? 2 : 0);
    }
    out += '\n';
    out.append(total, '-');
    out += '\n';
    for (const auto& row : rows_) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            append_padded(out, row[i], widths_[i]);
            if (i + 1 < row.size()) out += "  ";
        }
        out += '\n';
    }
    return out;
}

std::string TextTable::markdown() const {
    std::string out = "|";
    for (const auto& h : headers_) out += " " + h + " |";
    out += "\n|";
    for (std::size_t i = 0; i < headers_.size(); ++i) out += "---|";
    out += '\n';
    for (const auto& row : rows_) {
        out += "|";
        for (const auto& c : row) out += " " + c + " |";
        out += '\n';
    }
    return out;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace forge::util
