#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace sdoh {

// ASCII lowercase; bytes >= 0x80 pass through untouched.
std::string to_lower(std::string_view s);
bool is_ascii_punct(char c);
bool is_ascii_space(char c);
// Optional sign, digits, optional single decimal part: ^[+-]?\d+(\.\d+)?$
bool is_numeric_surface(std::string_view s);
std::vector<std::string> split_whitespace(std::string_view s);
std::string join(const std::vector<std::string>& parts, std::string_view sep);
std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view content);

// Minimal RFC 4180 field quoting.
std::string csv_field(std::string_view s);
// Fixed-point formatting used in every CSV output.
std::string format_fixed(double value, int decimals);

}  // namespace sdoh
