#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

// Small text helpers shared by the file-format readers.
namespace fednb::detail {

std::string trim(std::string_view s);
std::string chomp(std::string_view s);  // drops a trailing '\r'
std::string strip_comment(std::string_view s);  // drops everything after '#'
std::vector<std::string> split_ws(std::string_view s);
std::vector<std::string> split_csv(std::string_view s);  // no quoting
std::vector<std::string> split_list(std::string_view s);  // comma separated, trimmed
std::string join(const std::vector<std::string>& parts, std::string_view sep);

std::optional<double> try_parse_double(std::string_view s);
double parse_double(std::string_view s, const std::string& where);
int parse_int(std::string_view s, const std::string& where);
long long parse_int64(std::string_view s, const std::string& where);

std::string format_exact(double v);   // shortest text that round-trips
std::string format_fixed6(double v);  // "%.6f"

}  // namespace fednb::detail
