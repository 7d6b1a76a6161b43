#pragma once

// Small text helpers shared by the CSV readers and writers.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace ecopt::io {

// Splits one CSV record. Double-quoted fields may contain commas; "" is an
// escaped quote. A trailing '\r' is stripped.
std::vector<std::string> split_csv(std::string_view line);

// Strict numeric parsing: the whole field must be consumed.
std::optional<double> parse_double(std::string_view s);
std::optional<long long> parse_int(std::string_view s);

// Shortest representation that parses back to the same double.
std::string format_double(double x);
// Fixed significant digits, used for human-facing CSVs and SVG coordinates.
std::string format_double(double x, int precision);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view contents);

std::uint64_t fnv1a64(std::string_view bytes);
std::string hex64(std::uint64_t v);

std::string join(const std::vector<std::string>& parts, std::string_view sep);
std::string trim(std::string_view s);

}  // namespace ecopt::io
