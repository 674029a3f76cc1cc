#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace feedaudit::textio {

/// Splits on a single-character separator. Empty fields are kept.
std::vector<std::string_view> split(std::string_view line, char sep);

std::string join(const std::vector<std::string>& parts, char sep);

/// Shortest decimal text that parses back to exactly `value`.
std::string format_exact(double value);

/// Fixed 4-decimal rendering used by every CSV report.
std::string format_fixed4(double value);

double parse_double(std::string_view text);
std::int64_t parse_int(std::string_view text);
std::uint64_t parse_uint(std::string_view text);

/// Magic header lines look like "#feedaudit-<kind>\t<version>".
void write_magic(std::ostream& out, std::string_view kind, int version);

/// Reads and checks the magic line; throws SchemaError on mismatch.
void expect_magic(std::istream& in, std::string_view kind, int version,
                  std::string_view source);

std::string read_file(const std::string& path);

}  // namespace feedaudit::textio
