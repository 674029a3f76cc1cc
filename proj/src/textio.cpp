#include "feedaudit/textio.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "feedaudit/error.hpp"

namespace feedaudit::textio {

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    auto pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

std::string join(const std::vector<std::string>& parts, char sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out.push_back(sep);
    out += parts[i];
  }
  return out;
}

std::string format_exact(double value) {
  std::array<char, 64> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  if (ec != std::errc{}) throw DataError("cannot format number");
  return std::string(buf.data(), ptr);
}

std::string format_fixed4(double value) {
  if (std::fabs(value) < 0.00005) value = 0.0;  // no "-0.0000"
  std::array<char, 64> buf{};
  std::snprintf(buf.data(), buf.size(), "%.4f", value);
  return buf.data();
}

double parse_double(std::string_view text) {
  double value = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size())
    throw SchemaError("malformed number '" + std::string(text) + "'");
  return value;
}

std::int64_t parse_int(std::string_view text) {
  std::int64_t value = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size())
    throw SchemaError("malformed integer '" + std::string(text) + "'");
  return value;
}

std::uint64_t parse_uint(std::string_view text) {
  std::uint64_t value = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size())
    throw SchemaError("malformed unsigned integer '" + std::string(text) + "'");
  return value;
}

void write_magic(std::ostream& out, std::string_view kind, int version) {
  out << "#feedaudit-" << kind << '\t' << version << '\n';
}

void expect_magic(std::istream& in, std::string_view kind, int version,
                  std::string_view source) {
  std::string line;
  if (!std::getline(in, line))
    throw SchemaError(std::string(source) + ": empty file");
  auto fields = split(line, '\t');
  std::string expected = "#feedaudit-" + std::string(kind);
  if (fields.size() != 2 || fields[0] != expected)
    throw SchemaError(std::string(source) + ": not a " + std::string(kind) + " file");
  if (parse_int(fields[1]) != version)
    throw SchemaError(std::string(source) + ": schema version " +
                      std::string(fields[1]) + ", expected " +
                      std::to_string(version));
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace feedaudit::textio
