#include "airtnn/text_io.h"

#include <charconv>
#include <cmath>
#include <limits>

#include "airtnn/error.h"

namespace airtnn {

std::string FormatDouble(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

double ParseDouble(std::string_view s, int line) {
  s = Trim(s);
  if (s == "inf" || s == "+inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  double v = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw ParseError("expected a real number, got '" + std::string(s) + "'",
                     line);
  }
  return v;
}

int64_t ParseInt(std::string_view s, int line) {
  s = Trim(s);
  int64_t v = 0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw ParseError("expected an integer, got '" + std::string(s) + "'",
                     line);
  }
  return v;
}

uint64_t ParseUint(std::string_view s, int line) {
  s = Trim(s);
  uint64_t v = 0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw ParseError("expected an unsigned integer, got '" + std::string(s) + "'",
                     line);
  }
  return v;
}

std::string_view Trim(std::string_view s) {
  const char* ws = " \t\r\n";
  auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

std::vector<std::string_view> SplitWhitespace(std::string_view s) {
  std::vector<std::string_view> out;
  size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t' || s[i] == '\r')) ++i;
    size_t j = i;
    while (j < s.size() && s[j] != ' ' && s[j] != '\t' && s[j] != '\r') ++j;
    if (j > i) out.push_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

std::vector<std::string> SplitList(std::string_view s, char sep) {
  std::vector<std::string> out;
  size_t start = 0;
  while (start <= s.size()) {
    size_t end = s.find(sep, start);
    if (end == std::string_view::npos) end = s.size();
    auto item = Trim(s.substr(start, end - start));
    if (!item.empty()) out.emplace_back(item);
    start = end + 1;
  }
  return out;
}

bool LineReader::TryNext() {
  if (!std::getline(in_, current_)) return false;
  ++line_;
  return true;
}

const std::string& LineReader::Next() {
  if (!TryNext()) throw ParseError("unexpected end of file", line_ + 1);
  return current_;
}

std::vector<std::string_view> LineReader::Expect(std::string_view keyword) {
  Next();
  auto tokens = SplitWhitespace(current_);
  if (tokens.empty() || tokens[0] != keyword) {
    throw ParseError("expected '" + std::string(keyword) + "' record", line_);
  }
  return tokens;
}

}  // namespace airtnn
