#ifndef AIRTNN_TEXT_IO_H_
#define AIRTNN_TEXT_IO_H_

#include <cstdint>
#include <istream>
#include <string>
#include <string_view>
#include <vector>

namespace airtnn {

// Shortest decimal form that parses back to the identical double.
std::string FormatDouble(double v);

// Strict parsers; throw ParseError tagged with `line` on failure.
double ParseDouble(std::string_view s, int line = 0);
int64_t ParseInt(std::string_view s, int line = 0);
uint64_t ParseUint(std::string_view s, int line = 0);

std::vector<std::string_view> SplitWhitespace(std::string_view s);
std::vector<std::string> SplitList(std::string_view s, char sep = ',');
std::string_view Trim(std::string_view s);

// Line reader that tracks the 1-based line number for diagnostics.
class LineReader {
 public:
  explicit LineReader(std::istream& in) : in_(in) {}

  // Reads the next line; throws ParseError("unexpected end of file") at EOF.
  const std::string& Next();
  bool TryNext();
  const std::string& current() const { return current_; }
  int line() const { return line_; }

  // Reads a line and splits it into tokens, checking the leading keyword.
  std::vector<std::string_view> Expect(std::string_view keyword);

 private:
  std::istream& in_;
  std::string current_;
  int line_ = 0;
};

}  // namespace airtnn

#endif  // AIRTNN_TEXT_IO_H_
