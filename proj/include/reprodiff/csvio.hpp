#pragma once
#include <cstdint>
#include <string>
#include <vector>

namespace reprodiff {

// %.12g with the IEEE specials mapped to "inf"/"-inf"; NaN is refused (the
// output contract forbids it) by throwing.
std::string format_num(double v);

// RFC-4180 quoting: wrap in quotes when the cell holds comma, quote or
// newline; embedded quotes doubled.
std::string csv_quote(const std::string& cell);

// Deterministic in-memory CSV table, '\n' line endings, header mandatory.
class Csv {
 public:
  void header(const std::vector<std::string>& names);
  void row(const std::vector<std::string>& cells);
  const std::string& text() const { return text_; }
  void write(const std::string& path) const;

 private:
  std::string text_;
  size_t columns_ = 0;
  bool has_header_ = false;
};

uint64_t fnv1a64(const std::string& data);
// First 8 hex digits of the FNV-1a digest; embedded in output filenames.
std::string hash8(const std::string& data);

}  // namespace reprodiff
