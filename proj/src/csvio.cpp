#include "reprodiff/csvio.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "reprodiff/errors.hpp"

namespace reprodiff {

std::string format_num(double v) {
  if (std::isnan(v)) throw ComputeError("refusing to write NaN to an output table");
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

std::string csv_quote(const std::string& cell) {
  if (cell.find_first_of(",\"\n\r") == std::string::npos) return cell;
  std::string out = "\"";
  for (char c : cell) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

void Csv::header(const std::vector<std::string>& names) {
  if (has_header_) throw ComputeError("CSV header written twice");
  columns_ = names.size();
  has_header_ = true;
  for (size_t i = 0; i < names.size(); ++i) {
    if (i) text_ += ',';
    text_ += csv_quote(names[i]);
  }
  text_ += '\n';
}

void Csv::row(const std::vector<std::string>& cells) {
  if (!has_header_) throw ComputeError("CSV row written before header");
  if (cells.size() != columns_)
    throw ComputeError("CSV row width mismatch: got " + std::to_string(cells.size()) +
                       ", expected " + std::to_string(columns_));
  for (size_t i = 0; i < cells.size(); ++i) {
    if (i) text_ += ',';
    text_ += csv_quote(cells[i]);
  }
  text_ += '\n';
}

void Csv::write(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ComputeError("cannot open output file: " + path);
  out << text_;
  if (!out) throw ComputeError("failed writing output file: " + path);
}

uint64_t fnv1a64(const std::string& data) {
  uint64_t h = 1469598103934665603ull;
  for (unsigned char c : data) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string hash8(const std::string& data) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(fnv1a64(data)));
  return std::string(buf, buf + 8);
}

}  // namespace reprodiff
