#include "ellab/io.hpp"

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <ostream>
#include <stdexcept>
#include <system_error>

namespace ellab {

std::string format_double(double x) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

double parse_double(const std::string& token) {
  double v = 0;
  auto res = std::from_chars(token.data(), token.data() + token.size(), v);
  if (res.ec != std::errc{}) throw std::runtime_error("bad numeric token: '" + token + "'");
  return v;
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

CsvWriter::CsvWriter(std::vector<std::string> header) : header_(std::move(header)) {}

void CsvWriter::add_row(std::vector<std::string> cells) {
  if (cells.size() != header_.size()) throw std::runtime_error("csv row width mismatch");
  rows_.push_back(std::move(cells));
}

void CsvWriter::write(std::ostream& os) const {
  for (std::size_t i = 0; i < header_.size(); ++i) os << (i ? "," : "") << header_[i];
  os << "\n";
  for (const auto& row : rows_) {
    for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << row[i];
    os << "\n";
  }
}

void CsvWriter::write_file(const std::string& path) const {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open for writing: " + path);
  write(os);
}

void CsvWriter::write_json_file(const std::string& path) const {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open for writing: " + path);
  auto quote = [](const std::string& s) {
    std::string out = "\"";
    for (char c : s) {
      if (c == '"' || c == '\\') out += '\\';
      out += c;
    }
    return out + "\"";
  };
  // Cells that parse as plain numbers are emitted bare, everything else quoted.
  auto is_number = [](const std::string& s) {
    if (s.empty()) return false;
    char* end = nullptr;
    std::strtod(s.c_str(), &end);
    return end == s.c_str() + s.size();
  };
  os << "[\n";
  for (std::size_t r = 0; r < rows_.size(); ++r) {
    os << "  {";
    for (std::size_t c = 0; c < header_.size(); ++c) {
      os << (c ? ", " : "") << quote(header_[c]) << ": "
         << (is_number(rows_[r][c]) ? rows_[r][c] : quote(rows_[r][c]));
    }
    os << "}" << (r + 1 < rows_.size() ? "," : "") << "\n";
  }
  os << "]\n";
}

std::string CsvWriter::emit(const std::string& dir, const std::string& stem,
                            const std::string& format) const {
  const std::string path = dir + "/" + stem + (format == "json" ? ".json" : ".csv");
  if (format == "json")
    write_json_file(path);
  else
    write_file(path);
  return path;
}

std::string cell(double x) { return format_double(x); }
std::string cell(int x) { return std::to_string(x); }
std::string cell(const std::string& s) { return s; }

}  // namespace ellab
