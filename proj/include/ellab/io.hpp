#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "ellab/types.hpp"

namespace ellab {

// Shortest decimal representation that round-trips to the same double.
std::string format_double(double x);

double parse_double(const std::string& token);

// FNV-1a over a string, used for cache keys.
std::uint64_t fnv1a(const std::string& s);

// Minimal CSV emitter: fixed header, rows of preformatted cells.
class CsvWriter {
 public:
  explicit CsvWriter(std::vector<std::string> header);
  void add_row(std::vector<std::string> cells);
  void write(std::ostream& os) const;
  void write_file(const std::string& path) const;
  // Same table as an array of {header: cell} objects.
  void write_json_file(const std::string& path) const;
  // "<stem>.csv" or "<stem>.json" under dir, honoring format.
  std::string emit(const std::string& dir, const std::string& stem,
                   const std::string& format) const;

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

std::string cell(double x);
std::string cell(int x);
std::string cell(const std::string& s);

}  // namespace ellab
