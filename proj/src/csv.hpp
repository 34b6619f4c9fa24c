#pragma once

// Deterministic CSV emission: fixed column schemas, %.17g round-trip text,
// '\n' line endings.  Identical inputs produce byte-identical files.

#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "rsopt/types.hpp"

namespace rsopt {

// Shortest round-trip-exact decimal text; infinities and NaN are spelled
// "inf" / "-inf" / "nan".
std::string format_double(double v);
std::string format_ext(const Extd& v);  // tagged +infinity prints "inf"

class CsvWriter {
 public:
  CsvWriter(const std::string& path,
            const std::vector<std::string>& header);
  CsvWriter(const CsvWriter&) = delete;
  CsvWriter& operator=(const CsvWriter&) = delete;
  ~CsvWriter();

  void cell(const std::string& s);
  void cell(double v) { cell(format_double(v)); }
  void cell(const Extd& v) { cell(format_ext(v)); }
  void cell(long v) { cell(std::to_string(v)); }
  void cell(int v) { cell(long(v)); }
  void cell(std::uint64_t v) { cell(std::to_string(v)); }
  void end_row();

  // Flush and close; throws NumericalError if the stream failed.
  void close();
  const std::string& path() const { return path_; }

 private:
  std::ofstream out_;
  std::string path_;
  std::size_t n_cols_ = 0;
  std::size_t col_ = 0;
  bool closed_ = false;
};

}  // namespace rsopt
