#include "csv.hpp"

#include <cmath>
#include <cstdio>

namespace rsopt {

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string format_ext(const Extd& v) {
  return v.is_finite() ? format_double(v.value()) : "inf";
}

CsvWriter::CsvWriter(const std::string& path,
                     const std::vector<std::string>& header)
    : out_(path, std::ios::binary), path_(path), n_cols_(header.size()) {
  if (!out_) throw ValidationError("csv: cannot open '" + path + "'");
  if (header.empty()) throw ValidationError("csv: empty header");
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (i) out_ << ',';
    out_ << header[i];
  }
  out_ << '\n';
}

CsvWriter::~CsvWriter() {
  if (!closed_) out_.flush();
}

void CsvWriter::cell(const std::string& s) {
  if (col_ >= n_cols_)
    throw ValidationError("csv: row in '" + path_ + "' exceeds schema width");
  if (col_) out_ << ',';
  out_ << s;
  ++col_;
}

void CsvWriter::end_row() {
  if (col_ != n_cols_)
    throw ValidationError("csv: row in '" + path_ +
                          "' is narrower than the schema");
  out_ << '\n';
  col_ = 0;
}

void CsvWriter::close() {
  if (closed_) return;
  if (col_ != 0)
    throw ValidationError("csv: unterminated row in '" + path_ + "'");
  out_.flush();
  out_.close();
  closed_ = true;
  if (out_.fail()) throw NumericalError("csv: write to '" + path_ + "' failed");
}

}  // namespace rsopt
