#pragma once

// Plot-ready CSV with shortest round-trip number formatting.

#include <charconv>
#include <complex>
#include <fstream>
#include <initializer_list>
#include <string>
#include <string_view>

#include "ltpmor/errors.hpp"

namespace ltpmor {

/// Shortest decimal string that parses back to the same double.
inline std::string format_double(double x) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return {buf, res.ptr};
}

class CsvWriter {
 public:
  CsvWriter(const std::string& path, std::initializer_list<std::string_view> header) : out_(path) {
    if (!out_) throw InvalidArgument("cannot open " + path + " for writing");
    for (auto h : header) field(h);
    end_row();
  }

  CsvWriter& operator<<(double x) { return field(format_double(x)); }
  CsvWriter& operator<<(int x) { return field(std::to_string(x)); }
  CsvWriter& operator<<(long x) { return field(std::to_string(x)); }
  CsvWriter& operator<<(std::complex<double> z) { return *this << z.real() << z.imag(); }
  CsvWriter& operator<<(std::string_view s) { return field(s); }

  void end_row() {
    out_ << '\n';
    first_ = true;
  }

 private:
  CsvWriter& field(std::string_view s) {
    if (!first_) out_ << ',';
    out_ << s;
    first_ = false;
    return *this;
  }

  std::ofstream out_;
  bool first_ = true;
};

}  // namespace ltpmor
