#pragma once

// CSV interchange for time series and VAR models.
//   time series: header "t,z1,...,zp", one row per time point
//   model:       header "# varmodel p=<p> d=<d>", then p rows of [B_1 | ... | B_d]
// Floats are written with 17 significant digits so they round-trip exactly.

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "robvar/core.hpp"
#include "robvar/var_core.hpp"

namespace robvar {

class IoError : public Error {
 public:
  using Error::Error;
};

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline double parse_double(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) throw IoError("not a number: '" + std::string(s) + "'");
  return v;
}

inline std::vector<std::string_view> split_fields(std::string_view line, char sep = ',') {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

inline std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) lines.push_back(line);
  }
  return lines;
}

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << text;
  if (!out) throw IoError("write failed for '" + path + "'");
}

inline std::string time_series_to_csv(const TimeSeriesMatrix& data) {
  std::ostringstream os;
  os << "t";
  for (Index j = 0; j < data.p(); ++j) os << ",z" << (j + 1);
  os << '\n';
  for (Index t = 0; t < data.rows(); ++t) {
    os << t;
    for (Index j = 0; j < data.p(); ++j) os << ',' << format_double(data.values()(t, j));
    os << '\n';
  }
  return os.str();
}

inline TimeSeriesMatrix time_series_from_csv_lines(const std::vector<std::string>& lines, const std::string& origin) {
  if (lines.empty()) throw IoError(origin + ": empty time series file");
  const auto header = split_fields(lines[0]);
  if (header.size() < 2 || header[0] != "t") throw IoError(origin + ": header must be t,z1,...,zp");
  const Index p = static_cast<Index>(header.size()) - 1;
  for (Index j = 0; j < p; ++j)
    if (header[static_cast<std::size_t>(j + 1)] != "z" + std::to_string(j + 1))
      throw IoError(origin + ": header must be t,z1,...,zp");
  Matrix values(static_cast<Index>(lines.size()) - 1, p);
  for (std::size_t r = 1; r < lines.size(); ++r) {
    const auto fields = split_fields(lines[r]);
    if (static_cast<Index>(fields.size()) != p + 1)
      throw IoError(origin + ": line " + std::to_string(r + 1) + " has " + std::to_string(fields.size()) +
                    " fields, expected " + std::to_string(p + 1));
    for (Index j = 0; j < p; ++j)
      values(static_cast<Index>(r) - 1, j) = parse_double(fields[static_cast<std::size_t>(j + 1)]);
  }
  return TimeSeriesMatrix(std::move(values));
}

inline void write_time_series_csv(const TimeSeriesMatrix& data, const std::string& path) {
  write_text(path, time_series_to_csv(data));
}

inline TimeSeriesMatrix read_time_series_csv(const std::string& path) {
  return time_series_from_csv_lines(read_lines(path), path);
}

inline std::string var_model_to_csv(const VarModel& model) {
  std::ostringstream os;
  os << "# varmodel p=" << model.p() << " d=" << model.d() << '\n';
  for (Index i = 0; i < model.p(); ++i) {
    for (Index k = 0; k < model.d(); ++k)
      for (Index j = 0; j < model.p(); ++j) {
        if (k > 0 || j > 0) os << ',';
        os << format_double(model.coeff(k)(i, j));
      }
    os << '\n';
  }
  return os.str();
}

inline VarModel var_model_from_csv_lines(const std::vector<std::string>& lines, const std::string& origin) {
  if (lines.empty()) throw IoError(origin + ": empty model file");
  long p = 0;
  long d = 0;
  if (std::sscanf(lines[0].c_str(), "# varmodel p=%ld d=%ld", &p, &d) != 2 || p < 1 || d < 1)
    throw IoError(origin + ": header must be '# varmodel p=<p> d=<d>'");
  if (static_cast<long>(lines.size()) != p + 1)
    throw IoError(origin + ": expected " + std::to_string(p) + " coefficient rows");
  std::vector<Matrix> coeffs(static_cast<std::size_t>(d), Matrix(p, p));
  for (long i = 0; i < p; ++i) {
    const auto fields = split_fields(lines[static_cast<std::size_t>(i + 1)]);
    if (static_cast<long>(fields.size()) != p * d)
      throw IoError(origin + ": row " + std::to_string(i + 1) + " must have " + std::to_string(p * d) + " entries");
    for (long k = 0; k < d; ++k)
      for (long j = 0; j < p; ++j)
        coeffs[static_cast<std::size_t>(k)](i, j) = parse_double(fields[static_cast<std::size_t>(k * p + j)]);
  }
  return VarModel(std::move(coeffs));
}

inline void write_var_model_csv(const VarModel& model, const std::string& path) {
  write_text(path, var_model_to_csv(model));
}

inline VarModel read_var_model_csv(const std::string& path) {
  return var_model_from_csv_lines(read_lines(path), path);
}

}  // namespace robvar
