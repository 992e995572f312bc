#include "sacheck/csv.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <string_view>
#include <vector>

#include "sacheck/error.hpp"

namespace sacheck {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    out.push_back(trim(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

[[noreturn]] void fail(std::size_t line, const std::string& msg) {
  throw IoError("line " + std::to_string(line) + ": " + msg);
}

}  // namespace

Dataset read_dataset_csv(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) throw IoError("line 1: missing header");
  ++line_no;
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
  const auto header = split(line);
  if (header.size() < 3) fail(line_no, "header needs at least one covariate plus y1,y2");
  if (header[header.size() - 2] != "y1" || header.back() != "y2")
    fail(line_no, "the last two header columns must be y1,y2");
  const std::size_t ncol = header.size();
  const std::size_t q = ncol - 2;

  std::vector<double> values;
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split(line);
    if (fields.size() != ncol)
      fail(line_no, "expected " + std::to_string(ncol) + " columns, found " + std::to_string(fields.size()));
    for (std::size_t c = 0; c < ncol; ++c) {
      double v = 0.0;
      const auto f = fields[c];
      const auto res = std::from_chars(f.data(), f.data() + f.size(), v);
      if (f.empty() || res.ec != std::errc{} || res.ptr != f.data() + f.size())
        fail(line_no, "column " + std::to_string(c + 1) + " is not numeric: '" + std::string(f) + "'");
      values.push_back(v);
    }
    ++rows;
  }
  if (rows == 0) throw IoError("no data rows");

  Dataset d;
  d.X.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(q));
  d.y1.resize(rows);
  d.y2.resize(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    const double* row = values.data() + r * ncol;
    for (std::size_t c = 0; c < q; ++c) d.X(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = row[c];
    d.y1[r] = row[q];
    d.y2[r] = row[q + 1];
  }
  try {
    d.validate();
  } catch (const ProcedureError& e) {
    throw IoError(e.what());
  }
  return d;
}

Dataset read_dataset_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  return read_dataset_csv(in);
}

void write_dataset_csv(std::ostream& out, const Dataset& d) {
  const auto q = d.dim();
  for (std::size_t c = 0; c < q; ++c) out << 'x' << (c + 1) << ',';
  out << "y1,y2\n";
  char buf[64];
  auto put = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    out << buf;
  };
  for (std::size_t i = 0; i < d.size(); ++i) {
    for (std::size_t c = 0; c < q; ++c) {
      put(d.X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)));
      out << ',';
    }
    put(d.y1[i]);
    out << ',';
    put(d.y2[i]);
    out << '\n';
  }
}

void write_dataset_csv(const std::string& path, const Dataset& d) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path + "'");
  write_dataset_csv(out, d);
  if (!out) throw IoError("write failed for '" + path + "'");
}

}  // namespace sacheck
