#include "csv.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "errors.hpp"

namespace scband {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

std::vector<std::string> split_row(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) fields.push_back(trim(field));
  if (!line.empty() && line.back() == ',') fields.push_back("");
  return fields;
}

bool parse_double(const std::string& s, double* out) {
  if (s.empty()) return false;
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size()) return false;
  *out = v;
  return true;
}

[[noreturn]] void schema_fail(std::size_t line, const std::string& what) {
  throw error(errc::schema,
              "csv line " + std::to_string(line) + ": " + what);
}

}  // namespace

IngestResult ingest_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw error(errc::io, "cannot open input file: " + path);
  }
  std::string line;
  std::size_t lineno = 0;
  if (!std::getline(in, line)) {
    throw error(errc::schema, "empty input file: " + path);
  }
  ++lineno;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  {
    const auto header = split_row(line);
    if (header.size() != 3 || header[0] != "delta" || header[1] != "x" ||
        header[2] != "y") {
      schema_fail(lineno, "expected header 'delta,x,y'");
    }
  }

  IngestResult result;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    const auto fields = split_row(line);
    if (fields.size() != 3) schema_fail(lineno, "expected 3 fields");

    double dval;
    if (!parse_double(fields[0], &dval) || (dval != 0.0 && dval != 1.0)) {
      schema_fail(lineno, "delta must be 0 or 1");
    }
    const bool observed = dval == 1.0;

    double y;
    if (!parse_double(fields[2], &y)) {
      schema_fail(lineno, "missing or non-numeric y (the response is always observed)");
    }

    double x = nan;
    if (observed) {
      if (!parse_double(fields[1], &x)) {
        schema_fail(lineno, "delta=1 row with missing or non-numeric x");
      }
    } else if (!fields[1].empty()) {
      double ignored;
      if (parse_double(fields[1], &ignored)) {
        result.discarded_x_lines.push_back(lineno);
      } else {
        schema_fail(lineno, "delta=0 row with non-numeric non-blank x");
      }
    }

    result.sample.delta.push_back(observed ? 1 : 0);
    result.sample.x.push_back(x);
    result.sample.y.push_back(y);
  }
  if (result.sample.n() == 0) {
    throw error(errc::schema, "no data rows in " + path);
  }
  validate(result.sample);
  return result;
}

void write_sample_csv(const ObservedSample& sample, const std::string& path) {
  std::ofstream out(path);
  if (!out) {
    throw error(errc::io, "cannot open output file: " + path);
  }
  out << "delta,x,y\n";
  char buf[64];
  for (std::size_t i = 0; i < sample.n(); ++i) {
    out << int(sample.delta[i]) << ',';
    if (sample.delta[i]) {
      std::snprintf(buf, sizeof(buf), "%.17g", sample.x[i]);
      out << buf;
    }
    std::snprintf(buf, sizeof(buf), ",%.17g\n", sample.y[i]);
    out << buf;
  }
}

}  // namespace scband
