#pragma once

#include <string>
#include <vector>

#include "regress.hpp"

namespace scband {

struct IngestResult {
  ObservedSample sample;
  // delta=0 rows that carried a covariate value; the value is discarded.
  std::vector<std::size_t> discarded_x_lines;
};

// Reads `delta,x,y` CSV; x must be blank exactly when delta=0, y is
// required on every row. Schema violations throw with the line number.
IngestResult ingest_csv(const std::string& path);

// Full-precision writer; ingest_csv(write_sample_csv(s)) reproduces the
// sample bit for bit.
void write_sample_csv(const ObservedSample& sample, const std::string& path);

}  // namespace scband
