#pragma once

#include <iosfwd>
#include <string>

#include "sacheck/dataset.hpp"

namespace sacheck {

/// Dataset CSV: mandatory header, covariate columns first, responses last and
/// named y1,y2. Parse failures throw IoError with the offending line number.
Dataset read_dataset_csv(std::istream& in);
Dataset read_dataset_csv(const std::string& path);

/// Writes header x1,...,xq,y1,y2 and one row per observation with 17 significant digits.
void write_dataset_csv(std::ostream& out, const Dataset& d);
void write_dataset_csv(const std::string& path, const Dataset& d);

}  // namespace sacheck
