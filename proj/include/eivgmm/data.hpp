#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "eivgmm/types.hpp"

namespace eivgmm {

/// Column mapping for the wide replicate CSV layout.
///
/// Replicate columns are named `<w_prefix><k>_r<r>` (k = 1..p covariate,
/// r = 1..R replicate). Empty cells mark missing replicates; a replicate
/// counts for observation j only when all p of its cells are present.
struct CsvSchema {
  std::string y;
  std::vector<std::string> z;
  std::string w_prefix = "w";
  int p = 0;  // 0: infer from the header
};

/// RFC-4180 record splitting (quoted fields, doubled quotes, CRLF).
std::vector<std::vector<std::string>> parse_csv(std::istream& in);

Dataset load_csv(std::istream& in, const CsvSchema& schema);
Dataset load_csv(const std::filesystem::path& path, const CsvSchema& schema);

/// Writes `d` in the layout read by load_csv, using shortest round-trip
/// number formatting so reloading reproduces every value bit for bit.
/// Observations with fewer than max n_j replicates get trailing empty cells.
void write_csv(std::ostream& out, const Dataset& d, const CsvSchema& schema);
void write_csv(const std::filesystem::path& path, const Dataset& d, const CsvSchema& schema);

}  // namespace eivgmm
