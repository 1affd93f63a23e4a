#pragma once

#include <string>
#include <vector>

#include "wit/types.hpp"

namespace wit {

/// Column selectors: each token is a header name, a 1-based index, or an
/// inclusive 1-based index range "a-b".
struct ColumnSpec {
  std::string y;
  std::string d;
  std::vector<std::string> z;  // empty -> all remaining numeric columns
  std::vector<std::string> w;  // optional exogenous covariates
};

/// RFC-4180-style reader (header row mandatory, all cells numeric).
IVDataset load_csv(const std::string& path, const ColumnSpec& spec);

/// Parses a comma-separated selector list ("snp1,snp2" or "3-12,14").
std::vector<std::string> parse_selector_list(const std::string& arg);

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows);

}  // namespace wit
