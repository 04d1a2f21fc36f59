#pragma once

#include <set>
#include <string>
#include <vector>

namespace sparqlgen {

// Tabular query result. Each row is aligned with `vars`; unbound cells are
// empty strings.
struct ResultTable {
  std::vector<std::string> vars;
  std::vector<std::vector<std::string>> rows;

  bool operator==(const ResultTable&) const = default;
};

// True when every row has exactly |vars| cells.
bool is_well_formed(const ResultTable& table);

// Header-free, deduplicated set of result lines used for relaxed exact match.
struct NormalizedResultSet {
  std::set<std::string> lines;

  bool operator==(const NormalizedResultSet&) const = default;
};

// Drops the header, joins each row's cells with a tab and inserts the lines
// into a set.
NormalizedResultSet normalize_results(const ResultTable& table);

}  // namespace sparqlgen
