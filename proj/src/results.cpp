#include "sparqlgen/results.hpp"

#include <algorithm>

namespace sparqlgen {

bool is_well_formed(const ResultTable& table) {
  return std::all_of(table.rows.begin(), table.rows.end(),
                     [&](const auto& row) { return row.size() == table.vars.size(); });
}

NormalizedResultSet normalize_results(const ResultTable& table) {
  NormalizedResultSet out;
  for (const auto& row : table.rows) {
    std::string line;
    for (size_t i = 0; i < row.size(); ++i) {
      if (i) line.push_back('\t');
      line += row[i];
    }
    out.lines.insert(std::move(line));
  }
  return out;
}

}  // namespace sparqlgen
