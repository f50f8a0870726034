#pragma once

// Matrix Market coordinate reader for standalone solver testing.
// Supports `real`/`integer` values with `general` or `symmetric` symmetry.

#include <cstddef>
#include <istream>
#include <memory>
#include <string>
#include <vector>

#include "gridflow/numeric.hpp"
#include "gridflow/symbolic.hpp"

namespace gridflow {

struct CooMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  struct Entry {
    int row;  // 0-based
    int col;
    double value;
  };
  std::vector<Entry> entries;  // symmetric input already mirrored
};

CooMatrix read_matrix_market(std::istream& in);
CooMatrix read_matrix_market_file(const std::string& path);

/// Structural pattern of A + A^T without the diagonal.
PatternGraph pattern_of(const CooMatrix& matrix);

/// Scatters the matrix values into a system over `analysis` (duplicates sum).
SparseSystem<double> to_system(const CooMatrix& matrix,
                               std::shared_ptr<const SymbolicAnalysis> analysis);

}  // namespace gridflow
