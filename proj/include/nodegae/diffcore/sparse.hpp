#pragma once

#include <cstddef>
#include <vector>

namespace nodegae {

/// Constant compressed-sparse-row matrix. Used as a fixed operand of spmm.
struct CsrMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::size_t> offsets;  // rows + 1 entries
  std::vector<std::size_t> indices;
  std::vector<double> values;

  std::size_t nnz() const { return indices.size(); }
  double at(std::size_t r, std::size_t c) const;
  std::vector<double> to_dense() const;

  static CsrMatrix identity(std::size_t n);
  /// Builds from (row, col, value) triplets; duplicates are summed.
  static CsrMatrix from_triplets(std::size_t rows, std::size_t cols,
                                 std::vector<std::size_t> r, std::vector<std::size_t> c,
                                 std::vector<double> v);
};

}  // namespace nodegae
