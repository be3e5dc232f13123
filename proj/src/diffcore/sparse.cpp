#include "nodegae/diffcore/sparse.hpp"

#include <algorithm>
#include <numeric>

#include "nodegae/errors.hpp"

namespace nodegae {

double CsrMatrix::at(std::size_t r, std::size_t c) const {
  if (r >= rows || c >= cols) throw IndexError("CsrMatrix::at out of range");
  for (std::size_t e = offsets[r]; e < offsets[r + 1]; ++e) {
    if (indices[e] == c) return values[e];
  }
  return 0.0;
}

std::vector<double> CsrMatrix::to_dense() const {
  std::vector<double> out(rows * cols, 0.0);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t e = offsets[r]; e < offsets[r + 1]; ++e) out[r * cols + indices[e]] += values[e];
  }
  return out;
}

CsrMatrix CsrMatrix::identity(std::size_t n) {
  CsrMatrix m;
  m.rows = m.cols = n;
  m.offsets.resize(n + 1);
  std::iota(m.offsets.begin(), m.offsets.end(), std::size_t{0});
  m.indices.resize(n);
  std::iota(m.indices.begin(), m.indices.end(), std::size_t{0});
  m.values.assign(n, 1.0);
  return m;
}

CsrMatrix CsrMatrix::from_triplets(std::size_t rows, std::size_t cols, std::vector<std::size_t> r,
                                   std::vector<std::size_t> c, std::vector<double> v) {
  if (r.size() != c.size() || r.size() != v.size()) throw DimensionError("from_triplets: ragged triplets");
  std::vector<std::size_t> order(r.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
    return r[x] != r[y] ? r[x] < r[y] : c[x] < c[y];
  });
  CsrMatrix m;
  m.rows = rows;
  m.cols = cols;
  m.offsets.assign(rows + 1, 0);
  for (std::size_t k : order) {
    if (r[k] >= rows || c[k] >= cols) throw IndexError("from_triplets: entry outside matrix");
    if (!m.indices.empty() && m.offsets[r[k] + 1] > 0 && m.indices.back() == c[k] &&
        m.offsets[r[k] + 1] == m.indices.size()) {
      m.values.back() += v[k];
      continue;
    }
    m.indices.push_back(c[k]);
    m.values.push_back(v[k]);
    m.offsets[r[k] + 1] = m.indices.size();
  }
  // Rows without entries inherit the previous offset.
  for (std::size_t i = 1; i <= rows; ++i) m.offsets[i] = std::max(m.offsets[i], m.offsets[i - 1]);
  return m;
}

}  // namespace nodegae
