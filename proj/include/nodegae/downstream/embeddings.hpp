#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "nodegae/diffcore/tensor.hpp"

namespace nodegae {

/// Frozen |V| x d node feature matrix fed to the downstream models.
struct EmbeddingMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;  // row-major
  std::string provenance;      // "nodegae", "random", "shallow-baseline", ...

  std::span<const double> row(std::size_t r) const { return {values.data() + r * cols, cols}; }
  DiffTensor as_tensor() const { return DiffTensor::from({rows, cols}, values, false); }

  /// Throws ConfigError on NaN/Inf or a size mismatch.
  void validate() const;

  bool operator==(const EmbeddingMatrix&) const = default;
};

/// Header "<rows> <dim> <provenance>", then one row per line with
/// space-separated values printed with 17 significant digits.
void save_embeddings(const std::filesystem::path& path, const EmbeddingMatrix& m);
EmbeddingMatrix load_embeddings(const std::filesystem::path& path);

/// I.i.d. standard-normal features, a structure-free baseline.
EmbeddingMatrix gaussian_embeddings(std::size_t rows, std::size_t cols, std::uint64_t seed);

}  // namespace nodegae
