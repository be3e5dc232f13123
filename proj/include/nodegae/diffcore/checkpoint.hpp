#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "nodegae/diffcore/tensor.hpp"

namespace nodegae {

struct TensorRecord {
  Shape shape;
  std::vector<double> data;

  bool operator==(const TensorRecord&) const = default;
};

/// Named tensors plus string metadata.
///
/// On disk: "NGAECKPT", u32 version, then length-prefixed metadata pairs and
/// tensors (name, rank, dims, raw little-endian float64). Values round-trip
/// bitwise.
struct Checkpoint {
  static constexpr std::uint32_t kVersion = 1;

  std::map<std::string, std::string> metadata;
  std::map<std::string, TensorRecord> tensors;

  void put(const std::string& name, const DiffTensor& t);
  /// Copies a stored tensor into `t`, which must already have the same shape.
  void restore(const std::string& name, DiffTensor& t) const;
  const std::string& meta(const std::string& key) const;

  bool operator==(const Checkpoint&) const = default;
};

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace nodegae
