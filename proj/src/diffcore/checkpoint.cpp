#include "nodegae/diffcore/checkpoint.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>

#include "nodegae/errors.hpp"

namespace nodegae {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

namespace {

constexpr char kMagic[8] = {'N', 'G', 'A', 'E', 'C', 'K', 'P', 'T'};

template <typename T>
void write_pod(std::ostream& os, T value) {
  os.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

void write_string(std::ostream& os, const std::string& s) {
  write_pod<std::uint64_t>(os, s.size());
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

template <typename T>
T read_pod(std::istream& is) {
  T value{};
  if (!is.read(reinterpret_cast<char*>(&value), sizeof(T))) throw IngestionError("checkpoint: truncated file");
  return value;
}

std::string read_string(std::istream& is) {
  const auto n = read_pod<std::uint64_t>(is);
  if (n > (std::uint64_t{1} << 32)) throw IngestionError("checkpoint: implausible string length");
  std::string s(n, '\0');
  if (n && !is.read(s.data(), static_cast<std::streamsize>(n))) throw IngestionError("checkpoint: truncated string");
  return s;
}

}  // namespace

void Checkpoint::put(const std::string& name, const DiffTensor& t) {
  tensors[name] = TensorRecord{t.shape(), std::vector<double>(t.data().begin(), t.data().end())};
}

void Checkpoint::restore(const std::string& name, DiffTensor& t) const {
  auto it = tensors.find(name);
  if (it == tensors.end()) throw IngestionError("checkpoint: missing tensor '" + name + "'");
  if (it->second.shape != t.shape()) {
    throw DimensionError("checkpoint: tensor '" + name + "' has shape " + shape_str(it->second.shape) +
                         ", model expects " + shape_str(t.shape()));
  }
  std::copy(it->second.data.begin(), it->second.data.end(), t.mutable_data().begin());
}

const std::string& Checkpoint::meta(const std::string& key) const {
  auto it = metadata.find(key);
  if (it == metadata.end()) throw IngestionError("checkpoint: missing metadata '" + key + "'");
  return it->second;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("checkpoint: cannot open " + path.string() + " for writing");
  os.write(kMagic, sizeof(kMagic));
  write_pod<std::uint32_t>(os, Checkpoint::kVersion);
  write_pod<std::uint64_t>(os, ckpt.metadata.size());
  for (const auto& [k, v] : ckpt.metadata) {
    write_string(os, k);
    write_string(os, v);
  }
  write_pod<std::uint64_t>(os, ckpt.tensors.size());
  for (const auto& [name, rec] : ckpt.tensors) {
    write_string(os, name);
    write_pod<std::uint64_t>(os, rec.shape.size());
    for (std::size_t d : rec.shape) write_pod<std::uint64_t>(os, d);
    os.write(reinterpret_cast<const char*>(rec.data.data()), static_cast<std::streamsize>(rec.data.size() * sizeof(double)));
  }
  if (!os) throw std::runtime_error("checkpoint: write failed for " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IngestionError("checkpoint: cannot open " + path.string());
  char magic[8];
  if (!is.read(magic, sizeof(magic)) || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw IngestionError("checkpoint: " + path.string() + " is not a checkpoint file");
  }
  const auto version = read_pod<std::uint32_t>(is);
  if (version != Checkpoint::kVersion) {
    throw IngestionError("checkpoint: unsupported version " + std::to_string(version));
  }
  Checkpoint ckpt;
  const auto n_meta = read_pod<std::uint64_t>(is);
  for (std::uint64_t i = 0; i < n_meta; ++i) {
    std::string k = read_string(is);
    ckpt.metadata[k] = read_string(is);
  }
  const auto n_tensors = read_pod<std::uint64_t>(is);
  for (std::uint64_t i = 0; i < n_tensors; ++i) {
    std::string name = read_string(is);
    TensorRecord rec;
    const auto rank = read_pod<std::uint64_t>(is);
    if (rank == 0 || rank > 8) throw IngestionError("checkpoint: bad rank for '" + name + "'");
    for (std::uint64_t d = 0; d < rank; ++d) rec.shape.push_back(read_pod<std::uint64_t>(is));
    rec.data.resize(shape_numel(rec.shape));
    if (!is.read(reinterpret_cast<char*>(rec.data.data()), static_cast<std::streamsize>(rec.data.size() * sizeof(double)))) {
      throw IngestionError("checkpoint: truncated data for '" + name + "'");
    }
    ckpt.tensors.emplace(std::move(name), std::move(rec));
  }
  return ckpt;
}

}  // namespace nodegae
