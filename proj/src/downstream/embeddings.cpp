#include "nodegae/downstream/embeddings.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "nodegae/errors.hpp"
#include "nodegae/rng.hpp"

namespace nodegae {

void EmbeddingMatrix::validate() const {
  if (values.size() != rows * cols) throw ConfigError("embeddings: value count does not match rows x cols");
  for (double v : values) {
    if (!std::isfinite(v)) throw ConfigError("embeddings: non-finite entry");
  }
}

void save_embeddings(const std::filesystem::path& path, const EmbeddingMatrix& m) {
  m.validate();
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os << m.rows << ' ' << m.cols << ' ' << (m.provenance.empty() ? "unknown" : m.provenance) << '\n';
  char buf[32];
  for (std::size_t r = 0; r < m.rows; ++r) {
    for (std::size_t c = 0; c < m.cols; ++c) {
      std::snprintf(buf, sizeof(buf), "%.17g", m.values[r * m.cols + c]);
      if (c) os << ' ';
      os << buf;
    }
    os << '\n';
  }
}

EmbeddingMatrix load_embeddings(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw IngestionError("cannot open " + path.string());
  EmbeddingMatrix m;
  std::string header;
  std::getline(is, header);
  std::istringstream hs(header);
  if (!(hs >> m.rows >> m.cols >> m.provenance) || m.rows == 0 || m.cols == 0) {
    throw IngestionError(path.string() + ":1: expected '<rows> <dim> <provenance>'");
  }
  m.values.reserve(m.rows * m.cols);
  std::string line;
  for (std::size_t r = 0; r < m.rows; ++r) {
    if (!std::getline(is, line)) throw IngestionError(path.string() + ": expected " + std::to_string(m.rows) + " rows");
    std::istringstream ls(line);
    for (std::size_t c = 0; c < m.cols; ++c) {
      std::string tok;
      if (!(ls >> tok)) throw IngestionError(path.string() + ":" + std::to_string(r + 2) + ": short row");
      m.values.push_back(std::strtod(tok.c_str(), nullptr));
    }
  }
  m.validate();
  return m;
}

EmbeddingMatrix gaussian_embeddings(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  Rng rng(seed);
  EmbeddingMatrix m{rows, cols, std::vector<double>(rows * cols), "gaussian"};
  for (double& v : m.values) v = rng.normal();
  return m;
}

}  // namespace nodegae
