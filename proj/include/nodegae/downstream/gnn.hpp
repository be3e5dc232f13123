#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "nodegae/diffcore/sparse.hpp"
#include "nodegae/diffcore/tensor.hpp"
#include "nodegae/graphstore/graph.hpp"
#include "nodegae/rng.hpp"

namespace nodegae {

enum class Backbone { mlp, gcn, sage };

std::string_view backbone_name(Backbone b);
/// Throws ConfigError for unknown names.
Backbone parse_backbone(std::string_view name);

/// sigma(A H W); relu when `activate`, identity otherwise.
DiffTensor gcn_layer(const DiffTensor& h, const CsrMatrix& a, const DiffTensor& w, bool activate);

/// sigma(H W_self + (M H) W_neigh) with M the row-normalized adjacency, so
/// isolated nodes get a zero neighbor term.
DiffTensor sage_layer(const DiffTensor& h, const CsrMatrix& mean_adj, const DiffTensor& w_self,
                      const DiffTensor& w_neigh, bool activate);
DiffTensor sage_layer(const DiffTensor& h, const CsrGraph& g, const DiffTensor& w_self, const DiffTensor& w_neigh,
                      bool activate);

/// Sparse operators a backbone needs for one graph.
struct GraphOperators {
  CsrMatrix gcn_adj;   // symmetric normalization
  CsrMatrix mean_adj;  // neighbor mean

  static GraphOperators from(const CsrGraph& g, bool gcn_self_loops = true);
};

struct GnnConfig {
  Backbone backbone = Backbone::mlp;
  std::size_t hidden = 64;
  std::size_t layers = 2;
  double dropout = 0.5;
  // Add self-loops before the GCN normalization.
  bool gcn_self_loops = true;

  void validate() const;
};

struct GnnLayer {
  DiffTensor w;        // [in, out]
  DiffTensor w_neigh;  // sage only
  DiffTensor b;        // [out]
};

class GnnModel {
 public:
  GnnModel(const GnnConfig& cfg, std::size_t in_dim, std::size_t out_dim, std::uint64_t seed);

  const GnnConfig& config() const { return cfg_; }
  std::size_t in_dim() const { return in_dim_; }
  std::size_t out_dim() const { return out_dim_; }
  const std::vector<GnnLayer>& layers() const { return layers_; }
  std::vector<GnnLayer>& layers() { return layers_; }

  /// Relu between layers, identity on the last. Dropout on every layer input
  /// when `rng` is given (training mode).
  DiffTensor forward(const DiffTensor& x, const GraphOperators& ops, Rng* rng = nullptr) const;

  std::vector<DiffTensor> parameters() const;
  std::vector<std::vector<double>> snapshot() const;
  void restore(const std::vector<std::vector<double>>& values);

 private:
  GnnConfig cfg_;
  std::size_t in_dim_;
  std::size_t out_dim_;
  std::vector<GnnLayer> layers_;
};

/// Inverted dropout: zeroes entries with probability p and rescales the rest.
DiffTensor dropout(const DiffTensor& x, double p, Rng& rng);

}  // namespace nodegae
