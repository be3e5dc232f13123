#include "nodegae/downstream/gnn.hpp"

#include <cmath>

#include "nodegae/diffcore/ops.hpp"
#include "nodegae/errors.hpp"

namespace nodegae {

namespace {

DiffTensor glorot(std::size_t in, std::size_t out, Rng& rng) {
  const double a = std::sqrt(6.0 / static_cast<double>(in + out));
  std::vector<double> v(in * out);
  for (double& x : v) x = (2.0 * rng.uniform() - 1.0) * a;
  return DiffTensor::from({in, out}, std::move(v), true);
}

}  // namespace

std::string_view backbone_name(Backbone b) {
  switch (b) {
    case Backbone::mlp: return "mlp";
    case Backbone::gcn: return "gcn";
    case Backbone::sage: return "sage";
  }
  return "?";
}

Backbone parse_backbone(std::string_view name) {
  if (name == "mlp") return Backbone::mlp;
  if (name == "gcn") return Backbone::gcn;
  if (name == "sage") return Backbone::sage;
  throw ConfigError("unknown backbone '" + std::string(name) + "' (expected mlp, gcn or sage)");
}

DiffTensor gcn_layer(const DiffTensor& h, const CsrMatrix& a, const DiffTensor& w, bool activate) {
  const DiffTensor out = spmm(a, matmul(h, w));
  return activate ? relu(out) : out;
}

DiffTensor sage_layer(const DiffTensor& h, const CsrMatrix& mean_adj, const DiffTensor& w_self,
                      const DiffTensor& w_neigh, bool activate) {
  const DiffTensor out = add(matmul(h, w_self), matmul(spmm(mean_adj, h), w_neigh));
  return activate ? relu(out) : out;
}

DiffTensor sage_layer(const DiffTensor& h, const CsrGraph& g, const DiffTensor& w_self, const DiffTensor& w_neigh,
                      bool activate) {
  return sage_layer(h, mean_adjacency(g), w_self, w_neigh, activate);
}

GraphOperators GraphOperators::from(const CsrGraph& g, bool gcn_self_loops) {
  return {normalized_adjacency(g, gcn_self_loops), mean_adjacency(g)};
}

void GnnConfig::validate() const {
  if (layers == 0) throw ConfigError("gnn: need at least one layer");
  if (hidden == 0) throw ConfigError("gnn: hidden size must be positive");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("gnn: dropout must lie in [0,1)");
}

GnnModel::GnnModel(const GnnConfig& cfg, std::size_t in_dim, std::size_t out_dim, std::uint64_t seed)
    : cfg_(cfg), in_dim_(in_dim), out_dim_(out_dim) {
  cfg_.validate();
  if (in_dim == 0 || out_dim == 0) throw ConfigError("gnn: input and output sizes must be positive");
  Rng rng(seed);
  std::size_t in = in_dim;
  for (std::size_t l = 0; l < cfg_.layers; ++l) {
    const std::size_t out = l + 1 == cfg_.layers ? out_dim : cfg_.hidden;
    GnnLayer layer;
    layer.w = glorot(in, out, rng);
    if (cfg_.backbone == Backbone::sage) layer.w_neigh = glorot(in, out, rng);
    layer.b = DiffTensor::zeros({out}, true);
    layers_.push_back(std::move(layer));
    in = out;
  }
}

DiffTensor GnnModel::forward(const DiffTensor& x, const GraphOperators& ops, Rng* rng) const {
  if (x.rank() != 2 || x.dim(1) != in_dim_) {
    throw DimensionError("gnn: input " + shape_str(x.shape()) + " but model expects width " + std::to_string(in_dim_));
  }
  DiffTensor h = x;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const auto& layer = layers_[l];
    const bool last = l + 1 == layers_.size();
    if (rng && cfg_.dropout > 0.0) h = dropout(h, cfg_.dropout, *rng);
    switch (cfg_.backbone) {
      case Backbone::mlp: h = matmul(h, layer.w); break;
      case Backbone::gcn: h = gcn_layer(h, ops.gcn_adj, layer.w, false); break;
      case Backbone::sage: h = sage_layer(h, ops.mean_adj, layer.w, layer.w_neigh, false); break;
    }
    h = add(h, layer.b);
    if (!last) h = relu(h);
  }
  return h;
}

std::vector<DiffTensor> GnnModel::parameters() const {
  std::vector<DiffTensor> out;
  for (const auto& l : layers_) {
    out.push_back(l.w);
    if (l.w_neigh.defined()) out.push_back(l.w_neigh);
    out.push_back(l.b);
  }
  return out;
}

std::vector<std::vector<double>> GnnModel::snapshot() const {
  std::vector<std::vector<double>> out;
  for (const auto& p : parameters()) out.emplace_back(p.data().begin(), p.data().end());
  return out;
}

void GnnModel::restore(const std::vector<std::vector<double>>& values) {
  auto params = parameters();
  if (values.size() != params.size()) throw ContractError("gnn: snapshot does not match the model");
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (values[i].size() != params[i].numel()) throw ContractError("gnn: snapshot does not match the model");
    std::copy(values[i].begin(), values[i].end(), params[i].mutable_data().begin());
  }
}

DiffTensor dropout(const DiffTensor& x, double p, Rng& rng) {
  if (p <= 0.0) return x;
  const double keep = 1.0 / (1.0 - p);
  std::vector<double> mask(x.numel());
  for (double& m : mask) m = rng.uniform() < p ? 0.0 : keep;
  return mul(x, DiffTensor::from(x.shape(), std::move(mask)));
}

}  // namespace nodegae
