#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "nodegae/diffcore/sparse.hpp"
#include "nodegae/diffcore/tensor.hpp"

namespace nodegae {

// Differentiable operations. Every op throws DimensionError naming itself and
// the offending shapes when operands do not conform.

/// [m,k] x [k,n] -> [m,n]
DiffTensor matmul(const DiffTensor& a, const DiffTensor& b);

/// Elementwise. `b` may also be a vector matching the last dim of `a`
/// (broadcast over rows) or a single element.
DiffTensor add(const DiffTensor& a, const DiffTensor& b);
DiffTensor sub(const DiffTensor& a, const DiffTensor& b);
DiffTensor mul(const DiffTensor& a, const DiffTensor& b);
DiffTensor scale(const DiffTensor& a, double factor);

DiffTensor relu(const DiffTensor& a);
/// Exact (erf) GELU.
DiffTensor gelu(const DiffTensor& a);

DiffTensor softmax_lastdim(const DiffTensor& a);
/// Zero-mean, unit-variance normalization over the last dim (no affine).
DiffTensor layernorm_lastdim(const DiffTensor& a, double eps = 1e-10);
/// Throws ContractError on a zero-norm row.
DiffTensor l2_normalize_lastdim(const DiffTensor& a);

/// Gathers rows of a [V,d] table -> [n,d].
DiffTensor embedding_lookup(const DiffTensor& table, std::span<const std::int64_t> ids);

/// Reductions over the last axis drop it; a rank-1 input reduces to shape [1].
DiffTensor mean_lastaxis(const DiffTensor& a);
DiffTensor sum_lastaxis(const DiffTensor& a);
DiffTensor sum_all(const DiffTensor& a);
DiffTensor mean_all(const DiffTensor& a);

DiffTensor reshape(const DiffTensor& a, Shape shape);
DiffTensor concat(std::span<const DiffTensor> parts, std::size_t axis);
DiffTensor slice_lastdim(const DiffTensor& a, std::size_t start, std::size_t length);
DiffTensor transpose_last2(const DiffTensor& a);

/// Mean token negative log-likelihood of `targets` under row-wise softmax of
/// [n,V] logits. Rows whose target equals `ignore_index` are excluded from
/// both numerator and denominator. Throws ContractError when no row counts.
DiffTensor cross_entropy_logits(const DiffTensor& logits, std::span<const std::int64_t> targets,
                                std::int64_t ignore_index = -1);

/// Mean binary cross-entropy of logits against {0,1} labels.
DiffTensor bce_logits(const DiffTensor& logits, std::span<const double> labels);

/// Constant sparse [r,c] times dense [c,d] -> [r,d]; gradient flows to the dense operand.
DiffTensor spmm(const CsrMatrix& a, const DiffTensor& dense);

enum class OpKind {
  matmul,
  add,
  mul,
  relu,
  gelu,
  softmax_lastdim,
  layernorm_lastdim,
  l2_normalize_lastdim,
  embedding_lookup,
  mean_lastaxis,
  sum_lastaxis,
  reshape,
  concat,
  slice_lastdim,
  transpose_last2,
  cross_entropy_logits,
  bce_logits,
};

std::string_view op_kind_name(OpKind kind);
std::vector<OpKind> all_op_kinds();

/// Non-tensor arguments consumed by some op kinds.
struct OpArgs {
  std::vector<std::int64_t> ids;  // embedding_lookup ids, cross_entropy targets
  std::vector<double> labels;     // bce_logits
  Shape shape;                    // reshape
  std::size_t axis = 0;           // concat
  std::size_t start = 0;          // slice_lastdim
  std::size_t length = 0;         // slice_lastdim
  std::int64_t ignore_index = -1;
};

DiffTensor forward_op(OpKind kind, std::span<const DiffTensor> inputs, const OpArgs& args = {});

}  // namespace nodegae
