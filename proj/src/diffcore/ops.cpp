#include "nodegae/diffcore/ops.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "nodegae/errors.hpp"

namespace nodegae {

namespace {

using detail::Node;
using NodePtr = std::shared_ptr<Node>;

[[noreturn]] void dim_error(std::string_view op, const std::string& what) {
  throw DimensionError(std::string(op) + ": " + what);
}

[[noreturn]] void dim_error(std::string_view op, const Shape& a, const Shape& b) {
  dim_error(op, "shape mismatch " + shape_str(a) + " vs " + shape_str(b));
}

// Creates the output node; records history only when recording is on and an
// input needs gradients.
DiffTensor make_result(const char* op, Shape shape, std::vector<double> data,
                       std::initializer_list<const DiffTensor*> inputs,
                       std::function<void(Node&)> backward_fn) {
  auto node = std::make_shared<Node>();
  node->shape = std::move(shape);
  node->data = std::move(data);
  node->op = op;
  bool needs = false;
  if (grad_recording_enabled()) {
    for (const DiffTensor* in : inputs) needs = needs || in->requires_grad();
  }
  if (needs) {
    node->requires_grad = true;
    for (const DiffTensor* in : inputs) node->parents.push_back(in->node());
    node->backward_fn = std::move(backward_fn);
  }
  return DiffTensor(std::move(node));
}

DiffTensor make_result_n(const char* op, Shape shape, std::vector<double> data,
                         std::span<const DiffTensor> inputs, std::function<void(Node&)> backward_fn) {
  auto node = std::make_shared<Node>();
  node->shape = std::move(shape);
  node->data = std::move(data);
  node->op = op;
  bool needs = false;
  if (grad_recording_enabled()) {
    for (const DiffTensor& in : inputs) needs = needs || in.requires_grad();
  }
  if (needs) {
    node->requires_grad = true;
    for (const DiffTensor& in : inputs) node->parents.push_back(in.node());
    node->backward_fn = std::move(backward_fn);
  }
  return DiffTensor(std::move(node));
}

// Returns the parent's grad buffer if it wants gradients, else nullptr.
double* grad_of(Node& self, std::size_t i) {
  Node& p = *self.parents[i];
  if (!p.requires_grad) return nullptr;
  p.ensure_grad();
  return p.grad.data();
}

enum class Broadcast { same, row, scalar };

Broadcast broadcast_kind(std::string_view op, const DiffTensor& a, const DiffTensor& b) {
  if (a.shape() == b.shape()) return Broadcast::same;
  if (b.numel() == 1) return Broadcast::scalar;
  if (b.rank() == 1 && b.dim(0) == a.shape().back()) return Broadcast::row;
  dim_error(op, a.shape(), b.shape());
}

std::size_t last_dim(const DiffTensor& a) { return a.shape().back(); }

Shape drop_last(const Shape& s) {
  if (s.size() == 1) return {1};
  return Shape(s.begin(), s.end() - 1);
}

}  // namespace

DiffTensor matmul(const DiffTensor& a, const DiffTensor& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0)) dim_error("matmul", a.shape(), b.shape());
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  std::vector<double> out(m * n, 0.0);
  const double* A = a.data().data();
  const double* B = b.data().data();
  for (std::size_t i = 0; i < m; ++i) {
    double* row = out.data() + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = A[i * k + p];
      const double* brow = B + p * n;
      for (std::size_t j = 0; j < n; ++j) row[j] += av * brow[j];
    }
  }
  return make_result("matmul", {m, n}, std::move(out), {&a, &b}, [m, k, n](Node& self) {
    const double* G = self.grad.data();
    const double* A = self.parents[0]->data.data();
    const double* B = self.parents[1]->data.data();
    if (double* gA = grad_of(self, 0)) {
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t p = 0; p < k; ++p) {
          double acc = 0.0;
          const double* brow = B + p * n;
          const double* grow = G + i * n;
          for (std::size_t j = 0; j < n; ++j) acc += grow[j] * brow[j];
          gA[i * k + p] += acc;
        }
      }
    }
    if (double* gB = grad_of(self, 1)) {
      for (std::size_t i = 0; i < m; ++i) {
        const double* grow = G + i * n;
        for (std::size_t p = 0; p < k; ++p) {
          const double av = A[i * k + p];
          double* gbrow = gB + p * n;
          for (std::size_t j = 0; j < n; ++j) gbrow[j] += av * grow[j];
        }
      }
    }
  });
}

namespace {

// Shared body of add/sub/mul: out = f(a, b) with broadcasting of b.
template <typename Fwd>
DiffTensor binary(const char* op, const DiffTensor& a, const DiffTensor& b, Fwd fwd,
                  std::function<void(Node&)> backward) {
  const Broadcast kind = broadcast_kind(op, a, b);
  const std::size_t n = a.numel();
  const std::size_t width = kind == Broadcast::row ? b.numel() : 1;
  std::vector<double> out(n);
  const double* A = a.data().data();
  const double* B = b.data().data();
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t j = kind == Broadcast::same ? i : (kind == Broadcast::row ? i % width : 0);
    out[i] = fwd(A[i], B[j]);
  }
  return make_result(op, a.shape(), std::move(out), {&a, &b}, std::move(backward));
}

std::size_t b_index(std::size_t i, std::size_t a_n, std::size_t b_n) {
  if (b_n == a_n) return i;
  if (b_n == 1) return 0;
  return i % b_n;
}

}  // namespace

DiffTensor add(const DiffTensor& a, const DiffTensor& b) {
  return binary("add", a, b, [](double x, double y) { return x + y; }, [](Node& self) {
    const std::size_t n = self.data.size();
    const std::size_t bn = self.parents[1]->data.size();
    const double* G = self.grad.data();
    if (double* gA = grad_of(self, 0)) {
      for (std::size_t i = 0; i < n; ++i) gA[i] += G[i];
    }
    if (double* gB = grad_of(self, 1)) {
      for (std::size_t i = 0; i < n; ++i) gB[b_index(i, n, bn)] += G[i];
    }
  });
}

DiffTensor sub(const DiffTensor& a, const DiffTensor& b) {
  return binary("sub", a, b, [](double x, double y) { return x - y; }, [](Node& self) {
    const std::size_t n = self.data.size();
    const std::size_t bn = self.parents[1]->data.size();
    const double* G = self.grad.data();
    if (double* gA = grad_of(self, 0)) {
      for (std::size_t i = 0; i < n; ++i) gA[i] += G[i];
    }
    if (double* gB = grad_of(self, 1)) {
      for (std::size_t i = 0; i < n; ++i) gB[b_index(i, n, bn)] -= G[i];
    }
  });
}

DiffTensor mul(const DiffTensor& a, const DiffTensor& b) {
  return binary("mul", a, b, [](double x, double y) { return x * y; }, [](Node& self) {
    const std::size_t n = self.data.size();
    const std::size_t bn = self.parents[1]->data.size();
    const double* G = self.grad.data();
    const double* A = self.parents[0]->data.data();
    const double* B = self.parents[1]->data.data();
    if (double* gA = grad_of(self, 0)) {
      for (std::size_t i = 0; i < n; ++i) gA[i] += G[i] * B[b_index(i, n, bn)];
    }
    if (double* gB = grad_of(self, 1)) {
      for (std::size_t i = 0; i < n; ++i) gB[b_index(i, n, bn)] += G[i] * A[i];
    }
  });
}

DiffTensor scale(const DiffTensor& a, double factor) {
  std::vector<double> out(a.data().begin(), a.data().end());
  for (double& x : out) x *= factor;
  return make_result("scale", a.shape(), std::move(out), {&a}, [factor](Node& self) {
    if (double* gA = grad_of(self, 0)) {
      for (std::size_t i = 0; i < self.grad.size(); ++i) gA[i] += self.grad[i] * factor;
    }
  });
}

DiffTensor relu(const DiffTensor& a) {
  std::vector<double> out(a.data().begin(), a.data().end());
  for (double& x : out) x = x > 0.0 ? x : 0.0;
  return make_result("relu", a.shape(), std::move(out), {&a}, [](Node& self) {
    if (double* gA = grad_of(self, 0)) {
      const double* X = self.parents[0]->data.data();
      for (std::size_t i = 0; i < self.grad.size(); ++i) {
        if (X[i] > 0.0) gA[i] += self.grad[i];
      }
    }
  });
}

DiffTensor gelu(const DiffTensor& a) {
  std::vector<double> out(a.numel());
  const auto x = a.data();
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = 0.5 * x[i] * (1.0 + std::erf(x[i] * std::numbers::sqrt2 / 2.0));
  }
  return make_result("gelu", a.shape(), std::move(out), {&a}, [](Node& self) {
    if (double* gA = grad_of(self, 0)) {
      const double* X = self.parents[0]->data.data();
      const double inv_sqrt_2pi = 0.5 * std::numbers::inv_sqrtpi * std::numbers::sqrt2;
      for (std::size_t i = 0; i < self.grad.size(); ++i) {
        const double cdf = 0.5 * (1.0 + std::erf(X[i] * std::numbers::sqrt2 / 2.0));
        const double pdf = inv_sqrt_2pi * std::exp(-0.5 * X[i] * X[i]);
        gA[i] += self.grad[i] * (cdf + X[i] * pdf);
      }
    }
  });
}

DiffTensor softmax_lastdim(const DiffTensor& a) {
  const std::size_t d = last_dim(a);
  const std::size_t rows = a.numel() / d;
  std::vector<double> out(a.numel());
  const double* X = a.data().data();
  for (std::size_t r = 0; r < rows; ++r) {
    const double* x = X + r * d;
    double* y = out.data() + r * d;
    const double m = *std::max_element(x, x + d);
    double total = 0.0;
    for (std::size_t j = 0; j < d; ++j) total += (y[j] = std::exp(x[j] - m));
    for (std::size_t j = 0; j < d; ++j) y[j] /= total;
  }
  return make_result("softmax_lastdim", a.shape(), std::move(out), {&a}, [d, rows](Node& self) {
    if (double* gA = grad_of(self, 0)) {
      for (std::size_t r = 0; r < rows; ++r) {
        const double* y = self.data.data() + r * d;
        const double* g = self.grad.data() + r * d;
        double dot = 0.0;
        for (std::size_t j = 0; j < d; ++j) dot += g[j] * y[j];
        for (std::size_t j = 0; j < d; ++j) gA[r * d + j] += y[j] * (g[j] - dot);
      }
    }
  });
}

DiffTensor layernorm_lastdim(const DiffTensor& a, double eps) {
  const std::size_t d = last_dim(a);
  const std::size_t rows = a.numel() / d;
  std::vector<double> out(a.numel());
  std::vector<double> inv_std(rows);
  const double* X = a.data().data();
  for (std::size_t r = 0; r < rows; ++r) {
    const double* x = X + r * d;
    double mean = 0.0;
    for (std::size_t j = 0; j < d; ++j) mean += x[j];
    mean /= static_cast<double>(d);
    double var = 0.0;
    for (std::size_t j = 0; j < d; ++j) var += (x[j] - mean) * (x[j] - mean);
    var /= static_cast<double>(d);
    inv_std[r] = 1.0 / std::sqrt(var + eps);
    for (std::size_t j = 0; j < d; ++j) out[r * d + j] = (x[j] - mean) * inv_std[r];
  }
  return make_result("layernorm_lastdim", a.shape(), std::move(out), {&a},
                     [d, rows, inv_std = std::move(inv_std)](Node& self) {
                       double* gA = grad_of(self, 0);
                       if (!gA) return;
                       const double inv_d = 1.0 / static_cast<double>(d);
                       for (std::size_t r = 0; r < rows; ++r) {
                         const double* xh = self.data.data() + r * d;
                         const double* g = self.grad.data() + r * d;
                         double g_mean = 0.0, gx_mean = 0.0;
                         for (std::size_t j = 0; j < d; ++j) {
                           g_mean += g[j];
                           gx_mean += g[j] * xh[j];
                         }
                         g_mean *= inv_d;
                         gx_mean *= inv_d;
                         for (std::size_t j = 0; j < d; ++j) {
                           gA[r * d + j] += inv_std[r] * (g[j] - g_mean - xh[j] * gx_mean);
                         }
                       }
                     });
}

DiffTensor l2_normalize_lastdim(const DiffTensor& a) {
  const std::size_t d = last_dim(a);
  const std::size_t rows = a.numel() / d;
  std::vector<double> out(a.numel());
  std::vector<double> norms(rows);
  const double* X = a.data().data();
  for (std::size_t r = 0; r < rows; ++r) {
    double ss = 0.0;
    for (std::size_t j = 0; j < d; ++j) ss += X[r * d + j] * X[r * d + j];
    if (ss == 0.0) throw ContractError("l2_normalize_lastdim: zero-norm row " + std::to_string(r));
    norms[r] = std::sqrt(ss);
    for (std::size_t j = 0; j < d; ++j) out[r * d + j] = X[r * d + j] / norms[r];
  }
  return make_result("l2_normalize_lastdim", a.shape(), std::move(out), {&a},
                     [d, rows, norms = std::move(norms)](Node& self) {
                       double* gA = grad_of(self, 0);
                       if (!gA) return;
                       for (std::size_t r = 0; r < rows; ++r) {
                         const double* y = self.data.data() + r * d;
                         const double* g = self.grad.data() + r * d;
                         double dot = 0.0;
                         for (std::size_t j = 0; j < d; ++j) dot += y[j] * g[j];
                         for (std::size_t j = 0; j < d; ++j) gA[r * d + j] += (g[j] - y[j] * dot) / norms[r];
                       }
                     });
}

DiffTensor embedding_lookup(const DiffTensor& table, std::span<const std::int64_t> ids) {
  if (table.rank() != 2) dim_error("embedding_lookup", "table must be rank 2, got " + shape_str(table.shape()));
  if (ids.empty()) dim_error("embedding_lookup", "empty id list");
  const std::size_t vocab = table.dim(0), d = table.dim(1);
  std::vector<double> out(ids.size() * d);
  const double* T = table.data().data();
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || static_cast<std::size_t>(ids[i]) >= vocab) {
      throw IndexError("embedding_lookup: id " + std::to_string(ids[i]) + " outside table of " +
                       std::to_string(vocab) + " rows");
    }
    std::copy_n(T + ids[i] * d, d, out.data() + i * d);
  }
  std::vector<std::int64_t> kept(ids.begin(), ids.end());
  return make_result("embedding_lookup", {ids.size(), d}, std::move(out), {&table},
                     [d, kept = std::move(kept)](Node& self) {
                       double* gT = grad_of(self, 0);
                       if (!gT) return;
                       for (std::size_t i = 0; i < kept.size(); ++i) {
                         const double* g = self.grad.data() + i * d;
                         double* dst = gT + kept[i] * d;
                         for (std::size_t j = 0; j < d; ++j) dst[j] += g[j];
                       }
                     });
}

namespace {

DiffTensor reduce_last(const char* op, const DiffTensor& a, double factor) {
  const std::size_t d = last_dim(a);
  const std::size_t rows = a.numel() / d;
  std::vector<double> out(rows, 0.0);
  const double* X = a.data().data();
  for (std::size_t r = 0; r < rows; ++r) {
    double acc = 0.0;
    for (std::size_t j = 0; j < d; ++j) acc += X[r * d + j];
    out[r] = acc * factor;
  }
  return make_result(op, drop_last(a.shape()), std::move(out), {&a}, [d, rows, factor](Node& self) {
    if (double* gA = grad_of(self, 0)) {
      for (std::size_t r = 0; r < rows; ++r) {
        const double g = self.grad[r] * factor;
        for (std::size_t j = 0; j < d; ++j) gA[r * d + j] += g;
      }
    }
  });
}

}  // namespace

DiffTensor mean_lastaxis(const DiffTensor& a) {
  return reduce_last("mean_lastaxis", a, 1.0 / static_cast<double>(last_dim(a)));
}

DiffTensor sum_lastaxis(const DiffTensor& a) { return reduce_last("sum_lastaxis", a, 1.0); }

DiffTensor sum_all(const DiffTensor& a) { return sum_lastaxis(reshape(a, {a.numel()})); }

DiffTensor mean_all(const DiffTensor& a) { return mean_lastaxis(reshape(a, {a.numel()})); }

DiffTensor reshape(const DiffTensor& a, Shape shape) {
  if (shape.empty() || shape_numel(shape) != a.numel() ||
      std::find(shape.begin(), shape.end(), 0u) != shape.end()) {
    dim_error("reshape", a.shape(), shape);
  }
  std::vector<double> out(a.data().begin(), a.data().end());
  return make_result("reshape", std::move(shape), std::move(out), {&a}, [](Node& self) {
    if (double* gA = grad_of(self, 0)) {
      for (std::size_t i = 0; i < self.grad.size(); ++i) gA[i] += self.grad[i];
    }
  });
}

DiffTensor concat(std::span<const DiffTensor> parts, std::size_t axis) {
  if (parts.empty()) dim_error("concat", "no inputs");
  const Shape& first = parts[0].shape();
  if (axis >= first.size()) dim_error("concat", "axis " + std::to_string(axis) + " out of range for " + shape_str(first));
  Shape out_shape = first;
  out_shape[axis] = 0;
  for (const DiffTensor& p : parts) {
    const Shape& s = p.shape();
    bool ok = s.size() == first.size();
    for (std::size_t i = 0; ok && i < s.size(); ++i) ok = i == axis || s[i] == first[i];
    if (!ok) dim_error("concat", first, s);
    out_shape[axis] += s[axis];
  }
  std::size_t outer = 1, inner = 1;
  for (std::size_t i = 0; i < axis; ++i) outer *= first[i];
  for (std::size_t i = axis + 1; i < first.size(); ++i) inner *= first[i];
  const std::size_t out_chunk = out_shape[axis] * inner;
  std::vector<std::size_t> chunk(parts.size()), offset(parts.size());
  std::size_t running = 0;
  for (std::size_t p = 0; p < parts.size(); ++p) {
    chunk[p] = parts[p].dim(axis) * inner;
    offset[p] = running;
    running += chunk[p];
  }
  std::vector<double> out(shape_numel(out_shape));
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t p = 0; p < parts.size(); ++p) {
      std::copy_n(parts[p].data().data() + o * chunk[p], chunk[p], out.data() + o * out_chunk + offset[p]);
    }
  }
  return make_result_n("concat", std::move(out_shape), std::move(out), parts,
                       [outer, out_chunk, chunk = std::move(chunk), offset = std::move(offset)](Node& self) {
                         for (std::size_t p = 0; p < chunk.size(); ++p) {
                           double* gP = grad_of(self, p);
                           if (!gP) continue;
                           for (std::size_t o = 0; o < outer; ++o) {
                             const double* src = self.grad.data() + o * out_chunk + offset[p];
                             double* dst = gP + o * chunk[p];
                             for (std::size_t j = 0; j < chunk[p]; ++j) dst[j] += src[j];
                           }
                         }
                       });
}

DiffTensor slice_lastdim(const DiffTensor& a, std::size_t start, std::size_t length) {
  const std::size_t d = last_dim(a);
  if (length == 0 || start + length > d) {
    dim_error("slice_lastdim", "range [" + std::to_string(start) + "," + std::to_string(start + length) +
                                   ") outside last dim of " + shape_str(a.shape()));
  }
  const std::size_t rows = a.numel() / d;
  std::vector<double> out(rows * length);
  for (std::size_t r = 0; r < rows; ++r) {
    std::copy_n(a.data().data() + r * d + start, length, out.data() + r * length);
  }
  Shape shape = a.shape();
  shape.back() = length;
  return make_result("slice_lastdim", std::move(shape), std::move(out), {&a}, [rows, d, start, length](Node& self) {
    if (double* gA = grad_of(self, 0)) {
      for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t j = 0; j < length; ++j) gA[r * d + start + j] += self.grad[r * length + j];
      }
    }
  });
}

DiffTensor transpose_last2(const DiffTensor& a) {
  if (a.rank() < 2) dim_error("transpose_last2", "rank must be >= 2, got " + shape_str(a.shape()));
  const std::size_t m = a.shape()[a.rank() - 2], n = a.shape().back();
  const std::size_t batch = a.numel() / (m * n);
  std::vector<double> out(a.numel());
  const double* X = a.data().data();
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < n; ++j) out[b * m * n + j * m + i] = X[b * m * n + i * n + j];
    }
  }
  Shape shape = a.shape();
  std::swap(shape[shape.size() - 2], shape.back());
  return make_result("transpose_last2", std::move(shape), std::move(out), {&a}, [batch, m, n](Node& self) {
    if (double* gA = grad_of(self, 0)) {
      for (std::size_t b = 0; b < batch; ++b) {
        for (std::size_t i = 0; i < m; ++i) {
          for (std::size_t j = 0; j < n; ++j) gA[b * m * n + i * n + j] += self.grad[b * m * n + j * m + i];
        }
      }
    }
  });
}

DiffTensor cross_entropy_logits(const DiffTensor& logits, std::span<const std::int64_t> targets,
                                std::int64_t ignore_index) {
  if (logits.rank() != 2) dim_error("cross_entropy_logits", "logits must be rank 2, got " + shape_str(logits.shape()));
  const std::size_t n = logits.dim(0), vocab = logits.dim(1);
  if (targets.size() != n) {
    dim_error("cross_entropy_logits", "logits " + shape_str(logits.shape()) + " vs " +
                                          std::to_string(targets.size()) + " targets");
  }
  const double* X = logits.data().data();
  std::vector<double> probs(n * vocab, 0.0);
  std::vector<std::int64_t> kept(targets.begin(), targets.end());
  double total = 0.0;
  std::size_t counted = 0;
  for (std::size_t r = 0; r < n; ++r) {
    if (kept[r] == ignore_index) continue;
    if (kept[r] < 0 || static_cast<std::size_t>(kept[r]) >= vocab) {
      throw IndexError("cross_entropy_logits: target " + std::to_string(kept[r]) + " outside vocab of " +
                       std::to_string(vocab));
    }
    const double* x = X + r * vocab;
    const double m = *std::max_element(x, x + vocab);
    double z = 0.0;
    for (std::size_t j = 0; j < vocab; ++j) z += (probs[r * vocab + j] = std::exp(x[j] - m));
    for (std::size_t j = 0; j < vocab; ++j) probs[r * vocab + j] /= z;
    const double lse = m + std::log(z);
    total += lse - x[kept[r]];
    ++counted;
  }
  if (counted == 0) throw ContractError("cross_entropy_logits: no target positions after masking");
  const double inv = 1.0 / static_cast<double>(counted);
  return make_result("cross_entropy_logits", {1}, {total * inv}, {&logits},
                     [n, vocab, inv, ignore_index, kept = std::move(kept), probs = std::move(probs)](Node& self) {
                       double* gX = grad_of(self, 0);
                       if (!gX) return;
                       const double g = self.grad[0] * inv;
                       for (std::size_t r = 0; r < n; ++r) {
                         if (kept[r] == ignore_index) continue;
                         for (std::size_t j = 0; j < vocab; ++j) gX[r * vocab + j] += g * probs[r * vocab + j];
                         gX[r * vocab + kept[r]] -= g;
                       }
                     });
}

DiffTensor bce_logits(const DiffTensor& logits, std::span<const double> labels) {
  if (labels.size() != logits.numel()) {
    dim_error("bce_logits", "logits " + shape_str(logits.shape()) + " vs " + std::to_string(labels.size()) + " labels");
  }
  const double* X = logits.data().data();
  double total = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const double x = X[i];
    total += std::max(x, 0.0) - x * labels[i] + std::log1p(std::exp(-std::abs(x)));
  }
  const double inv = 1.0 / static_cast<double>(labels.size());
  std::vector<double> kept(labels.begin(), labels.end());
  return make_result("bce_logits", {1}, {total * inv}, {&logits}, [inv, kept = std::move(kept)](Node& self) {
    double* gX = grad_of(self, 0);
    if (!gX) return;
    const double* X = self.parents[0]->data.data();
    const double g = self.grad[0] * inv;
    for (std::size_t i = 0; i < kept.size(); ++i) {
      const double sig = 1.0 / (1.0 + std::exp(-X[i]));
      gX[i] += g * (sig - kept[i]);
    }
  });
}

DiffTensor spmm(const CsrMatrix& a, const DiffTensor& dense) {
  if (dense.rank() != 2 || dense.dim(0) != a.cols) dim_error("spmm", {a.rows, a.cols}, dense.shape());
  const std::size_t d = dense.dim(1);
  std::vector<double> out(a.rows * d, 0.0);
  const double* X = dense.data().data();
  for (std::size_t r = 0; r < a.rows; ++r) {
    double* dst = out.data() + r * d;
    for (std::size_t e = a.offsets[r]; e < a.offsets[r + 1]; ++e) {
      const double v = a.values[e];
      const double* src = X + a.indices[e] * d;
      for (std::size_t j = 0; j < d; ++j) dst[j] += v * src[j];
    }
  }
  // The matrix is copied into the closure so the graph never dangles.
  return make_result("spmm", {a.rows, d}, std::move(out), {&dense}, [a, d](Node& self) {
    double* gX = grad_of(self, 0);
    if (!gX) return;
    for (std::size_t r = 0; r < a.rows; ++r) {
      const double* g = self.grad.data() + r * d;
      for (std::size_t e = a.offsets[r]; e < a.offsets[r + 1]; ++e) {
        const double v = a.values[e];
        double* dst = gX + a.indices[e] * d;
        for (std::size_t j = 0; j < d; ++j) dst[j] += v * g[j];
      }
    }
  });
}

std::string_view op_kind_name(OpKind kind) {
  switch (kind) {
    case OpKind::matmul: return "matmul";
    case OpKind::add: return "add";
    case OpKind::mul: return "mul";
    case OpKind::relu: return "relu";
    case OpKind::gelu: return "gelu";
    case OpKind::softmax_lastdim: return "softmax_lastdim";
    case OpKind::layernorm_lastdim: return "layernorm_lastdim";
    case OpKind::l2_normalize_lastdim: return "l2_normalize_lastdim";
    case OpKind::embedding_lookup: return "embedding_lookup";
    case OpKind::mean_lastaxis: return "mean_lastaxis";
    case OpKind::sum_lastaxis: return "sum_lastaxis";
    case OpKind::reshape: return "reshape";
    case OpKind::concat: return "concat";
    case OpKind::slice_lastdim: return "slice_lastdim";
    case OpKind::transpose_last2: return "transpose_last2";
    case OpKind::cross_entropy_logits: return "cross_entropy_logits";
    case OpKind::bce_logits: return "bce_logits";
  }
  return "unknown";
}

std::vector<OpKind> all_op_kinds() {
  return {OpKind::matmul,          OpKind::add,
          OpKind::mul,             OpKind::relu,
          OpKind::gelu,            OpKind::softmax_lastdim,
          OpKind::layernorm_lastdim, OpKind::l2_normalize_lastdim,
          OpKind::embedding_lookup, OpKind::mean_lastaxis,
          OpKind::sum_lastaxis,    OpKind::reshape,
          OpKind::concat,          OpKind::slice_lastdim,
          OpKind::transpose_last2, OpKind::cross_entropy_logits,
          OpKind::bce_logits};
}

DiffTensor forward_op(OpKind kind, std::span<const DiffTensor> inputs, const OpArgs& args) {
  auto need = [&](std::size_t n) {
    if (inputs.size() != n) {
      dim_error(op_kind_name(kind), "expected " + std::to_string(n) + " inputs, got " + std::to_string(inputs.size()));
    }
  };
  switch (kind) {
    case OpKind::matmul: need(2); return matmul(inputs[0], inputs[1]);
    case OpKind::add: need(2); return add(inputs[0], inputs[1]);
    case OpKind::mul: need(2); return mul(inputs[0], inputs[1]);
    case OpKind::relu: need(1); return relu(inputs[0]);
    case OpKind::gelu: need(1); return gelu(inputs[0]);
    case OpKind::softmax_lastdim: need(1); return softmax_lastdim(inputs[0]);
    case OpKind::layernorm_lastdim: need(1); return layernorm_lastdim(inputs[0]);
    case OpKind::l2_normalize_lastdim: need(1); return l2_normalize_lastdim(inputs[0]);
    case OpKind::embedding_lookup: need(1); return embedding_lookup(inputs[0], args.ids);
    case OpKind::mean_lastaxis: need(1); return mean_lastaxis(inputs[0]);
    case OpKind::sum_lastaxis: need(1); return sum_lastaxis(inputs[0]);
    case OpKind::reshape: need(1); return reshape(inputs[0], args.shape);
    case OpKind::concat: return concat(inputs, args.axis);
    case OpKind::slice_lastdim: need(1); return slice_lastdim(inputs[0], args.start, args.length);
    case OpKind::transpose_last2: need(1); return transpose_last2(inputs[0]);
    case OpKind::cross_entropy_logits: need(1); return cross_entropy_logits(inputs[0], args.ids, args.ignore_index);
    case OpKind::bce_logits: need(1); return bce_logits(inputs[0], args.labels);
  }
  dim_error("forward_op", "unknown op kind");
}

}  // namespace nodegae
