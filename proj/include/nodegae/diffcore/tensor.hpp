#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace nodegae {

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_str(const Shape& shape);

namespace detail {

struct Node {
  Shape shape;
  std::vector<double> data;
  std::vector<double> grad;  // empty until first accumulation
  bool requires_grad = false;
  const char* op = "leaf";
  std::vector<std::shared_ptr<Node>> parents;
  // Reads this node's grad and accumulates into parents that require grad.
  std::function<void(Node&)> backward_fn;

  void ensure_grad() {
    if (grad.empty()) grad.assign(data.size(), 0.0);
  }
};

}  // namespace detail

/// Dense row-major float64 tensor that records the operations producing it.
///
/// Copies share the underlying node. Values are immutable once created,
/// except through mutable_data(), which optimizers use on leaf parameters
/// between steps (never while a graph referencing them is being built).
class DiffTensor {
 public:
  DiffTensor() = default;

  static DiffTensor zeros(Shape shape, bool requires_grad = false);
  static DiffTensor full(Shape shape, double value, bool requires_grad = false);
  static DiffTensor from(Shape shape, std::vector<double> data, bool requires_grad = false);
  static DiffTensor scalar(double value, bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const;
  std::size_t rank() const { return shape().size(); }
  std::size_t dim(std::size_t axis) const { return shape().at(axis); }
  std::size_t numel() const;

  std::span<const double> data() const;
  std::span<double> mutable_data();
  double item() const;
  double at(std::size_t flat) const { return data()[flat]; }

  bool requires_grad() const;
  bool has_grad() const;
  std::span<const double> grad() const;
  std::span<double> mutable_grad();
  void zero_grad();
  void clear_grad();

  const char* op_name() const;

  /// Reverse-mode sweep from this scalar. Leaf grads accumulate across calls;
  /// interior grads are reset at the start of every sweep.
  void backward() const;

  /// Value copy with no recorded history.
  DiffTensor detach() const;

  const std::shared_ptr<detail::Node>& node() const { return node_; }
  explicit DiffTensor(std::shared_ptr<detail::Node> node) : node_(std::move(node)) {}

 private:
  std::shared_ptr<detail::Node> node_;
};

/// Disables recording for the lifetime of the guard (current thread only).
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

bool grad_recording_enabled();

inline void backward(const DiffTensor& loss) { loss.backward(); }

}  // namespace nodegae
