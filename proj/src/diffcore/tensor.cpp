#include "nodegae/diffcore/tensor.hpp"

#include <sstream>
#include <unordered_set>

#include "nodegae/errors.hpp"

namespace nodegae {

namespace {
thread_local bool g_grad_enabled = true;
}

std::size_t shape_numel(const Shape& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ',';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }
bool grad_recording_enabled() { return g_grad_enabled; }

DiffTensor DiffTensor::from(Shape shape, std::vector<double> data, bool requires_grad) {
  if (shape.empty()) throw DimensionError("tensor: shape must have at least one dimension");
  for (std::size_t d : shape) {
    if (d == 0) throw DimensionError("tensor: zero-sized dimension in " + shape_str(shape));
  }
  if (shape_numel(shape) != data.size()) {
    throw DimensionError("tensor: shape " + shape_str(shape) + " does not hold " +
                         std::to_string(data.size()) + " values");
  }
  auto node = std::make_shared<detail::Node>();
  node->shape = std::move(shape);
  node->data = std::move(data);
  node->requires_grad = requires_grad;
  return DiffTensor(std::move(node));
}

DiffTensor DiffTensor::zeros(Shape shape, bool requires_grad) {
  return full(std::move(shape), 0.0, requires_grad);
}

DiffTensor DiffTensor::full(Shape shape, double value, bool requires_grad) {
  const std::size_t n = shape_numel(shape);
  return from(std::move(shape), std::vector<double>(n, value), requires_grad);
}

DiffTensor DiffTensor::scalar(double value, bool requires_grad) {
  return from({1}, {value}, requires_grad);
}

const Shape& DiffTensor::shape() const { return node_->shape; }
std::size_t DiffTensor::numel() const { return node_->data.size(); }
std::span<const double> DiffTensor::data() const { return node_->data; }
std::span<double> DiffTensor::mutable_data() { return node_->data; }

double DiffTensor::item() const {
  if (numel() != 1) throw ContractError("item: tensor of shape " + shape_str(shape()) + " is not a scalar");
  return node_->data[0];
}

bool DiffTensor::requires_grad() const { return node_->requires_grad; }
bool DiffTensor::has_grad() const { return !node_->grad.empty(); }
std::span<const double> DiffTensor::grad() const { return node_->grad; }

std::span<double> DiffTensor::mutable_grad() {
  node_->ensure_grad();
  return node_->grad;
}

void DiffTensor::zero_grad() { node_->grad.assign(node_->data.size(), 0.0); }

void DiffTensor::clear_grad() { node_->grad.clear(); }

const char* DiffTensor::op_name() const { return node_->op; }

DiffTensor DiffTensor::detach() const {
  return from(node_->shape, node_->data, false);
}

void DiffTensor::backward() const {
  if (!node_) throw ContractError("backward: undefined tensor");
  if (numel() != 1) {
    throw ContractError("backward: loss must be a scalar, got shape " + shape_str(shape()));
  }
  if (!node_->requires_grad) {
    throw ContractError("backward: loss was not produced by recorded operations");
  }

  // Iterative post-order DFS: parents precede children in `order`.
  std::vector<detail::Node*> order;
  std::unordered_set<detail::Node*> visited;
  std::vector<std::pair<detail::Node*, std::size_t>> stack;
  stack.emplace_back(node_.get(), 0);
  visited.insert(node_.get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      detail::Node* parent = node->parents[next++].get();
      if (parent->requires_grad && visited.insert(parent).second) stack.emplace_back(parent, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  // Leaf gradients from this sweep are summed separately and added at the
  // end, so repeated sweeps accumulate whole contributions.
  std::vector<std::pair<detail::Node*, std::vector<double>>> previous;
  for (detail::Node* n : order) {
    if (n->backward_fn) {
      n->grad.assign(n->data.size(), 0.0);
    } else if (!n->grad.empty()) {
      previous.emplace_back(n, std::move(n->grad));
      n->grad.clear();
    }
  }
  node_->ensure_grad();
  node_->grad[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    if ((*it)->backward_fn) (*it)->backward_fn(**it);
  }
  for (auto& [n, old] : previous) {
    if (n->grad.empty()) {
      n->grad = std::move(old);
    } else {
      for (std::size_t i = 0; i < old.size(); ++i) n->grad[i] = old[i] + n->grad[i];
    }
  }
}

}  // namespace nodegae
