#include "cosco/tensor.hpp"

#include <algorithm>
#include <climits>
#include <numeric>
#include <sstream>

#include "cosco/errors.hpp"

#if defined(__GLIBC__)
#include <malloc.h>
#endif

namespace cosco {

std::size_t shape_numel(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_to_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ',';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

namespace {

void validate_shape(const Shape& shape) {
  for (std::size_t extent : shape) {
    if (extent == 0) throw DimensionError("tensor extents must be positive, got " + shape_to_string(shape));
  }
}

}  // namespace

Tensor Tensor::zeros(Shape shape, bool requires_grad) { return full(std::move(shape), 0.0, requires_grad); }

Tensor Tensor::full(Shape shape, double value, bool requires_grad) {
  validate_shape(shape);
  const std::size_t n = shape_numel(shape);
  return from(std::move(shape), std::vector<double>(n, value), requires_grad);
}

Tensor Tensor::from(Shape shape, std::vector<double> values, bool requires_grad) {
  validate_shape(shape);
  if (shape_numel(shape) != values.size()) {
    throw DimensionError("shape " + shape_to_string(shape) + " does not hold " + std::to_string(values.size()) +
                         " values");
  }
  auto storage = std::make_shared<TensorStorage>();
  storage->shape = std::move(shape);
  storage->data = std::move(values);
  storage->requires_grad = requires_grad;
  if (requires_grad) storage->grad.assign(storage->data.size(), 0.0);
  return Tensor(std::move(storage));
}

Tensor Tensor::scalar(double value, bool requires_grad) { return from({1}, {value}, requires_grad); }

TensorStorage& Tensor::checked() const {
  if (!storage_) throw StateError("use of an undefined tensor");
  return *storage_;
}

const Shape& Tensor::shape() const { return checked().shape; }

std::size_t Tensor::dim(std::size_t axis) const {
  const auto& s = shape();
  if (axis >= s.size()) throw RankError("axis " + std::to_string(axis) + " out of range for " + shape_to_string(s));
  return s[axis];
}

std::size_t Tensor::numel() const { return checked().data.size(); }

std::span<const double> Tensor::data() const { return checked().data; }

std::span<double> Tensor::mutable_data() { return checked().data; }

double Tensor::item() const {
  const auto& s = checked();
  if (s.data.size() != 1) throw RankError("item() on tensor of shape " + shape_to_string(s.shape));
  return s.data[0];
}

double Tensor::at(std::initializer_list<std::size_t> index) const {
  const auto& s = checked();
  if (index.size() != s.shape.size()) throw RankError("index rank does not match " + shape_to_string(s.shape));
  std::size_t flat = 0;
  std::size_t axis = 0;
  for (std::size_t i : index) {
    if (i >= s.shape[axis]) throw DimensionError("index out of range for " + shape_to_string(s.shape));
    flat = flat * s.shape[axis] + i;
    ++axis;
  }
  return s.data[flat];
}

bool Tensor::requires_grad() const { return checked().requires_grad; }

void Tensor::set_requires_grad(bool value) {
  auto& s = checked();
  s.requires_grad = value;
  if (value && s.grad.empty()) s.grad.assign(s.data.size(), 0.0);
}

bool Tensor::has_grad() const { return !checked().grad.empty(); }

std::span<const double> Tensor::grad() const { return checked().grad; }

std::span<double> Tensor::grad_buffer() {
  auto& s = checked();
  if (s.grad.empty()) s.grad.assign(s.data.size(), 0.0);
  return s.grad;
}

void Tensor::zero_grad() {
  auto& s = checked();
  s.grad.assign(s.data.size(), 0.0);
}

Tensor Tensor::clone() const {
  const auto& s = checked();
  return from(s.shape, s.data, false);
}

void zero_grad(std::span<Parameter> params) {
  for (auto& p : params) p.value.zero_grad();
}

namespace {
thread_local GradientTape t_tape;
thread_local bool t_grad_enabled = true;
}  // namespace

GradientTape& GradientTape::current() { return t_tape; }

void GradientTape::record(const Tensor& output, BackwardFn fn) {
  nodes_.push_back(Node{output.storage(), std::move(fn)});
}

void GradientTape::backward(const Tensor& loss) {
  if (!loss.defined()) throw StateError("backward on an undefined tensor");
  if (loss.numel() != 1) throw RankError("backward needs a scalar loss, got shape " + shape_to_string(loss.shape()));
  if (!loss.requires_grad()) throw StateError("backward on a loss that does not require grad");
  if (nodes_.empty()) throw StateError("backward on an empty tape");

  auto& seed = loss.storage()->grad;
  seed.assign(1, 1.0);
  // Nodes are moved out first so a throwing backward fn still leaves the tape consumed.
  std::vector<Node> nodes = std::move(nodes_);
  nodes_.clear();
  for (auto it = nodes.rbegin(); it != nodes.rend(); ++it) {
    const auto& out = it->output;
    if (out->grad.empty()) continue;  // not reachable from the loss
    it->fn(out->grad);
  }
}

void backward(const Tensor& loss) { GradientTape::current().backward(loss); }

bool grad_mode_enabled() { return t_grad_enabled; }

NoGradGuard::NoGradGuard() : previous_(t_grad_enabled) { t_grad_enabled = false; }

NoGradGuard::~NoGradGuard() { t_grad_enabled = previous_; }

void retain_freed_memory() {
#if defined(__GLIBC__)
  mallopt(M_MMAP_THRESHOLD, INT_MAX);
  mallopt(M_TRIM_THRESHOLD, INT_MAX);
  mallopt(M_TOP_PAD, 256 << 20);
#endif
}

}  // namespace cosco
