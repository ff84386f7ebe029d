#pragma once

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace cosco {

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_to_string(const Shape& shape);

struct TensorStorage {
  Shape shape;
  std::vector<double> data;
  // Empty until a gradient flows into the tensor; leaves created with requires_grad
  // start with a zero buffer.
  std::vector<double> grad;
  bool requires_grad = false;
};

/// Dense row-major tensor of doubles. Copies share storage; use clone() for a deep copy.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, double value, bool requires_grad = false);
  static Tensor from(Shape shape, std::vector<double> values, bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);

  bool defined() const noexcept { return static_cast<bool>(storage_); }

  const Shape& shape() const;
  std::size_t rank() const { return shape().size(); }
  std::size_t dim(std::size_t axis) const;
  std::size_t numel() const;

  std::span<const double> data() const;
  std::span<double> mutable_data();
  double item() const;
  double at(std::initializer_list<std::size_t> index) const;

  bool requires_grad() const;
  void set_requires_grad(bool value);
  bool has_grad() const;
  std::span<const double> grad() const;
  /// Gradient buffer, allocated as zeros on first access.
  std::span<double> grad_buffer();
  void zero_grad();

  /// Deep copy of values without gradient tracking.
  Tensor clone() const;

  bool same_storage(const Tensor& other) const noexcept { return storage_ == other.storage_; }
  const std::shared_ptr<TensorStorage>& storage() const { return storage_; }

 private:
  explicit Tensor(std::shared_ptr<TensorStorage> storage) : storage_(std::move(storage)) {}
  TensorStorage& checked() const;

  std::shared_ptr<TensorStorage> storage_;
};

/// A named trainable tensor. Names are dotted paths such as "block1.conv2.weight".
struct Parameter {
  std::string name;
  Tensor value;
};

using ParameterList = std::vector<Parameter>;

void zero_grad(std::span<Parameter> params);

/// Reverse-mode record of differentiable operations, replayed newest-first by backward().
///
/// Each thread owns one active tape (GradientTape::current()). Ops record onto it whenever
/// gradient mode is on and at least one input requires grad.
class GradientTape {
 public:
  using BackwardFn = std::function<void(std::span<const double> output_grad)>;

  static GradientTape& current();

  void record(const Tensor& output, BackwardFn fn);
  std::size_t size() const noexcept { return nodes_.size(); }
  bool empty() const noexcept { return nodes_.empty(); }
  void clear() noexcept { nodes_.clear(); }

  /// Seeds d(loss)/d(loss) = 1, replays every node in reverse order and consumes the tape.
  void backward(const Tensor& loss);

 private:
  struct Node {
    std::shared_ptr<TensorStorage> output;
    BackwardFn fn;
  };
  std::vector<Node> nodes_;
};

void backward(const Tensor& loss);

bool grad_mode_enabled();

/// Disables tape recording on this thread for its lifetime.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

/// Keeps freed heap memory in the process instead of returning it to the OS after every
/// large tensor (glibc only; no-op elsewhere). Training allocates and frees buffers of
/// several megabytes per op, and the resulting page faults otherwise cost ~20% of runtime.
void retain_freed_memory();

}  // namespace cosco
