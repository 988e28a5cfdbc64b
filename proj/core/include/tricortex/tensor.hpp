#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace tricortex {

using Shape = std::vector<int64_t>;

std::string shape_str(const Shape& s);
int64_t shape_numel(const Shape& s);

/// Thrown when operand shapes do not conform; the message names the shapes.
struct ShapeError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Thrown when a computation produces or receives non-finite values.
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct TensorImpl {
  Shape shape;
  std::vector<double> values;
  std::vector<double> grad;  // empty until backward touches this tensor
  bool requires_grad = false;
};

/// Dense row-major tensor of 64-bit floats. Value-semantic handle; the
/// underlying buffer is immutable once an op has produced it, except for
/// leaf parameters updated in place by the optimizer between tapes.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, double value, bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);
  static Tensor from(Shape shape, std::vector<double> values,
                     bool requires_grad = false);

  bool defined() const { return impl_ != nullptr; }
  const Shape& shape() const { return impl_->shape; }
  int64_t numel() const { return static_cast<int64_t>(impl_->values.size()); }
  int64_t ndim() const { return static_cast<int64_t>(impl_->shape.size()); }
  int64_t dim(int64_t i) const;

  std::span<const double> values() const { return impl_->values; }
  /// In-place access for leaves (parameter updates, test perturbations).
  std::vector<double>& raw_values() { return impl_->values; }

  bool requires_grad() const { return impl_->requires_grad; }
  void set_requires_grad(bool rg) { impl_->requires_grad = rg; }

  bool has_grad() const { return !impl_->grad.empty(); }
  std::span<const double> grad() const;
  /// Grad buffer, allocated (zeroed) on first use.
  std::vector<double>& grad_buffer();
  void zero_grad() { impl_->grad.clear(); }

  double item() const;
  double at(std::initializer_list<int64_t> idx) const;

  bool same_impl(const Tensor& other) const { return impl_ == other.impl_; }
  TensorImpl* impl() const { return impl_.get(); }

 private:
  std::shared_ptr<TensorImpl> impl_;
};

/// Record of one executed primitive: its operands and how to push the
/// output's gradient back to them.
class Tape {
 public:
  struct Node {
    const char* op;
    std::vector<Tensor> inputs;
    Tensor output;
    std::function<void()> backward;  // accumulates into inputs' grad buffers
  };

  void record(Node node) { nodes_.push_back(std::move(node)); }
  size_t size() const { return nodes_.size(); }
  bool empty() const { return nodes_.empty(); }

  /// Reverse sweep from a scalar loss. Each node runs exactly once;
  /// nodes whose output never received a gradient are skipped. The tape
  /// is cleared afterwards.
  void backward(const Tensor& loss);

 private:
  std::vector<Node> nodes_;
};

/// Tape active on the current thread, or nullptr when gradients are off.
Tape* active_tape();

/// Installs a fresh tape for the current scope (training forward passes).
class TapeScope {
 public:
  TapeScope();
  ~TapeScope();
  TapeScope(const TapeScope&) = delete;
  TapeScope& operator=(const TapeScope&) = delete;
  Tape& tape() { return tape_; }

 private:
  Tape tape_;
  Tape* prev_;
};

/// Suspends recording (inference, finite-difference probes).
class NoGradScope {
 public:
  NoGradScope();
  ~NoGradScope();
  NoGradScope(const NoGradScope&) = delete;
  NoGradScope& operator=(const NoGradScope&) = delete;

 private:
  Tape* prev_;
};

}  // namespace tricortex
