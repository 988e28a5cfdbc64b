#include "tricortex/tensor.hpp"

#include <sstream>

namespace tricortex {

std::string shape_str(const Shape& s) {
  std::ostringstream os;
  os << '[';
  for (size_t i = 0; i < s.size(); ++i) {
    if (i) os << ", ";
    os << s[i];
  }
  os << ']';
  return os.str();
}

int64_t shape_numel(const Shape& s) {
  int64_t n = 1;
  for (int64_t d : s) n *= d;
  return n;
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  return from(std::move(shape), {}, requires_grad);
}

Tensor Tensor::full(Shape shape, double value, bool requires_grad) {
  Tensor t;
  int64_t n = shape_numel(shape);
  t.impl_ = std::make_shared<TensorImpl>(
      TensorImpl{std::move(shape), std::vector<double>(n, value), {}, requires_grad});
  return t;
}

Tensor Tensor::scalar(double value, bool requires_grad) {
  return from({}, {value}, requires_grad);
}

Tensor Tensor::from(Shape shape, std::vector<double> values, bool requires_grad) {
  int64_t n = shape_numel(shape);
  if (values.empty()) values.assign(n, 0.0);
  if (static_cast<int64_t>(values.size()) != n) {
    throw ShapeError("tensor data length " + std::to_string(values.size()) +
                     " does not match shape " + shape_str(shape));
  }
  Tensor t;
  t.impl_ = std::make_shared<TensorImpl>(
      TensorImpl{std::move(shape), std::move(values), {}, requires_grad});
  return t;
}

int64_t Tensor::dim(int64_t i) const {
  if (i < 0) i += ndim();
  return impl_->shape.at(static_cast<size_t>(i));
}

std::span<const double> Tensor::grad() const { return impl_->grad; }

std::vector<double>& Tensor::grad_buffer() {
  if (impl_->grad.empty()) impl_->grad.assign(impl_->values.size(), 0.0);
  return impl_->grad;
}

double Tensor::item() const {
  if (numel() != 1) {
    throw ShapeError("item() requires a scalar, got shape " + shape_str(shape()));
  }
  return impl_->values[0];
}

double Tensor::at(std::initializer_list<int64_t> idx) const {
  const Shape& s = impl_->shape;
  if (idx.size() != s.size()) {
    throw ShapeError("index rank mismatch for shape " + shape_str(s));
  }
  int64_t flat = 0;
  size_t k = 0;
  for (int64_t i : idx) {
    flat = flat * s[k] + i;
    ++k;
  }
  return impl_->values[static_cast<size_t>(flat)];
}

void Tape::backward(const Tensor& loss) {
  if (loss.numel() != 1) {
    throw ShapeError("backward requires a scalar loss, got shape " +
                     shape_str(loss.shape()));
  }
  if (nodes_.empty()) {
    throw std::logic_error("backward on an empty tape");
  }
  loss.impl()->grad.assign(1, 1.0);
  for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
    if (!it->output.has_grad()) continue;  // branch never fed the loss
    it->backward();
  }
  nodes_.clear();
}

namespace {
thread_local Tape* g_active_tape = nullptr;
}

Tape* active_tape() { return g_active_tape; }

TapeScope::TapeScope() : prev_(g_active_tape) { g_active_tape = &tape_; }
TapeScope::~TapeScope() { g_active_tape = prev_; }

NoGradScope::NoGradScope() : prev_(g_active_tape) { g_active_tape = nullptr; }
NoGradScope::~NoGradScope() { g_active_tape = prev_; }

}  // namespace tricortex
