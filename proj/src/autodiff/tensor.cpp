#include "cael/tensor.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>

namespace cael {

std::size_t shape_numel(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "," : "") << shape[i];
  os << ']';
  return os.str();
}

void shape_mismatch(std::string_view op, std::string_view what, const Shape& lhs,
                    const Shape& rhs) {
  std::ostringstream os;
  os << op << ": " << what << " (lhs " << shape_str(lhs) << " vs rhs " << shape_str(rhs) << ")";
  throw ShapeError(os.str());
}

Tensor::Tensor(Shape shape, double fill) : storage_(std::make_shared<TensorStorage>()) {
  for (std::size_t d : shape)
    if (d == 0) throw ShapeError("tensor: zero-sized axis in shape " + shape_str(shape));
  storage_->data.assign(shape_numel(shape), fill);
  storage_->shape = std::move(shape);
}

Tensor::Tensor(Shape shape, std::vector<double> data) : storage_(std::make_shared<TensorStorage>()) {
  for (std::size_t d : shape)
    if (d == 0) throw ShapeError("tensor: zero-sized axis in shape " + shape_str(shape));
  if (shape_numel(shape) != data.size())
    throw ShapeError("tensor: shape " + shape_str(shape) + " does not match " +
                     std::to_string(data.size()) + " values");
  storage_->shape = std::move(shape);
  storage_->data = std::move(data);
}

Tensor Tensor::scalar(double value) { return Tensor(Shape{1}, std::vector<double>{value}); }

double Tensor::item() const {
  if (numel() != 1) throw ShapeError("item: tensor is not a scalar " + shape_str(shape()));
  return storage_->data[0];
}

Tensor& Tensor::set_requires_grad(bool on) {
  storage_->requires_grad = on;
  return *this;
}

std::span<double> Tensor::grad_buffer() const {
  if (storage_->grad.empty()) storage_->grad.assign(storage_->data.size(), 0.0);
  return storage_->grad;
}

void Tensor::zero_grad() {
  std::fill(storage_->grad.begin(), storage_->grad.end(), 0.0);
}

void Tensor::clear_grad() {
  storage_->grad.clear();
  storage_->grad.shrink_to_fit();
}

Tensor Tensor::clone() const {
  Tensor out(storage_->shape, storage_->data);
  return out;
}

GradTape& GradTape::current() {
  thread_local GradTape tape;
  return tape;
}

std::size_t GradTape::run_backward() {
  std::size_t visited = 0;
  for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
    for (Tensor& in : it->inputs)
      if (in.requires_grad()) in.grad_buffer();
    if (it->output.has_grad()) it->backward();
    ++visited;
  }
  return visited;
}

void backward(Tensor& loss) {
  if (!loss.defined() || loss.numel() != 1)
    throw ShapeError("backward: loss must be a scalar, got " +
                     (loss.defined() ? shape_str(loss.shape()) : std::string("undefined")));
  GradTape& tape = GradTape::current();
  if (tape.size() == 0) throw std::logic_error("backward: tape is empty");
  loss.grad_buffer()[0] = 1.0;
  tape.run_backward();
  tape.clear();
}

}  // namespace cael
