#pragma once

// Dense row-major float64 tensors with a thread-local reverse-mode tape.

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace cael {

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_str(const Shape& shape);

class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Throws ShapeError "<op>: <what> (lhs [..] vs rhs [..])".
[[noreturn]] void shape_mismatch(std::string_view op, std::string_view what, const Shape& lhs,
                                 const Shape& rhs);

struct TensorStorage {
  Shape shape;
  std::vector<double> data;
  std::vector<double> grad;  // empty until first accumulation
  bool requires_grad = false;
};

class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, double fill = 0.0);
  Tensor(Shape shape, std::vector<double> data);

  static Tensor scalar(double value);

  bool defined() const { return static_cast<bool>(storage_); }
  const Shape& shape() const { return storage_->shape; }
  std::size_t rank() const { return storage_->shape.size(); }
  std::size_t dim(std::size_t axis) const { return storage_->shape.at(axis); }
  std::size_t numel() const { return storage_->data.size(); }

  std::span<double> data() { return storage_->data; }
  std::span<const double> data() const { return storage_->data; }
  double item() const;

  bool requires_grad() const { return storage_->requires_grad; }
  Tensor& set_requires_grad(bool on = true);

  bool has_grad() const { return !storage_->grad.empty(); }
  std::span<const double> grad() const { return storage_->grad; }
  // Allocates a zero gradient buffer on first use.
  std::span<double> grad_buffer() const;
  void zero_grad();
  void clear_grad();

  // Deep copy, detached from any tape.
  Tensor clone() const;

  const TensorStorage* id() const { return storage_.get(); }

 private:
  std::shared_ptr<TensorStorage> storage_;
};

// Recorded operations, appended in execution order. Since an op can only
// consume tensors that already exist, append order is a topological order.
class GradTape {
 public:
  struct Node {
    std::string_view op;
    std::vector<Tensor> inputs;
    Tensor output;
    std::function<void()> backward;
  };

  static GradTape& current();

  bool recording() const { return enabled_; }
  void set_recording(bool on) { enabled_ = on; }

  void record(Node node) { nodes_.push_back(std::move(node)); }
  std::size_t size() const { return nodes_.size(); }
  const std::vector<Node>& nodes() const { return nodes_; }
  void clear() { nodes_.clear(); }

  // Runs every recorded node once in reverse order. Returns visited count.
  std::size_t run_backward();

 private:
  std::vector<Node> nodes_;
  bool enabled_ = true;
};

// Disables recording on this thread for the guard's lifetime.
class NoGradGuard {
 public:
  NoGradGuard() : prev_(GradTape::current().recording()) {
    GradTape::current().set_recording(false);
  }
  ~NoGradGuard() { GradTape::current().set_recording(prev_); }
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool prev_;
};

// Seeds d(loss)/d(loss) = 1, back-propagates through the tape, clears it.
// Every requires_grad tensor reached by the tape ends with a populated grad.
void backward(Tensor& loss);

}  // namespace cael
