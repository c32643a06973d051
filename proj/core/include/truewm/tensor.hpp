#pragma once

// Shape-tagged 64-bit arrays and the tape that records differentiable ops.
//
// A Tensor is a cheap handle onto shared storage. Ops never modify their
// inputs; they allocate a fresh output. When a Tape is active on the calling
// thread (see TapeScope) and any input requires a gradient, the op is recorded
// together with a closure computing the vector-Jacobian product.

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace truewm::nn {

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_str(const Shape& shape);

struct TensorStorage {
  Shape shape;
  std::vector<double> data;
  std::vector<double> grad;  // empty until backward touches this tensor
  bool requires_grad = false;
};

class Tensor {
 public:
  Tensor() = default;
  Tensor(Shape shape, std::vector<double> data);

  static Tensor zeros(Shape shape);
  static Tensor full(Shape shape, double value);
  static Tensor scalar(double value) { return Tensor({1}, {value}); }

  bool defined() const { return storage_ != nullptr; }
  const Shape& shape() const { return storage_->shape; }
  std::size_t rank() const { return storage_->shape.size(); }
  std::size_t dim(std::size_t i) const { return storage_->shape.at(i); }
  std::size_t numel() const { return storage_->data.size(); }

  std::span<const double> data() const { return storage_->data; }
  /// Direct write access. Only optimizers and loaders should use this.
  std::span<double> mutable_data() { return storage_->data; }
  double item() const;
  double operator[](std::size_t i) const { return storage_->data[i]; }

  bool requires_grad() const { return storage_->requires_grad; }
  Tensor& set_requires_grad(bool on);

  bool has_grad() const { return !storage_->grad.empty(); }
  std::span<const double> grad() const { return storage_->grad; }
  void zero_grad();

  /// Copy of the values with no gradient tracking.
  Tensor detach() const;
  /// Same storage viewed with another shape of equal size (recorded op).
  Tensor reshape(Shape shape) const;

  const TensorStorage* id() const { return storage_.get(); }
  const std::shared_ptr<TensorStorage>& storage() const { return storage_; }

 private:
  explicit Tensor(std::shared_ptr<TensorStorage> s) : storage_(std::move(s)) {}
  std::shared_ptr<TensorStorage> storage_;
  friend class Tape;
  friend Tensor record_op(std::string_view, Shape, std::vector<double>, std::vector<Tensor>,
                          std::function<void(class GradSink&)>);
};

/// View handed to a backward closure: the output gradient and lazily
/// allocated accumulators for each input that requires a gradient.
class GradSink {
 public:
  GradSink(const TensorStorage& out, std::span<const std::shared_ptr<TensorStorage>> inputs)
      : out_(out), inputs_(inputs) {}

  std::span<const double> out_grad() const { return out_.grad; }
  bool wants(std::size_t i) const { return inputs_[i]->requires_grad; }
  /// Accumulator for input i (zero-initialized on first use).
  std::span<double> in_grad(std::size_t i);

 private:
  const TensorStorage& out_;
  std::span<const std::shared_ptr<TensorStorage>> inputs_;
};

using BackwardFn = std::function<void(GradSink&)>;

/// Builds the output tensor of a primitive and records it on the active tape
/// when differentiation is needed. `backward` may be empty for ops that are
/// never differentiated.
Tensor record_op(std::string_view name, Shape shape, std::vector<double> data,
                 std::vector<Tensor> inputs, BackwardFn backward);

class Tape {
 public:
  struct Entry {
    std::string op;
    std::vector<std::shared_ptr<TensorStorage>> inputs;
    std::shared_ptr<TensorStorage> output;
    BackwardFn backward;
  };

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  void push(Entry entry) { entries_.push_back(std::move(entry)); }
  std::size_t size() const { return entries_.size(); }
  const std::vector<Entry>& entries() const { return entries_; }
  std::vector<std::string> op_names() const;

  /// Reverse sweep from a scalar loss. Every requires_grad input seen on the
  /// tape ends with an allocated gradient (zero if unreachable).
  void backward(const Tensor& loss);
  void clear() { entries_.clear(); }

 private:
  std::vector<Entry> entries_;
};

/// Makes `tape` the recording target for the current thread until destroyed.
class TapeScope {
 public:
  explicit TapeScope(Tape& tape);
  ~TapeScope();
  TapeScope(const TapeScope&) = delete;
  TapeScope& operator=(const TapeScope&) = delete;

 private:
  Tape* previous_;
};

/// Suspends recording on the current thread.
class NoGradScope {
 public:
  NoGradScope();
  ~NoGradScope();
  NoGradScope(const NoGradScope&) = delete;
  NoGradScope& operator=(const NoGradScope&) = delete;

 private:
  Tape* previous_;
};

Tape* active_tape();

}  // namespace truewm::nn
