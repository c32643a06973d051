#include "truewm/tensor.hpp"

#include <algorithm>
#include <sstream>

#include "truewm/error.hpp"

namespace truewm::nn {

namespace {
thread_local Tape* g_active_tape = nullptr;
}

std::size_t shape_numel(const Shape& shape) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "," : "") << shape[i];
  os << ']';
  return os.str();
}

Tensor::Tensor(Shape shape, std::vector<double> data) {
  TRUEWM_REQUIRE(!shape.empty(), "tensor shape must have at least one dimension");
  for (auto d : shape) TRUEWM_REQUIRE(d > 0, "tensor dimensions must be positive, got " + shape_str(shape));
  TRUEWM_REQUIRE(shape_numel(shape) == data.size(),
                 "shape " + shape_str(shape) + " does not match " + std::to_string(data.size()) + " values");
  storage_ = std::make_shared<TensorStorage>();
  storage_->shape = std::move(shape);
  storage_->data = std::move(data);
}

Tensor Tensor::zeros(Shape shape) {
  const auto n = shape_numel(shape);
  return Tensor(std::move(shape), std::vector<double>(n, 0.0));
}

Tensor Tensor::full(Shape shape, double value) {
  const auto n = shape_numel(shape);
  return Tensor(std::move(shape), std::vector<double>(n, value));
}

double Tensor::item() const {
  TRUEWM_REQUIRE(numel() == 1, "item() on tensor of shape " + shape_str(shape()));
  return storage_->data[0];
}

Tensor& Tensor::set_requires_grad(bool on) {
  storage_->requires_grad = on;
  return *this;
}

void Tensor::zero_grad() {
  storage_->grad.assign(storage_->data.size(), 0.0);
}

Tensor Tensor::detach() const { return Tensor(shape(), storage_->data); }

Tensor Tensor::reshape(Shape new_shape) const {
  TRUEWM_REQUIRE(shape_numel(new_shape) == numel(),
                 "cannot reshape " + shape_str(shape()) + " to " + shape_str(new_shape));
  return record_op("reshape", std::move(new_shape), storage_->data, {*this}, [](GradSink& g) {
    auto out = g.out_grad();
    auto in = g.in_grad(0);
    for (std::size_t i = 0; i < out.size(); ++i) in[i] += out[i];
  });
}

std::span<double> GradSink::in_grad(std::size_t i) {
  auto& s = *inputs_[i];
  if (s.grad.empty()) s.grad.assign(s.data.size(), 0.0);
  return s.grad;
}

Tensor record_op(std::string_view name, Shape shape, std::vector<double> data,
                 std::vector<Tensor> inputs, BackwardFn backward) {
  Tensor out(std::move(shape), std::move(data));
  Tape* tape = g_active_tape;
  if (tape == nullptr || !backward) return out;
  const bool any = std::any_of(inputs.begin(), inputs.end(),
                               [](const Tensor& t) { return t.requires_grad(); });
  if (!any) return out;
  out.storage_->requires_grad = true;
  Tape::Entry e;
  e.op = std::string(name);
  e.inputs.reserve(inputs.size());
  for (auto& t : inputs) e.inputs.push_back(t.storage_);
  e.output = out.storage_;
  e.backward = std::move(backward);
  tape->push(std::move(e));
  return out;
}

std::vector<std::string> Tape::op_names() const {
  std::vector<std::string> names;
  names.reserve(entries_.size());
  for (const auto& e : entries_) names.push_back(e.op);
  return names;
}

void Tape::backward(const Tensor& loss) {
  TRUEWM_REQUIRE(loss.defined() && loss.numel() == 1,
                 "backward() needs a scalar loss, got " + (loss.defined() ? shape_str(loss.shape()) : "undefined"));
  TRUEWM_REQUIRE(loss.requires_grad(), "loss was not produced under this tape");
  loss.storage_->grad.assign(1, 1.0);
  for (auto it = entries_.rbegin(); it != entries_.rend(); ++it) {
    if (it->output->grad.empty()) continue;  // unreachable from the loss
    GradSink sink(*it->output, it->inputs);
    it->backward(sink);
  }
  for (auto& e : entries_) {
    for (auto& in : e.inputs) {
      if (in->requires_grad && in->grad.empty()) in->grad.assign(in->data.size(), 0.0);
    }
  }
}

TapeScope::TapeScope(Tape& tape) : previous_(g_active_tape) { g_active_tape = &tape; }
TapeScope::~TapeScope() { g_active_tape = previous_; }

NoGradScope::NoGradScope() : previous_(g_active_tape) { g_active_tape = nullptr; }
NoGradScope::~NoGradScope() { g_active_tape = previous_; }

Tape* active_tape() { return g_active_tape; }

}  // namespace truewm::nn
