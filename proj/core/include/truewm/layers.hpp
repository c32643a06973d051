#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "truewm/ops.hpp"
#include "truewm/random.hpp"
#include "truewm/tensor.hpp"

namespace truewm::nn {

struct Conv1dLayer {
  Tensor weight;  // [Cout, Cin, k]
  Tensor bias;    // [Cout]
  std::size_t stride = 1;
  std::size_t padding = 0;

  static Conv1dLayer init(std::size_t cin, std::size_t cout, std::size_t kernel, std::size_t stride,
                          std::size_t padding, Rng& rng);
  Tensor operator()(const Tensor& x) const { return conv1d(x, weight, bias, stride, padding); }
};

struct ConvTranspose1dLayer {
  Tensor weight;  // [Cin, Cout, k]
  Tensor bias;    // [Cout]
  std::size_t stride = 1;
  std::size_t padding = 0;
  std::size_t output_padding = 0;

  static ConvTranspose1dLayer init(std::size_t cin, std::size_t cout, std::size_t kernel, std::size_t stride,
                                   std::size_t padding, std::size_t output_padding, Rng& rng);
  Tensor operator()(const Tensor& x) const {
    return conv1d_transpose(x, weight, bias, stride, padding, output_padding);
  }
};

struct DenseLayer {
  Tensor weight;  // [out, in]
  Tensor bias;    // [out]

  static DenseLayer init(std::size_t in, std::size_t out, Rng& rng);
  Tensor operator()(const Tensor& x) const { return dense(x, weight, bias); }
};

/// uniform(-a, a) with a = 1/sqrt(fan_in); leaf with requires_grad set.
Tensor uniform_parameter(Shape shape, std::size_t fan_in, Rng& rng);

struct NamedTensor {
  std::string name;
  Tensor tensor;
};

}  // namespace truewm::nn
