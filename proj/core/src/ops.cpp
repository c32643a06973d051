#include "truewm/ops.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>

#include "truewm/error.hpp"

namespace truewm::nn {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<RowMat>;
using ConstMatMap = Eigen::Map<const RowMat>;

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  TRUEWM_REQUIRE(a.shape() == b.shape(), std::string(op) + ": shape mismatch " + shape_str(a.shape()) +
                                             " vs " + shape_str(b.shape()));
}

// cols[(c*k + t), j] = x[c, j*stride - pad + t]
void im2col(const double* x, std::size_t channels, std::size_t length, std::size_t k, std::size_t stride,
            std::size_t pad, std::size_t lout, double* cols) {
  for (std::size_t c = 0; c < channels; ++c) {
    const double* xc = x + c * length;
    for (std::size_t t = 0; t < k; ++t) {
      double* row = cols + (c * k + t) * lout;
      for (std::size_t j = 0; j < lout; ++j) {
        const auto pos = static_cast<std::ptrdiff_t>(j * stride + t) - static_cast<std::ptrdiff_t>(pad);
        row[j] = (pos >= 0 && pos < static_cast<std::ptrdiff_t>(length)) ? xc[pos] : 0.0;
      }
    }
  }
}

// Adjoint of im2col: scatter-add columns back onto x.
void col2im(const double* cols, std::size_t channels, std::size_t length, std::size_t k, std::size_t stride,
            std::size_t pad, std::size_t lout, double* x) {
  for (std::size_t c = 0; c < channels; ++c) {
    double* xc = x + c * length;
    for (std::size_t t = 0; t < k; ++t) {
      const double* row = cols + (c * k + t) * lout;
      for (std::size_t j = 0; j < lout; ++j) {
        const auto pos = static_cast<std::ptrdiff_t>(j * stride + t) - static_cast<std::ptrdiff_t>(pad);
        if (pos >= 0 && pos < static_cast<std::ptrdiff_t>(length)) xc[pos] += row[j];
      }
    }
  }
}

template <typename F>
Tensor unary(const char* name, const Tensor& x, F&& value, auto&& derivative) {
  std::vector<double> out(x.numel());
  auto in = x.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = value(in[i]);
  return record_op(name, x.shape(), std::move(out), {x},
                   [x, derivative](GradSink& g) {
                     auto go = g.out_grad();
                     auto gi = g.in_grad(0);
                     auto xv = x.data();
                     for (std::size_t i = 0; i < go.size(); ++i) gi[i] += go[i] * derivative(xv[i]);
                   });
}

double stable_sigmoid(double v) {
  if (v >= 0) return 1.0 / (1.0 + std::exp(-v));
  const double e = std::exp(v);
  return e / (1.0 + e);
}

}  // namespace

std::size_t conv1d_output_length(std::size_t length, std::size_t kernel, std::size_t stride,
                                 std::size_t padding) {
  TRUEWM_REQUIRE(kernel >= 1 && stride >= 1, "conv1d: kernel and stride must be >= 1");
  TRUEWM_REQUIRE(length + 2 * padding >= kernel, "conv1d: input of length " + std::to_string(length) +
                                                     " too short for kernel " + std::to_string(kernel));
  return (length + 2 * padding - kernel) / stride + 1;
}

std::size_t conv1d_transpose_output_length(std::size_t length, std::size_t kernel, std::size_t stride,
                                           std::size_t padding, std::size_t output_padding) {
  TRUEWM_REQUIRE(output_padding < stride, "conv1d_transpose: output_padding must be < stride");
  const auto full = (length - 1) * stride + kernel + output_padding;
  TRUEWM_REQUIRE(full > 2 * padding, "conv1d_transpose: padding consumes the whole output");
  return full - 2 * padding;
}

Tensor conv1d(const Tensor& input, const Tensor& weight, const Tensor& bias, std::size_t stride,
              std::size_t padding) {
  TRUEWM_REQUIRE(input.rank() == 3, "conv1d: input must be [B, Cin, L], got " + shape_str(input.shape()));
  TRUEWM_REQUIRE(weight.rank() == 3, "conv1d: weight must be [Cout, Cin, k]");
  const std::size_t batch = input.dim(0), cin = input.dim(1), len = input.dim(2);
  const std::size_t cout = weight.dim(0), k = weight.dim(2);
  TRUEWM_REQUIRE(weight.dim(1) == cin, "conv1d: input has " + std::to_string(cin) + " channels, weight expects " +
                                           std::to_string(weight.dim(1)));
  if (bias.defined()) TRUEWM_REQUIRE(bias.numel() == cout, "conv1d: bias size must equal Cout");
  const std::size_t lout = conv1d_output_length(len, k, stride, padding);

  std::vector<double> out(batch * cout * lout);
  std::vector<double> cols(cin * k * lout);
  ConstMatMap w(weight.data().data(), cout, cin * k);
  for (std::size_t b = 0; b < batch; ++b) {
    im2col(input.data().data() + b * cin * len, cin, len, k, stride, padding, lout, cols.data());
    MatMap y(out.data() + b * cout * lout, cout, lout);
    y.noalias() = w * ConstMatMap(cols.data(), cin * k, lout);
    if (bias.defined()) {
      for (std::size_t c = 0; c < cout; ++c) y.row(c).array() += bias[c];
    }
  }

  std::vector<Tensor> inputs{input, weight};
  if (bias.defined()) inputs.push_back(bias);
  const bool has_bias = bias.defined();
  return record_op(
      "conv1d", {batch, cout, lout}, std::move(out), std::move(inputs),
      [=](GradSink& g) {
        auto go = g.out_grad();
        std::vector<double> cols_b(cin * k * lout);
        std::vector<double> dcols(cin * k * lout);
        ConstMatMap w(weight.data().data(), cout, cin * k);
        for (std::size_t b = 0; b < batch; ++b) {
          ConstMatMap gy(go.data() + b * cout * lout, cout, lout);
          if (g.wants(1)) {
            im2col(input.data().data() + b * cin * len, cin, len, k, stride, padding, lout, cols_b.data());
            MatMap dw(g.in_grad(1).data(), cout, cin * k);
            dw.noalias() += gy * ConstMatMap(cols_b.data(), cin * k, lout).transpose();
          }
          if (g.wants(0)) {
            MatMap dc(dcols.data(), cin * k, lout);
            dc.noalias() = w.transpose() * gy;
            col2im(dcols.data(), cin, len, k, stride, padding, lout, g.in_grad(0).data() + b * cin * len);
          }
          if (has_bias && g.wants(2)) {
            auto db = g.in_grad(2);
            for (std::size_t c = 0; c < cout; ++c) db[c] += gy.row(c).sum();
          }
        }
      });
}

Tensor conv1d_transpose(const Tensor& input, const Tensor& weight, const Tensor& bias, std::size_t stride,
                        std::size_t padding, std::size_t output_padding) {
  TRUEWM_REQUIRE(input.rank() == 3, "conv1d_transpose: input must be [B, Cin, L]");
  TRUEWM_REQUIRE(weight.rank() == 3, "conv1d_transpose: weight must be [Cin, Cout, k]");
  TRUEWM_REQUIRE(stride >= 1, "conv1d_transpose: stride must be >= 1");
  const std::size_t batch = input.dim(0), cin = input.dim(1), len = input.dim(2);
  const std::size_t cout = weight.dim(1), k = weight.dim(2);
  TRUEWM_REQUIRE(weight.dim(0) == cin, "conv1d_transpose: channel mismatch between input and weight");
  if (bias.defined()) TRUEWM_REQUIRE(bias.numel() == cout, "conv1d_transpose: bias size must equal Cout");
  const std::size_t lout = conv1d_transpose_output_length(len, k, stride, padding, output_padding);

  std::vector<double> out(batch * cout * lout, 0.0);
  std::vector<double> cols(cout * k * len);
  ConstMatMap w(weight.data().data(), cin, cout * k);
  for (std::size_t b = 0; b < batch; ++b) {
    MatMap c(cols.data(), cout * k, len);
    c.noalias() = w.transpose() * ConstMatMap(input.data().data() + b * cin * len, cin, len);
    double* y = out.data() + b * cout * lout;
    col2im(cols.data(), cout, lout, k, stride, padding, len, y);
    if (bias.defined()) {
      for (std::size_t co = 0; co < cout; ++co)
        for (std::size_t j = 0; j < lout; ++j) y[co * lout + j] += bias[co];
    }
  }

  std::vector<Tensor> inputs{input, weight};
  if (bias.defined()) inputs.push_back(bias);
  const bool has_bias = bias.defined();
  return record_op(
      "conv1d_transpose", {batch, cout, lout}, std::move(out), std::move(inputs),
      [=](GradSink& g) {
        auto go = g.out_grad();
        std::vector<double> gcols(cout * k * len);
        ConstMatMap w(weight.data().data(), cin, cout * k);
        for (std::size_t b = 0; b < batch; ++b) {
          im2col(go.data() + b * cout * lout, cout, lout, k, stride, padding, len, gcols.data());
          ConstMatMap gc(gcols.data(), cout * k, len);
          if (g.wants(0)) {
            MatMap dx(g.in_grad(0).data() + b * cin * len, cin, len);
            dx.noalias() += w * gc;
          }
          if (g.wants(1)) {
            MatMap dw(g.in_grad(1).data(), cin, cout * k);
            dw.noalias() += ConstMatMap(input.data().data() + b * cin * len, cin, len) * gc.transpose();
          }
          if (has_bias && g.wants(2)) {
            auto db = g.in_grad(2);
            const double* gy = go.data() + b * cout * lout;
            for (std::size_t co = 0; co < cout; ++co) {
              double s = 0.0;
              for (std::size_t j = 0; j < lout; ++j) s += gy[co * lout + j];
              db[co] += s;
            }
          }
        }
      });
}

Tensor dense(const Tensor& input, const Tensor& weight, const Tensor& bias) {
  TRUEWM_REQUIRE(input.rank() == 2 && weight.rank() == 2, "dense: expected input [B, n] and weight [m, n]");
  const std::size_t batch = input.dim(0), n = input.dim(1), m = weight.dim(0);
  TRUEWM_REQUIRE(weight.dim(1) == n, "dense: input width " + std::to_string(n) + " does not match weight " +
                                         shape_str(weight.shape()));
  TRUEWM_REQUIRE(bias.numel() == m, "dense: bias size must equal output width");
  std::vector<double> out(batch * m);
  MatMap y(out.data(), batch, m);
  y.noalias() = ConstMatMap(input.data().data(), batch, n) * ConstMatMap(weight.data().data(), m, n).transpose();
  for (std::size_t b = 0; b < batch; ++b)
    for (std::size_t j = 0; j < m; ++j) y(b, j) += bias[j];

  return record_op("dense", {batch, m}, std::move(out), {input, weight, bias}, [=](GradSink& g) {
    ConstMatMap gy(g.out_grad().data(), batch, m);
    if (g.wants(0)) {
      MatMap dx(g.in_grad(0).data(), batch, n);
      dx.noalias() += gy * ConstMatMap(weight.data().data(), m, n);
    }
    if (g.wants(1)) {
      MatMap dw(g.in_grad(1).data(), m, n);
      dw.noalias() += gy.transpose() * ConstMatMap(input.data().data(), batch, n);
    }
    if (g.wants(2)) {
      auto db = g.in_grad(2);
      for (std::size_t j = 0; j < m; ++j) db[j] += gy.col(j).sum();
    }
  });
}

Tensor batch_norm1d(const Tensor& input, const Tensor& gamma, const Tensor& beta, BatchNormState& state,
                    BnMode mode) {
  TRUEWM_REQUIRE(input.rank() == 3, "batch_norm1d: input must be [B, C, L]");
  const std::size_t batch = input.dim(0), ch = input.dim(1), len = input.dim(2);
  TRUEWM_REQUIRE(gamma.numel() == ch && beta.numel() == ch, "batch_norm1d: gamma/beta must have C entries");
  TRUEWM_REQUIRE(state.running_mean.size() == ch && state.running_var.size() == ch,
                 "batch_norm1d: running statistics have the wrong channel count");
  const std::size_t count = batch * len;
  auto x = input.data();
  std::vector<double> mean_c(ch), invstd(ch);

  if (mode == BnMode::kTrain) {
    TRUEWM_REQUIRE(count >= 2, "batch_norm1d: train mode needs B*L >= 2");
    for (std::size_t c = 0; c < ch; ++c) {
      double s = 0.0;
      for (std::size_t b = 0; b < batch; ++b)
        for (std::size_t i = 0; i < len; ++i) s += x[(b * ch + c) * len + i];
      const double mu = s / static_cast<double>(count);
      double v = 0.0;
      for (std::size_t b = 0; b < batch; ++b)
        for (std::size_t i = 0; i < len; ++i) {
          const double d = x[(b * ch + c) * len + i] - mu;
          v += d * d;
        }
      const double var = v / static_cast<double>(count);
      mean_c[c] = mu;
      invstd[c] = 1.0 / std::sqrt(var + kBatchNormEps);
      state.running_mean[c] = (1.0 - kBatchNormMomentum) * state.running_mean[c] + kBatchNormMomentum * mu;
      const double unbiased = v / static_cast<double>(count - 1);
      state.running_var[c] = (1.0 - kBatchNormMomentum) * state.running_var[c] + kBatchNormMomentum * unbiased;
    }
  } else {
    for (std::size_t c = 0; c < ch; ++c) {
      mean_c[c] = state.running_mean[c];
      invstd[c] = 1.0 / std::sqrt(state.running_var[c] + kBatchNormEps);
    }
  }

  std::vector<double> xhat(input.numel()), out(input.numel());
  for (std::size_t b = 0; b < batch; ++b)
    for (std::size_t c = 0; c < ch; ++c)
      for (std::size_t i = 0; i < len; ++i) {
        const std::size_t idx = (b * ch + c) * len + i;
        xhat[idx] = (x[idx] - mean_c[c]) * invstd[c];
        out[idx] = gamma[c] * xhat[idx] + beta[c];
      }

  const bool train = mode == BnMode::kTrain;
  return record_op(
      "batch_norm1d", input.shape(), std::move(out), {input, gamma, beta},
      [=, xhat = std::move(xhat)](GradSink& g) {
        auto go = g.out_grad();
        const double n = static_cast<double>(count);
        for (std::size_t c = 0; c < ch; ++c) {
          double sum_g = 0.0, sum_gx = 0.0;
          for (std::size_t b = 0; b < batch; ++b)
            for (std::size_t i = 0; i < len; ++i) {
              const std::size_t idx = (b * ch + c) * len + i;
              sum_g += go[idx];
              sum_gx += go[idx] * xhat[idx];
            }
          if (g.wants(1)) g.in_grad(1)[c] += sum_gx;
          if (g.wants(2)) g.in_grad(2)[c] += sum_g;
          if (g.wants(0)) {
            auto dx = g.in_grad(0);
            const double k = gamma[c] * invstd[c];
            for (std::size_t b = 0; b < batch; ++b)
              for (std::size_t i = 0; i < len; ++i) {
                const std::size_t idx = (b * ch + c) * len + i;
                dx[idx] += train ? k * (go[idx] - sum_g / n - xhat[idx] * sum_gx / n) : k * go[idx];
              }
          }
        }
      });
}

Tensor relu(const Tensor& x) {
  return unary(
      // NaN passes through so that divergence stays visible downstream.
      "relu", x, [](double v) { return v > 0 || std::isnan(v) ? v : 0.0; }, [](double v) { return v > 0 ? 1.0 : 0.0; });
}

Tensor sigmoid(const Tensor& x) {
  return unary("sigmoid", x, stable_sigmoid, [](double v) {
    const double s = stable_sigmoid(v);
    return s * (1.0 - s);
  });
}

Tensor log(const Tensor& x) {
  return unary(
      "log", x, [](double v) { return std::log(v); }, [](double v) { return 1.0 / v; });
}

Tensor log_floor(const Tensor& x, double floor) {
  return unary(
      "log_floor", x, [floor](double v) { return std::log(std::max(v, floor)); },
      [floor](double v) { return v > floor ? 1.0 / v : 0.0; });
}

Tensor clamp(const Tensor& x, double lo, double hi) {
  return unary(
      "clamp", x, [lo, hi](double v) { return std::clamp(v, lo, hi); },
      [lo, hi](double v) { return (v >= lo && v <= hi) ? 1.0 : 0.0; });
}

Tensor scale(const Tensor& x, double factor) {
  return unary(
      "scale", x, [factor](double v) { return v * factor; }, [factor](double) { return factor; });
}

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add");
  std::vector<double> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] + b[i];
  return record_op("add", a.shape(), std::move(out), {a, b}, [](GradSink& g) {
    auto go = g.out_grad();
    for (std::size_t k = 0; k < 2; ++k) {
      if (!g.wants(k)) continue;
      auto gi = g.in_grad(k);
      for (std::size_t i = 0; i < go.size(); ++i) gi[i] += go[i];
    }
  });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "sub");
  std::vector<double> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] - b[i];
  return record_op("sub", a.shape(), std::move(out), {a, b}, [](GradSink& g) {
    auto go = g.out_grad();
    if (g.wants(0)) {
      auto gi = g.in_grad(0);
      for (std::size_t i = 0; i < go.size(); ++i) gi[i] += go[i];
    }
    if (g.wants(1)) {
      auto gi = g.in_grad(1);
      for (std::size_t i = 0; i < go.size(); ++i) gi[i] -= go[i];
    }
  });
}

Tensor hadamard(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "hadamard");
  std::vector<double> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] * b[i];
  return record_op("hadamard", a.shape(), std::move(out), {a, b}, [a, b](GradSink& g) {
    auto go = g.out_grad();
    if (g.wants(0)) {
      auto gi = g.in_grad(0);
      for (std::size_t i = 0; i < go.size(); ++i) gi[i] += go[i] * b[i];
    }
    if (g.wants(1)) {
      auto gi = g.in_grad(1);
      for (std::size_t i = 0; i < go.size(); ++i) gi[i] += go[i] * a[i];
    }
  });
}

Tensor sum(const Tensor& x) {
  double s = 0.0;
  for (double v : x.data()) s += v;
  return record_op("sum", {1}, {s}, {x}, [](GradSink& g) {
    const double go = g.out_grad()[0];
    for (auto& v : g.in_grad(0)) v += go;
  });
}

Tensor mean(const Tensor& x) {
  double s = 0.0;
  for (double v : x.data()) s += v;
  const double n = static_cast<double>(x.numel());
  return record_op("mean", {1}, {s / n}, {x}, [n](GradSink& g) {
    const double go = g.out_grad()[0] / n;
    for (auto& v : g.in_grad(0)) v += go;
  });
}

Tensor concat_channels(std::span<const Tensor> parts) {
  TRUEWM_REQUIRE(!parts.empty(), "concat_channels: nothing to concatenate");
  const std::size_t batch = parts[0].dim(0), len = parts[0].dim(2);
  std::size_t total = 0;
  std::vector<std::size_t> offsets;
  for (const auto& p : parts) {
    TRUEWM_REQUIRE(p.rank() == 3 && p.dim(0) == batch && p.dim(2) == len,
                   "concat_channels: parts must share B and L, got " + shape_str(p.shape()));
    offsets.push_back(total);
    total += p.dim(1);
  }
  std::vector<double> out(batch * total * len);
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const std::size_t c = parts[k].dim(1);
    for (std::size_t b = 0; b < batch; ++b)
      std::copy_n(parts[k].data().data() + b * c * len, c * len, out.data() + (b * total + offsets[k]) * len);
  }
  std::vector<Tensor> inputs(parts.begin(), parts.end());
  std::vector<std::size_t> widths;
  for (const auto& p : parts) widths.push_back(p.dim(1));
  return record_op("concat_channels", {batch, total, len}, std::move(out), inputs,
                   [=](GradSink& g) {
                     auto go = g.out_grad();
                     for (std::size_t k = 0; k < widths.size(); ++k) {
                       if (!g.wants(k)) continue;
                       auto gi = g.in_grad(k);
                       const std::size_t c = widths[k];
                       for (std::size_t b = 0; b < batch; ++b)
                         for (std::size_t i = 0; i < c * len; ++i)
                           gi[b * c * len + i] += go[(b * total + offsets[k]) * len + i];
                     }
                   });
}

Tensor concat_channels(const Tensor& a, const Tensor& b) {
  const Tensor parts[] = {a, b};
  return concat_channels(parts);
}

Tensor select_batch(const Tensor& x, std::size_t index) {
  TRUEWM_REQUIRE(index < x.dim(0), "select_batch: index out of range");
  const std::size_t stride = x.numel() / x.dim(0);
  Shape shape = x.shape();
  shape[0] = 1;
  std::vector<double> out(x.data().begin() + index * stride, x.data().begin() + (index + 1) * stride);
  return record_op("select_batch", std::move(shape), std::move(out), {x}, [=](GradSink& g) {
    auto go = g.out_grad();
    auto gi = g.in_grad(0);
    for (std::size_t i = 0; i < stride; ++i) gi[index * stride + i] += go[i];
  });
}

Tensor stack_batch(std::span<const Tensor> items) {
  TRUEWM_REQUIRE(!items.empty(), "stack_batch: no items");
  Shape item_shape = items[0].shape();
  std::size_t total = 0;
  for (const auto& t : items) {
    Shape s = t.shape();
    TRUEWM_REQUIRE(s.size() == item_shape.size() && std::equal(s.begin() + 1, s.end(), item_shape.begin() + 1),
                   "stack_batch: item shapes differ");
    total += s[0];
  }
  const std::size_t stride = items[0].numel() / item_shape[0];
  std::vector<double> out;
  out.reserve(total * stride);
  for (const auto& t : items) out.insert(out.end(), t.data().begin(), t.data().end());
  Shape shape = item_shape;
  shape[0] = total;
  std::vector<std::size_t> sizes;
  for (const auto& t : items) sizes.push_back(t.numel());
  return record_op("stack_batch", std::move(shape), std::move(out), std::vector<Tensor>(items.begin(), items.end()),
                   [sizes](GradSink& g) {
                     auto go = g.out_grad();
                     std::size_t off = 0;
                     for (std::size_t k = 0; k < sizes.size(); ++k) {
                       if (g.wants(k)) {
                         auto gi = g.in_grad(k);
                         for (std::size_t i = 0; i < sizes[k]; ++i) gi[i] += go[off + i];
                       }
                       off += sizes[k];
                     }
                   });
}

Tensor fit_length(const Tensor& x, std::size_t length) {
  const std::size_t len = x.shape().back();
  if (len == length) return x;
  const std::size_t rows = x.numel() / len;
  Shape shape = x.shape();
  shape.back() = length;
  const std::size_t keep = std::min(len, length);
  std::vector<double> out(rows * length, 0.0);
  for (std::size_t r = 0; r < rows; ++r) std::copy_n(x.data().data() + r * len, keep, out.data() + r * length);
  return record_op("fit_length", std::move(shape), std::move(out), {x}, [=](GradSink& g) {
    auto go = g.out_grad();
    auto gi = g.in_grad(0);
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t i = 0; i < keep; ++i) gi[r * len + i] += go[r * length + i];
  });
}

Tensor global_avg_pool(const Tensor& x) {
  TRUEWM_REQUIRE(x.rank() == 3, "global_avg_pool: input must be [B, C, L]");
  const std::size_t batch = x.dim(0), ch = x.dim(1), len = x.dim(2);
  std::vector<double> out(batch * ch);
  for (std::size_t r = 0; r < batch * ch; ++r) {
    double s = 0.0;
    for (std::size_t i = 0; i < len; ++i) s += x[r * len + i];
    out[r] = s / static_cast<double>(len);
  }
  return record_op("global_avg_pool", {batch, ch}, std::move(out), {x}, [=](GradSink& g) {
    auto go = g.out_grad();
    auto gi = g.in_grad(0);
    const double inv = 1.0 / static_cast<double>(len);
    for (std::size_t r = 0; r < batch * ch; ++r)
      for (std::size_t i = 0; i < len; ++i) gi[r * len + i] += go[r] * inv;
  });
}

Tensor l1_loss(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "l1_loss");
  const double n = static_cast<double>(a.numel());
  double s = 0.0;
  for (std::size_t i = 0; i < a.numel(); ++i) s += std::abs(a[i] - b[i]);
  return record_op("l1_loss", {1}, {s / n}, {a, b}, [a, b, n](GradSink& g) {
    const double go = g.out_grad()[0] / n;
    for (std::size_t k = 0; k < 2; ++k) {
      if (!g.wants(k)) continue;
      auto gi = g.in_grad(k);
      const double sign_k = k == 0 ? 1.0 : -1.0;
      for (std::size_t i = 0; i < gi.size(); ++i) {
        const double d = a[i] - b[i];
        const double sgn = d > 0 ? 1.0 : (d < 0 ? -1.0 : 0.0);
        gi[i] += sign_k * sgn * go;
      }
    }
  });
}

Tensor bce_loss(const Tensor& pred, const Tensor& target) {
  require_same_shape(pred, target, "bce_loss");
  const double n = static_cast<double>(pred.numel());
  double s = 0.0;
  for (std::size_t i = 0; i < pred.numel(); ++i) {
    const double p = std::clamp(pred[i], kBceClamp, 1.0 - kBceClamp);
    const double t = target[i];
    s -= t * std::log(p) + (1.0 - t) * std::log(1.0 - p);
  }
  return record_op("bce_loss", {1}, {s / n}, {pred, target}, [pred, target, n](GradSink& g) {
    const double go = g.out_grad()[0] / n;
    if (g.wants(0)) {
      auto gi = g.in_grad(0);
      for (std::size_t i = 0; i < gi.size(); ++i) {
        const double raw = pred[i];
        if (raw < kBceClamp || raw > 1.0 - kBceClamp) continue;
        const double t = target[i];
        gi[i] += go * (-t / raw + (1.0 - t) / (1.0 - raw));
      }
    }
    if (g.wants(1)) {
      auto gi = g.in_grad(1);
      for (std::size_t i = 0; i < gi.size(); ++i) {
        const double p = std::clamp(pred[i], kBceClamp, 1.0 - kBceClamp);
        gi[i] += go * (std::log(1.0 - p) - std::log(p));
      }
    }
  });
}

}  // namespace truewm::nn
