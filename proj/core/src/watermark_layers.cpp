#include <cmath>

#include "truewm/error.hpp"
#include "truewm/layers.hpp"
#include "truewm/watermark.hpp"

namespace truewm {

WatermarkBits::WatermarkBits(std::vector<std::uint8_t> bits) : bits_(std::move(bits)) {
  TRUEWM_REQUIRE(!bits_.empty(), "watermark must have at least one bit");
  for (auto b : bits_) TRUEWM_REQUIRE(b <= 1, "watermark bits must be 0 or 1");
}

WatermarkBits WatermarkBits::random(std::size_t length, Rng& rng) {
  std::vector<std::uint8_t> bits(length);
  for (auto& b : bits) b = static_cast<std::uint8_t>(rng.next_u64() >> 63);
  return WatermarkBits(std::move(bits));
}

WatermarkBits WatermarkBits::from_hex(std::string_view hex, std::size_t length) {
  if (hex.starts_with("0x") || hex.starts_with("0X")) hex.remove_prefix(2);
  if (hex.empty()) throw ParseError("empty hex watermark");
  std::vector<std::uint8_t> nibbles_bits;
  nibbles_bits.reserve(hex.size() * 4);
  for (char c : hex) {
    int v;
    if (c >= '0' && c <= '9') v = c - '0';
    else if (c >= 'a' && c <= 'f') v = c - 'a' + 10;
    else if (c >= 'A' && c <= 'F') v = c - 'A' + 10;
    else throw ParseError(std::string("invalid hex digit '") + c + "' in watermark");
    for (int k = 3; k >= 0; --k) nibbles_bits.push_back(static_cast<std::uint8_t>((v >> k) & 1));
  }
  std::vector<std::uint8_t> bits(length, 0);
  if (nibbles_bits.size() > length) {
    const std::size_t extra = nibbles_bits.size() - length;
    for (std::size_t i = 0; i < extra; ++i)
      if (nibbles_bits[i]) throw ParseError("hex watermark has more than " + std::to_string(length) + " significant bits");
    std::copy(nibbles_bits.begin() + static_cast<std::ptrdiff_t>(extra), nibbles_bits.end(), bits.begin());
  } else {
    std::copy(nibbles_bits.begin(), nibbles_bits.end(), bits.begin() + static_cast<std::ptrdiff_t>(length - nibbles_bits.size()));
  }
  return WatermarkBits(std::move(bits));
}

std::string WatermarkBits::to_hex() const {
  static constexpr char kDigits[] = "0123456789abcdef";
  const std::size_t digits = (bits_.size() + 3) / 4;
  const std::size_t lead = digits * 4 - bits_.size();
  std::string out;
  out.reserve(digits);
  for (std::size_t d = 0; d < digits; ++d) {
    int v = 0;
    for (std::size_t k = 0; k < 4; ++k) {
      const std::size_t pos = d * 4 + k;
      const int bit = pos < lead ? 0 : bits_[pos - lead];
      v = (v << 1) | bit;
    }
    out.push_back(kDigits[v]);
  }
  return out;
}

std::vector<double> WatermarkBits::as_reals() const { return {bits_.begin(), bits_.end()}; }

WatermarkBits WatermarkBits::complement() const {
  std::vector<std::uint8_t> c(bits_.size());
  for (std::size_t i = 0; i < c.size(); ++i) c[i] = static_cast<std::uint8_t>(1 - bits_[i]);
  return WatermarkBits(std::move(c));
}

std::string WatermarkBits::to_string() const {
  std::string s;
  for (auto b : bits_) s.push_back(b ? '1' : '0');
  return s;
}

}  // namespace truewm

namespace truewm::nn {

Tensor uniform_parameter(Shape shape, std::size_t fan_in, Rng& rng) {
  const double a = 1.0 / std::sqrt(static_cast<double>(fan_in));
  std::vector<double> data(shape_numel(shape));
  for (auto& v : data) v = rng.uniform(-a, a);
  Tensor t(std::move(shape), std::move(data));
  t.set_requires_grad(true);
  return t;
}

Conv1dLayer Conv1dLayer::init(std::size_t cin, std::size_t cout, std::size_t kernel, std::size_t stride,
                              std::size_t padding, Rng& rng) {
  Conv1dLayer l;
  l.weight = uniform_parameter({cout, cin, kernel}, cin * kernel, rng);
  l.bias = uniform_parameter({cout}, cin * kernel, rng);
  l.stride = stride;
  l.padding = padding;
  return l;
}

ConvTranspose1dLayer ConvTranspose1dLayer::init(std::size_t cin, std::size_t cout, std::size_t kernel,
                                                std::size_t stride, std::size_t padding, std::size_t output_padding,
                                                Rng& rng) {
  ConvTranspose1dLayer l;
  l.weight = uniform_parameter({cin, cout, kernel}, cin * kernel, rng);
  l.bias = uniform_parameter({cout}, cin * kernel, rng);
  l.stride = stride;
  l.padding = padding;
  l.output_padding = output_padding;
  return l;
}

DenseLayer DenseLayer::init(std::size_t in, std::size_t out, Rng& rng) {
  DenseLayer l;
  l.weight = uniform_parameter({out, in}, in, rng);
  l.bias = uniform_parameter({out}, in, rng);
  return l;
}

}  // namespace truewm::nn
