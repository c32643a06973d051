#include "truewm/extracting.hpp"

#include <cmath>
#include <limits>

#include "truewm/error.hpp"

namespace truewm::extracting {

using nn::Tensor;

void DecoderConfig::validate() const {
  TRUEWM_REQUIRE(bits >= 1, "watermark length must be >= 1");
  TRUEWM_REQUIRE(channels.size() >= 2 && channels.front() == 1, "decoder input must have one channel");
  TRUEWM_REQUIRE(conv_gain > 0 && head_gain > 0, "decoder init gains must be positive");
}

DecoderParams init_decoder(const DecoderConfig& config, Rng& rng) {
  config.validate();
  DecoderParams p;
  const auto& ch = config.channels;
  for (std::size_t i = 0; i + 1 < ch.size(); ++i) {
    TgcBlock b;
    b.main = nn::Conv1dLayer::init(ch[i], ch[i + 1], 3, 2, 1, rng);
    b.bn_gamma = Tensor::full({ch[i + 1]}, 1.0).set_requires_grad(true);
    b.bn_beta = Tensor::zeros({ch[i + 1]}).set_requires_grad(true);
    b.bn = nn::BatchNormState(ch[i + 1]);
    b.shortcut = nn::Conv1dLayer::init(ch[i], ch[i + 1], 3, 2, 1, rng);
    p.blocks.push_back(std::move(b));
  }
  p.head = nn::DenseLayer::init(ch.back(), config.bits, rng);
  const auto scale = [](nn::Tensor& t, double g) {
    for (double& v : t.mutable_data()) v *= g;
  };
  for (auto& b : p.blocks) {
    scale(b.main.weight, config.conv_gain);
    scale(b.shortcut.weight, config.conv_gain);
  }
  scale(p.head.weight, config.head_gain);
  return p;
}

std::vector<nn::NamedTensor> named_parameters(const DecoderParams& params) {
  std::vector<nn::NamedTensor> out;
  for (std::size_t i = 0; i < params.blocks.size(); ++i) {
    const auto& b = params.blocks[i];
    const auto prefix = "decoder.tgc" + std::to_string(i);
    out.push_back({prefix + ".main.weight", b.main.weight});
    out.push_back({prefix + ".main.bias", b.main.bias});
    out.push_back({prefix + ".bn.gamma", b.bn_gamma});
    out.push_back({prefix + ".bn.beta", b.bn_beta});
    out.push_back({prefix + ".shortcut.weight", b.shortcut.weight});
    out.push_back({prefix + ".shortcut.bias", b.shortcut.bias});
  }
  out.push_back({"decoder.head.weight", params.head.weight});
  out.push_back({"decoder.head.bias", params.head.bias});
  return out;
}

Tensor tgc_forward(const Tensor& x, TgcBlock& block, nn::BnMode mode) {
  auto gate = nn::sigmoid(nn::batch_norm1d(block.main(x), block.bn_gamma, block.bn_beta, block.bn, mode));
  auto features = block.shortcut(x);
  TRUEWM_REQUIRE(gate.shape() == features.shape(), "TGC branches disagree on shape: " + nn::shape_str(gate.shape()) +
                                                       " vs " + nn::shape_str(features.shape()));
  return nn::hadamard(gate, features);
}

Tensor tgc_forward(const Tensor& x, const TgcBlock& block) {
  // Eval mode never writes the running statistics.
  return tgc_forward(x, const_cast<TgcBlock&>(block), nn::BnMode::kEval);
}

Tensor extract_bits(const Tensor& watermarked, DecoderParams& params, nn::BnMode mode) {
  TRUEWM_REQUIRE(watermarked.rank() == 3 && watermarked.dim(1) == 1, "extract_bits expects [B, 1, L]");
  Tensor x = watermarked;
  for (auto& block : params.blocks) x = tgc_forward(x, block, mode);
  return nn::sigmoid(params.head(nn::global_avg_pool(x)));
}

Tensor extract_bits(const Tensor& watermarked, const DecoderParams& params) {
  return extract_bits(watermarked, const_cast<DecoderParams&>(params), nn::BnMode::kEval);
}

WatermarkBits hard_bits(std::span<const double> soft) {
  std::vector<std::uint8_t> bits(soft.size());
  for (std::size_t i = 0; i < soft.size(); ++i) bits[i] = soft[i] >= 0.5 ? 1 : 0;
  return WatermarkBits(std::move(bits));
}

std::vector<WatermarkBits> hard_bits_batch(const Tensor& soft) {
  TRUEWM_REQUIRE(soft.rank() == 2, "hard_bits_batch expects [B, l]");
  std::vector<WatermarkBits> out;
  const std::size_t l = soft.dim(1);
  for (std::size_t b = 0; b < soft.dim(0); ++b) out.push_back(hard_bits(soft.data().subspan(b * l, l)));
  return out;
}

double binomial_p_value(std::size_t matches, std::size_t length, double xi) {
  TRUEWM_REQUIRE(length >= 1, "binomial_p_value: length must be >= 1");
  TRUEWM_REQUIRE(matches <= length, "binomial_p_value: matches exceed length");
  TRUEWM_REQUIRE(xi > 0.0 && xi < 1.0, "binomial_p_value: xi must lie in (0, 1)");
  if (matches == 0) return 1.0;
  const double n = static_cast<double>(length);
  const double log_xi = std::log(xi), log_rest = std::log1p(-xi);
  // All l + 1 terms, scaled by the largest. The tail is a suffix sum divided by
  // the full sum, which keeps the result monotone in `matches` and exactly 1
  // at zero even where individual terms round.
  std::vector<double> terms(length + 1);
  double peak = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i <= length; ++i) {
    const double k = static_cast<double>(i);
    terms[i] = -std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0) + k * log_xi + (n - k) * log_rest;
    peak = std::max(peak, terms[i]);
  }
  double tail = 0.0, total = 0.0;
  for (std::size_t i = length + 1; i-- > 0;) {
    total += std::exp(terms[i] - peak);
    if (i == matches) tail = total;
  }
  return tail / total;
}

std::size_t count_matches(const WatermarkBits& a, const WatermarkBits& b) {
  TRUEWM_REQUIRE(a.size() == b.size(), "watermark lengths differ: " + std::to_string(a.size()) + " vs " +
                                           std::to_string(b.size()));
  std::size_t m = 0;
  for (std::size_t i = 0; i < a.size(); ++i) m += a[i] == b[i];
  return m;
}

VerificationReport verify(const WatermarkBits& extracted, const WatermarkBits& claimed, double tau) {
  VerificationReport r;
  r.matches = count_matches(extracted, claimed);
  r.length = claimed.size();
  r.p_value = binomial_p_value(r.matches, r.length);
  r.tau = tau;
  r.decision = r.p_value < tau;
  return r;
}

}  // namespace truewm::extracting
