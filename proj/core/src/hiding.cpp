#include "truewm/hiding.hpp"

#include "truewm/error.hpp"

namespace truewm::hiding {

using nn::Tensor;

void HidingConfig::validate() const {
  TRUEWM_REQUIRE(bits >= 1, "watermark length must be >= 1");
  TRUEWM_REQUIRE(hidden >= 1, "dense block width must be >= 1");
  TRUEWM_REQUIRE(down_channels.size() >= 2 && down_channels.front() == 2,
                 "encoder input must have 2 channels (carrier + latent)");
  TRUEWM_REQUIRE(down_padding.size() + 1 == down_channels.size(), "one padding per down layer");
  TRUEWM_REQUIRE(up_channels.size() == down_padding.size(), "up path must mirror the down path");
  TRUEWM_REQUIRE(window >= 16, "window must be at least 16 samples");
}

HidingParams init_hiding(const HidingConfig& config, Rng& rng) {
  config.validate();
  HidingParams p;
  p.dense_block.fc1 = nn::DenseLayer::init(config.bits, config.hidden, rng);
  p.dense_block.fc2 = nn::DenseLayer::init(config.hidden, config.window, rng);
  const auto& dc = config.down_channels;
  for (std::size_t i = 0; i + 1 < dc.size(); ++i)
    p.encoder.down.push_back(nn::Conv1dLayer::init(dc[i], dc[i + 1], 3, 2, config.down_padding[i], rng));
  std::size_t in = dc.back();
  for (std::size_t i = 0; i < config.up_channels.size(); ++i) {
    const std::size_t out = config.up_channels[i];
    const std::size_t pad = i == 0 ? 1 : 2;
    p.encoder.up_transposed.push_back(nn::ConvTranspose1dLayer::init(in, out, 3, 2, pad, 1, rng));
    const bool last = i + 1 == config.up_channels.size();
    p.encoder.up_conv.push_back(nn::Conv1dLayer::init(out, last ? 1 : out, 3, 1, 1, rng));
    in = out;
  }
  return p;
}

std::vector<nn::NamedTensor> named_parameters(const HidingParams& params) {
  std::vector<nn::NamedTensor> out;
  const auto& db = params.dense_block;
  out.push_back({"hiding.fc1.weight", db.fc1.weight});
  out.push_back({"hiding.fc1.bias", db.fc1.bias});
  out.push_back({"hiding.fc2.weight", db.fc2.weight});
  out.push_back({"hiding.fc2.bias", db.fc2.bias});
  const auto& e = params.encoder;
  for (std::size_t i = 0; i < e.down.size(); ++i) {
    const auto prefix = "hiding.down" + std::to_string(i);
    out.push_back({prefix + ".weight", e.down[i].weight});
    out.push_back({prefix + ".bias", e.down[i].bias});
  }
  for (std::size_t i = 0; i < e.up_transposed.size(); ++i) {
    const auto t = "hiding.up" + std::to_string(i) + ".transposed";
    out.push_back({t + ".weight", e.up_transposed[i].weight});
    out.push_back({t + ".bias", e.up_transposed[i].bias});
    const auto c = "hiding.up" + std::to_string(i) + ".conv";
    out.push_back({c + ".weight", e.up_conv[i].weight});
    out.push_back({c + ".bias", e.up_conv[i].bias});
  }
  return out;
}

Tensor bits_tensor(const std::vector<WatermarkBits>& batch) {
  TRUEWM_REQUIRE(!batch.empty(), "bits_tensor: empty batch");
  const std::size_t l = batch.front().size();
  std::vector<double> data;
  data.reserve(batch.size() * l);
  for (const auto& w : batch) {
    TRUEWM_REQUIRE(w.size() == l, "bits_tensor: all watermarks in a batch must have the same length");
    for (auto b : w.bits()) data.push_back(b);
  }
  return Tensor({batch.size(), l}, std::move(data));
}

Tensor expand_watermark(const Tensor& bits, const DenseBlock& block, std::size_t window) {
  TRUEWM_REQUIRE(bits.rank() == 2, "expand_watermark expects bits as [B, l]");
  TRUEWM_REQUIRE(bits.dim(1) == block.fc1.weight.dim(1),
                 "watermark has " + std::to_string(bits.dim(1)) + " bits, model expects " +
                     std::to_string(block.fc1.weight.dim(1)));
  TRUEWM_REQUIRE(block.fc2.weight.dim(0) == window, "dense block output width must equal the window length");
  auto h = nn::relu(block.fc1(bits));
  auto latent = block.fc2(h);
  return latent.reshape({bits.dim(0), 1, window});
}

Tensor expand_watermark(const WatermarkBits& bits, const DenseBlock& block, std::size_t window) {
  return expand_watermark(bits_tensor({bits}), block, window);
}

std::vector<std::size_t> encoder_stage_lengths(std::size_t length, const HidingConfig& config) {
  std::vector<std::size_t> lengths{length};
  for (auto pad : config.down_padding) lengths.push_back(nn::conv1d_output_length(lengths.back(), 3, 2, pad));
  return lengths;
}

Tensor encoder_forward(const Tensor& sigma, const EncoderParams& params) {
  TRUEWM_REQUIRE(sigma.rank() == 3 && sigma.dim(1) == 2, "encoder expects [B, 2, L], got " + nn::shape_str(sigma.shape()));
  TRUEWM_REQUIRE(sigma.dim(2) >= 16, "encoder needs L >= 16 for four stride-2 stages");
  std::vector<std::size_t> lengths;
  Tensor x = sigma;
  for (const auto& layer : params.down) {
    lengths.push_back(x.dim(2));
    x = layer(x);
  }
  for (std::size_t i = 0; i < params.up_transposed.size(); ++i) {
    x = params.up_transposed[i](x);
    x = nn::fit_length(x, lengths[lengths.size() - 1 - i]);
    x = params.up_conv[i](x);
  }
  return x;
}

Tensor embed(const Tensor& carrier, const Tensor& bits, const HidingParams& params, const HidingConfig& config) {
  TRUEWM_REQUIRE(carrier.rank() == 3 && carrier.dim(1) == 1, "embed expects a carrier of shape [B, 1, L]");
  TRUEWM_REQUIRE(carrier.dim(2) == config.window,
                 "segment length " + std::to_string(carrier.dim(2)) + " does not match window " + std::to_string(config.window));
  TRUEWM_REQUIRE(bits.dim(0) == carrier.dim(0), "embed: batch size of bits and carrier differ");
  auto latent = expand_watermark(bits, params.dense_block, config.window);
  auto out = encoder_forward(nn::concat_channels(carrier, latent), params.encoder);
  return config.residual ? nn::add(carrier, out) : out;
}

Tensor embed(const Tensor& carrier, const WatermarkBits& bits, const HidingParams& params, const HidingConfig& config) {
  std::vector<WatermarkBits> batch(carrier.dim(0), bits);
  return embed(carrier, bits_tensor(batch), params, config);
}

}  // namespace truewm::hiding
