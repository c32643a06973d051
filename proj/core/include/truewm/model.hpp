#pragma once

// A complete watermarking model (hiding module + decoder) and its on-disk
// bundle format.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "truewm/extracting.hpp"
#include "truewm/hiding.hpp"
#include "truewm/optim.hpp"

namespace truewm {

struct ModelConfig {
  unsigned sample_rate = 16000;
  hiding::HidingConfig hiding;
  extracting::DecoderConfig decoder;

  static ModelConfig for_capacity(std::size_t bits, std::size_t window = 16000);

  std::size_t bits() const { return hiding.bits; }
  std::size_t window() const { return hiding.window; }
  void validate() const;

  /// Canonical JSON text of the architecture.
  std::string to_json() const;
  static ModelConfig from_json(std::string_view text);
  /// FNV-1a over to_json(); stored in bundles and checked on load.
  std::uint64_t hash() const;
};

struct TrainingMetadata {
  std::uint64_t seed = 0;
  std::uint64_t steps = 0;
  std::uint64_t epochs = 0;
  bool attack_enabled = true;
};

class Model {
 public:
  Model() = default;
  Model(const ModelConfig& config, std::uint64_t seed);

  const ModelConfig& config() const { return config_; }
  hiding::HidingParams& hiding() { return hiding_; }
  const hiding::HidingParams& hiding() const { return hiding_; }
  extracting::DecoderParams& decoder() { return decoder_; }
  const extracting::DecoderParams& decoder() const { return decoder_; }
  TrainingMetadata& metadata() { return metadata_; }
  const TrainingMetadata& metadata() const { return metadata_; }

  /// Trainable tensors in a fixed order.
  std::vector<nn::NamedTensor> parameters() const;
  /// Batch-norm running statistics (not trained by the optimizer).
  std::vector<nn::NamedTensor> buffers() const;
  /// parameters() followed by buffers().
  std::vector<nn::NamedTensor> state() const;

  /// One window: `segment` must have exactly window() samples.
  std::vector<double> embed_segment(std::span<const double> segment, const WatermarkBits& bits) const;
  std::vector<double> extract_segment(std::span<const double> segment) const;

  /// Whole clip: same bits in every window, tail padding dropped.
  std::vector<double> embed_signal(std::span<const double> samples, const WatermarkBits& bits) const;
  /// Soft bits averaged over all windows of the clip.
  std::vector<double> extract_signal(std::span<const double> samples) const;

 private:
  ModelConfig config_;
  hiding::HidingParams hiding_;
  extracting::DecoderParams decoder_;
  TrainingMetadata metadata_;
};

/// Hex FNV-1a digest over names, shapes and raw values of every state tensor.
std::string state_hash(const Model& model);

struct OptimizerState {
  std::uint64_t steps = 0;
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;
};

struct Bundle {
  Model model;
  std::optional<OptimizerState> optimizer;
};

inline constexpr std::uint32_t kBundleVersion = 1;

void save_bundle(const std::filesystem::path& path, const Model& model, const nn::AdamW* optimizer = nullptr);
Bundle load_bundle(const std::filesystem::path& path);
Model load_model(const std::filesystem::path& path);

}  // namespace truewm
