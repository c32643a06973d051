#include "truewm/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "truewm/attacks.hpp"
#include "truewm/error.hpp"
#include "truewm/metrics.hpp"
#include "truewm/ops.hpp"

namespace truewm::training {

namespace {

// Stream tags for Rng::derive so that different consumers never share draws.
constexpr std::uint64_t kTagBits = 1;
constexpr std::uint64_t kTagAttack = 2;
constexpr std::uint64_t kTagShuffle = 3;
constexpr std::uint64_t kTagSplit = 4;
constexpr std::uint64_t kTagValidation = 5;

void require_finite(const nn::Tensor& t, const char* name, std::uint64_t step) {
  for (double v : t.data())
    if (!std::isfinite(v))
      throw NumericalError("non-finite value in '" + std::string(name) + "' at step " + std::to_string(step));
}

void require_finite(double v, const char* name, std::uint64_t step) {
  if (!std::isfinite(v))
    throw NumericalError("non-finite value in '" + std::string(name) + "' at step " + std::to_string(step));
}

std::vector<nn::Tensor> parameter_tensors(const Model& model) {
  std::vector<nn::Tensor> out;
  for (auto& p : model.parameters()) out.push_back(p.tensor);
  return out;
}

nn::Tensor batch_tensor(const std::vector<std::vector<double>>& batch, std::size_t window) {
  std::vector<double> data;
  data.reserve(batch.size() * window);
  for (const auto& seg : batch) {
    TRUEWM_REQUIRE(seg.size() == window, "training segment has " + std::to_string(seg.size()) +
                                             " samples, expected " + std::to_string(window));
    data.insert(data.end(), seg.begin(), seg.end());
  }
  return nn::Tensor({batch.size(), 1, window}, std::move(data));
}

std::vector<std::size_t> shuffled(std::size_t n, Rng rng) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
  return order;
}

}  // namespace

// --- losses --------------------------------------------------------------

void LossWeights::validate() const {
  if (!(mel >= 0 && mag >= 0 && wm >= 0)) throw ConfigError("loss weights must be non-negative");
}

nn::Tensor mel_loss(const nn::Tensor& s, const nn::Tensor& s_hat, const SpectralConfig& config) {
  TRUEWM_REQUIRE(s.shape() == s_hat.shape(), "mel_loss: shape mismatch " + nn::shape_str(s.shape()) + " vs " +
                                                 nn::shape_str(s_hat.shape()));
  const auto& fb = dsp::shared_filterbank(config.stft, config.mel);
  return nn::l1_loss(dsp::mel_spectrogram(s, config.stft, fb), dsp::mel_spectrogram(s_hat, config.stft, fb));
}

nn::Tensor mag_loss(const nn::Tensor& s, const nn::Tensor& s_hat, const SpectralConfig& config) {
  TRUEWM_REQUIRE(s.shape() == s_hat.shape(), "mag_loss: shape mismatch " + nn::shape_str(s.shape()) + " vs " +
                                                 nn::shape_str(s_hat.shape()));
  return nn::l1_loss(dsp::log_compress(dsp::stft_magnitude(s, config.stft)),
                     dsp::log_compress(dsp::stft_magnitude(s_hat, config.stft)));
}

nn::Tensor watermark_loss(const nn::Tensor& soft_bits, const nn::Tensor& bits) {
  return nn::bce_loss(soft_bits, bits);
}

LossBreakdown total_loss(const nn::Tensor& s, const nn::Tensor& s_hat, const nn::Tensor& bits,
                         const nn::Tensor& soft_bits, const LossWeights& weights, const SpectralConfig& config) {
  weights.validate();
  const auto l_mel = mel_loss(s, s_hat, config);
  const auto l_mag = mag_loss(s, s_hat, config);
  const auto l_wm = watermark_loss(soft_bits, bits);
  LossBreakdown out;
  out.total = nn::add(nn::add(nn::scale(l_mel, weights.mel), nn::scale(l_mag, weights.mag)),
                      nn::scale(l_wm, weights.wm));
  out.mel = l_mel.item();
  out.mag = l_mag.item();
  out.wm = l_wm.item();
  out.value = out.total.item();
  return out;
}

// --- trainer -------------------------------------------------------------

void TrainConfig::validate() const {
  if (epochs == 0) throw ConfigError("epochs must be >= 1");
  if (batch_size == 0) throw ConfigError("batch size must be >= 1");
  if (!(lr >= 0) || !std::isfinite(lr)) throw ConfigError("learning rate must be a finite non-negative number");
  if (bits == 0) throw ConfigError("capacity must be >= 1 bit");
  if (window < 16) throw ConfigError("window must be at least 16 samples");
  if (!(val_fraction >= 0 && val_fraction < 1)) throw ConfigError("validation fraction must lie in [0, 1)");
  weights.validate();
  spectral.stft.validate();
}

Trainer::Trainer(Model& model, const TrainConfig& config)
    : model_(model), config_(config), optimizer_(parameter_tensors(model), nn::AdamWOptions{.lr = config.lr}) {
  config_.validate();
  TRUEWM_REQUIRE(model.config().bits() == config.bits && model.config().window() == config.window,
                 "model and training configuration disagree on capacity or window");
}

void Trainer::restore(const OptimizerState& state) { optimizer_.restore(state.steps, state.m, state.v); }

StepResult Trainer::step(const std::vector<std::vector<double>>& batch) {
  TRUEWM_REQUIRE(!batch.empty(), "empty training batch");
  const std::uint64_t step = optimizer_.steps();
  const auto& mc = model_.config();
  const auto carrier = batch_tensor(batch, mc.window());

  Rng bit_rng = Rng::derive(config_.seed, step, kTagBits);
  std::vector<WatermarkBits> messages;
  for (std::size_t b = 0; b < batch.size(); ++b) messages.push_back(WatermarkBits::random(mc.bits(), bit_rng));
  const auto bits = hiding::bits_tensor(messages);

  optimizer_.zero_grad();
  nn::Tape tape;
  nn::TapeScope scope(tape);

  const auto watermarked = hiding::embed(carrier, bits, model_.hiding(), mc.hiding);
  require_finite(watermarked, "watermarked", step);

  nn::Tensor received = watermarked;
  if (config_.attack_enabled) {
    std::vector<nn::Tensor> items;
    for (std::size_t b = 0; b < batch.size(); ++b) {
      Rng rng = Rng::derive(config_.seed, step, kTagAttack + 16 * (b + 1));
      const auto spec = attacks::sample_training_attack(rng);
      items.push_back(attacks::apply_attack(nn::select_batch(watermarked, b), spec, rng.next_u64(), mc.sample_rate));
    }
    received = nn::stack_batch(items);
    require_finite(received, "attacked", step);
  }

  const auto soft = extracting::extract_bits(received, model_.decoder(), nn::BnMode::kTrain);
  require_finite(soft, "soft_bits", step);

  LossWeights weights = config_.weights;
  if (step < config_.fidelity_hold + config_.fidelity_ramp) {
    const double into = static_cast<double>(step) - static_cast<double>(config_.fidelity_hold);
    const double ramp = config_.fidelity_ramp == 0 ? 0.0 : std::clamp(into / config_.fidelity_ramp, 0.0, 1.0);
    weights.mel *= ramp;
    weights.mag *= ramp;
  }
  const auto loss = total_loss(carrier, watermarked, bits, soft, weights, config_.spectral);
  require_finite(loss.mel, "l_mel", step);
  require_finite(loss.mag, "l_mag", step);
  require_finite(loss.wm, "l_wm", step);

  tape.backward(loss.total);
  optimizer_.step();
  model_.metadata().steps = optimizer_.steps();
  return {loss.mel, loss.mag, loss.wm, loss.value};
}

// --- loop ----------------------------------------------------------------

void write_log_header(std::ostream& out) { out << "epoch,step,l_mel,l_mag,l_wm,total,val_acc\n"; }

void write_log_row(std::ostream& out, const EpochLog& row) {
  const auto old = out.precision(8);
  out << row.epoch << ',' << row.step << ',' << row.mean.mel << ',' << row.mean.mag << ',' << row.mean.wm << ','
      << row.mean.total << ',' << row.val_acc << '\n';
  out.precision(old);
}

Split split_clips(std::size_t clips, double val_fraction, std::uint64_t seed) {
  TRUEWM_REQUIRE(clips > 0, "cannot split an empty corpus");
  std::size_t n_val = static_cast<std::size_t>(std::llround(val_fraction * static_cast<double>(clips)));
  if (val_fraction > 0 && clips >= 2) n_val = std::max<std::size_t>(n_val, 1);
  n_val = std::min(n_val, clips - 1);
  const auto order = shuffled(clips, Rng::derive(seed, kTagSplit));
  Split s;
  s.val.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_val));
  s.train.assign(order.begin() + static_cast<std::ptrdiff_t>(n_val), order.end());
  std::sort(s.val.begin(), s.val.end());
  std::sort(s.train.begin(), s.train.end());
  return s;
}

std::vector<std::vector<double>> make_segments(const std::vector<audio::Waveform>& clips,
                                               const std::vector<std::size_t>& indices, std::size_t window) {
  std::vector<std::vector<double>> out;
  for (auto i : indices) {
    TRUEWM_REQUIRE(i < clips.size(), "clip index out of range");
    const auto& clip = clips[i];
    if (clip.samples.empty()) continue;
    const auto wave =
        clip.sample_rate == audio::kCanonicalRate ? clip : audio::resample_linear(clip, audio::kCanonicalRate);
    const auto plan = audio::SegmentPlan::for_length(wave.samples.size(), window);
    for (auto& seg : audio::segment(wave.samples, plan)) out.push_back(std::move(seg));
  }
  return out;
}

double clean_accuracy(const Model& model, const std::vector<std::vector<double>>& segments, std::uint64_t seed) {
  if (segments.empty()) return 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i < segments.size(); ++i) {
    Rng rng = Rng::derive(seed, i, kTagValidation);
    const auto bits = WatermarkBits::random(model.config().bits(), rng);
    const auto marked = model.embed_segment(segments[i], bits);
    total += metrics::bit_accuracy(extracting::hard_bits(model.extract_segment(marked)), bits);
  }
  return total / static_cast<double>(segments.size());
}

TrainResult train_loop(const TrainConfig& config, const std::vector<audio::Waveform>& corpus, const Bundle* resume,
                       std::ostream* csv) {
  config.validate();
  if (corpus.empty()) throw ConfigError("training corpus is empty");

  TrainResult result;
  result.split = split_clips(corpus.size(), config.val_fraction, config.seed);
  const auto train = make_segments(corpus, result.split.train, config.window);
  const auto val = make_segments(corpus, result.split.val, config.window);
  if (train.empty()) throw ConfigError("training corpus has no audio");

  if (resume) {
    result.model = resume->model;
  } else {
    result.model = Model(ModelConfig::for_capacity(config.bits, config.window), config.seed);
  }
  Model& model = result.model;
  model.metadata().seed = config.seed;
  model.metadata().attack_enabled = config.attack_enabled;

  Trainer trainer(model, config);
  if (resume && resume->optimizer) trainer.restore(*resume->optimizer);

  const std::size_t per_epoch = (train.size() + config.batch_size - 1) / config.batch_size;
  const std::uint64_t total_steps =
      config.max_steps > 0 ? std::min<std::uint64_t>(config.max_steps, per_epoch * config.epochs)
                           : per_epoch * config.epochs;

  auto checkpoint = [&] {
    if (config.checkpoint_path.empty()) return;
    save_bundle(config.checkpoint_path, model, &trainer.optimizer());
  };

  if (csv) write_log_header(*csv);
  while (trainer.steps() < total_steps) {
    const std::size_t epoch = trainer.steps() / per_epoch;
    const auto order = shuffled(train.size(), Rng::derive(config.seed, epoch, kTagShuffle));
    StepResult sum;
    std::size_t count = 0;
    for (std::size_t k = trainer.steps() % per_epoch; k < per_epoch && trainer.steps() < total_steps; ++k) {
      std::vector<std::vector<double>> batch;
      for (std::size_t j = k * config.batch_size; j < std::min(train.size(), (k + 1) * config.batch_size); ++j)
        batch.push_back(train[order[j]]);
      const auto r = trainer.step(batch);
      sum.mel += r.mel;
      sum.mag += r.mag;
      sum.wm += r.wm;
      sum.total += r.total;
      ++count;
      if (config.checkpoint_every > 0 && trainer.steps() % config.checkpoint_every == 0) checkpoint();
    }
    EpochLog row;
    row.epoch = epoch + 1;
    row.step = trainer.steps();
    const double n = static_cast<double>(std::max<std::size_t>(count, 1));
    row.mean = {sum.mel / n, sum.mag / n, sum.wm / n, sum.total / n};
    row.val_acc = clean_accuracy(model, val, config.seed);
    model.metadata().epochs = row.epoch;
    result.log.push_back(row);
    if (csv) write_log_row(*csv, row);
    if (config.progress) {
      *config.progress << "epoch " << row.epoch << " step " << row.step << " l_wm " << row.mean.wm << " total "
                       << row.mean.total << " val_acc " << row.val_acc << '\n';
    }
  }
  checkpoint();
  result.optimizer = OptimizerState{trainer.optimizer().steps(),
                                    {trainer.optimizer().first_moments().begin(), trainer.optimizer().first_moments().end()},
                                    {trainer.optimizer().second_moments().begin(), trainer.optimizer().second_moments().end()}};
  return result;
}

}  // namespace truewm::training
