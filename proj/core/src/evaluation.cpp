#include "truewm/evaluation.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>

#include "truewm/error.hpp"

namespace truewm::evaluation {

std::size_t worker_threads(std::size_t requested) {
  std::size_t n = requested > 0 ? requested : std::max(1u, std::thread::hardware_concurrency());
  if (const char* cap = std::getenv("TRUE_WM_THREADS")) {
    const long v = std::strtol(cap, nullptr, 10);
    if (v > 0) n = std::min(n, static_cast<std::size_t>(v));
  }
  return std::max<std::size_t>(n, 1);
}

namespace {

std::vector<metrics::EvalRow> evaluate_clip(const Model& model, const NamedClip& clip, std::size_t clip_index,
                                            const std::vector<attacks::AttackSpec>& attack_list,
                                            const EvalOptions& options) {
  const auto& cfg = model.config();
  const auto wave = clip.wave.sample_rate == cfg.sample_rate ? clip.wave
                                                              : audio::resample_linear(clip.wave, cfg.sample_rate);
  std::vector<metrics::EvalRow> rows;
  for (std::size_t a = 0; a < attack_list.size(); ++a) {
    metrics::EvalRow row;
    row.clip = clip.name;
    row.attack = attack_list[a].to_string();
    row.capacity = cfg.bits();
    row.model_id = options.model_id;
    for (std::size_t t = 0; t < options.trials; ++t) {
      Rng rng = Rng::derive(options.seed, clip_index, t);
      const auto bits = WatermarkBits::random(cfg.bits(), rng);
      const auto marked = model.embed_signal(wave.samples, bits);
      const auto received = attacks::apply_attack(marked, attack_list[a], rng.next_u64(), cfg.sample_rate);
      const auto soft = model.extract_signal(received);
      row.acc += metrics::bit_accuracy(extracting::hard_bits(soft), bits);
      row.snr_db += metrics::snr_db(wave.samples, received);
      if (options.with_ssim && wave.samples.size() >= dsp::StftConfig{}.n_fft)
        row.ssim += metrics::spectrogram_ssim(wave.samples, received);
    }
    const double n = static_cast<double>(options.trials);
    row.acc /= n;
    row.snr_db /= n;
    row.ssim /= n;
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace

metrics::EvalReport evaluate(const Model& model, const std::vector<NamedClip>& clips,
                             const std::vector<attacks::AttackSpec>& attack_list, const EvalOptions& options) {
  if (attack_list.empty()) throw ConfigError("attack list is empty");
  if (clips.empty()) throw ConfigError("no clips to evaluate");
  TRUEWM_REQUIRE(options.trials > 0, "at least one trial per clip");
  for (const auto& spec : attack_list) spec.validate(model.config().sample_rate);

  std::vector<std::vector<metrics::EvalRow>> per_clip(clips.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < clips.size(); i = next++) {
      try {
        per_clip[i] = evaluate_clip(model, clips[i], i, attack_list, options);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const std::size_t threads = std::min(worker_threads(options.threads), clips.size());
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);

  metrics::EvalReport report;
  for (auto& rows : per_clip)
    for (auto& row : rows) report.add(std::move(row));
  return report;
}

}  // namespace truewm::evaluation
