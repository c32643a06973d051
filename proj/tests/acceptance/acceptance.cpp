// End-to-end acceptance run. Prints one PASS/FAIL line per criterion.
//
// Criteria 1, 2, 3 and 7 are properties of the code and always decide the
// exit status. Criteria 4, 5, 6 and 8 depend on what a short toy training run
// learns; they are reported but only decide the exit status with --strict.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "commands.hpp"
#include "gradcheck.hpp"
#include "truewm/attacks.hpp"
#include "truewm/audio_io.hpp"
#include "truewm/evaluation.hpp"
#include "truewm/extracting.hpp"
#include "truewm/metrics.hpp"
#include "truewm/model.hpp"
#include "truewm/toy_corpus.hpp"
#include "truewm/training.hpp"

using namespace truewm;
using attacks::AttackSpec;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v, int digits = 4) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(digits) << v;
  return s.str();
}

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

int failures = 0;
int gating_failures = 0;

bool training_dependent(int id) { return id == 4 || id == 5 || id == 6 || id == 8; }

void report(int id, const std::string& title, const Verdict& v, double seconds) {
  if (!v.pass) {
    ++failures;
    if (!training_dependent(id)) ++gating_failures;
  }
  std::cout << "criterion " << id << ' ' << (v.pass ? "PASS" : "FAIL") << "  " << title << "  (" << fmt(seconds, 1)
            << " s)  " << v.detail << std::endl;
}

// Runs one criterion; an exception counts as a failure with its message.
void run_criterion(int id, const std::string& title, const std::function<Verdict()>& body) {
  const auto t0 = Clock::now();
  Verdict v;
  try {
    v = body();
  } catch (const std::exception& e) {
    v = {false, std::string("exception: ") + e.what()};
  }
  report(id, title, v, seconds_since(t0));
}

// --- shared toy training --------------------------------------------------

// Recipe for the toy-scale runs. Step counts, learning rate and the fidelity
// schedule were the best found on the bundled corpus; see the README.
constexpr std::size_t kToySteps = 2000;
constexpr std::size_t kToyBatch = 4;
constexpr double kToyLr = 1e-3;
constexpr std::size_t kToyHold = 500;
constexpr std::size_t kToyRamp = 1000;
constexpr std::uint64_t kToySeed = 1;

std::vector<audio::Waveform> load_corpus() {
  std::vector<audio::Waveform> clips;
  for (const auto& p : corpus::list_wavs(fs::path(TRUEWM_DATA_DIR) / "toy")) clips.push_back(audio::read_wav(p));
  if (clips.empty()) throw std::runtime_error("toy corpus not found under " TRUEWM_DATA_DIR "/toy");
  return clips;
}

struct ToyModel {
  Model model;
  training::Split split;
  double first_wm = 0.0;
  double last_wm = 0.0;
  double seconds = 0.0;
};

training::TrainConfig toy_config(std::size_t bits, bool attack_enabled) {
  training::TrainConfig c;
  c.bits = bits;
  c.attack_enabled = attack_enabled;
  c.batch_size = kToyBatch;
  c.lr = kToyLr;
  c.seed = kToySeed;
  c.max_steps = kToySteps;
  c.epochs = kToySteps;  // max_steps is the binding limit
  c.fidelity_hold = kToyHold;
  c.fidelity_ramp = kToyRamp;
  return c;
}

ToyModel train_toy(const std::vector<audio::Waveform>& corpus, std::size_t bits, bool attack_enabled) {
  const auto t0 = Clock::now();
  const auto cfg = toy_config(bits, attack_enabled);
  // Loss at the very first step, before any update.
  double first_wm = 0.0;
  {
    Model probe(ModelConfig::for_capacity(bits, cfg.window), cfg.seed);
    training::Trainer trainer(probe, cfg);
    const auto split = training::split_clips(corpus.size(), cfg.val_fraction, cfg.seed);
    auto segs = training::make_segments(corpus, split.train, cfg.window);
    segs.resize(std::min(segs.size(), cfg.batch_size));
    first_wm = trainer.step(segs).wm;
  }
  auto result = training::train_loop(cfg, corpus);
  ToyModel out{std::move(result.model), result.split, first_wm, 0.0, 0.0};
  if (!result.log.empty()) out.last_wm = result.log.back().mean.wm;
  out.seconds = seconds_since(t0);
  std::cout << "  trained l=" << bits << (attack_enabled ? " with" : " without") << " attack simulator in "
            << fmt(out.seconds, 0) << " s; L_WM " << fmt(out.first_wm) << " -> " << fmt(out.last_wm) << std::endl;
  return out;
}

std::vector<evaluation::NamedClip> held_out(const std::vector<audio::Waveform>& corpus, const training::Split& split) {
  std::vector<evaluation::NamedClip> out;
  for (auto i : split.val) out.push_back({"clip_" + std::to_string(i), corpus[i]});
  return out;
}

struct Summary {
  double acc = 0.0;
  double snr = 0.0;
  double ssim = 0.0;
};

Summary summary_for(const metrics::EvalReport& report, const AttackSpec& spec) {
  for (const auto& row : report.aggregate())
    if (row.attack == spec.to_string()) return {row.acc, row.snr_db, row.ssim};
  throw std::runtime_error("attack missing from report: " + spec.to_string());
}

// One-sided binomial test of `acc` over `bits` independent bit decisions
// against coin flipping; orderings between near-chance accuracies carry no
// information.
bool above_chance(double acc, std::size_t bits) {
  const auto matches = static_cast<std::size_t>(std::llround(acc * static_cast<double>(bits)));
  return extracting::binomial_p_value(std::min(matches, bits), bits) < 0.01;
}

metrics::EvalReport evaluate(const Model& model, const std::vector<evaluation::NamedClip>& clips,
                             const std::vector<AttackSpec>& suite, std::size_t trials, bool ssim) {
  evaluation::EvalOptions o;
  o.seed = 99;
  o.trials = trials;
  o.with_ssim = ssim;
  return evaluation::evaluate(model, clips, suite, o);
}

// --- criterion 1 ------------------------------------------------------------

Verdict gradient_suite() {
  double worst = 0.0;
  std::string worst_name;
  for (const auto& r : testing::primitive_gradient_suite())
    if (!(r.rel_error <= worst)) {
      worst = r.rel_error;
      worst_name = r.name;
    }
  double pipe = 0.0;
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const auto r = testing::pipeline_gradient_check(seed);
    pipe = std::max({pipe, r.encoder_error, r.decoder_error});
  }
  return {worst <= 1e-4 && pipe <= 1e-3,
          "worst primitive " + worst_name + " " + std::to_string(worst) + " (<= 1e-4); pipeline " +
              std::to_string(pipe) + " (<= 1e-3)"};
}

// --- criterion 2 ------------------------------------------------------------

Verdict binomial_verifier() {
  // Integer enumeration: tail = sum_{i >= k} C(l, i) / 2^l with exact counts.
  double worst = 0.0;
  for (std::size_t l = 1; l <= 20; ++l) {
    std::vector<std::uint64_t> c(l + 1, 0);
    c[0] = 1;
    for (std::size_t n = 1; n <= l; ++n)
      for (std::size_t i = n; i >= 1; --i) c[i] += c[i - 1];
    for (std::size_t k = 0; k <= l; ++k) {
      std::uint64_t count = 0;
      for (std::size_t i = k; i <= l; ++i) count += c[i];
      const double exact = static_cast<double>(count) / std::ldexp(1.0, static_cast<int>(l));
      worst = std::max(worst, std::abs(extracting::binomial_p_value(k, l) - exact));
    }
  }
  bool monotone = true;
  for (std::size_t l = 1; l <= 64; ++l)
    for (std::size_t k = 1; k <= l; ++k)
      monotone = monotone && extracting::binomial_p_value(k, l) <= extracting::binomial_p_value(k - 1, l);
  return {worst <= 1e-12 && monotone,
          "max |delta| vs enumeration " + std::to_string(worst) + "; monotone to l=64: " + (monotone ? "yes" : "no")};
}

// --- criterion 3 ------------------------------------------------------------

std::vector<double> tone(double hz, std::size_t n, double amp = 0.5) {
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = amp * std::sin(2 * std::numbers::pi * hz * static_cast<double>(i) / 16000.0);
  return x;
}

double steady_gain_db(const std::vector<double>& in, const std::vector<double>& out) {
  double pi = 0.0, po = 0.0;
  for (std::size_t i = in.size() / 4; i < in.size(); ++i) {
    pi += in[i] * in[i];
    po += out[i] * out[i];
  }
  return 10.0 * std::log10(po / pi);
}

Verdict attack_oracles(const std::vector<audio::Waveform>& corpus) {
  std::vector<std::string> problems;
  const auto& x = corpus.front().samples;

  double snr_dev = 0.0;
  for (double snr : {10.0, 15.0, 20.0})
    for (std::uint64_t seed = 0; seed < 50; ++seed)
      snr_dev = std::max(snr_dev, std::abs(metrics::snr_db(x, attacks::apply_attack(x, AttackSpec::gaussian_noise(snr), seed)) - snr));
  for (std::uint64_t seed = 0; seed < 50; ++seed)
    snr_dev = std::max(snr_dev, std::abs(metrics::snr_db(x, attacks::apply_attack(x, AttackSpec::pink_noise(0.5), seed)) -
                                         (-20.0 * std::log10(0.5))));
  if (snr_dev > 0.5) problems.push_back("noise SNR off by " + fmt(snr_dev));

  const auto lp = [](const std::vector<double>& v) { return attacks::apply_attack(v, AttackSpec::low_pass(3000), 0); };
  const double pass_1k = steady_gain_db(tone(1000, 16000), lp(tone(1000, 16000)));
  const double stop_6k = steady_gain_db(tone(6000, 16000), lp(tone(6000, 16000)));
  if (pass_1k < -1.0 || stop_6k > -20.0) problems.push_back("LP-3k gains " + fmt(pass_1k, 2) + " / " + fmt(stop_6k, 2) + " dB");

  std::vector<double> impulse(4000, 0.0);
  impulse[0] = 1.0;
  const auto echo = attacks::apply_attack(impulse, AttackSpec::echo(100, 0.3), 0);
  for (std::size_t i = 0; i < echo.size(); ++i)
    if (echo[i] != (i == 0 ? 1.0 : (i == 1600 ? 0.3 : 0.0))) {
      problems.push_back("echo impulse differs at " + std::to_string(i));
      break;
    }

  Rng rng(2024);
  auto z = attacks::tpdf_noise(200000, 1.0, rng);
  std::sort(z.begin(), z.end());
  const double peak = 1.0 / 32768.0, n = static_cast<double>(z.size());
  double d = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    const double u = std::clamp(z[i] / peak, -1.0, 1.0);
    const double f = u < 0 ? 0.5 * (1 + u) * (1 + u) : 1 - 0.5 * (1 - u) * (1 - u);
    d = std::max({d, std::abs(f - static_cast<double>(i) / n), std::abs(static_cast<double>(i + 1) / n - f)});
  }
  const double ks_critical = 1.628 / std::sqrt(n);
  if (d >= ks_critical) problems.push_back("dither KS D=" + fmt(d, 5));

  auto suite = attacks::robustness_suite();
  suite.push_back(AttackSpec::identity());
  suite.push_back(AttackSpec::time_stretch(2.0));
  suite.push_back(AttackSpec::band_pass(800, 5000));
  for (const auto& spec : suite)
    for (std::size_t len : {1u, 999u, 16000u, 32000u}) {
      std::vector<double> v(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(std::min(len, x.size())));
      v.resize(len, 0.0);
      if (attacks::apply_attack(v, spec, 3).size() != len) problems.push_back(spec.to_string() + " changes length");
    }

  std::string detail = "max SNR deviation " + fmt(snr_dev, 3) + " dB; LP 1k " + fmt(pass_1k, 2) + " dB, 6k " +
                       fmt(stop_6k, 2) + " dB; KS D " + fmt(d, 5) + " < " + fmt(ks_critical, 5);
  for (const auto& p : problems) detail += "; " + p;
  return {problems.empty(), detail};
}

// --- criterion 4 ------------------------------------------------------------

Verdict toy_training(const ToyModel& toy, const std::vector<evaluation::NamedClip>& held) {
  const auto report = evaluate(toy.model, held, {AttackSpec::identity()}, 8, true);
  const auto s = summary_for(report, AttackSpec::identity());
  const bool ok = s.acc >= 0.95 && s.snr >= 20.0 && s.ssim >= 0.90;
  return {ok, "held-out clean acc " + fmt(s.acc) + " (>= 0.95), SNR " + fmt(s.snr, 2) + " dB (>= 20), SSIM " +
                  fmt(s.ssim) + " (>= 0.90); L_WM " + fmt(toy.first_wm) + " -> " + fmt(toy.last_wm) + "; " +
                  std::to_string(held.size()) + " clips x 8 trials"};
}

// --- criterion 5 ------------------------------------------------------------

Verdict ablation(const ToyModel& with_as, const ToyModel& without_as, const std::vector<evaluation::NamedClip>& held,
                 double training_seconds) {
  const std::vector<AttackSpec> suite{AttackSpec::gaussian_noise(10), AttackSpec::gaussian_noise(20)};
  const auto a = evaluate(with_as.model, held, suite, 25, false);
  const auto b = evaluate(without_as.model, held, suite, 25, false);
  std::string detail;
  bool ok = training_seconds < 3600.0;
  for (const auto& spec : suite) {
    const double w = summary_for(a, spec).acc, wo = summary_for(b, spec).acc;
    ok = ok && w - wo >= 0.10;
    detail += spec.to_string() + ": with " + fmt(w) + " vs without " + fmt(wo) + " (gap " + fmt(w - wo) + ", >= 0.10); ";
  }
  return {ok, detail + "training " + fmt(training_seconds, 0) + " s (< 3600)"};
}

// --- criterion 6 ------------------------------------------------------------

Verdict robustness_order(const ToyModel& toy, const std::vector<evaluation::NamedClip>& held) {
  const std::size_t trials = (50 + held.size() - 1) / held.size();
  auto suite = attacks::robustness_suite();
  suite.insert(suite.begin(), AttackSpec::identity());
  const auto report = evaluate(toy.model, held, suite, trials, false);
  const double id = summary_for(report, AttackSpec::identity()).acc;
  const double g20 = summary_for(report, AttackSpec::gaussian_noise(20)).acc;
  const double g15 = summary_for(report, AttackSpec::gaussian_noise(15)).acc;
  const double g10 = summary_for(report, AttackSpec::gaussian_noise(10)).acc;
  const bool informative = above_chance(id, held.size() * trials * toy.model.config().bits());
  bool ok = informative && g20 >= g15 && g15 >= g10;
  std::string worst;
  for (const auto& spec : suite) {
    const double a = summary_for(report, spec).acc;
    if (a > id) {
      ok = false;
      worst += " " + spec.to_string() + "=" + fmt(a);
    }
  }
  return {ok, std::string(informative ? "" : "clean accuracy is not above chance (p >= 0.01), ordering not informative; ") +
                  "GN20 " + fmt(g20) + " >= GN15 " + fmt(g15) + " >= GN10 " + fmt(g10) + "; identity " + fmt(id) +
                  (worst.empty() ? " >= all attacks" : " exceeded by" + worst) + "; " +
                  std::to_string(held.size() * trials) + " (clip, seed) trials"};
}

// --- criterion 7 ------------------------------------------------------------

int cli(std::vector<std::string> args, std::string* out = nullptr) {
  std::ostringstream o, e;
  const int code = cli::run(args, o, e);
  if (out) *out = o.str();
  return code;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

Verdict determinism(const std::vector<audio::Waveform>& corpus, const ToyModel& toy) {
  std::vector<std::string> problems;

  // Fixed-seed training at full size: identical losses and parameters.
  {
    auto cfg = toy_config(32, true);
    const auto segs = training::make_segments(corpus, {0, 1}, cfg.window);
    std::vector<double> losses[2];
    std::string hashes[2];
    for (int run = 0; run < 2; ++run) {
      Model m(ModelConfig::for_capacity(32), 7);
      training::Trainer t(m, cfg);
      for (int i = 0; i < 3; ++i) losses[run].push_back(t.step(segs).total);
      hashes[run] = state_hash(m);
    }
    if (losses[0] != losses[1] || hashes[0] != hashes[1]) problems.push_back("training not bit-identical");
  }

  // Embed and extract are pure functions of their inputs.
  const auto& clip = corpus.front().samples;
  Rng rng(11);
  const auto bits = WatermarkBits::random(32, rng);
  const auto w1 = toy.model.embed_signal(clip, bits), w2 = toy.model.embed_signal(clip, bits);
  if (w1 != w2) problems.push_back("embed not bit-identical");
  if (toy.model.extract_signal(w1) != toy.model.extract_signal(w1)) problems.push_back("extract not bit-identical");

  // Bundle round trip.
  const fs::path dir = fs::temp_directory_path() / "truewm_acceptance";
  fs::remove_all(dir);
  fs::create_directories(dir / "corpus");
  fs::create_directories(dir / "empty");
  const auto model_path = dir / "model.twm";
  save_bundle(model_path, toy.model);
  const auto loaded = load_model(model_path);
  if (state_hash(loaded) != state_hash(toy.model) || loaded.config().hash() != toy.model.config().hash())
    problems.push_back("bundle round trip changed the model");
  if (loaded.extract_signal(w1) != toy.model.extract_signal(w1)) problems.push_back("loaded model extracts differently");

  // Scripted command line scenarios: {arguments, expected exit code}.
  audio::write_wav(corpus[0], dir / "corpus" / "a.wav");
  audio::write_wav(corpus[1], dir / "corpus" / "b.wav");
  std::ofstream(dir / "attacks.txt") << "identity\ngn:snr=20\nlp:cutoff=3000\n";
  std::ofstream(dir / "none.txt") << "# no attacks\n";
  std::ofstream(dir / "junk.wav") << "not a wav file";
  const auto p = [&](const char* name) { return (dir / name).string(); };
  const auto m = model_path.string(), a = p("corpus/a.wav");
  const auto hex = bits.to_hex();
  struct Scenario {
    std::vector<std::string> args;
    int expected;
  };
  std::size_t honored = 0, total = 0;
  const auto run = [&](const Scenario& s, std::string* out = nullptr) {
    ++total;
    const int code = cli(s.args, out);
    if (code == s.expected) {
      ++honored;
    } else {
      std::string line;
      for (const auto& arg : s.args) line += arg + ' ';
      problems.push_back("'" + line + "' exited " + std::to_string(code) + ", expected " + std::to_string(s.expected));
    }
  };
  const std::vector<Scenario> before_verify{
      {{}, cli::kExitUsage},
      {{"--help"}, cli::kExitOk},
      {{"launch"}, cli::kExitUsage},
      {{"embed", "--model", m, "--in", a, "--out", p("w.wav"), "--bits", hex}, cli::kExitOk},
      {{"embed", "--model", m, "--in", a, "--out", p("x.wav"), "--bits", "1" + hex}, cli::kExitUsage},
      {{"embed", "--model", p("none.twm"), "--in", a, "--out", p("x.wav"), "--bits", hex}, cli::kExitUsage},
      {{"embed", "--model", m, "--in", p("junk.wav"), "--out", p("x.wav"), "--bits", hex}, cli::kExitUsage},
      {{"embed", "--model", m, "--in", a, "--out", p("r1.wav"), "--random", "--seed", "7"}, cli::kExitOk},
      {{"embed", "--model", m, "--in", a, "--out", p("r2.wav"), "--random", "--seed", "7"}, cli::kExitOk},
  };
  for (const auto& s : before_verify) run(s);
  // The verify paths are checked against the bits the model reads back, so
  // the exit-code contract does not depend on how well the model decodes;
  // decoding quality is measured by criterion 4.
  std::string extracted;
  run({{"extract", "--model", m, "--in", p("w.wav")}, cli::kExitOk}, &extracted);
  const auto read_back = WatermarkBits::from_hex(extracted.substr(0, extracted.find('\n')), bits.size());
  const std::vector<Scenario> after_verify{
      {{"verify", "--model", m, "--in", p("w.wav"), "--bits", read_back.to_hex()}, cli::kExitOk},
      {{"verify", "--model", m, "--in", p("w.wav"), "--bits", read_back.complement().to_hex()}, cli::kExitNegative},
      {{"verify", "--model", m, "--in", p("w.wav"), "--bits", hex, "--tau", "0"}, cli::kExitUsage},
      {{"attack", "--in", a, "--out", p("id.wav"), "--attack", "identity"}, cli::kExitOk},
      {{"attack", "--in", a, "--out", p("gn.wav"), "--attack", "gn:snr=20", "--seed", "1"}, cli::kExitOk},
      {{"attack", "--in", a, "--out", p("x.wav"), "--attack", "mp3:bitrate=64"}, cli::kExitUsage},
      {{"eval", "--model", m, "--corpus", p("corpus"), "--attacks", p("attacks.txt"), "--out", p("r.csv")}, cli::kExitOk},
      {{"eval", "--model", m, "--corpus", p("corpus"), "--attacks", p("none.txt"), "--out", p("r.csv")},
       cli::kExitUsage},
      {{"train", "--corpus", p("empty"), "--out", p("t.twm")}, cli::kExitUsage},
      {{"train", "--corpus", p("corpus"), "--out", p("t.twm"), "--max-steps", "1", "--batch", "1", "--quiet"},
       cli::kExitOk},
  };
  for (const auto& s : after_verify) run(s);
  if (slurp(p("r1.wav")) != slurp(p("r2.wav")) || slurp(p("r1.wav.json")) != slurp(p("r2.wav.json")))
    problems.push_back("seeded random embeds differ");
  if (slurp(p("id.wav")) != slurp(a)) problems.push_back("identity attack changed the file");
  fs::remove_all(dir);

  std::string detail = "training, embed, extract and bundle round trip bit-identical; CLI " + std::to_string(honored) +
                       "/" + std::to_string(total) + " scenarios honored";
  if (!problems.empty()) {
    detail = "problems:";
    for (const auto& pr : problems) detail += " [" + pr + "]";
  }
  return {problems.empty(), detail};
}

// --- criterion 8 ------------------------------------------------------------

Verdict capacity(const ToyModel& l32, const ToyModel& l300, const ToyModel& l600,
                 const std::vector<evaluation::NamedClip>& held, double training_seconds) {
  const auto id = AttackSpec::identity();
  const auto s32 = summary_for(evaluate(l32.model, held, {id}, 8, true), id);
  const auto s300 = summary_for(evaluate(l300.model, held, {id}, 8, true), id);
  const auto s600 = summary_for(evaluate(l600.model, held, {id}, 8, false), id);
  const auto floor_ok = [](const Summary& s) { return s.snr >= 20.0 && s.ssim >= 0.90; };
  const bool informative = above_chance(s32.acc, held.size() * 8 * 32);
  const bool ok = floor_ok(s32) && floor_ok(s300) && informative && s600.acc < s32.acc && training_seconds < 7200.0;
  return {ok, std::string(informative ? "" : "l=32 clean accuracy is not above chance, ordering not informative; ") +
                  "l=32 SNR " + fmt(s32.snr, 2) + " SSIM " + fmt(s32.ssim) + "; l=300 SNR " + fmt(s300.snr, 2) + " SSIM " +
                  fmt(s300.ssim) + " (floor 20 dB / 0.90); clean acc l=32 " + fmt(s32.acc) + " > l=300 " +
                  fmt(s300.acc) + " ? l=600 " + fmt(s600.acc) + "; training " + fmt(training_seconds, 0) +
                  " s (< 7200)"};
}

}  // namespace

int main(int argc, char** argv) {
  const bool strict = argc > 1 && std::string(argv[1]) == "--strict";
  std::cout << std::unitbuf;
  run_criterion(1, "gradient suite", gradient_suite);
  run_criterion(2, "binomial verifier", binomial_verifier);

  std::vector<audio::Waveform> corpus;
  try {
    corpus = load_corpus();
  } catch (const std::exception& e) {
    std::cout << "cannot load toy corpus: " << e.what() << std::endl;
    for (int id = 3; id <= 8; ++id) report(id, "needs the toy corpus", {false, "corpus unavailable"}, 0.0);
    return 1;  // a missing corpus is a broken checkout, not a training outcome
  }
  run_criterion(3, "attack oracles", [&] { return attack_oracles(corpus); });

  std::optional<ToyModel> l32;
  std::vector<evaluation::NamedClip> held;
  try {
    l32 = train_toy(corpus, 32, true);
    held = held_out(corpus, l32->split);
  } catch (const std::exception& e) {
    std::cout << "toy training failed: " << e.what() << std::endl;
  }
  const auto needs_model = [&](int id, const std::string& title, const std::function<Verdict()>& body) {
    if (l32) {
      run_criterion(id, title, body);
    } else {
      report(id, title, {false, "toy model unavailable"}, 0.0);
    }
  };

  needs_model(4, "toy training fidelity and accuracy", [&] { return toy_training(*l32, held); });
  needs_model(6, "robustness ordering", [&] { return robustness_order(*l32, held); });
  needs_model(7, "determinism and serialization", [&] { return determinism(corpus, *l32); });
  needs_model(5, "attack simulator ablation", [&] {
    const auto without = train_toy(corpus, 32, false);
    return ablation(*l32, without, held, l32->seconds + without.seconds);
  });
  needs_model(8, "capacity degradation", [&] {
    const auto l300 = train_toy(corpus, 300, true);
    const auto l600 = train_toy(corpus, 600, true);
    return capacity(*l32, l300, l600, held, l32->seconds + l300.seconds + l600.seconds);
  });

  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criterion(s) failed") << std::endl;
  return (strict ? failures : gating_failures) == 0 ? 0 : 1;
}
