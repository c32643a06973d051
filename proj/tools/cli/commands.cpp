#include "commands.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <nlohmann/json.hpp>
#include <optional>

#include "truewm/attacks.hpp"
#include "truewm/audio_io.hpp"
#include "truewm/error.hpp"
#include "truewm/evaluation.hpp"
#include "truewm/extracting.hpp"
#include "truewm/metrics.hpp"
#include "truewm/model.hpp"
#include "truewm/toy_corpus.hpp"
#include "truewm/training.hpp"

namespace truewm::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// --- input helpers: every failure to read user input is a usage error ------

audio::Waveform read_input_wav(const fs::path& path, unsigned rate, std::ostream& err) {
  audio::Waveform wave;
  try {
    wave = audio::read_wav(path);
  } catch (const IoError& e) {
    throw ConfigError(e.what());
  }
  if (wave.sample_rate != rate) {
    err << "warning: " << path.string() << " is " << wave.sample_rate << " Hz; resampling to " << rate << " Hz\n";
    wave = audio::resample_linear(wave, rate);
  }
  return wave;
}

Model read_model(const fs::path& path) {
  try {
    return load_model(path);
  } catch (const IoError& e) {
    throw ConfigError(e.what());
  }
}

std::vector<evaluation::NamedClip> read_corpus(const fs::path& dir) {
  std::vector<fs::path> paths;
  try {
    paths = corpus::list_wavs(dir);
  } catch (const IoError& e) {
    throw ConfigError(std::string("corpus: ") + e.what());
  }
  if (paths.empty()) throw ConfigError("corpus '" + dir.string() + "' contains no .wav files");
  std::vector<evaluation::NamedClip> clips;
  for (const auto& p : paths) {
    try {
      clips.push_back({p.filename().string(), audio::read_wav(p)});
    } catch (const IoError& e) {
      throw ConfigError(std::string("corpus: ") + e.what());
    }
  }
  return clips;
}

std::vector<audio::Waveform> waves_of(const std::vector<evaluation::NamedClip>& clips) {
  std::vector<audio::Waveform> out;
  for (const auto& c : clips) out.push_back(c.wave);
  return out;
}

attacks::AttackSpec parse_attack(const std::string& text, unsigned sample_rate) {
  auto spec = attacks::AttackSpec::parse(text);
  try {
    spec.validate(sample_rate);
  } catch (const ContractViolation& e) {
    throw ConfigError(std::string("attack '") + text + "': " + e.what());
  }
  return spec;
}

std::vector<attacks::AttackSpec> read_attack_list(const fs::path& path, unsigned sample_rate) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open attack list '" + path.string() + "'");
  std::vector<attacks::AttackSpec> out;
  for (std::string line; std::getline(in, line);) {
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line.erase(std::remove_if(line.begin(), line.end(), [](unsigned char c) { return std::isspace(c); }), line.end());
    if (!line.empty()) out.push_back(parse_attack(line, sample_rate));
  }
  if (out.empty()) throw ConfigError("attack list '" + path.string() + "' is empty");
  return out;
}

WatermarkBits bits_for_model(const std::string& hex, const Model& model) {
  try {
    return WatermarkBits::from_hex(hex, model.config().bits());
  } catch (const ParseError& e) {
    throw ConfigError(std::string("--bits: ") + e.what() + " (model capacity is " +
                      std::to_string(model.config().bits()) + " bits)");
  }
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

std::string model_id(const Model& model) { return state_hash(model).substr(0, 12); }

// --- options -------------------------------------------------------------

struct TrainOptions {
  std::string corpus;
  std::size_t bps = 32;
  std::size_t epochs = 40;
  std::size_t batch = 16;
  double lr = 2e-4;
  std::uint64_t seed = 0;
  bool no_attack = false;
  std::string out;
  std::size_t max_steps = 0;
  std::size_t checkpoint_every = 0;
  std::string log;
  std::string resume;
  bool quiet = false;
};

void add_train_options(CLI::App* cmd, TrainOptions& o, bool with_out) {
  cmd->add_option("--corpus", o.corpus, "Directory of training WAV files")->required();
  cmd->add_option("--bps", o.bps, "Watermark bits per one-second window")->check(CLI::PositiveNumber);
  cmd->add_option("--epochs", o.epochs, "Training epochs")->check(CLI::PositiveNumber);
  cmd->add_option("--batch", o.batch, "Batch size")->check(CLI::PositiveNumber);
  cmd->add_option("--lr", o.lr, "AdamW learning rate")->check(CLI::NonNegativeNumber);
  cmd->add_option("--seed", o.seed, "Random seed");
  cmd->add_option("--max-steps", o.max_steps, "Stop after this many optimizer steps (0 = no cap)");
  cmd->add_flag("--quiet", o.quiet, "Suppress per-epoch progress");
  if (with_out) {
    cmd->add_flag("--no-attack", o.no_attack, "Train without the attack simulator");
    cmd->add_option("--out", o.out, "Output model bundle (.twm)")->required();
    cmd->add_option("--checkpoint-every", o.checkpoint_every, "Checkpoint interval in steps");
    cmd->add_option("--log", o.log, "Per-epoch metrics CSV");
    cmd->add_option("--resume", o.resume, "Continue from a checkpoint bundle");
  }
}

training::TrainConfig train_config(const TrainOptions& o, std::ostream& out) {
  training::TrainConfig c;
  c.epochs = o.epochs;
  c.batch_size = o.batch;
  c.lr = o.lr;
  c.seed = o.seed;
  c.bits = o.bps;
  c.attack_enabled = !o.no_attack;
  c.max_steps = o.max_steps;
  c.checkpoint_every = o.checkpoint_every;
  c.progress = o.quiet ? nullptr : &out;
  return c;
}

// --- commands ------------------------------------------------------------

int cmd_train(const TrainOptions& o, std::ostream& out) {
  auto config = train_config(o, out);
  config.checkpoint_path = o.out;
  const auto clips = read_corpus(o.corpus);
  std::optional<Bundle> resume;
  if (!o.resume.empty()) {
    try {
      resume = load_bundle(o.resume);
    } catch (const IoError& e) {
      throw ConfigError(e.what());
    }
    if (resume->model.config().bits() != o.bps) throw ConfigError("--resume bundle has a different capacity");
  }
  std::ofstream log;
  if (!o.log.empty()) {
    log.open(o.log, std::ios::trunc);
    if (!log) throw IoError("cannot write '" + o.log + "'");
  }
  const auto result = training::train_loop(config, waves_of(clips), resume ? &*resume : nullptr,
                                           o.log.empty() ? nullptr : &log);
  out << "saved " << o.out << " (" << result.model.metadata().steps << " steps, model " << model_id(result.model)
      << ")\n";
  return kExitOk;
}

struct EmbedOptions {
  std::string model, in, out, bits;
  bool random = false;
  std::uint64_t seed = 0;
};

int cmd_embed(const EmbedOptions& o, std::ostream& out, std::ostream& err) {
  const auto model = read_model(o.model);
  const auto& cfg = model.config();
  if (o.random == !o.bits.empty()) throw ConfigError("pass exactly one of --bits HEX or --random");
  WatermarkBits bits;
  if (o.random) {
    Rng rng(o.seed);
    bits = WatermarkBits::random(cfg.bits(), rng);
  } else {
    bits = bits_for_model(o.bits, model);
  }
  const auto wave = read_input_wav(o.in, cfg.sample_rate, err);
  if (wave.samples.empty()) throw ConfigError("'" + o.in + "' has no samples");
  const auto plan = audio::SegmentPlan::for_length(wave.samples.size(), cfg.window());
  const audio::Waveform marked{model.embed_signal(wave.samples, bits), cfg.sample_rate};
  audio::write_wav(marked, o.out);

  const json sidecar{
      {"bits", bits.to_hex()},
      {"bits_length", bits.size()},
      {"segments", plan.count},
      {"segment_length", plan.segment_length},
      {"tail_padding", plan.tail_padding},
      {"samples", wave.samples.size()},
      {"sample_rate", cfg.sample_rate},
      {"model", model_id(model)},
  };
  write_text(o.out + ".json", sidecar.dump(2) + "\n");
  out << "bits " << bits.to_hex() << "\nsegments " << plan.count << "\nsnr_db "
      << metrics::snr_db(wave.samples, marked.samples) << '\n';
  return kExitOk;
}

struct ExtractOptions {
  std::string model, in, out, bits;
  double tau = extracting::kDefaultTau;
};

std::vector<double> extract_soft(const ExtractOptions& o, const Model& model, std::ostream& err) {
  const auto wave = read_input_wav(o.in, model.config().sample_rate, err);
  if (wave.samples.empty()) throw ConfigError("'" + o.in + "' has no samples");
  return model.extract_signal(wave.samples);
}

int cmd_extract(const ExtractOptions& o, std::ostream& out, std::ostream& err) {
  const auto model = read_model(o.model);
  const auto soft = extract_soft(o, model, err);
  const auto bits = extracting::hard_bits(soft);
  out << bits.to_hex() << '\n';
  if (!o.out.empty()) write_text(o.out, json{{"bits", bits.to_hex()}, {"bits_length", bits.size()}, {"soft", soft}}.dump(2) + "\n");
  return kExitOk;
}

int cmd_verify(const ExtractOptions& o, std::ostream& out, std::ostream& err) {
  const auto model = read_model(o.model);
  const auto claimed = bits_for_model(o.bits, model);
  if (!(o.tau > 0 && o.tau < 1)) throw ConfigError("--tau must lie in (0, 1)");
  const auto extracted = extracting::hard_bits(extract_soft(o, model, err));
  const auto report = extracting::verify(extracted, claimed, o.tau);
  out << "matches " << report.matches << "\nlength " << report.length << "\np_value " << std::setprecision(6)
      << report.p_value << "\ntau " << report.tau << "\ndecision " << (report.decision ? "watermarked" : "not-watermarked")
      << '\n';
  return report.decision ? kExitOk : kExitNegative;
}

struct AttackOptions {
  std::string in, out, attack;
  std::uint64_t seed = 0;
};

int cmd_attack(const AttackOptions& o, std::ostream& out, std::ostream& err) {
  const auto spec = parse_attack(o.attack, audio::kCanonicalRate);
  const auto wave = read_input_wav(o.in, audio::kCanonicalRate, err);
  const audio::Waveform attacked{attacks::apply_attack(wave.samples, spec, o.seed, wave.sample_rate), wave.sample_rate};
  audio::write_wav(attacked, o.out);
  out << "attack " << spec.to_string() << '\n';
  double power = 0.0;
  for (double v : wave.samples) power += v * v;
  if (power > 0) out << "realized_snr_db " << metrics::snr_db(wave.samples, attacks::requantize16(attacked.samples)) << '\n';
  return kExitOk;
}

struct EvalCliOptions {
  std::string model, corpus, attacks, out;
  std::uint64_t seed = 0;
  std::size_t trials = 1;
  std::size_t threads = 0;
};

int cmd_eval(const EvalCliOptions& o, std::ostream& out) {
  const auto model = read_model(o.model);
  const auto attack_list = read_attack_list(o.attacks, model.config().sample_rate);
  const auto clips = read_corpus(o.corpus);
  evaluation::EvalOptions eo;
  eo.seed = o.seed;
  eo.trials = o.trials;
  eo.threads = o.threads;
  eo.model_id = model_id(model);
  const auto report = evaluation::evaluate(model, clips, attack_list, eo);
  std::ofstream csv(o.out, std::ios::trunc);
  if (!csv) throw IoError("cannot write '" + o.out + "'");
  report.write_csv(csv);
  report.write_table(out);
  return kExitOk;
}

struct AblateOptions {
  TrainOptions train;
  std::string out_dir;
  std::size_t trials = 1;
};

int cmd_ablate(const AblateOptions& o, std::ostream& out) {
  const auto clips = read_corpus(o.train.corpus);
  fs::create_directories(o.out_dir);
  const auto attack_list = attacks::ablation_suite();
  std::vector<metrics::EvalReport> reports;
  for (const bool with_as : {true, false}) {
    auto opts = o.train;
    opts.no_attack = !with_as;
    auto config = train_config(opts, out);
    const std::string arm = with_as ? "with_as" : "without_as";
    config.checkpoint_path = fs::path(o.out_dir) / (arm + ".twm");
    out << "training " << arm << '\n';
    const auto result = training::train_loop(config, waves_of(clips));
    // Score on held-out clips when the split has any.
    std::vector<evaluation::NamedClip> held_out;
    for (auto i : result.split.val) held_out.push_back(clips[i]);
    if (held_out.empty()) held_out = clips;
    evaluation::EvalOptions eo;
    eo.seed = o.train.seed;
    eo.trials = o.trials;
    eo.model_id = model_id(result.model);
    reports.push_back(evaluation::evaluate(result.model, held_out, attack_list, eo));
    std::ofstream csv(fs::path(o.out_dir) / (arm + ".csv"), std::ios::trunc);
    if (!csv) throw IoError("cannot write report in '" + o.out_dir + "'");
    reports.back().write_csv(csv);
  }
  std::ofstream paired(fs::path(o.out_dir) / "paired.csv", std::ios::trunc);
  if (!paired) throw IoError("cannot write report in '" + o.out_dir + "'");
  paired << "attack,acc_with_as,acc_without_as,delta\n";
  out << std::left << std::setw(22) << "attack" << std::right << std::setw(10) << "w. AS" << std::setw(10) << "w/o. AS"
      << '\n';
  for (const auto& spec : attack_list) {
    const auto name = spec.to_string();
    const double with = reports[0].mean_acc(name), without = reports[1].mean_acc(name);
    paired << name << ',' << with << ',' << without << ',' << with - without << '\n';
    out << std::left << std::setw(22) << name << std::right << std::fixed << std::setprecision(4) << std::setw(10)
        << with << std::setw(10) << without << std::defaultfloat << '\n';
  }
  return kExitOk;
}

struct CorpusOptions {
  std::string out;
  corpus::ToyCorpusOptions toy;
};

int cmd_make_corpus(const CorpusOptions& o, std::ostream& out) {
  const auto paths = corpus::write_toy_corpus(o.out, o.toy);
  out << "wrote " << paths.size() << " clips to " << o.out << '\n';
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Neural audio watermarking: train, embed, extract, verify and evaluate"};
  app.name("truewm");
  app.require_subcommand(1);

  TrainOptions train_opts;
  auto* train = app.add_subcommand("train", "Train a model on a WAV corpus");
  add_train_options(train, train_opts, true);

  EmbedOptions embed_opts;
  auto* embed = app.add_subcommand("embed", "Embed a watermark into a WAV file");
  embed->add_option("--model", embed_opts.model, "Model bundle")->required();
  embed->add_option("--in", embed_opts.in, "Input WAV")->required();
  embed->add_option("--out", embed_opts.out, "Output WAV (a .json sidecar is written next to it)")->required();
  embed->add_option("--bits", embed_opts.bits, "Watermark as hex, most significant bit first");
  embed->add_flag("--random", embed_opts.random, "Draw random bits from --seed");
  embed->add_option("--seed", embed_opts.seed, "Seed for --random");

  ExtractOptions extract_opts;
  auto* extract = app.add_subcommand("extract", "Extract the watermark from a WAV file");
  extract->add_option("--model", extract_opts.model, "Model bundle")->required();
  extract->add_option("--in", extract_opts.in, "Input WAV")->required();
  extract->add_option("--out", extract_opts.out, "Write bits and soft scores as JSON");

  ExtractOptions verify_opts;
  auto* verify = app.add_subcommand("verify", "Test a WAV file for a claimed watermark");
  verify->add_option("--model", verify_opts.model, "Model bundle")->required();
  verify->add_option("--in", verify_opts.in, "Input WAV")->required();
  verify->add_option("--bits", verify_opts.bits, "Claimed watermark as hex")->required();
  verify->add_option("--tau", verify_opts.tau, "Significance threshold on the binomial p-value");

  AttackOptions attack_opts;
  auto* attack = app.add_subcommand("attack", "Apply one post-processing attack to a WAV file");
  attack->add_option("--in", attack_opts.in, "Input WAV")->required();
  attack->add_option("--out", attack_opts.out, "Output WAV")->required();
  attack->add_option("--attack", attack_opts.attack, "Attack spec, e.g. gn:snr=20 or bp:lo=500,hi=8000")->required();
  attack->add_option("--seed", attack_opts.seed, "Seed for stochastic attacks");

  EvalCliOptions eval_opts;
  auto* eval = app.add_subcommand("eval", "Robustness report over a corpus and an attack list");
  eval->add_option("--model", eval_opts.model, "Model bundle")->required();
  eval->add_option("--corpus", eval_opts.corpus, "Directory of WAV files")->required();
  eval->add_option("--attacks", eval_opts.attacks, "File with one attack spec per line")->required();
  eval->add_option("--out", eval_opts.out, "Report CSV")->required();
  eval->add_option("--seed", eval_opts.seed, "Seed for watermarks and attack noise");
  eval->add_option("--trials", eval_opts.trials, "Trials per clip")->check(CLI::PositiveNumber);
  eval->add_option("--threads", eval_opts.threads, "Worker threads (capped by TRUE_WM_THREADS)");

  AblateOptions ablate_opts;
  auto* ablate = app.add_subcommand("ablate-as", "Train with and without the attack simulator and compare");
  add_train_options(ablate, ablate_opts.train, false);
  ablate->add_option("--out", ablate_opts.out_dir, "Output directory")->required();
  ablate->add_option("--trials", ablate_opts.trials, "Evaluation trials per clip")->check(CLI::PositiveNumber);

  CorpusOptions corpus_opts;
  auto* make_corpus = app.add_subcommand("make-corpus", "Write the synthetic toy corpus");
  make_corpus->add_option("--out", corpus_opts.out, "Output directory")->required();
  make_corpus->add_option("--clips", corpus_opts.toy.clips, "Number of clips")->check(CLI::PositiveNumber);
  make_corpus->add_option("--seconds", corpus_opts.toy.seconds, "Clip duration")->check(CLI::PositiveNumber);
  make_corpus->add_option("--seed", corpus_opts.toy.seed, "Generator seed");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*train) return cmd_train(train_opts, out);
    if (*embed) return cmd_embed(embed_opts, out, err);
    if (*extract) return cmd_extract(extract_opts, out, err);
    if (*verify) return cmd_verify(verify_opts, out, err);
    if (*attack) return cmd_attack(attack_opts, out, err);
    if (*eval) return cmd_eval(eval_opts, out);
    if (*ablate) return cmd_ablate(ablate_opts, out);
    if (*make_corpus) return cmd_make_corpus(corpus_opts, out);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const UnsupportedFormat& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitUsage;
}

}  // namespace truewm::cli
