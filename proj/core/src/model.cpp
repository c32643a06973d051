#include "truewm/model.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <nlohmann/json.hpp>
#include <sstream>

#include "truewm/audio_io.hpp"
#include "truewm/error.hpp"

namespace truewm {

static_assert(std::endian::native == std::endian::little, "bundle I/O assumes a little-endian host");

namespace {

using nlohmann::json;

constexpr char kMagic[8] = {'T', 'R', 'U', 'E', 'W', 'M', 'B', '1'};

std::uint64_t fnv1a(const void* data, std::size_t size, std::uint64_t h = 0xcbf29ce484222325ULL) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < size; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << v;
  return os.str();
}

template <typename T>
void put(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& in, const char* what) {
  T v{};
  if (!in.read(reinterpret_cast<char*>(&v), sizeof(T))) throw ParseError(std::string("bundle truncated in ") + what);
  return v;
}

void put_doubles(std::ostream& out, std::span<const double> values) {
  put<std::uint64_t>(out, values.size());
  out.write(reinterpret_cast<const char*>(values.data()), static_cast<std::streamsize>(values.size() * sizeof(double)));
}

std::vector<double> get_doubles(std::istream& in, std::size_t expected, const std::string& what) {
  const auto n = get<std::uint64_t>(in, what.c_str());
  if (n != expected)
    throw ParseError("bundle tensor '" + what + "' has " + std::to_string(n) + " values, expected " +
                     std::to_string(expected));
  std::vector<double> values(n);
  if (!in.read(reinterpret_cast<char*>(values.data()), static_cast<std::streamsize>(n * sizeof(double))))
    throw ParseError("bundle truncated in tensor '" + what + "'");
  return values;
}

json config_json(const ModelConfig& c) {
  return json{
      {"sample_rate", c.sample_rate},
      {"window", c.hiding.window},
      {"bits", c.hiding.bits},
      {"hidden", c.hiding.hidden},
      {"down_channels", c.hiding.down_channels},
      {"down_padding", c.hiding.down_padding},
      {"up_channels", c.hiding.up_channels},
      {"residual", c.hiding.residual},
      {"decoder_channels", c.decoder.channels},
      {"decoder_conv_gain", c.decoder.conv_gain},
      {"decoder_head_gain", c.decoder.head_gain},
  };
}

}  // namespace

// --- config --------------------------------------------------------------

ModelConfig ModelConfig::for_capacity(std::size_t bits, std::size_t window) {
  ModelConfig c;
  c.hiding.bits = bits;
  c.hiding.window = window;
  c.decoder.bits = bits;
  return c;
}

void ModelConfig::validate() const {
  hiding.validate();
  decoder.validate();
  if (hiding.bits != decoder.bits) throw ConfigError("hiding and decoder disagree on the watermark length");
  if (sample_rate == 0) throw ConfigError("sample rate must be positive");
}

std::string ModelConfig::to_json() const { return config_json(*this).dump(); }

ModelConfig ModelConfig::from_json(std::string_view text) {
  try {
    const auto j = json::parse(text);
    ModelConfig c;
    c.sample_rate = j.at("sample_rate").get<unsigned>();
    c.hiding.window = j.at("window").get<std::size_t>();
    c.hiding.bits = j.at("bits").get<std::size_t>();
    c.hiding.hidden = j.at("hidden").get<std::size_t>();
    c.hiding.down_channels = j.at("down_channels").get<std::vector<std::size_t>>();
    c.hiding.down_padding = j.at("down_padding").get<std::vector<std::size_t>>();
    c.hiding.up_channels = j.at("up_channels").get<std::vector<std::size_t>>();
    c.hiding.residual = j.at("residual").get<bool>();
    c.decoder.bits = c.hiding.bits;
    c.decoder.channels = j.at("decoder_channels").get<std::vector<std::size_t>>();
    c.decoder.conv_gain = j.at("decoder_conv_gain").get<double>();
    c.decoder.head_gain = j.at("decoder_head_gain").get<double>();
    return c;
  } catch (const json::exception& e) {
    throw ParseError(std::string("model config: ") + e.what());
  }
}

std::uint64_t ModelConfig::hash() const {
  const auto text = to_json();
  return fnv1a(text.data(), text.size());
}

// --- model ---------------------------------------------------------------

Model::Model(const ModelConfig& config, std::uint64_t seed) : config_(config) {
  config_.validate();
  Rng rng(seed);
  hiding_ = hiding::init_hiding(config_.hiding, rng);
  decoder_ = extracting::init_decoder(config_.decoder, rng);
  metadata_.seed = seed;
}

std::vector<nn::NamedTensor> Model::parameters() const {
  auto out = hiding::named_parameters(hiding_);
  for (auto& p : extracting::named_parameters(decoder_)) out.push_back(std::move(p));
  return out;
}

std::vector<nn::NamedTensor> Model::buffers() const {
  std::vector<nn::NamedTensor> out;
  for (std::size_t i = 0; i < decoder_.blocks.size(); ++i) {
    const auto& bn = decoder_.blocks[i].bn;
    const auto prefix = "decoder.tgc" + std::to_string(i) + ".bn.running_";
    out.push_back({prefix + "mean", nn::Tensor({bn.running_mean.size()}, bn.running_mean)});
    out.push_back({prefix + "var", nn::Tensor({bn.running_var.size()}, bn.running_var)});
  }
  return out;
}

std::vector<nn::NamedTensor> Model::state() const {
  auto out = parameters();
  for (auto& b : buffers()) out.push_back(std::move(b));
  return out;
}

std::vector<double> Model::embed_segment(std::span<const double> segment, const WatermarkBits& bits) const {
  TRUEWM_REQUIRE(segment.size() == config_.window(), "segment has " + std::to_string(segment.size()) +
                                                 " samples, model window is " + std::to_string(config_.window()));
  nn::NoGradScope no_grad;
  const nn::Tensor carrier({1, 1, segment.size()}, {segment.begin(), segment.end()});
  const auto y = hiding::embed(carrier, bits, hiding_, config_.hiding);
  return {y.data().begin(), y.data().end()};
}

std::vector<double> Model::extract_segment(std::span<const double> segment) const {
  TRUEWM_REQUIRE(segment.size() == config_.window(), "segment has " + std::to_string(segment.size()) +
                                                 " samples, model window is " + std::to_string(config_.window()));
  nn::NoGradScope no_grad;
  const nn::Tensor x({1, 1, segment.size()}, {segment.begin(), segment.end()});
  const auto soft = extracting::extract_bits(x, decoder_);
  return {soft.data().begin(), soft.data().end()};
}

std::vector<double> Model::embed_signal(std::span<const double> samples, const WatermarkBits& bits) const {
  TRUEWM_REQUIRE(!samples.empty(), "cannot embed into an empty signal");
  const auto plan = audio::SegmentPlan::for_length(samples.size(), config_.window());
  auto parts = audio::segment(samples, plan);
  for (auto& part : parts) part = embed_segment(part, bits);
  return audio::assemble(parts, plan);
}

std::vector<double> Model::extract_signal(std::span<const double> samples) const {
  TRUEWM_REQUIRE(!samples.empty(), "cannot extract from an empty signal");
  const auto plan = audio::SegmentPlan::for_length(samples.size(), config_.window());
  const auto parts = audio::segment(samples, plan);
  std::vector<double> mean(config_.bits(), 0.0);
  for (const auto& part : parts) {
    const auto soft = extract_segment(part);
    for (std::size_t i = 0; i < mean.size(); ++i) mean[i] += soft[i];
  }
  for (auto& v : mean) v /= static_cast<double>(parts.size());
  return mean;
}

std::string state_hash(const Model& model) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& [name, t] : model.state()) {
    h = fnv1a(name.data(), name.size(), h);
    for (auto d : t.shape()) h = fnv1a(&d, sizeof(d), h);
    h = fnv1a(t.data().data(), t.numel() * sizeof(double), h);
  }
  return hex64(h);
}

// --- bundle --------------------------------------------------------------
//
// Layout (little-endian):
//   magic[8] | u32 version | u64 header_len | header JSON
//   per tensor: u32 name_len | name | u32 rank | u64 dims[rank] | u64 n | f64[n]
//   if header.optimizer: u64 steps | per parameter: u64 n | f64 m[n] | u64 n | f64 v[n]

void save_bundle(const std::filesystem::path& path, const Model& model, const nn::AdamW* optimizer) {
  const auto state = model.state();
  const auto& meta = model.metadata();
  const json header{
      {"format", "truewm-bundle"},
      {"version", kBundleVersion},
      {"config", config_json(model.config())},
      {"config_hash", hex64(model.config().hash())},
      {"metadata",
       {{"seed", meta.seed}, {"steps", meta.steps}, {"epochs", meta.epochs}, {"attack_enabled", meta.attack_enabled}}},
      {"tensors", state.size()},
      {"optimizer", optimizer != nullptr},
  };
  const auto text = header.dump();

  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + tmp + "' for writing");
    out.write(kMagic, sizeof(kMagic));
    put<std::uint32_t>(out, kBundleVersion);
    put<std::uint64_t>(out, text.size());
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    for (const auto& [name, t] : state) {
      put<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
      out.write(name.data(), static_cast<std::streamsize>(name.size()));
      put<std::uint32_t>(out, static_cast<std::uint32_t>(t.rank()));
      for (auto d : t.shape()) put<std::uint64_t>(out, d);
      put_doubles(out, t.data());
    }
    if (optimizer) {
      TRUEWM_REQUIRE(optimizer->params().size() == model.parameters().size(),
                     "optimizer does not cover the model parameters");
      put<std::uint64_t>(out, optimizer->steps());
      for (std::size_t i = 0; i < optimizer->params().size(); ++i) {
        put_doubles(out, optimizer->first_moments()[i]);
        put_doubles(out, optimizer->second_moments()[i]);
      }
    }
    if (!out) throw IoError("write failed for '" + tmp + "'");
  }
  std::filesystem::rename(tmp, path);
}

Bundle load_bundle(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open model bundle '" + path.string() + "'");
  char magic[8];
  if (!in.read(magic, sizeof(magic)) || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw ParseError("'" + path.string() + "' is not a model bundle (bad magic)");
  const auto version = get<std::uint32_t>(in, "version");
  if (version != kBundleVersion)
    throw UnsupportedFormat("bundle version " + std::to_string(version) + " is not supported");
  const auto header_len = get<std::uint64_t>(in, "header length");
  if (header_len > (1u << 24)) throw ParseError("bundle header is implausibly large");
  std::string text(header_len, '\0');
  if (!in.read(text.data(), static_cast<std::streamsize>(header_len))) throw ParseError("bundle truncated in header");

  json header;
  try {
    header = json::parse(text);
  } catch (const json::exception& e) {
    throw ParseError(std::string("bundle header: ") + e.what());
  }
  const auto config = ModelConfig::from_json(header.at("config").dump());
  const auto stored_hash = header.value("config_hash", std::string{});
  if (stored_hash != hex64(config.hash()))
    throw ParseError("bundle config hash mismatch (stored " + stored_hash + ", computed " + hex64(config.hash()) + ")");

  Bundle bundle;
  bundle.model = Model(config, 0);
  auto& model = bundle.model;
  const auto& m = header.at("metadata");
  model.metadata() = {m.at("seed").get<std::uint64_t>(), m.at("steps").get<std::uint64_t>(),
                      m.at("epochs").get<std::uint64_t>(), m.at("attack_enabled").get<bool>()};

  const auto params = model.parameters();
  const auto buffers = model.buffers();
  const std::size_t total = params.size() + buffers.size();
  if (header.at("tensors").get<std::size_t>() != total)
    throw ParseError("bundle holds " + header.at("tensors").dump() + " tensors, model expects " +
                     std::to_string(total));
  std::vector<std::vector<double>> buffer_values;
  for (std::size_t i = 0; i < total; ++i) {
    const auto& expected = i < params.size() ? params[i] : buffers[i - params.size()];
    const auto name_len = get<std::uint32_t>(in, "tensor name");
    std::string name(name_len, '\0');
    if (!in.read(name.data(), name_len)) throw ParseError("bundle truncated in tensor name");
    if (name != expected.name) throw ParseError("bundle tensor '" + name + "' found where '" + expected.name + "' was expected");
    const auto rank = get<std::uint32_t>(in, name.c_str());
    nn::Shape shape(rank);
    for (auto& d : shape) d = get<std::uint64_t>(in, name.c_str());
    if (shape != expected.tensor.shape())
      throw ParseError("bundle tensor '" + name + "' has shape " + nn::shape_str(shape) + ", expected " +
                       nn::shape_str(expected.tensor.shape()));
    auto values = get_doubles(in, expected.tensor.numel(), name);
    if (i < params.size()) {
      auto dst = nn::Tensor(expected.tensor).mutable_data();
      std::copy(values.begin(), values.end(), dst.begin());
    } else {
      buffer_values.push_back(std::move(values));
    }
  }
  auto& blocks = model.decoder().blocks;
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    blocks[i].bn.running_mean = std::move(buffer_values[2 * i]);
    blocks[i].bn.running_var = std::move(buffer_values[2 * i + 1]);
  }

  if (header.value("optimizer", false)) {
    OptimizerState opt;
    opt.steps = get<std::uint64_t>(in, "optimizer steps");
    for (const auto& p : params) {
      opt.m.push_back(get_doubles(in, p.tensor.numel(), p.name + " (first moment)"));
      opt.v.push_back(get_doubles(in, p.tensor.numel(), p.name + " (second moment)"));
    }
    bundle.optimizer = std::move(opt);
  }
  return bundle;
}

Model load_model(const std::filesystem::path& path) { return load_bundle(path).model; }

}  // namespace truewm
