#include "truewm/attacks.hpp"

#include <fftw3.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <map>
#include <mutex>
#include <numbers>
#include <sstream>

#include "truewm/audio_io.hpp"
#include "truewm/error.hpp"
#include "truewm/ops.hpp"

namespace truewm::attacks {

namespace {

using nn::Tensor;

constexpr std::array<Kind, 9> kTrainingKinds = {
    Kind::kGaussianNoise, Kind::kLowPass,  Kind::kBandPass, Kind::kHighPass, Kind::kTimeStretch,
    Kind::kSuppression,   Kind::kResample, Kind::kEcho,     Kind::kDither,
};

const std::map<std::string_view, Kind>& kind_table() {
  static const std::map<std::string_view, Kind> table = {
      {"identity", Kind::kIdentity}, {"gn", Kind::kGaussianNoise}, {"pn", Kind::kPinkNoise},
      {"lp", Kind::kLowPass},        {"bp", Kind::kBandPass},      {"hp", Kind::kHighPass},
      {"tsi", Kind::kTimeStretch},   {"sps", Kind::kSuppression},  {"res", Kind::kResample},
      {"echo", Kind::kEcho},         {"dither", Kind::kDither},
  };
  return table;
}

double parse_number(std::string_view key, std::string_view text) {
  double scale = 1.0;
  if (!text.empty() && (text.back() == 'k' || text.back() == 'K')) {
    scale = 1000.0;
    text.remove_suffix(1);
  }
  double v = 0.0;
  if (text == "inf" || text == "+inf") return std::numeric_limits<double>::infinity();
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size())
    throw ParseError("attack parameter '" + std::string(key) + "': cannot parse '" + std::string(text) + "' as a number");
  return v * scale;
}

std::string fmt(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::ostringstream os;
  os << v;
  return os.str();
}

double signal_power(std::span<const double> x) {
  double p = 0.0;
  for (double v : x) p += v * v;
  return p / static_cast<double>(x.size());
}

std::vector<double> clamp_output(std::vector<double> y) {
  for (auto& v : y) v = std::clamp(v, -kOutputClamp, kOutputClamp);
  return y;
}

// Adjoint of audio::resample_to_length: maps a gradient on the resampled grid
// back onto the source grid.
std::vector<double> resample_adjoint(std::span<const double> grad, std::size_t source_length) {
  std::vector<double> out(source_length, 0.0);
  if (source_length == 0 || grad.empty()) return out;
  if (grad.size() == source_length) return {grad.begin(), grad.end()};
  const double step = static_cast<double>(source_length) / static_cast<double>(grad.size());
  const std::size_t last = source_length - 1;
  for (std::size_t i = 0; i < grad.size(); ++i) {
    const double pos = static_cast<double>(i) * step;
    const auto i0 = std::min(static_cast<std::size_t>(pos), last);
    const std::size_t i1 = std::min(i0 + 1, last);
    const double frac = pos - static_cast<double>(i0);
    out[i0] += grad[i] * (1.0 - frac);
    out[i1] += grad[i] * frac;
  }
  return out;
}

std::vector<double> reversed(std::span<const double> x) { return {x.rbegin(), x.rend()}; }

std::size_t stretched_length(std::size_t n, double factor) {
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(static_cast<double>(n) * factor)));
}

std::size_t echo_delay(const AttackSpec& spec, unsigned sample_rate) {
  return static_cast<std::size_t>(std::llround(spec.delay_ms * sample_rate / 1000.0));
}

std::vector<Biquad> sections_for(const AttackSpec& spec, unsigned sample_rate) {
  const double nyquist = sample_rate / 2.0;
  switch (spec.kind) {
    case Kind::kLowPass: return butterworth_sections(FilterKind::kLow, spec.cutoff_hz, 0, sample_rate);
    case Kind::kHighPass: return butterworth_sections(FilterKind::kHigh, spec.cutoff_hz, 0, sample_rate);
    case Kind::kBandPass:
      // An upper edge at or above Nyquist leaves only the high-pass half.
      if (spec.hi_hz >= nyquist) return butterworth_sections(FilterKind::kHigh, spec.lo_hz, 0, sample_rate);
      return butterworth_sections(FilterKind::kBand, spec.lo_hz, spec.hi_hz, sample_rate);
    default: return {};
  }
}

// Per-row linear operator with an explicit adjoint.
using RowMap = std::function<std::vector<double>(std::span<const double>)>;

Tensor rowwise_linear(std::string_view name, const Tensor& x, RowMap forward, RowMap adjoint) {
  const std::size_t len = x.shape().back();
  const std::size_t rows = x.numel() / len;
  std::vector<double> out(x.numel());
  for (std::size_t r = 0; r < rows; ++r) {
    auto y = forward(x.data().subspan(r * len, len));
    TRUEWM_REQUIRE(y.size() == len, "attack changed the signal length");
    std::copy(y.begin(), y.end(), out.begin() + static_cast<std::ptrdiff_t>(r * len));
  }
  return nn::record_op(name, x.shape(), std::move(out), {x}, [rows, len, adjoint](nn::GradSink& g) {
    auto go = g.out_grad();
    auto gi = g.in_grad(0);
    for (std::size_t r = 0; r < rows; ++r) {
      auto back = adjoint(go.subspan(r * len, len));
      for (std::size_t i = 0; i < len; ++i) gi[r * len + i] += back[i];
    }
  });
}

// y = x + c * sqrt(P_x) * z with unit-power z and c = 10^(-snr/20). The noise
// scale depends on x, and the gradient accounts for it.
Tensor noise_op(const Tensor& x, double snr_db, NoiseColor color, std::uint64_t seed) {
  const std::size_t len = x.shape().back();
  const std::size_t rows = x.numel() / len;
  const double c = std::isinf(snr_db) ? 0.0 : std::pow(10.0, -snr_db / 20.0);
  std::vector<double> out(x.numel());
  std::vector<std::vector<double>> noise(rows);
  std::vector<double> root_power(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    auto xr = x.data().subspan(r * len, len);
    const double p = signal_power(xr);
    TRUEWM_REQUIRE(p > 0.0, "additive noise at a target SNR is undefined for a silent signal");
    root_power[r] = std::sqrt(p);
    Rng rng = Rng::derive(seed, r);
    noise[r] = unit_noise(len, color, rng);
    for (std::size_t i = 0; i < len; ++i) out[r * len + i] = xr[i] + c * root_power[r] * noise[r][i];
  }
  return nn::record_op("additive_noise", x.shape(), std::move(out), {x},
                       [=, noise = std::move(noise)](nn::GradSink& g) {
                         auto go = g.out_grad();
                         auto gi = g.in_grad(0);
                         for (std::size_t r = 0; r < rows; ++r) {
                           double gz = 0.0;
                           for (std::size_t i = 0; i < len; ++i) gz += go[r * len + i] * noise[r][i];
                           const double k = c * gz / (static_cast<double>(len) * root_power[r]);
                           for (std::size_t i = 0; i < len; ++i) gi[r * len + i] += go[r * len + i] + k * x[r * len + i];
                         }
                       });
}

// Straight-through requantization: forward adds TPDF noise and rounds, the
// gradient is the identity.
Tensor dither_op(const Tensor& x, double lsb, std::uint64_t seed) {
  const std::size_t len = x.shape().back();
  const std::size_t rows = x.numel() / len;
  std::vector<double> out(x.numel());
  for (std::size_t r = 0; r < rows; ++r) {
    auto y = dither(x.data().subspan(r * len, len), lsb, Rng::derive(seed, r).next_u64());
    std::copy(y.begin(), y.end(), out.begin() + static_cast<std::ptrdiff_t>(r * len));
  }
  return nn::record_op("dither", x.shape(), std::move(out), {x}, [](nn::GradSink& g) {
    auto go = g.out_grad();
    auto gi = g.in_grad(0);
    for (std::size_t i = 0; i < go.size(); ++i) gi[i] += go[i];
  });
}

}  // namespace

// --- spec ----------------------------------------------------------------

AttackSpec AttackSpec::gaussian_noise(double snr_db) {
  AttackSpec s;
  s.kind = Kind::kGaussianNoise;
  s.snr_db = snr_db;
  return s;
}
AttackSpec AttackSpec::pink_noise(double level) {
  AttackSpec s;
  s.kind = Kind::kPinkNoise;
  s.level = level;
  return s;
}
AttackSpec AttackSpec::low_pass(double cutoff_hz) {
  AttackSpec s;
  s.kind = Kind::kLowPass;
  s.cutoff_hz = cutoff_hz;
  return s;
}
AttackSpec AttackSpec::band_pass(double lo_hz, double hi_hz) {
  AttackSpec s;
  s.kind = Kind::kBandPass;
  s.lo_hz = lo_hz;
  s.hi_hz = hi_hz;
  return s;
}
AttackSpec AttackSpec::high_pass(double cutoff_hz) {
  AttackSpec s;
  s.kind = Kind::kHighPass;
  s.cutoff_hz = cutoff_hz;
  return s;
}
AttackSpec AttackSpec::time_stretch(double factor) {
  AttackSpec s;
  s.kind = Kind::kTimeStretch;
  s.factor = factor;
  return s;
}
AttackSpec AttackSpec::suppression(double gain, Region region) {
  AttackSpec s;
  s.kind = Kind::kSuppression;
  s.gain = gain;
  s.region = region;
  return s;
}
AttackSpec AttackSpec::resample(double rate_hz) {
  AttackSpec s;
  s.kind = Kind::kResample;
  s.rate_hz = rate_hz;
  return s;
}
AttackSpec AttackSpec::echo(double delay_ms, double decay) {
  AttackSpec s;
  s.kind = Kind::kEcho;
  s.delay_ms = delay_ms;
  s.decay = decay;
  return s;
}
AttackSpec AttackSpec::dither(double lsb) {
  AttackSpec s;
  s.kind = Kind::kDither;
  s.lsb = lsb;
  return s;
}

std::string_view kind_name(Kind kind) {
  for (const auto& [name, k] : kind_table())
    if (k == kind) return name;
  return "?";
}

std::string valid_kinds_help() {
  return "identity, gn:snr=DB, pn:level=A, lp:cutoff=HZ, bp:lo=HZ,hi=HZ, hp:cutoff=HZ, tsi:factor=F, "
         "sps:gain=G,region=behind|front, res:rate=HZ, echo:delay=MS,decay=D, dither:lsb=N";
}

AttackSpec AttackSpec::parse(std::string_view text) {
  const auto colon = text.find(':');
  const auto name = text.substr(0, colon);
  const auto it = kind_table().find(name);
  if (it == kind_table().end())
    throw ParseError("unknown attack '" + std::string(name) + "'; valid kinds: " + valid_kinds_help());
  AttackSpec s;
  s.kind = it->second;
  if (colon == std::string_view::npos) return s;
  std::string_view rest = text.substr(colon + 1);
  while (!rest.empty()) {
    const auto comma = rest.find(',');
    const auto item = rest.substr(0, comma);
    rest = comma == std::string_view::npos ? std::string_view{} : rest.substr(comma + 1);
    const auto eq = item.find('=');
    if (eq == std::string_view::npos) throw ParseError("attack parameter '" + std::string(item) + "' is not key=value");
    const auto key = item.substr(0, eq);
    const auto value = item.substr(eq + 1);
    auto bad_key = [&] {
      return ParseError("attack '" + std::string(name) + "' has no parameter '" + std::string(key) + "'");
    };
    switch (s.kind) {
      case Kind::kGaussianNoise:
        if (key != "snr") throw bad_key();
        s.snr_db = parse_number(key, value);
        break;
      case Kind::kPinkNoise:
        if (key != "level") throw bad_key();
        s.level = parse_number(key, value);
        break;
      case Kind::kLowPass:
      case Kind::kHighPass:
        if (key != "cutoff") throw bad_key();
        s.cutoff_hz = parse_number(key, value);
        break;
      case Kind::kBandPass:
        if (key == "lo") s.lo_hz = parse_number(key, value);
        else if (key == "hi") s.hi_hz = parse_number(key, value);
        else throw bad_key();
        break;
      case Kind::kTimeStretch:
        if (key != "factor") throw bad_key();
        s.factor = parse_number(key, value);
        break;
      case Kind::kSuppression:
        if (key == "gain") s.gain = parse_number(key, value);
        else if (key == "region") {
          if (value == "behind") s.region = Region::kBehind;
          else if (value == "front") s.region = Region::kFront;
          else throw ParseError("suppression region must be 'behind' or 'front'");
        } else throw bad_key();
        break;
      case Kind::kResample:
        if (key != "rate") throw bad_key();
        s.rate_hz = parse_number(key, value);
        break;
      case Kind::kEcho:
        if (key == "delay") s.delay_ms = parse_number(key, value);
        else if (key == "decay") s.decay = parse_number(key, value);
        else throw bad_key();
        break;
      case Kind::kDither:
        if (key != "lsb") throw bad_key();
        s.lsb = parse_number(key, value);
        break;
      case Kind::kIdentity: throw bad_key();
    }
  }
  return s;
}

std::string AttackSpec::to_string() const {
  std::string out(kind_name(kind));
  switch (kind) {
    case Kind::kIdentity: break;
    case Kind::kGaussianNoise: out += ":snr=" + fmt(snr_db); break;
    case Kind::kPinkNoise: out += ":level=" + fmt(level); break;
    case Kind::kLowPass:
    case Kind::kHighPass: out += ":cutoff=" + fmt(cutoff_hz); break;
    case Kind::kBandPass: out += ":lo=" + fmt(lo_hz) + ",hi=" + fmt(hi_hz); break;
    case Kind::kTimeStretch: out += ":factor=" + fmt(factor); break;
    case Kind::kSuppression:
      out += ":gain=" + fmt(gain) + ",region=" + (region == Region::kBehind ? "behind" : "front");
      break;
    case Kind::kResample: out += ":rate=" + fmt(rate_hz); break;
    case Kind::kEcho: out += ":delay=" + fmt(delay_ms) + ",decay=" + fmt(decay); break;
    case Kind::kDither: out += ":lsb=" + fmt(lsb); break;
  }
  return out;
}

void AttackSpec::validate(unsigned sample_rate) const {
  const double nyquist = sample_rate / 2.0;
  switch (kind) {
    case Kind::kIdentity: break;
    case Kind::kGaussianNoise: TRUEWM_REQUIRE(!std::isnan(snr_db), "gn: snr must be a number"); break;
    case Kind::kPinkNoise: TRUEWM_REQUIRE(level >= 0 && std::isfinite(level), "pn: level must be >= 0"); break;
    case Kind::kLowPass:
    case Kind::kHighPass:
      TRUEWM_REQUIRE(cutoff_hz > 0 && cutoff_hz < nyquist, "filter cutoff must lie in (0, nyquist)");
      break;
    case Kind::kBandPass:
      TRUEWM_REQUIRE(lo_hz > 0 && lo_hz < nyquist, "bp: lower edge must lie in (0, nyquist)");
      TRUEWM_REQUIRE(lo_hz < hi_hz, "bp: lower edge must be below the upper edge");
      break;
    case Kind::kTimeStretch: TRUEWM_REQUIRE(factor > 0 && std::isfinite(factor), "tsi: factor must be > 0"); break;
    case Kind::kSuppression: TRUEWM_REQUIRE(gain >= 0 && gain <= 1, "sps: gain must lie in [0, 1]"); break;
    case Kind::kResample: TRUEWM_REQUIRE(rate_hz > 0 && std::isfinite(rate_hz), "res: rate must be > 0"); break;
    case Kind::kEcho:
      TRUEWM_REQUIRE(decay > 0 && decay < 1, "echo: decay must lie in (0, 1)");
      TRUEWM_REQUIRE(delay_ms >= 0, "echo: delay must be >= 0");
      break;
    case Kind::kDither: TRUEWM_REQUIRE(lsb >= 0, "dither: amplitude must be >= 0"); break;
  }
}

const std::array<Kind, 9>& training_kinds() { return kTrainingKinds; }

AttackSpec sample_training_attack(Rng& rng) {
  const Kind kind = kTrainingKinds[rng.below(kTrainingKinds.size())];
  switch (kind) {
    case Kind::kGaussianNoise: return AttackSpec::gaussian_noise(rng.uniform(10.0, 20.0));
    case Kind::kLowPass: return AttackSpec::low_pass(3000);
    case Kind::kBandPass: return AttackSpec::band_pass(800, 5000);
    case Kind::kHighPass: return AttackSpec::high_pass(1000);
    case Kind::kTimeStretch: return AttackSpec::time_stretch(rng.below(2) == 0 ? 0.5 : 2.0);
    case Kind::kSuppression: return AttackSpec::suppression(0.5, Region::kBehind);
    case Kind::kResample: return AttackSpec::resample(44100);
    case Kind::kEcho: return AttackSpec::echo(100, 0.3);
    case Kind::kDither: return AttackSpec::dither(1.0);
    default: return AttackSpec::identity();
  }
}

std::vector<AttackSpec> robustness_suite() {
  return {AttackSpec::gaussian_noise(10), AttackSpec::gaussian_noise(15), AttackSpec::gaussian_noise(20),
          AttackSpec::pink_noise(0.5),    AttackSpec::low_pass(3000),     AttackSpec::band_pass(500, 8000),
          AttackSpec::high_pass(1000),    AttackSpec::suppression(),      AttackSpec::resample(44100),
          AttackSpec::echo(),             AttackSpec::time_stretch(0.5),  AttackSpec::dither()};
}

std::vector<AttackSpec> ablation_suite() {
  return {AttackSpec::gaussian_noise(10), AttackSpec::gaussian_noise(20), AttackSpec::low_pass(3000),
          AttackSpec::band_pass(800, 5000), AttackSpec::time_stretch(2.0)};
}

// --- kernels -------------------------------------------------------------

std::vector<double> unit_noise(std::size_t n, NoiseColor color, Rng& rng) {
  TRUEWM_REQUIRE(n > 0, "noise length must be positive");
  std::vector<double> z(n);
  for (auto& v : z) v = rng.normal();
  if (color == NoiseColor::kPink && n > 1) {
    // FFTW planning is not thread-safe.
    static std::mutex plan_mutex;
    std::lock_guard lock(plan_mutex);
    std::vector<std::complex<double>> spec(n / 2 + 1);
    auto fwd = fftw_plan_dft_r2c_1d(static_cast<int>(n), z.data(), reinterpret_cast<fftw_complex*>(spec.data()),
                                    FFTW_ESTIMATE);
    fftw_execute(fwd);
    fftw_destroy_plan(fwd);
    spec[0] = 0.0;
    for (std::size_t k = 1; k < spec.size(); ++k) spec[k] /= std::sqrt(static_cast<double>(k));
    auto inv = fftw_plan_dft_c2r_1d(static_cast<int>(n), reinterpret_cast<fftw_complex*>(spec.data()), z.data(),
                                    FFTW_ESTIMATE);
    fftw_execute(inv);
    fftw_destroy_plan(inv);
  }
  double mean = 0.0;
  for (double v : z) mean += v;
  mean /= static_cast<double>(n);
  for (auto& v : z) v -= mean;
  const double p = signal_power(z);
  if (p > 0) {
    const double inv = 1.0 / std::sqrt(p);
    for (auto& v : z) v *= inv;
  }
  return z;
}

std::vector<double> additive_noise_at_snr(std::span<const double> x, double snr_db, NoiseColor color,
                                          std::uint64_t seed) {
  Tensor t({x.size()}, std::vector<double>(x.begin(), x.end()));
  nn::NoGradScope no_grad;
  auto y = noise_op(t, snr_db, color, seed);
  return {y.data().begin(), y.data().end()};
}

std::vector<Biquad> butterworth_sections(FilterKind kind, double f1, double f2, unsigned sample_rate, int order) {
  TRUEWM_REQUIRE(order >= 2 && order % 2 == 0, "Butterworth order must be even and >= 2");
  const double nyquist = sample_rate / 2.0;
  TRUEWM_REQUIRE(f1 > 0 && f1 < nyquist, "filter cutoff " + fmt(f1) + " Hz must lie in (0, nyquist)");
  if (kind == FilterKind::kBand) {
    TRUEWM_REQUIRE(f2 > f1 && f2 < nyquist, "band-pass upper edge must lie in (lo, nyquist)");
    auto hp = butterworth_sections(FilterKind::kHigh, f1, 0, sample_rate, order);
    auto lp = butterworth_sections(FilterKind::kLow, f2, 0, sample_rate, order);
    hp.insert(hp.end(), lp.begin(), lp.end());
    return hp;
  }
  std::vector<Biquad> out;
  const double w0 = 2.0 * std::numbers::pi * f1 / sample_rate;
  const double cw = std::cos(w0), sw = std::sin(w0);
  for (int k = 1; k <= order / 2; ++k) {
    const double theta = (2.0 * k - 1.0) * std::numbers::pi / (2.0 * order);
    const double q = 1.0 / (2.0 * std::cos(theta));
    const double alpha = sw / (2.0 * q);
    const double a0 = 1.0 + alpha;
    Biquad b{};
    if (kind == FilterKind::kLow) {
      b.b0 = (1.0 - cw) / 2.0 / a0;
      b.b1 = (1.0 - cw) / a0;
      b.b2 = b.b0;
    } else {
      b.b0 = (1.0 + cw) / 2.0 / a0;
      b.b1 = -(1.0 + cw) / a0;
      b.b2 = b.b0;
    }
    b.a1 = -2.0 * cw / a0;
    b.a2 = (1.0 - alpha) / a0;
    out.push_back(b);
  }
  return out;
}

std::vector<double> run_biquads(std::span<const double> x, std::span<const Biquad> sections) {
  std::vector<double> y(x.begin(), x.end());
  for (const auto& s : sections) {
    double z1 = 0.0, z2 = 0.0;
    for (auto& v : y) {
      const double in = v;
      const double out = s.b0 * in + z1;
      z1 = s.b1 * in - s.a1 * out + z2;
      z2 = s.b2 * in - s.a2 * out;
      v = out;
    }
  }
  return y;
}

std::vector<double> butterworth_filter(std::span<const double> x, FilterKind kind, double f1, double f2,
                                       unsigned sample_rate, int order) {
  const auto sections = butterworth_sections(kind, f1, f2, sample_rate, order);
  return run_biquads(x, sections);
}

std::vector<double> time_stretch_interpolate(std::span<const double> x, double factor) {
  TRUEWM_REQUIRE(factor > 0, "time stretch factor must be > 0");
  const auto mid = audio::resample_to_length(x, stretched_length(x.size(), factor));
  return audio::resample_to_length(mid, x.size());
}

std::vector<double> suppression(std::span<const double> x, double gain, Region region) {
  TRUEWM_REQUIRE(gain >= 0 && gain <= 1, "suppression gain must lie in [0, 1]");
  std::vector<double> y(x.begin(), x.end());
  const std::size_t half = x.size() / 2;
  const std::size_t begin = region == Region::kBehind ? half : 0;
  const std::size_t end = region == Region::kBehind ? x.size() : half;
  for (std::size_t i = begin; i < end; ++i) y[i] *= gain;
  return y;
}

std::vector<double> echo(std::span<const double> x, std::size_t delay_samples, double decay) {
  std::vector<double> y(x.begin(), x.end());
  for (std::size_t i = delay_samples; i < x.size(); ++i) y[i] += decay * x[i - delay_samples];
  return y;
}

std::vector<double> tpdf_noise(std::size_t n, double lsb, Rng& rng) {
  const double peak = lsb / 32768.0;
  std::vector<double> out(n);
  for (auto& v : out) v = (rng.uniform() + rng.uniform() - 1.0) * peak;
  return out;
}

std::vector<double> requantize16(std::span<const double> x) {
  std::vector<double> y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = audio::from_pcm16(audio::to_pcm16(x[i]));
  return y;
}

std::vector<double> dither(std::span<const double> x, double lsb, std::uint64_t seed) {
  Rng rng(seed);
  const auto n = tpdf_noise(x.size(), lsb, rng);
  std::vector<double> y(x.begin(), x.end());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += n[i];
  return requantize16(y);
}

// --- dispatch ------------------------------------------------------------

Tensor apply_attack(const Tensor& x, const AttackSpec& spec, std::uint64_t seed, unsigned sample_rate) {
  spec.validate(sample_rate);
  Tensor y;
  switch (spec.kind) {
    case Kind::kIdentity: y = x; break;
    case Kind::kGaussianNoise: y = noise_op(x, spec.snr_db, NoiseColor::kWhite, seed); break;
    case Kind::kPinkNoise:
      y = spec.level == 0 ? x : noise_op(x, -20.0 * std::log10(spec.level), NoiseColor::kPink, seed);
      break;
    case Kind::kLowPass:
    case Kind::kBandPass:
    case Kind::kHighPass: {
      const auto sections = sections_for(spec, sample_rate);
      y = rowwise_linear(
          "butterworth", x, [sections](std::span<const double> r) { return run_biquads(r, sections); },
          [sections](std::span<const double> g) {
            auto out = run_biquads(reversed(g), sections);
            std::reverse(out.begin(), out.end());
            return out;
          });
      break;
    }
    case Kind::kTimeStretch:
    case Kind::kResample: {
      const double factor = spec.kind == Kind::kTimeStretch ? spec.factor : spec.rate_hz / sample_rate;
      y = rowwise_linear(
          spec.kind == Kind::kTimeStretch ? "time_stretch" : "resample", x,
          [factor](std::span<const double> r) { return time_stretch_interpolate(r, factor); },
          [factor](std::span<const double> g) {
            const std::size_t mid = stretched_length(g.size(), factor);
            return resample_adjoint(resample_adjoint(g, mid), g.size());
          });
      break;
    }
    case Kind::kSuppression: {
      const double gain = spec.gain;
      const Region region = spec.region;
      auto f = [gain, region](std::span<const double> r) { return suppression(r, gain, region); };
      y = rowwise_linear("suppression", x, f, f);
      break;
    }
    case Kind::kEcho: {
      const std::size_t delay = echo_delay(spec, sample_rate);
      const double decay = spec.decay;
      y = rowwise_linear(
          "echo", x, [delay, decay](std::span<const double> r) { return echo(r, delay, decay); },
          [delay, decay](std::span<const double> g) {
            std::vector<double> out(g.begin(), g.end());
            for (std::size_t i = 0; i + delay < g.size(); ++i) out[i] += decay * g[i + delay];
            return out;
          });
      break;
    }
    case Kind::kDither: y = dither_op(x, spec.lsb, seed); break;
  }
  return nn::clamp(y, -kOutputClamp, kOutputClamp);
}

std::vector<double> apply_attack(std::span<const double> x, const AttackSpec& spec, std::uint64_t seed,
                                 unsigned sample_rate) {
  if (x.empty()) return {};
  nn::NoGradScope no_grad;
  auto y = apply_attack(Tensor({x.size()}, std::vector<double>(x.begin(), x.end())), spec, seed, sample_rate);
  return clamp_output({y.data().begin(), y.data().end()});
}

}  // namespace truewm::attacks
