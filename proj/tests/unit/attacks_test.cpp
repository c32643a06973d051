#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>

#include "truewm/attacks.hpp"
#include "truewm/dsp.hpp"
#include "truewm/error.hpp"
#include "truewm/metrics.hpp"

using namespace truewm;
using attacks::AttackSpec;

namespace {

std::vector<double> tone(double hz, std::size_t n, double amp = 0.5, unsigned sr = 16000) {
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = amp * std::sin(2 * std::numbers::pi * hz * static_cast<double>(i) / sr);
  return x;
}

double power(std::span<const double> x, std::size_t from = 0) {
  double p = 0.0;
  for (std::size_t i = from; i < x.size(); ++i) p += x[i] * x[i];
  return p / static_cast<double>(x.size() - from);
}

// Steady-state gain in dB, skipping the filter's start-up transient.
double gain_db(const std::vector<double>& in, const std::vector<double>& out) {
  const std::size_t skip = in.size() / 4;
  return 10.0 * std::log10(power(out, skip) / power(in, skip));
}

std::vector<double> speechish(std::size_t n) {
  std::vector<double> x(n);
  Rng rng(5);
  for (std::size_t i = 0; i < n; ++i)
    x[i] = 0.3 * std::sin(0.07 * static_cast<double>(i)) + 0.1 * std::sin(0.9 * static_cast<double>(i)) + 0.02 * rng.normal();
  return x;
}

}  // namespace

TEST_CASE("attack spec text form") {
  CHECK(AttackSpec::parse("gn:snr=20").snr_db == 20.0);
  const auto bp = AttackSpec::parse("bp:lo=500,hi=8k");
  CHECK(bp.kind == attacks::Kind::kBandPass);
  CHECK(bp.lo_hz == 500.0);
  CHECK(bp.hi_hz == 8000.0);
  CHECK(AttackSpec::parse("tsi:factor=0.5").factor == 0.5);
  CHECK(AttackSpec::parse("sps:gain=0.25,region=front").region == attacks::Region::kFront);
  for (const auto& spec : attacks::robustness_suite()) {
    const auto again = AttackSpec::parse(spec.to_string());
    CHECK(again.to_string() == spec.to_string());
  }
  CHECK(AttackSpec::parse("identity").to_string() == "identity");
}

TEST_CASE("unknown attack names list the valid kinds") {
  try {
    (void)AttackSpec::parse("mp3:bitrate=64");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("gn:snr") != std::string::npos);
  }
  CHECK_THROWS_AS(AttackSpec::parse("gn:level=3"), ParseError);
  CHECK_THROWS_AS(AttackSpec::parse("gn:snr=abc"), ParseError);
  CHECK_THROWS_AS(AttackSpec::parse("lp:3000"), ParseError);
}

TEST_CASE("invalid attack parameters are contract violations") {
  const std::vector<double> x(100, 0.1);
  CHECK_THROWS_AS(attacks::apply_attack(x, AttackSpec::low_pass(9000), 0), ContractViolation);
  CHECK_THROWS_AS(attacks::apply_attack(x, AttackSpec::echo(100, 1.0), 0), ContractViolation);
  CHECK_THROWS_AS(attacks::apply_attack(x, AttackSpec::time_stretch(0), 0), ContractViolation);
  CHECK_THROWS_AS(attacks::apply_attack(x, AttackSpec::band_pass(3000, 2000), 0), ContractViolation);
  CHECK_THROWS_AS(attacks::butterworth_filter(x, attacks::FilterKind::kLow, 8000, 0, 16000), ContractViolation);
  CHECK_THROWS_AS(attacks::additive_noise_at_snr(std::vector<double>(10, 0.0), 20, attacks::NoiseColor::kWhite, 1),
                  ContractViolation);
}

TEST_CASE("every attack preserves length and is reproducible") {
  auto suite = attacks::robustness_suite();
  suite.push_back(AttackSpec::identity());
  suite.push_back(AttackSpec::time_stretch(2.0));
  suite.push_back(AttackSpec::band_pass(800, 5000));
  for (std::size_t n : {1u, 17u, 999u, 16000u}) {
    const auto x = speechish(n);
    for (const auto& spec : suite) {
      CAPTURE(spec.to_string());
      CAPTURE(n);
      const auto y = attacks::apply_attack(x, spec, 42);
      CHECK(y.size() == n);
      CHECK(y == attacks::apply_attack(x, spec, 42));
      for (double v : y) CHECK(std::isfinite(v));
    }
  }
}

TEST_CASE("identity returns the input") {
  const auto x = speechish(500);
  CHECK(attacks::apply_attack(x, AttackSpec::identity(), 3) == x);
}

TEST_CASE("Gaussian and pink noise hit the requested SNR") {
  const auto x = speechish(16000);
  for (double snr : {10.0, 15.0, 20.0})
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
      const auto y = attacks::apply_attack(x, AttackSpec::gaussian_noise(snr), seed);
      CHECK(std::abs(metrics::snr_db(x, y) - snr) <= 0.5);
    }
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto y = attacks::apply_attack(x, AttackSpec::pink_noise(0.5), seed);
    CHECK(std::abs(metrics::snr_db(x, y) - (-20.0 * std::log10(0.5))) <= 0.5);
  }
  const auto inf = attacks::additive_noise_at_snr(x, std::numeric_limits<double>::infinity(),
                                                  attacks::NoiseColor::kWhite, 1);
  CHECK(inf == x);
}

TEST_CASE("pink noise falls by about 3 dB per octave") {
  Rng rng(17);
  const auto z = attacks::unit_noise(1 << 17, attacks::NoiseColor::kPink, rng);
  const dsp::StftConfig cfg{2048, 1024};
  const auto mag = dsp::stft_magnitude(dsp::as_signal(z), cfg);
  const std::size_t frames = mag.dim(0), bins = mag.dim(1);
  // Least-squares slope of 10 log10(PSD) against log2(f) over 100 Hz .. 4 kHz.
  double sx = 0, sy = 0, sxx = 0, sxy = 0, n = 0;
  for (std::size_t k = 1; k < bins; ++k) {
    const double f = 16000.0 * static_cast<double>(k) / 2048.0;
    if (f < 100 || f > 4000) continue;
    double p = 0.0;
    for (std::size_t t = 0; t < frames; ++t) p += mag[t * bins + k] * mag[t * bins + k];
    const double xv = std::log2(f), yv = 10.0 * std::log10(p / static_cast<double>(frames));
    sx += xv;
    sy += yv;
    sxx += xv * xv;
    sxy += xv * yv;
    n += 1;
  }
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  CHECK(slope == doctest::Approx(-3.0).epsilon(1.0 / 3.0));
  CHECK(power(z) == doctest::Approx(1.0));
}

TEST_CASE("Butterworth tone levels") {
  const std::size_t n = 16000;
  const auto lp = [](const std::vector<double>& x) { return attacks::apply_attack(x, AttackSpec::low_pass(3000), 0); };
  CHECK(gain_db(tone(1000, n), lp(tone(1000, n))) >= -1.0);
  CHECK(gain_db(tone(6000, n), lp(tone(6000, n))) <= -20.0);
  const auto bp = [](const std::vector<double>& x) {
    return attacks::apply_attack(x, AttackSpec::band_pass(500, 8000), 0);
  };
  CHECK(gain_db(tone(2000, n), bp(tone(2000, n))) >= -1.0);
  const auto bp2 = [](const std::vector<double>& x) {
    return attacks::apply_attack(x, AttackSpec::band_pass(800, 5000), 0);
  };
  CHECK(gain_db(tone(2000, n), bp2(tone(2000, n))) >= -1.0);
  CHECK(gain_db(tone(7000, n), bp2(tone(7000, n))) <= -10.0);
  // High-pass rejects DC.
  const auto dc = attacks::apply_attack(std::vector<double>(n, 0.5), AttackSpec::high_pass(1000), 0);
  for (std::size_t i = 1600; i < n; ++i) CHECK(std::abs(dc[i]) < 1e-3);
}

TEST_CASE("fourth-order sections use the Butterworth pole Q values") {
  const auto s = attacks::butterworth_sections(attacks::FilterKind::kLow, 1000, 0, 16000);
  REQUIRE(s.size() == 2);
  // Unity gain at DC for a low-pass section.
  for (const auto& b : s) CHECK((b.b0 + b.b1 + b.b2) / (1 + b.a1 + b.a2) == doctest::Approx(1.0));
  // Recover Q from a2 = (1 - alpha) / (1 + alpha), alpha = sin(w0) / (2Q).
  const double w0 = 2 * std::numbers::pi * 1000.0 / 16000.0;
  std::vector<double> qs;
  for (const auto& b : s) {
    const double alpha = (1 - b.a2) / (1 + b.a2);
    qs.push_back(std::sin(w0) / (2 * alpha));
  }
  std::sort(qs.begin(), qs.end());
  CHECK(qs[0] == doctest::Approx(0.5411961).epsilon(1e-6));
  CHECK(qs[1] == doctest::Approx(1.3065630).epsilon(1e-6));
}

TEST_CASE("time stretch and interpolation") {
  const auto x = speechish(1000);
  const auto same = attacks::time_stretch_interpolate(x, 1.0);
  for (std::size_t i = 0; i < x.size(); ++i) CHECK(std::abs(same[i] - x[i]) <= 1e-12);

  const std::size_t n = 16000;
  const auto low = tone(1000, n), high = tone(7000, n);
  const auto low_out = attacks::time_stretch_interpolate(low, 0.5);
  double num = 0, da = 0, db = 0;
  for (std::size_t i = 0; i < n; ++i) {
    num += low[i] * low_out[i];
    da += low[i] * low[i];
    db += low_out[i] * low_out[i];
  }
  CHECK(num / std::sqrt(da * db) >= 0.99);
  // Energy that survives at 7 kHz: squared projection onto the original tone.
  const auto high_out = attacks::time_stretch_interpolate(high, 0.5);
  double proj = 0, self = 0;
  for (std::size_t i = 0; i < n; ++i) {
    proj += high[i] * high_out[i];
    self += high[i] * high[i];
  }
  CHECK((proj / self) * (proj / self) < 0.5);
}

TEST_CASE("suppression") {
  const auto x = speechish(1001);
  CHECK(attacks::suppression(x, 1.0) == x);
  const auto zero = attacks::suppression(x, 0.0);
  for (std::size_t i = 500; i < x.size(); ++i) CHECK(zero[i] == 0.0);
  for (std::size_t i = 0; i < 500; ++i) CHECK(zero[i] == x[i]);
  const auto half = attacks::suppression(x, 0.5);
  double e_in = 0, e_out = 0;
  for (std::size_t i = 500; i < x.size(); ++i) {
    e_in += x[i] * x[i];
    e_out += half[i] * half[i];
  }
  CHECK(std::abs(e_out - 0.25 * e_in) <= 1e-10);
}

TEST_CASE("echo impulse response") {
  std::vector<double> x(4000, 0.0);
  x[0] = 1.0;
  const auto y = attacks::apply_attack(x, AttackSpec::echo(100, 0.3), 0);
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double expected = i == 0 ? 1.0 : (i == 1600 ? 0.3 : 0.0);
    CHECK(y[i] == expected);
  }
}

TEST_CASE("TPDF dither noise is triangular") {
  Rng rng(2024);
  const double a = 1.0, peak = a / 32768.0;
  auto z = attacks::tpdf_noise(1000000, a, rng);
  std::sort(z.begin(), z.end());
  const auto cdf = [peak](double v) {
    const double u = v / peak;
    if (u <= -1) return 0.0;
    if (u >= 1) return 1.0;
    return u < 0 ? 0.5 * (1 + u) * (1 + u) : 1 - 0.5 * (1 - u) * (1 - u);
  };
  double d = 0.0;
  const double n = static_cast<double>(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) {
    const double f = cdf(z[i]);
    d = std::max({d, std::abs(f - static_cast<double>(i) / n), std::abs(static_cast<double>(i + 1) / n - f)});
  }
  CHECK(d < 1.628 / std::sqrt(n));  // Kolmogorov critical value at the 1% level
  CHECK(z.front() >= -peak);
  CHECK(z.back() <= peak);
}

TEST_CASE("dither output lies on the 16-bit grid") {
  const auto x = tone(440, 16000, 0.999);
  const auto plain = attacks::dither(x, 0.0, 1);
  CHECK(plain == attacks::requantize16(x));
  const auto y = attacks::apply_attack(x, AttackSpec::dither(), 5);
  for (double v : y) CHECK(v * 32768.0 == std::round(v * 32768.0));
  CHECK(metrics::snr_db(x, y) >= 80.0);
}

TEST_CASE("training draws cover the nine kinds uniformly") {
  std::map<attacks::Kind, int> counts;
  Rng rng(99);
  const int draws = 10000;
  for (int i = 0; i < draws; ++i) ++counts[attacks::sample_training_attack(rng).kind];
  CHECK(counts.size() == 9);
  CHECK(counts.count(attacks::Kind::kIdentity) == 0);
  CHECK(counts.count(attacks::Kind::kPinkNoise) == 0);
  const double p = 1.0 / 9.0, mean = draws * p, sigma = std::sqrt(draws * p * (1 - p));
  for (const auto& [kind, c] : counts) CHECK(std::abs(c - mean) <= 3 * sigma);
}

TEST_CASE("outputs are clamped") {
  std::vector<double> x(100, 3.9);
  const auto y = attacks::apply_attack(x, AttackSpec::echo(1, 0.9), 0);
  for (double v : y) CHECK(v <= attacks::kOutputClamp);
}
