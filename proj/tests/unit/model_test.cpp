#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>

#include "gradcheck.hpp"
#include "truewm/error.hpp"
#include "truewm/model.hpp"

using namespace truewm;
namespace fs = std::filesystem;

namespace {

fs::path temp_file(const char* name) { return fs::temp_directory_path() / name; }

}  // namespace

TEST_CASE("config JSON round trip and hash") {
  auto c = ModelConfig::for_capacity(300);
  c.hiding.hidden = 128;
  const auto back = ModelConfig::from_json(c.to_json());
  CHECK(back.to_json() == c.to_json());
  CHECK(back.hash() == c.hash());
  auto other = c;
  other.hiding.residual = !c.hiding.residual;
  CHECK(other.hash() != c.hash());
  CHECK_THROWS_AS(ModelConfig::from_json("{\"window\": 3}"), ParseError);
}

TEST_CASE("same seed gives the same initial model") {
  const Model a(testing::tiny_config(), 9), b(testing::tiny_config(), 9), c(testing::tiny_config(), 10);
  CHECK(state_hash(a) == state_hash(b));
  CHECK(state_hash(a) != state_hash(c));
}

TEST_CASE("bundle round trip is bit-exact") {
  Model model(testing::tiny_config(), 4);
  model.metadata().steps = 17;
  model.decoder().blocks[1].bn.running_mean[3] = 0.125;
  std::vector<nn::Tensor> params;
  for (const auto& p : model.parameters()) params.push_back(p.tensor);
  nn::AdamW opt(params);
  for (auto& p : params) p.zero_grad();
  opt.step();
  const auto path = temp_file("truewm_roundtrip.twm");
  save_bundle(path, model, &opt);
  const auto bundle = load_bundle(path);
  CHECK(state_hash(bundle.model) == state_hash(model));
  CHECK(bundle.model.metadata().steps == 17);
  CHECK(bundle.model.decoder().blocks[1].bn.running_mean[3] == 0.125);
  REQUIRE(bundle.optimizer.has_value());
  CHECK(bundle.optimizer->steps == 1);
  CHECK(bundle.optimizer->v[0] == opt.second_moments()[0]);
  // Without optimizer state.
  save_bundle(path, model);
  CHECK_FALSE(load_bundle(path).optimizer.has_value());
  fs::remove(path);
}

TEST_CASE("corrupt bundles are rejected") {
  Model model(testing::tiny_config(), 4);
  const auto path = temp_file("truewm_corrupt.twm");
  save_bundle(path, model);
  std::vector<char> bytes;
  {
    std::ifstream in(path, std::ios::binary);
    bytes.assign(std::istreambuf_iterator<char>(in), {});
  }
  auto write = [&](const std::vector<char>& b) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out.write(b.data(), static_cast<std::streamsize>(b.size()));
  };
  auto bad_magic = bytes;
  bad_magic[0] = 'X';
  write(bad_magic);
  CHECK_THROWS_AS(load_bundle(path), ParseError);

  // Flip a digit of the stored config hash.
  auto bad_hash = bytes;
  const std::string key = "\"config_hash\":\"";
  const auto pos = std::search(bad_hash.begin(), bad_hash.end(), key.begin(), key.end()) - bad_hash.begin();
  char& digit = bad_hash[static_cast<std::size_t>(pos) + key.size()];
  digit = digit == '0' ? '1' : '0';
  write(bad_hash);
  CHECK_THROWS_AS(load_bundle(path), ParseError);

  auto truncated = bytes;
  truncated.resize(bytes.size() / 2);
  write(truncated);
  CHECK_THROWS_AS(load_bundle(path), ParseError);
  fs::remove(path);
  CHECK_THROWS_AS(load_bundle(path), IoError);
}

TEST_CASE("whole-signal embedding keeps the duration and repeats the bits") {
  const Model model(testing::tiny_config(), 6);
  std::vector<double> x(150);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = 0.3 * std::sin(0.2 * static_cast<double>(i));
  Rng rng(1);
  const auto bits = WatermarkBits::random(8, rng);
  const auto y = model.embed_signal(x, bits);
  CHECK(y.size() == x.size());
  const auto soft = model.extract_signal(y);
  CHECK(soft.size() == 8);
  // Averaging over windows: a signal made of one window repeated twice gives
  // the same soft bits as that window alone.
  std::vector<double> seg(y.begin(), y.begin() + 64);
  std::vector<double> twice(seg);
  twice.insert(twice.end(), seg.begin(), seg.end());
  const auto one = model.extract_segment(seg);
  const auto both = model.extract_signal(twice);
  for (std::size_t i = 0; i < 8; ++i) CHECK(both[i] == doctest::Approx(one[i]).epsilon(1e-14));
}
