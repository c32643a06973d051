#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "commands.hpp"
#include "gradcheck.hpp"
#include "truewm/audio_io.hpp"
#include "truewm/model.hpp"

using namespace truewm;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out, err;
};

Run run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

// Scratch directory with a tiny model, two clips and an attack list.
struct Workspace {
  fs::path dir = fs::temp_directory_path() / "truewm_cli_test";
  fs::path model = dir / "tiny.twm";
  fs::path clip = dir / "corpus" / "a.wav";

  Workspace() {
    fs::remove_all(dir);
    fs::create_directories(dir / "corpus");
    fs::create_directories(dir / "empty");
    save_bundle(model, Model(testing::tiny_config(), 2));
    for (int c = 0; c < 2; ++c) {
      audio::Waveform w;
      for (int i = 0; i < 200; ++i) w.samples.push_back(0.3 * std::sin(0.05 * (c + 1) * i) + 0.01 * std::cos(2.1 * i));
      audio::write_wav(w, dir / "corpus" / (c == 0 ? "a.wav" : "b.wav"));
    }
    std::ofstream(dir / "attacks.txt") << "# robustness\nidentity\ngn:snr=20\n\necho:delay=1,decay=0.3\n";
    std::ofstream(dir / "no_attacks.txt") << "# nothing\n\n";
    std::ofstream(dir / "bad.wav") << "definitely not audio";
  }
  ~Workspace() { fs::remove_all(dir); }
  std::string p(const char* name) const { return (dir / name).string(); }
};

}  // namespace

TEST_CASE("command line exit codes") {
  Workspace ws;
  const auto model = ws.model.string(), clip = ws.clip.string();

  CHECK(run({}).code == cli::kExitUsage);
  CHECK(run({"--help"}).code == cli::kExitOk);
  CHECK(run({"frobnicate"}).code == cli::kExitUsage);
  CHECK(run({"embed", "--model", model}).code == cli::kExitUsage);

  SUBCASE("attack") {
    const auto bad = run({"attack", "--in", clip, "--out", ws.p("x.wav"), "--attack", "mp3:rate=64"});
    CHECK(bad.code == cli::kExitUsage);
    CHECK(bad.err.find("gn:snr") != std::string::npos);
    CHECK(run({"attack", "--in", clip, "--out", ws.p("x.wav"), "--attack", "lp:cutoff=9000"}).code == cli::kExitUsage);

    REQUIRE(run({"attack", "--in", clip, "--out", ws.p("id.wav"), "--attack", "identity"}).code == cli::kExitOk);
    CHECK(slurp(ws.p("id.wav")) == slurp(clip));

    const auto gn = run({"attack", "--in", clip, "--out", ws.p("gn.wav"), "--attack", "gn:snr=20", "--seed", "3"});
    REQUIRE(gn.code == cli::kExitOk);
    const auto pos = gn.out.find("realized_snr_db ");
    REQUIRE(pos != std::string::npos);
    CHECK(std::abs(std::stod(gn.out.substr(pos + 16)) - 20.0) <= 0.5);
    CHECK(run({"attack", "--in", clip, "--out", ws.p("bp.wav"), "--attack", "bp:lo=500,hi=8000"}).code == cli::kExitOk);
    CHECK(run({"attack", "--in", ws.p("bad.wav"), "--out", ws.p("x.wav"), "--attack", "identity"}).code ==
          cli::kExitUsage);
    CHECK(run({"attack", "--in", ws.p("missing.wav"), "--out", ws.p("x.wav"), "--attack", "identity"}).code ==
          cli::kExitUsage);
  }

  SUBCASE("embed, extract and verify") {
    CHECK(run({"embed", "--model", model, "--in", clip, "--out", ws.p("w.wav"), "--bits", "1ff"}).code ==
          cli::kExitUsage);
    CHECK(run({"embed", "--model", model, "--in", clip, "--out", ws.p("w.wav"), "--bits", "ff", "--random"}).code ==
          cli::kExitUsage);
    CHECK(run({"embed", "--model", ws.p("missing.twm"), "--in", clip, "--out", ws.p("w.wav"), "--random"}).code ==
          cli::kExitUsage);

    REQUIRE(run({"embed", "--model", model, "--in", clip, "--out", ws.p("r1.wav"), "--random", "--seed", "7"}).code ==
            cli::kExitOk);
    REQUIRE(run({"embed", "--model", model, "--in", clip, "--out", ws.p("r2.wav"), "--random", "--seed", "7"}).code ==
            cli::kExitOk);
    CHECK(slurp(ws.p("r1.wav.json")) == slurp(ws.p("r2.wav.json")));
    CHECK(slurp(ws.p("r1.wav")) == slurp(ws.p("r2.wav")));
    CHECK(audio::read_wav(ws.p("r1.wav")).samples.size() == audio::read_wav(clip).samples.size());

    const auto ex = run({"extract", "--model", model, "--in", ws.p("r1.wav"), "--out", ws.p("bits.json")});
    REQUIRE(ex.code == cli::kExitOk);
    const auto hex = ex.out.substr(0, ex.out.find('\n'));
    const auto bits = WatermarkBits::from_hex(hex, 8);
    CHECK(fs::exists(ws.p("bits.json")));

    // The extracted bits verify at a loose tau; their complement never does.
    CHECK(run({"verify", "--model", model, "--in", ws.p("r1.wav"), "--bits", hex, "--tau", "0.01"}).code ==
          cli::kExitOk);
    const auto neg = run({"verify", "--model", model, "--in", ws.p("r1.wav"), "--bits", bits.complement().to_hex()});
    CHECK(neg.code == cli::kExitNegative);
    CHECK(neg.out.find("matches 0") != std::string::npos);
    CHECK(neg.out.find("decision not-watermarked") != std::string::npos);
    CHECK(run({"verify", "--model", model, "--in", ws.p("r1.wav"), "--bits", hex, "--tau", "2"}).code ==
          cli::kExitUsage);
  }

  SUBCASE("eval") {
    const auto corpus = (ws.dir / "corpus").string();
    CHECK(run({"eval", "--model", model, "--corpus", corpus, "--attacks", ws.p("no_attacks.txt"), "--out",
               ws.p("r.csv")})
              .code == cli::kExitUsage);
    CHECK(run({"eval", "--model", model, "--corpus", (ws.dir / "empty").string(), "--attacks", ws.p("attacks.txt"),
               "--out", ws.p("r.csv")})
              .code == cli::kExitUsage);
    const auto ok = run({"eval", "--model", model, "--corpus", corpus, "--attacks", ws.p("attacks.txt"), "--out",
                         ws.p("r.csv"), "--seed", "1"});
    REQUIRE(ok.code == cli::kExitOk);
    const auto csv = slurp(ws.p("r.csv"));
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 1 + 2 * 3 + 3);
  }

  SUBCASE("train") {
    CHECK(run({"train", "--corpus", (ws.dir / "empty").string(), "--out", ws.p("m.twm")}).code == cli::kExitUsage);
    CHECK(run({"train", "--corpus", (ws.dir / "nowhere").string(), "--out", ws.p("m.twm")}).code == cli::kExitUsage);
    CHECK(run({"train", "--corpus", (ws.dir / "corpus").string(), "--out", ws.p("m.twm"), "--batch", "0"}).code ==
          cli::kExitUsage);
  }
}
