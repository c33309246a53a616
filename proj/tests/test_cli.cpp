#include <doctest.h>

#include <fstream>
#include <sstream>

#include "seqmark/cli.hpp"
#include "seqmark/data_io.hpp"
#include "seqmark/inference.hpp"
#include "support.hpp"

using namespace seqmark;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out, err;
};

Run run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::size_t line_count(const fs::path& p) {
  std::ifstream in(p);
  std::size_t n = 0;
  for (std::string line; std::getline(in, line);) ++n;
  return n;
}

const std::vector<std::string> kTinyNet{
    "--set", "global.depth=2",         "--set", "global.stage_channels=4,4", "--set", "global.kernels=3,7",
    "--set", "local.layers=1",         "--set", "local.channels=4",          "--set", "local.dilations=1,2",
    "--set", "fusion_channels=4",
};

std::vector<std::string> with_tiny(std::vector<std::string> args) {
  args.insert(args.end(), kTinyNet.begin(), kTinyNet.end());
  return args;
}

}  // namespace

TEST_CASE("help and argument errors") {
  const auto help = run({"--help"});
  CHECK(help.code == 0);
  CHECK(help.out.find("ablate") != std::string::npos);
  CHECK(run({"train", "--help"}).code == 0);
  const auto missing = run({"train"});
  CHECK(missing.code == 2);
  CHECK(missing.err.rfind("error:", 0) == 0);
  CHECK(run({"bogus"}).code == 2);
}

TEST_CASE("synth writes a reproducible dataset") {
  seqmark::testing::TempDir dir("cli_synth");
  const auto a = run({"synth", "--out", (dir / "a").string(), "--min-length", "400", "--max-length", "500"});
  REQUIRE(a.code == 0);
  const auto b = run({"synth", "--out", (dir / "b").string(), "--min-length", "400", "--max-length", "500"});
  REQUIRE(b.code == 0);
  std::size_t wells = 0;
  for (const auto& e : fs::directory_iterator(dir / "a")) {
    const auto name = e.path().filename().string();
    if (name == "picks.csv" || name == "manifest.txt") continue;
    ++wells;
    CHECK(slurp(e.path()) == slurp(dir / "b" / name));
  }
  CHECK(wells == 80);
  CHECK(line_count(dir / "a" / "picks.csv") == 1 + 240);
  CHECK(fs::exists(dir / "a" / "manifest.txt"));

  REQUIRE(run({"synth", "--out", (dir / "c").string(), "--wells", "6", "--min-length", "400", "--max-length",
               "420", "--channels", "gr,res,den"})
              .code == 0);
  const auto data = load_dataset(dir / "c");
  CHECK(data.wells.size() == 6);
  CHECK(data.wells[0].channels.size() == 3);
}

TEST_CASE("train, predict and eval end to end") {
  seqmark::testing::TempDir dir("cli_pipe");
  const auto data = (dir / "data").string();
  REQUIRE(run({"synth", "--out", data, "--wells", "10", "--min-length", "400", "--max-length", "440"}).code == 0);
  const auto ckpt = (dir / "m.smck").string();
  const auto tr = run(with_tiny({"train", "--data", data, "--marker", "UB000", "--out", ckpt, "--epochs", "2"}));
  REQUIRE_MESSAGE(tr.code == 0, tr.err);
  CHECK(tr.out.find("epoch 1 train_loss") != std::string::npos);
  CHECK(line_count(dir / "m.history.csv") >= 3);
  CHECK(line_count(dir / "m.split.csv") == 11);

  const auto pred = (dir / "p.csv").string();
  const auto pr = run({"predict", "--model", ckpt, "--wells", data, "--out", pred, "--mc-passes", "1", "--curves",
                       (dir / "c.csv").string(), "--split", (dir / "m.split.csv").string(), "--subset", "test"});
  REQUIRE_MESSAGE(pr.code == 0, pr.err);
  const auto dets = load_detections_csv(pred);
  CHECK(dets.size() == 2);
  for (const auto& d : dets) CHECK(d.uncertainty_ft == 0.0);
  std::size_t samples = 0;
  for (const auto& d : dets) samples += load_well_csv(fs::path(data) / (d.well_id + ".csv")).samples.shape()[1];
  CHECK(line_count(dir / "c.csv") == 1 + samples);

  // wells carrying channels the checkpoint was not trained on
  REQUIRE(run({"synth", "--out", (dir / "rich").string(), "--wells", "3", "--min-length", "400", "--max-length",
               "420", "--channels", "gr,res"})
              .code == 0);
  const auto mm = run({"predict", "--model", ckpt, "--wells", (dir / "rich").string(), "--out", pred});
  CHECK(mm.code == 1);
  CHECK(mm.err.find("GR") != std::string::npos);
  CHECK(mm.err.find("RES") != std::string::npos);

  const auto ev = run({"eval", "--pred", pred, "--truth", data + "/picks.csv", "--out", (dir / "r.csv").string()});
  CHECK(ev.code == 0);
  CHECK(ev.out.find("F1@2ft ") != std::string::npos);
}

TEST_CASE("eval on a perfect fixture") {
  seqmark::testing::TempDir dir("cli_eval");
  std::vector<MarkerPick> picks;
  std::vector<Detection> dets;
  for (int w = 0; w < 4; ++w) {
    const std::string id = "W" + std::to_string(w);
    picks.push_back({id, "A", 1000.0 + w});
    Detection d;
    d.well_id = id;
    d.marker = "A";
    d.depth_ft = 1000.0 + w;
    d.probability = 0.9;
    d.valid = true;
    dets.push_back(d);
  }
  save_picks_csv(picks, dir / "truth.csv");
  save_detections_csv(dets, dir / "pred.csv");
  const auto ev = run({"eval", "--pred", (dir / "pred.csv").string(), "--truth", (dir / "truth.csv").string(),
                       "--out", (dir / "r.csv").string()});
  REQUIRE_MESSAGE(ev.code == 0, ev.err);
  CHECK(ev.out.find("F1@2ft 1\n") != std::string::npos);
  CHECK(fs::exists(dir / "r.histogram.csv"));

  for (auto& d : dets) d.valid = false;
  save_detections_csv(dets, dir / "pred.csv");
  const auto none = run({"eval", "--pred", (dir / "pred.csv").string(), "--truth", (dir / "truth.csv").string(),
                         "--out", (dir / "r.csv").string()});
  REQUIRE(none.code == 0);
  CHECK(slurp(dir / "r.csv").find("NA") != std::string::npos);
}

TEST_CASE("unknown config keys are rejected") {
  seqmark::testing::TempDir dir("cli_cfg");
  const auto r = run({"train", "--data", dir.path().string(), "--marker", "A", "--out", (dir / "x.smck").string(),
                      "--set", "no_such_key=1"});
  CHECK(r.code != 0);
  CHECK(r.err.rfind("error:", 0) == 0);
  CHECK(r.err.find("no_such_key") != std::string::npos);
}

TEST_CASE("ablate writes six cells per seed") {
  seqmark::testing::TempDir dir("cli_abl");
  const auto data = (dir / "data").string();
  REQUIRE(run({"synth", "--out", data, "--wells", "10", "--min-length", "400", "--max-length", "420"}).code == 0);
  const auto r = run(with_tiny({"ablate", "--data", data, "--markers", "UB000", "--seeds", "1", "--out",
                                (dir / "a.csv").string(), "--set", "max_epochs=1", "--set", "mc_passes=2"}));
  REQUIRE_MESSAGE(r.code == 0, r.err);
  CHECK(line_count(dir / "a.csv") == 1 + 6);
  CHECK(line_count(dir / "a.summary.csv") == 1 + 6);
}
