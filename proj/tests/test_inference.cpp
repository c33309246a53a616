#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <fstream>

#include "seqmark/error.hpp"
#include "seqmark/inference.hpp"
#include "support.hpp"

using namespace seqmark;

namespace {

NetConfig small_net(double dropout) {
  NetConfig c;
  c.global.depth = 2;
  c.global.stage_channels = {4, 4};
  c.local.layers = 1;
  c.local.channels = 4;
  c.fusion_channels = 4;
  c.dropout = dropout;
  return c;
}

WellLog random_well(Rng& rng, std::size_t T) {
  WellLog w;
  w.id = "W1";
  w.depth_start = 1000.0;
  w.channels = {"GR"};
  w.samples = seqmark::testing::random_tensor({1, T}, rng);
  return w;
}

}  // namespace

TEST_CASE("detect takes the first maximum") {
  const std::vector<double> p{0.1, 0.9, 0.2};
  const auto d = detect(p, 1000.0, 0.5);
  CHECK(d.depth_index == 1);
  CHECK(d.depth_ft == 1000.5);
  CHECK(d.probability == 0.9);
  CHECK(detect(std::vector<double>(7, 0.3), 0.0, 0.5).depth_index == 0);
  CHECK(detect(std::vector<double>{0.2, 0.7, 0.7}, 0.0, 0.5).depth_index == 1);
  CHECK_THROWS_AS(detect(std::vector<double>{}, 0.0, 0.5), Error);
}

TEST_CASE("argmax survives strictly increasing transforms") {
  Rng rng(91);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> p(static_cast<std::size_t>(uniform_int(rng, 1, 50)));
    for (auto& v : p) v = uniform(rng, 0.01, 0.99);
    std::vector<double> q(p.size()), r(p.size());
    std::transform(p.begin(), p.end(), q.begin(), [](double v) { return std::log(v / (1 - v)); });
    std::transform(p.begin(), p.end(), r.begin(), [](double v) { return v * v * v + 2.0; });
    const auto i = detect(p, 0, 1).depth_index;
    REQUIRE(detect(q, 0, 1).depth_index == i);
    REQUIRE(detect(r, 0, 1).depth_index == i);
  }
}

TEST_CASE("population standard deviation") {
  CHECK(population_stddev({}) == 0.0);
  CHECK(population_stddev({1000.5, 1000.5, 1000.5}) == 0.0);
  CHECK(population_stddev({1.0, 3.0}) == 1.0);
  Rng rng(92);
  std::vector<double> v(30);
  for (auto& x : v) x = 8000.0 + 0.5 * static_cast<double>(uniform_int(rng, -20, 20));
  const double base = population_stddev(v);
  for (int trial = 0; trial < 20; ++trial) {
    shuffle(v, rng);
    REQUIRE(population_stddev(v) == base);
  }
}

TEST_CASE("no stochasticity means zero uncertainty") {
  Rng rng(93);
  const auto well = random_well(rng, 120);
  const auto quiet = MarkerNet::create("M", small_net(0.0), 1);
  CHECK(mc_dropout_detect(quiet, well.samples, well, 30, 7).uncertainty_ft == 0.0);
  const auto noisy = MarkerNet::create("M", small_net(0.5), 1);
  CHECK(mc_dropout_detect(noisy, well.samples, well, 1, 7).uncertainty_ft == 0.0);
  CHECK_THROWS_AS(mc_dropout_detect(noisy, well.samples, well, 0, 7), Error);
}

TEST_CASE("MC dropout is reproducible under a master seed") {
  Rng rng(94);
  const auto well = random_well(rng, 300);
  const auto net = MarkerNet::create("M", small_net(0.5), 2);
  const auto a = mc_dropout_detect(net, well.samples, well, 30, 11);
  const auto b = mc_dropout_detect(net, well.samples, well, 30, 11);
  CHECK(a.uncertainty_ft == b.uncertainty_ft);
  CHECK(a.depth_ft == b.depth_ft);
  CHECK(a.uncertainty_ft > 0.0);  // untrained net with heavy dropout wanders
  // reported depth comes from the eval pass
  CHECK(a.depth_ft == detect(net.predict(well.samples, nn::Mode::eval), 1000.0, 0.5).depth_ft);
  CHECK(a.well_id == "W1");
  CHECK(a.marker == "M");
}

TEST_CASE("validity filter is strict on both thresholds") {
  Detection d;
  d.probability = 0.9;
  d.uncertainty_ft = 1.0;
  CHECK(validate_detection(d, 0.5, 5.0).valid);
  d.uncertainty_ft = 5.0;
  CHECK_FALSE(validate_detection(d, 0.5, 5.0).valid);
  d.uncertainty_ft = 1.0;
  d.probability = 0.5;
  CHECK_FALSE(validate_detection(d, 0.5, 5.0).valid);
  CHECK_THROWS_AS(validate_detection(d, -0.1, 5.0), Error);
}

TEST_CASE("validity filter is monotone in its thresholds") {
  Rng rng(95);
  for (int trial = 0; trial < 200; ++trial) {
    Detection d;
    d.probability = uniform01(rng);
    d.uncertainty_ft = uniform(rng, 0.0, 10.0);
    const double p = uniform01(rng), u = uniform(rng, 0.0, 10.0);
    if (!validate_detection(d, p, u).valid) continue;
    REQUIRE(validate_detection(d, p * uniform01(rng), u).valid);
    REQUIRE(validate_detection(d, p, u + uniform(rng, 0.0, 5.0)).valid);
  }
}

TEST_CASE("predictions and curves") {
  seqmark::testing::TempDir dir("inf");
  Rng rng(96);
  std::vector<WellLog> wells{random_well(rng, 80), random_well(rng, 64)};
  wells[1].id = "W2";
  const auto net = MarkerNet::create("M", small_net(0.1), 3);
  const NormStats norm{{"GR"}, {0.0}, {1.0}};
  InferenceConfig cfg;
  cfg.mc_passes = 1;
  const auto dets = predict_wells(net, norm, wells, cfg);
  REQUIRE(dets.size() == 2);
  for (const auto& d : dets) CHECK(d.uncertainty_ft == 0.0);
  save_detections_csv(dets, dir / "p.csv");
  const auto back = load_detections_csv(dir / "p.csv");
  REQUIRE(back.size() == 2);
  CHECK(back[1].depth_ft == dets[1].depth_ft);
  CHECK(back[0].probability == dets[0].probability);
  CHECK(back[0].valid == dets[0].valid);

  const auto curves = prediction_curves(net, norm, wells);
  CHECK(curves.size() == 144);
  save_curves_csv(curves, dir / "c.csv");

  const NormStats wrong{{"GR", "RES"}, {0.0, 0.0}, {1.0, 1.0}};
  try {
    predict_wells(net, wrong, wells, cfg);
    FAIL("expected throw");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::channel_mismatch);
    CHECK(std::string(e.what()).find("GR,RES") != std::string::npos);
  }
}
