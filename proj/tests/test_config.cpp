#include "roadcal/config.hpp"

#include <gtest/gtest.h>

using namespace roadcal;

TEST(Config, PaperDefaults) {
  const Config c;
  EXPECT_EQ(c.weights.k1, 2.0);
  EXPECT_EQ(c.weights.k2, 500.0);
  EXPECT_EQ(c.weights.k3, 0.1);
  EXPECT_EQ(c.vote.threshold_deg, 3.0);
  EXPECT_EQ(c.vote.cap, 10.0);
  EXPECT_EQ(c.select_k, 5);
  EXPECT_EQ(c.region.k, 12);
  EXPECT_EQ(c.region.theta_smooth_deg, 10.0);
  EXPECT_EQ(c.region.tau_seed, 0.1);
  EXPECT_EQ(c.repeat_runs, 40);
  EXPECT_EQ(c.repeat_perturb_t, 0.3);
  EXPECT_EQ(c.repeat_perturb_r_deg, 3.0);
  EXPECT_EQ(c.repeat_counts, (std::vector<int>{1, 2, 5}));
  EXPECT_EQ(c.cost.plane_residual, PlaneResidual::Absolute);
}

TEST(Config, OverridesApply) {
  const Config c = parse_config("weights.k2=250 # half\nselect.k=3 optimizer.step_r_deg=2");
  EXPECT_EQ(c.weights.k2, 250.0);
  EXPECT_EQ(c.select_k, 3);
  for (int i = 3; i < 6; ++i) EXPECT_NEAR(c.optimizer.initial_step[i], deg2rad(2.0), 1e-15);
  EXPECT_EQ(c.weights.k1, 2.0);
}

TEST(Config, SignedPlaneResidual) {
  EXPECT_EQ(parse_config("plane.residual=signed").cost.plane_residual, PlaneResidual::Signed);
  EXPECT_THROW(parse_config("plane.residual=squared"), CalibrationError);
}

TEST(Config, UnknownKeyRejected) {
  EXPECT_THROW(parse_config("weights.k4=1"), CalibrationError);
  try {
    parse_config("selectk=3");
    FAIL();
  } catch (const CalibrationError& e) {
    EXPECT_NE(std::string(e.what()).find("selectk"), std::string::npos);
  }
}

TEST(Config, InvalidValuesRejected) {
  EXPECT_THROW(parse_config("weights.k1=-1"), CalibrationError);
  EXPECT_THROW(parse_config("disparity.window=8"), CalibrationError);
  EXPECT_THROW(parse_config("select.k=abc"), CalibrationError);
  EXPECT_THROW(parse_config("repeat.counts=1,0"), CalibrationError);
}

TEST(Config, FormatRoundTrip) {
  const Config a = parse_config(
      "seed=9 weights.k1=1.5 repeat.counts=1,3,7 plane.residual=signed optimizer.restart=false");
  const Config b = parse_config(format_config(a));
  EXPECT_EQ(format_config(a), format_config(b));
  EXPECT_EQ(b.repeat_counts, (std::vector<int>{1, 3, 7}));
  EXPECT_EQ(b.seed, 9u);
  EXPECT_FALSE(b.optimizer.restart);
}

TEST(Config, SeedReachesRandomizedStages) {
  const Config c = parse_config("seed=42");
  EXPECT_EQ(c.road_line.seed, 42u);
  EXPECT_EQ(c.plane.seed, 42u);
  EXPECT_EQ(c.segments.hough.seed, 42u);
}

TEST(Config, EveryKeyListed) {
  const auto keys = Config::keys();
  EXPECT_EQ(keys.size(), Config{}.entries().size());
  for (const char* k : {"weights.k1", "weights.k2", "weights.k3", "plane.residual", "select.k",
                        "repeat.runs", "optimizer.max_iter"})
    EXPECT_NE(std::find(keys.begin(), keys.end(), k), keys.end()) << k;
}
