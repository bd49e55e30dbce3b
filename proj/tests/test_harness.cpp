#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "phaselab/errors.hpp"
#include "phaselab/harness.hpp"
#include "phaselab/io.hpp"
#include "phaselab/theory.hpp"

using namespace phaselab;

namespace {

constexpr double pi = std::numbers::pi;

std::string csv(const SweepResult& r) {
  std::ostringstream out;
  write_results_csv(out, r);
  return out.str();
}

ExperimentConfig small(double n, double v, double t, std::int64_t frames) {
  ExperimentConfig c;
  c.intensity = n;
  c.visibility = v;
  c.true_phase = t;
  c.frames = frames;
  c.seed = 4242;
  return c;
}

}  // namespace

TEST(Harness, DefaultGrids) {
  EXPECT_EQ(default_intensity_grid().size(), 16u);
  EXPECT_DOUBLE_EQ(default_intensity_grid().front(), 0.1);
  EXPECT_NEAR(default_intensity_grid().back(), 60, 1e-12);
  auto w = default_window_grid();
  EXPECT_EQ(w.size(), 32u);
  EXPECT_DOUBLE_EQ(w.front(), 0.05);
  EXPECT_DOUBLE_EQ(w.back(), pi);
  auto p = default_phase_grid();
  ASSERT_EQ(p.size(), 9u);
  EXPECT_DOUBLE_EQ(p[4], pi / 4);
  EXPECT_EQ(frames_for_intensity(100, 2e4, 0.1), 200000);
  EXPECT_EQ(frames_for_intensity(20000, 2e4, 60), 20000);
}

TEST(Harness, IntensitySweepDeterministicAcrossWorkers) {
  const std::vector<double> grid{0.5, 5, 20};
  SweepOptions one, many;
  many.workers = 4;
  auto a = run_intensity_sweep(small(1, 0.998, pi / 3, 2000), grid, 1000, one);
  auto b = run_intensity_sweep(small(1, 0.998, pi / 3, 2000), grid, 1000, many);
  EXPECT_EQ(csv(a), csv(b));
  ASSERT_EQ(a.rows.size(), grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    EXPECT_EQ(a.value(i, "intensity"), grid[i]);
    EXPECT_DOUBLE_EQ(a.value(i, "theory_nfm_asym"), nfm_asymptotic(grid[i], 0.998));
    for (const char* m : {"nfm", "ml", "mlu"}) {
      const std::string p(m);
      EXPECT_LE(a.value(i, p + "_ci_low"), a.value(i, p + "_sigma2"));
      EXPECT_GE(a.value(i, p + "_ci_high"), a.value(i, p + "_sigma2"));
    }
  }
}

TEST(Harness, FramesConserved) {
  const auto cfg = small(0.3, 1, 0.4, 3000);
  const std::vector<Method> methods{Method::nfm, Method::ml_constrained, Method::ml_unconstrained,
                                    Method::ml_single_param};
  auto fe = estimate_frames(cfg, 9, methods, 2);
  for (Method m : methods) {
    auto d = circular_dispersion(std::span<const PhaseEstimate>(fe.of(m)));
    EXPECT_EQ(d.n_valid + d.n_invalid, cfg.frames) << method_name(m);
    EXPECT_GT(d.n_invalid, 0) << method_name(m);
  }
  auto r = run_intensity_sweep(small(1, 1, 0.4, 3000), std::vector<double>{0.3}, 0);
  EXPECT_EQ(r.value(0, "frames"), 3000);
}

TEST(Harness, WindowSweepShape) {
  auto grid = default_window_grid();
  SweepOptions opt;
  opt.workers = 2;
  auto r = run_window_sweep(small(10, 0.996, pi / 3, 3000), grid, opt, 0);
  ASSERT_EQ(r.rows.size(), 32u);
  for (double b : r.column("baseline_delta_e")) EXPECT_TRUE(std::isnan(b));
  for (std::size_t i = 0; i < r.rows.size(); ++i) {
    EXPECT_DOUBLE_EQ(r.value(i, "delta_e"), r.value(i, "f_p") - r.value(i, "f_g"));
    if (i > 0) EXPECT_GE(r.value(i, "f_g"), r.value(i - 1, "f_g"));
  }
  EXPECT_DOUBLE_EQ(r.rows.back()[r.column_index("f_g")], 1.0);
  EXPECT_DOUBLE_EQ(r.rows.back()[r.column_index("delta_e")], 0.0);
  opt.workers = 1;
  EXPECT_EQ(csv(r), csv(run_window_sweep(small(10, 0.996, pi / 3, 3000), grid, opt, 0)));
}

TEST(Harness, PhaseSweepAndCalibrationWithoutJitter) {
  auto r = run_phase_sweep(small(160, 0.992, 0, 4000), default_phase_grid());
  ASSERT_EQ(r.rows.size(), 9u);
  for (std::size_t i = 0; i < r.rows.size(); ++i) {
    const double t = r.value(i, "phase");
    EXPECT_NEAR(r.value(i, "nfm_sigma2") / nfm_asymptotic(160, 0.992), 1.0, 0.15);
    EXPECT_NEAR(r.value(i, "mlu_sigma2") / unconstrained_ml_asymptotic(160, 0.992, t), 1.0, 0.15);
  }
  auto cal = calibrate_jitter(r, Method::nfm);
  EXPECT_LT(cal.sigma_jitter, 0.012);
  EXPECT_THROW(calibrate_jitter(r, Method::ml_constrained), ConfigError);
}

TEST(Harness, BiasSweepShape) {
  const std::vector<double> vgrid{1.0, 0.5}, pgrid{0.0, pi / 8, pi / 4};
  auto r = run_bias_sweep(true, vgrid, pgrid, small(100, 1, 0, 2000));
  ASSERT_EQ(r.rows.size(), 6u);
  EXPECT_TRUE(r.has_column("ml1_bias"));
  for (std::size_t i = 0; i < r.rows.size(); ++i) {
    // Mirror symmetry makes kpi/4 bias-free even at V < 1.
    const double t = r.value(i, "phase");
    if (t == 0.0 || t == pi / 4) EXPECT_LE(std::abs(r.value(i, "ml1_bias")), 4 * r.value(i, "ml1_bias_stderr") + 1e-12);
  }
}
