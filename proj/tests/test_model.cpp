#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "oracles.hpp"
#include "phaselab/angles.hpp"
#include "phaselab/errors.hpp"
#include "phaselab/model.hpp"
#include "phaselab/rng.hpp"

using namespace phaselab;

namespace {

constexpr double pi = std::numbers::pi;

struct MomentAcc {
  double sum = 0, sumsq = 0;
  long n = 0;
  void add(double x) {
    sum += x;
    sumsq += x * x;
    ++n;
  }
  double mean() const { return sum / n; }
  double var() const { return (sumsq - sum * sum / n) / (n - 1); }
};

}  // namespace

TEST(ChannelMeans, ZeroPhaseFullVisibility) {
  auto m = channel_means(0.0, 10.0, 1.0);
  EXPECT_DOUBLE_EQ(m.m3, 10.0);
  EXPECT_DOUBLE_EQ(m.m4, 0.0);
  EXPECT_DOUBLE_EQ(m.m5, 5.0);
  EXPECT_DOUBLE_EQ(m.m6, 5.0);
}

TEST(ChannelMeans, QuarterTurn) {
  auto m = channel_means(pi / 2, 10.0, 1.0);
  EXPECT_NEAR(m.m3, 5.0, 1e-12);
  EXPECT_NEAR(m.m4, 5.0, 1e-12);
  EXPECT_DOUBLE_EQ(m.m5, 10.0);
  EXPECT_DOUBLE_EQ(m.m6, 0.0);
}

TEST(ChannelMeans, DirectEvaluation) {
  auto m = channel_means(pi / 3, 8.0, 0.5);
  EXPECT_NEAR(m.m3, 5.0, 1e-12);
  EXPECT_NEAR(m.m4, 3.0, 1e-12);
  EXPECT_NEAR(m.m5, 4.0 + std::sqrt(3.0), 1e-12);
  EXPECT_NEAR(m.m6, 4.0 - std::sqrt(3.0), 1e-12);
}

TEST(ChannelMeans, RejectsOutOfRange) {
  EXPECT_THROW(channel_means(0.0, 0.0, 1.0), ConfigError);
  EXPECT_THROW(channel_means(0.0, -1.0, 1.0), ConfigError);
  EXPECT_THROW(channel_means(0.0, 1.0, 1.01), ConfigError);
  EXPECT_THROW(channel_means(0.0, 1.0, -0.1), ConfigError);
  EXPECT_THROW(channel_means(std::nan(""), 1.0, 0.5), ConfigError);
}

TEST(ChannelMeans, PairsSumExactly) {
  Rng rng(42);
  for (int i = 0; i < 20000; ++i) {
    const double t = -pi + 2 * pi * rng.uniform();
    const double n = std::exp(-3 + 12 * rng.uniform());
    const double v = rng.uniform();
    auto m = channel_means(t, n, v);
    ASSERT_EQ(m.m3 + m.m4, n) << t << " " << n << " " << v;
    ASSERT_EQ(m.m5 + m.m6, n) << t << " " << n << " " << v;
    ASSERT_GE(std::min({m.m3, m.m4, m.m5, m.m6}), 0.0);
  }
}

TEST(ChannelMeans, MonotoneInVisibility) {
  for (double t : {-1.2, -0.3, 0.0, 0.7, 1.5}) {
    double prev3 = -1, prev4 = 1e9;
    for (int k = 0; k <= 20; ++k) {
      auto m = channel_means(t, 7.0, k / 20.0);
      EXPECT_GE(m.m3, prev3);
      EXPECT_LE(m.m4, prev4);
      prev3 = m.m3;
      prev4 = m.m4;
    }
  }
}

TEST(Poisson, ZeroMeanIsAlwaysZero) {
  Rng rng(3);
  for (int i = 0; i < 1000; ++i) {
    auto s = sample_frame({10, 0, 5, 5}, rng);
    ASSERT_EQ(s.n4, 0);
  }
}

TEST(Poisson, DeterministicStream) {
  Rng a(99), b(99);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(sample_frame({10, 0, 5, 5}, a), sample_frame({10, 0, 5, 5}, b));
}

TEST(Poisson, LawOfLargeNumbers) {
  Rng rng(7);
  MomentAcc acc;
  const int frames = 100000;
  for (int i = 0; i < frames; ++i) acc.add(static_cast<double>(sample_frame({10, 0, 5, 5}, rng).n3));
  EXPECT_NEAR(acc.mean(), 10.0, 3 * std::sqrt(10.0 / frames));
}

TEST(Poisson, MomentsAcrossRegimes) {
  // Both sides of the algorithm switch at mean 10.
  for (double mean : {0.05, 0.7, 3.0, 9.99, 10.0, 10.5, 47.0, 1000.0, 1e5}) {
    Rng rng(1234);
    MomentAcc acc;
    const int n = 200000;
    for (int i = 0; i < n; ++i) acc.add(static_cast<double>(sample_poisson(mean, rng)));
    EXPECT_NEAR(acc.mean(), mean, 4 * std::sqrt(mean / n)) << mean;
    // Var of the sample variance of a Poisson is about (mean + 2 mean^2) / n.
    EXPECT_NEAR(acc.var(), mean, 4 * std::sqrt((mean + 2 * mean * mean) / n)) << mean;
  }
}

TEST(Poisson, GoodnessOfFit) {
  for (double mean : {0.3, 2.5, 9.9, 10.0, 25.0, 160.0}) {
    Rng rng(static_cast<std::uint64_t>(mean * 1000) + 17);
    std::vector<std::int64_t> data(50000);
    for (auto& k : data) k = sample_poisson(mean, rng);
    auto gof = oracle::poisson_gof(data, mean);
    EXPECT_GT(gof.p_value, 1e-3) << "mean " << mean << " chi2 " << gof.statistic << " dof " << gof.dof;
  }
}

TEST(Poisson, RejectsBadMean) {
  Rng rng(1);
  EXPECT_THROW(sample_poisson(-1.0, rng), ConfigError);
  EXPECT_THROW(sample_poisson(std::nan(""), rng), ConfigError);
}

TEST(WeakPulse, SinglePulseSaturates) {
  Rng rng(5);
  for (int i = 0; i < 200; ++i) {
    auto s = sample_frame_weak_pulses({1e6, 1e6, 1e3, 50}, 1, rng);
    EXPECT_EQ(s, (CountSample{1, 1, 1, 1}));
  }
}

TEST(WeakPulse, ZeroMeanNeverClicks) {
  Rng rng(5);
  for (int i = 0; i < 200; ++i) {
    auto s = sample_frame_weak_pulses({0, 3, 0, 3}, 100, rng);
    EXPECT_EQ(s.n3, 0);
    EXPECT_EQ(s.n5, 0);
    EXPECT_LE(s.n4, 100);
  }
}

TEST(WeakPulse, MatchesPoissonAtLowPulseMean) {
  ExperimentConfig cfg;
  cfg.intensity = 10;
  cfg.visibility = 1;
  cfg.true_phase = pi / 3;
  cfg.frames = 3000;
  cfg.sampling_mode = SamplingMode::weak_pulse;
  cfg.pulses_per_frame = 10000;
  cfg.seed = 2024;
  auto frames = simulate_frames(cfg);
  auto m = channel_means(cfg.true_phase, cfg.intensity, cfg.visibility);
  const double means[4] = {m.m3, m.m4, m.m5, m.m6};
  for (int c = 0; c < 4; ++c) {
    std::vector<std::int64_t> data;
    MomentAcc acc;
    for (const auto& f : frames) {
      const std::int64_t k = c == 0 ? f.n3 : c == 1 ? f.n4 : c == 2 ? f.n5 : f.n6;
      data.push_back(k);
      acc.add(static_cast<double>(k));
    }
    const double n = static_cast<double>(frames.size());
    EXPECT_NEAR(acc.mean(), means[c], 3 * std::sqrt(means[c] / n) + 1e-12) << c;
    EXPECT_NEAR(acc.var(), means[c], 3 * std::sqrt((means[c] + 2 * means[c] * means[c]) / n) + 1e-12) << c;
    if (means[c] > 1) EXPECT_GT(oracle::poisson_gof(data, means[c]).p_value, 1e-3) << c;
  }
}

TEST(Jitter, ZeroSigmaIsIdentity) {
  Rng rng(8);
  for (double t : {-3.0, 0.0, 1.0, pi}) EXPECT_EQ(apply_phase_jitter(t, 0.0, rng), t);
}

TEST(Jitter, MeanAndWrap) {
  Rng rng(11);
  const double sigma = 0.05, mean = 0.9;
  MomentAcc acc;
  const int n = 100000;
  for (int i = 0; i < n; ++i) acc.add(apply_phase_jitter(mean, sigma, rng));
  EXPECT_NEAR(acc.mean(), mean, 3 * sigma / std::sqrt(n));
  EXPECT_NEAR(std::sqrt(acc.var()), sigma, 0.01 * sigma);

  for (int i = 0; i < 10000; ++i) {
    const double t = apply_phase_jitter(pi, 0.3, rng);
    ASSERT_GT(t, -pi);
    ASSERT_LE(t, pi);
  }
}

TEST(Config, Validation) {
  ExperimentConfig ok;
  EXPECT_NO_THROW(ok.validate());
  auto bad = ok;
  bad.intensity = 0;
  EXPECT_THROW(bad.validate(), ConfigError);
  bad = ok;
  bad.visibility = 1.5;
  EXPECT_THROW(bad.validate(), ConfigError);
  bad = ok;
  bad.frames = 0;
  EXPECT_THROW(bad.validate(), ConfigError);
  bad = ok;
  bad.jitter_sigma = -0.1;
  EXPECT_THROW(bad.validate(), ConfigError);
  bad = ok;
  bad.pulses_per_frame = 0;
  EXPECT_THROW(bad.validate(), ConfigError);
}

TEST(Simulate, IndependentOfWorkerCount) {
  ExperimentConfig cfg;
  cfg.intensity = 12;
  cfg.visibility = 0.9;
  cfg.true_phase = 0.4;
  cfg.frames = 5001;
  cfg.jitter_sigma = 0.02;
  cfg.seed = 77;
  auto one = simulate_frames(cfg, 3, 1);
  for (int w : {2, 3, 8}) EXPECT_EQ(simulate_frames(cfg, 3, w), one) << w;
  EXPECT_EQ(simulate_frame(cfg, 3, 4321), one[4321]);
}

TEST(Simulate, StreamsDiffer) {
  ExperimentConfig cfg;
  cfg.intensity = 50;
  cfg.frames = 50;
  EXPECT_NE(simulate_frames(cfg, 0), simulate_frames(cfg, 1));
  auto other = cfg;
  other.seed = 2;
  EXPECT_NE(simulate_frames(cfg, 0), simulate_frames(other, 0));
}

TEST(Angles, WrapRange) {
  EXPECT_DOUBLE_EQ(wrap_phase(pi), pi);
  EXPECT_DOUBLE_EQ(wrap_phase(-pi), pi);
  EXPECT_NEAR(wrap_phase(3 * pi / 2), -pi / 2, 1e-15);
  EXPECT_NEAR(circular_distance(3.1, -3.1), 2 * pi - 6.2, 1e-12);
}
