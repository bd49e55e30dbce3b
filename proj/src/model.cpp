#include "phaselab/model.hpp"

#include <cmath>
#include <random>
#include <string>

#include "phaselab/angles.hpp"
#include "phaselab/errors.hpp"
#include "phaselab/parallel.hpp"

namespace phaselab {

std::string_view sampling_mode_name(SamplingMode mode) {
  return mode == SamplingMode::weak_pulse ? "weak_pulse" : "direct_poisson";
}

SamplingMode parse_sampling_mode(std::string_view name) {
  if (name == "direct_poisson") return SamplingMode::direct_poisson;
  if (name == "weak_pulse") return SamplingMode::weak_pulse;
  throw ConfigError("sampling_mode must be direct_poisson or weak_pulse, got '" + std::string(name) + "'");
}

void ExperimentConfig::validate() const {
  if (!(intensity > 0) || !std::isfinite(intensity)) throw ConfigError("intensity must be > 0");
  if (!(visibility >= 0 && visibility <= 1)) throw ConfigError("visibility must lie in [0, 1]");
  if (!std::isfinite(true_phase)) throw ConfigError("true_phase must be finite");
  if (frames < 1) throw ConfigError("frames must be >= 1");
  if (!(jitter_sigma >= 0) || !std::isfinite(jitter_sigma)) throw ConfigError("jitter_sigma must be >= 0");
  if (pulses_per_frame < 1) throw ConfigError("pulses_per_frame must be >= 1");
}

ChannelMeans channel_means(double true_phase, double intensity, double visibility) {
  if (!(intensity > 0) || !std::isfinite(intensity)) throw ConfigError("intensity must be > 0");
  if (!(visibility >= 0 && visibility <= 1)) throw ConfigError("visibility must lie in [0, 1]");
  if (!std::isfinite(true_phase)) throw ConfigError("true_phase must be finite");
  const double half = 0.5 * intensity;
  // The smaller mean of each pair is N minus the larger one; that subtraction
  // is exact (Sterbenz), so each pair sums to exactly N.
  auto pair = [&](double x, double& plus, double& minus) {
    const double larger = half + half * std::abs(x);
    const double smaller = intensity - larger;
    plus = x >= 0 ? larger : smaller;
    minus = x >= 0 ? smaller : larger;
  };
  ChannelMeans m;
  pair(visibility * std::cos(true_phase), m.m3, m.m4);
  pair(visibility * std::sin(true_phase), m.m5, m.m6);
  return m;
}

namespace {

std::int64_t poisson_inversion(double mean, Rng& rng) {
  double p = std::exp(-mean);
  double cdf = p;
  const double u = rng.uniform();
  std::int64_t k = 0;
  while (u > cdf && k < 1000) {
    ++k;
    p *= mean / static_cast<double>(k);
    cdf += p;
  }
  return k;
}

// W. Hormann, "The transformed rejection method for generating Poisson random
// variables", Insurance: Mathematics and Economics 12 (1993).
std::int64_t poisson_ptrs(double mean, Rng& rng) {
  const double smu = std::sqrt(mean);
  const double b = 0.931 + 2.53 * smu;
  const double a = -0.059 + 0.02483 * b;
  const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
  const double vr = 0.9277 - 3.6224 / (b - 2.0);
  const double log_mean = std::log(mean);
  for (;;) {
    const double u = rng.uniform() - 0.5;
    const double v = rng.uniform();
    const double us = 0.5 - std::abs(u);
    const double k = std::floor((2.0 * a / us + b) * u + mean + 0.43);
    if (us >= 0.07 && v <= vr) return static_cast<std::int64_t>(k);
    if (k < 0 || (us < 0.013 && v > us)) continue;
    if (std::log(v) + std::log(inv_alpha) - std::log(a / (us * us) + b) <=
        -mean + k * log_mean - std::lgamma(k + 1.0)) {
      return static_cast<std::int64_t>(k);
    }
  }
}

std::int64_t count_clicks(double channel_mean, std::int64_t pulses, Rng& rng) {
  if (channel_mean <= 0) return 0;
  const double p_click = -std::expm1(-channel_mean / static_cast<double>(pulses));
  std::int64_t clicks = 0;
  for (std::int64_t i = 0; i < pulses; ++i) clicks += rng.uniform() < p_click ? 1 : 0;
  return clicks;
}

}  // namespace

std::int64_t sample_poisson(double mean, Rng& rng) {
  if (!(mean >= 0) || !std::isfinite(mean)) throw ConfigError("Poisson mean must be finite and >= 0");
  if (mean == 0) return 0;
  return mean < 10.0 ? poisson_inversion(mean, rng) : poisson_ptrs(mean, rng);
}

CountSample sample_frame(const ChannelMeans& means, Rng& rng) {
  CountSample s;
  s.n3 = sample_poisson(means.m3, rng);
  s.n4 = sample_poisson(means.m4, rng);
  s.n5 = sample_poisson(means.m5, rng);
  s.n6 = sample_poisson(means.m6, rng);
  return s;
}

CountSample sample_frame_weak_pulses(const ChannelMeans& means, std::int64_t pulses, Rng& rng) {
  if (pulses < 1) throw ConfigError("pulses_per_frame must be >= 1");
  CountSample s;
  s.n3 = count_clicks(means.m3, pulses, rng);
  s.n4 = count_clicks(means.m4, pulses, rng);
  s.n5 = count_clicks(means.m5, pulses, rng);
  s.n6 = count_clicks(means.m6, pulses, rng);
  return s;
}

CountSample sample_frame_weak_pulses(const ExperimentConfig& config, Rng& rng) {
  return sample_frame_weak_pulses(channel_means(config.true_phase, config.intensity, config.visibility),
                                  config.pulses_per_frame, rng);
}

double apply_phase_jitter(double true_phase, double jitter_sigma, Rng& rng) {
  if (jitter_sigma < 0) throw ConfigError("jitter_sigma must be >= 0");
  if (jitter_sigma == 0) return true_phase;
  std::normal_distribution<double> offset(0.0, jitter_sigma);
  return wrap_phase(true_phase + offset(rng));
}

CountSample simulate_frame(const ExperimentConfig& config, std::uint64_t stream, std::uint64_t frame_index) {
  Rng rng = substream(config.seed, stream, frame_index);
  const double phase = apply_phase_jitter(config.true_phase, config.jitter_sigma, rng);
  const ChannelMeans means = channel_means(phase, config.intensity, config.visibility);
  if (config.sampling_mode == SamplingMode::weak_pulse) {
    return sample_frame_weak_pulses(means, config.pulses_per_frame, rng);
  }
  return sample_frame(means, rng);
}

std::vector<CountSample> simulate_frames(const ExperimentConfig& config, std::uint64_t stream, int workers) {
  config.validate();
  std::vector<CountSample> frames(static_cast<std::size_t>(config.frames));
  parallel_for(frames.size(), workers, [&](std::size_t i) { frames[i] = simulate_frame(config, stream, i); });
  return frames;
}

}  // namespace phaselab
