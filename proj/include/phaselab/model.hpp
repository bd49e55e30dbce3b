#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include "phaselab/rng.hpp"

namespace phaselab {

enum class SamplingMode { direct_poisson, weak_pulse };

std::string_view sampling_mode_name(SamplingMode mode);
SamplingMode parse_sampling_mode(std::string_view name);

/// Controlled parameters of one simulated experiment.
struct ExperimentConfig {
  double intensity = 1.0;   ///< mean photons per frame in each quadrature pair (N)
  double visibility = 1.0;  ///< fringe visibility V in [0, 1]
  double true_phase = 0.0;  ///< radians
  std::int64_t frames = 1;
  std::uint64_t seed = 1;
  double jitter_sigma = 0.0;  ///< std. dev. of per-frame Gaussian phase offset, radians
  SamplingMode sampling_mode = SamplingMode::direct_poisson;
  std::int64_t pulses_per_frame = 1;  ///< only used in weak_pulse mode

  /// Throws ConfigError naming the first offending field.
  void validate() const;

  friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

/// Mean photocounts per frame of the four output channels.
struct ChannelMeans {
  double m3 = 0, m4 = 0, m5 = 0, m6 = 0;
};

/// One frame of detected counts (n3, n4, n5, n6).
struct CountSample {
  std::int64_t n3 = 0, n4 = 0, n5 = 0, n6 = 0;

  std::int64_t total() const { return n3 + n4 + n5 + n6; }
  friend bool operator==(const CountSample&, const CountSample&) = default;
};

/// Channel means of the four-port detection:
///   m3,4 = N/2 (1 +- V cos phase),  m5,6 = N/2 (1 +- V sin phase).
ChannelMeans channel_means(double true_phase, double intensity, double visibility);

/// Poisson variate. Sequential-search inversion below mean 10, Hormann's PTRS
/// transformed rejection at and above.
std::int64_t sample_poisson(double mean, Rng& rng);

CountSample sample_frame(const ChannelMeans& means, Rng& rng);

/// Accumulates `pulses` weak pulses per channel on click/no-click detectors.
/// Pulse i of channel c clicks with probability 1 - exp(-m_c / pulses).
CountSample sample_frame_weak_pulses(const ChannelMeans& means, std::int64_t pulses, Rng& rng);
CountSample sample_frame_weak_pulses(const ExperimentConfig& config, Rng& rng);

/// true_phase plus a N(0, jitter_sigma^2) offset, wrapped to (-pi, pi].
double apply_phase_jitter(double true_phase, double jitter_sigma, Rng& rng);

/// One frame of `config`, drawn from the substream (seed, stream, frame_index).
/// Jitter (if any) is applied first, then the configured sampler.
CountSample simulate_frame(const ExperimentConfig& config, std::uint64_t stream, std::uint64_t frame_index);

/// All config.frames frames; identical for any worker count.
std::vector<CountSample> simulate_frames(const ExperimentConfig& config, std::uint64_t stream = 0, int workers = 1);

}  // namespace phaselab
