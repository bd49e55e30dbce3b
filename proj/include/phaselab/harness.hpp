#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "phaselab/estimators.hpp"
#include "phaselab/metrics.hpp"
#include "phaselab/model.hpp"

namespace phaselab {

/// Experiment parameters plus the scenario grids (`grid_<name>` keys of a
/// config file, stored here without the prefix).
struct RunConfig {
  ExperimentConfig experiment;
  std::map<std::string, std::vector<double>> grids;

  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

enum class Scenario { intensity_sweep, window_sweep, phase_sweep, bias_sweep };

std::string_view scenario_name(Scenario scenario);

/// A table of sweep rows. Column 0 (and column 1 for the bias sweep) is the
/// independent variable.
struct SweepResult {
  Scenario scenario = Scenario::intensity_sweep;
  RunConfig config_echo;
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  std::size_t column_index(std::string_view name) const;  ///< throws ConfigError if absent
  bool has_column(std::string_view name) const;
  double value(std::size_t row, std::string_view column) const;
  std::vector<double> column(std::string_view name) const;
};

struct SweepOptions {
  int workers = 1;
  BootstrapOptions bootstrap;
};

/// Estimates of every frame of one simulated point, one vector per method.
struct FrameEstimates {
  std::vector<Method> methods;
  std::vector<std::vector<PhaseEstimate>> by_method;

  const std::vector<PhaseEstimate>& of(Method method) const;
};

FrameEstimates estimate_frames(const ExperimentConfig& config, std::uint64_t stream, std::span<const Method> methods,
                               int workers = 1);

std::vector<double> default_intensity_grid();   ///< 16 log-spaced points, 0.1 .. 60
std::vector<double> default_window_grid();      ///< 32 points, 0.05 .. pi
std::vector<double> default_phase_grid();       ///< k pi / 16, k = 0 .. 8
std::vector<double> default_visibility_grid();  ///< 1.0 down to 0.1 in steps of 0.1

/// Frames used at intensity N: max(base.frames, ceil(frames_scale / N)).
std::int64_t frames_for_intensity(std::int64_t base_frames, double frames_scale, double intensity);

/// NFM, constrained ML and unconstrained ML dispersions against N, with the
/// absolute and relative NFM - ML differences (paired bootstrap intervals).
SweepResult run_intensity_sweep(const ExperimentConfig& base, std::span<const double> intensity_grid,
                                double frames_scale, const SweepOptions& options = {});

/// Hit frequencies of NFM (f_g) and constrained ML (f_p) and their difference
/// per phase window, on one frame set. `baseline_frames` > 0 adds a
/// large-sample baseline_delta_e column from an independent run.
SweepResult run_window_sweep(const ExperimentConfig& config, std::span<const double> window_grid,
                             const SweepOptions& options = {}, std::int64_t baseline_frames = 200000);

/// NFM, unconstrained ML and constrained ML dispersions against true phase,
/// with theory baselines.
SweepResult run_phase_sweep(const ExperimentConfig& config, std::span<const double> phase_grid,
                            const SweepOptions& options = {});

/// Circular bias of the single-parameter estimator (expected_v_one) or of the
/// constrained ML estimator, simulated at each actual visibility and phase.
SweepResult run_bias_sweep(bool expected_v_one, std::span<const double> actual_visibility_grid,
                           std::span<const double> phase_grid, const ExperimentConfig& config,
                           const SweepOptions& options = {});

struct JitterCalibration {
  Method method = Method::nfm;
  double sigma_jitter = 0.0;
  double uncertainty = 0.0;
  double mean_excess = 0.0;
  bool clamped = false;  ///< the mean excess was negative; sigma_jitter is reported as 0
};

/// Jitter magnitude from the excess of observed over theoretical dispersion,
/// sqrt(mean over phases of max(0, sigma2_obs - sigma2_theory)), using
/// additivity of small dispersions. Uncertainty by bootstrap over the phase
/// grid.
/// `method` must be nfm or ml_unconstrained (the ones with a theory column).
JitterCalibration calibrate_jitter(const SweepResult& phase_sweep, Method method,
                                   const BootstrapOptions& options = {});

}  // namespace phaselab
