#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "phaselab/estimators.hpp"

namespace phaselab {

/// Neumaier-compensated running sum.
class CompensatedSum {
 public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      comp_ += (sum_ - t) + x;
    } else {
      comp_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

struct BootstrapOptions {
  int replicates = 400;
  double level = 0.68;  ///< two-sided coverage of the percentile interval
  std::uint64_t seed = 0;
};

struct Interval {
  double low = 0.0;
  double high = 0.0;
  double std_error = 0.0;  ///< standard deviation of the bootstrap replicates
};

/// Statistic over a resampled set, given as indices into the caller's data.
using IndexStatistic = std::function<double(std::span<const std::size_t>)>;

/// Percentile bootstrap over `n_items` items. The interval is widened, if
/// needed, to contain the statistic of the original sample.
Interval bootstrap_interval(std::size_t n_items, const IndexStatistic& statistic, const BootstrapOptions& options = {});

/// Several statistics evaluated on shared resamples; fills one value per
/// statistic into the output span.
using MultiStatistic = std::function<void(std::span<const std::size_t>, std::span<double>)>;
std::vector<Interval> bootstrap_intervals(std::size_t n_items, std::size_t n_stats, const MultiStatistic& statistics,
                                          const BootstrapOptions& options = {});

/// Same, for a statistic of a value sequence.
Interval bootstrap_interval(std::span<const double> values, const std::function<double(std::span<const double>)>& statistic,
                            const BootstrapOptions& options = {});

struct DispersionStat {
  double sigma2 = 0.0;
  std::int64_t n_valid = 0;
  std::int64_t n_invalid = 0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  double std_error = 0.0;
};

/// 1 - |<exp(i theta)>|^2 of a nonempty set of phases, with bootstrap interval.
DispersionStat circular_dispersion(std::span<const double> phases, const BootstrapOptions& options = {});

/// Dispersion of the valid estimates; invalid ones are only counted.
DispersionStat circular_dispersion(std::span<const PhaseEstimate> estimates, const BootstrapOptions& options = {});

/// Mean resultant <exp(i theta)> as (cos, sin) means, compensated summation.
struct Resultant {
  double c = 0.0;
  double s = 0.0;
};
Resultant mean_resultant(std::span<const double> phases);

/// wrap(arg <exp(i theta)> - true_phase). Throws NumericalError when the
/// resultant vanishes.
double circular_bias(std::span<const double> phases, double true_phase);

/// Fraction of phases within circular distance `window` of true_phase.
double hit_frequency(std::span<const double> phases, double true_phase, double window);

double efficiency_difference(double f_p, double f_g);

struct EfficiencyPoint {
  double window = 0.0;
  double f_g = 0.0;  ///< NFM hit frequency
  double f_p = 0.0;  ///< constrained-ML hit frequency
  double delta_e = 0.0;
  double std_error = 0.0;
};

/// Phases of the valid entries.
std::vector<double> valid_phases(std::span<const PhaseEstimate> estimates);

}  // namespace phaselab
