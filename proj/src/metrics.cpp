#include "phaselab/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "phaselab/angles.hpp"
#include "phaselab/errors.hpp"
#include "phaselab/rng.hpp"

namespace phaselab {

namespace {

constexpr std::uint64_t kBootstrapStream = 0xb0075742ULL;

__extension__ typedef unsigned __int128 uint128;

// Lemire's multiply-shift map of a 64-bit draw onto [0, n).
std::size_t uniform_index(Rng& rng, std::size_t n) {
  return static_cast<std::size_t>((static_cast<uint128>(rng()) * n) >> 64);
}

// Type-7 quantile of sorted data.
double quantile_sorted(const std::vector<double>& sorted, double q) {
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

double dispersion_of(std::span<const double> cosines, std::span<const double> sines,
                     std::span<const std::size_t> idx) {
  CompensatedSum c, s;
  for (std::size_t i : idx) {
    c.add(cosines[i]);
    s.add(sines[i]);
  }
  const double n = static_cast<double>(idx.size());
  const double mc = c.value() / n;
  const double ms = s.value() / n;
  return std::clamp(1.0 - (mc * mc + ms * ms), 0.0, 1.0);
}

}  // namespace

std::vector<Interval> bootstrap_intervals(std::size_t n_items, std::size_t n_stats, const MultiStatistic& statistics,
                                          const BootstrapOptions& options) {
  if (options.replicates < 200) throw ConfigError("bootstrap needs at least 200 replicates");
  if (!(options.level > 0 && options.level < 1)) throw ConfigError("bootstrap level must lie in (0, 1)");
  if (n_items < 2) throw NumericalError("bootstrap needs at least two values");

  std::vector<std::size_t> idx(n_items);
  for (std::size_t i = 0; i < n_items; ++i) idx[i] = i;
  std::vector<double> point(n_stats);
  statistics(idx, point);

  const auto reps_n = static_cast<std::size_t>(options.replicates);
  std::vector<std::vector<double>> reps(n_stats, std::vector<double>(reps_n));
  std::vector<double> values(n_stats);
  for (std::size_t r = 0; r < reps_n; ++r) {
    Rng rng = substream(options.seed, kBootstrapStream, r);
    for (auto& i : idx) i = uniform_index(rng, n_items);
    statistics(idx, values);
    for (std::size_t k = 0; k < n_stats; ++k) reps[k][r] = values[k];
  }

  const double tail = 0.5 * (1.0 - options.level);
  std::vector<Interval> out(n_stats);
  for (std::size_t k = 0; k < n_stats; ++k) {
    auto& rk = reps[k];
    CompensatedSum sum;
    for (double x : rk) sum.add(x);
    const double mean = sum.value() / static_cast<double>(reps_n);
    CompensatedSum sq;
    for (double x : rk) sq.add((x - mean) * (x - mean));
    std::sort(rk.begin(), rk.end());
    out[k].low = std::min(quantile_sorted(rk, tail), point[k]);
    out[k].high = std::max(quantile_sorted(rk, 1.0 - tail), point[k]);
    out[k].std_error = std::sqrt(sq.value() / static_cast<double>(reps_n - 1));
  }
  return out;
}

Interval bootstrap_interval(std::size_t n_items, const IndexStatistic& statistic, const BootstrapOptions& options) {
  return bootstrap_intervals(
      n_items, 1, [&](std::span<const std::size_t> idx, std::span<double> out) { out[0] = statistic(idx); },
      options)[0];
}

Interval bootstrap_interval(std::span<const double> values, const std::function<double(std::span<const double>)>& statistic,
                            const BootstrapOptions& options) {
  std::vector<double> scratch(values.size());
  return bootstrap_interval(
      values.size(),
      [&](std::span<const std::size_t> idx) {
        for (std::size_t k = 0; k < idx.size(); ++k) scratch[k] = values[idx[k]];
        return statistic(std::span<const double>(scratch.data(), idx.size()));
      },
      options);
}

Resultant mean_resultant(std::span<const double> phases) {
  if (phases.empty()) throw NumericalError("mean resultant of an empty phase set");
  CompensatedSum c, s;
  for (double t : phases) {
    c.add(std::cos(t));
    s.add(std::sin(t));
  }
  const double n = static_cast<double>(phases.size());
  return {c.value() / n, s.value() / n};
}

DispersionStat circular_dispersion(std::span<const double> phases, const BootstrapOptions& options) {
  if (phases.empty()) throw NumericalError("dispersion of an empty phase set");
  std::vector<double> cosines(phases.size()), sines(phases.size());
  for (std::size_t i = 0; i < phases.size(); ++i) {
    cosines[i] = std::cos(phases[i]);
    sines[i] = std::sin(phases[i]);
  }
  const Resultant r = mean_resultant(phases);
  DispersionStat out;
  out.sigma2 = std::clamp(1.0 - (r.c * r.c + r.s * r.s), 0.0, 1.0);
  out.n_valid = static_cast<std::int64_t>(phases.size());
  out.ci_low = out.ci_high = out.sigma2;
  if (phases.size() >= 2) {
    const Interval ci = bootstrap_interval(
        phases.size(), [&](std::span<const std::size_t> idx) { return dispersion_of(cosines, sines, idx); }, options);
    out.ci_low = ci.low;
    out.ci_high = ci.high;
    out.std_error = ci.std_error;
  }
  return out;
}

std::vector<double> valid_phases(std::span<const PhaseEstimate> estimates) {
  std::vector<double> out;
  out.reserve(estimates.size());
  for (const auto& e : estimates)
    if (e.valid) out.push_back(e.theta);
  return out;
}

DispersionStat circular_dispersion(std::span<const PhaseEstimate> estimates, const BootstrapOptions& options) {
  const std::vector<double> phases = valid_phases(estimates);
  DispersionStat out = circular_dispersion(std::span<const double>(phases), options);
  out.n_invalid = static_cast<std::int64_t>(estimates.size() - phases.size());
  return out;
}

double circular_bias(std::span<const double> phases, double true_phase) {
  const Resultant r = mean_resultant(phases);
  if (std::hypot(r.c, r.s) < 1e-12) throw NumericalError("circular bias undefined: resultant vector vanishes");
  return wrap_phase(std::atan2(r.s, r.c) - true_phase);
}

double hit_frequency(std::span<const double> phases, double true_phase, double window) {
  if (phases.empty()) throw NumericalError("hit frequency of an empty phase set");
  if (!(window > 0 && window <= kPi)) throw ConfigError("phase window must lie in (0, pi]");
  std::size_t hits = 0;
  for (double t : phases)
    if (circular_distance(t, true_phase) <= window) ++hits;
  return static_cast<double>(hits) / static_cast<double>(phases.size());
}

double efficiency_difference(double f_p, double f_g) { return f_p - f_g; }

}  // namespace phaselab
