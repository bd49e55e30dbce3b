#include "phaselab/harness.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "phaselab/angles.hpp"
#include "phaselab/errors.hpp"
#include "phaselab/parallel.hpp"
#include "phaselab/theory.hpp"

namespace phaselab {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

enum StreamSalt : std::uint64_t {
  kIntensitySalt = 1,
  kWindowSalt = 2,
  kWindowBaselineSalt = 3,
  kPhaseSalt = 4,
  kBiasSalt = 5,
};

std::uint64_t stream_id(StreamSalt salt, std::size_t point) { return (static_cast<std::uint64_t>(salt) << 32) | point; }

BootstrapOptions point_bootstrap(const SweepOptions& options, std::uint64_t seed, std::uint64_t stream) {
  BootstrapOptions b = options.bootstrap;
  std::uint64_t state = seed ^ (stream * 0x9e3779b97f4a7c15ULL) ^ options.bootstrap.seed;
  b.seed = splitmix64(state);
  return b;
}

// Unit vectors of one method's estimates; invalid frames are flagged and
// skipped by every statistic.
struct PhaseColumns {
  std::vector<double> cos, sin, theta;
  std::vector<unsigned char> valid;
  std::int64_t n_valid = 0;

  explicit PhaseColumns(const std::vector<PhaseEstimate>& estimates)
      : cos(estimates.size()), sin(estimates.size()), theta(estimates.size()), valid(estimates.size()) {
    for (std::size_t i = 0; i < estimates.size(); ++i) {
      const auto& e = estimates[i];
      valid[i] = e.valid ? 1 : 0;
      if (e.valid) {
        cos[i] = std::cos(e.theta);
        sin[i] = std::sin(e.theta);
        theta[i] = e.theta;
        ++n_valid;
      }
    }
  }

  std::int64_t n_invalid() const { return static_cast<std::int64_t>(valid.size()) - n_valid; }
};

struct ResultantSum {
  CompensatedSum c, s;
  std::int64_t n = 0;

  void add(const PhaseColumns& p, std::size_t i) {
    if (!p.valid[i]) return;
    c.add(p.cos[i]);
    s.add(p.sin[i]);
    ++n;
  }
  double dispersion() const {
    if (n == 0) return kNaN;
    const double nn = static_cast<double>(n);
    const double mc = c.value() / nn;
    const double ms = s.value() / nn;
    return std::clamp(1.0 - (mc * mc + ms * ms), 0.0, 1.0);
  }
  double angle() const { return n == 0 ? kNaN : std::atan2(s.value(), c.value()); }
};

void require_valid(const PhaseColumns& p, Method method, const char* where) {
  if (p.n_valid < 10) {
    throw NumericalError(std::string(where) + ": fewer than 10 valid " + std::string(method_name(method)) +
                         " estimates");
  }
}

double theory_or_nan(Formula f, double n, double v, double phase) {
  try {
    return evaluate(f, n, v, phase);
  } catch (const ConfigError&) {
    return kNaN;
  }
}

std::string prefixed(Method m, std::string_view suffix) { return std::string(method_name(m)) + "_" + std::string(suffix); }

void add_dispersion_columns(std::vector<std::string>& columns, Method m) {
  for (const char* s : {"sigma2", "ci_low", "ci_high", "n_invalid"}) columns.push_back(prefixed(m, s));
}

RunConfig echo(const ExperimentConfig& config, std::map<std::string, std::vector<double>> grids) {
  return RunConfig{config, std::move(grids)};
}

}  // namespace

std::string_view scenario_name(Scenario scenario) {
  switch (scenario) {
    case Scenario::intensity_sweep: return "intensity_sweep";
    case Scenario::window_sweep: return "window_sweep";
    case Scenario::phase_sweep: return "phase_sweep";
    case Scenario::bias_sweep: return "bias_sweep";
  }
  return "intensity_sweep";
}

std::size_t SweepResult::column_index(std::string_view name) const {
  const auto it = std::find(columns.begin(), columns.end(), name);
  if (it == columns.end()) throw ConfigError("sweep result has no column '" + std::string(name) + "'");
  return static_cast<std::size_t>(it - columns.begin());
}

bool SweepResult::has_column(std::string_view name) const {
  return std::find(columns.begin(), columns.end(), name) != columns.end();
}

double SweepResult::value(std::size_t row, std::string_view name) const { return rows.at(row).at(column_index(name)); }

std::vector<double> SweepResult::column(std::string_view name) const {
  const std::size_t k = column_index(name);
  std::vector<double> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(r.at(k));
  return out;
}

const std::vector<PhaseEstimate>& FrameEstimates::of(Method method) const {
  for (std::size_t i = 0; i < methods.size(); ++i)
    if (methods[i] == method) return by_method[i];
  throw ConfigError("no estimates for method " + std::string(method_name(method)));
}

FrameEstimates estimate_frames(const ExperimentConfig& config, std::uint64_t stream, std::span<const Method> methods,
                               int workers) {
  config.validate();
  FrameEstimates out;
  out.methods.assign(methods.begin(), methods.end());
  const auto n = static_cast<std::size_t>(config.frames);
  out.by_method.assign(methods.size(), std::vector<PhaseEstimate>(n));
  parallel_for(n, workers, [&](std::size_t i) {
    const CountSample sample = simulate_frame(config, stream, i);
    for (std::size_t m = 0; m < methods.size(); ++m) out.by_method[m][i] = estimate(methods[m], sample);
  });
  return out;
}

std::vector<double> default_intensity_grid() {
  std::vector<double> g(16);
  const double lo = std::log(0.1), hi = std::log(60.0);
  for (std::size_t i = 0; i < g.size(); ++i) g[i] = std::exp(lo + (hi - lo) * static_cast<double>(i) / 15.0);
  return g;
}

std::vector<double> default_window_grid() {
  std::vector<double> g(32);
  for (std::size_t i = 0; i < g.size(); ++i) g[i] = 0.05 + (kPi - 0.05) * static_cast<double>(i) / 31.0;
  g.back() = kPi;
  return g;
}

std::vector<double> default_phase_grid() {
  std::vector<double> g;
  for (int k = 0; k <= 8; ++k) g.push_back(k * kPi / 16.0);
  return g;
}

std::vector<double> default_visibility_grid() {
  std::vector<double> g;
  for (int k = 10; k >= 1; --k) g.push_back(k / 10.0);
  return g;
}

std::int64_t frames_for_intensity(std::int64_t base_frames, double frames_scale, double intensity) {
  if (!(intensity > 0)) throw ConfigError("intensity grid values must be > 0");
  if (frames_scale <= 0) return base_frames;
  return std::max<std::int64_t>(base_frames, static_cast<std::int64_t>(std::ceil(frames_scale / intensity)));
}

SweepResult run_intensity_sweep(const ExperimentConfig& base, std::span<const double> intensity_grid,
                                double frames_scale, const SweepOptions& options) {
  if (intensity_grid.empty()) throw ConfigError("intensity grid is empty");
  base.validate();
  const Method methods[] = {Method::nfm, Method::ml_constrained, Method::ml_unconstrained};

  SweepResult result;
  result.scenario = Scenario::intensity_sweep;
  result.config_echo = echo(base, {{"intensity", {intensity_grid.begin(), intensity_grid.end()}},
                                   {"frames_scale", {frames_scale}}});
  result.columns = {"intensity"};
  for (Method m : methods) add_dispersion_columns(result.columns, m);
  for (const char* c : {"diff_nfm_ml", "diff_nfm_ml_ci_low", "diff_nfm_ml_ci_high", "reldiff_nfm_ml",
                        "reldiff_nfm_ml_ci_low", "reldiff_nfm_ml_ci_high", "reldiff_nfm_mlu",
                        "reldiff_nfm_mlu_ci_low", "reldiff_nfm_mlu_ci_high", "theory_nfm_asym",
                        "theory_ml_unconstr_asym", "theory_crlb_asym", "frames"})
    result.columns.emplace_back(c);

  for (std::size_t p = 0; p < intensity_grid.size(); ++p) {
    ExperimentConfig cfg = base;
    cfg.intensity = intensity_grid[p];
    cfg.frames = frames_for_intensity(base.frames, frames_scale, cfg.intensity);
    cfg.validate();
    const std::uint64_t stream = stream_id(kIntensitySalt, p);
    const FrameEstimates est = estimate_frames(cfg, stream, methods, options.workers);
    const PhaseColumns nfm(est.of(Method::nfm)), ml(est.of(Method::ml_constrained)),
        mlu(est.of(Method::ml_unconstrained));
    require_valid(nfm, Method::nfm, "intensity sweep");
    require_valid(ml, Method::ml_constrained, "intensity sweep");
    require_valid(mlu, Method::ml_unconstrained, "intensity sweep");

    // 0..2 dispersions, 3 difference, 4..5 relative differences
    auto stats = [&](std::span<const std::size_t> idx, std::span<double> out) {
      ResultantSum a, b, c;
      for (std::size_t i : idx) {
        a.add(nfm, i);
        b.add(ml, i);
        c.add(mlu, i);
      }
      out[0] = a.dispersion();
      out[1] = b.dispersion();
      out[2] = c.dispersion();
      out[3] = out[0] - out[1];
      out[4] = out[3] / out[0];
      out[5] = (out[0] - out[2]) / out[0];
    };
    std::vector<double> point(6);
    std::vector<std::size_t> all(static_cast<std::size_t>(cfg.frames));
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    stats(all, point);
    const auto ci = bootstrap_intervals(all.size(), 6, stats, point_bootstrap(options, cfg.seed, stream));

    std::vector<double> row = {cfg.intensity};
    const PhaseColumns* cols[] = {&nfm, &ml, &mlu};
    for (int k = 0; k < 3; ++k)
      row.insert(row.end(), {point[k], ci[k].low, ci[k].high, static_cast<double>(cols[k]->n_invalid())});
    for (int k = 3; k < 6; ++k) row.insert(row.end(), {point[k], ci[k].low, ci[k].high});
    row.push_back(theory_or_nan(Formula::nfm_asym, cfg.intensity, cfg.visibility, cfg.true_phase));
    row.push_back(theory_or_nan(Formula::ml_unconstr_asym, cfg.intensity, cfg.visibility, cfg.true_phase));
    row.push_back(theory_or_nan(Formula::crlb_asym, cfg.intensity, cfg.visibility, cfg.true_phase));
    row.push_back(static_cast<double>(cfg.frames));
    result.rows.push_back(std::move(row));
  }
  return result;
}

SweepResult run_window_sweep(const ExperimentConfig& config, std::span<const double> window_grid,
                             const SweepOptions& options, std::int64_t baseline_frames) {
  if (window_grid.empty()) throw ConfigError("window grid is empty");
  for (double w : window_grid)
    if (!(w > 0 && w <= kPi)) throw ConfigError("window grid values must lie in (0, pi]");
  config.validate();
  const Method methods[] = {Method::nfm, Method::ml_constrained};

  // Circular distances to the true phase, NaN for invalid frames.
  auto distances = [&](const std::vector<PhaseEstimate>& est) {
    std::vector<double> d(est.size(), kNaN);
    for (std::size_t i = 0; i < est.size(); ++i)
      if (est[i].valid) d[i] = circular_distance(est[i].theta, config.true_phase);
    return d;
  };
  const std::size_t nw = window_grid.size();
  // Per window: f_g, f_p over the given frames (each over its own valid set).
  auto frequencies = [&](const std::vector<double>& dg, const std::vector<double>& dp,
                         std::span<const std::size_t> idx, std::vector<double>& fg, std::vector<double>& fp) {
    std::vector<std::int64_t> hg(nw, 0), hp(nw, 0);
    std::int64_t ng = 0, np = 0;
    for (std::size_t i : idx) {
      if (!std::isnan(dg[i])) {
        ++ng;
        for (std::size_t w = 0; w < nw; ++w) hg[w] += dg[i] <= window_grid[w] ? 1 : 0;
      }
      if (!std::isnan(dp[i])) {
        ++np;
        for (std::size_t w = 0; w < nw; ++w) hp[w] += dp[i] <= window_grid[w] ? 1 : 0;
      }
    }
    fg.assign(nw, kNaN);
    fp.assign(nw, kNaN);
    for (std::size_t w = 0; w < nw; ++w) {
      if (ng > 0) fg[w] = static_cast<double>(hg[w]) / static_cast<double>(ng);
      if (np > 0) fp[w] = static_cast<double>(hp[w]) / static_cast<double>(np);
    }
  };

  const std::uint64_t stream = stream_id(kWindowSalt, 0);
  const FrameEstimates est = estimate_frames(config, stream, methods, options.workers);
  const std::vector<double> dg = distances(est.of(Method::nfm));
  const std::vector<double> dp = distances(est.of(Method::ml_constrained));
  const std::int64_t invalid_g = std::count_if(dg.begin(), dg.end(), [](double x) { return std::isnan(x); });
  const std::int64_t invalid_p = std::count_if(dp.begin(), dp.end(), [](double x) { return std::isnan(x); });
  if (static_cast<std::int64_t>(dg.size()) - std::max(invalid_g, invalid_p) < 10)
    throw NumericalError("window sweep: fewer than 10 valid estimates");

  std::vector<std::size_t> all(dg.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  std::vector<double> fg, fp;
  frequencies(dg, dp, all, fg, fp);
  const auto ci = bootstrap_intervals(
      all.size(), nw,
      [&](std::span<const std::size_t> idx, std::span<double> out) {
        std::vector<double> g, p;
        frequencies(dg, dp, idx, g, p);
        for (std::size_t w = 0; w < nw; ++w) out[w] = efficiency_difference(p[w], g[w]);
      },
      point_bootstrap(options, config.seed, stream));

  std::vector<double> baseline(nw, kNaN);
  if (baseline_frames > 0) {
    ExperimentConfig big = config;
    big.frames = baseline_frames;
    const FrameEstimates b = estimate_frames(big, stream_id(kWindowBaselineSalt, 0), methods, options.workers);
    const std::vector<double> bg = distances(b.of(Method::nfm));
    const std::vector<double> bp = distances(b.of(Method::ml_constrained));
    std::vector<std::size_t> ball(bg.size());
    for (std::size_t i = 0; i < ball.size(); ++i) ball[i] = i;
    std::vector<double> g, p;
    frequencies(bg, bp, ball, g, p);
    for (std::size_t w = 0; w < nw; ++w) baseline[w] = efficiency_difference(p[w], g[w]);
  }

  SweepResult result;
  result.scenario = Scenario::window_sweep;
  result.config_echo = echo(config, {{"window", {window_grid.begin(), window_grid.end()}},
                                     {"baseline_frames", {static_cast<double>(baseline_frames)}}});
  result.columns = {"window", "f_g", "f_p", "delta_e", "delta_e_ci_low", "delta_e_ci_high", "delta_e_stderr",
                    "nfm_n_invalid", "ml_n_invalid", "baseline_delta_e", "frames"};
  for (std::size_t w = 0; w < nw; ++w) {
    result.rows.push_back({window_grid[w], fg[w], fp[w], efficiency_difference(fp[w], fg[w]), ci[w].low, ci[w].high,
                           ci[w].std_error, static_cast<double>(invalid_g), static_cast<double>(invalid_p),
                           baseline[w], static_cast<double>(config.frames)});
  }
  return result;
}

SweepResult run_phase_sweep(const ExperimentConfig& config, std::span<const double> phase_grid,
                            const SweepOptions& options) {
  if (phase_grid.empty()) throw ConfigError("phase grid is empty");
  config.validate();
  const Method methods[] = {Method::nfm, Method::ml_unconstrained, Method::ml_constrained};

  SweepResult result;
  result.scenario = Scenario::phase_sweep;
  result.config_echo = echo(config, {{"phase", {phase_grid.begin(), phase_grid.end()}}});
  result.columns = {"phase"};
  for (Method m : methods) add_dispersion_columns(result.columns, m);
  for (const char* c : {"ml_minus_mlu", "ml_minus_mlu_ci_low", "ml_minus_mlu_ci_high", "theory_nfm_asym",
                        "theory_ml_unconstr_asym", "theory_ml_constr_asym", "theory_crlb_asym", "frames",
                        "jitter_sigma"})
    result.columns.emplace_back(c);

  for (std::size_t p = 0; p < phase_grid.size(); ++p) {
    ExperimentConfig cfg = config;
    cfg.true_phase = phase_grid[p];
    const std::uint64_t stream = stream_id(kPhaseSalt, p);
    const FrameEstimates est = estimate_frames(cfg, stream, methods, options.workers);
    const PhaseColumns nfm(est.of(Method::nfm)), mlu(est.of(Method::ml_unconstrained)),
        ml(est.of(Method::ml_constrained));
    require_valid(nfm, Method::nfm, "phase sweep");
    require_valid(mlu, Method::ml_unconstrained, "phase sweep");
    require_valid(ml, Method::ml_constrained, "phase sweep");

    auto stats = [&](std::span<const std::size_t> idx, std::span<double> out) {
      ResultantSum a, b, c;
      for (std::size_t i : idx) {
        a.add(nfm, i);
        b.add(mlu, i);
        c.add(ml, i);
      }
      out[0] = a.dispersion();
      out[1] = b.dispersion();
      out[2] = c.dispersion();
      out[3] = out[2] - out[1];
    };
    std::vector<std::size_t> all(static_cast<std::size_t>(cfg.frames));
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    std::vector<double> point(4);
    stats(all, point);
    const auto ci = bootstrap_intervals(all.size(), 4, stats, point_bootstrap(options, cfg.seed, stream));

    std::vector<double> row = {cfg.true_phase};
    const PhaseColumns* cols[] = {&nfm, &mlu, &ml};
    for (int k = 0; k < 3; ++k)
      row.insert(row.end(), {point[k], ci[k].low, ci[k].high, static_cast<double>(cols[k]->n_invalid())});
    row.insert(row.end(), {point[3], ci[3].low, ci[3].high});
    row.push_back(theory_or_nan(Formula::nfm_asym, cfg.intensity, cfg.visibility, cfg.true_phase));
    row.push_back(theory_or_nan(Formula::ml_unconstr_asym, cfg.intensity, cfg.visibility, cfg.true_phase));
    row.push_back(theory_or_nan(Formula::ml_constr_asym, cfg.intensity, cfg.visibility, cfg.true_phase));
    row.push_back(theory_or_nan(Formula::crlb_asym, cfg.intensity, cfg.visibility, cfg.true_phase));
    row.push_back(static_cast<double>(cfg.frames));
    row.push_back(cfg.jitter_sigma);
    result.rows.push_back(std::move(row));
  }
  return result;
}

SweepResult run_bias_sweep(bool expected_v_one, std::span<const double> actual_visibility_grid,
                           std::span<const double> phase_grid, const ExperimentConfig& config,
                           const SweepOptions& options) {
  if (actual_visibility_grid.empty() || phase_grid.empty()) throw ConfigError("bias sweep grids must be nonempty");
  config.validate();
  const Method method = expected_v_one ? Method::ml_single_param : Method::ml_constrained;
  const Method methods[] = {method};

  SweepResult result;
  result.scenario = Scenario::bias_sweep;
  result.config_echo = echo(config, {{"visibility", {actual_visibility_grid.begin(), actual_visibility_grid.end()}},
                                     {"phase", {phase_grid.begin(), phase_grid.end()}},
                                     {"expected_v_one", {expected_v_one ? 1.0 : 0.0}}});
  result.columns = {"actual_visibility", "phase"};
  for (const char* s : {"bias", "bias_ci_low", "bias_ci_high", "bias_stderr", "sigma2", "ci_low", "ci_high",
                        "n_invalid"})
    result.columns.push_back(prefixed(method, s));
  result.columns.emplace_back("intensity");
  result.columns.emplace_back("frames");

  std::size_t point_index = 0;
  for (double v : actual_visibility_grid) {
    for (double phase : phase_grid) {
      ExperimentConfig cfg = config;
      cfg.visibility = v;
      cfg.true_phase = phase;
      cfg.validate();
      const std::uint64_t stream = stream_id(kBiasSalt, point_index++);
      const FrameEstimates est = estimate_frames(cfg, stream, methods, options.workers);
      const PhaseColumns cols(est.of(method));
      require_valid(cols, method, "bias sweep");

      auto stats = [&](std::span<const std::size_t> idx, std::span<double> out) {
        ResultantSum a;
        for (std::size_t i : idx) a.add(cols, i);
        out[0] = wrap_phase(a.angle() - phase);
        out[1] = a.dispersion();
      };
      std::vector<std::size_t> all(static_cast<std::size_t>(cfg.frames));
      for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
      std::vector<double> point(2);
      stats(all, point);
      const auto ci = bootstrap_intervals(all.size(), 2, stats, point_bootstrap(options, cfg.seed, stream));
      result.rows.push_back({v, phase, point[0], ci[0].low, ci[0].high, ci[0].std_error, point[1], ci[1].low,
                             ci[1].high, static_cast<double>(cols.n_invalid()), cfg.intensity,
                             static_cast<double>(cfg.frames)});
    }
  }
  return result;
}

JitterCalibration calibrate_jitter(const SweepResult& phase_sweep, Method method, const BootstrapOptions& options) {
  std::string theory_column;
  if (method == Method::nfm) {
    theory_column = "theory_nfm_asym";
  } else if (method == Method::ml_unconstrained) {
    theory_column = "theory_ml_unconstr_asym";
  } else {
    throw ConfigError("jitter calibration needs nfm or mlu dispersions (the ones with a closed-form baseline)");
  }
  const std::vector<double> observed = phase_sweep.column(prefixed(method, "sigma2"));
  const std::vector<double> theory = phase_sweep.column(theory_column);
  if (observed.empty()) throw NumericalError("jitter calibration: empty phase sweep");

  std::vector<double> excess(observed.size());
  for (std::size_t i = 0; i < observed.size(); ++i) {
    if (!std::isfinite(observed[i]) || !std::isfinite(theory[i]))
      throw NumericalError("jitter calibration: missing dispersion or theory value");
    excess[i] = observed[i] - theory[i];
  }
  auto estimate_sigma = [&](std::span<const std::size_t> idx) {
    double sum = 0.0;
    for (std::size_t i : idx) sum += std::max(0.0, excess[i]);
    return std::sqrt(sum / static_cast<double>(idx.size()));
  };

  JitterCalibration out;
  out.method = method;
  double raw = 0.0;
  for (double e : excess) raw += e;
  out.mean_excess = raw / static_cast<double>(excess.size());
  out.clamped = out.mean_excess < 0;
  std::vector<std::size_t> all(excess.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  if (out.clamped) return out;
  out.sigma_jitter = estimate_sigma(all);
  if (excess.size() >= 2) out.uncertainty = bootstrap_interval(excess.size(), estimate_sigma, options).std_error;
  return out;
}

}  // namespace phaselab
