// phaselab: Monte Carlo interferometric phase-estimation lab.
//
// Exit codes: 0 success, 1 usage error, 2 configuration or input error,
// 3 numerical failure.

#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "phaselab/angles.hpp"
#include "phaselab/errors.hpp"
#include "phaselab/harness.hpp"
#include "phaselab/io.hpp"
#include "phaselab/parallel.hpp"
#include "phaselab/theory.hpp"

namespace {

using namespace phaselab;

struct ExperimentFlags {
  std::string config_path;
  std::optional<double> intensity, visibility, phase, jitter;
  std::optional<std::int64_t> frames, pulses;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> sampling_mode;
};

struct RunFlags {
  std::string out;
  int workers = default_workers();
  int replicates = 400;
  double level = 0.68;
};

void add_experiment_flags(CLI::App* cmd, ExperimentFlags& f) {
  cmd->add_option("--config", f.config_path, "Config file (key = value lines)")->check(CLI::ExistingFile);
  cmd->add_option("--intensity", f.intensity, "Mean photons per quadrature pair per frame (N)");
  cmd->add_option("--visibility", f.visibility, "Fringe visibility V in [0, 1]");
  cmd->add_option("--phase", f.phase, "True phase, radians");
  cmd->add_option("--frames", f.frames, "Frames per simulated point");
  cmd->add_option("--seed", f.seed, "Seed (fallback: PHASELAB_SEED, then 1)");
  cmd->add_option("--jitter", f.jitter, "Per-frame Gaussian phase jitter sigma, radians");
  cmd->add_option("--sampling-mode", f.sampling_mode, "direct_poisson or weak_pulse");
  cmd->add_option("--pulses", f.pulses, "Weak pulses per frame (weak_pulse mode)");
}

void add_run_flags(CLI::App* cmd, RunFlags& r, bool bootstrap) {
  cmd->add_option("--out", r.out, "Output file (default: standard output)");
  cmd->add_option("--workers", r.workers, "Worker threads; does not change results")->check(CLI::PositiveNumber);
  if (bootstrap) {
    cmd->add_option("--replicates", r.replicates, "Bootstrap replicates (>= 200)");
    cmd->add_option("--level", r.level, "Bootstrap confidence level");
  }
}

std::optional<std::uint64_t> env_seed() {
  const char* s = std::getenv("PHASELAB_SEED");
  if (s == nullptr || *s == '\0') return std::nullopt;
  try {
    std::size_t used = 0;
    const unsigned long long v = std::stoull(s, &used);
    if (used != std::string(s).size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw ConfigError("PHASELAB_SEED is not an unsigned integer");
  }
}

// Flags override the config file, which overrides the scenario defaults.
RunConfig resolve(const ExperimentFlags& f, RunConfig defaults) {
  RunConfig rc;
  if (!f.config_path.empty()) {
    rc = read_config(f.config_path, env_seed());
  } else {
    rc = std::move(defaults);
    if (auto s = env_seed()) rc.experiment.seed = *s;
  }
  ExperimentConfig& c = rc.experiment;
  if (f.intensity) c.intensity = *f.intensity;
  if (f.visibility) c.visibility = *f.visibility;
  if (f.phase) c.true_phase = *f.phase;
  if (f.jitter) c.jitter_sigma = *f.jitter;
  if (f.frames) c.frames = *f.frames;
  if (f.pulses) c.pulses_per_frame = *f.pulses;
  if (f.seed) c.seed = *f.seed;
  if (f.sampling_mode) c.sampling_mode = parse_sampling_mode(*f.sampling_mode);
  c.validate();
  return rc;
}

RunConfig defaults(double n, double v, double phase, std::int64_t frames, double jitter = 0.0) {
  RunConfig rc;
  rc.experiment.intensity = n;
  rc.experiment.visibility = v;
  rc.experiment.true_phase = phase;
  rc.experiment.frames = frames;
  rc.experiment.jitter_sigma = jitter;
  return rc;
}

std::vector<double> grid_or(const RunConfig& rc, const std::string& flag_value, const char* name,
                            std::vector<double> fallback) {
  if (!flag_value.empty()) return parse_grid(flag_value);
  if (auto it = rc.grids.find(name); it != rc.grids.end()) return it->second;
  return fallback;
}

double scalar_grid_or(const RunConfig& rc, const char* name, double fallback) {
  if (auto it = rc.grids.find(name); it != rc.grids.end() && !it->second.empty()) return it->second.front();
  return fallback;
}

SweepOptions sweep_options(const RunFlags& r) {
  SweepOptions o;
  o.workers = r.workers;
  o.bootstrap.replicates = r.replicates;
  o.bootstrap.level = r.level;
  return o;
}

template <class Writer>
void emit(const std::string& out_path, Writer&& write) {
  if (out_path.empty() || out_path == "-") {
    write(std::cout);
    std::cout.flush();
    return;
  }
  std::ofstream out(out_path, std::ios::binary);
  if (!out) throw ConfigError("cannot open '" + out_path + "' for writing");
  write(out);
}

void emit_sweep(const RunFlags& r, SweepResult result) {
  if (r.out.empty() || r.out == "-") {
    write_results_csv(std::cout, result);
    std::cout.flush();
  } else {
    write_results(result, r.out);
  }
}

std::vector<MetricRow> calibration_rows(const JitterCalibration& cal, std::int64_t n_points) {
  const std::string m(method_name(cal.method));
  return {
      {"sigma_jitter_" + m, cal.sigma_jitter, cal.sigma_jitter - cal.uncertainty,
       cal.sigma_jitter + cal.uncertainty, n_points, 0},
      {"mean_excess_" + m, cal.mean_excess, cal.mean_excess, cal.mean_excess, n_points, 0},
  };
}

int run(int argc, char** argv) {
  CLI::App app{"phaselab: Monte Carlo comparison of NFM and Poissonian ML phase estimators"};
  app.require_subcommand(1, 1);

  // simulate
  ExperimentFlags sim_f;
  RunFlags sim_r;
  auto* sim = app.add_subcommand("simulate", "Simulate count frames and write a counts CSV");
  add_experiment_flags(sim, sim_f);
  add_run_flags(sim, sim_r, false);

  // estimate
  std::string est_in, est_method = "nfm", est_metrics;
  std::optional<double> est_true_phase;
  RunFlags est_r;
  auto* est = app.add_subcommand("estimate", "Estimate the phase of every frame of a counts CSV");
  est->add_option("--in", est_in, "Counts CSV (frame,n3,n4,n5,n6)")->required()->check(CLI::ExistingFile);
  est->add_option("--method", est_method, "nfm, ml, mlu or ml1");
  est->add_option("--metrics", est_metrics, "Also write a metrics CSV (dispersion; bias with --true-phase)");
  est->add_option("--true-phase", est_true_phase, "True phase for the bias metric, radians");
  add_run_flags(est, est_r, true);

  // sweep-intensity
  ExperimentFlags si_f;
  RunFlags si_r;
  std::string si_grid;
  std::optional<double> si_scale;
  auto* si = app.add_subcommand("sweep-intensity", "NFM vs ML dispersion against intensity");
  add_experiment_flags(si, si_f);
  add_run_flags(si, si_r, true);
  si->add_option("--grid", si_grid, "Intensity grid (list, lin:a:b:n or log:a:b:n)");
  si->add_option("--frames-scale", si_scale, "Frames at N are max(frames, frames_scale / N)");

  // efficiency
  ExperimentFlags ef_f;
  RunFlags ef_r;
  std::string ef_grid;
  std::optional<std::int64_t> ef_baseline;
  auto* ef = app.add_subcommand("efficiency", "Hit-frequency difference of ML and NFM against window width");
  add_experiment_flags(ef, ef_f);
  add_run_flags(ef, ef_r, true);
  ef->add_option("--grid", ef_grid, "Window grid, radians in (0, pi]");
  ef->add_option("--baseline-frames", ef_baseline, "Frames of the large-sample baseline run (0 disables)");

  // sweep-phase
  ExperimentFlags sp_f;
  RunFlags sp_r;
  std::string sp_grid;
  auto* sp = app.add_subcommand("sweep-phase", "Dispersions of NFM, unconstrained and constrained ML against phase");
  add_experiment_flags(sp, sp_f);
  add_run_flags(sp, sp_r, true);
  sp->add_option("--grid", sp_grid, "True-phase grid, radians");

  // bias
  ExperimentFlags bi_f;
  RunFlags bi_r;
  std::string bi_vgrid, bi_pgrid;
  bool bi_estimated = false;
  auto* bi = app.add_subcommand("bias", "Bias of the V = 1 single-parameter estimator against actual visibility");
  add_experiment_flags(bi, bi_f);
  add_run_flags(bi, bi_r, true);
  bi->add_option("--visibility-grid", bi_vgrid, "Actual visibilities");
  bi->add_option("--phase-grid", bi_pgrid, "True phases, radians");
  bi->add_flag("--estimate-visibility", bi_estimated, "Use constrained ML (V estimated) instead of V = 1");

  // theory
  std::string th_formula;
  double th_n = 0, th_v = 1.0, th_phase = 0.0;
  bool th_integrated = false;
  std::string th_out;
  auto* th = app.add_subcommand("theory", "Evaluate a closed-form dispersion, bound or Fisher information");
  th->add_option("--formula", th_formula,
                 "nfm, ml_unconstr, ml_constr, crlb, fisher, single_param (or the *_asym / fisher_exact names)")
      ->required();
  th->add_option("--intensity", th_n, "N")->required();
  th->add_option("--visibility", th_v, "V");
  th->add_option("--phase", th_phase, "True phase, radians");
  th->add_flag("--integrated", th_integrated, "Integrate the V = 1 dispersion over phase in [0, 2 pi)");
  th->add_option("--out", th_out, "Write a theory CSV instead of printing the value");

  // calibrate
  ExperimentFlags ca_f;
  RunFlags ca_r;
  std::string ca_in, ca_grid, ca_method = "nfm";
  auto* ca = app.add_subcommand("calibrate", "Infer phase jitter from excess dispersion over theory");
  add_experiment_flags(ca, ca_f);
  add_run_flags(ca, ca_r, true);
  ca->add_option("--in", ca_in, "Existing sweep-phase CSV (otherwise a phase sweep is run)")->check(CLI::ExistingFile);
  ca->add_option("--grid", ca_grid, "True-phase grid when running a sweep");
  ca->add_option("--method", ca_method, "nfm or mlu");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  if (*sim) {
    const RunConfig rc = resolve(sim_f, defaults(10.0, 1.0, kPi / 3, 1000));
    const auto frames = simulate_frames(rc.experiment, 0, sim_r.workers);
    emit(sim_r.out, [&](std::ostream& os) { write_counts(os, frames); });
  } else if (*est) {
    const Method method = parse_method(est_method);
    const auto counts = read_counts(est_in);
    std::vector<EstimateRecord> records(counts.size());
    parallel_for(counts.size(), est_r.workers,
                 [&](std::size_t i) { records[i] = {counts[i].frame, estimate(method, counts[i].sample)}; });
    emit(est_r.out, [&](std::ostream& os) { write_estimates(os, records); });
    if (!est_metrics.empty()) {
      std::vector<PhaseEstimate> all;
      for (const auto& r : records) all.push_back(r.estimate);
      BootstrapOptions b;
      b.replicates = est_r.replicates;
      b.level = est_r.level;
      const DispersionStat d = circular_dispersion(std::span<const PhaseEstimate>(all), b);
      std::vector<MetricRow> rows = {{"sigma2_" + est_method, d.sigma2, d.ci_low, d.ci_high, d.n_valid, d.n_invalid}};
      if (est_true_phase) {
        const std::vector<double> phases = valid_phases(all);
        const double bias = circular_bias(phases, *est_true_phase);
        const Interval ci = bootstrap_interval(
            phases, [&](std::span<const double> p) { return circular_bias(p, *est_true_phase); }, b);
        rows.push_back({"bias_" + est_method, bias, ci.low, ci.high, d.n_valid, d.n_invalid});
      }
      emit(est_metrics, [&](std::ostream& os) { write_metrics(os, rows); });
    }
  } else if (*si) {
    RunConfig rc = resolve(si_f, defaults(1.0, 0.998, kPi / 3, 20000));
    const auto grid = grid_or(rc, si_grid, "intensity", default_intensity_grid());
    const double scale = si_scale.value_or(scalar_grid_or(rc, "frames_scale", 20000.0));
    emit_sweep(si_r, run_intensity_sweep(rc.experiment, grid, scale, sweep_options(si_r)));
  } else if (*ef) {
    RunConfig rc = resolve(ef_f, defaults(10.0, 0.996, kPi / 3, 7500));
    const auto grid = grid_or(rc, ef_grid, "window", default_window_grid());
    const auto baseline =
        ef_baseline.value_or(static_cast<std::int64_t>(scalar_grid_or(rc, "baseline_frames", 200000.0)));
    emit_sweep(ef_r, run_window_sweep(rc.experiment, grid, sweep_options(ef_r), baseline));
  } else if (*sp) {
    RunConfig rc = resolve(sp_f, defaults(160.0, 0.992, 0.0, 10000));
    const auto grid = grid_or(rc, sp_grid, "phase", default_phase_grid());
    emit_sweep(sp_r, run_phase_sweep(rc.experiment, grid, sweep_options(sp_r)));
  } else if (*bi) {
    RunConfig rc = resolve(bi_f, defaults(100.0, 1.0, 0.0, 10000));
    const auto vgrid = grid_or(rc, bi_vgrid, "visibility", default_visibility_grid());
    const auto pgrid = grid_or(rc, bi_pgrid, "phase", default_phase_grid());
    emit_sweep(bi_r, run_bias_sweep(!bi_estimated, vgrid, pgrid, rc.experiment, sweep_options(bi_r)));
  } else if (*th) {
    const Formula formula = parse_formula(th_formula);
    TheoryPoint p;
    if (th_integrated) {
      p = {formula, th_n, 1.0, 0.0, integrated_cost(formula, th_n)};
    } else {
      p = theory_point(formula, th_n, th_v, th_phase);
    }
    if (th_out.empty()) {
      std::cout << format_number(p.value) << '\n';
    } else {
      const TheoryPoint points[] = {p};
      emit(th_out, [&](std::ostream& os) { write_theory(os, points); });
    }
  } else if (*ca) {
    const Method method = parse_method(ca_method);
    SweepResult sweep;
    if (!ca_in.empty()) {
      sweep = read_results(ca_in);
      if (sweep.scenario != Scenario::phase_sweep) throw ConfigError("'" + ca_in + "' is not a sweep-phase result");
    } else {
      RunConfig rc = resolve(ca_f, defaults(160.0, 0.992, 0.0, 10000, 0.019));
      const auto grid = grid_or(rc, ca_grid, "phase", default_phase_grid());
      sweep = run_phase_sweep(rc.experiment, grid, sweep_options(ca_r));
    }
    BootstrapOptions b;
    b.replicates = ca_r.replicates;
    b.level = ca_r.level;
    const JitterCalibration cal = calibrate_jitter(sweep, method, b);
    if (cal.clamped) std::cerr << "warning: observed dispersion is below theory on average; jitter reported as 0\n";
    const auto rows = calibration_rows(cal, static_cast<std::int64_t>(sweep.rows.size()));
    emit(ca_r.out, [&](std::ostream& os) { write_metrics(os, rows); });
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const phaselab::ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const phaselab::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return 3;
  }
}
