#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "phaselab/estimators.hpp"
#include "phaselab/harness.hpp"
#include "phaselab/model.hpp"
#include "phaselab/theory.hpp"

namespace phaselab {

/// Shortest decimal text that reads back to the same double; nan, inf, -inf.
std::string format_number(double x);

/// Fixed 17 significant digits.
std::string format_number_full(double x);

/// A real number, optionally written with pi: "0.25", "pi", "-pi/4", "2*pi/3", "0.5*pi".
double parse_real(std::string_view text);

/// Comma-separated reals, or "lin:a:b:n" / "log:a:b:n" for n evenly (or
/// log-evenly) spaced points from a to b inclusive.
std::vector<double> parse_grid(std::string_view text);

// Config files: one `key = value` per line, `#` starts a comment. Keys:
// intensity, visibility, true_phase, frames (required); seed, jitter_sigma,
// sampling_mode, pulses_per_frame (optional); grid_<name> for scenario grids.
// A missing seed falls back to `fallback_seed`, then to 1.
RunConfig parse_config(std::istream& in, std::string_view source = "<config>",
                       std::optional<std::uint64_t> fallback_seed = std::nullopt);
RunConfig read_config(const std::filesystem::path& path, std::optional<std::uint64_t> fallback_seed = std::nullopt);
void format_config(std::ostream& out, const RunConfig& config);
void write_config(const RunConfig& config, const std::filesystem::path& path);

/// Grid names accepted after the `grid_` prefix.
std::span<const std::string_view> known_grids();

struct CountRecord {
  std::int64_t frame = 0;
  CountSample sample;
};

/// Counts CSV: header `frame,n3,n4,n5,n6`, frame indices 0-based and strictly increasing.
void write_counts(std::ostream& out, std::span<const CountSample> frames);
std::vector<CountRecord> parse_counts(std::istream& in, std::string_view source = "<counts>");
std::vector<CountRecord> read_counts(const std::filesystem::path& path);

struct EstimateRecord {
  std::int64_t frame = 0;
  PhaseEstimate estimate;
};

/// Estimates CSV: `frame,method,theta,visibility,valid,boundary`. Invalid rows
/// carry theta = nan; an absent visibility is an empty field.
void write_estimates(std::ostream& out, std::span<const EstimateRecord> records);

struct MetricRow {
  std::string key;
  double value = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  std::int64_t n_valid = 0;
  std::int64_t n_invalid = 0;
};

/// Metrics CSV: `key,value,ci_low,ci_high,n_valid,n_invalid`.
void write_metrics(std::ostream& out, std::span<const MetricRow> rows);

/// Theory CSV: `formula,intensity,visibility,phase,value`.
void write_theory(std::ostream& out, std::span<const TheoryPoint> points);

/// Sweep CSV with the given columns; the configuration echo goes to
/// `<path>.config` in config-file syntax.
void write_results(const SweepResult& result, const std::filesystem::path& path);
void write_results_csv(std::ostream& out, const SweepResult& result);
SweepResult read_results(const std::filesystem::path& path);

}  // namespace phaselab
