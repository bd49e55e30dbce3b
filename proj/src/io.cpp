#include "phaselab/io.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <set>
#include <sstream>

#include "phaselab/angles.hpp"
#include "phaselab/errors.hpp"

namespace phaselab {

namespace {

constexpr std::array<std::string_view, 7> kGridNames = {"intensity",    "window",          "phase",         "visibility",
                                                        "frames_scale", "baseline_frames", "expected_v_one"};

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = s.find(sep, start);
    out.push_back(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::optional<double> plain_double(std::string_view t) {
  if (t.empty()) return std::nullopt;
  if (t == "nan") return std::numeric_limits<double>::quiet_NaN();
  if (t == "inf") return std::numeric_limits<double>::infinity();
  if (t == "-inf") return -std::numeric_limits<double>::infinity();
  if (t.front() == '+') t.remove_prefix(1);
  double v = 0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size()) return std::nullopt;
  return v;
}

template <class Int>
std::optional<Int> parse_integer(std::string_view t) {
  t = trim(t);
  if (t.empty()) return std::nullopt;
  Int v{};
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size()) return std::nullopt;
  return v;
}

std::string at(std::string_view source, std::size_t line) {
  return std::string(source) + ":" + std::to_string(line) + ": ";
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open '" + path.string() + "' for reading");
  return in;
}

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot open '" + path.string() + "' for writing");
  return out;
}

std::string grid_text(const std::vector<double>& values) {
  std::string s;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) s += ", ";
    s += format_number(values[i]);
  }
  return s;
}

}  // namespace

std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  std::array<char, 64> buf{};
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), x);
  return std::string(buf.data(), ptr);
}

std::string format_number_full(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  std::array<char, 64> buf{};
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), x, std::chars_format::general, 17);
  return std::string(buf.data(), ptr);
}

double parse_real(std::string_view text) {
  const std::string_view t = trim(text);
  if (auto v = plain_double(t)) return *v;
  const auto pi_pos = t.find("pi");
  if (pi_pos != std::string_view::npos) {
    std::string_view head = t.substr(0, pi_pos);
    std::string_view tail = t.substr(pi_pos + 2);
    double factor = 1.0;
    if (!head.empty() && head.back() == '*') head.remove_suffix(1);
    if (head == "-") {
      factor = -1.0;
    } else if (!head.empty() && head != "+") {
      auto v = plain_double(head);
      if (!v) throw ConfigError("cannot parse number '" + std::string(t) + "'");
      factor = *v;
    }
    double divisor = 1.0;
    if (!tail.empty()) {
      if (tail.front() != '/') throw ConfigError("cannot parse number '" + std::string(t) + "'");
      auto v = plain_double(tail.substr(1));
      if (!v || *v == 0) throw ConfigError("cannot parse number '" + std::string(t) + "'");
      divisor = *v;
    }
    return factor * kPi / divisor;
  }
  throw ConfigError("cannot parse number '" + std::string(t) + "'");
}

std::vector<double> parse_grid(std::string_view text) {
  const std::string_view t = trim(text);
  if (t.starts_with("lin:") || t.starts_with("log:")) {
    const auto parts = split(t.substr(4), ':');
    if (parts.size() != 3) throw ConfigError("grid spec must be lin:a:b:n or log:a:b:n, got '" + std::string(t) + "'");
    const double a = parse_real(parts[0]);
    const double b = parse_real(parts[1]);
    const auto n = parse_integer<int>(parts[2]);
    if (!n || *n < 1) throw ConfigError("grid point count must be a positive integer in '" + std::string(t) + "'");
    const bool log_spaced = t.starts_with("log:");
    if (log_spaced && !(a > 0 && b > 0)) throw ConfigError("log grid endpoints must be > 0");
    std::vector<double> g(static_cast<std::size_t>(*n));
    for (int i = 0; i < *n; ++i) {
      const double f = *n == 1 ? 0.0 : static_cast<double>(i) / (*n - 1);
      g[static_cast<std::size_t>(i)] =
          log_spaced ? std::exp(std::log(a) + f * (std::log(b) - std::log(a))) : a + f * (b - a);
    }
    if (*n > 1) g.back() = b;
    return g;
  }
  std::vector<double> g;
  for (auto item : split(t, ',')) g.push_back(parse_real(item));
  if (g.empty()) throw ConfigError("empty grid");
  return g;
}

std::span<const std::string_view> known_grids() { return kGridNames; }

RunConfig parse_config(std::istream& in, std::string_view source, std::optional<std::uint64_t> fallback_seed) {
  RunConfig rc;
  ExperimentConfig& c = rc.experiment;
  std::set<std::string, std::less<>> seen;
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = raw;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ConfigError(at(source, line_no) + "expected 'key = value'");
    const std::string key(trim(line.substr(0, eq)));
    const std::string_view value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError(at(source, line_no) + "missing key before '='");
    if (value.empty()) throw ConfigError(at(source, line_no) + "missing value for key '" + key + "'");
    if (!seen.insert(key).second) throw ConfigError(at(source, line_no) + "duplicate key '" + key + "'");

    try {
      if (key == "intensity") {
        c.intensity = parse_real(value);
      } else if (key == "visibility") {
        c.visibility = parse_real(value);
      } else if (key == "true_phase") {
        c.true_phase = parse_real(value);
      } else if (key == "jitter_sigma") {
        c.jitter_sigma = parse_real(value);
      } else if (key == "frames") {
        auto v = parse_integer<std::int64_t>(value);
        if (!v) throw ConfigError("frames must be an integer");
        c.frames = *v;
      } else if (key == "pulses_per_frame") {
        auto v = parse_integer<std::int64_t>(value);
        if (!v) throw ConfigError("pulses_per_frame must be an integer");
        c.pulses_per_frame = *v;
      } else if (key == "seed") {
        auto v = parse_integer<std::uint64_t>(value);
        if (!v) throw ConfigError("seed must be an unsigned 64-bit integer");
        c.seed = *v;
      } else if (key == "sampling_mode") {
        c.sampling_mode = parse_sampling_mode(value);
      } else if (key.starts_with("grid_")) {
        const std::string name = key.substr(5);
        bool known = false;
        for (auto g : kGridNames) known = known || g == name;
        if (!known) throw ConfigError("unknown key '" + key + "'");
        rc.grids[name] = parse_grid(value);
      } else {
        throw ConfigError("unknown key '" + key + "'");
      }
    } catch (const ConfigError& e) {
      throw ConfigError(at(source, line_no) + e.what());
    }
  }
  for (const char* required : {"intensity", "visibility", "true_phase", "frames"}) {
    if (!seen.contains(required))
      throw ConfigError(std::string(source) + ": missing required key '" + required + "'");
  }
  if (!seen.contains("seed")) c.seed = fallback_seed.value_or(1);
  if (c.sampling_mode == SamplingMode::weak_pulse && !seen.contains("pulses_per_frame"))
    throw ConfigError(std::string(source) + ": sampling_mode = weak_pulse requires key 'pulses_per_frame'");
  try {
    c.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(std::string(source) + ": " + e.what());
  }
  return rc;
}

RunConfig read_config(const std::filesystem::path& path, std::optional<std::uint64_t> fallback_seed) {
  std::ifstream in = open_input(path);
  return parse_config(in, path.string(), fallback_seed);
}

void format_config(std::ostream& out, const RunConfig& rc) {
  const ExperimentConfig& c = rc.experiment;
  out << "intensity = " << format_number(c.intensity) << '\n'
      << "visibility = " << format_number(c.visibility) << '\n'
      << "true_phase = " << format_number(c.true_phase) << '\n'
      << "frames = " << c.frames << '\n'
      << "seed = " << c.seed << '\n'
      << "jitter_sigma = " << format_number(c.jitter_sigma) << '\n'
      << "sampling_mode = " << sampling_mode_name(c.sampling_mode) << '\n'
      << "pulses_per_frame = " << c.pulses_per_frame << '\n';
  for (const auto& [name, values] : rc.grids) out << "grid_" << name << " = " << grid_text(values) << '\n';
}

void write_config(const RunConfig& config, const std::filesystem::path& path) {
  std::ofstream out = open_output(path);
  format_config(out, config);
}

void write_counts(std::ostream& out, std::span<const CountSample> frames) {
  out << "frame,n3,n4,n5,n6\n";
  for (std::size_t i = 0; i < frames.size(); ++i) {
    const auto& s = frames[i];
    out << i << ',' << s.n3 << ',' << s.n4 << ',' << s.n5 << ',' << s.n6 << '\n';
  }
}

std::vector<CountRecord> parse_counts(std::istream& in, std::string_view source) {
  std::string raw;
  std::size_t line_no = 1;
  if (!std::getline(in, raw) || trim(raw) != "frame,n3,n4,n5,n6")
    throw ConfigError(at(source, line_no) + "expected header 'frame,n3,n4,n5,n6'");
  std::vector<CountRecord> out;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string_view line = trim(raw);
    if (line.empty()) continue;
    const auto fields = split(line, ',');
    if (fields.size() != 5) throw ConfigError(at(source, line_no) + "expected 5 fields");
    std::array<std::int64_t, 5> v{};
    for (std::size_t k = 0; k < 5; ++k) {
      auto x = parse_integer<std::int64_t>(fields[k]);
      if (!x || *x < 0) throw ConfigError(at(source, line_no) + "field " + std::to_string(k + 1) + " is not a non-negative integer");
      v[k] = *x;
    }
    if (!out.empty() && v[0] <= out.back().frame)
      throw ConfigError(at(source, line_no) + "frame indices must be strictly increasing");
    out.push_back({v[0], {v[1], v[2], v[3], v[4]}});
  }
  return out;
}

std::vector<CountRecord> read_counts(const std::filesystem::path& path) {
  std::ifstream in = open_input(path);
  return parse_counts(in, path.string());
}

void write_estimates(std::ostream& out, std::span<const EstimateRecord> records) {
  out << "frame,method,theta,visibility,valid,boundary\n";
  for (const auto& r : records) {
    const auto& e = r.estimate;
    out << r.frame << ',' << method_name(e.method) << ',' << format_number_full(e.valid ? e.theta : std::nan("")) << ',';
    if (e.valid && e.visibility) out << format_number_full(*e.visibility);
    out << ',' << (e.valid ? 1 : 0) << ',' << (e.on_boundary ? 1 : 0) << '\n';
  }
}

void write_metrics(std::ostream& out, std::span<const MetricRow> rows) {
  out << "key,value,ci_low,ci_high,n_valid,n_invalid\n";
  for (const auto& r : rows) {
    out << r.key << ',' << format_number(r.value) << ',' << format_number(r.ci_low) << ','
        << format_number(r.ci_high) << ',' << r.n_valid << ',' << r.n_invalid << '\n';
  }
}

void write_theory(std::ostream& out, std::span<const TheoryPoint> points) {
  out << "formula,intensity,visibility,phase,value\n";
  for (const auto& p : points) {
    out << formula_name(p.formula) << ',' << format_number(p.intensity) << ',' << format_number(p.visibility) << ','
        << format_number(p.phase) << ',' << format_number(p.value) << '\n';
  }
}

void write_results_csv(std::ostream& out, const SweepResult& result) {
  for (std::size_t i = 0; i < result.columns.size(); ++i) out << (i ? "," : "") << result.columns[i];
  out << '\n';
  for (const auto& row : result.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << format_number(row[i]);
    out << '\n';
  }
}

void write_results(const SweepResult& result, const std::filesystem::path& path) {
  {
    std::ofstream out = open_output(path);
    write_results_csv(out, result);
  }
  std::filesystem::path echo_path = path;
  echo_path += ".config";
  write_config(result.config_echo, echo_path);
}

SweepResult read_results(const std::filesystem::path& path) {
  std::ifstream in = open_input(path);
  const std::string source = path.string();
  SweepResult result;
  std::string raw;
  std::size_t line_no = 1;
  if (!std::getline(in, raw)) throw ConfigError(at(source, line_no) + "empty result file");
  for (auto name : split(trim(raw), ',')) result.columns.emplace_back(trim(name));
  const std::string& first = result.columns.front();
  if (first == "intensity") {
    result.scenario = Scenario::intensity_sweep;
  } else if (first == "window") {
    result.scenario = Scenario::window_sweep;
  } else if (first == "phase") {
    result.scenario = Scenario::phase_sweep;
  } else if (first == "actual_visibility") {
    result.scenario = Scenario::bias_sweep;
  } else {
    throw ConfigError(at(source, line_no) + "unrecognized independent variable '" + first + "'");
  }
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string_view line = trim(raw);
    if (line.empty()) continue;
    const auto fields = split(line, ',');
    if (fields.size() != result.columns.size())
      throw ConfigError(at(source, line_no) + "expected " + std::to_string(result.columns.size()) + " fields");
    std::vector<double> row;
    row.reserve(fields.size());
    for (auto f : fields) {
      auto v = plain_double(trim(f));
      if (!v) throw ConfigError(at(source, line_no) + "malformed number '" + std::string(f) + "'");
      row.push_back(*v);
    }
    result.rows.push_back(std::move(row));
  }
  std::filesystem::path echo_path = path;
  echo_path += ".config";
  if (std::filesystem::exists(echo_path)) result.config_echo = read_config(echo_path);
  return result;
}

}  // namespace phaselab
