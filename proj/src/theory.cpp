#include "phaselab/theory.hpp"

#include <cmath>
#include <string>

#include "phaselab/angles.hpp"
#include "phaselab/errors.hpp"

namespace phaselab {

namespace {

void require_intensity(double intensity) {
  if (!(intensity > 0) || !std::isfinite(intensity)) throw ConfigError("intensity must be > 0");
}

void require_visibility(double v) {
  if (!(v > 0 && v <= 1)) throw ConfigError("visibility must lie in (0, 1] (formula diverges at V = 0)");
}

double sq(double x) { return x * x; }

}  // namespace

std::string_view formula_name(Formula formula) {
  switch (formula) {
    case Formula::nfm_asym: return "nfm_asym";
    case Formula::ml_unconstr_asym: return "ml_unconstr_asym";
    case Formula::ml_constr_asym: return "ml_constr_asym";
    case Formula::crlb_asym: return "crlb_asym";
    case Formula::fisher_exact: return "fisher_exact";
    case Formula::single_param_asym: return "single_param_asym";
  }
  return "nfm_asym";
}

Formula parse_formula(std::string_view name) {
  for (Formula f : {Formula::nfm_asym, Formula::ml_unconstr_asym, Formula::ml_constr_asym, Formula::crlb_asym,
                    Formula::fisher_exact, Formula::single_param_asym}) {
    const std::string_view full = formula_name(f);
    if (name == full) return f;
    if (full.ends_with("_asym") && name == full.substr(0, full.size() - 5)) return f;
  }
  if (name == "fisher") return Formula::fisher_exact;
  throw ConfigError("unknown formula '" + std::string(name) + "'");
}

double nfm_asymptotic(double intensity, double visibility) {
  require_intensity(intensity);
  require_visibility(visibility);
  return 1.0 / (sq(visibility) * intensity);
}

double unconstrained_ml_asymptotic(double intensity, double visibility, double phase) {
  require_intensity(intensity);
  require_visibility(visibility);
  const double v2 = sq(visibility);
  return (1.0 - 0.5 * v2 * sq(std::sin(2.0 * phase))) / (v2 * intensity);
}

double constrained_ml_asymptotic(double intensity, double phase) {
  require_intensity(intensity);
  return (1.0 + 0.5 * sq(std::cos(2.0 * phase))) / (2.0 * intensity);
}

double fisher_information(double intensity, double visibility, double phase) {
  require_intensity(intensity);
  if (!(visibility >= 0 && visibility <= 1)) throw ConfigError("visibility must lie in [0, 1]");
  if (visibility == 1.0) return 2.0 * intensity;
  const double v2 = sq(visibility);
  const double c2 = sq(std::cos(phase));
  const double s2 = sq(std::sin(phase));
  return intensity * v2 * (s2 / (1.0 - v2 * c2) + c2 / (1.0 - v2 * s2));
}

double crlb_asymptotic(double intensity, double visibility, double phase) {
  require_intensity(intensity);
  require_visibility(visibility);
  const double v2 = sq(visibility);
  const double s2 = sq(std::sin(2.0 * phase));
  const double num = v2 - 1.0 - 0.25 * v2 * v2 * s2;
  const double den = v2 - 1.0 - 0.5 * v2 * s2;
  if (std::abs(den) < 1e-12) return 1.0 / fisher_information(intensity, visibility, phase);
  return num / den / (v2 * intensity);
}

double single_param_asymptotic(double intensity) {
  require_intensity(intensity);
  return 1.0 / (2.0 * intensity);
}

double evaluate(Formula formula, double intensity, double visibility, double phase) {
  switch (formula) {
    case Formula::nfm_asym: return nfm_asymptotic(intensity, visibility);
    case Formula::ml_unconstr_asym: return unconstrained_ml_asymptotic(intensity, visibility, phase);
    case Formula::ml_constr_asym: return constrained_ml_asymptotic(intensity, phase);
    case Formula::crlb_asym: return crlb_asymptotic(intensity, visibility, phase);
    case Formula::fisher_exact: return fisher_information(intensity, visibility, phase);
    case Formula::single_param_asym: return single_param_asymptotic(intensity);
  }
  return 0.0;
}

TheoryPoint theory_point(Formula formula, double intensity, double visibility, double phase) {
  return {formula, intensity, visibility, phase, evaluate(formula, intensity, visibility, phase)};
}

double integrated_cost(Formula formula, double intensity, double rel_tol) {
  if (formula == Formula::fisher_exact) throw ConfigError("integrated cost is defined for dispersion formulas only");
  require_intensity(intensity);
  auto trapezoid = [&](int n) {
    const double h = kTwoPi / n;
    double sum = 0.0;
    for (int k = 0; k < n; ++k) sum += evaluate(formula, intensity, 1.0, k * h);
    return sum * h;
  };
  int n = 16;
  double previous = trapezoid(n);
  for (int round = 0; round < 20; ++round) {
    n *= 2;
    const double current = trapezoid(n);
    if (std::abs(current - previous) <= rel_tol * std::abs(current)) return current;
    previous = current;
  }
  throw NumericalError("integrated cost quadrature did not converge");
}

}  // namespace phaselab
