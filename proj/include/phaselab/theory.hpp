#pragma once

#include <string_view>

namespace phaselab {

enum class Formula {
  nfm_asym,
  ml_unconstr_asym,
  ml_constr_asym,
  crlb_asym,
  fisher_exact,
  single_param_asym,
};

std::string_view formula_name(Formula formula);

/// Accepts the canonical names above and the short aliases
/// nfm, ml_unconstr, ml_constr, crlb, fisher, single_param.
Formula parse_formula(std::string_view name);

struct TheoryPoint {
  Formula formula = Formula::nfm_asym;
  double intensity = 0.0;
  double visibility = 1.0;
  double phase = 0.0;  ///< ignored by phase-independent formulas
  double value = 0.0;
};

/// Leading-order NFM dispersion 1 / (V^2 N).
double nfm_asymptotic(double intensity, double visibility);

/// Leading-order dispersion of the unconstrained Poissonian estimator,
/// (1 - V^2/2 sin^2 2phase) / (V^2 N).
double unconstrained_ml_asymptotic(double intensity, double visibility, double phase);

/// Approximate constrained-ML dispersion at V = 1, (1 + cos^2 2phase / 2) / 2N.
double constrained_ml_asymptotic(double intensity, double phase);

/// Cramer-Rao bound for the phase with V and N known. At V = 1 and phase a
/// multiple of pi/2 the closed form is 0/0 and the reciprocal Fisher
/// information (its continuous extension) is returned.
double crlb_asymptotic(double intensity, double visibility, double phase);

/// Per-frame Fisher information of the phase for four independent Poisson
/// channels: N V^2 [sin^2/(1 - V^2 cos^2) + cos^2/(1 - V^2 sin^2)], 2N at V = 1.
double fisher_information(double intensity, double visibility, double phase);

/// 1 / 2N.
double single_param_asymptotic(double intensity);

/// Dispersion predicted by `formula` (Fisher information for fisher_exact).
double evaluate(Formula formula, double intensity, double visibility, double phase);

TheoryPoint theory_point(Formula formula, double intensity, double visibility, double phase);

/// Integral over phase in [0, 2pi) of the formula's dispersion at V = 1.
/// Periodic trapezoid rule, refined until successive estimates agree to
/// `rel_tol`.
double integrated_cost(Formula formula, double intensity, double rel_tol = 1e-10);

}  // namespace phaselab
