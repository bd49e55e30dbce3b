#pragma once

#include <cstdint>
#include <optional>
#include <string_view>

#include "phaselab/model.hpp"

namespace phaselab {

enum class Method {
  nfm,               ///< Gaussian ML / operational NFM phase
  ml_constrained,    ///< Poissonian ML with V <= 1 enforced
  ml_unconstrained,  ///< Poissonian closed form applied to every sample
  ml_single_param,   ///< Poissonian ML with V fixed to 1
};

/// CSV tokens: nfm, ml, mlu, ml1.
std::string_view method_name(Method method);
Method parse_method(std::string_view name);

/// Sums and differences of the two channel pairs.
struct Quadratures {
  std::int64_t dc = 0;  ///< n3 - n4
  std::int64_t ds = 0;  ///< n5 - n6
  std::int64_t sc = 0;  ///< n3 + n4
  std::int64_t ss = 0;  ///< n5 + n6
};

Quadratures quadratures(const CountSample& sample);

struct PhaseEstimate {
  double theta = 0.0;                 ///< (-pi, pi] when valid, NaN otherwise
  std::optional<double> visibility;   ///< estimated V in [0, 1], if the method estimates it
  Method method = Method::nfm;
  bool valid = false;
  bool on_boundary = false;  ///< maximized on the V = 1 boundary
  bool fallback = false;     ///< boundary search fell back to golden section
};

struct GaussianNoiseModel {
  double noise_var = 1.0;  ///< per-channel phase-insensitive variance, > 0
};

enum class Likelihood { gaussian, poisson };

PhaseEstimate nfm_estimate(const CountSample& sample);

/// Poissonian ML with the physical constraint V <= 1. Uses the closed form when
/// it yields V <= 1, otherwise maximizes the likelihood on V = 1.
PhaseEstimate poisson_ml_estimate(const CountSample& sample);

/// Poissonian closed-form phase for every sample, visibility ignored.
PhaseEstimate unconstrained_ml_estimate(const CountSample& sample);

/// Poissonian ML at V = 1 for every sample.
PhaseEstimate single_param_ml_estimate(const CountSample& sample);

PhaseEstimate estimate(Method method, const CountSample& sample);

// Boundary (V = 1) log-likelihood and its derivatives in theta:
//   l(theta) = n3 ln(1 + cos) + n4 ln(1 - cos) + n5 ln(1 + sin) + n6 ln(1 - sin)
// Terms with a zero count are dropped (0 ln 0 = 0); ln of a non-positive
// argument is -inf.
double boundary_loglik(const CountSample& sample, double theta);
double boundary_score(const CountSample& sample, double theta);
double boundary_curvature(const CountSample& sample, double theta);

struct BoundarySearch {
  double theta = 0.0;
  bool valid = false;
  bool fallback = false;
  int iterations = 0;
};

/// Local maximizer of boundary_loglik reached from theta0 by safeguarded
/// Newton iteration (|step| < 1e-10, at most 50 steps). Falls back to golden
/// section on [theta0 - pi/2, theta0 + pi/2] when the curvature is below
/// 1e-12 in magnitude, a step exceeds 0.5 rad, the iterate leaves the
/// likelihood's support, or the iteration does not converge.
BoundarySearch boundary_ml_phase(const CountSample& sample, double theta0);

/// Log of the Gaussian likelihood up to an additive constant.
double gaussian_loglik(const CountSample& sample, double phase, double visibility, double intensity,
                       const GaussianNoiseModel& noise);

/// sum_i n_i ln(mean_i), with 0 ln 0 = 0 and -inf for n_i > 0 at mean_i = 0.
double poisson_loglik(const CountSample& sample, double phase, double visibility, double intensity);

/// Brute-force maximization over theta in (-pi, pi] x V in [0, 1], refined by a
/// shrinking local grid around the best node and a final parabolic step in theta.
/// Intensity is taken as half the total count.
/// Test oracle; slow by construction.
PhaseEstimate grid_ml_oracle(const CountSample& sample, Likelihood kind, int theta_steps = 720, int v_steps = 200);

}  // namespace phaselab
