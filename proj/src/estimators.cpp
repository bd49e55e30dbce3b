#include "phaselab/estimators.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <string>

#include "phaselab/angles.hpp"
#include "phaselab/errors.hpp"

namespace phaselab {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

PhaseEstimate invalid(Method method) {
  PhaseEstimate e;
  e.theta = kNaN;
  e.method = method;
  e.valid = false;
  return e;
}

// n ln(x) with 0 ln(anything) = 0 and n ln(x <= 0) = -inf.
double count_log(std::int64_t n, double x) {
  if (n == 0) return 0.0;
  if (!(x > 0)) return kNegInf;
  return static_cast<double>(n) * std::log(x);
}

// Normalized pair differences a = (n3-n4)/(n3+n4), b = (n5-n6)/(n5+n6).
// In x = V cos(theta), y = V sin(theta) the Poisson log-likelihood is
// separable and concave; an empty pair leaves its coordinate free along a
// chord of the unit disk, and the chord midpoint 0 is taken.
struct PairRatios {
  double a = 0, b = 0;
};

PairRatios pair_ratios(const Quadratures& q) {
  PairRatios r;
  if (q.sc > 0) r.a = static_cast<double>(q.dc) / static_cast<double>(q.sc);
  if (q.ss > 0) r.b = static_cast<double>(q.ds) / static_cast<double>(q.ss);
  return r;
}

double golden_section_max(const CountSample& sample, double lo, double hi) {
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double x1 = hi - inv_phi * (hi - lo);
  double x2 = lo + inv_phi * (hi - lo);
  double f1 = boundary_loglik(sample, x1);
  double f2 = boundary_loglik(sample, x2);
  for (int i = 0; i < 200 && hi - lo > 1e-13; ++i) {
    if (f1 < f2) {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + inv_phi * (hi - lo);
      f2 = boundary_loglik(sample, x2);
    } else {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - inv_phi * (hi - lo);
      f1 = boundary_loglik(sample, x1);
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace

std::string_view method_name(Method method) {
  switch (method) {
    case Method::nfm: return "nfm";
    case Method::ml_constrained: return "ml";
    case Method::ml_unconstrained: return "mlu";
    case Method::ml_single_param: return "ml1";
  }
  return "nfm";
}

Method parse_method(std::string_view name) {
  if (name == "nfm") return Method::nfm;
  if (name == "ml") return Method::ml_constrained;
  if (name == "mlu") return Method::ml_unconstrained;
  if (name == "ml1") return Method::ml_single_param;
  throw ConfigError("unknown estimator method '" + std::string(name) + "' (expected nfm, ml, mlu or ml1)");
}

Quadratures quadratures(const CountSample& s) {
  return {s.n3 - s.n4, s.n5 - s.n6, s.n3 + s.n4, s.n5 + s.n6};
}

PhaseEstimate nfm_estimate(const CountSample& sample) {
  const Quadratures q = quadratures(sample);
  if (q.dc == 0 && q.ds == 0) return invalid(Method::nfm);
  const double dc = static_cast<double>(q.dc);
  const double ds = static_cast<double>(q.ds);
  const double length = std::hypot(dc, ds);
  PhaseEstimate e;
  e.method = Method::nfm;
  e.valid = true;
  e.theta = wrap_phase(std::atan2(ds, dc));
  e.visibility = std::min(2.0 * length / static_cast<double>(sample.total()), 1.0);
  return e;
}

PhaseEstimate unconstrained_ml_estimate(const CountSample& sample) {
  const PairRatios r = pair_ratios(quadratures(sample));
  if (r.a == 0 && r.b == 0) return invalid(Method::ml_unconstrained);
  PhaseEstimate e;
  e.method = Method::ml_unconstrained;
  e.valid = true;
  e.theta = wrap_phase(std::atan2(r.b, r.a));
  return e;
}

PhaseEstimate poisson_ml_estimate(const CountSample& sample) {
  const PairRatios r = pair_ratios(quadratures(sample));
  if (r.a == 0 && r.b == 0) return invalid(Method::ml_constrained);
  const double raw_visibility = std::hypot(r.a, r.b);
  const double theta0 = std::atan2(r.b, r.a);
  PhaseEstimate e;
  e.method = Method::ml_constrained;
  if (raw_visibility <= 1.0) {
    e.valid = true;
    e.theta = wrap_phase(theta0);
    e.visibility = raw_visibility;
    return e;
  }
  const BoundarySearch search = boundary_ml_phase(sample, theta0);
  if (!search.valid) return invalid(Method::ml_constrained);
  e.valid = true;
  e.theta = search.theta;
  e.visibility = 1.0;
  e.on_boundary = true;
  e.fallback = search.fallback;
  return e;
}

PhaseEstimate single_param_ml_estimate(const CountSample& sample) {
  if (sample.total() == 0) return invalid(Method::ml_single_param);
  const PairRatios r = pair_ratios(quadratures(sample));
  if (r.a == 0 && r.b == 0) return invalid(Method::ml_single_param);
  const double theta0 = std::atan2(r.b, r.a);
  // A start on a forbidden phase only happens when l is mirror symmetric
  // about it (a = 0 or b = 0), i.e. two equal maxima.
  if (boundary_loglik(sample, theta0) == kNegInf) return invalid(Method::ml_single_param);
  const BoundarySearch search = boundary_ml_phase(sample, theta0);
  if (!search.valid) return invalid(Method::ml_single_param);
  PhaseEstimate e;
  e.method = Method::ml_single_param;
  e.valid = true;
  e.theta = search.theta;
  e.visibility = 1.0;
  e.on_boundary = true;
  e.fallback = search.fallback;
  return e;
}

PhaseEstimate estimate(Method method, const CountSample& sample) {
  switch (method) {
    case Method::nfm: return nfm_estimate(sample);
    case Method::ml_constrained: return poisson_ml_estimate(sample);
    case Method::ml_unconstrained: return unconstrained_ml_estimate(sample);
    case Method::ml_single_param: return single_param_ml_estimate(sample);
  }
  return invalid(method);
}

double boundary_loglik(const CountSample& s, double theta) {
  const double c = std::cos(theta);
  const double sn = std::sin(theta);
  return count_log(s.n3, 1.0 + c) + count_log(s.n4, 1.0 - c) + count_log(s.n5, 1.0 + sn) +
         count_log(s.n6, 1.0 - sn);
}

double boundary_score(const CountSample& s, double theta) {
  const double c = std::cos(theta);
  const double sn = std::sin(theta);
  double g = 0.0;
  if (s.n3 > 0) g -= static_cast<double>(s.n3) * sn / (1.0 + c);
  if (s.n4 > 0) g += static_cast<double>(s.n4) * sn / (1.0 - c);
  if (s.n5 > 0) g += static_cast<double>(s.n5) * c / (1.0 + sn);
  if (s.n6 > 0) g -= static_cast<double>(s.n6) * c / (1.0 - sn);
  return g;
}

double boundary_curvature(const CountSample& s, double theta) {
  const double c = std::cos(theta);
  const double sn = std::sin(theta);
  double h = 0.0;
  if (s.n3 > 0) h -= static_cast<double>(s.n3) / (1.0 + c);
  if (s.n4 > 0) h -= static_cast<double>(s.n4) / (1.0 - c);
  if (s.n5 > 0) h -= static_cast<double>(s.n5) / (1.0 + sn);
  if (s.n6 > 0) h -= static_cast<double>(s.n6) / (1.0 - sn);
  return h;
}

BoundarySearch boundary_ml_phase(const CountSample& sample, double theta0) {
  BoundarySearch out;
  if (sample.total() == 0 || !std::isfinite(theta0)) return out;
  out.valid = true;

  double theta = theta0;
  bool converged = false;
  if (std::isfinite(boundary_loglik(sample, theta))) {
    for (int it = 1; it <= 50; ++it) {
      out.iterations = it;
      const double g = boundary_score(sample, theta);
      const double h = boundary_curvature(sample, theta);
      if (!std::isfinite(g) || !std::isfinite(h) || std::abs(h) < 1e-12) break;
      const double step = -g / h;
      if (std::abs(step) > 0.5) break;
      theta += step;
      if (!std::isfinite(boundary_loglik(sample, theta))) break;
      if (std::abs(step) < 1e-10) {
        converged = true;
        break;
      }
    }
  }
  if (!converged) {
    out.fallback = true;
    theta = golden_section_max(sample, theta0 - kPi / 2, theta0 + kPi / 2);
  }
  out.theta = wrap_phase(theta);
  return out;
}

double gaussian_loglik(const CountSample& s, double phase, double visibility, double intensity,
                       const GaussianNoiseModel& noise) {
  if (!(noise.noise_var > 0)) throw ConfigError("noise_var must be > 0");
  const ChannelMeans m = channel_means(phase, intensity, visibility);
  const std::array<double, 4> r = {static_cast<double>(s.n3) - m.m3, static_cast<double>(s.n4) - m.m4,
                                   static_cast<double>(s.n5) - m.m5, static_cast<double>(s.n6) - m.m6};
  double sq = 0.0;
  for (double x : r) sq += x * x;
  return -sq / (2.0 * noise.noise_var);
}

double poisson_loglik(const CountSample& s, double phase, double visibility, double intensity) {
  const ChannelMeans m = channel_means(phase, intensity, visibility);
  return count_log(s.n3, m.m3) + count_log(s.n4, m.m4) + count_log(s.n5, m.m5) + count_log(s.n6, m.m6);
}

PhaseEstimate grid_ml_oracle(const CountSample& sample, Likelihood kind, int theta_steps, int v_steps) {
  if (theta_steps < 360 || v_steps < 100) throw ConfigError("grid oracle needs theta_steps >= 360 and v_steps >= 100");
  const Method method = kind == Likelihood::gaussian ? Method::nfm : Method::ml_constrained;
  if (sample.total() == 0) return invalid(method);

  const double intensity = 0.5 * static_cast<double>(sample.total());
  const GaussianNoiseModel noise{1.0};
  auto f = [&](double theta, double v) {
    v = std::clamp(v, 0.0, 1.0);
    return kind == Likelihood::gaussian ? gaussian_loglik(sample, theta, v, intensity, noise)
                                        : poisson_loglik(sample, theta, v, intensity);
  };
  const double h_theta = kTwoPi / theta_steps;
  const double h_v = 1.0 / v_steps;
  auto theta_node = [&](int k) { return -kPi + (k + 1) * h_theta; };

  double best = kNegInf;
  int best_k = -1, best_j = -1;
  for (int k = 0; k < theta_steps; ++k) {
    for (int j = 0; j <= v_steps; ++j) {
      const double value = f(theta_node(k), j * h_v);
      if (value > best) {
        best = value;
        best_k = k;
        best_j = j;
      }
    }
  }
  if (best_k < 0) return invalid(method);

  // A theta profile that is flat at the best visibility carries no phase.
  double row_min = best;
  for (int k = 0; k < theta_steps; ++k) row_min = std::min(row_min, f(theta_node(k), best_j * h_v));
  if (std::isfinite(row_min) && best - row_min <= 1e-12 * (1.0 + std::abs(best))) return invalid(method);

  // Zoom in on the best node: 3x3 neighbourhood, spacing halved each round.
  double theta = theta_node(best_k);
  double v = best_j * h_v;
  double value = best;
  double dt = h_theta, dv = h_v;
  for (int round = 0; round < 40; ++round) {
    double bt = theta, bv = v;
    for (int i = -1; i <= 1; ++i) {
      for (int j = -1; j <= 1; ++j) {
        const double tv = std::clamp(v + j * dv, 0.0, 1.0);
        const double fv = f(theta + i * dt, tv);
        if (fv > value) {
          value = fv;
          bt = theta + i * dt;
          bv = tv;
        }
      }
    }
    theta = bt;
    v = bv;
    dt *= 0.5;
    dv *= 0.5;
  }

  // Vertex of the parabola through (-h, fm), (0, f0), (h, fp), clamped to [-h, h].
  auto vertex = [](double fm, double f0, double fp, double h) {
    const double denom = fm - 2.0 * f0 + fp;
    if (!std::isfinite(fm) || !std::isfinite(fp) || !(denom < 0)) return 0.0;
    return std::clamp(0.5 * h * (fm - fp) / denom, -h, h);
  };
  const double step = vertex(f(theta - dt, v), f(theta, v), f(theta + dt, v), dt);
  if (f(theta + step, v) >= f(theta, v)) theta += step;

  PhaseEstimate e;
  e.method = method;
  e.valid = true;
  e.theta = wrap_phase(theta);
  e.visibility = std::clamp(v, 0.0, 1.0);
  e.on_boundary = v >= 1.0;
  return e;
}

}  // namespace phaselab
