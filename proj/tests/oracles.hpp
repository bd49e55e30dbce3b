#pragma once

// Reference computations used only by the tests. None of these call into the
// estimator or theory code paths they are used to check.

#include <boost/math/special_functions/gamma.hpp>

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <vector>

#include "phaselab/model.hpp"

namespace phaselab::oracle {

inline double circ_dist(double a, double b) {
  double d = std::fmod(std::abs(a - b), 2.0 * std::numbers::pi);
  return std::min(d, 2.0 * std::numbers::pi - d);
}

/// Boundary (V = 1) log-likelihood written out independently.
inline double boundary_ll(const CountSample& s, double t) {
  const double ninf = -std::numeric_limits<double>::infinity();
  const double args[4] = {1 + std::cos(t), 1 - std::cos(t), 1 + std::sin(t), 1 - std::sin(t)};
  const std::int64_t n[4] = {s.n3, s.n4, s.n5, s.n6};
  double l = 0;
  for (int i = 0; i < 4; ++i) {
    if (n[i] == 0) continue;
    if (args[i] <= 0) return ninf;
    l += static_cast<double>(n[i]) * std::log(args[i]);
  }
  return l;
}

/// Global maximizer of the boundary log-likelihood over (-pi, pi]: dense scan
/// followed by golden section in the best cell.
inline double boundary_argmax(const CountSample& s, int scan = 20000) {
  const double pi = std::numbers::pi;
  const double h = 2 * pi / scan;
  double best = -std::numeric_limits<double>::infinity();
  double best_t = 0;
  for (int k = 0; k < scan; ++k) {
    const double t = -pi + (k + 1) * h;
    const double v = boundary_ll(s, t);
    if (v > best) {
      best = v;
      best_t = t;
    }
  }
  double lo = best_t - h, hi = best_t + h;
  const double r = (std::sqrt(5.0) - 1) / 2;
  for (int i = 0; i < 200; ++i) {
    const double x1 = hi - r * (hi - lo), x2 = lo + r * (hi - lo);
    if (boundary_ll(s, x1) < boundary_ll(s, x2)) {
      lo = x1;
    } else {
      hi = x2;
    }
  }
  return 0.5 * (lo + hi);
}

inline double poisson_pmf(std::int64_t k, double mean) {
  if (mean == 0) return k == 0 ? 1.0 : 0.0;
  return std::exp(static_cast<double>(k) * std::log(mean) - mean - std::lgamma(static_cast<double>(k) + 1.0));
}

struct ChiSquare {
  double statistic = 0;
  int dof = 0;
  double p_value = 1;
};

/// Pearson goodness of fit of integer data to Poisson(mean); cells pooled so
/// each expected count is at least 5.
inline ChiSquare poisson_gof(const std::vector<std::int64_t>& data, double mean) {
  std::int64_t kmax = 0;
  for (auto k : data) kmax = std::max(kmax, k);
  const double n = static_cast<double>(data.size());
  std::vector<double> observed(static_cast<std::size_t>(kmax) + 1, 0.0);
  for (auto k : data) observed[static_cast<std::size_t>(k)] += 1;

  // Cells: [0..c0], single values, [cN..inf).
  std::vector<double> obs_cells, exp_cells;
  double acc_o = 0, acc_e = 0, cdf = 0;
  for (std::int64_t k = 0;; ++k) {
    const double p = poisson_pmf(k, mean);
    cdf += p;
    acc_o += k <= kmax ? observed[static_cast<std::size_t>(k)] : 0.0;
    acc_e += n * p;
    const double tail_e = n * (1 - cdf);
    if (acc_e >= 5 && tail_e >= 5) {
      obs_cells.push_back(acc_o);
      exp_cells.push_back(acc_e);
      acc_o = acc_e = 0;
    } else if (tail_e < 5) {
      double rest_o = acc_o;
      for (std::int64_t j = k + 1; j <= kmax; ++j) rest_o += observed[static_cast<std::size_t>(j)];
      obs_cells.push_back(rest_o);
      exp_cells.push_back(acc_e + tail_e);
      break;
    }
  }
  ChiSquare out;
  for (std::size_t i = 0; i < obs_cells.size(); ++i)
    out.statistic += (obs_cells[i] - exp_cells[i]) * (obs_cells[i] - exp_cells[i]) / exp_cells[i];
  out.dof = static_cast<int>(obs_cells.size()) - 1;
  out.p_value = out.dof > 0 ? boost::math::gamma_q(0.5 * out.dof, 0.5 * out.statistic) : 1.0;
  return out;
}

/// Expected squared score E[(d/dphase ln p)^2] by direct enumeration of the
/// four Poisson channels, derivative of the log mass by central differences.
inline double fisher_by_enumeration(double n, double v, double phase, int cutoff) {
  auto means = [&](double t) {
    return std::vector<double>{n / 2 * (1 + v * std::cos(t)), n / 2 * (1 - v * std::cos(t)),
                               n / 2 * (1 + v * std::sin(t)), n / 2 * (1 - v * std::sin(t))};
  };
  const double h = 1e-5;
  const auto m0 = means(phase), mp = means(phase + h), mm = means(phase - h);
  // Channels are independent, so E[score^2] is the sum over channels of
  // E[(d/dphase ln P(k; m_i))^2].
  double total = 0;
  for (int i = 0; i < 4; ++i) {
    double e = 0;
    for (int k = 0; k <= cutoff; ++k) {
      const double lp = std::log(poisson_pmf(k, mp[i]));
      const double lm = std::log(poisson_pmf(k, mm[i]));
      const double d = (lp - lm) / (2 * h);
      e += poisson_pmf(k, m0[i]) * d * d;
    }
    total += e;
  }
  return total;
}

}  // namespace phaselab::oracle
