// Copyright 2026 The SND Toolkit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Shared numerical kernels: fixed-step RK4, bounded Levenberg-Marquardt,
// bracketed scalar minimization, first-order IIR filters and seeded random
// streams. Everything here is a pure function of its arguments.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/tools/minima.hpp>

#include "snd/errors.hpp"

namespace snd::numerics {

using State = std::vector<double>;

// Uniformly sampled solution of an initial value problem.
struct Trajectory {
  std::vector<double> times;
  std::vector<State> states;
};

namespace detail {

inline bool all_finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

inline void axpy(State& out, const State& y, double a, const State& k) {
  for (std::size_t i = 0; i < y.size(); ++i) out[i] = y[i] + a * k[i];
}

}  // namespace detail

// One classical Runge-Kutta step of size h from (t, y).
template <class Rhs>
State rk4_step(Rhs&& rhs, double t, const State& y, double h) {
  State tmp(y.size());
  const State k1 = rhs(t, y);
  detail::axpy(tmp, y, 0.5 * h, k1);
  const State k2 = rhs(t + 0.5 * h, tmp);
  detail::axpy(tmp, y, 0.5 * h, k2);
  const State k3 = rhs(t + 0.5 * h, tmp);
  detail::axpy(tmp, y, h, k3);
  const State k4 = rhs(t + h, tmp);
  State out(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) {
    out[i] = y[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
  }
  return out;
}

// Number of uniform steps covering [0, t_end].
inline std::size_t step_count(double t_end, double dt) {
  return static_cast<std::size_t>(std::ceil(t_end / dt - 1e-9));
}

// Fixed-step RK4 on the grid t_i = i*dt, i = 0..ceil(t_end/dt).
// Throws IntegrationError at the first non-finite state.
template <class Rhs>
Trajectory integrate_ode(Rhs&& rhs, State y0, double t_end, double dt) {
  if (!(dt > 0.0) || !(t_end > 0.0)) {
    throw DomainError("integrate_ode: dt and t_end must be positive");
  }
  if (!detail::all_finite(y0)) throw IntegrationError("integrate_ode: non-finite initial state", 0.0);
  const std::size_t steps = step_count(t_end, dt);
  Trajectory traj;
  traj.times.reserve(steps + 1);
  traj.states.reserve(steps + 1);
  traj.times.push_back(0.0);
  traj.states.push_back(std::move(y0));
  for (std::size_t i = 0; i < steps; ++i) {
    const double t = static_cast<double>(i) * dt;
    State next = rk4_step(rhs, t, traj.states.back(), dt);
    const double t_next = static_cast<double>(i + 1) * dt;
    if (!detail::all_finite(next)) {
      throw IntegrationError("integrate_ode: state diverged at t=" + std::to_string(t_next), t_next);
    }
    traj.times.push_back(t_next);
    traj.states.push_back(std::move(next));
  }
  return traj;
}

// ---------------------------------------------------------------------------
// Nonlinear least squares

struct FitOutcome {
  std::vector<double> params;
  double residual_norm = 0.0;  // Euclidean norm of the residual vector at params
  bool converged = false;
  int iterations = 0;
};

struct LeastSquaresOptions {
  int max_iterations = 200;
  double ftol = 1e-14;  // relative decrease of the sum of squares
  double xtol = 1e-12;  // relative step size
  double gtol = 1e-20;  // absolute gradient magnitude
  double initial_lambda = 1e-3;
};

// Levenberg-Marquardt with Marquardt diagonal scaling, forward-difference
// Jacobian and projection onto [lower, upper]. `residuals` maps a parameter
// vector to a residual vector of fixed length.
template <class Residuals>
FitOutcome fit_least_squares(Residuals&& residuals, std::vector<double> initial,
                             std::span<const double> lower, std::span<const double> upper,
                             const LeastSquaresOptions& opt = {}) {
  const std::size_t np = initial.size();
  if (lower.size() != np || upper.size() != np) {
    throw DomainError("fit_least_squares: bounds size mismatch");
  }
  for (std::size_t j = 0; j < np; ++j) {
    if (!(initial[j] >= lower[j] && initial[j] <= upper[j])) {
      throw DomainError("fit_least_squares: initial point outside bounds");
    }
  }
  auto clamp = [&](std::vector<double>& p) {
    for (std::size_t j = 0; j < np; ++j) p[j] = std::clamp(p[j], lower[j], upper[j]);
  };
  auto sumsq = [](const std::vector<double>& r) {
    double s = 0.0;
    for (double x : r) s += x * x;
    return s;
  };

  std::vector<double> p = std::move(initial);
  std::vector<double> r = residuals(p);
  if (!detail::all_finite(r)) throw FitError("fit_least_squares: residuals not finite at initial point", p);
  const std::size_t nr = r.size();
  double cost = sumsq(r);
  double lambda = opt.initial_lambda;
  const double h_rel = std::sqrt(std::numeric_limits<double>::epsilon());

  FitOutcome out;
  Eigen::MatrixXd jac(nr, np);
  int it = 0;
  for (; it < opt.max_iterations; ++it) {
    // Forward-difference Jacobian, stepping inward at an upper bound.
    for (std::size_t j = 0; j < np; ++j) {
      double h = h_rel * std::max(std::abs(p[j]), 1.0);
      if (p[j] + h > upper[j]) h = -h;
      std::vector<double> q = p;
      q[j] += h;
      const std::vector<double> rq = residuals(q);
      if (!detail::all_finite(rq)) throw FitError("fit_least_squares: non-finite residual in Jacobian", p);
      for (std::size_t i = 0; i < nr; ++i) jac(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = (rq[i] - r[i]) / h;
    }
    const Eigen::Map<const Eigen::VectorXd> rv(r.data(), static_cast<Eigen::Index>(nr));
    const Eigen::VectorXd grad = jac.transpose() * rv;
    if (grad.cwiseAbs().maxCoeff() <= opt.gtol) {
      out.converged = true;
      break;
    }
    const Eigen::MatrixXd jtj = jac.transpose() * jac;
    bool improved = false;
    bool tiny_step = false;
    for (int attempt = 0; attempt < 40; ++attempt) {
      Eigen::MatrixXd a = jtj;
      for (Eigen::Index j = 0; j < a.rows(); ++j) a(j, j) += lambda * std::max(jtj(j, j), 1e-300);
      const Eigen::VectorXd delta = a.ldlt().solve(-grad);
      std::vector<double> q(np);
      for (std::size_t j = 0; j < np; ++j) q[j] = p[j] + delta(static_cast<Eigen::Index>(j));
      clamp(q);
      double step = 0.0, scale = 0.0;
      for (std::size_t j = 0; j < np; ++j) {
        step = std::max(step, std::abs(q[j] - p[j]));
        scale = std::max(scale, std::abs(p[j]));
      }
      if (step <= opt.xtol * (scale + opt.xtol)) {
        tiny_step = true;
        break;
      }
      std::vector<double> rq = residuals(q);
      if (!detail::all_finite(rq)) throw FitError("fit_least_squares: non-finite residual during search", p);
      const double cq = sumsq(rq);
      if (cq < cost) {
        const double rel = (cost - cq) / std::max(cost, std::numeric_limits<double>::min());
        p = std::move(q);
        r = std::move(rq);
        cost = cq;
        lambda = std::max(lambda / 10.0, 1e-12);
        improved = true;
        if (rel <= opt.ftol) tiny_step = true;
        break;
      }
      lambda *= 10.0;
      if (lambda > 1e16) break;
    }
    if (tiny_step || !improved) {
      out.converged = true;
      ++it;
      break;
    }
  }
  out.params = std::move(p);
  out.residual_norm = std::sqrt(cost);
  out.iterations = it;
  return out;
}

// Minimizes a unimodal scalar function on [lo, hi] (Brent's method).
// Returns {argmin, min}.
template <class F>
std::pair<double, double> minimize_scalar(F&& f, double lo, double hi, int bits = 52) {
  if (!(lo < hi)) throw DomainError("minimize_scalar: empty bracket");
  std::uintmax_t max_iter = 500;
  return boost::math::tools::brent_find_minima(f, lo, hi, bits, max_iter);
}

// Grid scan followed by Brent refinement around the best grid point; used
// where the objective may not be unimodal over the whole bracket.
template <class F>
std::pair<double, double> minimize_scalar_scan(F&& f, double lo, double hi, int grid = 200) {
  double best_x = lo, best_f = f(lo);
  const double step = (hi - lo) / grid;
  for (int i = 1; i <= grid; ++i) {
    const double x = lo + step * i;
    const double fx = f(x);
    if (fx < best_f) {
      best_f = fx;
      best_x = x;
    }
  }
  const double a = std::max(lo, best_x - step);
  const double b = std::min(hi, best_x + step);
  auto refined = minimize_scalar(f, a, b);
  if (refined.second <= best_f) return refined;
  return {best_x, best_f};
}

// ---------------------------------------------------------------------------
// Filters

struct LowPass {
  double cutoff_hz = 0.0;
};

struct BandPass {
  double low_hz = 0.0;
  double high_hz = 0.0;
};

using FilterSpec = std::variant<LowPass, BandPass>;

// y[n] = b0 x[n] + b1 x[n-1] - a1 y[n-1], zero initial state.
struct FirstOrderSection {
  double b0 = 1.0;
  double b1 = 0.0;
  double a1 = 0.0;

  void apply(std::span<double> x) const {
    double x_prev = 0.0, y_prev = 0.0;
    for (double& v : x) {
      const double y = b0 * v + b1 * x_prev - a1 * y_prev;
      x_prev = v;
      y_prev = y;
      v = y;
    }
  }
};

inline void check_cutoff(double f, double sample_rate) {
  if (!(f > 0.0) || !(f < 0.5 * sample_rate)) {
    throw DomainError("filter cutoff " + std::to_string(f) + " Hz must lie in (0, Nyquist)");
  }
}

// Bilinear transform of 1/(1 + s/wc), prewarped at the cutoff.
inline FirstOrderSection low_pass_section(double cutoff_hz, double sample_rate) {
  check_cutoff(cutoff_hz, sample_rate);
  const double k = std::tan(std::numbers::pi * cutoff_hz / sample_rate);
  return {k / (1.0 + k), k / (1.0 + k), (k - 1.0) / (k + 1.0)};
}

// Bilinear transform of (s/wc) / (1 + s/wc).
inline FirstOrderSection high_pass_section(double cutoff_hz, double sample_rate) {
  check_cutoff(cutoff_hz, sample_rate);
  const double k = std::tan(std::numbers::pi * cutoff_hz / sample_rate);
  return {1.0 / (1.0 + k), -1.0 / (1.0 + k), (k - 1.0) / (k + 1.0)};
}

inline std::vector<FirstOrderSection> filter_sections(const FilterSpec& spec, double sample_rate) {
  if (const auto* lp = std::get_if<LowPass>(&spec)) return {low_pass_section(lp->cutoff_hz, sample_rate)};
  const auto& bp = std::get<BandPass>(spec);
  if (!(bp.low_hz < bp.high_hz)) throw DomainError("band_pass: low edge must be below high edge");
  return {high_pass_section(bp.low_hz, sample_rate), low_pass_section(bp.high_hz, sample_rate)};
}

inline double highest_cutoff(const FilterSpec& spec) {
  if (const auto* lp = std::get_if<LowPass>(&spec)) return lp->cutoff_hz;
  return std::get<BandPass>(spec).high_hz;
}

inline std::vector<double> apply_filter(const FilterSpec& spec, std::span<const double> signal,
                                        double sample_rate) {
  std::vector<double> out(signal.begin(), signal.end());
  for (const auto& s : filter_sections(spec, sample_rate)) s.apply(out);
  return out;
}

// ---------------------------------------------------------------------------
// Random streams

// Explicitly seeded stream; (seed, stream) pairs give independent,
// bit-reproducible substreams for parallel work split by index.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed, std::uint64_t stream = 0) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32),
                      0x5eedu};
    engine_.seed(seq);
  }

  // [0, 1) from the top 53 bits; much cheaper than std::generate_canonical.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double normal(double mean = 0.0, double sd = 1.0) {
    if (sd <= 0.0) return mean;
    return std::normal_distribution<double>(mean, sd)(engine_);
  }

  std::uint64_t poisson(double mean) {
    if (mean <= 0.0) return 0;
    return std::poisson_distribution<std::uint64_t>(mean)(engine_);
  }

  bool bernoulli(double p) { return uniform() < p; }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace snd::numerics
