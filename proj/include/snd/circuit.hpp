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

// Lumped-element model of a series nanowire detector.
//
// N elements sit in series; element k is a nanowire (kinetic inductance L_0
// in series with a switchable hotspot resistance r_k) shunted by R_p,k. The
// chain is fed by an ideal current source I_B and read out across R_L, which
// is in parallel with the chain:
//
//   L_0 di_k/dt = R_p,k (i_chain - i_k) - r_k i_k
//   i_chain     = (R_L I_B + sum_k R_p,k i_k) / (R_L + sum_k R_p,k)
//   v_out       = R_L (I_B - i_chain)
//
// r_k jumps from 0 to R_hs when element k absorbs a photon and returns to 0
// once its nanowire current drops below i_retrap * I_C.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <numeric>
#include <ostream>
#include <string>
#include <vector>

#include "snd/csv.hpp"
#include "snd/errors.hpp"
#include "snd/numerics.hpp"

namespace snd::circuit {

struct SndConfig {
  std::size_t n_elements = 12;
  std::vector<double> r_parallel = std::vector<double>(12, 45.2);  // ohm, per element
  double r_load = 50.0;                                            // ohm
  double i_bias = 13.0e-6;                                         // A
  double i_critical = 13.4e-6;                                     // A
  double l_element = 43.0e-9;  // H per element; nominal, see calibrate_inductance
  double r_hotspot = 5.0e3;    // ohm, hotspot plateau resistance
  double i_retrap = 0.3;       // fraction of I_C below which a hotspot heals
  double r_normal = 250.0e3;   // ohm, normal-state resistance of one whole nanowire

  // Uniform array of n elements sharing one shunt value.
  static SndConfig uniform(std::size_t n, double r_p) {
    SndConfig c;
    c.n_elements = n;
    c.r_parallel.assign(n, r_p);
    return c;
  }

  double total_shunt() const { return std::accumulate(r_parallel.begin(), r_parallel.end(), 0.0); }
  double mean_shunt() const { return total_shunt() / static_cast<double>(r_parallel.size()); }

  std::vector<std::string> problems() const {
    std::vector<std::string> p;
    if (n_elements < 1) p.emplace_back("detector.n_elements must be >= 1");
    if (r_parallel.size() != n_elements) p.emplace_back("detector.r_parallel must have n_elements entries");
    for (double r : r_parallel) {
      if (!(r > 0.0)) {
        p.emplace_back("detector.r_parallel entries must be > 0");
        break;
      }
    }
    if (!(r_load > 0.0)) p.emplace_back("detector.r_load must be > 0");
    if (!(r_hotspot > 0.0)) p.emplace_back("detector.r_hotspot must be > 0");
    if (!(r_normal > 0.0)) p.emplace_back("detector.r_normal must be > 0");
    if (!(i_bias > 0.0)) p.emplace_back("detector.i_bias must be > 0");
    if (!(i_bias < i_critical)) p.emplace_back("detector.i_bias must be below detector.i_critical");
    if (!(l_element > 0.0)) p.emplace_back("detector.l_element must be > 0");
    if (!(i_retrap > 0.0 && i_retrap < 1.0)) p.emplace_back("detector.i_retrap must lie in (0, 1)");
    return p;
  }

  void validate() const {
    auto p = problems();
    if (!p.empty()) throw DomainError("invalid SndConfig: " + p.front());
  }
};

// Which elements absorb a photon, and when.
struct FiringPattern {
  std::vector<std::size_t> fired;
  std::vector<double> t_fire;  // seconds, parallel to `fired`

  static FiringPattern simultaneous(std::size_t n, double t = 1.0e-9) {
    FiringPattern p;
    for (std::size_t k = 0; k < n; ++k) {
      p.fired.push_back(k);
      p.t_fire.push_back(t);
    }
    return p;
  }

  static FiringPattern single(std::size_t element, double t = 1.0e-9) { return {{element}, {t}}; }

  std::size_t photon_number() const { return fired.size(); }

  void validate(std::size_t n_elements) const {
    if (fired.size() != t_fire.size()) throw DomainError("FiringPattern: fired/t_fire size mismatch");
    std::vector<bool> seen(n_elements, false);
    for (std::size_t i = 0; i < fired.size(); ++i) {
      if (fired[i] >= n_elements) throw DomainError("FiringPattern: element index out of range");
      if (seen[fired[i]]) throw DomainError("FiringPattern: duplicate element index");
      seen[fired[i]] = true;
      if (!(t_fire[i] >= 0.0)) throw DomainError("FiringPattern: negative firing time");
    }
  }
};

struct TransientTrace {
  std::vector<double> times;
  std::vector<std::vector<double>> i_wire;  // [element][sample]
  std::vector<double> i_chain;
  std::vector<double> v_out;

  std::size_t size() const { return times.size(); }

  double peak() const { return v_out.empty() ? 0.0 : *std::max_element(v_out.begin(), v_out.end()); }
};

inline double chain_current(const SndConfig& cfg, const std::vector<double>& i_wire) {
  double num = cfg.r_load * cfg.i_bias;
  for (std::size_t k = 0; k < i_wire.size(); ++k) num += cfg.r_parallel[k] * i_wire[k];
  return num / (cfg.r_load + cfg.total_shunt());
}

inline TransientTrace steady_state(const SndConfig& cfg) {
  cfg.validate();
  TransientTrace tr;
  tr.times = {0.0};
  tr.i_wire.assign(cfg.n_elements, std::vector<double>{cfg.i_bias});
  tr.i_chain = {cfg.i_bias};
  tr.v_out = {0.0};
  return tr;
}

struct TransientOptions {
  double t_end = 100.0e-9;
  double dt = 1.0e-12;
};

namespace detail {

inline void record(TransientTrace& tr, const SndConfig& cfg, double t, const std::vector<double>& y) {
  tr.times.push_back(t);
  for (std::size_t k = 0; k < y.size(); ++k) tr.i_wire[k].push_back(y[k]);
  const double ic = chain_current(cfg, y);
  tr.i_chain.push_back(ic);
  tr.v_out.push_back(cfg.r_load * (cfg.i_bias - ic));
}

}  // namespace detail

// Integrates the network on a uniform grid. Firing and healing instants are
// resolved inside a grid step by splitting the step at the event, so the
// trace does not depend on where events fall relative to the grid.
inline TransientTrace simulate_transient(const SndConfig& cfg, const FiringPattern& pattern,
                                         const TransientOptions& opt = {}) {
  cfg.validate();
  pattern.validate(cfg.n_elements);
  if (!(opt.dt > 0.0) || !(opt.t_end > 0.0)) throw DomainError("simulate_transient: dt and t_end must be positive");
  for (double tf : pattern.t_fire) {
    if (tf > opt.t_end) throw DomainError("simulate_transient: t_end does not cover all firing times");
  }

  const std::size_t n = cfg.n_elements;
  const double threshold = cfg.i_retrap * cfg.i_critical;
  std::vector<double> r_hot(n, 0.0);
  std::vector<bool> pending(n, false);
  std::vector<double> fire_at(n, std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i < pattern.fired.size(); ++i) {
    pending[pattern.fired[i]] = true;
    fire_at[pattern.fired[i]] = pattern.t_fire[i];
  }

  auto rhs = [&](double, const numerics::State& y) {
    const double ic = chain_current(cfg, y);
    numerics::State d(n);
    for (std::size_t k = 0; k < n; ++k) {
      d[k] = (cfg.r_parallel[k] * (ic - y[k]) - r_hot[k] * y[k]) / cfg.l_element;
    }
    return d;
  };
  auto any_below = [&](const numerics::State& y) {
    for (std::size_t k = 0; k < n; ++k) {
      if (r_hot[k] > 0.0 && y[k] < threshold) return true;
    }
    return false;
  };

  const std::size_t steps = numerics::step_count(opt.t_end, opt.dt);
  TransientTrace tr;
  tr.i_wire.assign(n, {});
  tr.times.reserve(steps + 1);
  for (auto& w : tr.i_wire) w.reserve(steps + 1);

  numerics::State y(n, cfg.i_bias);
  detail::record(tr, cfg, 0.0, y);
  const double max_change = 0.2 * cfg.i_critical;

  for (std::size_t s = 0; s < steps; ++s) {
    const double t1 = static_cast<double>(s + 1) * opt.dt;
    double t = static_cast<double>(s) * opt.dt;
    const numerics::State y_start = y;
    while (t1 - t > 1e-9 * opt.dt) {
      for (std::size_t k = 0; k < n; ++k) {
        if (pending[k] && fire_at[k] <= t) {
          pending[k] = false;
          r_hot[k] = cfg.r_hotspot;
        }
      }
      double t_stop = t1;
      for (std::size_t k = 0; k < n; ++k) {
        if (pending[k] && fire_at[k] < t_stop) t_stop = fire_at[k];
      }
      const double h = t_stop - t;
      numerics::State y_new = numerics::rk4_step(rhs, t, y, h);
      if (!any_below(y_new)) {
        y = std::move(y_new);
        t = t_stop;
        continue;
      }
      // Locate the earliest healing instant within this sub-step.
      double lo = 0.0, hi = 1.0;
      for (int it = 0; it < 60; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (any_below(numerics::rk4_step(rhs, t, y, mid * h))) {
          hi = mid;
        } else {
          lo = mid;
        }
      }
      const double hc = hi * h;
      y = numerics::rk4_step(rhs, t, y, hc);
      t += hc;
      const double tol = threshold * 1e-9;
      for (std::size_t k = 0; k < n; ++k) {
        if (r_hot[k] > 0.0 && y[k] < threshold + tol) r_hot[k] = 0.0;
      }
    }
    double change = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      if (!std::isfinite(y[k])) throw IntegrationError("simulate_transient: non-finite current", t1);
      change = std::max(change, std::abs(y[k] - y_start[k]));
    }
    if (change > max_change) {
      throw ResolutionError("simulate_transient: dt=" + std::to_string(opt.dt) +
                            " s too coarse; current changed by more than 20% of I_C in one step");
    }
    detail::record(tr, cfg, t1, y);
  }
  return tr;
}

// Peak output voltage for n = 1..N simultaneously fired elements.
inline std::vector<double> pulse_heights(const SndConfig& cfg, const TransientOptions& opt = {}) {
  cfg.validate();
  std::vector<double> h;
  h.reserve(cfg.n_elements);
  for (std::size_t n = 1; n <= cfg.n_elements; ++n) {
    h.push_back(simulate_transient(cfg, FiringPattern::simultaneous(n), opt).peak());
  }
  return h;
}

struct IvPoint {
  double current = 0.0;  // A
  double voltage = 0.0;  // V
};

// Quasi-static IV: superconducting below I_C, fully normal above, where the
// wires' normal resistance appears in parallel with the series shunts.
inline std::vector<IvPoint> iv_curve(const SndConfig& cfg, const std::vector<double>& i_sweep) {
  cfg.validate();
  const double r_wires = cfg.r_normal * static_cast<double>(cfg.n_elements);
  const double r_shunts = cfg.total_shunt();
  const double r_eff = r_wires * r_shunts / (r_wires + r_shunts);
  std::vector<IvPoint> out;
  out.reserve(i_sweep.size());
  for (double i : i_sweep) {
    out.push_back({i, std::abs(i) <= cfg.i_critical ? 0.0 : i * r_eff});
  }
  return out;
}

// dV/dI from an ordinary least-squares line through the resistive points.
inline double normal_branch_slope(const std::vector<IvPoint>& points) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  std::size_t m = 0;
  for (const auto& p : points) {
    if (p.voltage == 0.0) continue;
    sx += p.current;
    sy += p.voltage;
    sxx += p.current * p.current;
    sxy += p.current * p.voltage;
    ++m;
  }
  if (m < 2) throw DomainError("normal_branch_slope: need at least two resistive points");
  const double md = static_cast<double>(m);
  return (md * sxy - sx * sy) / (md * sxx - sx * sx);
}

// 1/e fall time: from the pulse peak to where v_out first drops below
// peak/e, linearly interpolated between samples.
inline double fall_time(const TransientTrace& tr) {
  if (tr.v_out.empty()) throw DomainError("fall_time: empty trace");
  const auto peak_it = std::max_element(tr.v_out.begin(), tr.v_out.end());
  const double peak = *peak_it;
  if (!(peak > 0.0)) throw DomainError("fall_time: trace has no pulse");
  const double level = peak / std::numbers::e;
  for (auto i = static_cast<std::size_t>(peak_it - tr.v_out.begin()) + 1; i < tr.v_out.size(); ++i) {
    if (tr.v_out[i] < level) {
      const double v0 = tr.v_out[i - 1], v1 = tr.v_out[i];
      const double t = tr.times[i - 1] + (v0 - level) / (v0 - v1) * (tr.times[i] - tr.times[i - 1]);
      return t - tr.times[static_cast<std::size_t>(peak_it - tr.v_out.begin())];
    }
  }
  throw DomainError("fall_time: pulse does not decay to peak/e within the trace");
}

// Hotspot (fast) time constant of one fired element; sets the time step.
inline double hotspot_time_constant(const SndConfig& cfg) {
  return cfg.l_element / (cfg.r_hotspot + cfg.mean_shunt());
}

// Time step that keeps the fastest hotspot transient well resolved.
inline double resolved_step(const SndConfig& cfg, double dt_max = 1.0e-12) {
  return std::min(dt_max, hotspot_time_constant(cfg) / 10.0);
}

// Fall time of the all-element pulse for the given config.
inline double full_pulse_fall_time(const SndConfig& cfg, double fall_guess) {
  TransientOptions opt;
  opt.dt = resolved_step(cfg);
  opt.t_end = 1.0e-9 + 6.0 * fall_guess;
  return fall_time(simulate_transient(cfg, FiringPattern::simultaneous(cfg.n_elements), opt));
}

// Finds L_0 such that the all-element pulse decays with the requested 1/e
// fall time. The map L_0 -> fall time is monotone, so a bisection in log L_0
// around the common-mode estimate L_0 (R_L + sum R_p) / (R_L R_p) suffices.
inline double calibrate_inductance(SndConfig cfg, double target_fall) {
  if (!(target_fall > 0.0)) throw DomainError("calibrate_inductance: target fall time must be positive");
  const double r_common = cfg.r_load * cfg.mean_shunt() / (cfg.r_load + cfg.total_shunt());
  const double estimate = target_fall * r_common;
  auto excess = [&](double l) {
    cfg.l_element = l;
    return full_pulse_fall_time(cfg, target_fall * 2.0) - target_fall;
  };
  double lo = estimate / 4.0, hi = estimate * 4.0;
  double f_lo = excess(lo), f_hi = excess(hi);
  for (int i = 0; i < 8 && f_lo > 0.0; ++i) f_lo = excess(lo /= 4.0);
  for (int i = 0; i < 8 && f_hi < 0.0; ++i) f_hi = excess(hi *= 4.0);
  if (f_lo > 0.0 || f_hi < 0.0) {
    throw CalibrationError("calibrate_inductance: target fall time not reachable within the L_0 bracket");
  }
  for (int it = 0; it < 60 && hi / lo > 1.0 + 1e-6; ++it) {
    const double mid = std::sqrt(lo * hi);
    if (excess(mid) > 0.0) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return std::sqrt(lo * hi);
}

// Columns: time_s, i_wire_0..i_wire_{N-1}, i_chain, v_out.
inline void write_trace_csv(std::ostream& os, const TransientTrace& tr) {
  std::vector<std::string> row{"time_s"};
  for (std::size_t k = 0; k < tr.i_wire.size(); ++k) row.push_back("i_wire_" + std::to_string(k));
  row.emplace_back("i_chain");
  row.emplace_back("v_out");
  csv::write_row(os, row);
  for (std::size_t i = 0; i < tr.size(); ++i) {
    row.clear();
    row.push_back(csv::fmt(tr.times[i]));
    for (const auto& w : tr.i_wire) row.push_back(csv::fmt(w[i]));
    row.push_back(csv::fmt(tr.i_chain[i]));
    row.push_back(csv::fmt(tr.v_out[i]));
    csv::write_row(os, row);
  }
}

}  // namespace snd::circuit
