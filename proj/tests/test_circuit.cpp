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


#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

#include <gtest/gtest.h>

#include "snd/circuit.hpp"
#include "snd/errors.hpp"

namespace ckt = snd::circuit;

namespace {

ckt::TransientOptions fast(const ckt::SndConfig& cfg, double t_end = 40e-9) {
  ckt::TransientOptions o;
  o.dt = ckt::resolved_step(cfg);
  o.t_end = t_end;
  return o;
}

// Largest |i - I_B| / I_B seen in the last (never fired) element.
double unfired_deviation(const ckt::SndConfig& cfg, std::size_t n) {
  const auto tr = ckt::simulate_transient(cfg, ckt::FiringPattern::simultaneous(n), fast(cfg));
  double dev = 0.0;
  for (double i : tr.i_wire.back()) dev = std::max(dev, std::abs(i - cfg.i_bias) / cfg.i_bias);
  return dev;
}

double unfired_minimum(const ckt::SndConfig& cfg, std::size_t n) {
  const auto tr = ckt::simulate_transient(cfg, ckt::FiringPattern::simultaneous(n), fast(cfg));
  return *std::min_element(tr.i_wire.back().begin(), tr.i_wire.back().end());
}

}  // namespace

TEST(SteadyState, SuperconductingShort) {
  for (double rl : {50.0, 1e6}) {
    ckt::SndConfig cfg;
    cfg.r_load = rl;
    const auto s = ckt::steady_state(cfg);
    for (const auto& w : s.i_wire) EXPECT_DOUBLE_EQ(w[0], 13.0e-6);
    EXPECT_DOUBLE_EQ(s.v_out[0], 0.0);
  }
  const auto one = ckt::steady_state(ckt::SndConfig::uniform(1, 45.2));
  ASSERT_EQ(one.i_wire.size(), 1u);
  EXPECT_DOUBLE_EQ(one.i_chain[0], 13.0e-6);
}

TEST(Config, ReportsEveryProblem) {
  ckt::SndConfig cfg;
  cfg.i_bias = 14e-6;
  cfg.r_load = -1.0;
  const auto p = cfg.problems();
  EXPECT_EQ(p.size(), 2u);
  EXPECT_THROW(cfg.validate(), snd::DomainError);
}

TEST(Transient, NoFiringStaysQuiet) {
  ckt::SndConfig cfg;
  const auto tr = ckt::simulate_transient(cfg, {}, fast(cfg, 5e-9));
  for (double v : tr.v_out) EXPECT_NEAR(v, 0.0, 1e-18);
  for (const auto& w : tr.i_wire) {
    for (double i : w) EXPECT_NEAR(i, cfg.i_bias, 1e-18);
  }
}

TEST(Transient, HighImpedanceLoadKeepsUnfiredCurrentConstant) {
  ckt::SndConfig cfg;
  cfg.r_load = 1e6;
  for (std::size_t n : {1u, 6u, 11u}) EXPECT_LT(unfired_deviation(cfg, n), 1e-3) << "n=" << n;
}

TEST(Transient, FiftyOhmLoadDipDeepensWithPhotonNumber) {
  ckt::SndConfig cfg;
  double previous = cfg.i_bias;
  for (std::size_t n = 1; n <= 11; ++n) {
    const double m = unfired_minimum(cfg, n);
    EXPECT_LT(m, previous) << "n=" << n;
    previous = m;
  }
  EXPECT_LT(previous, 0.99 * cfg.i_bias);
}

TEST(Transient, CoarseStepIsRejected) {
  ckt::SndConfig cfg;
  ckt::TransientOptions o;
  o.dt = 10e-12;
  o.t_end = 5e-9;
  EXPECT_THROW(ckt::simulate_transient(cfg, ckt::FiringPattern::simultaneous(12), o), snd::ResolutionError);
}

TEST(Transient, OffGridFiringMatchesOnGrid) {
  ckt::SndConfig cfg;
  const auto o = fast(cfg, 20e-9);
  const double on = ckt::simulate_transient(cfg, ckt::FiringPattern::simultaneous(3, 1e-9), o).peak();
  const double off = ckt::simulate_transient(cfg, ckt::FiringPattern::simultaneous(3, 1e-9 + 0.37 * o.dt), o).peak();
  EXPECT_NEAR(off, on, 1e-3 * on);
}

TEST(Transient, PatternValidation) {
  ckt::SndConfig cfg;
  EXPECT_THROW(ckt::simulate_transient(cfg, ckt::FiringPattern::single(12), fast(cfg, 2e-9)), snd::DomainError);
  ckt::FiringPattern dup{{1, 1}, {1e-9, 1e-9}};
  EXPECT_THROW(ckt::simulate_transient(cfg, dup, fast(cfg, 2e-9)), snd::DomainError);
}

TEST(PulseHeights, IncreaseWithPhotonNumber) {
  ckt::SndConfig cfg;
  const auto h = ckt::pulse_heights(cfg, fast(cfg, 15e-9));
  ASSERT_EQ(h.size(), 12u);
  for (std::size_t i = 1; i < h.size(); ++i) EXPECT_GT(h[i], h[i - 1]);
}

TEST(PulseHeights, SingleElementBelowCurrentDiversionBound) {
  const auto cfg = ckt::SndConfig::uniform(1, 45.2);
  const double bound = cfg.i_bias * (45.2 * cfg.r_load / (45.2 + cfg.r_load));
  const auto h = ckt::pulse_heights(cfg, fast(cfg, 15e-9));
  EXPECT_GT(h[0], 0.0);
  EXPECT_LT(h[0], bound);
}

TEST(IvCurve, BranchesAndSlope) {
  ckt::SndConfig cfg;
  const auto sc = ckt::iv_curve(cfg, {10e-6, -10e-6});
  EXPECT_EQ(sc[0].voltage, 0.0);
  EXPECT_EQ(sc[1].voltage, 0.0);
  std::vector<double> sweep;
  for (int i = -300; i <= 300; ++i) sweep.push_back(i * 1e-7);
  EXPECT_NEAR(ckt::normal_branch_slope(ckt::iv_curve(cfg, sweep)), 542.0, 0.01 * 542.0);
  EXPECT_NEAR(ckt::normal_branch_slope(ckt::iv_curve(ckt::SndConfig::uniform(12, 50.0), sweep)), 600.0, 0.01 * 600.0);
}

TEST(FallTime, FollowsCommonModeTimeConstant) {
  ckt::SndConfig cfg;
  const double tau = cfg.l_element * (cfg.r_load + cfg.total_shunt()) / (cfg.mean_shunt() * cfg.r_load);
  EXPECT_NEAR(ckt::full_pulse_fall_time(cfg, tau), tau, 0.03 * tau);
}

TEST(FallTime, ScalesWithInductance) {
  ckt::SndConfig cfg;
  const double t1 = ckt::full_pulse_fall_time(cfg, 11e-9);
  cfg.l_element *= 2.0;
  const double t2 = ckt::full_pulse_fall_time(cfg, 22e-9);
  EXPECT_NEAR(t2 / t1, 2.0, 0.05);
}

TEST(Calibration, ReproducesTargetFallTime) {
  ckt::SndConfig cfg;
  cfg.l_element = 10e-9;
  const double l0 = ckt::calibrate_inductance(cfg, 11.3e-9);
  cfg.l_element = l0;
  EXPECT_NEAR(ckt::full_pulse_fall_time(cfg, 11.3e-9), 11.3e-9, 0.01 * 11.3e-9);
  EXPECT_THROW(ckt::calibrate_inductance(cfg, -1.0), snd::DomainError);
}

TEST(TraceCsv, HeaderNamesEveryColumn) {
  ckt::SndConfig cfg = ckt::SndConfig::uniform(2, 45.2);
  std::ostringstream os;
  ckt::write_trace_csv(os, ckt::simulate_transient(cfg, ckt::FiringPattern::single(0), fast(cfg, 2e-9)));
  EXPECT_EQ(os.str().substr(0, os.str().find('\n')), "time_s,i_wire_0,i_wire_1,i_chain,v_out");
}
