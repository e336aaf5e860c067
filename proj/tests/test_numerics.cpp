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


#include <cmath>
#include <numbers>
#include <sstream>
#include <vector>

#include <gtest/gtest.h>

#include "snd/csv.hpp"
#include "snd/errors.hpp"
#include "snd/numerics.hpp"

namespace num = snd::numerics;

namespace {

double decay_error(double dt) {
  auto rhs = [](double, const num::State& y) { return num::State{-y[0]}; };
  const auto tr = num::integrate_ode(rhs, {1.0}, 1.0, dt);
  return std::abs(tr.states.back()[0] - std::exp(-1.0));
}

}  // namespace

TEST(Rk4, ExponentialDecayIsAccurate) { EXPECT_LT(decay_error(0.01), 1e-10); }

TEST(Rk4, ConvergesAtFourthOrder) {
  const double ratio = decay_error(0.1) / decay_error(0.05);
  EXPECT_NEAR(ratio, 16.0, 1.0);
}

TEST(Rk4, HarmonicOscillatorReturnsAfterOnePeriod) {
  auto rhs = [](double, const num::State& y) { return num::State{y[1], -y[0]}; };
  const double period = 2.0 * std::numbers::pi;
  const auto tr = num::integrate_ode(rhs, {1.0, 0.0}, period, period / 6000.0);
  EXPECT_NEAR(tr.times.back(), period, 1e-12);
  EXPECT_NEAR(tr.states.back()[0], 1.0, 1e-6);
  EXPECT_NEAR(tr.states.back()[1], 0.0, 1e-6);
}

TEST(Rk4, GridCoversEndTime) {
  auto rhs = [](double, const num::State&) { return num::State{1.0}; };
  const auto tr = num::integrate_ode(rhs, {0.0}, 1.0, 0.3);
  EXPECT_EQ(tr.times.size(), 5u);
  EXPECT_DOUBLE_EQ(tr.times.back(), 1.2);
  EXPECT_EQ(num::step_count(1.0, 0.1), 10u);
}

TEST(Rk4, DivergenceThrowsWithTime) {
  auto rhs = [](double, const num::State& y) { return num::State{y[0] * y[0]}; };
  try {
    num::integrate_ode(rhs, {1.0}, 2.0, 0.01);
    FAIL() << "expected IntegrationError";
  } catch (const snd::IntegrationError& e) {
    EXPECT_GT(e.time(), 0.9);
    EXPECT_LT(e.time(), 1.1);
  }
}

TEST(Rk4, RejectsBadStep) {
  auto rhs = [](double, const num::State& y) { return y; };
  EXPECT_THROW(num::integrate_ode(rhs, {1.0}, 1.0, 0.0), snd::DomainError);
}

TEST(LeastSquares, RecoversExponentialModel) {
  std::vector<double> t, y;
  for (int i = 0; i < 40; ++i) {
    t.push_back(0.1 * i);
    y.push_back(2.5 * std::exp(-1.3 * t.back()) + 0.2);
  }
  auto res = [&](const std::vector<double>& p) {
    std::vector<double> r(t.size());
    for (std::size_t i = 0; i < t.size(); ++i) r[i] = p[0] * std::exp(-p[1] * t[i]) + p[2] - y[i];
    return r;
  };
  const std::vector<double> lo{0, 0, -10}, hi{10, 10, 10};
  const auto fit = num::fit_least_squares(res, {1.0, 0.5, 0.0}, lo, hi);
  EXPECT_TRUE(fit.converged);
  EXPECT_NEAR(fit.params[0], 2.5, 1e-7);
  EXPECT_NEAR(fit.params[1], 1.3, 1e-7);
  EXPECT_NEAR(fit.params[2], 0.2, 1e-7);
  EXPECT_LT(fit.residual_norm, 1e-8);
}

TEST(LeastSquares, RespectsBounds) {
  auto res = [](const std::vector<double>& p) { return std::vector<double>{p[0] - 5.0}; };
  const std::vector<double> lo{0.0}, hi{2.0};
  const auto fit = num::fit_least_squares(res, {1.0}, lo, hi);
  EXPECT_DOUBLE_EQ(fit.params[0], 2.0);
}

TEST(LeastSquares, NonFiniteResidualThrows) {
  auto res = [](const std::vector<double>& p) { return std::vector<double>{std::log(p[0] - 1.0)}; };
  const std::vector<double> lo{-5.0}, hi{5.0};
  EXPECT_THROW(num::fit_least_squares(res, {0.0}, lo, hi), snd::FitError);
}

TEST(ScalarMinimize, FindsParabolaVertex) {
  const auto [x, fx] = num::minimize_scalar([](double v) { return (v - 0.3) * (v - 0.3) + 1.0; }, -1.0, 2.0);
  EXPECT_NEAR(x, 0.3, 1e-7);
  EXPECT_NEAR(fx, 1.0, 1e-12);
}

TEST(ScalarMinimize, ScanEscapesLocalMinimum) {
  auto f = [](double v) { return std::cos(3.0 * v) + 0.1 * v; };
  const auto [x, fx] = num::minimize_scalar_scan(f, 0.0, 10.0, 400);
  double best = 1e9;
  for (int i = 0; i <= 100000; ++i) best = std::min(best, f(1e-4 * i));
  EXPECT_NEAR(fx, best, 1e-8);
  EXPECT_LT(x, 2.0);
}

namespace {

double steady_amplitude(const num::FilterSpec& spec, double f, double fs) {
  std::vector<double> x(20000);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = std::sin(2.0 * std::numbers::pi * f * static_cast<double>(i) / fs);
  const auto y = num::apply_filter(spec, x, fs);
  double a = 0.0;
  for (std::size_t i = x.size() / 2; i < x.size(); ++i) a = std::max(a, std::abs(y[i]));
  return a;
}

}  // namespace

TEST(Filters, LowPassIsHalfPowerAtCutoff) {
  EXPECT_NEAR(steady_amplitude(num::LowPass{80e6}, 80e6, 5e9), std::sqrt(0.5), 2e-3);
  EXPECT_NEAR(steady_amplitude(num::LowPass{80e6}, 1e6, 5e9), 1.0, 1e-3);
  EXPECT_LT(steady_amplitude(num::LowPass{80e6}, 1e9, 5e9), 0.1);
}

TEST(Filters, LowPassHasUnitDcGain) {
  const std::vector<double> x(5000, 1.0);
  const auto y = num::apply_filter(num::LowPass{10e6}, x, 1e9);
  EXPECT_NEAR(y.back(), 1.0, 1e-12);
}

TEST(Filters, BandPassBlocksDcAndPassesMidBand) {
  const num::BandPass bp{1e6, 500e6};
  const std::vector<double> x(200000, 1.0);
  EXPECT_LT(std::abs(num::apply_filter(bp, x, 5e9).back()), 1e-3);
  EXPECT_NEAR(steady_amplitude(bp, 20e6, 5e9), 1.0, 0.01);
  EXPECT_NEAR(steady_amplitude(bp, 500e6, 5e9), std::sqrt(0.5), 0.01);
}

TEST(Filters, CutoffAtOrAboveNyquistIsRejected) {
  const std::vector<double> x(10, 1.0);
  EXPECT_THROW(num::apply_filter(num::LowPass{3e9}, x, 5e9), snd::DomainError);
  EXPECT_THROW(num::apply_filter(num::LowPass{0.0}, x, 5e9), snd::DomainError);
  EXPECT_DOUBLE_EQ(num::highest_cutoff(num::BandPass{1e6, 2e8}), 2e8);
}

TEST(Filters, LowPassReducesWhiteNoiseVariance) {
  num::RandomStream rng(3);
  std::vector<double> x(100000);
  for (double& v : x) v = rng.normal();
  const auto y = num::apply_filter(num::LowPass{80e6}, x, 5e9);
  double s = 0.0;
  for (std::size_t i = 1000; i < y.size(); ++i) s += y[i] * y[i];
  EXPECT_LT(s / static_cast<double>(y.size() - 1000), 0.1);
}

TEST(RandomStream, SameSeedAndStreamRepeat) {
  num::RandomStream a(42, 7), b(42, 7), c(42, 8);
  for (int i = 0; i < 100; ++i) {
    const double u = a.uniform();
    EXPECT_EQ(u, b.uniform());
    EXPECT_NE(u, c.uniform());
  }
}

TEST(RandomStream, DegenerateParameters) {
  num::RandomStream r(1);
  EXPECT_EQ(r.normal(3.0, 0.0), 3.0);
  EXPECT_EQ(r.poisson(0.0), 0u);
}

TEST(Csv, DoublesRoundTripExactly) {
  for (double v : {0.1, 1.0 / 3.0, 6.02214076e23, -2.5e-300, 0.0}) {
    EXPECT_EQ(snd::csv::parse_double(snd::csv::fmt(v)), v);
  }
  EXPECT_THROW(snd::csv::parse_double("1.5x"), std::exception);
}

TEST(Csv, TableReadsColumnsByName) {
  std::istringstream in("a,b\n1,2\n3,4\n");
  const auto t = snd::csv::read(in);
  ASSERT_EQ(t.rows.size(), 2u);
  EXPECT_EQ(t.rows[1][t.column("b")], "4");
}

TEST(Rk4, ZeroFieldKeepsState) {
  auto rhs = [](double, const num::State& y) { return num::State(y.size(), 0.0); };
  const auto tr = num::integrate_ode(rhs, {2.0, -1.0}, 1.0, 0.1);
  for (const auto& s : tr.states) EXPECT_EQ(s, (num::State{2.0, -1.0}));
}

TEST(Rk4, FineStepDecayMatchesAnalytic) { EXPECT_LT(decay_error(1e-4), 1e-8); }

TEST(LeastSquares, QuadraticBowl) {
  auto res = [](const std::vector<double>& p) { return std::vector<double>{p[0] - 3.0}; };
  const std::vector<double> lo{-10.0}, hi{10.0};
  EXPECT_NEAR(num::fit_least_squares(res, {0.0}, lo, hi).params[0], 3.0, 1e-10);
}

TEST(LeastSquares, RecoversGaussianFromOffsetSeed) {
  std::vector<double> x, y;
  for (int i = 0; i <= 60; ++i) {
    x.push_back(-1.0 + 0.05 * i);
    y.push_back(2.0 * std::exp(-std::pow(x.back() - 1.0, 2) / (2.0 * 0.5 * 0.5)));
  }
  auto res = [&](const std::vector<double>& p) {
    std::vector<double> r(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) r[i] = p[0] * std::exp(-std::pow(x[i] - p[1], 2) / (2.0 * p[2] * p[2])) - y[i];
    return r;
  };
  const std::vector<double> lo{0.0, -5.0, 0.01}, hi{10.0, 5.0, 5.0};
  const auto fit = num::fit_least_squares(res, {1.5, 0.8, 0.7}, lo, hi);
  EXPECT_NEAR(fit.params[0], 2.0, 1e-6);
  EXPECT_NEAR(fit.params[1], 1.0, 1e-6);
  EXPECT_NEAR(fit.params[2], 0.5, 1e-6);
}

TEST(LeastSquares, FlatObjectiveReturnsInitial) {
  auto res = [](const std::vector<double>&) { return std::vector<double>{1.0, 2.0}; };
  const std::vector<double> lo{-1.0, -1.0}, hi{1.0, 1.0};
  const auto fit = num::fit_least_squares(res, {0.25, -0.5}, lo, hi);
  EXPECT_TRUE(fit.converged);
  EXPECT_EQ(fit.params, (std::vector<double>{0.25, -0.5}));
}

TEST(Filters, LowPassAttenuationMatchesFirstOrderResponse) {
  const double expected = 1.0 / std::sqrt(1.0 + std::pow(1e9 / 80e6, 2));
  EXPECT_NEAR(steady_amplitude(num::LowPass{80e6}, 1e9, 40e9), expected, 0.05 * expected);
}
