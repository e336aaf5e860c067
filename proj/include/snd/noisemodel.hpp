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

// Combinatorial excess-noise model: every element has its own single-photon
// pulse height, and an n-photon event sums the heights of whichever n
// elements fired. With all subsets equally likely, the spread of the summed
// height is that of sampling n of N values without replacement, so it
// vanishes at n = 0 and n = N and peaks at n = N/2.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <ostream>
#include <string>
#include <vector>

#include <boost/math/distributions/normal.hpp>

#include "snd/csv.hpp"
#include "snd/errors.hpp"
#include "snd/numerics.hpp"

namespace snd::noisemodel {

inline constexpr double kFwhmPerSigma = 2.3548200450309493;  // 2 sqrt(2 ln 2)

struct HeightProfile {
  double center = 1.0;
  double fwhm = 0.1;
};

struct ElementHeights {
  std::vector<double> heights;
  HeightProfile profile;

  double mean() const {
    double s = 0.0;
    for (double h : heights) s += h;
    return s / static_cast<double>(heights.size());
  }

  // Population (divide-by-N) standard deviation.
  double population_sd() const {
    const double m = mean();
    double s = 0.0;
    for (double h : heights) s += (h - m) * (h - m);
    return std::sqrt(s / static_cast<double>(heights.size()));
  }
};

// Deterministic quantile assignment: height_k is the (k + 1/2)/N quantile of
// a Gaussian with the given center and FWHM.
inline ElementHeights element_heights(const HeightProfile& profile, std::size_t n_elements) {
  if (n_elements < 1) throw DomainError("element_heights: N must be >= 1");
  if (!(profile.fwhm >= 0.0)) throw DomainError("element_heights: fwhm must be >= 0");
  if (!(profile.center > 0.0)) throw DomainError("element_heights: center must be > 0");
  ElementHeights out{std::vector<double>(n_elements, profile.center), profile};
  if (profile.fwhm == 0.0) return out;
  const boost::math::normal_distribution<double> dist(profile.center, profile.fwhm / kFwhmPerSigma);
  for (std::size_t k = 0; k < n_elements; ++k) {
    out.heights[k] = boost::math::quantile(dist, (static_cast<double>(k) + 0.5) / static_cast<double>(n_elements));
  }
  for (double h : out.heights) {
    if (!(h > 0.0)) throw DomainError("element_heights: profile too wide, non-positive heights");
  }
  return out;
}

struct GaussianFit {
  double center = 0.0;
  double fwhm = 0.0;
  bool fallback = false;  // fit did not converge; fwhm is 2.3548 * std instead
};

struct HeightDistribution {
  std::size_t n = 0;
  std::vector<double> support;  // one entry per subset (C(N, n) of them)
  std::vector<double> weights;
  GaussianFit gauss_fit;

  double mean() const {
    double m = 0.0;
    for (std::size_t i = 0; i < support.size(); ++i) m += weights[i] * support[i];
    return m;
  }

  double variance() const {
    const double m = mean();
    double v = 0.0;
    for (std::size_t i = 0; i < support.size(); ++i) v += weights[i] * (support[i] - m) * (support[i] - m);
    return v;
  }
};

inline constexpr std::size_t kNoiseFitBins = 64;

// Bins the distribution into 64 uniform bins over [min - 2 sd, max + 2 sd]
// and fits one Gaussian to the bin masses. Point masses get fwhm 0 without
// fitting.
inline GaussianFit fit_gaussian(const HeightDistribution& d) {
  const auto [lo_it, hi_it] = std::minmax_element(d.support.begin(), d.support.end());
  const double sd = std::sqrt(d.variance());
  if (*hi_it - *lo_it <= 1e-12 * std::max(1.0, std::abs(*hi_it)) || sd == 0.0) return {d.mean(), 0.0, false};

  const double lo = *lo_it - 2.0 * sd;
  const double width = (*hi_it + 2.0 * sd - lo) / static_cast<double>(kNoiseFitBins);
  std::vector<double> mass(kNoiseFitBins, 0.0);
  for (std::size_t i = 0; i < d.support.size(); ++i) {
    const auto b = std::min<std::size_t>(kNoiseFitBins - 1,
                                         static_cast<std::size_t>(std::floor((d.support[i] - lo) / width)));
    mass[b] += d.weights[i];
  }

  // Fit in bin units: x = (value - lo) / width, centers at b + 0.5.
  const double k4ln2 = 4.0 * std::log(2.0);
  auto residuals = [&](const std::vector<double>& p) {
    std::vector<double> r(kNoiseFitBins);
    for (std::size_t b = 0; b < kNoiseFitBins; ++b) {
      const double x = static_cast<double>(b) + 0.5 - p[1];
      r[b] = p[0] * std::exp(-k4ln2 * x * x / (p[2] * p[2])) - mass[b];
    }
    return r;
  };
  const std::vector<double> init{*std::max_element(mass.begin(), mass.end()), (d.mean() - lo) / width,
                                 kFwhmPerSigma * sd / width};
  const std::vector<double> lower{0.0, 0.0, 0.05};
  const std::vector<double> upper{10.0, static_cast<double>(kNoiseFitBins), 10.0 * kNoiseFitBins};
  try {
    const auto fit = numerics::fit_least_squares(residuals, init, lower, upper);
    if (fit.converged) return {lo + fit.params[1] * width, fit.params[2] * width, false};
  } catch (const FitError&) {
  }
  return {d.mean(), kFwhmPerSigma * sd, true};
}

// Enumerates all C(N, n) subsets with equal weight.
inline HeightDistribution subset_sum_distribution(const ElementHeights& heights, std::size_t n) {
  const std::size_t big_n = heights.heights.size();
  if (n > big_n) throw DomainError("subset_sum_distribution: n exceeds N");
  HeightDistribution d;
  d.n = n;
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  for (;;) {
    double s = 0.0;
    for (std::size_t i : idx) s += heights.heights[i];
    d.support.push_back(s);
    if (d.support.size() > 50'000'000) throw DomainError("subset_sum_distribution: too many subsets");
    // Advance to the next combination in lexicographic order.
    std::size_t i = n;
    while (i > 0 && idx[i - 1] == big_n - n + i - 1) --i;
    if (i == 0) break;
    ++idx[i - 1];
    for (std::size_t j = i; j < n; ++j) idx[j] = idx[j - 1] + 1;
  }
  d.weights.assign(d.support.size(), 1.0 / static_cast<double>(d.support.size()));
  d.gauss_fit = fit_gaussian(d);
  return d;
}

struct NoisePoint {
  std::size_t n = 0;
  double fwhm = 0.0;
  bool fallback = false;
};

inline std::vector<NoisePoint> excess_noise_curve(const ElementHeights& heights) {
  std::vector<NoisePoint> out;
  for (std::size_t n = 0; n <= heights.heights.size(); ++n) {
    const auto d = subset_sum_distribution(heights, n);
    out.push_back({n, d.gauss_fit.fwhm, d.gauss_fit.fallback});
  }
  return out;
}

// Columns: n, fwhm.
inline void write_csv(std::ostream& os, const std::vector<NoisePoint>& curve) {
  csv::write_row(os, {"n", "fwhm"});
  for (const auto& p : curve) csv::write_row(os, {std::to_string(p.n), csv::fmt(p.fwhm)});
}

}  // namespace snd::noisemodel
