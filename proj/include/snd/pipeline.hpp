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

// End-to-end analysis of a power sweep: per-power mixture fits, a shared
// level map, P(n) and efficiency per power, level noise, linearity and
// count-rate curves.

#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "snd/analysis.hpp"
#include "snd/csv.hpp"
#include "snd/errors.hpp"
#include "snd/experiment.hpp"
#include "snd/photonstats.hpp"

namespace snd::pipeline {

struct AnalysisOptions {
  double rep_rate = 1.0e6;
  double dark_count_rate = 0.0;
  double min_counts = 10.0;
  std::size_t max_peaks = 0;  // 0: N + 1
  analysis::MixtureOptions mixture;
};

struct SweepAnalysis {
  std::size_t n_elements = 0;
  std::vector<double> powers;
  std::vector<double> mu_bar;
  std::vector<analysis::Histogram> histograms;
  std::vector<analysis::MixtureFit> fits;
  analysis::LevelMap levels;
  std::vector<std::vector<double>> probabilities;  // [power][n], n = 0..N
  std::vector<photonstats::EfficiencyFit> eta;
  double eta_reference = 0.0;                      // median of the non-degenerate fits
  std::vector<double> expected_clicks;
  analysis::NoiseTable noise;
  analysis::CountRateReport count_rates;
  std::optional<analysis::PowerLawFit> linearity;
};

inline double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
  std::nth_element(v.begin(), mid, v.end());
  if (v.size() % 2 == 1) return *mid;
  return 0.5 * (*mid + *std::max_element(v.begin(), mid));
}

// `sweep.mu_bar` must hold the mean photon number per pulse of every power.
inline SweepAnalysis analyze_sweep(const experiment::PowerSweepResult& sweep, std::size_t n_elements,
                                   const AnalysisOptions& opt = {}) {
  if (sweep.mu_bar.size() != sweep.powers.size()) throw DomainError("analyze_sweep: mu_bar missing for some powers");
  if (n_elements < 1) throw DomainError("analyze_sweep: N must be >= 1");
  SweepAnalysis a;
  a.n_elements = n_elements;
  a.powers = sweep.powers;
  a.mu_bar = sweep.mu_bar;
  const std::size_t max_peaks = opt.max_peaks > 0 ? opt.max_peaks : n_elements + 1;
  for (const auto& h : sweep.histograms) {
    a.histograms.push_back(analysis::Histogram::from_counts(sweep.spec.lo, sweep.spec.width, h));
    a.fits.push_back(analysis::fit_gaussian_mixture(a.histograms.back(), max_peaks, opt.mixture));
  }
  a.levels = analysis::build_level_map(a.fits, opt.mixture.hint.zero_level);

  std::vector<double> good;
  for (std::size_t ip = 0; ip < a.fits.size(); ++ip) {
    auto p = analysis::peak_probabilities(a.fits[ip], n_elements + 1);
    p.resize(n_elements + 1);
    a.probabilities.push_back(p);
    a.eta.push_back(photonstats::fit_efficiency(n_elements, a.mu_bar[ip], p));
    if (!a.eta.back().degenerate) good.push_back(a.eta.back().eta);
  }
  a.eta_reference = median(good);
  for (double mu : a.mu_bar) a.expected_clicks.push_back(photonstats::expected_clicks(n_elements, a.eta_reference, mu));

  a.noise = analysis::noise_curves(a.fits, a.powers, n_elements);
  analysis::CountRateOptions cr;
  cr.rep_rate = opt.rep_rate;
  cr.dark_count_rate = opt.dark_count_rate;
  cr.min_counts = opt.min_counts;
  a.count_rates = analysis::count_rate_analysis(a.histograms, a.powers, a.levels, a.expected_clicks, cr);
  const auto pts = analysis::level_heights(a.levels);
  if (pts.size() >= 2) a.linearity = analysis::fit_power_law(pts);
  return a;
}

// Columns: power_w, mu_bar, eta_fit, expected_clicks, p_0 .. p_N.
inline void write_probabilities_csv(std::ostream& os, const SweepAnalysis& a) {
  std::vector<std::string> header{"power_w", "mu_bar", "eta_fit", "expected_clicks"};
  for (std::size_t n = 0; n <= a.n_elements; ++n) header.push_back("p_" + std::to_string(n));
  csv::write_row(os, header);
  for (std::size_t ip = 0; ip < a.powers.size(); ++ip) {
    std::vector<std::string> row{csv::fmt(a.powers[ip]), csv::fmt(a.mu_bar[ip]), csv::fmt(a.eta[ip].eta),
                                 csv::fmt(a.expected_clicks[ip])};
    for (double p : a.probabilities[ip]) row.push_back(csv::fmt(p));
    csv::write_row(os, row);
  }
}

// Columns: n, level_v.
inline void write_levels_csv(std::ostream& os, const analysis::LevelMap& map) {
  csv::write_row(os, {"n", "level_v"});
  for (std::size_t n = 0; n < map.centers.size(); ++n) {
    if (std::isfinite(map.centers[n])) csv::write_row(os, {std::to_string(n), csv::fmt(map.centers[n])});
  }
}

// Columns: threshold_n, power_w, count_rate, low_power_slope.
inline void write_count_rate_csv(std::ostream& os, const analysis::CountRateReport& rep) {
  csv::write_row(os, {"threshold_n", "power_w", "count_rate", "low_power_slope"});
  for (const auto& c : rep.curves) {
    const std::string slope = std::isfinite(c.low_power_slope) ? csv::fmt(c.low_power_slope) : "";
    for (std::size_t ip = 0; ip < c.powers.size(); ++ip) {
      csv::write_row(os, {std::to_string(c.threshold_label), csv::fmt(c.powers[ip]), csv::fmt(c.rates[ip]), slope});
    }
  }
}

}  // namespace snd::pipeline
