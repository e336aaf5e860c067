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

// Pulse-height histogram analysis: Gaussian-mixture fits, photon-number
// probabilities, level noise, linearity, count-rate slopes and DQE.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <numbers>
#include <numeric>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "snd/csv.hpp"
#include "snd/errors.hpp"
#include "snd/numerics.hpp"

namespace snd::analysis {

inline constexpr double kFwhmPerSigma = 2.3548200450309493;

struct Histogram {
  double lo = 0.0;     // lower edge of bin 0
  double width = 1.0;  // bin width
  std::vector<double> counts;

  std::size_t bins() const { return counts.size(); }
  double center(std::size_t b) const { return lo + (static_cast<double>(b) + 0.5) * width; }
  double total() const { return std::accumulate(counts.begin(), counts.end(), 0.0); }

  template <class Count>
  static Histogram from_counts(double lo, double width, const std::vector<Count>& c) {
    Histogram h{lo, width, {}};
    h.counts.assign(c.begin(), c.end());
    return h;
  }
};

struct Peak {
  double amplitude = 0.0;  // counts per bin at the peak center
  double center = 0.0;
  double fwhm = 0.0;

  // Area in counts (amplitude times the Gaussian integral in bin units).
  double area(double bin_width) const {
    return amplitude * fwhm / bin_width * std::sqrt(std::numbers::pi / (4.0 * std::log(2.0)));
  }
};

struct MixtureFit {
  std::vector<Peak> peaks;  // sorted by center
  std::vector<int> n_labels;
  double residual = 0.0;    // weighted sum of squared residuals
  double bin_width = 1.0;
  bool low_confidence = false;
};

// Where the zero-photon level sits, and the level spacing if known.
struct LevelHint {
  double zero_level = 0.0;
  std::optional<double> spacing;
};

struct MixtureOptions {
  double min_improvement = 0.05;   // relative residual drop required to keep a new peak
  double separation = 0.5;         // in units of the local FWHM
  double smoothing_bins = 1.0;     // sd of the seed-finding smoothing kernel
  double floor_fraction = 1e-3;    // ignore seeds below this fraction of the tallest
  double min_seed_counts = 3.0;    // smoothed counts per bin
  std::size_t max_candidates = 64;
  LevelHint hint;
};

namespace detail {


struct Candidate {
  double position = 0.0;  // bin units
  double height = 0.0;
  double fwhm = 1.0;      // bin units
};

inline std::vector<double> smooth(const std::vector<double>& c, double sd) {
  if (sd <= 0.0) return c;
  const int radius = static_cast<int>(std::ceil(3.0 * sd));
  std::vector<double> kernel;
  for (int i = -radius; i <= radius; ++i) kernel.push_back(std::exp(-0.5 * i * i / (sd * sd)));
  const double ks = std::accumulate(kernel.begin(), kernel.end(), 0.0);
  std::vector<double> out(c.size(), 0.0);
  const int n = static_cast<int>(c.size());
  for (int b = 0; b < n; ++b) {
    double s = 0.0;
    for (int i = -radius; i <= radius; ++i) {
      const int j = b + i;
      if (j >= 0 && j < n) s += kernel[static_cast<std::size_t>(i + radius)] * c[static_cast<std::size_t>(j)];
    }
    out[static_cast<std::size_t>(b)] = s / ks;
  }
  return out;
}

inline std::vector<Candidate> find_candidates(const std::vector<double>& counts, const MixtureOptions& opt) {
  const auto s = smooth(counts, opt.smoothing_bins);
  const double top = *std::max_element(s.begin(), s.end());
  const double floor = std::max(top * opt.floor_fraction, std::min(opt.min_seed_counts, 0.5 * top));
  std::vector<Candidate> out;
  const std::size_t n = s.size();
  for (std::size_t b = 0; b < n; ++b) {
    const double left = b > 0 ? s[b - 1] : -1.0;
    const double right = b + 1 < n ? s[b + 1] : -1.0;
    if (!(s[b] > left && s[b] >= right && s[b] >= floor)) continue;
    // Width: walk down to half height or to a valley on each side.
    const double half = 0.5 * s[b];
    std::size_t l = b, r = b;
    while (l > 0 && s[l - 1] > half && s[l - 1] <= s[l]) --l;
    while (r + 1 < n && s[r + 1] > half && s[r + 1] <= s[r]) ++r;
    const double fwhm = std::max(1.0, static_cast<double>(r - l + 1));
    out.push_back({static_cast<double>(b) + 0.5, s[b], fwhm});
  }
  std::sort(out.begin(), out.end(), [](const Candidate& a, const Candidate& b) { return a.height > b.height; });
  if (out.size() > opt.max_candidates) out.resize(opt.max_candidates);
  return out;
}

// Weighted residuals of a Gaussian mixture in bin units. Parameters are
// (amplitude, center, fwhm) triples with amplitude in counts per bin at the
// center; each peak only touches bins within six FWHM of its center.
struct MixtureResiduals {
  const std::vector<double>* counts;
  std::vector<double> inv_sd;

  explicit MixtureResiduals(const std::vector<double>& c) : counts(&c), inv_sd(c.size()) {
    for (std::size_t b = 0; b < c.size(); ++b) inv_sd[b] = 1.0 / std::sqrt(std::max(c[b], 1.0));
  }

  // Counts expected in each bin: the Gaussian integrated over the bin, so
  // peaks narrower than a bin stay well conditioned.
  std::vector<double> model(const std::vector<double>& p) const {
    const std::size_t n = counts->size();
    std::vector<double> m(n, 0.0);
    for (std::size_t j = 0; j + 2 < p.size(); j += 3) {
      const double a = p[j], c = p[j + 1], f = p[j + 2];
      const double k = 2.0 * std::sqrt(std::log(2.0)) / f;  // 1 / (sigma sqrt 2)
      const double scale = 0.5 * a * std::sqrt(std::numbers::pi) / k;
      const double reach = 6.0 * f + 1.0;
      const auto b0 = static_cast<std::size_t>(std::clamp(std::floor(c - reach), 0.0, static_cast<double>(n)));
      const auto b1 = static_cast<std::size_t>(std::clamp(std::ceil(c + reach), 0.0, static_cast<double>(n)));
      double lower = std::erf((static_cast<double>(b0) - c) * k);
      for (std::size_t b = b0; b < b1; ++b) {
        const double upper = std::erf((static_cast<double>(b) + 1.0 - c) * k);
        m[b] += scale * (upper - lower);
        lower = upper;
      }
    }
    return m;
  }

  std::vector<double> operator()(const std::vector<double>& p) const {
    auto r = model(p);
    for (std::size_t b = 0; b < r.size(); ++b) r[b] = (r[b] - (*counts)[b]) * inv_sd[b];
    return r;
  }
};

inline double sumsq(const std::vector<double>& r) {
  double s = 0.0;
  for (double x : r) s += x * x;
  return s;
}

inline numerics::FitOutcome refine(const MixtureResiduals& res, const std::vector<double>& init, double max_count,
                                   double bins) {
  const std::size_t np = init.size();
  std::vector<double> lower(np), upper(np), start = init;
  for (std::size_t j = 0; j < np; j += 3) {
    lower[j] = 0.0;
    upper[j] = 10.0 * max_count + 10.0;
    lower[j + 1] = -5.0;
    upper[j + 1] = bins + 5.0;
    lower[j + 2] = 0.25;
    upper[j + 2] = bins;
  }
  for (std::size_t j = 0; j < np; ++j) start[j] = std::clamp(start[j], lower[j], upper[j]);
  numerics::LeastSquaresOptions opt;
  opt.max_iterations = 300;
  opt.ftol = 1e-10;
  opt.xtol = 1e-10;
  return numerics::fit_least_squares(res, start, lower, upper, opt);
}

}  // namespace detail

// Assigns photon-number labels from the level positions: the peak at the
// zero level is n = 0 and the others follow by their distance in units of
// the level spacing. Labels are forced to increase strictly with center.
inline std::vector<int> label_peaks(const std::vector<Peak>& peaks, const LevelHint& hint) {
  std::vector<int> labels(peaks.size(), 0);
  if (peaks.empty()) return labels;
  double spacing = hint.spacing.value_or(0.0);
  if (!(spacing > 0.0) && peaks.size() >= 2) {
    std::vector<double> d;
    for (std::size_t i = 1; i < peaks.size(); ++i) d.push_back(peaks[i].center - peaks[i - 1].center);
    std::nth_element(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(d.size() / 2), d.end());
    spacing = d[d.size() / 2];
  }
  for (std::size_t i = 0; i < peaks.size(); ++i) {
    if (spacing > 0.0) {
      labels[i] = static_cast<int>(std::lround((peaks[i].center - hint.zero_level) / spacing));
    } else {
      labels[i] = std::abs(peaks[i].center - hint.zero_level) <= peaks[i].fwhm ? 0 : 1;
    }
    labels[i] = std::max(labels[i], 0);
    if (i > 0 && labels[i] <= labels[i - 1]) labels[i] = labels[i - 1] + 1;
  }
  return labels;
}

// Gaussian-mixture fit with greedy model selection. Seeds are local maxima
// of the smoothed histogram, tried tallest first; a seed becomes a peak if
// it is more than half a local FWHM away from every accepted peak and the
// joint least-squares refit lowers the residual by more than 5%.
inline MixtureFit fit_gaussian_mixture(const Histogram& hist, std::size_t max_peaks, const MixtureOptions& opt = {}) {
  if (hist.counts.empty() || !(hist.total() > 0.0)) throw DomainError("fit_gaussian_mixture: empty histogram");
  if (max_peaks < 1) throw DomainError("fit_gaussian_mixture: max_peaks must be >= 1");
  const double bins = static_cast<double>(hist.bins());
  const double max_count = *std::max_element(hist.counts.begin(), hist.counts.end());
  const detail::MixtureResiduals res(hist.counts);

  MixtureFit out;
  out.bin_width = hist.width;
  auto cands = detail::find_candidates(hist.counts, opt);
  std::vector<double> params;
  double ssr = 0.0;
  if (cands.empty()) {
    // Nothing stands out: one broad peak at the mean.
    double m = 0.0, v = 0.0;
    const double tot = hist.total();
    for (std::size_t b = 0; b < hist.bins(); ++b) m += hist.counts[b] * (static_cast<double>(b) + 0.5) / tot;
    for (std::size_t b = 0; b < hist.bins(); ++b) {
      v += hist.counts[b] * std::pow(static_cast<double>(b) + 0.5 - m, 2) / tot;
    }
    cands.push_back({m, max_count, std::max(1.0, kFwhmPerSigma * std::sqrt(v))});
    out.low_confidence = true;
  }
  {
    const auto& c = cands.front();
    auto fit = detail::refine(res, {c.height, c.position, c.fwhm}, max_count, bins);
    params = fit.params;
    ssr = fit.residual_norm * fit.residual_norm;
  }
  for (std::size_t ci = 1; ci < cands.size() && params.size() / 3 < max_peaks; ++ci) {
    const auto& c = cands[ci];
    bool separated = true;
    for (std::size_t j = 0; j < params.size(); j += 3) {
      // The narrower width decides, so a broad early fit spanning two
      // levels cannot shadow the seeds it swallowed.
      const double local = std::min(params[j + 2], c.fwhm);
      if (std::abs(params[j + 1] - c.position) <= opt.separation * local) {
        separated = false;
        break;
      }
    }
    if (!separated) continue;
    auto trial = params;
    trial.insert(trial.end(), {c.height, c.position, c.fwhm});
    numerics::FitOutcome fit;
    try {
      fit = detail::refine(res, trial, max_count, bins);
    } catch (const FitError&) {
      continue;
    }
    const double trial_ssr = fit.residual_norm * fit.residual_norm;
    if (trial_ssr < (1.0 - opt.min_improvement) * ssr) {
      params = fit.params;
      ssr = trial_ssr;
    }
  }

  for (std::size_t j = 0; j < params.size(); j += 3) {
    out.peaks.push_back({params[j], hist.lo + params[j + 1] * hist.width, params[j + 2] * hist.width});
  }
  std::sort(out.peaks.begin(), out.peaks.end(), [](const Peak& a, const Peak& b) { return a.center < b.center; });
  // Drop peaks that collapsed onto a neighbour during the joint refit.
  std::vector<Peak> kept;
  for (const auto& p : out.peaks) {
    if (p.amplitude <= 0.0) continue;
    if (!kept.empty() && p.center - kept.back().center <= 0.0) continue;
    kept.push_back(p);
  }
  out.peaks = std::move(kept);
  out.residual = ssr;
  out.n_labels = label_peaks(out.peaks, opt.hint);
  return out;
}

// Normalized Gaussian areas indexed by photon-number label; labels without a
// peak get 0. `size` is the length of the returned vector (at least
// max label + 1 if zero).
inline std::vector<double> peak_probabilities(const MixtureFit& fit, std::size_t size = 0) {
  int max_label = -1;
  for (int l : fit.n_labels) max_label = std::max(max_label, l);
  std::vector<double> p(std::max<std::size_t>(size, static_cast<std::size_t>(max_label + 1)), 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < fit.peaks.size(); ++i) {
    const auto label = static_cast<std::size_t>(fit.n_labels[i]);
    if (label >= p.size()) continue;
    const double a = fit.peaks[i].amplitude * fit.peaks[i].fwhm;
    p[label] += a;
    total += a;
  }
  if (total > 0.0) {
    for (double& x : p) x /= total;
  }
  return p;
}

// ---------------------------------------------------------------------------
// Sweep-wide level map

struct LevelMap {
  std::vector<double> centers;  // index = photon number; NaN where never observed
  double spacing = 0.0;

  std::size_t distinct_levels() const {
    return static_cast<std::size_t>(std::count_if(centers.begin(), centers.end(), [](double c) { return std::isfinite(c); }));
  }
};

// Pools the fitted centers of all powers, clusters them into levels and
// labels the levels by rank from the zero level. Each fit's labels are
// rewritten to the label of its nearest level.
inline LevelMap build_level_map(std::vector<MixtureFit>& fits, double zero_level = 0.0) {
  auto median_spacing = [&](auto&& keep) {
    std::vector<double> d;
    for (const auto& f : fits) {
      const Peak* prev = nullptr;
      for (const auto& p : f.peaks) {
        if (!keep(f, p)) continue;
        if (prev) d.push_back(p.center - prev->center);
        prev = &p;
      }
    }
    if (d.empty()) return 0.0;
    std::nth_element(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(d.size() / 2), d.end());
    return d[d.size() / 2];
  };
  LevelMap map;
  // Peaks broader than a level spacing (merged levels, background) would
  // bridge neighbouring clusters; they are labeled afterwards by nearest level.
  const double rough = median_spacing([](const MixtureFit&, const Peak&) { return true; });
  auto clean = [&](const MixtureFit&, const Peak& p) { return !(rough > 0.0) || p.fwhm <= rough; };
  map.spacing = median_spacing(clean);
  if (!(map.spacing > 0.0)) map.spacing = rough;
  std::vector<double> all;
  for (const auto& f : fits) {
    for (const auto& p : f.peaks) {
      if (clean(f, p)) all.push_back(p.center);
    }
  }
  if (all.empty()) {
    for (const auto& f : fits) {
      for (const auto& p : f.peaks) all.push_back(p.center);
    }
  }
  if (all.empty()) return map;
  std::sort(all.begin(), all.end());
  const double gap = map.spacing > 0.0 ? 0.5 * map.spacing : std::numeric_limits<double>::infinity();
  std::vector<std::vector<double>> clusters{{all.front()}};
  for (std::size_t i = 1; i < all.size(); ++i) {
    if (all[i] - all[i - 1] > gap) clusters.emplace_back();
    clusters.back().push_back(all[i]);
  }
  std::vector<double> level_centers;
  for (const auto& c : clusters) level_centers.push_back(std::accumulate(c.begin(), c.end(), 0.0) / static_cast<double>(c.size()));
  int first = 0;
  if (map.spacing > 0.0) first = std::max(0, static_cast<int>(std::lround((level_centers.front() - zero_level) / map.spacing)));
  std::vector<int> labels;
  for (std::size_t i = 0; i < level_centers.size(); ++i) {
    int l = first + static_cast<int>(i);
    // Skip labels across a missing level.
    if (i > 0 && map.spacing > 0.0) {
      const int jump = static_cast<int>(std::lround((level_centers[i] - level_centers[i - 1]) / map.spacing));
      l = labels.back() + std::max(1, jump);
    }
    labels.push_back(l);
  }
  map.centers.assign(static_cast<std::size_t>(labels.back() + 1), std::numeric_limits<double>::quiet_NaN());
  for (std::size_t i = 0; i < labels.size(); ++i) map.centers[static_cast<std::size_t>(labels[i])] = level_centers[i];

  for (auto& f : fits) {
    for (std::size_t i = 0; i < f.peaks.size(); ++i) {
      std::size_t best = 0;
      double best_d = std::numeric_limits<double>::infinity();
      for (std::size_t k = 0; k < level_centers.size(); ++k) {
        const double d = std::abs(level_centers[k] - f.peaks[i].center);
        if (d < best_d) {
          best_d = d;
          best = k;
        }
      }
      f.n_labels[i] = labels[best];
    }
  }
  return map;
}

// ---------------------------------------------------------------------------
// Linearity

struct PowerLawFit {
  double A = 0.0;
  double alpha = 0.0;
  double r_squared = 0.0;
};

struct LevelPoint {
  double n = 0.0;
  double height = 0.0;
};

// H = A n^alpha by ordinary least squares on (ln n, ln H).
inline PowerLawFit fit_power_law(const std::vector<LevelPoint>& points) {
  if (points.size() < 2) throw DomainError("fit_power_law: need at least two points");
  double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
  for (const auto& p : points) {
    if (!(p.n >= 1.0)) throw DomainError("fit_power_law: n must be >= 1");
    if (!(p.height > 0.0)) throw DomainError("fit_power_law: heights must be positive");
    const double x = std::log(p.n), y = std::log(p.height);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    syy += y * y;
  }
  const double m = static_cast<double>(points.size());
  const double sxx_c = sxx - sx * sx / m;
  const double sxy_c = sxy - sx * sy / m;
  const double syy_c = syy - sy * sy / m;
  if (!(sxx_c > 0.0)) throw DomainError("fit_power_law: need at least two distinct n");
  PowerLawFit f;
  f.alpha = sxy_c / sxx_c;
  f.A = std::exp((sy - f.alpha * sx) / m);
  f.r_squared = syy_c > 0.0 ? (sxy_c * sxy_c) / (sxx_c * syy_c) : 1.0;
  return f;
}

// Level heights above the zero level for n >= 1, taken from a level map.
inline std::vector<LevelPoint> level_heights(const LevelMap& map) {
  std::vector<LevelPoint> pts;
  const double zero = !map.centers.empty() && std::isfinite(map.centers[0]) ? map.centers[0] : 0.0;
  for (std::size_t n = 1; n < map.centers.size(); ++n) {
    if (std::isfinite(map.centers[n])) pts.push_back({static_cast<double>(n), map.centers[n] - zero});
  }
  return pts;
}

// ---------------------------------------------------------------------------
// Count rates

struct CountRateCurve {
  int threshold_label = 0;        // counts '>= n photon' responses
  double threshold = 0.0;         // V
  std::vector<double> powers;     // W
  std::vector<double> rates;      // counts/s, DCR subtracted
  std::vector<double> counts;     // raw counts above threshold
  double low_power_slope = std::numeric_limits<double>::quiet_NaN();
  std::size_t slope_points = 0;
};

struct CountRateOptions {
  double rep_rate = 1.0e6;
  double dark_count_rate = 0.0;
  double min_counts = 10.0;  // points with fewer counts above threshold are left out of the slope fit
};

struct CountRateReport {
  std::vector<CountRateCurve> curves;
  std::vector<std::string> notices;
};

// For each n >= 1 the trigger sits midway between levels n-1 and n. The
// low-power slope is the least-squares slope of ln CR against ln power over
// powers whose expected click number is below one.
inline CountRateReport count_rate_analysis(const std::vector<Histogram>& hists, const std::vector<double>& powers,
                                           const LevelMap& levels, const std::vector<double>& expected_clicks,
                                           const CountRateOptions& opt = {}) {
  if (hists.size() != powers.size() || expected_clicks.size() != powers.size()) {
    throw DomainError("count_rate_analysis: histograms, powers and expected clicks must align");
  }
  CountRateReport rep;
  for (std::size_t n = 1; n < levels.centers.size(); ++n) {
    if (!std::isfinite(levels.centers[n - 1]) || !std::isfinite(levels.centers[n])) {
      rep.notices.push_back("n=" + std::to_string(n) + ": adjacent levels not both observed, no trigger placed");
      continue;
    }
    CountRateCurve c;
    c.threshold_label = static_cast<int>(n);
    c.threshold = 0.5 * (levels.centers[n - 1] + levels.centers[n]);
    double any = 0.0;
    for (std::size_t ip = 0; ip < powers.size(); ++ip) {
      const auto& h = hists[ip];
      double above = 0.0;
      for (std::size_t b = 0; b < h.bins(); ++b) {
        if (h.center(b) > c.threshold) above += h.counts[b];
      }
      const double shots = h.total();
      c.powers.push_back(powers[ip]);
      c.counts.push_back(above);
      c.rates.push_back(std::max(0.0, opt.rep_rate * above / shots - opt.dark_count_rate));
      any += above;
    }
    if (any == 0.0) {
      rep.notices.push_back("n=" + std::to_string(n) + ": no counts above threshold at any power, curve omitted");
      continue;
    }
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    std::size_t m = 0;
    for (std::size_t ip = 0; ip < powers.size(); ++ip) {
      if (!(powers[ip] > 0.0) || !(expected_clicks[ip] < 1.0) || c.counts[ip] < opt.min_counts || !(c.rates[ip] > 0.0)) {
        continue;
      }
      const double x = std::log(powers[ip]), y = std::log(c.rates[ip]);
      sx += x;
      sy += y;
      sxx += x * x;
      sxy += x * y;
      ++m;
    }
    c.slope_points = m;
    if (m >= 2) {
      const double md = static_cast<double>(m);
      const double den = md * sxx - sx * sx;
      if (den > 0.0) c.low_power_slope = (md * sxy - sx * sy) / den;
    }
    rep.curves.push_back(std::move(c));
  }
  return rep;
}

struct DqeResult {
  double value = 0.0;
  bool inconsistent = false;  // raw ratio exceeded 1 and was clamped
};

inline DqeResult dqe(double counts_above_zero_level, double incident_photon_rate) {
  if (!(incident_photon_rate > 0.0)) throw DomainError("dqe: incident photon rate must be positive");
  if (!(counts_above_zero_level >= 0.0)) throw DomainError("dqe: count rate must be >= 0");
  const double r = counts_above_zero_level / incident_photon_rate;
  if (r > 1.0) return {1.0, true};
  return {r, false};
}

// ---------------------------------------------------------------------------
// Level noise

// V_N(n, power): FWHM of the fitted peak labeled n at each power, absent
// where no such peak was fitted.
struct NoiseTable {
  std::vector<double> powers;
  std::vector<std::vector<std::optional<double>>> v_n;  // [power][n]

  // V_N against power for one n.
  std::vector<std::optional<double>> by_power(std::size_t n) const {
    std::vector<std::optional<double>> out;
    for (const auto& row : v_n) out.push_back(n < row.size() ? row[n] : std::nullopt);
    return out;
  }

  // V_N against n for one power.
  const std::vector<std::optional<double>>& by_n(std::size_t power_index) const { return v_n.at(power_index); }
};

inline NoiseTable noise_curves(const std::vector<MixtureFit>& fits, const std::vector<double>& powers,
                               std::size_t max_n) {
  if (fits.size() != powers.size()) throw DomainError("noise_curves: one fit per power required");
  NoiseTable t;
  t.powers = powers;
  for (const auto& f : fits) {
    std::vector<std::optional<double>> row(max_n + 1);
    for (std::size_t i = 0; i < f.peaks.size(); ++i) {
      const auto l = static_cast<std::size_t>(f.n_labels[i]);
      if (l <= max_n) row[l] = f.peaks[i].fwhm;
    }
    t.v_n.push_back(std::move(row));
  }
  return t;
}

// Columns: power_w, n, v_n (empty where absent).
inline void write_noise_csv(std::ostream& os, const NoiseTable& t) {
  csv::write_row(os, {"power_w", "n", "v_n"});
  for (std::size_t ip = 0; ip < t.powers.size(); ++ip) {
    for (std::size_t n = 0; n < t.v_n[ip].size(); ++n) {
      csv::write_row(os, {csv::fmt(t.powers[ip]), std::to_string(n), t.v_n[ip][n] ? csv::fmt(*t.v_n[ip][n]) : ""});
    }
  }
}

// Columns: power_w, n, amplitude, center_v, fwhm_v.
inline void write_peaks_csv(std::ostream& os, const std::vector<MixtureFit>& fits, const std::vector<double>& powers) {
  csv::write_row(os, {"power_w", "n", "amplitude", "center_v", "fwhm_v"});
  for (std::size_t ip = 0; ip < fits.size(); ++ip) {
    const auto& f = fits[ip];
    for (std::size_t i = 0; i < f.peaks.size(); ++i) {
      csv::write_row(os, {csv::fmt(powers[ip]), std::to_string(f.n_labels[i]), csv::fmt(f.peaks[i].amplitude),
                          csv::fmt(f.peaks[i].center), csv::fmt(f.peaks[i].fwhm)});
    }
  }
}

// Human-readable peak table per power.
inline void write_fit_report(std::ostream& os, const std::vector<MixtureFit>& fits, const std::vector<double>& powers) {
  char line[160];
  for (std::size_t ip = 0; ip < fits.size(); ++ip) {
    const auto& f = fits[ip];
    std::snprintf(line, sizeof line, "power %.4g W: %zu peaks, residual %.4g%s\n", powers[ip], f.peaks.size(),
                  f.residual, f.low_confidence ? " (low confidence)" : "");
    os << line;
    os << "   n    amplitude      center_V        fwhm_V\n";
    for (std::size_t i = 0; i < f.peaks.size(); ++i) {
      std::snprintf(line, sizeof line, "  %2d  %11.4g  %12.5g  %12.5g\n", f.n_labels[i], f.peaks[i].amplitude,
                    f.peaks[i].center, f.peaks[i].fwhm);
      os << line;
    }
  }
}

}  // namespace snd::analysis
