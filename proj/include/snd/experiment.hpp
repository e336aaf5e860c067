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

// Virtual measurement chain: laser -> Gaussian spot on the striped array ->
// Poisson photons per element -> firings -> superposed circuit pulses ->
// amplifier noise, filters and gain -> one sampled voltage per laser pulse
// -> pulse-height histograms over a power sweep.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <numbers>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "snd/circuit.hpp"
#include "snd/csv.hpp"
#include "snd/errors.hpp"
#include "snd/noisemodel.hpp"
#include "snd/numerics.hpp"
#include "snd/photonstats.hpp"

namespace snd::experiment {

inline constexpr double kPlanck = 6.62607015e-34;      // J s
inline constexpr double kLightSpeed = 299792458.0;     // m/s
inline constexpr double kBoltzmann = 1.380649e-23;     // J/K
inline constexpr double kFwhmPerSigma = noisemodel::kFwhmPerSigma;

// Extent of one element along x; every stripe spans the full array height.
struct Stripe {
  double x0 = 0.0;
  double x1 = 0.0;
};

struct BeamProfile {
  double fwhm = 11.8e-6;        // m, intensity FWHM per axis
  double array_side = 12.0e-6;  // m
  double fill_factor = 0.4;
  std::vector<Stripe> stripes;  // empty: N equal stripes tiling the square
  std::optional<double> coupling_override;  // replaces the computed aperture fraction

  std::vector<Stripe> resolved_stripes(std::size_t n) const {
    if (!stripes.empty()) return stripes;
    std::vector<Stripe> s(n);
    const double w = array_side / static_cast<double>(n);
    for (std::size_t k = 0; k < n; ++k) {
      s[k] = {-0.5 * array_side + w * static_cast<double>(k), -0.5 * array_side + w * static_cast<double>(k + 1)};
    }
    return s;
  }

  std::vector<std::string> problems(std::size_t n) const {
    std::vector<std::string> p;
    if (!(fwhm > 0.0)) p.emplace_back("beam.fwhm must be > 0");
    if (!(array_side > 0.0)) p.emplace_back("beam.array_side must be > 0");
    if (!(fill_factor > 0.0 && fill_factor <= 1.0)) p.emplace_back("beam.fill_factor must lie in (0, 1]");
    if (coupling_override && !(*coupling_override >= 0.0 && *coupling_override <= 1.0)) {
      p.emplace_back("beam.coupling_override must lie in [0, 1]");
    }
    if (!stripes.empty()) {
      if (stripes.size() != n) p.emplace_back("beam.stripes must have one entry per element");
      auto sorted = stripes;
      std::sort(sorted.begin(), sorted.end(), [](const Stripe& a, const Stripe& b) { return a.x0 < b.x0; });
      for (std::size_t k = 0; k < sorted.size(); ++k) {
        const auto& s = sorted[k];
        if (!(s.x0 < s.x1) || s.x0 < -0.5 * array_side - 1e-15 || s.x1 > 0.5 * array_side + 1e-15) {
          p.emplace_back("beam.stripes must be non-empty intervals inside the array");
          break;
        }
        if (k > 0 && s.x0 < sorted[k - 1].x1 - 1e-15) {
          p.emplace_back("beam.stripes must be disjoint");
          break;
        }
      }
    }
    return p;
  }
};

struct LaserConfig {
  double wavelength = 1.31e-6;     // m
  double pulse_width = 100.0e-12;  // s
  double rep_rate = 1.0e6;         // Hz
  double power = 1.0e-9;           // W

  std::vector<std::string> problems() const {
    std::vector<std::string> p;
    if (!(wavelength > 0.0)) p.emplace_back("laser.wavelength must be > 0");
    if (!(pulse_width > 0.0)) p.emplace_back("laser.pulse_width must be > 0");
    if (!(rep_rate > 0.0)) p.emplace_back("laser.rep_rate must be > 0");
    if (!(power >= 0.0)) p.emplace_back("laser.power must be >= 0");
    return p;
  }
};

struct ReadoutChain {
  double gain_db = 51.0;
  double noise_rms = 0.0;  // V, white, referred to the amplifier input, per sample
  std::vector<numerics::FilterSpec> filters;
  double sample_rate = 5.0e9;
  double jitter_fwhm = 89.0e-12;  // s
  // Per-firing relative height jitter sd = base + per_photon * mu_bar.
  double height_jitter_base = 0.0;
  double height_jitter_per_photon = 0.0;

  double gain() const { return std::pow(10.0, gain_db / 20.0); }

  std::vector<std::string> problems() const {
    std::vector<std::string> p;
    if (!(sample_rate > 0.0)) p.emplace_back("readout.sample_rate must be > 0");
    if (!(noise_rms >= 0.0)) p.emplace_back("readout.noise_rms must be >= 0");
    if (!(jitter_fwhm >= 0.0)) p.emplace_back("readout.jitter_fwhm must be >= 0");
    if (!(height_jitter_base >= 0.0) || !(height_jitter_per_photon >= 0.0)) {
      p.emplace_back("readout.height_jitter coefficients must be >= 0");
    }
    for (const auto& f : filters) {
      if (!(sample_rate > 2.0 * numerics::highest_cutoff(f))) {
        p.emplace_back("readout.sample_rate must exceed twice the highest filter cutoff");
        break;
      }
      if (const auto* bp = std::get_if<numerics::BandPass>(&f); bp && !(bp->low_hz > 0.0 && bp->low_hz < bp->high_hz)) {
        p.emplace_back("readout band_pass needs 0 < low_hz < high_hz");
        break;
      }
      if (const auto* lp = std::get_if<numerics::LowPass>(&f); lp && !(lp->cutoff_hz > 0.0)) {
        p.emplace_back("readout low_pass needs cutoff_hz > 0");
        break;
      }
    }
    return p;
  }
};

// Input-referred white noise of a matched load at T0 = 290 K with the given
// noise figure, integrated up to the Nyquist frequency of the sampler.
inline double noise_rms_from_figure(double noise_figure_db, double r_load, double sample_rate) {
  const double f = std::pow(10.0, noise_figure_db / 10.0);
  return std::sqrt(kBoltzmann * 290.0 * r_load * 0.5 * sample_rate * f);
}

// Fraction of a centered circular Gaussian spot inside the square array.
inline double aperture_fraction(const BeamProfile& beam) {
  if (beam.array_side <= 0.0) return 0.0;
  if (beam.fwhm <= 0.0) return 1.0;
  const double sigma = beam.fwhm / kFwhmPerSigma;
  const double e = std::erf(0.5 * beam.array_side / (sigma * std::numbers::sqrt2));
  return e * e;
}

// Routing weight of each stripe: beam power on the stripe times the fill
// factor. With a coupling override the weights are rescaled so that they sum
// to fill_factor * override.
inline std::vector<double> element_coupling(const BeamProfile& beam, std::size_t n) {
  const auto stripes = beam.resolved_stripes(n);
  const double sigma = beam.fwhm / kFwhmPerSigma;
  auto cdf = [&](double x) { return 0.5 * std::erfc(-x / (sigma * std::numbers::sqrt2)); };
  const double y_frac = std::erf(0.5 * beam.array_side / (sigma * std::numbers::sqrt2));
  std::vector<double> q(stripes.size());
  for (std::size_t k = 0; k < stripes.size(); ++k) {
    q[k] = beam.fill_factor * (cdf(stripes[k].x1) - cdf(stripes[k].x0)) * y_frac;
  }
  if (beam.coupling_override) {
    double sum = 0.0;
    for (double v : q) sum += v;
    const double target = beam.fill_factor * *beam.coupling_override;
    if (sum > 0.0) {
      for (double& v : q) v *= target / sum;
    }
  }
  return q;
}

// Mean photon number per pulse at the fiber tip.
inline double photons_per_pulse(const LaserConfig& laser) {
  const double photon_energy = kPlanck * kLightSpeed / laser.wavelength;
  return laser.power / laser.rep_rate / photon_energy;
}

// ---------------------------------------------------------------------------
// Shot synthesis

struct ShotResult {
  double sample = 0.0;     // V, after gain
  std::size_t fired = 0;   // true number of fired elements
};

struct TemplateOptions {
  double pre_roll = 10.0e-9;   // s of baseline before the photon arrives
  double duration = 70.0e-9;   // s of template after the photon arrives
};

// Single-element output pulses, precomputed once per detector and readout,
// superposed per shot with per-element height factors.
class ShotSimulator {
 public:
  ShotSimulator(circuit::SndConfig detector, photonstats::ElementEfficiencies eff, ReadoutChain chain,
                noisemodel::ElementHeights heights, TemplateOptions topt = {})
      : detector_(std::move(detector)),
        eff_(std::move(eff)),
        chain_(std::move(chain)),
        heights_(std::move(heights)),
        topt_(topt) {
    detector_.validate();
    eff_.validate();
    if (auto p = chain_.problems(); !p.empty()) throw DomainError("invalid ReadoutChain: " + p.front());
    if (eff_.size() != detector_.n_elements || heights_.heights.size() != detector_.n_elements) {
      throw DomainError("ShotSimulator: efficiencies and heights must have one entry per element");
    }
    build_templates();
    build_sampling_point();
  }

  const circuit::SndConfig& detector() const { return detector_; }
  const photonstats::ElementEfficiencies& efficiencies() const { return eff_; }
  const ReadoutChain& chain() const { return chain_; }
  const noisemodel::ElementHeights& heights() const { return heights_; }
  double sample_period() const { return 1.0 / chain_.sample_rate; }
  const std::vector<std::vector<double>>& templates() const { return templates_; }
  double nominal_sample_time() const { return t_sample_; }

  // Noise-free output of the whole chain at the nominal sampling time for a
  // single element of unit height; the spacing of the output levels.
  double single_level() const { return single_level_; }

  // Output noise sd from the amplifier noise alone.
  double output_noise_sd() const { return chain_.gain() * chain_.noise_rms * std::sqrt(noise_gain_); }

  double height_jitter_sd(double mu_bar) const {
    return chain_.height_jitter_base + chain_.height_jitter_per_photon * mu_bar;
  }

  // Probability that element k fires in one pulse.
  std::vector<double> firing_probabilities(double mu_bar) const {
    std::vector<double> p;
    for (double e : eff_.per_element) p.push_back(-std::expm1(-mu_bar * e));
    return p;
  }

  ShotResult shot(double mu_bar, numerics::RandomStream& rng) const {
    const std::size_t n = detector_.n_elements;
    ShotResult res;
    std::vector<double> v(window_, 0.0);
    const double jitter_sd = height_jitter_sd(mu_bar);
    for (std::size_t k = 0; k < n; ++k) {
      // Each element fires iff at least one of its Poisson(mu * eta_k q_k)
      // detected photons arrives.
      const double p = -std::expm1(-mu_bar * eff_.per_element[k]);
      if (!(rng.uniform() < p)) continue;
      ++res.fired;
      const double scale = heights_.heights[k] * (1.0 + rng.normal(0.0, jitter_sd));
      const auto& tk = templates_[k];
      for (std::size_t i = 0; i < window_; ++i) v[i] += scale * tk[i];
    }
    if (chain_.noise_rms > 0.0) {
      for (double& x : v) x += rng.normal(0.0, chain_.noise_rms);
    }
    for (const auto& s : sections_) s.apply(v);
    const double t = t_sample_ + rng.normal(0.0, chain_.jitter_fwhm / kFwhmPerSigma);
    res.sample = chain_.gain() * interpolate(v, t);
    return res;
  }

  // Largest relative difference between the peak of a full n-element
  // simulation and the peak of the superposed single-element templates.
  double superposition_error() const {
    circuit::TransientOptions opt;
    opt.dt = circuit::resolved_step(detector_);
    opt.t_end = topt_.pre_roll + topt_.duration;
    double worst = 0.0;
    for (std::size_t n = 1; n <= detector_.n_elements; ++n) {
      const double full = circuit::simulate_transient(detector_, circuit::FiringPattern::simultaneous(n, topt_.pre_roll), opt).peak();
      double sum_peak = 0.0;
      for (std::size_t i = 0; i < raw_length_; ++i) {
        double s = 0.0;
        for (std::size_t k = 0; k < n; ++k) s += templates_[k][i];
        sum_peak = std::max(sum_peak, s);
      }
      worst = std::max(worst, std::abs(sum_peak - full) / full);
    }
    return worst;
  }

 private:
  static double interpolate(const std::vector<double>& v, double t_over_period) {
    if (t_over_period <= 0.0) return v.front();
    const auto i = static_cast<std::size_t>(t_over_period);
    if (i + 1 >= v.size()) return v.back();
    const double f = t_over_period - static_cast<double>(i);
    return v[i] * (1.0 - f) + v[i + 1] * f;
  }

  void build_templates() {
    circuit::TransientOptions opt;
    opt.dt = circuit::resolved_step(detector_);
    opt.t_end = topt_.pre_roll + topt_.duration;
    const double period = sample_period();
    raw_length_ = static_cast<std::size_t>(std::floor(opt.t_end / period)) + 1;
    templates_.assign(detector_.n_elements, std::vector<double>(raw_length_, 0.0));
    for (std::size_t k = 0; k < detector_.n_elements; ++k) {
      const auto tr = circuit::simulate_transient(detector_, circuit::FiringPattern::single(k, topt_.pre_roll), opt);
      for (std::size_t i = 0; i < raw_length_; ++i) {
        const double pos = static_cast<double>(i) * period / opt.dt;
        const auto j = std::min(static_cast<std::size_t>(pos), tr.size() - 1);
        const double f = pos - static_cast<double>(j);
        templates_[k][i] = j + 1 < tr.size() ? tr.v_out[j] * (1.0 - f) + tr.v_out[j + 1] * f : tr.v_out[j];
      }
    }
    sections_.clear();
    for (const auto& f : chain_.filters) {
      for (const auto& s : numerics::filter_sections(f, chain_.sample_rate)) sections_.push_back(s);
    }
  }

  // Sampling time (in sample periods): the peak of the filtered, noise-free
  // all-element pulse. The per-shot window ends a few jitter widths later,
  // since causal filters make earlier samples independent of later input.
  void build_sampling_point() {
    std::vector<double> sum(raw_length_, 0.0);
    for (std::size_t k = 0; k < detector_.n_elements; ++k) {
      for (std::size_t i = 0; i < raw_length_; ++i) sum[i] += heights_.heights[k] * templates_[k][i];
    }
    for (const auto& s : sections_) s.apply(sum);
    const auto peak = static_cast<std::size_t>(std::max_element(sum.begin(), sum.end()) - sum.begin());
    t_sample_ = static_cast<double>(peak);
    const double margin = 8.0 * chain_.jitter_fwhm / kFwhmPerSigma * chain_.sample_rate + 4.0;
    window_ = std::min(raw_length_, peak + static_cast<std::size_t>(std::ceil(margin)) + 2);

    std::vector<double> one(raw_length_);
    for (std::size_t i = 0; i < raw_length_; ++i) one[i] = templates_[0][i];
    for (const auto& s : sections_) s.apply(one);
    single_level_ = chain_.gain() * one[peak];

    // Sum of squared impulse response: output variance per unit input variance.
    std::vector<double> imp(200000, 0.0);
    imp[0] = 1.0;
    for (const auto& s : sections_) s.apply(imp);
    noise_gain_ = 0.0;
    for (double x : imp) noise_gain_ += x * x;
  }

  circuit::SndConfig detector_;
  photonstats::ElementEfficiencies eff_;
  ReadoutChain chain_;
  noisemodel::ElementHeights heights_;
  TemplateOptions topt_;
  std::vector<std::vector<double>> templates_;
  std::vector<numerics::FirstOrderSection> sections_;
  std::size_t raw_length_ = 0;
  std::size_t window_ = 0;
  double t_sample_ = 0.0;
  double single_level_ = 0.0;
  double noise_gain_ = 1.0;
};

inline ShotResult simulate_shot(const ShotSimulator& sim, double mu_bar, std::uint64_t seed,
                                std::uint64_t stream = 0) {
  numerics::RandomStream rng(seed, stream);
  return sim.shot(mu_bar, rng);
}

// ---------------------------------------------------------------------------
// Power sweep

struct HistogramSpec {
  double lo = 0.0;     // V, lower edge of bin 0
  double width = 0.0;  // V
  std::size_t bins = 512;

  double center(std::size_t b) const { return lo + (static_cast<double>(b) + 0.5) * width; }

  std::size_t bin_of(double v) const {
    const double x = std::floor((v - lo) / width);
    if (x < 0.0) return 0;
    return std::min(bins - 1, static_cast<std::size_t>(x));
  }
};

// Fixed binning shared by every power of a sweep: from below the zero level
// to above the N-photon level, with margins for noise and height spread.
inline HistogramSpec default_histogram(const ShotSimulator& sim, double max_mu_bar, std::size_t bins = 512) {
  const double level = sim.single_level();
  const double noise = sim.output_noise_sd();
  const double n = static_cast<double>(sim.detector().n_elements);
  const auto& h = sim.heights().heights;
  const double h_max = *std::max_element(h.begin(), h.end());
  const double spread = 4.0 * sim.height_jitter_sd(max_mu_bar);
  const double top = level * h_max * n * (1.0 + spread) + 8.0 * noise + 0.5 * level;
  const double bottom = -std::max(8.0 * noise, 0.5 * level);
  return {bottom, (top - bottom) / static_cast<double>(bins), bins};
}

struct PowerSweepResult {
  std::vector<double> powers;   // W
  std::vector<double> mu_bar;   // photons per pulse at the fiber tip
  HistogramSpec spec;
  std::vector<std::vector<std::uint64_t>> histograms;   // [power][bin]
  std::vector<std::vector<std::uint64_t>> fired_counts; // [power][n], true firings
  std::uint64_t shots_per_power = 0;
  std::uint64_t seed = 0;
};

inline constexpr std::uint64_t kShotBlock = 4096;

// Every (power, block of shots) pair draws from its own substream, so the
// result is the same however blocks are scheduled.
inline PowerSweepResult run_power_sweep(const ShotSimulator& sim, const LaserConfig& laser,
                                        const std::vector<double>& powers, std::uint64_t shots_per_power,
                                        std::uint64_t seed, std::optional<HistogramSpec> spec = std::nullopt) {
  if (shots_per_power < 1) throw DomainError("run_power_sweep: shots_per_power must be >= 1");
  if (auto p = laser.problems(); !p.empty()) throw DomainError("invalid LaserConfig: " + p.front());
  PowerSweepResult out;
  out.powers = powers;
  out.shots_per_power = shots_per_power;
  out.seed = seed;
  double max_mu = 0.0;
  for (double p : powers) {
    if (!(p >= 0.0)) throw DomainError("run_power_sweep: powers must be >= 0");
    LaserConfig l = laser;
    l.power = p;
    out.mu_bar.push_back(photons_per_pulse(l));
    max_mu = std::max(max_mu, out.mu_bar.back());
  }
  out.spec = spec ? *spec : default_histogram(sim, max_mu);
  const std::size_t n = sim.detector().n_elements;
  for (std::size_t ip = 0; ip < powers.size(); ++ip) {
    std::vector<std::uint64_t> hist(out.spec.bins, 0);
    std::vector<std::uint64_t> fired(n + 1, 0);
    for (std::uint64_t block = 0; block * kShotBlock < shots_per_power; ++block) {
      numerics::RandomStream rng(seed, (static_cast<std::uint64_t>(ip) << 32) | block);
      const std::uint64_t end = std::min(shots_per_power, (block + 1) * kShotBlock);
      for (std::uint64_t s = block * kShotBlock; s < end; ++s) {
        const auto r = sim.shot(out.mu_bar[ip], rng);
        ++hist[out.spec.bin_of(r.sample)];
        ++fired[r.fired];
      }
    }
    out.histograms.push_back(std::move(hist));
    out.fired_counts.push_back(std::move(fired));
  }
  return out;
}

// Long form: power_w, bin_center_v, count.
inline void write_sweep_csv(std::ostream& os, const PowerSweepResult& r) {
  csv::write_row(os, {"power_w", "bin_center_v", "count"});
  for (std::size_t ip = 0; ip < r.powers.size(); ++ip) {
    for (std::size_t b = 0; b < r.spec.bins; ++b) {
      csv::write_row(os, {csv::fmt(r.powers[ip]), csv::fmt(r.spec.center(b)), std::to_string(r.histograms[ip][b])});
    }
  }
}

// Reads the long-form CSV back. Only powers, bins and counts are recovered;
// mu_bar and the seed live in the run manifest.
inline PowerSweepResult read_sweep_csv(std::istream& is) {
  const auto t = csv::read(is);
  const auto c_power = t.column("power_w");
  const auto c_center = t.column("bin_center_v");
  const auto c_count = t.column("count");
  PowerSweepResult r;
  std::vector<double> centers;
  for (const auto& row : t.rows) {
    const double p = csv::parse_double(row[c_power]);
    if (r.powers.empty() || p != r.powers.back()) {
      r.powers.push_back(p);
      r.histograms.emplace_back();
    }
    if (r.powers.size() == 1) centers.push_back(csv::parse_double(row[c_center]));
    r.histograms.back().push_back(static_cast<std::uint64_t>(std::stoull(row[c_count])));
  }
  if (centers.size() < 2) throw std::runtime_error("sweep csv: need at least two bins");
  for (const auto& h : r.histograms) {
    if (h.size() != centers.size()) throw std::runtime_error("sweep csv: powers have different bin counts");
  }
  r.spec.bins = centers.size();
  r.spec.width = (centers.back() - centers.front()) / static_cast<double>(centers.size() - 1);
  r.spec.lo = centers.front() - 0.5 * r.spec.width;
  std::uint64_t total = 0;
  for (auto c : r.histograms.front()) total += c;
  r.shots_per_power = total;
  return r;
}

}  // namespace snd::experiment
