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

// JSON run configuration. Every section and field is optional; absent
// fields take the documented defaults. Validation reports every violated
// invariant at once.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "snd/circuit.hpp"
#include "snd/errors.hpp"
#include "snd/experiment.hpp"
#include "snd/noisemodel.hpp"
#include "snd/numerics.hpp"
#include "snd/photonstats.hpp"

namespace snd::config {

using json = nlohmann::json;

inline constexpr const char* kVersion = "1.0.0";

struct BiasPoint {
  double i_bias = 0.0;
  double dqe = 0.0;
};

struct SweepSettings {
  double power_min = 0.0;   // W
  double power_max = 64.0e-9;
  std::size_t steps = 20;
  bool log_spacing = false;
  std::size_t bins = 512;

  std::vector<double> powers() const {
    std::vector<double> p(steps);
    for (std::size_t i = 0; i < steps; ++i) {
      const double f = steps > 1 ? static_cast<double>(i) / static_cast<double>(steps - 1) : 0.0;
      p[i] = log_spacing ? power_min * std::pow(power_max / power_min, f) : power_min + f * (power_max - power_min);
    }
    return p;
  }
};

struct RunConfig {
  circuit::SndConfig detector;
  double target_fall_time = 11.3e-9;     // s, used when l_element is absent
  bool l_element_given = false;
  bool inductance_calibrated = false;
  experiment::LaserConfig laser;
  experiment::BeamProfile beam;
  std::vector<double> intrinsic_efficiency = std::vector<double>(12, 1.6e-4);
  std::vector<BiasPoint> dqe_vs_bias;     // optional; overrides intrinsic_efficiency
  experiment::ReadoutChain readout;
  std::optional<double> noise_figure_db;  // when set, noise_rms is derived from it
  noisemodel::HeightProfile heights{1.0, 0.1};
  SweepSettings sweep;
  std::uint64_t shots = 20000;
  std::optional<std::uint64_t> seed;
  double dark_count_rate = 0.0;
  double min_counts = 10.0;
  json source = json::object();           // the config as read, for the manifest

  // Routing weights times intrinsic efficiencies.
  photonstats::ElementEfficiencies efficiencies() const {
    return photonstats::ElementEfficiencies::from_routing(experiment::element_coupling(beam, detector.n_elements),
                                                          intrinsic_efficiency);
  }

  noisemodel::ElementHeights element_heights() const {
    return noisemodel::element_heights(heights, detector.n_elements);
  }
};

// DQE at a bias current, linearly interpolated in the table and clamped at
// its ends.
inline double interpolate_dqe(const std::vector<BiasPoint>& table, double i_bias) {
  if (table.empty()) throw DomainError("interpolate_dqe: empty table");
  if (i_bias <= table.front().i_bias) return table.front().dqe;
  if (i_bias >= table.back().i_bias) return table.back().dqe;
  const auto it = std::upper_bound(table.begin(), table.end(), i_bias,
                                   [](double v, const BiasPoint& p) { return v < p.i_bias; });
  const auto& b = *it;
  const auto& a = *(it - 1);
  return a.dqe + (b.dqe - a.dqe) * (i_bias - a.i_bias) / (b.i_bias - a.i_bias);
}

namespace detail {

class Reader {
 public:
  explicit Reader(std::vector<std::string>& problems) : problems_(problems) {}

  template <class T>
  void get(const json& obj, const char* key, const std::string& path, T& out) {
    if (!obj.contains(key)) return;
    try {
      out = obj.at(key).get<T>();
    } catch (const json::exception&) {
      problems_.push_back(path + "." + key + ": wrong type");
    }
  }

  void object(const json& root, const char* key, json& out) {
    out = json::object();
    if (!root.contains(key)) return;
    if (!root.at(key).is_object()) {
      problems_.push_back(std::string(key) + ": must be an object");
      return;
    }
    out = root.at(key);
  }

  // A scalar broadcast to n entries, or an array of exactly n.
  void per_element(const json& obj, const char* key, const std::string& path, std::size_t n, std::vector<double>& out) {
    if (!obj.contains(key)) {
      if (out.size() != n) out.assign(n, out.empty() ? 0.0 : out.front());
      return;
    }
    const auto& v = obj.at(key);
    if (v.is_number()) {
      out.assign(n, v.get<double>());
    } else if (v.is_array() && std::all_of(v.begin(), v.end(), [](const json& x) { return x.is_number(); })) {
      out = v.get<std::vector<double>>();
      if (out.size() != n) problems_.push_back(path + "." + key + ": needs one entry per element");
    } else {
      problems_.push_back(path + "." + key + ": must be a number or an array of numbers");
    }
  }

  std::vector<std::string>& problems() { return problems_; }

 private:
  std::vector<std::string>& problems_;
};

inline void read_filters(Reader& rd, const json& ro, experiment::ReadoutChain& chain) {
  if (!ro.contains("filters")) return;
  const auto& fs = ro.at("filters");
  if (!fs.is_array()) {
    rd.problems().emplace_back("readout.filters: must be an array");
    return;
  }
  chain.filters.clear();
  for (std::size_t i = 0; i < fs.size(); ++i) {
    const auto& f = fs[i];
    const std::string path = "readout.filters[" + std::to_string(i) + "]";
    const std::string type = f.is_object() ? f.value("type", "") : "";
    if (type == "low_pass") {
      numerics::LowPass lp;
      rd.get(f, "cutoff_hz", path, lp.cutoff_hz);
      chain.filters.emplace_back(lp);
    } else if (type == "band_pass") {
      numerics::BandPass bp;
      rd.get(f, "low_hz", path, bp.low_hz);
      rd.get(f, "high_hz", path, bp.high_hz);
      chain.filters.emplace_back(bp);
    } else {
      rd.problems().push_back(path + ".type: must be \"low_pass\" or \"band_pass\"");
    }
  }
}

}  // namespace detail

// Calibrates L_0 to the target fall time unless the config fixed it.
inline void resolve_inductance(RunConfig& c) {
  if (c.l_element_given || c.inductance_calibrated) return;
  c.detector.l_element = circuit::calibrate_inductance(c.detector, c.target_fall_time);
  c.inductance_calibrated = true;
}

// Builds and validates a RunConfig from parsed JSON. Throws ConfigError
// listing every problem found.
inline RunConfig from_json(const json& root, bool calibrate = true) {
  std::vector<std::string> problems;
  if (!root.is_object()) throw ConfigError("config: top level must be an object", {"config: top level must be an object"});
  detail::Reader rd(problems);
  RunConfig c;
  c.source = root;

  json det, laser, beam, eff, ro, hts, sw, an;
  rd.object(root, "detector", det);
  rd.object(root, "laser", laser);
  rd.object(root, "beam", beam);
  rd.object(root, "efficiency", eff);
  rd.object(root, "readout", ro);
  rd.object(root, "heights", hts);
  rd.object(root, "sweep", sw);
  rd.object(root, "analysis", an);

  auto& d = c.detector;
  rd.get(det, "n_elements", "detector", d.n_elements);
  const std::size_t n = std::max<std::size_t>(d.n_elements, 1);
  d.r_parallel.assign(n, 45.2);
  rd.per_element(det, "r_parallel_ohm", "detector", n, d.r_parallel);
  rd.get(det, "r_load_ohm", "detector", d.r_load);
  rd.get(det, "i_bias_a", "detector", d.i_bias);
  rd.get(det, "i_critical_a", "detector", d.i_critical);
  rd.get(det, "r_hotspot_ohm", "detector", d.r_hotspot);
  rd.get(det, "i_retrap_fraction", "detector", d.i_retrap);
  rd.get(det, "r_normal_ohm", "detector", d.r_normal);
  rd.get(det, "target_fall_time_s", "detector", c.target_fall_time);
  const bool has_l = det.contains("l_element_h");
  rd.get(det, "l_element_h", "detector", d.l_element);
  for (auto& p : d.problems()) problems.push_back("detector: " + p);
  if (!has_l && !(c.target_fall_time > 0.0)) problems.emplace_back("detector.target_fall_time_s: must be > 0");

  rd.get(laser, "wavelength_m", "laser", c.laser.wavelength);
  rd.get(laser, "pulse_width_s", "laser", c.laser.pulse_width);
  rd.get(laser, "rep_rate_hz", "laser", c.laser.rep_rate);
  rd.get(laser, "power_w", "laser", c.laser.power);
  for (auto& p : c.laser.problems()) problems.push_back(p);

  rd.get(beam, "fwhm_m", "beam", c.beam.fwhm);
  rd.get(beam, "array_side_m", "beam", c.beam.array_side);
  rd.get(beam, "fill_factor", "beam", c.beam.fill_factor);
  if (beam.contains("coupling_override")) {
    double v = 0.0;
    rd.get(beam, "coupling_override", "beam", v);
    c.beam.coupling_override = v;
  }
  if (beam.contains("stripes_m")) {
    std::vector<std::vector<double>> s;
    rd.get(beam, "stripes_m", "beam", s);
    for (const auto& st : s) {
      if (st.size() != 2) {
        problems.emplace_back("beam.stripes_m: each stripe is [x0, x1]");
        break;
      }
      c.beam.stripes.push_back({st[0], st[1]});
    }
  }
  for (auto& p : c.beam.problems(n)) problems.push_back(p);

  c.intrinsic_efficiency.assign(n, 1.6e-4);
  rd.per_element(eff, "intrinsic", "efficiency", n, c.intrinsic_efficiency);
  if (eff.contains("dqe_vs_bias")) {
    std::vector<std::vector<double>> t;
    rd.get(eff, "dqe_vs_bias", "efficiency", t);
    for (const auto& row : t) {
      if (row.size() != 2) {
        problems.emplace_back("efficiency.dqe_vs_bias: each row is [i_bias_a, dqe]");
        break;
      }
      c.dqe_vs_bias.push_back({row[0], row[1]});
    }
    for (std::size_t i = 1; i < c.dqe_vs_bias.size(); ++i) {
      if (!(c.dqe_vs_bias[i].i_bias > c.dqe_vs_bias[i - 1].i_bias)) {
        problems.emplace_back("efficiency.dqe_vs_bias: bias currents must increase strictly");
        break;
      }
    }
    for (const auto& b : c.dqe_vs_bias) {
      if (!(b.dqe >= 0.0 && b.dqe <= 1.0)) {
        problems.emplace_back("efficiency.dqe_vs_bias: dqe must lie in [0, 1]");
        break;
      }
    }
    // DQE counts photons on the whole active area; the wires cover only the
    // fill factor, so the wire efficiency is DQE / fill factor.
    if (!c.dqe_vs_bias.empty() && c.beam.fill_factor > 0.0) {
      c.intrinsic_efficiency.assign(n, interpolate_dqe(c.dqe_vs_bias, d.i_bias) / c.beam.fill_factor);
    }
  }
  for (double e : c.intrinsic_efficiency) {
    if (!(e >= 0.0 && e <= 1.0)) {
      problems.emplace_back("efficiency.intrinsic: must lie in [0, 1]");
      break;
    }
  }

  auto& r = c.readout;
  r.filters = {numerics::BandPass{0.5e6, 500.0e6}, numerics::LowPass{80.0e6}};
  rd.get(ro, "gain_db", "readout", r.gain_db);
  rd.get(ro, "sample_rate_hz", "readout", r.sample_rate);
  rd.get(ro, "jitter_fwhm_s", "readout", r.jitter_fwhm);
  rd.get(ro, "height_jitter_base", "readout", r.height_jitter_base);
  rd.get(ro, "height_jitter_per_photon", "readout", r.height_jitter_per_photon);
  detail::read_filters(rd, ro, r);
  if (ro.contains("noise_rms_v") && ro.contains("noise_figure_db")) {
    problems.emplace_back("readout: give noise_rms_v or noise_figure_db, not both");
  }
  rd.get(ro, "noise_rms_v", "readout", r.noise_rms);
  c.noise_figure_db = 1.1;
  if (ro.contains("noise_rms_v")) c.noise_figure_db.reset();
  if (ro.contains("noise_figure_db")) rd.get(ro, "noise_figure_db", "readout", *c.noise_figure_db);
  if (c.noise_figure_db) {
    if (!(*c.noise_figure_db >= 0.0)) problems.emplace_back("readout.noise_figure_db: must be >= 0");
    r.noise_rms = experiment::noise_rms_from_figure(*c.noise_figure_db, d.r_load, r.sample_rate);
  }
  for (auto& p : r.problems()) problems.push_back(p);

  rd.get(hts, "center", "heights", c.heights.center);
  rd.get(hts, "fwhm", "heights", c.heights.fwhm);
  if (!(c.heights.center > 0.0)) problems.emplace_back("heights.center: must be > 0");
  if (!(c.heights.fwhm >= 0.0)) problems.emplace_back("heights.fwhm: must be >= 0");
  else if (c.heights.fwhm / noisemodel::kFwhmPerSigma * 4.0 >= c.heights.center) {
    problems.emplace_back("heights.fwhm: too wide, element heights would reach zero");
  }

  rd.get(sw, "power_min_w", "sweep", c.sweep.power_min);
  rd.get(sw, "power_max_w", "sweep", c.sweep.power_max);
  rd.get(sw, "steps", "sweep", c.sweep.steps);
  rd.get(sw, "bins", "sweep", c.sweep.bins);
  if (sw.contains("spacing")) {
    std::string s;
    rd.get(sw, "spacing", "sweep", s);
    if (s == "log") c.sweep.log_spacing = true;
    else if (s != "linear") problems.emplace_back("sweep.spacing: must be \"linear\" or \"log\"");
  }
  rd.get(sw, "shots_per_power", "sweep", c.shots);
  if (!(c.sweep.power_min >= 0.0 && c.sweep.power_max >= c.sweep.power_min)) {
    problems.emplace_back("sweep: need 0 <= power_min_w <= power_max_w");
  }
  if (c.sweep.log_spacing && !(c.sweep.power_min > 0.0)) problems.emplace_back("sweep: log spacing needs power_min_w > 0");
  if (c.sweep.steps < 1) problems.emplace_back("sweep.steps: must be >= 1");
  if (c.sweep.bins < 8) problems.emplace_back("sweep.bins: must be >= 8");
  if (c.shots < 1) problems.emplace_back("sweep.shots_per_power: must be >= 1");

  if (root.contains("seed")) {
    std::uint64_t s = 0;
    rd.get(root, "seed", "config", s);
    c.seed = s;
  }
  rd.get(an, "dark_count_rate_hz", "analysis", c.dark_count_rate);
  rd.get(an, "min_counts", "analysis", c.min_counts);
  if (!(c.dark_count_rate >= 0.0)) problems.emplace_back("analysis.dark_count_rate_hz: must be >= 0");

  if (!problems.empty()) {
    std::string msg = "invalid config:";
    for (const auto& p : problems) msg += "\n  - " + p;
    throw ConfigError(msg, problems);
  }
  try {
    c.efficiencies();
  } catch (const DomainError& e) {
    throw ConfigError(std::string("invalid config: ") + e.what(), {e.what()});
  }
  c.l_element_given = has_l;
  if (calibrate) resolve_inductance(c);
  return c;
}

inline RunConfig parse(const std::string& text, bool calibrate = true) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    // Convert the byte offset into a line number.
    const auto upto = std::min<std::size_t>(e.byte, text.size());
    const auto line = 1 + std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(upto), '\n');
    const std::string msg = "config parse error at line " + std::to_string(line) + ": " + e.what();
    throw ConfigError(msg, {msg});
  }
  return from_json(root, calibrate);
}

inline RunConfig load(const std::string& path, bool calibrate = true) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path, {"cannot open config file: " + path});
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), calibrate);
}

// 64-bit FNV-1a of the canonical (sorted-key, compact) JSON dump.
inline std::string config_hash(const json& j) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char ch : j.dump()) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

// Resolved parameters actually used by a run.
inline json resolved(const RunConfig& c) {
  json j;
  const auto& d = c.detector;
  j["detector"] = {{"n_elements", d.n_elements}, {"r_parallel_ohm", d.r_parallel}, {"r_load_ohm", d.r_load},
                   {"i_bias_a", d.i_bias}, {"i_critical_a", d.i_critical}, {"l_element_h", d.l_element},
                   {"l_element_calibrated", c.inductance_calibrated}, {"r_hotspot_ohm", d.r_hotspot},
                   {"i_retrap_fraction", d.i_retrap}, {"r_normal_ohm", d.r_normal}};
  j["laser"] = {{"wavelength_m", c.laser.wavelength}, {"pulse_width_s", c.laser.pulse_width},
                {"rep_rate_hz", c.laser.rep_rate}, {"power_w", c.laser.power}};
  j["beam"] = {{"fwhm_m", c.beam.fwhm}, {"array_side_m", c.beam.array_side}, {"fill_factor", c.beam.fill_factor}};
  if (c.beam.coupling_override) j["beam"]["coupling_override"] = *c.beam.coupling_override;
  j["efficiency"] = {{"intrinsic", c.intrinsic_efficiency}};
  json filters = json::array();
  for (const auto& f : c.readout.filters) {
    if (const auto* lp = std::get_if<numerics::LowPass>(&f)) {
      filters.push_back({{"type", "low_pass"}, {"cutoff_hz", lp->cutoff_hz}});
    } else if (const auto* bp = std::get_if<numerics::BandPass>(&f)) {
      filters.push_back({{"type", "band_pass"}, {"low_hz", bp->low_hz}, {"high_hz", bp->high_hz}});
    }
  }
  j["readout"] = {{"gain_db", c.readout.gain_db}, {"noise_rms_v", c.readout.noise_rms},
                  {"sample_rate_hz", c.readout.sample_rate}, {"jitter_fwhm_s", c.readout.jitter_fwhm},
                  {"height_jitter_base", c.readout.height_jitter_base},
                  {"height_jitter_per_photon", c.readout.height_jitter_per_photon}, {"filters", filters}};
  j["heights"] = {{"center", c.heights.center}, {"fwhm", c.heights.fwhm}};
  j["sweep"] = {{"power_min_w", c.sweep.power_min}, {"power_max_w", c.sweep.power_max}, {"steps", c.sweep.steps},
                {"spacing", c.sweep.log_spacing ? "log" : "linear"}, {"bins", c.sweep.bins},
                {"shots_per_power", c.shots}};
  return j;
}

}  // namespace snd::config
