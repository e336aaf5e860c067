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

// snd: command-line front end. Every command writes CSV (and SVG with
// --plot) into --out together with a manifest-<command>.json recording the
// config hash and seed.

#include <cmath>
#include <cstdint>
#include <ctime>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "snd/analysis.hpp"
#include "snd/circuit.hpp"
#include "snd/config.hpp"
#include "snd/csv.hpp"
#include "snd/errors.hpp"
#include "snd/experiment.hpp"
#include "snd/noisemodel.hpp"
#include "snd/photonstats.hpp"
#include "snd/pipeline.hpp"
#include "snd/svg.hpp"

namespace fs = std::filesystem;
using snd::config::json;

namespace {

struct Options {
  std::string config_path;
  std::string out_dir = "out";
  std::optional<std::uint64_t> seed;
  bool plot = false;
  std::optional<std::size_t> n;
  std::optional<double> eta;
  std::optional<double> mu;
  std::optional<double> r_load;
  std::optional<double> power_min;
  std::optional<double> power_max;
  std::optional<std::size_t> power_steps;
  std::optional<std::uint64_t> shots;
  std::optional<double> fall_time;
  std::string input;
};

class Failure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

snd::config::RunConfig load_config(const Options& o) {
  auto c = o.config_path.empty() ? snd::config::from_json(json::object(), false)
                                 : snd::config::load(o.config_path, false);
  bool changed = false;
  if (o.r_load) {
    c.detector.r_load = *o.r_load;
    c.source["detector"]["r_load_ohm"] = *o.r_load;
    changed = true;
  }
  if (o.power_min) c.sweep.power_min = *o.power_min;
  if (o.power_max) c.sweep.power_max = *o.power_max;
  if (o.power_steps) c.sweep.steps = *o.power_steps;
  if (o.shots) c.shots = *o.shots;
  if (o.fall_time) c.target_fall_time = *o.fall_time;
  if (changed) {
    // Re-run validation and noise derivation with the overridden fields.
    auto fresh = snd::config::from_json(c.source, false);
    fresh.sweep = c.sweep;
    fresh.shots = c.shots;
    fresh.target_fall_time = c.target_fall_time;
    c = std::move(fresh);
  }
  if (c.sweep.log_spacing && !(c.sweep.power_min > 0.0)) throw Failure("log-spaced sweep needs --power-min > 0");
  if (c.sweep.power_max < c.sweep.power_min) throw Failure("--power-max must be >= --power-min");
  if (c.sweep.steps < 1) throw Failure("--power-steps must be >= 1");
  snd::config::resolve_inductance(c);
  return c;
}

std::uint64_t require_seed(const Options& o, const snd::config::RunConfig& c) {
  if (o.seed) return *o.seed;
  if (c.seed) return *c.seed;
  throw Failure("this command is stochastic: give --seed or set \"seed\" in the config");
}

std::string timestamp() {
  const std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

class Outputs {
 public:
  Outputs(const Options& o, std::string command) : dir_(o.out_dir), command_(std::move(command)) {
    fs::create_directories(dir_);
  }

  std::ofstream open(const std::string& name) {
    std::ofstream f(dir_ / name, std::ios::binary);
    if (!f) throw Failure("cannot write " + (dir_ / name).string());
    written_.push_back(name);
    return f;
  }

  void manifest(const std::optional<snd::config::RunConfig>& cfg, std::optional<std::uint64_t> seed,
                const json& extra = json::object()) {
    json m;
    const json resolved = cfg ? snd::config::resolved(*cfg) : json::object();
    m["command"] = command_;
    m["version"] = snd::config::kVersion;
    m["timestamp"] = timestamp();
    m["config_hash"] = snd::config::config_hash(resolved);
    m["seed"] = seed ? json(*seed) : json(nullptr);
    m["config"] = resolved;
    m["outputs"] = written_;
    for (auto it = extra.begin(); it != extra.end(); ++it) m[it.key()] = it.value();
    std::ofstream f(dir_ / ("manifest-" + command_ + ".json"));
    f << m.dump(2) << '\n';
    std::cout << "wrote " << written_.size() << " file(s) to " << dir_.string() << '\n';
  }

 private:
  fs::path dir_;
  std::string command_;
  std::vector<std::string> written_;
};

// ---------------------------------------------------------------------------

int cmd_transient(const Options& o) {
  const auto cfg = load_config(o);
  const auto& det = cfg.detector;
  const std::size_t n = o.n.value_or(det.n_elements);
  snd::circuit::TransientOptions topt;
  topt.dt = snd::circuit::resolved_step(det);
  topt.t_end = 1.0e-9 + 8.0 * cfg.target_fall_time;
  Outputs out(o, "transient");
  const auto tr = snd::circuit::simulate_transient(det, snd::circuit::FiringPattern::simultaneous(n), topt);
  {
    auto f = out.open("trace.csv");
    snd::circuit::write_trace_csv(f, tr);
  }
  // Current in the unfired elements for every firing count.
  {
    auto f = out.open("unfired.csv");
    snd::csv::write_row(f, {"n", "min_unfired_current_a", "max_relative_deviation", "peak_v"});
    for (std::size_t k = 1; k < det.n_elements; ++k) {
      const auto t = snd::circuit::simulate_transient(det, snd::circuit::FiringPattern::simultaneous(k), topt);
      double lo = det.i_bias, dev = 0.0;
      for (double i : t.i_wire[det.n_elements - 1]) {
        lo = std::min(lo, i);
        dev = std::max(dev, std::abs(i - det.i_bias) / det.i_bias);
      }
      snd::csv::write_row(f, {std::to_string(k), snd::csv::fmt(lo), snd::csv::fmt(dev), snd::csv::fmt(t.peak())});
    }
  }
  if (o.plot) {
    auto f = out.open("trace.svg");
    std::vector<double> t_ns;
    for (double t : tr.times) t_ns.push_back(t * 1e9);
    snd::svg::write(f, {"Output pulse, n = " + std::to_string(n), "time (ns)", "v_out (V)", false, false,
                        {{"v_out", t_ns, tr.v_out}}});
  }
  out.manifest(cfg, std::nullopt, {{"fired", n}, {"fall_time_s", snd::circuit::fall_time(tr)}});
  return 0;
}

int cmd_iv(const Options& o) {
  const auto cfg = load_config(o);
  std::vector<double> sweep;
  const double top = 2.0 * cfg.detector.i_critical;
  for (int i = -400; i <= 400; ++i) sweep.push_back(top * i / 400.0);
  const auto iv = snd::circuit::iv_curve(cfg.detector, sweep);
  Outputs out(o, "iv");
  {
    auto f = out.open("iv.csv");
    snd::csv::write_row(f, {"current_a", "voltage_v"});
    for (const auto& p : iv) snd::csv::write_row(f, {snd::csv::fmt(p.current), snd::csv::fmt(p.voltage)});
  }
  if (o.plot) {
    auto f = out.open("iv.svg");
    std::vector<double> v, i;
    for (const auto& p : iv) {
      v.push_back(p.voltage);
      i.push_back(p.current * 1e6);
    }
    snd::svg::write(f, {"I-V curve", "voltage (V)", "current (uA)", false, false, {{"", v, i}}});
  }
  out.manifest(cfg, std::nullopt, {{"normal_branch_slope_ohm", snd::circuit::normal_branch_slope(iv)}});
  return 0;
}

int cmd_stats(const Options& o) {
  std::optional<snd::config::RunConfig> cfg;
  if (!o.config_path.empty()) cfg = snd::config::load(o.config_path, false);
  const std::size_t n = o.n.value_or(cfg ? cfg->detector.n_elements : 12);
  const double eta = o.eta.value_or(0.5);
  const double mu = o.mu.value_or(1.0);
  const auto d = snd::photonstats::click_distribution(n, eta, mu);
  const auto alt = snd::photonstats::click_distribution_alternating(n, eta, mu);
  std::optional<std::uint64_t> seed;
  std::optional<snd::photonstats::ClickDistribution> mc;
  if (o.shots && *o.shots > 0) {
    seed = o.seed ? o.seed : (cfg ? cfg->seed : std::nullopt);
    if (!seed) throw Failure("Monte Carlo needs a seed: give --seed");
    mc = snd::photonstats::mc_click_distribution(snd::photonstats::ElementEfficiencies::uniform(n, eta), mu, *o.shots,
                                                 *seed);
  }
  Outputs out(o, "stats");
  {
    auto f = out.open("stats.csv");
    std::vector<std::string> header{"n", "probability", "alternating_sum"};
    if (mc) header.emplace_back("monte_carlo");
    snd::csv::write_row(f, header);
    for (std::size_t k = 0; k <= n; ++k) {
      std::vector<std::string> row{std::to_string(k), snd::csv::fmt(d.probs[k]), snd::csv::fmt(alt[k])};
      if (mc) row.push_back(snd::csv::fmt(mc->probs[k]));
      snd::csv::write_row(f, row);
    }
  }
  if (o.plot) {
    auto f = out.open("stats.svg");
    std::vector<double> x;
    for (std::size_t k = 0; k <= n; ++k) x.push_back(static_cast<double>(k));
    snd::svg::LinePlot p{"Click distribution", "n", "P(n)", false, false, {{"binomial", x, d.probs}}};
    if (mc) p.series.push_back({"monte carlo", x, mc->probs});
    snd::svg::write(f, p);
  }
  out.manifest(cfg, seed, {{"n_elements", n}, {"eta", eta}, {"mu_bar", mu}, {"trials", o.shots.value_or(0)}});
  return 0;
}

int cmd_noise(const Options& o) {
  std::optional<snd::config::RunConfig> cfg;
  cfg = o.config_path.empty() ? snd::config::from_json(json::object(), false) : snd::config::load(o.config_path, false);
  const std::size_t n = o.n.value_or(cfg->detector.n_elements);
  const auto heights = snd::noisemodel::element_heights(cfg->heights, n);
  const auto curve = snd::noisemodel::excess_noise_curve(heights);
  Outputs out(o, "noise");
  {
    auto f = out.open("noise.csv");
    snd::noisemodel::write_csv(f, curve);
  }
  if (o.plot) {
    auto f = out.open("noise.svg");
    std::vector<double> x, y;
    for (const auto& p : curve) {
      x.push_back(static_cast<double>(p.n));
      y.push_back(p.fwhm);
    }
    snd::svg::write(f, {"Excess noise from element height spread", "n", "FWHM", false, false, {{"", x, y}}});
  }
  out.manifest(cfg, std::nullopt);
  return 0;
}

snd::experiment::ShotSimulator make_simulator(const snd::config::RunConfig& cfg) {
  return snd::experiment::ShotSimulator(cfg.detector, cfg.efficiencies(), cfg.readout, cfg.element_heights());
}

snd::experiment::PowerSweepResult run_sweep(const snd::config::RunConfig& cfg, std::uint64_t seed) {
  const auto sim = make_simulator(cfg);
  const auto powers = cfg.sweep.powers();
  double max_mu = 0.0;
  for (double p : powers) {
    auto l = cfg.laser;
    l.power = p;
    max_mu = std::max(max_mu, snd::experiment::photons_per_pulse(l));
  }
  return snd::experiment::run_power_sweep(sim, cfg.laser, powers, cfg.shots, seed,
                                          snd::experiment::default_histogram(sim, max_mu, cfg.sweep.bins));
}

void plot_sweep(Outputs& out, const snd::experiment::PowerSweepResult& sw) {
  auto f = out.open("sweep.svg");
  std::vector<std::vector<double>> rows;
  for (const auto& h : sw.histograms) rows.emplace_back(h.begin(), h.end());
  snd::svg::write_heatmap(f, "Pulse-height histograms", "pulse height (V)", "power (W)", rows, sw.spec.lo,
                          sw.spec.lo + sw.spec.width * static_cast<double>(sw.spec.bins), sw.powers.front(),
                          sw.powers.back());
}

json sweep_extra(const snd::experiment::PowerSweepResult& sw) {
  return {{"powers_w", sw.powers}, {"mu_bar", sw.mu_bar}, {"shots_per_power", sw.shots_per_power}};
}

int cmd_sweep(const Options& o) {
  const auto cfg = load_config(o);
  const auto seed = require_seed(o, cfg);
  const auto sw = run_sweep(cfg, seed);
  Outputs out(o, "sweep");
  {
    auto f = out.open("sweep.csv");
    snd::experiment::write_sweep_csv(f, sw);
  }
  {
    auto f = out.open("fired.csv");
    snd::csv::write_row(f, {"power_w", "n", "count"});
    for (std::size_t ip = 0; ip < sw.powers.size(); ++ip) {
      for (std::size_t k = 0; k < sw.fired_counts[ip].size(); ++k) {
        snd::csv::write_row(f, {snd::csv::fmt(sw.powers[ip]), std::to_string(k), std::to_string(sw.fired_counts[ip][k])});
      }
    }
  }
  if (o.plot) plot_sweep(out, sw);
  out.manifest(cfg, seed, sweep_extra(sw));
  return 0;
}

snd::experiment::PowerSweepResult read_input(const std::string& path, const snd::config::RunConfig& cfg) {
  std::ifstream in(path);
  if (!in) throw Failure("cannot open sweep file: " + path);
  auto sw = snd::experiment::read_sweep_csv(in);
  for (double p : sw.powers) {
    auto l = cfg.laser;
    l.power = p;
    sw.mu_bar.push_back(snd::experiment::photons_per_pulse(l));
  }
  return sw;
}

snd::pipeline::AnalysisOptions analysis_options(const snd::config::RunConfig& cfg) {
  snd::pipeline::AnalysisOptions a;
  a.rep_rate = cfg.laser.rep_rate;
  a.dark_count_rate = cfg.dark_count_rate;
  a.min_counts = cfg.min_counts;
  return a;
}

void write_count_rates(Outputs& out, const snd::pipeline::SweepAnalysis& a, bool plot) {
  {
    auto f = out.open("count_rate.csv");
    snd::pipeline::write_count_rate_csv(f, a.count_rates);
  }
  for (const auto& notice : a.count_rates.notices) std::cerr << "note: " << notice << '\n';
  if (plot) {
    auto f = out.open("count_rate.svg");
    snd::svg::LinePlot p{"Count rate vs power", "power (W)", "count rate (1/s)", true, true, {}};
    for (const auto& c : a.count_rates.curves) {
      p.series.push_back({">=" + std::to_string(c.threshold_label), c.powers, c.rates});
    }
    snd::svg::write(f, p);
  }
}

int cmd_analyze(const Options& o) {
  const auto cfg = load_config(o);
  const std::string input = o.input.empty() ? (fs::path(o.out_dir) / "sweep.csv").string() : o.input;
  const auto sw = read_input(input, cfg);
  const auto a = snd::pipeline::analyze_sweep(sw, cfg.detector.n_elements, analysis_options(cfg));
  Outputs out(o, "analyze");
  {
    auto f = out.open("peaks.csv");
    snd::analysis::write_peaks_csv(f, a.fits, a.powers);
  }
  {
    auto f = out.open("probabilities.csv");
    snd::pipeline::write_probabilities_csv(f, a);
  }
  {
    auto f = out.open("levels.csv");
    snd::pipeline::write_levels_csv(f, a.levels);
  }
  {
    auto f = out.open("noise_vn.csv");
    snd::analysis::write_noise_csv(f, a.noise);
  }
  write_count_rates(out, a, o.plot);
  {
    auto f = out.open("report.txt");
    snd::analysis::write_fit_report(f, a.fits, a.powers);
    f << "\ndistinct levels: " << a.levels.distinct_levels() << "\n";
    f << "median fitted efficiency: " << snd::csv::fmt(a.eta_reference) << "\n";
    if (a.linearity) {
      f << "linearity H = A n^alpha: A = " << snd::csv::fmt(a.linearity->A)
        << " V, alpha = " << snd::csv::fmt(a.linearity->alpha) << ", r^2 = " << snd::csv::fmt(a.linearity->r_squared)
        << "\n";
    }
  }
  if (o.plot) {
    auto f = out.open("probabilities.svg");
    snd::svg::LinePlot p{"Fitted P(n)", "n", "P(n)", false, false, {}};
    std::vector<double> x;
    for (std::size_t k = 0; k <= a.n_elements; ++k) x.push_back(static_cast<double>(k));
    for (std::size_t ip = 0; ip < a.powers.size(); ++ip) {
      char name[32];
      std::snprintf(name, sizeof name, "%.3g W", a.powers[ip]);
      p.series.push_back({name, x, a.probabilities[ip]});
    }
    snd::svg::write(f, p);
  }
  json extra{{"input", input}, {"distinct_levels", a.levels.distinct_levels()}, {"eta_reference", a.eta_reference}};
  if (a.linearity) extra["alpha"] = a.linearity->alpha;
  out.manifest(cfg, std::nullopt, extra);
  return 0;
}

int cmd_count_rate(const Options& o) {
  auto cfg = load_config(o);
  std::optional<std::uint64_t> seed;
  snd::experiment::PowerSweepResult sw;
  if (!o.input.empty()) {
    sw = read_input(o.input, cfg);
  } else {
    seed = require_seed(o, cfg);
    if (!o.power_min && !o.power_max && !o.power_steps) {
      cfg.sweep.power_min = 0.05e-9;
      cfg.sweep.power_max = 64.0e-9;
      cfg.sweep.steps = 20;
    }
    cfg.sweep.log_spacing = cfg.sweep.power_min > 0.0;
    sw = run_sweep(cfg, *seed);
  }
  const auto a = snd::pipeline::analyze_sweep(sw, cfg.detector.n_elements, analysis_options(cfg));
  Outputs out(o, "count-rate");
  if (o.input.empty()) {
    auto f = out.open("sweep.csv");
    snd::experiment::write_sweep_csv(f, sw);
  }
  write_count_rates(out, a, o.plot);
  json slopes = json::object();
  for (const auto& c : a.count_rates.curves) {
    if (std::isfinite(c.low_power_slope)) slopes[std::to_string(c.threshold_label)] = c.low_power_slope;
  }
  json extra = sweep_extra(sw);
  extra["low_power_slopes"] = slopes;
  out.manifest(cfg, seed, extra);
  return 0;
}

int cmd_calibrate(const Options& o) {
  auto cfg = o.config_path.empty() ? snd::config::from_json(json::object(), false)
                                   : snd::config::load(o.config_path, false);
  if (o.r_load) cfg.detector.r_load = *o.r_load;
  const double target = o.fall_time.value_or(cfg.target_fall_time);
  cfg.detector.l_element = snd::circuit::calibrate_inductance(cfg.detector, target);
  cfg.inductance_calibrated = true;
  snd::circuit::TransientOptions topt;
  topt.dt = snd::circuit::resolved_step(cfg.detector);
  topt.t_end = 1.0e-9 + 6.0 * target;
  const auto tr = snd::circuit::simulate_transient(cfg.detector, snd::circuit::FiringPattern::simultaneous(
                                                                     cfg.detector.n_elements), topt);
  const double fall = snd::circuit::fall_time(tr);
  // Output 33 ns after the photon relative to the peak.
  const auto idx = std::min(tr.size() - 1, static_cast<std::size_t>(std::lround((1.0e-9 + 33.0e-9) / topt.dt)));
  const double ratio = tr.v_out[idx] / tr.peak();
  Outputs out(o, "calibrate");
  {
    auto f = out.open("calibrate.csv");
    snd::csv::write_row(f, {"target_fall_time_s", "l_element_h", "fall_time_s", "v_out_33ns_over_peak"});
    snd::csv::write_row(f, {snd::csv::fmt(target), snd::csv::fmt(cfg.detector.l_element), snd::csv::fmt(fall),
                            snd::csv::fmt(ratio)});
  }
  out.manifest(cfg, std::nullopt, {{"l_element_h", cfg.detector.l_element}, {"fall_time_s", fall}});
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Series nanowire detector simulator and analysis toolkit"};
  app.require_subcommand(1);
  Options o;

  auto common = [&](CLI::App* sub, bool stochastic) {
    sub->add_option("--config", o.config_path, "JSON run configuration")->check(CLI::ExistingFile);
    sub->add_option("--out", o.out_dir, "Output directory")->capture_default_str();
    if (stochastic) sub->add_option("--seed", o.seed, "Random seed (overrides the config)");
    sub->add_flag("--plot", o.plot, "Also write SVG plots");
  };
  auto sweep_flags = [&](CLI::App* sub) {
    sub->add_option("--power-min", o.power_min, "Lowest power (W)");
    sub->add_option("--power-max", o.power_max, "Highest power (W)");
    sub->add_option("--power-steps", o.power_steps, "Number of powers");
    sub->add_option("--shots", o.shots, "Shots per power");
  };

  auto* transient = app.add_subcommand("transient", "Transient currents and output pulse for n fired elements");
  common(transient, false);
  transient->add_option("--n", o.n, "Number of fired elements (default: all)");
  transient->add_option("--rl", o.r_load, "Load resistance (ohm)");

  auto* iv = app.add_subcommand("iv", "Quasi-static I-V curve");
  common(iv, false);
  iv->add_option("--rl", o.r_load, "Load resistance (ohm)");

  auto* stats = app.add_subcommand("stats", "Click distribution P(n) for coherent light");
  common(stats, true);
  stats->add_option("--n", o.n, "Number of elements");
  stats->add_option("--eta", o.eta, "Detection efficiency")->check(CLI::Range(0.0, 1.0));
  stats->add_option("--mu", o.mu, "Mean photon number per pulse")->check(CLI::NonNegativeNumber);
  stats->add_option("--shots", o.shots, "Monte Carlo trials (0: none)");

  auto* noise = app.add_subcommand("noise", "Excess noise from element pulse-height spread");
  common(noise, false);
  noise->add_option("--n", o.n, "Number of elements");

  auto* sweep = app.add_subcommand("sweep", "Simulated pulse-height histograms over a power sweep");
  common(sweep, true);
  sweep_flags(sweep);
  sweep->add_option("--rl", o.r_load, "Load resistance (ohm)");

  auto* analyze = app.add_subcommand("analyze", "Mixture fits, P(n), level noise and linearity of a sweep");
  common(analyze, false);
  analyze->add_option("--input", o.input, "Sweep CSV (default: <out>/sweep.csv)");

  auto* count_rate = app.add_subcommand("count-rate", "Count rate vs power for thresholds between levels");
  common(count_rate, true);
  sweep_flags(count_rate);
  count_rate->add_option("--input", o.input, "Analyze this sweep CSV instead of simulating");

  auto* calibrate = app.add_subcommand("calibrate", "Fit the element inductance to a fall time");
  common(calibrate, false);
  calibrate->add_option("--fall", o.fall_time, "Target fall time (s)");
  calibrate->add_option("--rl", o.r_load, "Load resistance (ohm)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return 2;
  }

  try {
    if (*transient) return cmd_transient(o);
    if (*iv) return cmd_iv(o);
    if (*stats) return cmd_stats(o);
    if (*noise) return cmd_noise(o);
    if (*sweep) return cmd_sweep(o);
    if (*analyze) return cmd_analyze(o);
    if (*count_rate) return cmd_count_rate(o);
    if (*calibrate) return cmd_calibrate(o);
  } catch (const snd::ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  std::cerr << app.help();
  return 2;
}
