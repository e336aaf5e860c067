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


// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// nonzero if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/distributions/binomial.hpp>

#include "snd/analysis.hpp"
#include "snd/circuit.hpp"
#include "snd/experiment.hpp"
#include "snd/noisemodel.hpp"
#include "snd/photonstats.hpp"
#include "snd/pipeline.hpp"

namespace ckt = snd::circuit;
namespace ex = snd::experiment;
namespace nm = snd::noisemodel;
namespace ps = snd::photonstats;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::vector<double> log_space(double lo, double hi, std::size_t n) {
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = lo * std::pow(hi / lo, n > 1 ? double(i) / double(n - 1) : 0.0);
  return v;
}

// Laser power giving the requested mean photon number per pulse.
double power_for(const ex::LaserConfig& laser, double mu) {
  return mu * laser.rep_rate * ex::kPlanck * ex::kLightSpeed / laser.wavelength;
}

ex::ReadoutChain low_noise_chain(double noise_rms = 2e-7) {
  ex::ReadoutChain c;
  c.noise_rms = noise_rms;
  c.filters = {snd::numerics::LowPass{80e6}};
  return c;
}

snd::pipeline::SweepAnalysis simulate_and_analyze(const ex::ShotSimulator& sim, const std::vector<double>& mus,
                                                  std::uint64_t shots, std::uint64_t seed) {
  ex::LaserConfig laser;
  std::vector<double> powers;
  for (double mu : mus) powers.push_back(power_for(laser, mu));
  const auto sweep = ex::run_power_sweep(sim, laser, powers, shots, seed);
  return snd::pipeline::analyze_sweep(sweep, sim.detector().n_elements);
}

// 1. Click statistics: closed forms agree with each other and with Monte Carlo.
Outcome criterion1() {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  double worst_forms = 0.0;
  for (std::size_t n_el : {1u, 4u, 12u}) {
    for (int ie = 1; ie <= 10; ++ie) {
      for (double mu : {0.1, 0.5, 1.0, 2.0, 5.0, 10.0, 20.0, 50.0}) {
        const double eta = 0.1 * ie;
        const auto a = ps::click_distribution(n_el, eta, mu).probs;
        const auto b = ps::click_distribution_alternating(n_el, eta, mu);
        for (std::size_t n = 0; n <= n_el; ++n) worst_forms = std::max(worst_forms, std::abs(a[n] - b[n]));
      }
    }
  }
  double worst_z = 0.0;
  std::size_t bins = 0, outside = 0;
  std::uint64_t seed = 100;
  const double trials = 1e6;
  for (std::size_t n_el : {1u, 4u, 12u}) {
    for (double eta : {0.1, 0.5, 1.0}) {
      for (double mu : {0.1, 1.0, 5.0, 20.0, 50.0}) {
        const auto exact = ps::click_distribution(n_el, eta, mu).probs;
        const auto mc = ps::mc_click_distribution(ps::ElementEfficiencies::uniform(n_el, eta), mu,
                                                  static_cast<std::uint64_t>(trials), seed++);
        for (std::size_t n = 0; n <= n_el; ++n) {
          ++bins;
          const double sigma = std::sqrt(exact[n] * (1.0 - exact[n]) / trials);
          const double diff = std::abs(mc.probs[n] - exact[n]);
          if (sigma == 0.0) {
            if (diff > 1e-12) ++outside;
            continue;
          }
          worst_z = std::max(worst_z, diff / sigma);
          if (diff > 3.0 * sigma) ++outside;
        }
      }
    }
  }
  // Each bin is held to 3 sigma. Over many bins a few exceedances are
  // expected by chance, so the count of exceedances must stay within what a
  // correct sampler produces (99.9% quantile) and no bin may exceed 5 sigma.
  const double p3 = 0.0027;
  const auto allowed = static_cast<std::size_t>(
      boost::math::quantile(boost::math::binomial_distribution<>(double(bins), p3), 0.999));
  const double t = seconds_since(t0);
  o.pass = worst_forms <= 1e-9 && outside <= allowed && worst_z <= 5.0 && t < 30.0;
  o.detail = "max |binomial - alternating| = " + fmt("%.2e", worst_forms) + "; MC bins outside 3 sigma: " +
             std::to_string(outside) + "/" + std::to_string(bins) + " (chance allows " + std::to_string(allowed) +
             ", max z " + fmt("%.2f", worst_z) + "); runtime " + fmt("%.1f", t) + " s";
  return o;
}

// 2. Single-element closed form and normalization.
Outcome criterion2() {
  double worst_closed = 0.0, worst_sum = 0.0;
  for (int ie = 0; ie <= 10; ++ie) {
    for (double mu : {0.0, 0.01, 0.1, 0.5, 1.0, 2.0, 5.0, 10.0, 20.0, 50.0, 200.0}) {
      const double eta = 0.1 * ie;
      const auto d1 = ps::click_distribution(1, eta, mu).probs;
      worst_closed = std::max(worst_closed, std::abs(d1[1] - (1.0 - std::exp(-eta * mu))));
      for (std::size_t n_el = 1; n_el <= 12; ++n_el) {
        const auto a = ps::click_distribution(n_el, eta, mu).probs;
        const auto b = ps::click_distribution_alternating(n_el, eta, mu);
        worst_sum = std::max(worst_sum, std::abs(std::accumulate(a.begin(), a.end(), 0.0) - 1.0));
        worst_sum = std::max(worst_sum, std::abs(std::accumulate(b.begin(), b.end(), 0.0) - 1.0));
      }
    }
  }
  return {worst_closed <= 1e-12 && worst_sum <= 1e-10,
          "max |P(1) - (1 - exp(-eta mu))| = " + fmt("%.2e", worst_closed) + "; max |sum P - 1| = " +
              fmt("%.2e", worst_sum)};
}

// 3. Current redistribution into unfired elements.
Outcome criterion3() {
  const auto t0 = std::chrono::steady_clock::now();
  auto unfired = [](const ckt::SndConfig& cfg, std::size_t n) {
    ckt::TransientOptions opt;
    opt.dt = ckt::resolved_step(cfg);
    opt.t_end = 40e-9;
    return ckt::simulate_transient(cfg, ckt::FiringPattern::simultaneous(n), opt).i_wire.back();
  };
  ckt::SndConfig high;
  high.r_load = 1e6;
  double worst = 0.0;
  for (std::size_t n = 1; n <= 11; ++n) {
    for (double i : unfired(high, n)) worst = std::max(worst, std::abs(i - high.i_bias) / high.i_bias);
  }
  ckt::SndConfig low;
  std::vector<double> minima;
  for (std::size_t n = 1; n <= 11; ++n) {
    const auto i = unfired(low, n);
    minima.push_back(*std::min_element(i.begin(), i.end()));
  }
  bool monotone = true;
  for (std::size_t k = 1; k < minima.size(); ++k) monotone = monotone && minima[k] < minima[k - 1];
  const double t = seconds_since(t0);
  return {worst < 1e-3 && monotone && t < 10.0,
          "1 MOhm max deviation " + fmt("%.2e", worst) + "; 50 Ohm dip n=1 " + fmt("%.3f", minima.front() / low.i_bias) +
              " I_B to n=11 " + fmt("%.3f", minima.back() / low.i_bias) + " I_B, monotone " +
              (monotone ? "yes" : "no") + "; runtime " + fmt("%.1f", t) + " s"};
}

// 4. Inductance calibration to the target fall time.
Outcome criterion4(ckt::SndConfig& calibrated) {
  const double target = 11.3e-9;
  calibrated.l_element = ckt::calibrate_inductance(calibrated, target);
  ckt::TransientOptions opt;
  opt.dt = ckt::resolved_step(calibrated);
  opt.t_end = 80e-9;
  const double t_fire = 1e-9;
  const auto tr = ckt::simulate_transient(calibrated, ckt::FiringPattern::simultaneous(12, t_fire), opt);
  const double fall = ckt::fall_time(tr);
  const auto idx = static_cast<std::size_t>(std::lround((t_fire + 33e-9 - tr.times.front()) / opt.dt));
  const double tail = tr.v_out.at(idx) / tr.peak();
  const double err = std::abs(fall - target) / target;
  return {err <= 0.01 && tail < 0.1,
          "L0 = " + fmt("%.4g", calibrated.l_element) + " H; fall time " + fmt("%.3f", fall * 1e9) + " ns (error " +
              fmt("%.2f", 100 * err) + "%); v_out 33 ns after firing = " + fmt("%.1f", 100 * tail) + "% of peak"};
}

// 5. Output-level linearity of the circuit.
Outcome criterion5(const ckt::SndConfig& calibrated) {
  ckt::TransientOptions opt;
  opt.dt = ckt::resolved_step(calibrated);
  opt.t_end = 40e-9;
  const auto h = ckt::pulse_heights(calibrated, opt);
  std::vector<snd::analysis::LevelPoint> pts;
  for (std::size_t n = 0; n < h.size(); ++n) pts.push_back({double(n + 1), h[n]});
  const auto fit = snd::analysis::fit_power_law(pts);
  return {std::abs(fit.alpha - 0.98) <= 0.03,
          "alpha = " + fmt("%.4f", fit.alpha) + " (A = " + fmt("%.4g", fit.A) + " V, R^2 = " + fmt("%.6f", fit.r_squared) + ")"};
}

// 6. Excess noise from element height spread.
Outcome criterion6() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto h = nm::element_heights({1.0, 0.1}, 12);
  const auto curve = nm::excess_noise_curve(h);
  const double var_pop = h.population_sd() * h.population_sd();
  double worst_var = 0.0, worst_sym = 0.0;
  for (std::size_t n = 0; n <= 12; ++n) {
    const auto d = nm::subset_sum_distribution(h, n);
    worst_var = std::max(worst_var, std::abs(d.variance() - var_pop * double(n * (12 - n)) / 11.0));
    if (n >= 1 && n <= 11) {
      worst_sym = std::max(worst_sym, std::abs(curve[n].fwhm - curve[12 - n].fwhm) / curve[n].fwhm);
    }
  }
  std::size_t argmax = 0;
  for (std::size_t n = 0; n <= 12; ++n) {
    if (curve[n].fwhm > curve[argmax].fwhm) argmax = n;
  }
  const double t = seconds_since(t0);
  const bool ends = curve[0].fwhm == 0.0 && curve[12].fwhm == 0.0;
  return {ends && argmax == 6 && worst_sym <= 0.02 && worst_var <= 1e-12 && t < 5.0,
          std::string("FWHM(0), FWHM(12) zero: ") + (ends ? "yes" : "no") + "; argmax n = " + std::to_string(argmax) +
              "; max asymmetry " + fmt("%.2e", worst_sym) + "; max variance error " + fmt("%.1e", worst_var) +
              "; runtime " + fmt("%.2f", t) + " s"};
}

// 7. End-to-end sweep: levels and P(n) recovered from simulated histograms.
Outcome criterion7(const ex::ShotSimulator& sim) {
  const auto t0 = std::chrono::steady_clock::now();
  const double eta = 0.5;
  const auto mus = log_space(0.1 / eta, 60.0 / eta, 20);
  const auto a = simulate_and_analyze(sim, mus, 20000, 7);
  double worst = 0.0;
  for (std::size_t ip = 0; ip < mus.size(); ++ip) {
    const auto exact = ps::click_distribution(12, eta, a.mu_bar[ip]).probs;
    for (std::size_t n = 0; n <= 12; ++n) worst = std::max(worst, std::abs(a.probabilities[ip][n] - exact[n]));
  }
  const double t = seconds_since(t0);
  const auto levels = a.levels.distinct_levels();
  return {levels >= 13 && worst <= 0.02 && t < 300.0,
          std::to_string(levels) + " distinct levels; max |P_fit(n) - P(n)| = " + fmt("%.4f", worst) + "; runtime " +
              fmt("%.1f", t) + " s"};
}

// Standard error of the fitted efficiency from the spread of click numbers.
double eta_sigma(const std::vector<double>& p, double mu, std::uint64_t shots) {
  double m = 0.0, m2 = 0.0;
  for (std::size_t n = 0; n < p.size(); ++n) {
    m += double(n) * p[n];
    m2 += double(n * n) * p[n];
  }
  const double n_el = double(p.size() - 1);
  const double sd_m = std::sqrt(std::max(0.0, m2 - m * m) / double(shots));
  return sd_m * n_el / (mu * std::max(1e-9, n_el - m));
}

// 8. Fitted efficiency against power for non-uniform and uniform arrays.
Outcome criterion8(const ckt::SndConfig& det) {
  const std::uint64_t shots = 20000;
  std::vector<double> q(12, 1.0 / 12.0), intrinsic(12, 0.05);
  intrinsic[5] = 1.0;
  const ex::ShotSimulator skewed(det, ps::ElementEfficiencies::from_routing(q, intrinsic), low_noise_chain(),
                                 nm::element_heights({1.0, 0.0}, 12));
  std::vector<double> mus;
  for (double mu = 1.0; mu < 460.0; mu *= 1.6) mus.push_back(mu);
  const auto a = simulate_and_analyze(skewed, mus, shots, 8);
  std::vector<double> eta, sig;
  for (std::size_t ip = 0; ip < mus.size(); ++ip) {
    eta.push_back(a.eta[ip].eta);
    sig.push_back(eta_sigma(a.probabilities[ip], a.mu_bar[ip], shots));
  }
  bool non_increasing = true;
  double max_drop = 0.0;
  for (std::size_t i = 1; i < eta.size(); ++i) {
    non_increasing = non_increasing && eta[i] <= eta[i - 1] + 3.0 * std::hypot(sig[i], sig[i - 1]);
    max_drop = std::max(max_drop, std::log(eta[i - 1] / eta[i]));
  }
  const double last_drop = std::log(eta[eta.size() - 2] / eta.back());
  const double ratio = eta.back() / eta.front();
  const bool skew_ok = non_increasing && ratio <= 0.7 && last_drop <= 0.25 * max_drop;

  const ex::ShotSimulator flat(det, ps::ElementEfficiencies::from_routing(q, std::vector<double>(12, 0.5)),
                               low_noise_chain(), nm::element_heights({1.0, 0.0}, 12));
  const auto b = simulate_and_analyze(flat, log_space(0.2, 60.0, 10), 40000, 9);
  std::vector<double> flat_eta;
  for (const auto& e : b.eta) {
    if (!e.degenerate) flat_eta.push_back(e.eta);
  }
  const double ref = snd::pipeline::median(flat_eta);
  double spread = 0.0;
  for (double e : flat_eta) spread = std::max(spread, std::abs(e / ref - 1.0));
  const bool flat_ok = flat_eta.size() == b.eta.size() && spread <= 0.05;
  return {skew_ok && flat_ok,
          "non-uniform: eta " + fmt("%.4f", eta.front()) + " -> " + fmt("%.4f", eta.back()) + " over mu " +
              fmt("%.0f", mus.front()) + "-" + fmt("%.0f", mus.back()) + ", non-increasing within 3 sigma " +
              (non_increasing ? "yes" : "no") + ", last step " + fmt("%.3f", last_drop) + " vs largest " +
              fmt("%.3f", max_drop) + " (log); uniform: max deviation from median " + fmt("%.1f", 100 * spread) + "%"};
}

// 9. Low-power count-rate slopes for thresholds n = 1..4.
Outcome criterion9(const ex::ShotSimulator& sim) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto a = simulate_and_analyze(sim, log_space(0.02 / 0.5, 1.0 / 0.5, 12), 1000000, 10);
  bool pass = true;
  std::string detail;
  for (int n = 1; n <= 4; ++n) {
    const auto it = std::find_if(a.count_rates.curves.begin(), a.count_rates.curves.end(),
                                 [&](const auto& c) { return c.threshold_label == n; });
    const double slope = it != a.count_rates.curves.end() ? it->low_power_slope : NAN;
    const bool ok = std::isfinite(slope) && std::abs(slope - n) <= 0.15 * n;
    pass = pass && ok;
    detail += "n=" + std::to_string(n) + " slope " + fmt("%.3f", slope) + (n < 4 ? "; " : "");
  }
  return {pass, detail + "; runtime " + fmt("%.1f", seconds_since(t0)) + " s"};
}

// 10. Level-noise trends.
Outcome criterion10(const ckt::SndConfig& det) {
  const double eta = 0.5;
  // (a) Height spread dominates: widest level in the middle of the range.
  const ex::ShotSimulator spread(det, ps::ElementEfficiencies::uniform(12, eta), low_noise_chain(5e-8),
                                 nm::element_heights({1.0, 0.1}, 12));
  const auto a = simulate_and_analyze(spread, {8.3 / eta}, 200000, 11);
  const auto& row = a.noise.by_n(0);
  // Neighboring widths differ by ~2% near the top, less than the fit
  // scatter, so the maximum is located from a quadratic through all levels.
  std::vector<double> ns, vs;
  std::size_t argmax = 0;
  for (std::size_t n = 0; n < row.size(); ++n) {
    if (!row[n]) continue;
    ns.push_back(double(n));
    vs.push_back(*row[n]);
    if (!row[argmax] || *row[n] > *row[argmax]) argmax = n;
  }
  double vertex = NAN;
  bool concave = false;
  if (ns.size() >= 3) {
    Eigen::MatrixXd x(ns.size(), 3);
    Eigen::VectorXd y(ns.size());
    for (std::size_t i = 0; i < ns.size(); ++i) {
      x(Eigen::Index(i), 0) = 1.0;
      x(Eigen::Index(i), 1) = ns[i];
      x(Eigen::Index(i), 2) = ns[i] * ns[i];
      y(Eigen::Index(i)) = vs[i];
    }
    const Eigen::VectorXd c = x.colPivHouseholderQr().solve(y);
    concave = c(2) < 0.0;
    vertex = -c(1) / (2.0 * c(2));
  }
  const double peak_n = std::round(vertex);
  const bool interior = concave && peak_n >= 4.0 && peak_n <= 6.0 && vertex > ns.front() && vertex < ns.back();

  // (b) Power-scaled height jitter: V_N(3) grows with power.
  auto chain = low_noise_chain();
  chain.height_jitter_per_photon = 0.002;
  const ex::ShotSimulator jitter(det, ps::ElementEfficiencies::uniform(12, eta), chain,
                                 nm::element_heights({1.0, 0.0}, 12));
  const auto mus = log_space(4.0, 16.0, 5);
  const auto b = simulate_and_analyze(jitter, mus, 40000, 12);
  const auto v3 = b.noise.by_power(3);
  std::vector<double> x, y;
  for (std::size_t ip = 0; ip < v3.size(); ++ip) {
    if (v3[ip]) {
      x.push_back(mus[ip]);
      y.push_back(*v3[ip]);
    }
  }
  double slope = NAN;
  if (x.size() >= 2) {
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / double(x.size());
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / double(y.size());
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      sxy += (x[i] - mx) * (y[i] - my);
      sxx += (x[i] - mx) * (x[i] - mx);
    }
    slope = sxy / sxx;
  }
  const bool grows = x.size() == mus.size() && slope > 0.0 && y.back() > y.front();
  return {interior && grows,
          "height spread: V_N(n) maximum at n = " + fmt("%.2f", vertex) + " over n = " + fmt("%.0f", ns.empty() ? NAN : ns.front()) +
              ".." + fmt("%.0f", ns.empty() ? NAN : ns.back()) + " (largest single fit at n = " + std::to_string(argmax) +
              "); jitter: V_N(3) " +
              fmt("%.3e", y.empty() ? NAN : y.front()) + " -> " + fmt("%.3e", y.empty() ? NAN : y.back()) +
              " V over " + std::to_string(x.size()) + "/" + std::to_string(mus.size()) + " powers"};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// 11. Byte-identical CSV from repeated stochastic commands.
Outcome criterion11() {
  const fs::path work = SND_WORK_DIR;
  fs::remove_all(work);
  struct Command {
    std::string name, args;
  };
  const std::vector<Command> commands{
      {"stats", "stats --n 12 --eta 0.5 --mu 3 --shots 200000 --seed 5"},
      {"sweep", "sweep --seed 5 --shots 3000 --power-steps 4"},
      {"count-rate", "count-rate --seed 5 --shots 3000 --power-steps 4"},
  };
  std::size_t files = 0, differing = 0;
  std::string failures;
  for (const auto& c : commands) {
    for (const char* run : {"a", "b"}) {
      const auto out = work / (c.name + "_" + run);
      const std::string cmd = std::string("\"") + SND_CLI + "\" " + c.args + " --out \"" + out.string() + "\" > \"" +
                              (work / (c.name + "_" + run + ".log")).string() + "\" 2>&1";
      fs::create_directories(work);
      if (std::system(cmd.c_str()) != 0) failures += " " + c.name + " failed to run;";
    }
    const auto dir_a = work / (c.name + "_a"), dir_b = work / (c.name + "_b");
    if (!fs::exists(dir_a)) continue;
    for (const auto& entry : fs::directory_iterator(dir_a)) {
      if (entry.path().extension() != ".csv") continue;
      ++files;
      if (slurp(entry.path()) != slurp(dir_b / entry.path().filename())) {
        ++differing;
        failures += " " + c.name + "/" + entry.path().filename().string() + " differs;";
      }
    }
  }
  return {files > 0 && differing == 0 && failures.empty(),
          std::to_string(files) + " CSV files compared across " + std::to_string(commands.size()) +
              " commands, " + std::to_string(differing) + " differ" + (failures.empty() ? "" : ":" + failures)};
}

}  // namespace

int main() {
  ckt::SndConfig calibrated;
  const ckt::SndConfig nominal;
  const ex::ShotSimulator low_noise(nominal, ps::ElementEfficiencies::uniform(12, 0.5), low_noise_chain(),
                                    nm::element_heights({1.0, 0.0}, 12));
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"click statistics: closed forms and Monte Carlo agree", criterion1},
      {"single-element closed form and normalization", criterion2},
      {"current redistribution into unfired elements", criterion3},
      {"fall-time calibration", [&] { return criterion4(calibrated); }},
      {"output-level linearity", [&] { return criterion5(calibrated); }},
      {"excess noise from height spread", criterion6},
      {"end-to-end sweep recovers levels and P(n)", [&] { return criterion7(low_noise); }},
      {"fitted efficiency against power", [&] { return criterion8(nominal); }},
      {"low-power count-rate slopes", [&] { return criterion9(low_noise); }},
      {"level-noise trends", [&] { return criterion10(nominal); }},
      {"deterministic CSV output", criterion11},
  };
  int failed = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    Outcome o;
    try {
      o = criteria[k].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failed;
    std::printf("%s [%zu] %s: %s\n", o.pass ? "PASS" : "FAIL", k + 1, criteria[k].first.c_str(), o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria failed\n", failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
