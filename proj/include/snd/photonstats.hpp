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

// Click statistics of an N-element spatially multiplexed detector under
// coherent (Poissonian) illumination.
//
// With mean photon number mu per pulse and array efficiency eta, Poisson
// thinning over N uniformly illuminated elements leaves each element dark
// with probability q = exp(-eta mu / N), independently. The number of
// clicked elements is then Binomial(N, 1 - q). Expanding (1 - q)^n gives the
// equivalent alternating sum
//
//   P(n) = C(N, n) sum_{j=0}^{n} (-1)^j C(n, j) exp(-eta mu (N - n + j) / N),
//
// which is the Poisson average of the fixed-photon-number multiplexing
// formula. Both routes are provided; they must agree.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/math/special_functions/binomial.hpp>

#include "snd/csv.hpp"
#include "snd/errors.hpp"
#include "snd/numerics.hpp"

namespace snd::photonstats {

struct ClickDistribution {
  std::size_t n_elements = 0;
  double eta = 0.0;
  double mu_bar = 0.0;
  std::vector<double> probs;  // P(n), n = 0..N

  double mean() const {
    double m = 0.0;
    for (std::size_t n = 0; n < probs.size(); ++n) m += static_cast<double>(n) * probs[n];
    return m;
  }
};

// Per-element detection probability per incident photon (eta_k * q_k) and
// the spatial routing weights q_k.
struct ElementEfficiencies {
  std::vector<double> per_element;
  std::vector<double> routing;

  std::size_t size() const { return routing.size(); }

  static ElementEfficiencies uniform(std::size_t n, double eta) {
    const double q = 1.0 / static_cast<double>(n);
    return {std::vector<double>(n, eta * q), std::vector<double>(n, q)};
  }

  // Combines routing weights with intrinsic per-element efficiencies.
  static ElementEfficiencies from_routing(const std::vector<double>& routing,
                                          const std::vector<double>& intrinsic) {
    if (routing.size() != intrinsic.size()) throw DomainError("ElementEfficiencies: size mismatch");
    ElementEfficiencies e;
    e.routing = routing;
    for (std::size_t k = 0; k < routing.size(); ++k) e.per_element.push_back(routing[k] * intrinsic[k]);
    e.validate();
    return e;
  }

  double total() const { return std::accumulate(per_element.begin(), per_element.end(), 0.0); }

  void validate() const {
    if (routing.empty() || per_element.size() != routing.size()) {
      throw DomainError("ElementEfficiencies: per_element and routing must be non-empty and equal length");
    }
    double sum_q = 0.0;
    for (std::size_t k = 0; k < routing.size(); ++k) {
      if (!(routing[k] >= 0.0 && routing[k] <= 1.0)) throw DomainError("ElementEfficiencies: routing outside [0,1]");
      if (!(per_element[k] >= 0.0 && per_element[k] <= routing[k] * (1.0 + 1e-12))) {
        throw DomainError("ElementEfficiencies: per_element must lie in [0, routing]");
      }
      sum_q += routing[k];
    }
    if (sum_q > 1.0 + 1e-12) throw DomainError("ElementEfficiencies: routing weights sum above 1");
  }
};

namespace detail {

inline void check_params(std::size_t n_elements, double eta, double mu_bar) {
  if (n_elements < 1) throw DomainError("click statistics: N must be >= 1");
  if (!(eta >= 0.0 && eta <= 1.0)) throw DomainError("click statistics: eta must lie in [0, 1]");
  if (!(mu_bar >= 0.0) || !std::isfinite(mu_bar)) throw DomainError("click statistics: mu_bar must be >= 0");
}

inline double choose(std::size_t n, std::size_t k) {
  return boost::math::binomial_coefficient<double>(static_cast<unsigned>(n), static_cast<unsigned>(k));
}

}  // namespace detail

// Binomial(N, p) probability vector; p^0 is taken as 1.
inline std::vector<double> binomial_pmf(std::size_t n_elements, double p) {
  std::vector<double> out(n_elements + 1);
  const double q = 1.0 - p;
  for (std::size_t n = 0; n <= n_elements; ++n) {
    out[n] = detail::choose(n_elements, n) * std::pow(p, static_cast<double>(n)) *
             std::pow(q, static_cast<double>(n_elements - n));
  }
  return out;
}

inline double click_probability_per_element(std::size_t n_elements, double eta, double mu_bar) {
  return -std::expm1(-eta * mu_bar / static_cast<double>(n_elements));
}

// Alternating-sum form; used as the independent verification route.
inline std::vector<double> click_distribution_alternating(std::size_t n_elements, double eta, double mu_bar) {
  detail::check_params(n_elements, eta, mu_bar);
  const double x = eta * mu_bar / static_cast<double>(n_elements);
  std::vector<double> out(n_elements + 1);
  for (std::size_t n = 0; n <= n_elements; ++n) {
    double s = 0.0;
    for (std::size_t j = 0; j <= n; ++j) {
      const double sign = (j % 2 == 0) ? 1.0 : -1.0;
      s += sign * detail::choose(n, j) * std::exp(-x * static_cast<double>(n_elements - n + j));
    }
    out[n] = detail::choose(n_elements, n) * s;
  }
  return out;
}

inline ClickDistribution click_distribution(std::size_t n_elements, double eta, double mu_bar) {
  detail::check_params(n_elements, eta, mu_bar);
  ClickDistribution d{n_elements, eta, mu_bar,
                      binomial_pmf(n_elements, click_probability_per_element(n_elements, eta, mu_bar))};
#ifndef NDEBUG
  const auto alt = click_distribution_alternating(n_elements, eta, mu_bar);
  for (std::size_t n = 0; n <= n_elements; ++n) {
    if (std::abs(alt[n] - d.probs[n]) > 1e-9) {
      throw std::logic_error("click_distribution: binomial and alternating-sum forms disagree");
    }
  }
#endif
  return d;
}

// Mean click count N (1 - exp(-eta mu / N)).
inline double expected_clicks(std::size_t n_elements, double eta, double mu_bar) {
  detail::check_params(n_elements, eta, mu_bar);
  return static_cast<double>(n_elements) * click_probability_per_element(n_elements, eta, mu_bar);
}

// Exact distribution of the number of successes of independent Bernoulli
// trials with the given probabilities.
inline std::vector<double> poisson_binomial(const std::vector<double>& p) {
  std::vector<double> d(p.size() + 1, 0.0);
  d[0] = 1.0;
  for (std::size_t k = 0; k < p.size(); ++k) {
    for (std::size_t n = k + 1; n > 0; --n) d[n] = d[n] * (1.0 - p[k]) + d[n - 1] * p[k];
    d[0] *= 1.0 - p[k];
  }
  return d;
}

// Exact click distribution for non-uniform elements: element k is dark with
// probability exp(-mu eta_k q_k).
inline std::vector<double> click_distribution_nonuniform(const ElementEfficiencies& eff, double mu_bar) {
  eff.validate();
  std::vector<double> p;
  p.reserve(eff.size());
  for (double e : eff.per_element) p.push_back(-std::expm1(-mu_bar * e));
  return poisson_binomial(p);
}

// Monte Carlo click histogram. Each trial draws the detected photons
// directly, d ~ Poisson(mu * sum_k q_k eta_k) (Poisson thinning of per-photon
// routing and detection), sends each to element k with probability
// q_k eta_k / sum, and counts distinct clicked elements. Trials are split
// into fixed-size blocks with their own substreams, so the result does not
// depend on how blocks are scheduled.
inline ClickDistribution mc_click_distribution(const ElementEfficiencies& eff, double mu_bar,
                                               std::uint64_t trials, std::uint64_t seed) {
  eff.validate();
  if (trials < 1) throw DomainError("mc_click_distribution: trials must be >= 1");
  if (!(mu_bar >= 0.0)) throw DomainError("mc_click_distribution: mu_bar must be >= 0");
  const std::size_t n_el = eff.size();
  const double p_detect = eff.total();
  std::vector<double> cumulative(n_el);
  std::partial_sum(eff.per_element.begin(), eff.per_element.end(), cumulative.begin());
  const double mean = mu_bar * p_detect;

  constexpr std::uint64_t kBlock = 1u << 16;
  std::vector<std::uint64_t> counts(n_el + 1, 0);
  std::vector<char> clicked(n_el);
  for (std::uint64_t block = 0; block * kBlock < trials; ++block) {
    numerics::RandomStream rng(seed, block);
    std::poisson_distribution<std::uint64_t> detected(mean > 0.0 ? mean : 1.0);
    const std::uint64_t end = std::min(trials, (block + 1) * kBlock);
    for (std::uint64_t t = block * kBlock; t < end; ++t) {
      const std::uint64_t m = mean > 0.0 ? detected(rng.engine()) : 0;
      std::size_t n_clicks = 0;
      if (m > 0) {
        std::fill(clicked.begin(), clicked.end(), 0);
        for (std::uint64_t ph = 0; ph < m && n_clicks < n_el; ++ph) {
          const double u = rng.uniform() * p_detect;
          auto k = static_cast<std::size_t>(std::upper_bound(cumulative.begin(), cumulative.end(), u) -
                                            cumulative.begin());
          k = std::min(k, n_el - 1);
          if (!clicked[k]) {
            clicked[k] = 1;
            ++n_clicks;
          }
        }
      }
      ++counts[n_clicks];
    }
  }
  ClickDistribution d;
  d.n_elements = n_el;
  d.eta = eff.total();
  d.mu_bar = mu_bar;
  d.probs.resize(n_el + 1);
  for (std::size_t n = 0; n <= n_el; ++n) {
    d.probs[n] = static_cast<double>(counts[n]) / static_cast<double>(trials);
  }
  return d;
}

struct EfficiencyFit {
  double eta = 0.0;
  double residual = 0.0;  // sum of squared differences at eta
  bool degenerate = false;
};

// Least-squares fit of eta to a measured click distribution at known mu.
// The search runs over the per-element click probability p in
// [0, 1 - exp(-mu/N)], where the objective is a polynomial, and maps back to
// eta = -N ln(1 - p) / mu. This keeps full resolution when eta * mu is small.
inline EfficiencyFit fit_efficiency(std::size_t n_elements, double mu_bar, const std::vector<double>& measured) {
  if (measured.size() != n_elements + 1) throw DomainError("fit_efficiency: measured must have N+1 entries");
  if (!(mu_bar >= 0.0)) throw DomainError("fit_efficiency: mu_bar must be >= 0");
  auto sse_at = [&](double p) {
    const auto model = binomial_pmf(n_elements, p);
    double s = 0.0;
    for (std::size_t n = 0; n <= n_elements; ++n) s += (model[n] - measured[n]) * (model[n] - measured[n]);
    return s;
  };
  const double mass_above_zero = 1.0 - measured[0];
  if (mu_bar == 0.0 || mass_above_zero <= 0.0) {
    return {0.0, sse_at(0.0), true};
  }
  const double p_max = click_probability_per_element(n_elements, 1.0, mu_bar);
  const auto [p, sse] = numerics::minimize_scalar_scan(sse_at, 0.0, p_max, 400);
  const double eta = std::clamp(-static_cast<double>(n_elements) * std::log1p(-p) / mu_bar, 0.0, 1.0);
  return {eta, sse, false};
}

// Columns: n, probability.
inline void write_csv(std::ostream& os, const ClickDistribution& d) {
  csv::write_row(os, {"n", "probability"});
  for (std::size_t n = 0; n < d.probs.size(); ++n) csv::write_row(os, {std::to_string(n), csv::fmt(d.probs[n])});
}

}  // namespace snd::photonstats
