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

#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace snd {

// Parameter outside the domain of an operation.
class DomainError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Integration produced a non-finite state.
class IntegrationError : public std::runtime_error {
 public:
  IntegrationError(const std::string& what, double time)
      : std::runtime_error(what), time_(time) {}
  double time() const { return time_; }

 private:
  double time_;
};

// Time step too coarse for the circuit dynamics.
class ResolutionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Least-squares search hit a non-finite residual. Carries the last
// parameter vector at which the residuals were finite.
class FitError : public std::runtime_error {
 public:
  FitError(const std::string& what, std::vector<double> last_params)
      : std::runtime_error(what), last_params_(std::move(last_params)) {}
  const std::vector<double>& last_params() const { return last_params_; }

 private:
  std::vector<double> last_params_;
};

class CalibrationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Configuration could not be parsed or failed validation. `problems` lists
// every violated invariant, not only the first.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& what, std::vector<std::string> problems = {})
      : std::runtime_error(what), problems_(std::move(problems)) {}
  const std::vector<std::string>& problems() const { return problems_; }

 private:
  std::vector<std::string> problems_;
};

}  // namespace snd
