// Copyright 2026 The bbcal Authors
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

#ifndef BBCAL_BASELINES_HPP_
#define BBCAL_BASELINES_HPP_

// Post-hoc recalibration maps fitted on (initial forecast, outcome) pairs.

#include <json.hpp>
#include <span>
#include <variant>
#include <vector>

namespace bbcal {

// p -> sigmoid(slope * p + intercept), with p the raw probability (not its
// log-odds).
struct PlattParams {
  double slope = 1.0;
  double intercept = 0.0;
};

// Right-continuous step function: level i applies on [breakpoint i,
// breakpoint i+1). Inputs below the first breakpoint take the first level.
struct IsotonicMap {
  std::vector<double> breakpoints;
  std::vector<double> levels;
};

// Empirical outcome frequency per calibration bin (same partition as ECE).
struct BinningMap {
  std::vector<double> frequencies;
};

using CalibrationMap = std::variant<PlattParams, IsotonicMap, BinningMap>;

// Newton's method on the mean negative log-likelihood until the gradient
// norm falls below 1e-8. Throws InvalidArgument for single-class data and
// NumericalError if the optimum is unbounded (separable data).
PlattParams fit_platt(std::span<const double> preds, std::span<const int> outcomes);

// Pool-adjacent-violators least-squares fit. Equal predictions share one
// level.
IsotonicMap fit_isotonic(std::span<const double> preds, std::span<const int> outcomes);

// Empty bins fall back to the overall outcome rate.
BinningMap fit_binning(std::span<const double> preds, std::span<const int> outcomes, int bins);

double apply(const PlattParams& map, double pred);
double apply(const IsotonicMap& map, double pred);
double apply(const BinningMap& map, double pred);
double apply(const CalibrationMap& map, double pred);
std::vector<double> apply(const CalibrationMap& map, std::span<const double> preds);

nlohmann::json to_json(const CalibrationMap& map);
CalibrationMap calibration_map_from_json(const nlohmann::json& j);

}  // namespace bbcal

#endif  // BBCAL_BASELINES_HPP_
