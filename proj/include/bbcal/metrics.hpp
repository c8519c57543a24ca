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

#ifndef BBCAL_METRICS_HPP_
#define BBCAL_METRICS_HPP_

// Forecast evaluation. Inputs are parallel spans of predicted probabilities
// and 0/1 outcomes; every function throws InvalidArgument on empty or
// misaligned input.

#include <json.hpp>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bbcal/beta.hpp"

namespace bbcal {

inline constexpr int kDefaultCalibrationBins = 10;
inline constexpr int kDefaultCurveWindow = 300;

struct ReliabilityBin {
  double mean_prediction = 0.0;
  double accuracy = 0.0;
  std::size_t count = 0;
};

struct CurvePoint {
  std::size_t rank = 0;  // index of the first item in the window
  double smoothed_brier = 0.0;
};

struct EvalReport {
  double brier = 0.0;
  double accuracy = 0.0;
  double auc = 0.0;
  double ece = 0.0;
  std::optional<double> kl_mean;
  std::vector<ReliabilityBin> reliability_bins;
  std::size_t n = 0;
};

// Calibration bin for p under [0, 1/M], (1/M, 2/M], ..., ((M-1)/M, 1].
int calibration_bin(double p, int bins);

double brier(std::span<const double> preds, std::span<const int> outcomes);

// Fraction of items where (p >= threshold) matches the outcome.
double accuracy(std::span<const double> preds, std::span<const int> outcomes,
                double threshold = 0.5);

// Mann-Whitney statistic with average ranks for ties. Throws
// InvalidArgument unless both classes are present.
double auc(std::span<const double> preds, std::span<const int> outcomes);

double ece(std::span<const double> preds, std::span<const int> outcomes,
           int bins = kDefaultCalibrationBins);

// One row per calibration bin, empty bins included with count 0.
std::vector<ReliabilityBin> reliability_table(std::span<const double> preds,
                                              std::span<const int> outcomes,
                                              int bins = kDefaultCalibrationBins);

// Mean human_loss over aligned (mixture, histogram) pairs.
double eval_kl(std::span<const BetaMixture<double>> mixtures,
               std::span<const Histogram> histograms, int bins = kDefaultHistogramBins);

// Items sorted by uncertainty ascending (stable), squared errors smoothed by
// a trailing window. Throws InvalidArgument if window is 0 or exceeds n.
std::vector<CurvePoint> uncertainty_curve(std::span<const double> uncertainties,
                                          std::span<const double> preds,
                                          std::span<const int> outcomes,
                                          std::size_t window = kDefaultCurveWindow);

// Brier, accuracy, ECE and the reliability table; AUC is left at NaN when
// only one class is present.
EvalReport evaluate(std::span<const double> preds, std::span<const int> outcomes,
                    int bins = kDefaultCalibrationBins);

nlohmann::json to_json(const EvalReport& report);
std::string reliability_csv(std::span<const ReliabilityBin> rows);
std::string curve_csv(std::span<const CurvePoint> curve);

// Shortest round-trip decimal form.
std::string format_double(double x);

}  // namespace bbcal

#endif  // BBCAL_METRICS_HPP_
