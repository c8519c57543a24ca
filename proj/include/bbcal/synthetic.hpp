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

#ifndef BBCAL_SYNTHETIC_HPP_
#define BBCAL_SYNTHETIC_HPP_

// Toy Beta-Bernoulli data: Gaussian features select one of three
// ground-truth Beta regimes, each question draws a latent probability and a
// single outcome, and simulated forecasters sample from the true Beta.

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "bbcal/beta.hpp"
#include "bbcal/dataset.hpp"

namespace bbcal {

enum class RegimeName { kConfidentYes, kUncertain, kConfidentNo };

struct Regime {
  RegimeName name;
  BetaParams<double> truth;
};

inline constexpr std::array<Regime, 3> kRegimes = {{
    {RegimeName::kConfidentYes, {50.0, 10.0}},
    {RegimeName::kUncertain, {5.0, 5.0}},
    {RegimeName::kConfidentNo, {10.0, 50.0}},
}};

std::string to_string(RegimeName r);
RegimeName regime_from_string(const std::string& s);
const Regime& regime(RegimeName r);

inline constexpr int kToyFeatureDim = 10;
inline constexpr std::uint64_t kRegimeRuleSeed = 0x5eed0f7e9a11ULL;

// Fixed nonlinear feature -> regime rule: an orthonormal 10 -> 2 projection
// (scaled), elementwise tanh, then three 120-degree sectors by angle.
class RegimeRule {
 public:
  explicit RegimeRule(std::uint64_t seed = kRegimeRuleSeed);
  RegimeName classify(const Eigen::Ref<const Eigen::VectorXd>& features) const;
  const Eigen::Matrix<double, 2, Eigen::Dynamic>& projection() const { return projection_; }

 private:
  Eigen::Matrix<double, 2, Eigen::Dynamic> projection_;
};

struct CorruptionSpec {
  enum class Kind { kNone, kNoise, kDirectional, kAdditive };
  Kind kind = Kind::kNone;
  double value = 0.0;

  // "none", "noise:<rho>", "gamma:<g>" or "delta:<d>".
  static CorruptionSpec parse(const std::string& text);
  std::string to_string() const;
  void validate() const;
};

// Noise replaces round(rho * n) forecasts, chosen by seed, with Uniform(0, 1)
// draws. Shifts are clipped to [0, 1]; gamma = 1 and delta = 0 return the
// input unchanged.
std::vector<double> corrupt(std::span<const double> forecasts, const CorruptionSpec& spec,
                            std::uint64_t seed);

// Keeps round(fraction * n) forecasts (at least one), sampled without
// replacement, in their original order.
std::vector<double> retain(std::span<const double> forecasts, double fraction,
                           std::uint64_t seed);

struct SyntheticConfig {
  std::size_t n = 30000;
  std::size_t forecasters = 1000;
  int bins = kDefaultHistogramBins;
  std::uint64_t seed = 0;
  double train_fraction = 0.8;
  // Applied to training records only, retention first.
  double retain_fraction = 1.0;
  CorruptionSpec corruption;
  bool keep_forecasts = false;

  void validate() const;
};

struct SyntheticRecord {
  Eigen::VectorXd features;
  RegimeName regime;
  double latent_p;
  int outcome;
  std::vector<double> human_forecasts;  // empty unless keep_forecasts
  Histogram histogram;
  bool train;
};

std::vector<SyntheticRecord> generate(const SyntheticConfig& cfg);

// Per-regime average of the moment-matched (alpha, beta) and of the mean
// of predicted mixtures. Regimes with no items are omitted.
struct RegimeRecovery {
  RegimeName regime;
  std::size_t count = 0;
  double alpha = 0.0;
  double beta = 0.0;
  double mean = 0.0;

  double concentration() const { return alpha + beta; }
};

std::vector<RegimeRecovery> recover_parameters(std::span<const BetaMixture<double>> predicted,
                                               std::span<const RegimeName> regimes);

ForecastRecord to_forecast_record(const SyntheticRecord& r, std::size_t index);
std::vector<ForecastRecord> to_forecast_records(std::span<const SyntheticRecord> records);

}  // namespace bbcal

#endif  // BBCAL_SYNTHETIC_HPP_
