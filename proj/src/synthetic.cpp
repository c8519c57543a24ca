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

#include "bbcal/synthetic.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <numeric>

#include "bbcal/error.hpp"
#include "bbcal/random.hpp"

namespace bbcal {

std::string to_string(RegimeName r) {
  switch (r) {
    case RegimeName::kConfidentYes: return "ConfidentYes";
    case RegimeName::kUncertain: return "Uncertain";
    case RegimeName::kConfidentNo: return "ConfidentNo";
  }
  return "Uncertain";
}

RegimeName regime_from_string(const std::string& s) {
  for (const auto& r : kRegimes) {
    if (to_string(r.name) == s) return r.name;
  }
  throw DataError("unknown regime '" + s + "'");
}

const Regime& regime(RegimeName r) { return kRegimes[static_cast<std::size_t>(r)]; }

namespace {
constexpr double kProjectionScale = 1.5;
constexpr double kSectorOffset = std::numbers::pi / 12.0;
}  // namespace

RegimeRule::RegimeRule(std::uint64_t seed) : projection_(2, kToyFeatureDim) {
  Rng rng(seed);
  for (int r = 0; r < 2; ++r) {
    for (int c = 0; c < kToyFeatureDim; ++c) projection_(r, c) = rng.normal();
  }
  // Orthonormal rows keep the projected Gaussian isotropic.
  projection_.row(0).normalize();
  projection_.row(1) -= projection_.row(1).dot(projection_.row(0)) * projection_.row(0);
  projection_.row(1).normalize();
  projection_ *= kProjectionScale;
}

RegimeName RegimeRule::classify(const Eigen::Ref<const Eigen::VectorXd>& features) const {
  if (features.size() != kToyFeatureDim) {
    throw InvalidArgument("regime rule expects 10 features");
  }
  const Eigen::Vector2d z = (projection_ * features).array().tanh().matrix();
  double angle = std::atan2(z[1], z[0]) + kSectorOffset;  // (-pi, pi] shifted
  constexpr double kTwoPi = 2.0 * std::numbers::pi;
  angle = std::fmod(angle + kTwoPi, kTwoPi);
  const int sector = std::min(2, static_cast<int>(angle / (kTwoPi / 3.0)));
  return kRegimes[static_cast<std::size_t>(sector)].name;
}

CorruptionSpec CorruptionSpec::parse(const std::string& text) {
  CorruptionSpec spec;
  if (text.empty() || text == "none") return spec;
  const auto colon = text.find(':');
  if (colon == std::string::npos) {
    throw InvalidArgument("corruption must be none, noise:<rho>, gamma:<g> or delta:<d>");
  }
  const std::string kind = text.substr(0, colon);
  try {
    std::size_t used = 0;
    spec.value = std::stod(text.substr(colon + 1), &used);
    if (used != text.size() - colon - 1) throw std::invalid_argument("trailing");
  } catch (const std::exception&) {
    throw InvalidArgument("corruption parameter in '" + text + "' is not a number");
  }
  if (kind == "noise") {
    spec.kind = Kind::kNoise;
  } else if (kind == "gamma") {
    spec.kind = Kind::kDirectional;
  } else if (kind == "delta") {
    spec.kind = Kind::kAdditive;
  } else {
    throw InvalidArgument("unknown corruption kind '" + kind + "'");
  }
  spec.validate();
  return spec;
}

std::string CorruptionSpec::to_string() const {
  if (kind == Kind::kNone) return "none";
  const char* name = kind == Kind::kNoise ? "noise" : kind == Kind::kDirectional ? "gamma" : "delta";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%s:%.17g", name, value);
  return buf;
}

void CorruptionSpec::validate() const {
  if (!std::isfinite(value)) throw InvalidArgument("corruption parameter must be finite");
  if (kind == Kind::kNoise && !(value >= 0.0 && value <= 1.0)) {
    throw InvalidArgument("noise fraction must lie in [0, 1]");
  }
}

std::vector<double> corrupt(std::span<const double> forecasts, const CorruptionSpec& spec,
                            std::uint64_t seed) {
  spec.validate();
  std::vector<double> out(forecasts.begin(), forecasts.end());
  switch (spec.kind) {
    case CorruptionSpec::Kind::kNone:
      break;
    case CorruptionSpec::Kind::kNoise: {
      Rng rng(seed);
      const auto n = out.size();
      const auto replaced = static_cast<std::size_t>(std::llround(spec.value * static_cast<double>(n)));
      std::vector<std::size_t> idx(n);
      std::iota(idx.begin(), idx.end(), std::size_t{0});
      for (std::size_t i = 0; i < replaced; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng.index(n - i));
        std::swap(idx[i], idx[j]);
        out[idx[i]] = rng.uniform();
      }
      break;
    }
    case CorruptionSpec::Kind::kDirectional:
      if (spec.value == 1.0) break;
      for (auto& q : out) q = std::clamp(0.5 + spec.value * (q - 0.5), 0.0, 1.0);
      break;
    case CorruptionSpec::Kind::kAdditive:
      if (spec.value == 0.0) break;
      for (auto& q : out) q = std::clamp(q + spec.value, 0.0, 1.0);
      break;
  }
  return out;
}

std::vector<double> retain(std::span<const double> forecasts, double fraction,
                           std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction <= 1.0)) {
    throw InvalidArgument("retention fraction must lie in (0, 1]");
  }
  const std::size_t n = forecasts.size();
  if (fraction == 1.0 || n == 0) return {forecasts.begin(), forecasts.end()};
  const auto keep = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n))));
  Rng rng(seed);
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  for (std::size_t i = 0; i < keep; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.index(n - i));
    std::swap(idx[i], idx[j]);
  }
  std::sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(keep));
  std::vector<double> out(keep);
  for (std::size_t i = 0; i < keep; ++i) out[i] = forecasts[idx[i]];
  return out;
}

void SyntheticConfig::validate() const {
  if (n < 3) throw InvalidArgument("synthetic data needs at least 3 questions");
  if (forecasters < 1) throw InvalidArgument("need at least one simulated forecaster");
  if (bins < 2) throw InvalidArgument("histograms need at least 2 bins");
  if (!(train_fraction >= 0.0 && train_fraction <= 1.0)) {
    throw InvalidArgument("train fraction must lie in [0, 1]");
  }
  if (!(retain_fraction > 0.0 && retain_fraction <= 1.0)) {
    throw InvalidArgument("retention fraction must lie in (0, 1]");
  }
  corruption.validate();
}

std::vector<SyntheticRecord> generate(const SyntheticConfig& cfg) {
  cfg.validate();
  const RegimeRule rule;

  // Split membership has its own stream so it does not shift the data draws.
  std::vector<std::size_t> order(cfg.n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng split_rng = Rng::stream(cfg.seed, 0x73706c6974ULL);
  split_rng.shuffle(std::span<std::size_t>(order));
  const auto train_count =
      static_cast<std::size_t>(std::floor(cfg.train_fraction * static_cast<double>(cfg.n)));
  std::vector<bool> is_train(cfg.n, false);
  for (std::size_t i = 0; i < train_count; ++i) is_train[order[i]] = true;

  Rng rng(cfg.seed);
  std::vector<SyntheticRecord> out;
  out.reserve(cfg.n);
  std::vector<double> forecasts(cfg.forecasters);
  for (std::size_t i = 0; i < cfg.n; ++i) {
    Eigen::VectorXd features(kToyFeatureDim);
    for (auto& f : features) f = rng.normal();
    const RegimeName name = rule.classify(features);
    const BetaParams<double> truth = regime(name).truth;
    const double p = rng.beta(truth.alpha, truth.beta);
    const int y = rng.bernoulli(p) ? 1 : 0;
    for (auto& q : forecasts) q = rng.beta(truth.alpha, truth.beta);

    std::vector<double> used = forecasts;
    if (is_train[i]) {
      const std::uint64_t key = 2 * static_cast<std::uint64_t>(i);
      if (cfg.retain_fraction < 1.0) {
        used = retain(used, cfg.retain_fraction, splitmix64(cfg.seed ^ splitmix64(key)));
      }
      if (cfg.corruption.kind != CorruptionSpec::Kind::kNone) {
        used = corrupt(used, cfg.corruption, splitmix64(cfg.seed ^ splitmix64(key + 1)));
      }
    }
    Histogram h = Histogram::from_values(used, cfg.bins);
    out.push_back(SyntheticRecord{std::move(features), name, p, y,
                                  cfg.keep_forecasts ? std::move(used) : std::vector<double>{},
                                  std::move(h), is_train[i]});
  }
  return out;
}

std::vector<RegimeRecovery> recover_parameters(std::span<const BetaMixture<double>> predicted,
                                               std::span<const RegimeName> regimes) {
  if (predicted.size() != regimes.size()) {
    throw InvalidArgument("predictions and regime labels differ in length");
  }
  std::array<RegimeRecovery, 3> acc{};
  for (std::size_t r = 0; r < acc.size(); ++r) acc[r].regime = kRegimes[r].name;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    auto& a = acc[static_cast<std::size_t>(regimes[i])];
    const BetaParams<double> matched = moment_match(predicted[i]);
    a.alpha += matched.alpha;
    a.beta += matched.beta;
    a.mean += mean(predicted[i]);
    ++a.count;
  }
  std::vector<RegimeRecovery> out;
  for (auto& a : acc) {
    if (a.count == 0) continue;
    const double c = static_cast<double>(a.count);
    a.alpha /= c;
    a.beta /= c;
    a.mean /= c;
    out.push_back(a);
  }
  return out;
}

ForecastRecord to_forecast_record(const SyntheticRecord& r, std::size_t index) {
  char id[32];
  std::snprintf(id, sizeof(id), "toy-%06zu", index);
  ForecastRecord f;
  f.id = id;
  f.features = r.features;
  f.outcome = r.outcome;
  f.histogram = r.histogram;
  f.source = Source::kSynthetic;
  f.split = r.train ? "train" : "test";
  f.regime = to_string(r.regime);
  f.latent_p = r.latent_p;
  return f;
}

std::vector<ForecastRecord> to_forecast_records(std::span<const SyntheticRecord> records) {
  std::vector<ForecastRecord> out;
  out.reserve(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) out.push_back(to_forecast_record(records[i], i));
  return out;
}

}  // namespace bbcal
