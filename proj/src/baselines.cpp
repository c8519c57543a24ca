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

#include "bbcal/baselines.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "bbcal/error.hpp"
#include "bbcal/metrics.hpp"
#include "bbcal/special.hpp"

namespace bbcal {
namespace {

void check_aligned(std::span<const double> preds, std::span<const int> outcomes) {
  if (preds.size() != outcomes.size()) {
    throw InvalidArgument("predictions and outcomes differ in length");
  }
  if (preds.empty()) throw InvalidArgument("cannot fit a calibration map to no data");
}

double platt_nll(std::span<const double> p, std::span<const int> y, double a, double b) {
  double sum = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double z = a * p[i] + b;
    sum += y[i] == 1 ? softplus(-z) : softplus(z);
  }
  return sum / static_cast<double>(p.size());
}

}  // namespace

PlattParams fit_platt(std::span<const double> preds, std::span<const int> outcomes) {
  check_aligned(preds, outcomes);
  const auto positives = std::count(outcomes.begin(), outcomes.end(), 1);
  if (positives == 0 || positives == static_cast<std::ptrdiff_t>(outcomes.size())) {
    throw InvalidArgument("Platt scaling needs both outcome classes");
  }
  {
    // Complete or quasi-complete separation sends the slope to infinity.
    double lo[2] = {INFINITY, INFINITY}, hi[2] = {-INFINITY, -INFINITY};
    for (std::size_t i = 0; i < preds.size(); ++i) {
      const int c = outcomes[i] == 1 ? 1 : 0;
      lo[c] = std::min(lo[c], preds[i]);
      hi[c] = std::max(hi[c], preds[i]);
    }
    const bool constant = std::min(lo[0], lo[1]) == std::max(hi[0], hi[1]);
    if (!constant && (hi[0] <= lo[1] || hi[1] <= lo[0])) {
      throw NumericalError("Platt scaling is unbounded: the outcomes are separable by the forecast");
    }
  }
  const double inv_n = 1.0 / static_cast<double>(preds.size());
  Eigen::Vector2d theta(0.0, 0.0);
  double f = platt_nll(preds, outcomes, theta[0], theta[1]);
  constexpr int kMaxIterations = 200;
  for (int it = 0; it < kMaxIterations; ++it) {
    Eigen::Vector2d g = Eigen::Vector2d::Zero();
    Eigen::Matrix2d h = Eigen::Matrix2d::Zero();
    for (std::size_t i = 0; i < preds.size(); ++i) {
      const double p = preds[i];
      const double s = sigmoid(theta[0] * p + theta[1]);
      const double r = s - outcomes[i];
      const double w = s * (1.0 - s);
      g[0] += r * p;
      g[1] += r;
      h(0, 0) += w * p * p;
      h(0, 1) += w * p;
      h(1, 1) += w;
    }
    g *= inv_n;
    h *= inv_n;
    h(1, 0) = h(0, 1);
    if (g.norm() < 1e-8) return {theta[0], theta[1]};

    Eigen::Vector2d step = h.completeOrthogonalDecomposition().solve(g);
    if (!step.allFinite() || step.dot(g) <= 0.0) step = g;
    double t = 1.0;
    for (int ls = 0; ls < 60; ++ls) {
      const Eigen::Vector2d cand = theta - t * step;
      const double fc = platt_nll(preds, outcomes, cand[0], cand[1]);
      if (fc <= f - 1e-4 * t * step.dot(g)) {
        theta = cand;
        f = fc;
        break;
      }
      t *= 0.5;
      if (ls == 59) {
        // No further decrease is representable; accept the current point
        // when the gradient is already tiny relative to the curvature.
        if (g.norm() < 1e-6) return {theta[0], theta[1]};
        throw NumericalError("Platt scaling line search failed to make progress");
      }
    }
  }
  throw NumericalError("Platt scaling did not converge; the data may be separable");
}

IsotonicMap fit_isotonic(std::span<const double> preds, std::span<const int> outcomes) {
  check_aligned(preds, outcomes);
  std::vector<std::size_t> order(preds.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return preds[a] < preds[b]; });

  struct Block {
    double start;
    double sum;
    double count;
    double level() const { return sum / count; }
  };
  std::vector<Block> blocks;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    Block b{preds[order[i]], 0.0, 0.0};
    while (j < order.size() && preds[order[j]] == b.start) {
      b.sum += outcomes[order[j]];
      b.count += 1.0;
      ++j;
    }
    blocks.push_back(b);
    while (blocks.size() > 1 && blocks[blocks.size() - 2].level() >= blocks.back().level()) {
      Block top = blocks.back();
      blocks.pop_back();
      blocks.back().sum += top.sum;
      blocks.back().count += top.count;
    }
    i = j;
  }
  IsotonicMap map;
  for (const auto& b : blocks) {
    map.breakpoints.push_back(b.start);
    map.levels.push_back(b.level());
  }
  return map;
}

BinningMap fit_binning(std::span<const double> preds, std::span<const int> outcomes, int bins) {
  check_aligned(preds, outcomes);
  if (bins < 1) throw InvalidArgument("binning needs at least one bin");
  std::vector<double> sum(static_cast<std::size_t>(bins), 0.0);
  std::vector<double> count(static_cast<std::size_t>(bins), 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const auto m = static_cast<std::size_t>(calibration_bin(preds[i], bins));
    sum[m] += outcomes[i];
    count[m] += 1.0;
    total += outcomes[i];
  }
  const double global = total / static_cast<double>(preds.size());
  BinningMap map;
  map.frequencies.resize(static_cast<std::size_t>(bins));
  for (std::size_t m = 0; m < map.frequencies.size(); ++m) {
    map.frequencies[m] = count[m] > 0.0 ? sum[m] / count[m] : global;
  }
  return map;
}

double apply(const PlattParams& map, double pred) {
  return sigmoid(map.slope * pred + map.intercept);
}

double apply(const IsotonicMap& map, double pred) {
  if (map.levels.empty()) throw InvalidArgument("isotonic map has no levels");
  const auto it = std::upper_bound(map.breakpoints.begin(), map.breakpoints.end(), pred);
  const auto idx = it == map.breakpoints.begin() ? 0 : (it - map.breakpoints.begin()) - 1;
  return map.levels[static_cast<std::size_t>(idx)];
}

double apply(const BinningMap& map, double pred) {
  const int bins = static_cast<int>(map.frequencies.size());
  return map.frequencies[static_cast<std::size_t>(calibration_bin(pred, bins))];
}

double apply(const CalibrationMap& map, double pred) {
  return std::visit([pred](const auto& m) { return apply(m, pred); }, map);
}

std::vector<double> apply(const CalibrationMap& map, std::span<const double> preds) {
  std::vector<double> out(preds.size());
  std::transform(preds.begin(), preds.end(), out.begin(),
                 [&](double p) { return apply(map, p); });
  return out;
}

namespace {
struct MapToJson {
  nlohmann::json operator()(const PlattParams& m) const {
    return {{"kind", "platt"}, {"slope", m.slope}, {"intercept", m.intercept}};
  }
  nlohmann::json operator()(const IsotonicMap& m) const {
    return {{"kind", "isotonic"}, {"breakpoints", m.breakpoints}, {"levels", m.levels}};
  }
  nlohmann::json operator()(const BinningMap& m) const {
    return {{"kind", "binning"}, {"frequencies", m.frequencies}};
  }
};
}  // namespace

nlohmann::json to_json(const CalibrationMap& map) { return std::visit(MapToJson{}, map); }

CalibrationMap calibration_map_from_json(const nlohmann::json& j) {
  try {
    const auto kind = j.at("kind").get<std::string>();
    if (kind == "platt") {
      return PlattParams{j.at("slope").get<double>(), j.at("intercept").get<double>()};
    }
    if (kind == "isotonic") {
      IsotonicMap m{j.at("breakpoints").get<std::vector<double>>(),
                    j.at("levels").get<std::vector<double>>()};
      if (m.breakpoints.size() != m.levels.size() || m.levels.empty()) {
        throw DataError("isotonic map needs matching, nonempty breakpoints and levels");
      }
      return m;
    }
    if (kind == "binning") {
      BinningMap m{j.at("frequencies").get<std::vector<double>>()};
      if (m.frequencies.empty()) throw DataError("binning map has no bins");
      return m;
    }
    throw DataError("unknown calibration map kind '" + kind + "'");
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed calibration map: ") + e.what());
  }
}

}  // namespace bbcal
