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

#include "bbcal/metrics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <numeric>

#include "bbcal/error.hpp"
#include "bbcal/objectives.hpp"

namespace bbcal {
namespace {

void check_aligned(std::span<const double> preds, std::span<const int> outcomes) {
  if (preds.size() != outcomes.size()) {
    throw InvalidArgument("predictions and outcomes differ in length");
  }
  if (preds.empty()) throw InvalidArgument("metrics need at least one item");
}

}  // namespace

int calibration_bin(double p, int bins) {
  if (bins < 1) throw InvalidArgument("need at least one calibration bin");
  if (!(p >= 0.0 && p <= 1.0)) throw InvalidArgument("prediction outside [0, 1]");
  int m = static_cast<int>(std::ceil(p * bins)) - 1;
  m = std::clamp(m, 0, bins - 1);
  while (m > 0 && p <= static_cast<double>(m) / bins) --m;
  while (m < bins - 1 && p > static_cast<double>(m + 1) / bins) ++m;
  return m;
}

double brier(std::span<const double> preds, std::span<const int> outcomes) {
  check_aligned(preds, outcomes);
  double sum = 0.0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const double d = preds[i] - outcomes[i];
    sum += d * d;
  }
  return sum / static_cast<double>(preds.size());
}

double accuracy(std::span<const double> preds, std::span<const int> outcomes, double threshold) {
  check_aligned(preds, outcomes);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    if ((preds[i] >= threshold) == (outcomes[i] == 1)) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(preds.size());
}

double auc(std::span<const double> preds, std::span<const int> outcomes) {
  check_aligned(preds, outcomes);
  const std::size_t n = preds.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return preds[a] < preds[b]; });

  double positive_rank_sum = 0.0;
  std::size_t positives = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && preds[order[j]] == preds[order[i]]) ++j;
    // Ranks i+1..j share their average.
    const double avg_rank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t t = i; t < j; ++t) {
      if (outcomes[order[t]] == 1) {
        positive_rank_sum += avg_rank;
        ++positives;
      }
    }
    i = j;
  }
  const std::size_t negatives = n - positives;
  if (positives == 0 || negatives == 0) {
    throw InvalidArgument("AUC is undefined when only one class is present");
  }
  const double np = static_cast<double>(positives);
  const double u = positive_rank_sum - np * (np + 1.0) / 2.0;
  return u / (np * static_cast<double>(negatives));
}

std::vector<ReliabilityBin> reliability_table(std::span<const double> preds,
                                              std::span<const int> outcomes, int bins) {
  check_aligned(preds, outcomes);
  std::vector<double> pred_sum(static_cast<std::size_t>(bins), 0.0);
  std::vector<double> hit_sum(static_cast<std::size_t>(bins), 0.0);
  std::vector<ReliabilityBin> rows(static_cast<std::size_t>(bins));
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const auto m = static_cast<std::size_t>(calibration_bin(preds[i], bins));
    pred_sum[m] += preds[i];
    hit_sum[m] += outcomes[i];
    ++rows[m].count;
  }
  for (std::size_t m = 0; m < rows.size(); ++m) {
    if (rows[m].count == 0) continue;
    const double c = static_cast<double>(rows[m].count);
    rows[m].mean_prediction = pred_sum[m] / c;
    rows[m].accuracy = hit_sum[m] / c;
  }
  return rows;
}

double ece(std::span<const double> preds, std::span<const int> outcomes, int bins) {
  const auto rows = reliability_table(preds, outcomes, bins);
  double sum = 0.0;
  for (const auto& r : rows) {
    if (r.count == 0) continue;
    sum += static_cast<double>(r.count) * std::abs(r.accuracy - r.mean_prediction);
  }
  return sum / static_cast<double>(preds.size());
}

double eval_kl(std::span<const BetaMixture<double>> mixtures,
               std::span<const Histogram> histograms, int bins) {
  if (mixtures.size() != histograms.size()) {
    throw InvalidArgument("mixtures and histograms differ in length");
  }
  if (mixtures.empty()) throw InvalidArgument("eval_kl needs at least one item");
  double sum = 0.0;
  for (std::size_t i = 0; i < mixtures.size(); ++i) {
    sum += human_loss(mixtures[i], histograms[i], bins);
  }
  return sum / static_cast<double>(mixtures.size());
}

std::vector<CurvePoint> uncertainty_curve(std::span<const double> uncertainties,
                                          std::span<const double> preds,
                                          std::span<const int> outcomes, std::size_t window) {
  check_aligned(preds, outcomes);
  const std::size_t n = preds.size();
  if (uncertainties.size() != n) {
    throw InvalidArgument("uncertainties and predictions differ in length");
  }
  if (window == 0 || window > n) {
    throw InvalidArgument("curve window " + std::to_string(window) +
                          " must be between 1 and the item count " + std::to_string(n));
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return uncertainties[a] < uncertainties[b];
  });
  std::vector<double> err(n);
  for (std::size_t r = 0; r < n; ++r) {
    const double d = preds[order[r]] - outcomes[order[r]];
    err[r] = d * d;
  }
  // Each window sum is recomputed from scratch so results do not depend on
  // accumulated rounding from a running sum.
  std::vector<CurvePoint> curve(n - window + 1);
  const double inv = 1.0 / static_cast<double>(window);
  for (std::size_t s = 0; s < curve.size(); ++s) {
    double sum = 0.0;
    for (std::size_t t = s; t < s + window; ++t) sum += err[t];
    curve[s] = {s, sum * inv};
  }
  return curve;
}

EvalReport evaluate(std::span<const double> preds, std::span<const int> outcomes, int bins) {
  EvalReport r;
  r.n = preds.size();
  r.brier = brier(preds, outcomes);
  r.accuracy = accuracy(preds, outcomes);
  const auto positives = std::count(outcomes.begin(), outcomes.end(), 1);
  r.auc = (positives == 0 || positives == static_cast<std::ptrdiff_t>(outcomes.size()))
              ? std::numeric_limits<double>::quiet_NaN()
              : auc(preds, outcomes);
  r.reliability_bins = reliability_table(preds, outcomes, bins);
  r.ece = ece(preds, outcomes, bins);
  return r;
}

nlohmann::json to_json(const EvalReport& report) {
  nlohmann::json j;
  j["n"] = report.n;
  j["brier"] = report.brier;
  j["accuracy"] = report.accuracy;
  j["auc"] = std::isnan(report.auc) ? nlohmann::json(nullptr) : nlohmann::json(report.auc);
  j["ece"] = report.ece;
  j["kl_mean"] = report.kl_mean ? nlohmann::json(*report.kl_mean) : nlohmann::json(nullptr);
  auto& rows = j["reliability_bins"] = nlohmann::json::array();
  for (const auto& b : report.reliability_bins) {
    rows.push_back({{"bin_mean_pred", b.mean_prediction},
                    {"bin_acc", b.accuracy},
                    {"count", b.count}});
  }
  return j;
}

std::string format_double(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

std::string reliability_csv(std::span<const ReliabilityBin> rows) {
  std::string out = "bin_mean_pred,bin_acc,count\n";
  for (const auto& r : rows) {
    out += format_double(r.mean_prediction) + ',' + format_double(r.accuracy) + ',' +
           std::to_string(r.count) + '\n';
  }
  return out;
}

std::string curve_csv(std::span<const CurvePoint> curve) {
  std::string out = "rank,smoothed_brier\n";
  for (const auto& p : curve) {
    out += std::to_string(p.rank) + ',' + format_double(p.smoothed_brier) + '\n';
  }
  return out;
}

}  // namespace bbcal
