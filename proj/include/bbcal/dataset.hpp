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

#ifndef BBCAL_DATASET_HPP_
#define BBCAL_DATASET_HPP_

#include <Eigen/Dense>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <json.hpp>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bbcal/beta.hpp"

namespace bbcal {

enum class Source { kMetaculus, kPolymarket, kKalshi, kSynthetic };

std::string to_string(Source s);
Source source_from_string(const std::string& s);

using Date = std::chrono::year_month_day;

// Parses YYYY-MM-DD; throws DataError otherwise.
Date parse_date(const std::string& text);
std::string format_date(const Date& d);

// One question. Features are precomputed upstream. split, regime and
// latent_p are optional metadata; synthetic data fills all three.
struct ForecastRecord {
  std::string id;
  std::optional<std::string> text;
  Eigen::VectorXd features;
  std::optional<double> init_forecast;
  std::optional<int> outcome;  // nullopt when unresolved
  std::optional<Histogram> histogram;
  std::optional<Date> resolve_date;
  Source source = Source::kSynthetic;
  std::optional<std::string> split;
  std::optional<std::string> regime;
  std::optional<double> latent_p;

  bool operator==(const ForecastRecord& other) const;
};

nlohmann::ordered_json to_json(const ForecastRecord& r);

// Validates one record. Histograms must have `bins` entries, no negative
// mass, and sum to 1 within 1e-6 (they are then renormalized).
ForecastRecord record_from_json(const nlohmann::json& j, int bins = kDefaultHistogramBins);

// JSON Lines. Blank lines are skipped. All malformed lines are collected
// into one DataError, each prefixed with its line number.
std::vector<ForecastRecord> load_records(const std::filesystem::path& path,
                                         int bins = kDefaultHistogramBins);
void save_records(const std::filesystem::path& path, std::span<const ForecastRecord> records);
std::string records_jsonl(std::span<const ForecastRecord> records);

struct PricePoint {
  std::int64_t timestamp;  // seconds since the Unix epoch
  double price;
};

// Market price history. Without explicit open/close the window runs from
// open_date() to the last observation.
struct PriceSeries {
  std::vector<PricePoint> points;
  std::optional<std::int64_t> open;
  std::optional<std::int64_t> close;

  // Throws DataError on decreasing timestamps or prices outside [0, 1].
  void validate() const;
};

inline constexpr std::int64_t kSecondsPerDay = 86400;

// Earlier of (last - 30 days) and (first + 7 days).
std::int64_t open_date(const PriceSeries& series);

// Counts prices inside [open, close] per bin. Throws DataError when the
// window holds no prices.
Histogram proxy_histogram(const PriceSeries& series, int bins = kDefaultHistogramBins);

struct NamedSeries {
  std::string id;
  PriceSeries series;
};

// Lines of {"id": ..., "prices": [[t, p], ...], "open": t?, "close": t?}.
std::vector<NamedSeries> load_price_series(const std::filesystem::path& path);

// Train: resolved before 2025-04-01. Val: [2025-04-01, 2025-08-01).
// Test: [2025-08-01, 2026-02-01). Anything else is out of range.
struct TemporalSplit {
  std::vector<ForecastRecord> train;
  std::vector<ForecastRecord> val;
  std::vector<ForecastRecord> test;
  std::vector<ForecastRecord> out_of_range;
};

enum class SplitName { kTrain, kVal, kTest, kOutOfRange };
SplitName temporal_split_of(const Date& d);

// Throws InvalidArgument if a record has no resolve date.
TemporalSplit temporal_split(std::span<const ForecastRecord> records);

// Records belonging to `name` ("train", "val" or "test"): the explicit split
// field when present, otherwise the temporal rule.
std::vector<ForecastRecord> select_split(std::span<const ForecastRecord> records,
                                         const std::string& name);

}  // namespace bbcal

#endif  // BBCAL_DATASET_HPP_
