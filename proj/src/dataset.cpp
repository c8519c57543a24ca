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

#include "bbcal/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "bbcal/error.hpp"

namespace bbcal {

namespace chr = std::chrono;

std::string to_string(Source s) {
  switch (s) {
    case Source::kMetaculus: return "metaculus";
    case Source::kPolymarket: return "polymarket";
    case Source::kKalshi: return "kalshi";
    case Source::kSynthetic: return "synthetic";
  }
  return "synthetic";
}

Source source_from_string(const std::string& s) {
  if (s == "metaculus") return Source::kMetaculus;
  if (s == "polymarket") return Source::kPolymarket;
  if (s == "kalshi") return Source::kKalshi;
  if (s == "synthetic") return Source::kSynthetic;
  throw DataError("unknown source '" + s + "'");
}

Date parse_date(const std::string& text) {
  int y = 0;
  unsigned m = 0, d = 0;
  auto bad = [&] { return DataError("invalid date '" + text + "', expected YYYY-MM-DD"); };
  if (text.size() != 10 || text[4] != '-' || text[7] != '-') throw bad();
  const char* s = text.data();
  if (std::from_chars(s, s + 4, y).ptr != s + 4 || std::from_chars(s + 5, s + 7, m).ptr != s + 7 ||
      std::from_chars(s + 8, s + 10, d).ptr != s + 10) {
    throw bad();
  }
  const Date date{chr::year{y}, chr::month{m}, chr::day{d}};
  if (!date.ok()) throw bad();
  return date;
}

std::string format_date(const Date& d) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04d-%02u-%02u", static_cast<int>(d.year()),
                static_cast<unsigned>(d.month()), static_cast<unsigned>(d.day()));
  return buf;
}

bool ForecastRecord::operator==(const ForecastRecord& o) const {
  return id == o.id && text == o.text && features.size() == o.features.size() &&
         features == o.features && init_forecast == o.init_forecast && outcome == o.outcome &&
         histogram == o.histogram && resolve_date == o.resolve_date && source == o.source &&
         split == o.split && regime == o.regime && latent_p == o.latent_p;
}

// Field order is fixed so files are byte-stable.
nlohmann::ordered_json to_json(const ForecastRecord& r) {
  nlohmann::ordered_json j;
  j["id"] = r.id;
  if (r.text) j["text"] = *r.text;
  j["features"] = std::vector<double>(r.features.data(), r.features.data() + r.features.size());
  if (r.init_forecast) j["init_forecast"] = *r.init_forecast;
  j["outcome"] = r.outcome ? nlohmann::ordered_json(*r.outcome) : nlohmann::ordered_json(nullptr);
  if (r.histogram) {
    const auto& m = r.histogram->masses();
    j["histogram"] = std::vector<double>(m.data(), m.data() + m.size());
  }
  if (r.resolve_date) j["resolve_date"] = format_date(*r.resolve_date);
  j["source"] = to_string(r.source);
  if (r.split) j["split"] = *r.split;
  if (r.regime) j["regime"] = *r.regime;
  if (r.latent_p) j["latent_p"] = *r.latent_p;
  return j;
}

namespace {

std::string record_line(const ForecastRecord& r) { return to_json(r).dump(); }

double probability_field(const nlohmann::json& v, const char* name) {
  if (!v.is_number()) throw DataError(std::string(name) + " must be a number");
  const double p = v.get<double>();
  if (!(p >= 0.0 && p <= 1.0)) throw DataError(std::string(name) + " must lie in [0, 1]");
  return p;
}

}  // namespace

ForecastRecord record_from_json(const nlohmann::json& j, int bins) {
  if (!j.is_object()) throw DataError("record must be a JSON object");
  ForecastRecord r;
  try {
    r.id = j.at("id").get<std::string>();
    const auto& feats = j.at("features");
    if (!feats.is_array()) throw DataError("features must be an array");
    r.features.resize(static_cast<Eigen::Index>(feats.size()));
    for (std::size_t i = 0; i < feats.size(); ++i) {
      if (!feats[i].is_number()) throw DataError("features must be numbers");
      r.features[static_cast<Eigen::Index>(i)] = feats[i].get<double>();
    }
    if (!r.features.allFinite()) throw DataError("features must be finite");
    if (auto it = j.find("text"); it != j.end() && !it->is_null()) r.text = it->get<std::string>();
    if (auto it = j.find("init_forecast"); it != j.end() && !it->is_null()) {
      r.init_forecast = probability_field(*it, "init_forecast");
    }
    if (auto it = j.find("outcome"); it != j.end() && !it->is_null()) {
      if (!it->is_number_integer() || (it->get<int>() != 0 && it->get<int>() != 1)) {
        throw DataError("outcome must be 0, 1 or null");
      }
      r.outcome = it->get<int>();
    }
    if (auto it = j.find("histogram"); it != j.end() && !it->is_null()) {
      if (!it->is_array() || static_cast<int>(it->size()) != bins) {
        throw DataError("histogram must be an array of " + std::to_string(bins) + " masses");
      }
      Eigen::VectorXd masses(bins);
      for (int b = 0; b < bins; ++b) {
        const auto& v = (*it)[static_cast<std::size_t>(b)];
        if (!v.is_number()) throw DataError("histogram masses must be numbers");
        masses[b] = v.get<double>();
        if (!std::isfinite(masses[b]) || masses[b] < 0.0) {
          throw DataError("histogram bin " + std::to_string(b) + " has negative or non-finite mass");
        }
      }
      if (!(std::abs(masses.sum() - 1.0) <= 1e-6)) {
        throw DataError("histogram sums to " + std::to_string(masses.sum()) +
                        ", expected 1 within 1e-6");
      }
      r.histogram = Histogram(std::move(masses));
    }
    if (auto it = j.find("resolve_date"); it != j.end() && !it->is_null()) {
      r.resolve_date = parse_date(it->get<std::string>());
    }
    if (auto it = j.find("source"); it != j.end() && !it->is_null()) {
      r.source = source_from_string(it->get<std::string>());
    }
    if (auto it = j.find("split"); it != j.end() && !it->is_null()) r.split = it->get<std::string>();
    if (auto it = j.find("regime"); it != j.end() && !it->is_null()) r.regime = it->get<std::string>();
    if (auto it = j.find("latent_p"); it != j.end() && !it->is_null()) {
      r.latent_p = probability_field(*it, "latent_p");
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError(e.what());
  } catch (const InvalidArgument& e) {
    throw DataError(e.what());
  }
  return r;
}

std::vector<ForecastRecord> load_records(const std::filesystem::path& path, int bins) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::vector<ForecastRecord> out;
  std::string errors;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(record_from_json(nlohmann::json::parse(line), bins));
    } catch (const nlohmann::json::exception& e) {
      errors += path.string() + ":" + std::to_string(lineno) + ": " + e.what() + "\n";
    } catch (const DataError& e) {
      errors += path.string() + ":" + std::to_string(lineno) + ": " + e.what() + "\n";
    }
  }
  if (!errors.empty()) throw DataError(errors);
  return out;
}

std::string records_jsonl(std::span<const ForecastRecord> records) {
  std::string out;
  for (const auto& r : records) {
    out += record_line(r);
    out += '\n';
  }
  return out;
}

void save_records(const std::filesystem::path& path, std::span<const ForecastRecord> records) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  for (const auto& r : records) out << record_line(r) << '\n';
  if (!out) throw DataError("failed writing " + path.string());
}

void PriceSeries::validate() const {
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (!(points[i].price >= 0.0 && points[i].price <= 1.0)) {
      throw DataError("price " + std::to_string(i) + " outside [0, 1]");
    }
    if (i > 0 && points[i].timestamp < points[i - 1].timestamp) {
      throw DataError("price timestamps must be nondecreasing");
    }
  }
}

std::int64_t open_date(const PriceSeries& series) {
  if (series.points.empty()) throw DataError("price series is empty");
  const std::int64_t first = series.points.front().timestamp;
  const std::int64_t last = series.points.back().timestamp;
  return std::min(last - 30 * kSecondsPerDay, first + 7 * kSecondsPerDay);
}

Histogram proxy_histogram(const PriceSeries& series, int bins) {
  series.validate();
  if (series.points.empty()) throw DataError("price series is empty");
  const std::int64_t lo = series.open.value_or(open_date(series));
  const std::int64_t hi = series.close.value_or(series.points.back().timestamp);
  Eigen::VectorXd counts = Eigen::VectorXd::Zero(bins);
  std::size_t used = 0;
  for (const auto& p : series.points) {
    if (p.timestamp < lo || p.timestamp > hi) continue;
    counts[Histogram::bin_index(p.price, bins)] += 1.0;
    ++used;
  }
  if (used == 0) throw DataError("no prices inside the market window");
  return Histogram(std::move(counts));
}

std::vector<NamedSeries> load_price_series(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::vector<NamedSeries> out;
  std::string errors;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      NamedSeries s;
      s.id = j.at("id").get<std::string>();
      for (const auto& pt : j.at("prices")) {
        if (!pt.is_array() || pt.size() != 2) throw DataError("prices must be [timestamp, price] pairs");
        s.series.points.push_back({pt[0].get<std::int64_t>(), pt[1].get<double>()});
      }
      if (auto it = j.find("open"); it != j.end() && !it->is_null()) s.series.open = it->get<std::int64_t>();
      if (auto it = j.find("close"); it != j.end() && !it->is_null()) s.series.close = it->get<std::int64_t>();
      s.series.validate();
      out.push_back(std::move(s));
    } catch (const nlohmann::json::exception& e) {
      errors += path.string() + ":" + std::to_string(lineno) + ": " + e.what() + "\n";
    } catch (const DataError& e) {
      errors += path.string() + ":" + std::to_string(lineno) + ": " + e.what() + "\n";
    }
  }
  if (!errors.empty()) throw DataError(errors);
  return out;
}

SplitName temporal_split_of(const Date& d) {
  using namespace std::chrono;
  const Date val_start{year{2025}, April, day{1}};
  const Date test_start{year{2025}, August, day{1}};
  const Date test_end{year{2026}, February, day{1}};
  if (d < val_start) return SplitName::kTrain;
  if (d < test_start) return SplitName::kVal;
  if (d < test_end) return SplitName::kTest;
  return SplitName::kOutOfRange;
}

TemporalSplit temporal_split(std::span<const ForecastRecord> records) {
  TemporalSplit out;
  for (const auto& r : records) {
    if (!r.resolve_date) {
      throw InvalidArgument("record '" + r.id + "' has no resolve date");
    }
    switch (temporal_split_of(*r.resolve_date)) {
      case SplitName::kTrain: out.train.push_back(r); break;
      case SplitName::kVal: out.val.push_back(r); break;
      case SplitName::kTest: out.test.push_back(r); break;
      case SplitName::kOutOfRange: out.out_of_range.push_back(r); break;
    }
  }
  return out;
}

std::vector<ForecastRecord> select_split(std::span<const ForecastRecord> records,
                                         const std::string& name) {
  if (name != "train" && name != "val" && name != "test") {
    throw InvalidArgument("unknown split '" + name + "'");
  }
  const SplitName wanted =
      name == "train" ? SplitName::kTrain : name == "val" ? SplitName::kVal : SplitName::kTest;
  std::vector<ForecastRecord> out;
  for (const auto& r : records) {
    if (r.split) {
      if (*r.split == name) out.push_back(r);
    } else if (r.resolve_date) {
      if (temporal_split_of(*r.resolve_date) == wanted) out.push_back(r);
    }
  }
  return out;
}

}  // namespace bbcal
