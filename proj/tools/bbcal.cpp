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

// bbcal: generate toy data, train the Beta-mixture calibrator, predict,
// evaluate against classical baselines, and report parameter recovery.
//
// Exit codes: 0 success, 1 usage error, 2 data validation failure,
// 3 numerical failure.

#include <CLI11.hpp>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "bbcal/baselines.hpp"
#include "bbcal/beta.hpp"
#include "bbcal/calibrator.hpp"
#include "bbcal/dataset.hpp"
#include "bbcal/error.hpp"
#include "bbcal/metrics.hpp"
#include "bbcal/objectives.hpp"
#include "bbcal/synthetic.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

constexpr const char* kVersion = "0.1.0";

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw UsageError("cannot write " + path.string());
  out << text;
  if (!out) throw UsageError("failed writing " + path.string());
}

void write_json(const fs::path& path, const ordered_json& j) { write_text(path, j.dump(2) + "\n"); }

void prepare_output(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw UsageError("cannot create output directory " + dir.string());
}

void require_file(const fs::path& path, const char* what) {
  if (!fs::is_regular_file(path)) {
    throw UsageError(std::string(what) + " not found: " + path.string());
  }
}

ordered_json run_metadata(const std::string& command, ordered_json flags) {
  ordered_json j;
  j["tool"] = "bbcal";
  j["version"] = kVersion;
  j["command"] = command;
  j["flags"] = std::move(flags);
  return j;
}

// ---------------------------------------------------------------- gen

struct GenOptions {
  std::string output;
  std::size_t n = 30000;
  std::size_t forecasters = 1000;
  std::uint64_t seed = 0;
  double retain = 1.0;
  std::string corrupt = "none";
  int hist_bins = bbcal::kDefaultHistogramBins;
  double train_fraction = 0.8;
};

void run_gen(const GenOptions& o) {
  bbcal::SyntheticConfig cfg;
  cfg.n = o.n;
  cfg.forecasters = o.forecasters;
  cfg.seed = o.seed;
  cfg.bins = o.hist_bins;
  cfg.train_fraction = o.train_fraction;
  cfg.retain_fraction = o.retain;
  try {
    cfg.corruption = bbcal::CorruptionSpec::parse(o.corrupt);
    cfg.validate();
  } catch (const bbcal::InvalidArgument& e) {
    throw UsageError(e.what());
  }
  const fs::path dir(o.output);
  prepare_output(dir);

  const auto synthetic = bbcal::generate(cfg);
  const auto records = bbcal::to_forecast_records(synthetic);
  bbcal::save_records(dir / "dataset.jsonl", records);

  ordered_json counts;
  std::size_t train = 0;
  for (const auto& r : bbcal::kRegimes) counts[bbcal::to_string(r.name)] = 0;
  for (const auto& r : synthetic) {
    counts[bbcal::to_string(r.regime)] = counts[bbcal::to_string(r.regime)].get<std::size_t>() + 1;
    if (r.train) ++train;
  }
  ordered_json truth;
  for (const auto& r : bbcal::kRegimes) {
    truth[bbcal::to_string(r.name)] = {{"alpha", r.truth.alpha}, {"beta", r.truth.beta}};
  }
  ordered_json flags = {{"output", o.output},       {"n", o.n},
                        {"forecasters", o.forecasters}, {"seed", o.seed},
                        {"retain", o.retain},       {"corrupt", cfg.corruption.to_string()},
                        {"hist_bins", o.hist_bins}, {"train_fraction", o.train_fraction}};
  ordered_json meta = run_metadata("gen", flags);
  meta["records"] = synthetic.size();
  meta["train_records"] = train;
  meta["test_records"] = synthetic.size() - train;
  meta["regime_counts"] = counts;
  meta["regime_truth"] = truth;
  meta["regime_rule_seed"] = bbcal::kRegimeRuleSeed;
  write_json(dir / "run.json", meta);
}

// ---------------------------------------------------------------- train

struct TrainOptions {
  std::string input;
  std::string output;
  std::uint64_t seed = 0;
  std::string loss = "both";
  std::optional<double> lambda_binary;
  std::optional<double> lambda_human;
  int epochs = 600;
  double lr = 1e-2;
  int k = 1;
  int hidden = 64;
  int batch = 256;
  std::string optimizer = "adam";
  int hist_bins = bbcal::kDefaultHistogramBins;
  std::string split = "train";
};

std::vector<bbcal::TrainingExample> training_examples(
    const std::vector<bbcal::ForecastRecord>& records) {
  std::vector<bbcal::TrainingExample> out;
  for (const auto& r : records) {
    if (!r.outcome) continue;
    out.push_back({{r.features, r.init_forecast}, *r.outcome, r.histogram});
  }
  return out;
}

void run_train(const TrainOptions& o) {
  require_file(o.input, "input dataset");
  bbcal::LossWeights weights;
  if (o.loss == "binary") {
    weights = {1.0, 0.0};
  } else if (o.loss == "human") {
    weights = {0.0, 1.0};
  } else if (o.loss == "both") {
    weights = {1.0, 1.0};
  } else {
    throw UsageError("--loss must be binary, human or both");
  }
  if (o.lambda_binary) weights.binary = *o.lambda_binary;
  if (o.lambda_human) weights.human = *o.lambda_human;
  bbcal::TrainConfig cfg;
  cfg.learning_rate = o.lr;
  cfg.epochs = std::max(o.epochs, 1);
  cfg.batch_size = o.batch;
  cfg.seed = o.seed;
  cfg.weights = weights;
  cfg.histogram_bins = o.hist_bins;
  if (o.optimizer == "adam") {
    cfg.optimizer = bbcal::Optimizer::kAdam;
  } else if (o.optimizer == "sgd") {
    cfg.optimizer = bbcal::Optimizer::kGradientDescent;
  } else {
    throw UsageError("--optimizer must be adam or sgd");
  }
  if (o.epochs < 0) throw UsageError("--epochs must be nonnegative");
  if (o.k < 1 || o.hidden < 1) throw UsageError("--k and --hidden must be positive");
  try {
    cfg.validate();
  } catch (const bbcal::InvalidArgument& e) {
    throw UsageError(e.what());
  }
  const fs::path dir(o.output);
  prepare_output(dir);

  const auto records = bbcal::select_split(bbcal::load_records(o.input, o.hist_bins), o.split);
  const auto examples = training_examples(records);
  if (examples.empty()) throw bbcal::DataError("no resolved records in split '" + o.split + "'");
  const int dim = static_cast<int>(examples.front().input.dimension());

  bbcal::CalibratorModel model = bbcal::CalibratorModel::initialize(dim, o.hidden, o.k, o.seed);
  std::vector<bbcal::LossBreakdown> trace;
  if (o.epochs > 0) {
    auto result = bbcal::train(std::move(model), examples, cfg);
    model = std::move(result.model);
    trace = std::move(result.trace);
  }
  bbcal::save_checkpoint(model, dir / "model.json");

  std::string csv = "epoch,binary_loss,human_loss,total\n";
  for (std::size_t e = 0; e < trace.size(); ++e) {
    csv += std::to_string(e + 1) + ',' + bbcal::format_double(trace[e].binary_loss) + ',' +
           bbcal::format_double(trace[e].human_loss) + ',' + bbcal::format_double(trace[e].total) +
           '\n';
  }
  write_text(dir / "loss_trace.csv", csv);

  ordered_json flags = {{"input", o.input},
                        {"output", o.output},
                        {"seed", o.seed},
                        {"loss", o.loss},
                        {"lambda_binary", weights.binary},
                        {"lambda_human", weights.human},
                        {"epochs", o.epochs},
                        {"lr", o.lr},
                        {"k", o.k},
                        {"hidden", o.hidden},
                        {"batch", o.batch},
                        {"optimizer", o.optimizer},
                        {"hist_bins", o.hist_bins},
                        {"split", o.split}};
  ordered_json meta = run_metadata("train", flags);
  meta["examples"] = examples.size();
  meta["input_dim"] = dim;
  write_json(dir / "run.json", meta);
}

// ---------------------------------------------------------------- predict

struct PredictOptions {
  std::string input;
  std::string model;
  std::string output;
  std::string split = "all";
  int hist_bins = bbcal::kDefaultHistogramBins;
};

std::vector<bbcal::ForecastRecord> records_for(const std::string& input, const std::string& split,
                                               int bins) {
  auto all = bbcal::load_records(input, bins);
  if (split == "all") return all;
  if (split != "train" && split != "val" && split != "test") {
    throw UsageError("--split must be train, val, test or all");
  }
  return bbcal::select_split(all, split);
}

void run_predict(const PredictOptions& o) {
  require_file(o.input, "input dataset");
  require_file(o.model, "checkpoint");
  const fs::path dir(o.output);
  prepare_output(dir);
  const auto model = bbcal::load_checkpoint(o.model);
  const auto records = records_for(o.input, o.split, o.hist_bins);

  std::string lines;
  for (const auto& r : records) {
    const auto pred = model.predict({r.features, r.init_forecast});
    const auto& m = pred.mixture;
    ordered_json j;
    j["id"] = r.id;
    j["p"] = pred.point;
    j["u"] = pred.uncertainty;
    j["alpha"] = std::vector<double>(m.alpha().data(), m.alpha().data() + m.size());
    j["beta"] = std::vector<double>(m.beta().data(), m.beta().data() + m.size());
    j["weights"] = std::vector<double>(m.weights().data(), m.weights().data() + m.size());
    lines += j.dump() + '\n';
  }
  write_text(dir / "predictions.jsonl", lines);
  ordered_json flags = {{"input", o.input}, {"model", o.model}, {"output", o.output},
                        {"split", o.split}, {"hist_bins", o.hist_bins}};
  ordered_json meta = run_metadata("predict", flags);
  meta["records"] = records.size();
  write_json(dir / "run.json", meta);
}

// ---------------------------------------------------------------- eval

struct EvalOptions {
  std::string input;
  std::string model;
  std::string output;
  std::string split = "test";
  std::string fit_split = "val";
  int bins = bbcal::kDefaultCalibrationBins;
  std::size_t window = bbcal::kDefaultCurveWindow;
  std::string baseline = "none";
  std::string baseline_map;
  int hist_bins = bbcal::kDefaultHistogramBins;
};

struct Labelled {
  std::vector<double> forecasts;
  std::vector<int> outcomes;
};

Labelled init_forecasts(const std::vector<bbcal::ForecastRecord>& records, const std::string& split) {
  Labelled out;
  for (const auto& r : records) {
    if (!r.outcome) continue;
    if (!r.init_forecast) {
      throw bbcal::DataError("record '" + r.id + "' in split '" + split +
                             "' has no init_forecast for the baseline");
    }
    out.forecasts.push_back(*r.init_forecast);
    out.outcomes.push_back(*r.outcome);
  }
  return out;
}

void run_eval(const EvalOptions& o) {
  require_file(o.input, "input dataset");
  const bool use_baseline = o.baseline != "none" || !o.baseline_map.empty();
  if (!use_baseline) {
    if (o.model.empty()) throw UsageError("--model is required unless --baseline is given");
    require_file(o.model, "checkpoint");
  }
  if (o.baseline != "none" && o.baseline != "identity" && o.baseline != "platt" &&
      o.baseline != "isotonic" && o.baseline != "binning") {
    throw UsageError("--baseline must be none, identity, platt, isotonic or binning");
  }
  if (!o.baseline_map.empty()) require_file(o.baseline_map, "baseline map");
  if (o.bins < 1) throw UsageError("--bins must be positive");
  if (o.window < 1) throw UsageError("--window must be positive");
  const fs::path dir(o.output);
  prepare_output(dir);

  const auto all = bbcal::load_records(o.input, o.hist_bins);
  const auto records = o.split == "all" ? all : bbcal::select_split(all, o.split);

  std::vector<double> preds;
  std::vector<double> uncertainty;
  std::vector<int> outcomes;
  std::optional<double> kl;
  ordered_json extra;

  if (use_baseline) {
    const Labelled eval = init_forecasts(records, o.split);
    std::optional<bbcal::CalibrationMap> map;
    if (!o.baseline_map.empty()) {
      std::ifstream in(o.baseline_map, std::ios::binary);
      nlohmann::json j;
      try {
        in >> j;
      } catch (const nlohmann::json::exception& e) {
        throw bbcal::DataError(std::string("baseline map is not valid JSON: ") + e.what());
      }
      map = bbcal::calibration_map_from_json(j);
    } else if (o.baseline != "identity") {
      const Labelled fit = init_forecasts(bbcal::select_split(all, o.fit_split), o.fit_split);
      if (fit.forecasts.empty()) {
        throw bbcal::DataError("no resolved records in fit split '" + o.fit_split + "'");
      }
      if (o.baseline == "platt") {
        map = bbcal::fit_platt(fit.forecasts, fit.outcomes);
      } else if (o.baseline == "isotonic") {
        map = bbcal::fit_isotonic(fit.forecasts, fit.outcomes);
      } else {
        map = bbcal::fit_binning(fit.forecasts, fit.outcomes, o.bins);
      }
      extra["fit_records"] = fit.forecasts.size();
    }
    preds = map ? bbcal::apply(*map, eval.forecasts) : eval.forecasts;
    outcomes = eval.outcomes;
    if (map) write_json(dir / "baseline.json", ordered_json::parse(bbcal::to_json(*map).dump()));
  } else {
    const auto model = bbcal::load_checkpoint(o.model);
    std::vector<bbcal::BetaMixture<double>> mixtures;
    std::vector<bbcal::Histogram> histograms;
    bool all_hist = true;
    for (const auto& r : records) {
      if (!r.outcome) continue;
      auto pred = model.predict({r.features, r.init_forecast});
      preds.push_back(pred.point);
      uncertainty.push_back(pred.uncertainty);
      outcomes.push_back(*r.outcome);
      if (r.histogram) {
        histograms.push_back(*r.histogram);
      } else {
        all_hist = false;
      }
      mixtures.push_back(std::move(pred.mixture));
    }
    if (all_hist && !mixtures.empty()) kl = bbcal::eval_kl(mixtures, histograms, o.hist_bins);
  }

  if (preds.empty()) throw bbcal::DataError("no resolved records in split '" + o.split + "'");
  if (!uncertainty.empty() && o.window > preds.size()) {
    throw UsageError("--window " + std::to_string(o.window) + " exceeds the " +
                     std::to_string(preds.size()) + " evaluated records");
  }
  bbcal::EvalReport report = bbcal::evaluate(preds, outcomes, o.bins);
  if (std::isnan(report.auc)) {
    throw bbcal::DataError("AUC is undefined: the evaluated split has a single outcome class");
  }
  report.kl_mean = kl;

  write_json(dir / "report.json", ordered_json::parse(bbcal::to_json(report).dump()));
  write_text(dir / "reliability.csv", bbcal::reliability_csv(report.reliability_bins));
  if (!uncertainty.empty()) {
    const auto curve = bbcal::uncertainty_curve(uncertainty, preds, outcomes, o.window);
    write_text(dir / "uncertainty.csv", bbcal::curve_csv(curve));
  }
  ordered_json flags = {{"input", o.input},         {"model", o.model},
                        {"output", o.output},       {"split", o.split},
                        {"fit_split", o.fit_split}, {"bins", o.bins},
                        {"window", o.window},       {"baseline", o.baseline},
                        {"baseline_map", o.baseline_map}, {"hist_bins", o.hist_bins}};
  ordered_json meta = run_metadata("eval", flags);
  for (auto& [k, v] : extra.items()) meta[k] = v;
  write_json(dir / "run.json", meta);
}

// ---------------------------------------------------------------- recover

struct RecoverOptions {
  std::string input;
  std::string model;
  std::string output;
  std::string split = "test";
  int hist_bins = bbcal::kDefaultHistogramBins;
  bool truth = false;
};

void run_recover(const RecoverOptions& o) {
  require_file(o.input, "input dataset");
  if (o.truth == !o.model.empty()) throw UsageError("recover needs exactly one of --model or --truth");
  if (!o.truth) require_file(o.model, "checkpoint");
  const fs::path dir(o.output);
  prepare_output(dir);
  std::optional<bbcal::CalibratorModel> model;
  if (!o.truth) model = bbcal::load_checkpoint(o.model);
  const auto records = records_for(o.input, o.split, o.hist_bins);

  std::vector<bbcal::BetaMixture<double>> mixtures;
  std::vector<bbcal::RegimeName> regimes;
  for (const auto& r : records) {
    if (!r.regime) {
      throw bbcal::DataError("record '" + r.id + "' has no regime label; recover needs synthetic data");
    }
    regimes.push_back(bbcal::regime_from_string(*r.regime));
    mixtures.push_back(model ? model->forward({r.features, r.init_forecast})
                             : bbcal::BetaMixture<double>::single(bbcal::regime(regimes.back()).truth));
  }
  if (mixtures.empty()) throw bbcal::DataError("no records in split '" + o.split + "'");
  const auto table = bbcal::recover_parameters(mixtures, regimes);

  ordered_json rows = ordered_json::array();
  std::string csv = "regime,count,truth_alpha,truth_beta,truth_mean,alpha,beta,mean\n";
  for (const auto& row : table) {
    const auto& truth = bbcal::regime(row.regime).truth;
    rows.push_back({{"regime", bbcal::to_string(row.regime)},
                    {"count", row.count},
                    {"truth_alpha", truth.alpha},
                    {"truth_beta", truth.beta},
                    {"truth_mean", bbcal::mean(truth)},
                    {"alpha", row.alpha},
                    {"beta", row.beta},
                    {"mean", row.mean}});
    csv += bbcal::to_string(row.regime) + ',' + std::to_string(row.count) + ',' +
           bbcal::format_double(truth.alpha) + ',' + bbcal::format_double(truth.beta) + ',' +
           bbcal::format_double(bbcal::mean(truth)) + ',' + bbcal::format_double(row.alpha) + ',' +
           bbcal::format_double(row.beta) + ',' + bbcal::format_double(row.mean) + '\n';
  }
  write_json(dir / "recovery.json", {{"regimes", rows}});
  write_text(dir / "recovery.csv", csv);
  ordered_json flags = {{"input", o.input}, {"model", o.model}, {"truth", o.truth},
                        {"output", o.output}, {"split", o.split}, {"hist_bins", o.hist_bins}};
  write_json(dir / "run.json", run_metadata("recover", flags));
}

// ---------------------------------------------------------------- proxy

struct ProxyOptions {
  std::string input;
  std::string output;
  int hist_bins = bbcal::kDefaultHistogramBins;
};

void run_proxy(const ProxyOptions& o) {
  require_file(o.input, "price series file");
  if (o.hist_bins < 2) throw UsageError("--hist-bins must be at least 2");
  const fs::path dir(o.output);
  prepare_output(dir);
  const auto series = bbcal::load_price_series(o.input);
  std::string lines;
  for (const auto& s : series) {
    const auto h = bbcal::proxy_histogram(s.series, o.hist_bins);
    ordered_json j;
    j["id"] = s.id;
    j["open"] = s.series.open.value_or(bbcal::open_date(s.series));
    j["histogram"] = std::vector<double>(h.masses().data(), h.masses().data() + h.bins());
    lines += j.dump() + '\n';
  }
  write_text(dir / "histograms.jsonl", lines);
  ordered_json flags = {{"input", o.input}, {"output", o.output}, {"hist_bins", o.hist_bins}};
  write_json(dir / "run.json", run_metadata("proxy", flags));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Beta-mixture calibration toolkit for binary forecasts"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  GenOptions gen;
  auto* gen_cmd = app.add_subcommand("gen", "Generate the synthetic toy dataset");
  gen_cmd->add_option("--output", gen.output, "Output directory")->required();
  gen_cmd->add_option("--n", gen.n, "Number of questions")->capture_default_str();
  gen_cmd->add_option("--forecasters", gen.forecasters, "Simulated forecasts per question")
      ->capture_default_str();
  gen_cmd->add_option("--seed", gen.seed, "Random seed")->capture_default_str();
  gen_cmd->add_option("--retain", gen.retain, "Fraction of forecasts kept on training questions")
      ->capture_default_str();
  gen_cmd->add_option("--corrupt", gen.corrupt,
                      "Training forecast corruption: none, noise:R, gamma:G, delta:D")
      ->capture_default_str();
  gen_cmd->add_option("--hist-bins", gen.hist_bins, "Histogram bins")->capture_default_str();
  gen_cmd->add_option("--train-fraction", gen.train_fraction, "Share of questions in train")
      ->capture_default_str();

  TrainOptions tr;
  auto* train_cmd = app.add_subcommand("train", "Train the calibrator");
  train_cmd->add_option("--input", tr.input, "Dataset JSONL")->required();
  train_cmd->add_option("--output", tr.output, "Output directory")->required();
  train_cmd->add_option("--seed", tr.seed, "Random seed")->capture_default_str();
  train_cmd->add_option("--loss", tr.loss, "binary, human or both")->capture_default_str();
  train_cmd->add_option("--lambda-binary", tr.lambda_binary, "Override the binary loss weight");
  train_cmd->add_option("--lambda-human", tr.lambda_human, "Override the human loss weight");
  train_cmd->add_option("--epochs", tr.epochs, "Training epochs (0 saves the initialization)")
      ->capture_default_str();
  train_cmd->add_option("--lr", tr.lr, "Learning rate")->capture_default_str();
  train_cmd->add_option("--k", tr.k, "Mixture components")->capture_default_str();
  train_cmd->add_option("--hidden", tr.hidden, "Hidden layer width")->capture_default_str();
  train_cmd->add_option("--batch", tr.batch, "Minibatch size")->capture_default_str();
  train_cmd->add_option("--optimizer", tr.optimizer, "adam or sgd")->capture_default_str();
  train_cmd->add_option("--hist-bins", tr.hist_bins, "Histogram bins")->capture_default_str();
  train_cmd->add_option("--split", tr.split, "Split to train on")->capture_default_str();

  PredictOptions pr;
  auto* predict_cmd = app.add_subcommand("predict", "Predict mixtures, means and variances");
  predict_cmd->add_option("--input", pr.input, "Dataset JSONL")->required();
  predict_cmd->add_option("--model", pr.model, "Checkpoint JSON")->required();
  predict_cmd->add_option("--output", pr.output, "Output directory")->required();
  predict_cmd->add_option("--split", pr.split, "train, val, test or all")->capture_default_str();
  predict_cmd->add_option("--hist-bins", pr.hist_bins, "Histogram bins")->capture_default_str();

  EvalOptions ev;
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint or a baseline");
  eval_cmd->add_option("--input", ev.input, "Dataset JSONL")->required();
  eval_cmd->add_option("--model", ev.model, "Checkpoint JSON");
  eval_cmd->add_option("--output", ev.output, "Output directory")->required();
  eval_cmd->add_option("--split", ev.split, "Split to evaluate (train, val, test, all)")
      ->capture_default_str();
  eval_cmd->add_option("--fit-split", ev.fit_split, "Split the baseline is fitted on")
      ->capture_default_str();
  eval_cmd->add_option("--bins", ev.bins, "Calibration bins for ECE and reliability")
      ->capture_default_str();
  eval_cmd->add_option("--window", ev.window, "Uncertainty curve window")->capture_default_str();
  eval_cmd->add_option("--baseline", ev.baseline, "none, identity, platt, isotonic or binning")
      ->capture_default_str();
  eval_cmd->add_option("--baseline-map", ev.baseline_map, "Previously fitted baseline JSON");
  eval_cmd->add_option("--hist-bins", ev.hist_bins, "Histogram bins")->capture_default_str();

  RecoverOptions rc;
  auto* recover_cmd = app.add_subcommand("recover", "Per-regime parameter recovery on toy data");
  recover_cmd->add_option("--input", rc.input, "Synthetic dataset JSONL")->required();
  recover_cmd->add_option("--model", rc.model, "Checkpoint JSON");
  recover_cmd->add_flag("--truth", rc.truth, "Use each record's ground-truth Beta as the prediction");
  recover_cmd->add_option("--output", rc.output, "Output directory")->required();
  recover_cmd->add_option("--split", rc.split, "train, val, test or all")->capture_default_str();
  recover_cmd->add_option("--hist-bins", rc.hist_bins, "Histogram bins")->capture_default_str();

  ProxyOptions px;
  auto* proxy_cmd = app.add_subcommand("proxy", "Build proxy histograms from market prices");
  proxy_cmd->add_option("--input", px.input, "Price series JSONL")->required();
  proxy_cmd->add_option("--output", px.output, "Output directory")->required();
  proxy_cmd->add_option("--hist-bins", px.hist_bins, "Histogram bins")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (*gen_cmd) run_gen(gen);
    if (*train_cmd) run_train(tr);
    if (*predict_cmd) run_predict(pr);
    if (*eval_cmd) run_eval(ev);
    if (*recover_cmd) run_recover(rc);
    if (*proxy_cmd) run_proxy(px);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const bbcal::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return 3;
  } catch (const bbcal::DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return 2;
  } catch (const bbcal::InvalidArgument& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
