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


// Acceptance checks, one PASS/FAIL line per criterion. Exit status is the
// number of failed criteria.

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <json.hpp>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "bbcal/baselines.hpp"
#include "bbcal/beta.hpp"
#include "bbcal/calibrator.hpp"
#include "bbcal/dataset.hpp"
#include "bbcal/metrics.hpp"
#include "bbcal/objectives.hpp"
#include "bbcal/random.hpp"
#include "bbcal/special.hpp"
#include "bbcal/synthetic.hpp"
#include "oracles.hpp"

using namespace bbcal;
namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kToySeed = 7;
constexpr double kTrainLimitSeconds = 300.0;
constexpr const char* kRegimeNames[] = {"ConfidentYes", "Uncertain", "ConfidentNo"};

int failures = 0;

void report(int id, const std::string& name, bool ok, const std::string& detail) {
  std::printf("%s [%d] %s: %s\n", ok ? "PASS" : "FAIL", id, name.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

std::string fmt(const char* f, ...) __attribute__((format(printf, 1, 2)));
std::string fmt(const char* f, ...) {
  char buf[1024];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof(buf), f, ap);
  va_end(ap);
  return buf;
}

const fs::path& work() {
  static const fs::path dir = [] {
    auto d = fs::temp_directory_path() / "bbcal_acceptance";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

std::string path(const std::string& name) { return (work() / name).string(); }

int cli(const std::string& args) {
  const std::string cmd = std::string(BBCAL_CLI_PATH) + " " + args + " >>" + path("cli.log") + " 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

double timed_cli(const std::string& args, int& status) {
  const auto t0 = std::chrono::steady_clock::now();
  status = cli(args);
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

nlohmann::json json_file(const fs::path& p) { return nlohmann::json::parse(slurp(p)); }

// ------------------------------------------------------------ toy pipeline

struct ToyRun {
  bool ok = false;
  double seconds = 0.0;
  nlohmann::json report;
  nlohmann::json recovery = nlohmann::json::object();  // regime name -> row
};

ToyRun toy_run(const std::string& data, const std::string& tag, const std::string& loss,
               const std::string& extra = "") {
  ToyRun r;
  const std::string model = path("m_" + tag);
  int status = 0;
  r.seconds = timed_cli("train --seed 7 --loss " + loss + " " + extra + " --input " + data +
                            " --output " + model,
                        status);
  if (status != 0) return r;
  if (cli("eval --input " + data + " --model " + model + "/model.json --output " + path("e_" + tag)) != 0)
    return r;
  if (cli("recover --input " + data + " --model " + model + "/model.json --output " + path("r_" + tag)) != 0)
    return r;
  r.report = json_file(path("e_" + tag) + "/report.json");
  const auto recovery = json_file(path("r_" + tag) + "/recovery.json");
  for (const auto& row : recovery.at("regimes")) {
    r.recovery[row["regime"].get<std::string>()] = row;
  }
  std::printf("  %-9s %6.1fs brier %.4f acc %.4f auc %.4f ece %.4f kl %.4f\n", tag.c_str(),
              r.seconds, r.report["brier"].get<double>(), r.report["accuracy"].get<double>(),
              r.report["auc"].get<double>(), r.report["ece"].get<double>(),
              r.report["kl_mean"].get<double>());
  for (const char* name : kRegimeNames) {
    if (!r.recovery.contains(name)) return r;
    const auto& row = r.recovery.at(name);
    std::printf("            %-13s alpha %7.2f beta %7.2f mean %.3f (truth %g, %g)\n", name,
                row["alpha"].get<double>(), row["beta"].get<double>(), row["mean"].get<double>(),
                row["truth_alpha"].get<double>(), row["truth_beta"].get<double>());
  }
  std::fflush(stdout);
  r.ok = true;
  return r;
}

double concentration_ratio(const nlohmann::json& row) {
  const double got = row["alpha"].get<double>() + row["beta"].get<double>();
  const double truth = row["truth_alpha"].get<double>() + row["truth_beta"].get<double>();
  return std::max(got / truth, truth / got);
}

// ------------------------------------------------------------ criteria

void criterion_marginal_identity() {
  Rng rng(301);
  double worst = 0.0;
  for (int i = 0; i < 200; ++i) {
    const double a = 1.1 + 58.9 * rng.uniform();
    const double b = 1.1 + 58.9 * rng.uniform();
    for (int y : {0, 1}) {
      const double q = oracle::integrate01([&](double x) {
        if (x <= 0.0 || x >= 1.0) return 0.0;
        return (y == 1 ? x : 1.0 - x) * oracle::beta_density(a, b, x);
      });
      const double closed = y == 1 ? a / (a + b) : b / (a + b);
      worst = std::max({worst, std::abs(q - marginal_likelihood(BetaParams<double>{a, b}, y)),
                        std::abs(q - closed)});
    }
  }
  report(3, "marginal-likelihood identity", worst < 1e-6,
         fmt("200 pairs x 2 outcomes, max |quadrature - closed form| = %.2e (tol 1e-6)", worst));
}

void criterion_gradients() {
  Rng rng(302);
  const double step = 1e-5;
  double worst = 0.0;
  int configs = 0;
  for (int t = 0; t < 100; ++t) {
    const int k = t % 2 == 0 ? 1 : 5;
    const int dim = 2 + static_cast<int>(rng.index(5));
    auto model = CalibratorModel::initialize(dim, 2 + static_cast<int>(rng.index(6)), k, rng.next_u64());
    for (auto& v : model.parameters()) v = 0.8 * rng.normal();
    std::vector<TrainingExample> data;
    for (int i = 0; i < 3; ++i) {
      TrainingExample ex;
      ex.input.features.resize(dim);
      for (auto& v : ex.input.features) v = rng.normal();
      ex.outcome = rng.bernoulli(0.5);
      ex.histogram = Histogram::from_values(
          sample(BetaParams<double>{1 + 15 * rng.uniform(), 1 + 15 * rng.uniform()}, 400, rng.next_u64()),
          100);
      data.push_back(std::move(ex));
    }
    const std::vector<std::size_t> idx = {0, 1, 2};
    const LossWeights w{0.2 + rng.uniform(), 0.2 + rng.uniform()};
    const Eigen::VectorXd g = model.batch_loss(data, idx, w).gradient;
    for (Eigen::Index i = 0; i < model.parameters().size(); ++i) {
      CalibratorModel plus = model, minus = model;
      plus.parameters()[i] += step;
      minus.parameters()[i] -= step;
      const double fd =
          (plus.batch_loss(data, idx, w).mean.total - minus.batch_loss(data, idx, w).mean.total) / (2 * step);
      worst = std::max(worst, oracle::relative_error(g[i], fd));
    }
    ++configs;
  }
  report(4, "gradient correctness", worst < 1e-4,
         fmt("%d model configs (K in {1,5}, both loss terms), max relative error %.2e (tol 1e-4)",
             configs, worst));
}

void criterion_moments() {
  Rng rng(303);
  double worst_mean = 0.0, worst_var = 0.0;
  for (int t = 0; t < 20; ++t) {
    const int k = 1 + static_cast<int>(rng.index(5));
    Eigen::ArrayXd a(k), b(k), w(k);
    for (int i = 0; i < k; ++i) {
      a[i] = 0.5 + 59.5 * rng.uniform();
      b[i] = 0.5 + 59.5 * rng.uniform();
      w[i] = 0.05 + rng.uniform();
    }
    w /= w.sum();
    const BetaMixture<double> m(a, b, w);
    const auto xs = sample(m, 1000000, rng);
    const double n = static_cast<double>(xs.size());
    const double mu = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
    double c2 = 0.0, c4 = 0.0;
    for (double x : xs) {
      const double d = x - mu;
      c2 += d * d;
      c4 += d * d * d * d;
    }
    const double var = c2 / (n - 1);
    c4 /= n;
    worst_mean = std::max(worst_mean, std::abs(mu - mean(m)) / std::sqrt(var / n));
    worst_var = std::max(worst_var, std::abs(var - variance(m)) / std::sqrt((c4 - var * var) / n));
  }
  report(5, "moment consistency", worst_mean < 3.0 && worst_var < 3.0,
         fmt("20 mixtures x 1e6 samples, max |z| mean %.2f, variance %.2f (tol 3 SE)", worst_mean,
             worst_var));
}

void criterion_metric_oracles() {
  Rng rng(304);
  bool auc_ok = true;
  for (int t = 0; t < 50; ++t) {
    const std::size_t n = 2 + rng.index(199);
    std::vector<double> p(n);
    std::vector<int> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      p[i] = static_cast<double>(rng.index(25)) / 24;
      y[i] = rng.bernoulli(0.3 + 0.4 * p[i]);
    }
    y[0] = 0;
    y[1] = 1;
    auc_ok &= auc(p, y) == oracle::pairwise_auc(p, y);
  }
  const std::vector<double> ep = {0.05, 0.05, 0.05, 0.05, 0.95, 0.95, 0.95, 0.95};
  const std::vector<int> ey = {1, 0, 0, 0, 1, 1, 1, 0};
  const double e = ece(ep, ey);
  const double hand = 0.5 * std::abs(0.25 - 0.05) + 0.5 * std::abs(0.75 - 0.95);
  const bool ece_ok = e == hand && std::abs(e - 0.2) < 1e-15;
  int iso_instances = 0;
  bool iso_ok = true;
  for (int t = 0; t < 3000; ++t) {
    const std::size_t n = 1 + rng.index(8);
    std::vector<double> p(n);
    std::vector<int> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      p[i] = rng.bernoulli(0.5) ? static_cast<double>(rng.index(5)) / 4 : rng.uniform();
      y[i] = rng.bernoulli(0.5);
    }
    const IsotonicMap m = fit_isotonic(p, y);
    const auto ref = oracle::brute_isotonic(p, y);
    for (std::size_t i = 0; i < n; ++i) iso_ok &= std::abs(apply(m, p[i]) - ref[i]) < 1e-12;
    ++iso_instances;
  }
  report(6, "metric oracles", auc_ok && ece_ok && iso_ok,
         fmt("AUC exact on 50 instances: %s; ECE example = %.17g: %s; isotonic vs brute force on %d "
             "instances (n <= 8): %s",
             auc_ok ? "yes" : "no", e, ece_ok ? "yes" : "no", iso_instances, iso_ok ? "yes" : "no"));
}

void criterion_platt() {
  Rng rng(305);
  std::vector<double> p(100000);
  std::vector<int> y(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    p[i] = rng.uniform();
    y[i] = rng.bernoulli(sigmoid(2.0 * p[i] - 1.0));
  }
  const PlattParams fit = fit_platt(p, y);
  const auto calibrated = bbcal::apply(CalibrationMap{fit}, p);
  const double d_auc = std::abs(auc(calibrated, y) - auc(p, y));
  const bool ok = std::abs(fit.slope - 2.0) <= 0.1 && std::abs(fit.intercept + 1.0) <= 0.1 &&
                  fit.slope > 0 && d_auc <= 1e-12;
  report(7, "Platt recovery", ok,
         fmt("n=1e5, fitted (A, B) = (%.4f, %.4f) vs (2, -1) tol 0.1; |AUC change| = %.1e (tol 1e-12)",
             fit.slope, fit.intercept, d_auc));
}

bool bitwise_equal(const std::vector<double>& a, const std::vector<double>& b) {
  return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

bool same_outputs(const std::string& command, const fs::path& out_dir, std::string& detail) {
  if (cli(command) != 0) {
    detail = "command failed: " + command;
    return false;
  }
  std::vector<std::pair<fs::path, std::string>> first;
  for (const auto& e : fs::directory_iterator(out_dir)) first.emplace_back(e.path(), slurp(e.path()));
  fs::remove_all(out_dir);
  if (cli(command) != 0) {
    detail = "command failed on rerun: " + command;
    return false;
  }
  std::size_t count = 0;
  for (const auto& e : fs::directory_iterator(out_dir)) {
    (void)e;
    ++count;
  }
  if (count != first.size()) {
    detail = "different file sets from: " + command;
    return false;
  }
  for (const auto& [p, bytes] : first) {
    if (slurp(p) != bytes) {
      detail = "bytes differ in " + p.filename().string() + " from: " + command;
      return false;
    }
  }
  return true;
}

void criterion_determinism() {
  std::ofstream(work() / "prices.jsonl")
      << R"({"id":"m1","prices":[[1735689600,0.42],[1735776000,0.47],[1740000000,0.61]]})" << "\n";
  {
    Rng rng(306);
    std::vector<ForecastRecord> recs;
    for (int i = 0; i < 300; ++i) {
      ForecastRecord r;
      r.id = "f" + std::to_string(i);
      r.features = Eigen::Vector3d(rng.normal(), rng.normal(), rng.normal());
      r.init_forecast = rng.uniform();
      r.outcome = rng.bernoulli(*r.init_forecast);
      r.resolve_date = parse_date(i % 2 ? "2025-05-01" : "2025-10-01");
      recs.push_back(r);
    }
    save_records(work() / "forecasts.jsonl", recs);
  }
  const std::string data = path("det_gen") + "/dataset.jsonl";
  const std::string model = path("det_train") + "/model.json";
  const std::vector<std::pair<std::string, std::string>> commands = {
      {"gen --n 500 --forecasters 300 --seed 5 --retain 0.5 --corrupt noise:0.2 --output " + path("det_gen"),
       path("det_gen")},
      {"train --epochs 4 --k 3 --seed 5 --input " + data + " --output " + path("det_train"), path("det_train")},
      {"train --epochs 2 --optimizer sgd --lr 0.05 --seed 6 --loss binary --input " + data + " --output " +
           path("det_train_sgd"),
       path("det_train_sgd")},
      {"predict --input " + data + " --model " + model + " --output " + path("det_pred"), path("det_pred")},
      {"eval --window 40 --input " + data + " --model " + model + " --output " + path("det_eval"),
       path("det_eval")},
      {"recover --input " + data + " --model " + model + " --output " + path("det_rec"), path("det_rec")},
      {"eval --baseline isotonic --input " + path("forecasts.jsonl") + " --output " + path("det_iso"),
       path("det_iso")},
      {"eval --baseline platt --input " + path("forecasts.jsonl") + " --output " + path("det_platt"),
       path("det_platt")},
      {"proxy --input " + path("prices.jsonl") + " --output " + path("det_proxy"), path("det_proxy")},
  };
  bool ok = true;
  std::string detail;
  for (const auto& [cmd, dir] : commands) {
    if (!same_outputs(cmd, dir, detail)) {
      ok = false;
      break;
    }
  }
  report(10, "determinism", ok,
         ok ? fmt("%zu CLI invocations (gen, train x2, predict, eval, recover, baselines x2, proxy) "
                  "rerun with byte-identical outputs",
                  commands.size())
            : detail);
}

void toy_criteria() {
  const std::string data = path("toy") + "/dataset.jsonl";
  const std::string data10 = path("toy10") + "/dataset.jsonl";
  const bool gen_ok = cli("gen --seed 7 --output " + path("toy")) == 0 &&
                      cli("gen --seed 7 --retain 0.1 --output " + path("toy10")) == 0;
  if (!gen_ok) {
    for (int id : {1, 2, 8, 9}) report(id, "toy experiment", false, "dataset generation failed");
    return;
  }
  const auto meta = json_file(path("toy") + "/run.json");
  std::printf("  toy data: %d records, %d train / %d test\n", meta["records"].get<int>(),
              meta["train_records"].get<int>(), meta["test_records"].get<int>());

  double kl_init = std::nan("");
  if (cli("train --epochs 0 --seed 7 --input " + data + " --output " + path("m_init")) == 0 &&
      cli("eval --input " + data + " --model " + path("m_init") + "/model.json --output " + path("e_init")) == 0) {
    kl_init = json_file(path("e_init") + "/report.json")["kl_mean"].get<double>();
  }
  std::printf("  init      kl %.4f\n", kl_init);
  std::fflush(stdout);

  const ToyRun binary = toy_run(data, "binary", "binary");
  const ToyRun human = toy_run(data, "human", "human");
  const ToyRun both = toy_run(data, "both", "both");
  const ToyRun both10 = toy_run(data10, "both10", "both");

  // 1. Metric reproduction.
  if (binary.ok && human.ok && both.ok) {
    const double bb = binary.report["brier"], hb = both.report["brier"];
    const double he = both.report["ece"], ue = human.report["ece"];
    const double ba = binary.report["auc"], ha = both.report["auc"];
    const double slowest = std::max({binary.seconds, human.seconds, both.seconds});
    const bool ok = bb >= 0.16 && bb <= 0.23 && hb <= bb && he <= 0.03 && ue <= 0.03 && ha >= ba &&
                    meta["records"] == 30000 && meta["train_records"] == 24000 &&
                    slowest < kTrainLimitSeconds;
    report(1, "toy metric reproduction", ok,
           fmt("binary Brier %.4f in [0.16,0.23]; both Brier %.4f <= %.4f; ECE both %.4f, human %.4f "
               "<= 0.03; AUC both %.4f >= binary %.4f; slowest training %.0fs < 300s",
               bb, hb, bb, he, ue, ha, ba, slowest));
  } else {
    report(1, "toy metric reproduction", false, "a training or evaluation run failed");
  }

  // 2. Parameter recovery.
  if (binary.ok && both.ok) {
    bool means_ok = true, conc_ok = true;
    int binary_off = 0;
    std::string detail = "both:";
    for (const char* name : kRegimeNames) {
      const auto& row = both.recovery.at(name);
      const double m = row["mean"], tm = row["truth_mean"];
      means_ok &= std::abs(m - tm) <= 0.05;
      const double ratio = concentration_ratio(row);
      conc_ok &= ratio <= 2.0;
      const double bratio = concentration_ratio(binary.recovery.at(name));
      binary_off += bratio >= 3.0;
      detail += fmt(" %s mean %.3f conc x%.2f;", name, m, ratio);
    }
    detail += " binary conc off:";
    for (const char* name : kRegimeNames) {
      detail += fmt(" x%.2f", concentration_ratio(binary.recovery.at(name)));
    }
    detail += fmt(" (%d regimes >= 3x, need 2)", binary_off);
    report(2, "parameter recovery", means_ok && conc_ok && binary_off >= 2, detail);
  } else {
    report(2, "parameter recovery", false, "a training run failed");
  }

  // 8. Human loss effectiveness.
  if (binary.ok && human.ok && both.ok) {
    const double hk = human.report["kl_mean"], bk = both.report["kl_mean"], nk = binary.report["kl_mean"];
    report(8, "human-loss effectiveness", hk <= 0.5 * kl_init && bk < nk,
           fmt("human-only KL %.4f vs init %.4f (%.0f%% reduction, need >= 50%%); both KL %.4f < "
               "binary KL %.4f",
               hk, kl_init, 100.0 * (1.0 - hk / kl_init), bk, nk));
  } else {
    report(8, "human-loss effectiveness", false, "a training run failed");
  }

  // 9. Robustness transforms.
  Rng rng(309);
  std::vector<double> q(5000);
  for (auto& v : q) v = rng.bernoulli(0.1) ? std::round(rng.uniform() * 4) / 4 : rng.uniform();
  const bool identity = bitwise_equal(corrupt(q, CorruptionSpec::parse("gamma:1"), 11), q);
  // Binary-only training ignores histograms, so the full-data binary model
  // is the baseline if the retained dataset keeps every feature and label.
  bool same_labels = true;
  {
    const auto a = load_records(data), b = load_records(data10);
    same_labels = a.size() == b.size();
    for (std::size_t i = 0; same_labels && i < a.size(); ++i) {
      same_labels = a[i].features == b[i].features && a[i].outcome == b[i].outcome && a[i].split == b[i].split;
    }
  }
  if (binary.ok && both10.ok && same_labels) {
    const double ra = both10.report["auc"], ba = binary.report["auc"];
    report(9, "robustness transforms", identity && ra >= ba - 0.01,
           fmt("gamma=1 bitwise identity: %s; 10%% retention both AUC %.4f >= binary %.4f - 0.01; "
               "retained Uncertain mean %.3f",
               identity ? "yes" : "no", ra, ba, both10.recovery.at("Uncertain").at("mean").get<double>()));
  } else {
    report(9, "robustness transforms", false, "retention run failed or datasets differ in labels");
  }
}

}  // namespace

int main() {
  std::printf("bbcal acceptance (work dir %s)\n", work().c_str());
  criterion_marginal_identity();
  criterion_gradients();
  criterion_moments();
  criterion_metric_oracles();
  criterion_platt();
  criterion_determinism();
  toy_criteria();
  std::printf("%d criteria failed\n", failures);
  return failures;
}
