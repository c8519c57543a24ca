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


#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <numeric>
#include <vector>

#include "bbcal/calibrator.hpp"
#include "bbcal/error.hpp"
#include "oracles.hpp"

using namespace bbcal;

namespace {

CalibratorInput random_input(Rng& rng, int dim, bool with_forecast) {
  CalibratorInput in;
  in.features.resize(with_forecast ? dim - 1 : dim);
  for (auto& v : in.features) v = rng.normal();
  if (with_forecast) in.init_forecast = rng.uniform();
  return in;
}

std::vector<TrainingExample> random_examples(Rng& rng, int n, int dim, bool with_forecast) {
  std::vector<TrainingExample> out;
  for (int i = 0; i < n; ++i) {
    TrainingExample ex;
    ex.input = random_input(rng, dim, with_forecast);
    ex.outcome = rng.bernoulli(0.5);
    const auto xs = sample(BetaParams<double>{1 + 10 * rng.uniform(), 1 + 10 * rng.uniform()},
                           300, rng.next_u64());
    ex.histogram = Histogram::from_values(xs, 100);
    out.push_back(std::move(ex));
  }
  return out;
}

double softplus_inverse(double y) { return std::log(std::expm1(y)); }

}  // namespace

TEST_CASE("zero parameters give the symmetric start") {
  for (int k : {1, 3, 5}) {
    const CalibratorModel model(4, 8, k);
    CalibratorInput in{Eigen::VectorXd::Constant(4, 0.7), std::nullopt};
    const auto m = model.forward(in);
    REQUIRE(m.size() == k);
    for (int c = 0; c < k; ++c) {
      CHECK(m.alpha()[c] == doctest::Approx(1 + std::log(2.0)).epsilon(1e-15));
      CHECK(m.beta()[c] == doctest::Approx(1 + std::log(2.0)).epsilon(1e-15));
      CHECK(m.weights()[c] == doctest::Approx(1.0 / k).epsilon(1e-15));
    }
    CHECK(model.predict(in).point == doctest::Approx(0.5).epsilon(1e-15));
  }
}

TEST_CASE("initialization ranges") {
  const auto model = CalibratorModel::initialize(6, 16, 2, 42);
  CHECK(model.output_bias().isZero());
  CHECK(model.hidden_weights().cwiseAbs().maxCoeff() <= 0.05);
  CHECK(model.output_weights().cwiseAbs().maxCoeff() <= 0.05);
  CHECK(model.hidden_bias().cwiseAbs().maxCoeff() <= 0.05);
  CHECK(model.hidden_weights().cwiseAbs().maxCoeff() > 0.0);
  CHECK(CalibratorModel::initialize(6, 16, 2, 42) == model);
  CHECK_FALSE(CalibratorModel::initialize(6, 16, 2, 43) == model);
}

TEST_CASE("outputs always respect the parameter constraints") {
  Rng rng(5);
  auto model = CalibratorModel::initialize(5, 12, 3, 1);
  for (auto& p : model.parameters()) p *= 60.0;  // push outputs toward extremes
  for (int i = 0; i < 10000; ++i) {
    CalibratorInput in = random_input(rng, 5, true);
    in.features *= 3.0;
    const Prediction pr = model.predict(in);
    for (int c = 0; c < 3; ++c) {
      REQUIRE(pr.mixture.alpha()[c] > 1.0);
      REQUIRE(pr.mixture.beta()[c] > 1.0);
      REQUIRE(pr.mixture.weights()[c] >= 0.0);
    }
    REQUIRE(std::abs(pr.mixture.weights().sum() - 1.0) < 1e-12);
    REQUIRE(pr.uncertainty > 0.0);
    REQUIRE(pr.uncertainty <= 0.25);
    REQUIRE(pr.point == mean(pr.mixture));
  }
}

TEST_CASE("forward is deterministic and checks the dimension") {
  const auto model = CalibratorModel::initialize(3, 4, 2, 9);
  CalibratorInput in{Eigen::Vector2d(0.1, -0.3), 0.4};
  CHECK(in.dimension() == 3);
  CHECK(in.vector()[2] == 0.4);
  const auto a = model.forward(in), b = model.forward(in);
  CHECK((a.alpha() == b.alpha()).all());
  CHECK((a.weights() == b.weights()).all());
  CalibratorInput bad{Eigen::Vector3d(0.1, 0.2, 0.3), 0.5};
  CHECK_THROWS_AS(model.forward(bad), InvalidArgument);
}

TEST_CASE("output bias decodes to the requested Beta") {
  CalibratorModel model(2, 3, 1);
  Eigen::VectorXd& p = model.parameters();
  const Eigen::Index b2 = p.size() - 3;
  p[b2] = softplus_inverse(43.8);
  p[b2 + 1] = softplus_inverse(8.1);
  const auto pr = model.predict({Eigen::Vector2d(1, 2), std::nullopt});
  CHECK(pr.mixture.alpha()[0] == doctest::Approx(44.8).epsilon(1e-12));
  CHECK(pr.mixture.beta()[0] == doctest::Approx(9.1).epsilon(1e-12));
  CHECK(pr.point == doctest::Approx(0.831).epsilon(1e-3));
}

TEST_CASE("model gradient agrees with central differences") {
  Rng rng(31);
  const double step = 1e-5;
  for (int trial = 0; trial < 20; ++trial) {
    const int k = trial % 2 == 0 ? 1 : 5;
    const int dim = 3 + static_cast<int>(rng.index(4));
    const bool fc = rng.bernoulli(0.5);
    auto model = CalibratorModel::initialize(dim, 6, k, rng.next_u64());
    for (auto& v : model.parameters()) v = rng.normal();
    const auto data = random_examples(rng, 4, dim, fc);
    std::vector<std::size_t> idx(data.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    const LossWeights w{rng.uniform() + 0.1, rng.uniform() + 0.1};
    const BatchLoss bl = model.batch_loss(data, idx, w);
    double worst = 0;
    for (Eigen::Index i = 0; i < model.parameters().size(); ++i) {
      CalibratorModel plus = model, minus = model;
      plus.parameters()[i] += step;
      minus.parameters()[i] -= step;
      const double fd = (plus.batch_loss(data, idx, w).mean.total -
                         minus.batch_loss(data, idx, w).mean.total) /
                        (2 * step);
      worst = std::max(worst, oracle::relative_error(bl.gradient[i], fd));
    }
    CHECK(worst < 1e-4);
  }
}

TEST_CASE("batch loss is the mean of per-example losses") {
  Rng rng(32);
  const auto model = CalibratorModel::initialize(4, 5, 2, 3);
  const auto data = random_examples(rng, 7, 4, false);
  std::vector<std::size_t> idx = {6, 2, 3};
  const BatchLoss bl = model.batch_loss(data, idx, {1, 1});
  double s = 0;
  for (auto i : idx) s += total_loss(model.forward(data[i].input), data[i].outcome, data[i].histogram, {1, 1}).total;
  CHECK(bl.mean.total == doctest::Approx(s / 3).epsilon(1e-12));
}

TEST_CASE("zero learning rate leaves parameters bit for bit") {
  Rng rng(33);
  const auto data = random_examples(rng, 50, 4, true);
  const auto model = CalibratorModel::initialize(4, 8, 2, 5);
  for (Optimizer opt : {Optimizer::kAdam, Optimizer::kGradientDescent}) {
    TrainConfig cfg;
    cfg.learning_rate = 0.0;
    cfg.epochs = 1;
    cfg.batch_size = 16;
    cfg.optimizer = opt;
    const TrainResult r = train(model, data, cfg);
    CHECK(r.model == model);
    CHECK(r.trace.size() == 1);
  }
}

TEST_CASE("training is deterministic and lowers the loss") {
  Rng rng(34);
  const auto data = random_examples(rng, 120, 3, false);
  TrainConfig cfg;
  cfg.epochs = 15;
  cfg.batch_size = 32;
  cfg.seed = 77;
  const auto init = CalibratorModel::initialize(3, 8, 1, 1);
  const TrainResult a = train(init, data, cfg);
  const TrainResult b = train(init, data, cfg);
  CHECK(a.model == b.model);
  REQUIRE(a.trace.size() == 15);
  for (std::size_t e = 0; e < a.trace.size(); ++e) CHECK(a.trace[e].total == b.trace[e].total);
  CHECK(a.trace.back().total < a.trace.front().total);
  cfg.seed = 78;
  CHECK_FALSE(train(init, data, cfg).model == a.model);
  cfg.optimizer = Optimizer::kGradientDescent;
  cfg.learning_rate = 0.1;
  const TrainResult g = train(init, data, cfg);
  CHECK(g.trace.back().total < g.trace.front().total);
}

TEST_CASE("training config and data validation") {
  Rng rng(35);
  auto data = random_examples(rng, 5, 3, false);
  const auto model = CalibratorModel::initialize(3, 4, 1, 1);
  TrainConfig cfg;
  cfg.epochs = 0;
  CHECK_THROWS_AS(train(model, data, cfg), InvalidArgument);
  cfg.epochs = 1;
  cfg.batch_size = 0;
  CHECK_THROWS_AS(train(model, data, cfg), InvalidArgument);
  cfg.batch_size = 4;
  cfg.learning_rate = -1;
  CHECK_THROWS_AS(train(model, data, cfg), InvalidArgument);
  cfg.learning_rate = 1e-3;
  CHECK_THROWS_AS(train(model, std::span<const TrainingExample>{}, cfg), InvalidArgument);
  data[2].histogram.reset();
  CHECK_THROWS_AS(train(model, data, cfg), InvalidArgument);
  cfg.weights = {1, 0};
  CHECK_NOTHROW(train(model, data, cfg));
}

TEST_CASE("non-finite loss names the example") {
  Rng rng(36);
  auto data = random_examples(rng, 6, 3, false);
  data[4].input.features[1] = std::nan("");
  TrainConfig cfg;
  cfg.epochs = 1;
  cfg.batch_size = 6;
  try {
    train(CalibratorModel::initialize(3, 4, 1, 1), data, cfg);
    FAIL("expected NumericalError");
  } catch (const NumericalError& e) {
    CHECK(std::string(e.what()).find("example 4") != std::string::npos);
  }
}

TEST_CASE("checkpoint round trip is bit exact") {
  Rng rng(37);
  auto model = CalibratorModel::initialize(7, 9, 5, 11);
  for (auto& v : model.parameters()) v = rng.normal() * std::exp(rng.normal() * 5);
  const auto dir = std::filesystem::temp_directory_path() / "bbcal_ckpt_test";
  std::filesystem::create_directories(dir);
  const auto path = dir / "model.json";
  save_checkpoint(model, path);
  const CalibratorModel back = load_checkpoint(path);
  CHECK(back == model);
  CHECK(back.input_dim() == 7);
  CHECK(back.hidden_dim() == 9);
  CHECK(back.components() == 5);

  const nlohmann::json j = checkpoint_json(model);
  CHECK(j["hidden_weights"].size() == 63);
  // Row-major: element (0, 1) of W1 is second.
  CHECK(j["hidden_weights"][1].get<double>() == model.hidden_weights()(0, 1));
  CHECK(j["output_weights"][1].get<double>() == model.output_weights()(0, 1));

  nlohmann::json bad = j;
  bad["version"] = 99;
  CHECK_THROWS_AS(model_from_checkpoint(bad), DataError);
  bad = j;
  bad["output_bias"].erase(0);
  CHECK_THROWS_AS(model_from_checkpoint(bad), DataError);
  CHECK_THROWS_AS(load_checkpoint(dir / "missing.json"), DataError);
  std::filesystem::remove_all(dir);
}
