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

#ifndef BBCAL_CALIBRATOR_HPP_
#define BBCAL_CALIBRATOR_HPP_

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <json.hpp>
#include <optional>
#include <span>
#include <vector>

#include "bbcal/beta.hpp"
#include "bbcal/objectives.hpp"

namespace bbcal {

// Pre-encoded question features plus an optional initial forecast, which is
// appended as one extra input dimension when present.
struct CalibratorInput {
  Eigen::VectorXd features;
  std::optional<double> init_forecast;

  Eigen::Index dimension() const { return features.size() + (init_forecast ? 1 : 0); }
  Eigen::VectorXd vector() const;
};

struct TrainingExample {
  CalibratorInput input;
  int outcome = 0;
  std::optional<Histogram> histogram;
};

enum class Optimizer { kGradientDescent, kAdam };

struct TrainConfig {
  double learning_rate = 1e-2;
  int epochs = 600;
  int batch_size = 256;
  std::uint64_t seed = 0;
  LossWeights weights;
  Optimizer optimizer = Optimizer::kAdam;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
  int histogram_bins = kDefaultHistogramBins;

  void validate() const;
};

struct Prediction {
  double point;        // mixture mean
  double uncertainty;  // mixture variance
  BetaMixture<double> mixture;
};

struct BatchLoss {
  LossBreakdown mean;
  Eigen::VectorXd gradient;  // d mean-total / d parameters
};

// Two affine layers with a tanh hidden layer. The 3K outputs are read as
// K alpha logits, K beta logits and K weight logits; alpha = 1 +
// softplus(.), beta = 1 + softplus(.), weights = softmax(.).
//
// All parameters live in one flat vector laid out as
// [W1 (hidden x input, column-major), b1, W2 (3K x hidden, column-major), b2].
class CalibratorModel {
 public:
  // All-zero parameters.
  CalibratorModel(int input_dim, int hidden_dim, int components);

  // Uniform [-0.05, 0.05] weights and hidden biases, zero output biases.
  static CalibratorModel initialize(int input_dim, int hidden_dim, int components,
                                    std::uint64_t seed);

  int input_dim() const { return input_dim_; }
  int hidden_dim() const { return hidden_dim_; }
  int components() const { return components_; }
  int output_dim() const { return 3 * components_; }

  const Eigen::VectorXd& parameters() const { return params_; }
  Eigen::VectorXd& parameters() { return params_; }

  Eigen::Map<const Eigen::MatrixXd> hidden_weights() const;
  Eigen::Map<const Eigen::VectorXd> hidden_bias() const;
  Eigen::Map<const Eigen::MatrixXd> output_weights() const;
  Eigen::Map<const Eigen::VectorXd> output_bias() const;

  // Raw 3K head outputs for one input vector.
  Eigen::VectorXd raw_output(const Eigen::Ref<const Eigen::VectorXd>& x) const;
  BetaMixture<double> mixture_from_raw(const Eigen::Ref<const Eigen::VectorXd>& raw) const;

  // Throws InvalidArgument on a dimension mismatch.
  BetaMixture<double> forward(const CalibratorInput& input) const;
  Prediction predict(const CalibratorInput& input) const;

  // Mean loss and its gradient over data[indices]. Throws NumericalError
  // naming the first example whose loss is not finite.
  BatchLoss batch_loss(std::span<const TrainingExample> data,
                       std::span<const std::size_t> indices, const LossWeights& weights,
                       int histogram_bins = kDefaultHistogramBins) const;

  bool operator==(const CalibratorModel& other) const;

 private:
  Eigen::Index w1_offset() const { return 0; }
  Eigen::Index b1_offset() const { return Eigen::Index(hidden_dim_) * input_dim_; }
  Eigen::Index w2_offset() const { return b1_offset() + hidden_dim_; }
  Eigen::Index b2_offset() const { return w2_offset() + Eigen::Index(output_dim()) * hidden_dim_; }

  int input_dim_;
  int hidden_dim_;
  int components_;
  Eigen::VectorXd params_;
};

struct TrainResult {
  CalibratorModel model;
  std::vector<LossBreakdown> trace;  // mean per-example loss, one entry per epoch
};

// Minibatch training on the weighted total loss. Shuffling and reduction
// order are fixed by cfg.seed, so the result is reproducible bit for bit.
TrainResult train(CalibratorModel model, std::span<const TrainingExample> data,
                  const TrainConfig& cfg);

// Checkpoints store dims and every parameter array in row-major order.
nlohmann::json checkpoint_json(const CalibratorModel& model);
CalibratorModel model_from_checkpoint(const nlohmann::json& j);
void save_checkpoint(const CalibratorModel& model, const std::filesystem::path& path);
CalibratorModel load_checkpoint(const std::filesystem::path& path);

}  // namespace bbcal

#endif  // BBCAL_CALIBRATOR_HPP_
