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

#include "bbcal/calibrator.hpp"

#include <cmath>
#include <fstream>
#include <numeric>
#include <string>

#include "bbcal/error.hpp"
#include "bbcal/random.hpp"
#include "bbcal/special.hpp"

namespace bbcal {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

Eigen::VectorXd CalibratorInput::vector() const {
  VectorXd x(dimension());
  x.head(features.size()) = features;
  if (init_forecast) x[features.size()] = *init_forecast;
  return x;
}

void TrainConfig::validate() const {
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
    throw InvalidArgument("learning rate must be finite and nonnegative");
  }
  if (epochs < 1) throw InvalidArgument("epochs must be at least 1");
  if (batch_size < 1) throw InvalidArgument("batch size must be at least 1");
  if (histogram_bins < 2) throw InvalidArgument("histogram bins must be at least 2");
  weights.validate();
}

CalibratorModel::CalibratorModel(int input_dim, int hidden_dim, int components)
    : input_dim_(input_dim), hidden_dim_(hidden_dim), components_(components) {
  if (input_dim < 1 || hidden_dim < 1 || components < 1) {
    throw InvalidArgument("calibrator dimensions must be positive");
  }
  params_.setZero(b2_offset() + output_dim());
}

CalibratorModel CalibratorModel::initialize(int input_dim, int hidden_dim, int components,
                                            std::uint64_t seed) {
  CalibratorModel model(input_dim, hidden_dim, components);
  Rng rng(seed);
  for (Index i = 0; i < model.b2_offset(); ++i) {
    model.params_[i] = 0.1 * rng.uniform() - 0.05;
  }
  return model;
}

Eigen::Map<const MatrixXd> CalibratorModel::hidden_weights() const {
  return {params_.data() + w1_offset(), hidden_dim_, input_dim_};
}
Eigen::Map<const VectorXd> CalibratorModel::hidden_bias() const {
  return {params_.data() + b1_offset(), hidden_dim_};
}
Eigen::Map<const MatrixXd> CalibratorModel::output_weights() const {
  return {params_.data() + w2_offset(), output_dim(), hidden_dim_};
}
Eigen::Map<const VectorXd> CalibratorModel::output_bias() const {
  return {params_.data() + b2_offset(), output_dim()};
}

Eigen::VectorXd CalibratorModel::raw_output(const Eigen::Ref<const VectorXd>& x) const {
  if (x.size() != input_dim_) {
    throw InvalidArgument("calibrator expects " + std::to_string(input_dim_) +
                          " input dimensions, got " + std::to_string(x.size()));
  }
  const VectorXd hidden = (hidden_weights() * x + hidden_bias()).array().tanh().matrix();
  return output_weights() * hidden + output_bias();
}

BetaMixture<double> CalibratorModel::mixture_from_raw(
    const Eigen::Ref<const VectorXd>& raw) const {
  if (!raw.allFinite()) throw NumericalError("calibrator produced a non-finite output");
  const Index k = components_;
  Eigen::ArrayXd alpha(k), beta(k), weight(k);
  for (Index c = 0; c < k; ++c) {
    alpha[c] = 1.0 + softplus(raw[c]);
    beta[c] = 1.0 + softplus(raw[k + c]);
  }
  const Eigen::ArrayXd logits = raw.segment(2 * k, k).array();
  weight = (logits - logits.maxCoeff()).exp();
  weight /= weight.sum();
  return BetaMixture<double>(std::move(alpha), std::move(beta), std::move(weight));
}

BetaMixture<double> CalibratorModel::forward(const CalibratorInput& input) const {
  return mixture_from_raw(raw_output(input.vector()));
}

Prediction CalibratorModel::predict(const CalibratorInput& input) const {
  BetaMixture<double> m = forward(input);
  const double p = mean(m);
  const double u = variance(m);
  return {p, u, std::move(m)};
}

BatchLoss CalibratorModel::batch_loss(std::span<const TrainingExample> data,
                                      std::span<const std::size_t> indices,
                                      const LossWeights& weights, int histogram_bins) const {
  const Index n = static_cast<Index>(indices.size());
  if (n == 0) throw InvalidArgument("batch is empty");
  const Index k = components_;

  MatrixXd x(input_dim_, n);
  for (Index j = 0; j < n; ++j) {
    const CalibratorInput& in = data[indices[j]].input;
    if (in.dimension() != input_dim_) {
      throw InvalidArgument("example " + std::to_string(indices[j]) + " has " +
                            std::to_string(in.dimension()) + " input dimensions, model expects " +
                            std::to_string(input_dim_));
    }
    x.col(j) = in.vector();
  }
  const MatrixXd hidden =
      ((hidden_weights() * x).colwise() + hidden_bias()).array().tanh().matrix();
  const MatrixXd raw = (output_weights() * hidden).colwise() + output_bias();

  MatrixXd d_raw(output_dim(), n);
  BatchLoss out;
  for (Index j = 0; j < n; ++j) {
    const TrainingExample& ex = data[indices[j]];
    if (!raw.col(j).allFinite()) {
      throw NumericalError("non-finite model output at example " + std::to_string(indices[j]));
    }
    const BetaMixture<double> m = mixture_from_raw(raw.col(j));
    const LossWithGradient lg =
        loss_gradients(m, ex.outcome, ex.histogram, weights, histogram_bins);
    if (!std::isfinite(lg.loss.total) || !lg.gradient.alpha.allFinite() ||
        !lg.gradient.beta.allFinite() || !lg.gradient.weight.allFinite()) {
      throw NumericalError("non-finite loss at example " + std::to_string(indices[j]));
    }
    out.mean.binary_loss += lg.loss.binary_loss;
    out.mean.human_loss += lg.loss.human_loss;
    out.mean.total += lg.loss.total;

    // Chain through 1 + softplus and softmax.
    for (Index c = 0; c < k; ++c) {
      d_raw(c, j) = lg.gradient.alpha[c] * sigmoid(raw(c, j));
      d_raw(k + c, j) = lg.gradient.beta[c] * sigmoid(raw(k + c, j));
    }
    const Eigen::ArrayXd& w = m.weights();
    const double centre = (w * lg.gradient.weight).sum();
    d_raw.col(j).segment(2 * k, k) = (w * (lg.gradient.weight - centre)).matrix();
  }
  const double inv_n = 1.0 / static_cast<double>(n);
  out.mean.binary_loss *= inv_n;
  out.mean.human_loss *= inv_n;
  out.mean.total *= inv_n;
  d_raw *= inv_n;

  out.gradient.setZero(params_.size());
  const MatrixXd d_hidden_pre =
      ((output_weights().transpose() * d_raw).array() * (1.0 - hidden.array().square())).matrix();
  Eigen::Map<MatrixXd>(out.gradient.data() + w1_offset(), hidden_dim_, input_dim_) =
      d_hidden_pre * x.transpose();
  out.gradient.segment(b1_offset(), hidden_dim_) = d_hidden_pre.rowwise().sum();
  Eigen::Map<MatrixXd>(out.gradient.data() + w2_offset(), output_dim(), hidden_dim_) =
      d_raw * hidden.transpose();
  out.gradient.segment(b2_offset(), output_dim()) = d_raw.rowwise().sum();
  return out;
}

bool CalibratorModel::operator==(const CalibratorModel& other) const {
  return input_dim_ == other.input_dim_ && hidden_dim_ == other.hidden_dim_ &&
         components_ == other.components_ && params_ == other.params_;
}

TrainResult train(CalibratorModel model, std::span<const TrainingExample> data,
                  const TrainConfig& cfg) {
  cfg.validate();
  if (data.empty()) throw InvalidArgument("training set is empty");
  if (cfg.weights.human > 0.0) {
    for (std::size_t i = 0; i < data.size(); ++i) {
      if (!data[i].histogram) {
        throw InvalidArgument("example " + std::to_string(i) +
                              " has no histogram but the human loss weight is nonzero");
      }
    }
  }

  Rng rng = Rng::stream(cfg.seed, 0x7472616eULL);
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  VectorXd& theta = model.parameters();
  VectorXd first_moment = VectorXd::Zero(theta.size());
  VectorXd second_moment = VectorXd::Zero(theta.size());
  long step = 0;

  TrainResult result{model, {}};
  result.trace.reserve(static_cast<std::size_t>(cfg.epochs));
  const std::size_t batch = static_cast<std::size_t>(cfg.batch_size);
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(std::span<std::size_t>(order));
    LossBreakdown epoch_loss;
    for (std::size_t start = 0; start < order.size(); start += batch) {
      const std::size_t len = std::min(batch, order.size() - start);
      const auto idx = std::span<const std::size_t>(order).subspan(start, len);
      const BatchLoss bl = model.batch_loss(data, idx, cfg.weights, cfg.histogram_bins);
      const double share = static_cast<double>(len);
      epoch_loss.binary_loss += bl.mean.binary_loss * share;
      epoch_loss.human_loss += bl.mean.human_loss * share;
      epoch_loss.total += bl.mean.total * share;

      ++step;
      if (cfg.optimizer == Optimizer::kAdam) {
        first_moment = cfg.adam_beta1 * first_moment + (1.0 - cfg.adam_beta1) * bl.gradient;
        second_moment = cfg.adam_beta2 * second_moment +
                        (1.0 - cfg.adam_beta2) * bl.gradient.array().square().matrix();
        const double c1 = 1.0 - std::pow(cfg.adam_beta1, static_cast<double>(step));
        const double c2 = 1.0 - std::pow(cfg.adam_beta2, static_cast<double>(step));
        theta.array() -= cfg.learning_rate * (first_moment.array() / c1) /
                         ((second_moment.array() / c2).sqrt() + cfg.adam_epsilon);
      } else {
        theta -= cfg.learning_rate * bl.gradient;
      }
    }
    const double inv = 1.0 / static_cast<double>(order.size());
    epoch_loss.binary_loss *= inv;
    epoch_loss.human_loss *= inv;
    epoch_loss.total *= inv;
    result.trace.push_back(epoch_loss);
  }
  result.model = std::move(model);
  return result;
}

namespace {

nlohmann::json row_major(const Eigen::Ref<const MatrixXd>& m) {
  nlohmann::json out = nlohmann::json::array();
  for (Index r = 0; r < m.rows(); ++r) {
    for (Index c = 0; c < m.cols(); ++c) out.push_back(m(r, c));
  }
  return out;
}

void read_row_major(const nlohmann::json& j, const char* key, Index rows, Index cols,
                    Eigen::Map<MatrixXd> dst) {
  const auto& arr = j.at(key);
  if (!arr.is_array() || static_cast<Index>(arr.size()) != rows * cols) {
    throw DataError(std::string("checkpoint field '") + key + "' has the wrong length");
  }
  for (Index r = 0; r < rows; ++r) {
    for (Index c = 0; c < cols; ++c) dst(r, c) = arr[static_cast<std::size_t>(r * cols + c)].get<double>();
  }
}

}  // namespace

nlohmann::json checkpoint_json(const CalibratorModel& model) {
  nlohmann::json j;
  j["format"] = "bbcal.calibrator";
  j["version"] = 1;
  j["input_dim"] = model.input_dim();
  j["hidden_dim"] = model.hidden_dim();
  j["components"] = model.components();
  j["hidden_weights"] = row_major(model.hidden_weights());
  j["hidden_bias"] = row_major(model.hidden_bias());
  j["output_weights"] = row_major(model.output_weights());
  j["output_bias"] = row_major(model.output_bias());
  return j;
}

CalibratorModel model_from_checkpoint(const nlohmann::json& j) {
  try {
    if (j.at("format").get<std::string>() != "bbcal.calibrator" ||
        j.at("version").get<int>() != 1) {
      throw DataError("unrecognized checkpoint format or version");
    }
    CalibratorModel model(j.at("input_dim").get<int>(), j.at("hidden_dim").get<int>(),
                          j.at("components").get<int>());
    const Index d = model.input_dim();
    const Index h = model.hidden_dim();
    const Index o = model.output_dim();
    double* base = model.parameters().data();
    read_row_major(j, "hidden_weights", h, d, Eigen::Map<MatrixXd>(base, h, d));
    read_row_major(j, "hidden_bias", h, 1, Eigen::Map<MatrixXd>(base + h * d, h, 1));
    read_row_major(j, "output_weights", o, h, Eigen::Map<MatrixXd>(base + h * d + h, o, h));
    read_row_major(j, "output_bias", o, 1,
                   Eigen::Map<MatrixXd>(base + h * d + h + o * h, o, 1));
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed checkpoint: ") + e.what());
  }
}

void save_checkpoint(const CalibratorModel& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write checkpoint " + path.string());
  out << checkpoint_json(model).dump(1) << '\n';
}

CalibratorModel load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read checkpoint " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw DataError("checkpoint " + path.string() + " is not valid JSON: " + e.what());
  }
  return model_from_checkpoint(j);
}

}  // namespace bbcal
