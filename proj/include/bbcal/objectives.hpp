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

#ifndef BBCAL_OBJECTIVES_HPP_
#define BBCAL_OBJECTIVES_HPP_

#include <Eigen/Dense>
#include <optional>

#include "bbcal/beta.hpp"

namespace bbcal {

// Predicted probabilities are clipped to [kProbabilityClip, 1 - kProbabilityClip]
// inside the log; discretized mixture masses are floored at kMassFloor.
inline constexpr double kProbabilityClip = 1e-12;
inline constexpr double kMassFloor = 1e-12;

struct LossWeights {
  double binary = 1.0;
  double human = 1.0;

  // Throws InvalidArgument when a weight is negative or both are zero.
  void validate() const;
};

struct LossBreakdown {
  double binary_loss = 0.0;
  double human_loss = 0.0;
  double total = 0.0;
};

// Partial derivatives with respect to each component's (alpha, beta, w).
struct MixtureGradient {
  Eigen::ArrayXd alpha;
  Eigen::ArrayXd beta;
  Eigen::ArrayXd weight;
};

struct LossWithGradient {
  LossBreakdown loss;
  MixtureGradient gradient;
};

// Negative log marginal likelihood of the outcome, i.e. BCE on the mixture
// mean.
double binary_loss(const BetaMixture<double>& m, int outcome);

// KL(h || discretize(m, bins)). Throws InvalidArgument if h has a different
// bin count.
double human_loss(const BetaMixture<double>& m, const Histogram& h,
                  int bins = kDefaultHistogramBins);

// Throws InvalidArgument if weights.human > 0 and no histogram is given.
LossBreakdown total_loss(const BetaMixture<double>& m, int outcome,
                         const std::optional<Histogram>& h, const LossWeights& weights,
                         int bins = kDefaultHistogramBins);

// Loss together with its analytic gradient. The histogram term includes the
// Jacobian of the renormalization over bins.
LossWithGradient loss_gradients(const BetaMixture<double>& m, int outcome,
                                const std::optional<Histogram>& h,
                                const LossWeights& weights,
                                int bins = kDefaultHistogramBins);

}  // namespace bbcal

#endif  // BBCAL_OBJECTIVES_HPP_
