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

#include "bbcal/objectives.hpp"

#include <cmath>
#include <string>

namespace bbcal {
namespace {

// log(x_b) and log(1 - x_b) at the bin midpoints.
struct BinGrid {
  int bins = 0;
  Eigen::ArrayXd log_x;
  Eigen::ArrayXd log_1mx;
};

const BinGrid& bin_grid(int bins) {
  thread_local BinGrid grid;
  if (grid.bins != bins) {
    grid.bins = bins;
    grid.log_x.resize(bins);
    grid.log_1mx.resize(bins);
    for (int b = 0; b < bins; ++b) {
      const double x = Histogram::midpoint(b, bins);
      grid.log_x[b] = std::log(x);
      grid.log_1mx[b] = std::log1p(-x);
    }
  }
  return grid;
}

// K x B matrix of log(w_k) + log pdf_k(x_b).
Eigen::ArrayXXd weighted_log_density(const BetaMixture<double>& m, const BinGrid& grid) {
  const Eigen::Index k = m.size();
  Eigen::ArrayXXd out(k, grid.bins);
  for (Eigen::Index c = 0; c < k; ++c) {
    const double a = m.alpha()[c];
    const double b = m.beta()[c];
    const double offset = std::log(m.weights()[c]) - log_beta_function(a, b);
    out.row(c) = (a - 1.0) * grid.log_x.transpose() + (b - 1.0) * grid.log_1mx.transpose() +
                 offset;
  }
  return out;
}

void check_bins(const Histogram& h, int bins) {
  if (h.bins() != bins) {
    throw InvalidArgument("histogram has " + std::to_string(h.bins()) +
                          " bins, objective is configured for " + std::to_string(bins));
  }
}

struct HumanTerms {
  double loss = 0.0;
  MixtureGradient gradient;
};

HumanTerms human_terms(const BetaMixture<double>& m, const Histogram& h, int bins,
                       bool with_gradient) {
  check_bins(h, bins);
  const BinGrid& grid = bin_grid(bins);
  const Eigen::ArrayXXd logf = weighted_log_density(m, grid);

  // log q_b = logsumexp_k logf(k, b), then normalize over bins.
  const Eigen::RowVectorXd top = logf.colwise().maxCoeff().matrix();
  Eigen::ArrayXd logq(bins);
  for (int b = 0; b < bins; ++b) {
    const double t = top[b];
    logq[b] = std::isfinite(t) ? t + std::log((logf.col(b) - t).exp().sum()) : t;
  }
  const double qmax = logq.maxCoeff();
  const double log_total = qmax + std::log((logq - qmax).exp().sum());
  const Eigen::ArrayXd mass = (logq - log_total).exp();

  HumanTerms out;
  Eigen::ArrayXd coeff = Eigen::ArrayXd::Zero(bins);
  double kept = 0.0;
  for (int b = 0; b < bins; ++b) {
    const double hb = h[b];
    if (hb <= 0.0) continue;
    if (mass[b] >= kMassFloor) {
      out.loss += hb * (std::log(hb) - (logq[b] - log_total));
      coeff[b] -= hb;
      kept += hb;
    } else {
      out.loss += hb * (std::log(hb) - std::log(kMassFloor));
    }
  }
  if (!with_gradient) return out;

  // d loss = sum_b coeff_b d log q_b with coeff_b = -h_b [kept] + kept * m_b.
  coeff += kept * mass;
  const Eigen::Index k = m.size();
  out.gradient.alpha.setZero(k);
  out.gradient.beta.setZero(k);
  out.gradient.weight.setZero(k);
  for (Eigen::Index c = 0; c < k; ++c) {
    const double a = m.alpha()[c];
    const double bt = m.beta()[c];
    const double psi_sum = digamma(a + bt);
    const double psi_a = digamma(a);
    const double psi_b = digamma(bt);
    // Responsibility of component c in bin b, and pdf_c / q_b.
    const Eigen::ArrayXd log_ratio = logf.row(c).transpose() - logq;
    const Eigen::ArrayXd resp = log_ratio.exp();
    const Eigen::ArrayXd weighted = coeff * resp;
    out.gradient.alpha[c] = (weighted * (grid.log_x - psi_a + psi_sum)).sum();
    out.gradient.beta[c] = (weighted * (grid.log_1mx - psi_b + psi_sum)).sum();
    const double w = m.weights()[c];
    if (w > 0.0) {
      out.gradient.weight[c] = weighted.sum() / w;
    } else {
      // logf carries log w = -inf here; rebuild pdf_c / q_b without it.
      const Eigen::ArrayXd log_pdf_c =
          (a - 1.0) * grid.log_x + (bt - 1.0) * grid.log_1mx - log_beta_function(a, bt);
      out.gradient.weight[c] = (coeff * (log_pdf_c - logq).exp()).sum();
    }
  }
  return out;
}

double clipped(double p) { return std::clamp(p, kProbabilityClip, 1.0 - kProbabilityClip); }

}  // namespace

void LossWeights::validate() const {
  if (!(binary >= 0.0) || !(human >= 0.0) || !std::isfinite(binary) || !std::isfinite(human)) {
    throw InvalidArgument("loss weights must be finite and nonnegative");
  }
  if (binary == 0.0 && human == 0.0) {
    throw InvalidArgument("loss weights must not both be zero");
  }
}

double binary_loss(const BetaMixture<double>& m, int outcome) {
  const double p = clipped(mean(m));
  return outcome == 1 ? -std::log(p) : -std::log1p(-p);
}

double human_loss(const BetaMixture<double>& m, const Histogram& h, int bins) {
  return human_terms(m, h, bins, false).loss;
}

LossBreakdown total_loss(const BetaMixture<double>& m, int outcome,
                         const std::optional<Histogram>& h, const LossWeights& weights,
                         int bins) {
  weights.validate();
  if (weights.human > 0.0 && !h) {
    throw InvalidArgument("human loss weight is nonzero but no histogram was given");
  }
  LossBreakdown out;
  out.binary_loss = binary_loss(m, outcome);
  if (h) out.human_loss = human_loss(m, *h, bins);
  out.total = weights.binary * out.binary_loss + weights.human * out.human_loss;
  return out;
}

LossWithGradient loss_gradients(const BetaMixture<double>& m, int outcome,
                                const std::optional<Histogram>& h,
                                const LossWeights& weights, int bins) {
  weights.validate();
  if (weights.human > 0.0 && !h) {
    throw InvalidArgument("human loss weight is nonzero but no histogram was given");
  }
  const Eigen::Index k = m.size();
  LossWithGradient out;
  out.gradient.alpha.setZero(k);
  out.gradient.beta.setZero(k);
  out.gradient.weight.setZero(k);

  const double raw = mean(m);
  const double p = clipped(raw);
  out.loss.binary_loss = outcome == 1 ? -std::log(p) : -std::log1p(-p);
  if (weights.binary > 0.0 && raw == p) {
    const double dp = outcome == 1 ? -1.0 / p : 1.0 / (1.0 - p);
    const Eigen::ArrayXd s = m.alpha() + m.beta();
    const Eigen::ArrayXd s2 = s * s;
    const double scale = weights.binary * dp;
    out.gradient.alpha += scale * m.weights() * m.beta() / s2;
    out.gradient.beta -= scale * m.weights() * m.alpha() / s2;
    out.gradient.weight += scale * m.alpha() / s;
  }

  if (h) {
    const bool need_grad = weights.human > 0.0;
    HumanTerms human = human_terms(m, *h, bins, need_grad);
    out.loss.human_loss = human.loss;
    if (need_grad) {
      out.gradient.alpha += weights.human * human.gradient.alpha;
      out.gradient.beta += weights.human * human.gradient.beta;
      out.gradient.weight += weights.human * human.gradient.weight;
    }
  }
  out.loss.total = weights.binary * out.loss.binary_loss + weights.human * out.loss.human_loss;
  return out;
}

}  // namespace bbcal
