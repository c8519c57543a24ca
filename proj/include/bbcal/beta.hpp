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

#ifndef BBCAL_BETA_HPP_
#define BBCAL_BETA_HPP_

// Beta distributions, finite mixtures of them, and B-bin histograms over
// [0, 1]. Everything here is a pure function of immutable values; sampling
// takes the generator explicitly.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "bbcal/error.hpp"
#include "bbcal/random.hpp"
#include "bbcal/special.hpp"

namespace bbcal {

inline constexpr int kDefaultHistogramBins = 100;

template <typename Scalar = double>
struct BetaParams {
  Scalar alpha;
  Scalar beta;

  bool valid() const {
    using std::isfinite;
    return isfinite(alpha) && isfinite(beta) && alpha > Scalar(0) &&
           beta > Scalar(0);
  }
};

template <typename Scalar>
Scalar mean(const BetaParams<Scalar>& p) {
  return p.alpha / (p.alpha + p.beta);
}

template <typename Scalar>
Scalar variance(const BetaParams<Scalar>& p) {
  const Scalar s = p.alpha + p.beta;
  return p.alpha * p.beta / (s * s * (s + Scalar(1)));
}

template <typename Scalar>
Scalar log_pdf(const BetaParams<Scalar>& p, Scalar x) {
  using std::log;
  using std::log1p;
  if (!(x > Scalar(0) && x < Scalar(1))) {
    throw InvalidArgument("Beta log-density requires 0 < x < 1");
  }
  return (p.alpha - Scalar(1)) * log(x) + (p.beta - Scalar(1)) * log1p(-x) -
         log_beta_function(p.alpha, p.beta);
}

template <typename Scalar>
Scalar pdf(const BetaParams<Scalar>& p, Scalar x) {
  using std::exp;
  return exp(log_pdf(p, x));
}

// P(y | alpha, beta) with the latent probability integrated out.
template <typename Scalar>
Scalar marginal_likelihood(const BetaParams<Scalar>& p, int outcome) {
  return outcome == 1 ? p.alpha / (p.alpha + p.beta)
                      : p.beta / (p.alpha + p.beta);
}

// Convex combination of K Beta densities.
template <typename Scalar = double>
class BetaMixture {
 public:
  using Array = Eigen::Array<Scalar, Eigen::Dynamic, 1>;

  BetaMixture(Array alpha, Array beta, Array weight)
      : alpha_(std::move(alpha)), beta_(std::move(beta)), weight_(std::move(weight)) {
    validate();
  }

  static BetaMixture single(BetaParams<Scalar> p) {
    return BetaMixture(Array::Constant(1, p.alpha), Array::Constant(1, p.beta),
                       Array::Ones(1));
  }

  static BetaMixture from_components(std::span<const BetaParams<Scalar>> parts,
                                     std::span<const Scalar> weights) {
    if (parts.size() != weights.size()) {
      throw InvalidArgument("mixture: component and weight counts differ");
    }
    const auto k = static_cast<Eigen::Index>(parts.size());
    Array a(k), b(k), w(k);
    for (Eigen::Index i = 0; i < k; ++i) {
      a[i] = parts[i].alpha;
      b[i] = parts[i].beta;
      w[i] = weights[i];
    }
    return BetaMixture(std::move(a), std::move(b), std::move(w));
  }

  Eigen::Index size() const { return alpha_.size(); }
  BetaParams<Scalar> component(Eigen::Index k) const { return {alpha_[k], beta_[k]}; }
  const Array& alpha() const { return alpha_; }
  const Array& beta() const { return beta_; }
  const Array& weights() const { return weight_; }

 private:
  void validate() const {
    using std::abs;
    if (alpha_.size() < 1 || alpha_.size() != beta_.size() ||
        alpha_.size() != weight_.size()) {
      throw InvalidArgument("mixture: need K >= 1 components with matching sizes");
    }
    for (Eigen::Index k = 0; k < alpha_.size(); ++k) {
      if (!component(k).valid()) {
        throw InvalidArgument("mixture: shape parameters must be finite and positive");
      }
      if (!(weight_[k] >= Scalar(0))) {
        throw InvalidArgument("mixture: weights must be nonnegative");
      }
    }
    if (!(abs(weight_.sum() - Scalar(1)) <= Scalar(1e-9))) {
      throw InvalidArgument("mixture: weights must sum to 1");
    }
  }

  Array alpha_;
  Array beta_;
  Array weight_;
};

template <typename Scalar>
Scalar mean(const BetaMixture<Scalar>& m) {
  return (m.weights() * m.alpha() / (m.alpha() + m.beta())).sum();
}

// Law of total variance over the components.
template <typename Scalar>
Scalar variance(const BetaMixture<Scalar>& m) {
  const auto s = m.alpha() + m.beta();
  const auto mu = m.alpha() / s;
  const auto var = m.alpha() * m.beta() / (s * s * (s + Scalar(1)));
  const Scalar first = mean(m);
  const Scalar second = (m.weights() * (var + mu * mu)).sum();
  return std::max(Scalar(0), second - first * first);
}

template <typename Scalar>
Scalar log_pdf(const BetaMixture<Scalar>& m, Scalar x) {
  using std::exp;
  using std::log;
  Scalar top = -std::numeric_limits<Scalar>::infinity();
  Eigen::Array<Scalar, Eigen::Dynamic, 1> terms(m.size());
  for (Eigen::Index k = 0; k < m.size(); ++k) {
    terms[k] = log(m.weights()[k]) + log_pdf(m.component(k), x);
    top = std::max(top, terms[k]);
  }
  return top + log((terms - top).exp().sum());
}

template <typename Scalar>
Scalar pdf(const BetaMixture<Scalar>& m, Scalar x) {
  using std::exp;
  return exp(log_pdf(m, x));
}

// Single Beta with the same mean and variance as the mixture.
template <typename Scalar>
BetaParams<Scalar> moment_match(const BetaMixture<Scalar>& m) {
  const Scalar mu = mean(m);
  const Scalar var = variance(m);
  const Scalar concentration = mu * (Scalar(1) - mu) / var - Scalar(1);
  return {mu * concentration, (Scalar(1) - mu) * concentration};
}

// Normalized masses over B uniform bins of [0, 1]. Bin b covers
// [b/B, (b+1)/B); the last bin also includes 1.
class Histogram {
 public:
  // Divides by the total unless it is within 1e-12 of 1; rejects B < 2, negative, non-finite or all-zero
  // masses.
  explicit Histogram(Eigen::VectorXd masses) : masses_(std::move(masses)) {
    if (masses_.size() < 2) throw InvalidArgument("histogram: need at least 2 bins");
    for (Eigen::Index b = 0; b < masses_.size(); ++b) {
      if (!std::isfinite(masses_[b]) || masses_[b] < 0.0) {
        throw InvalidArgument("histogram: bin " + std::to_string(b) +
                              " has a negative or non-finite mass");
      }
    }
    const double total = masses_.sum();
    if (!(total > 0.0)) throw InvalidArgument("histogram: total mass is zero");
    // Already-normalized input is kept bit for bit.
    if (std::abs(total - 1.0) > 1e-12) masses_ /= total;
  }

  static Histogram uniform(int bins) {
    return Histogram(Eigen::VectorXd::Constant(bins, 1.0));
  }

  // Counts values in [0, 1] per bin.
  static Histogram from_values(std::span<const double> values, int bins) {
    if (values.empty()) throw InvalidArgument("histogram: no values to bin");
    Eigen::VectorXd counts = Eigen::VectorXd::Zero(bins);
    for (double v : values) counts[bin_index(v, bins)] += 1.0;
    return Histogram(std::move(counts));
  }

  static double midpoint(int bin, int bins) {
    return (static_cast<double>(bin) + 0.5) / static_cast<double>(bins);
  }

  static int bin_index(double x, int bins) {
    if (!(x >= 0.0 && x <= 1.0)) {
      throw InvalidArgument("histogram: value outside [0, 1]");
    }
    int b = std::min(static_cast<int>(x * bins), bins - 1);
    // Guard the floating product against the exact edge b/B.
    while (b > 0 && x < static_cast<double>(b) / bins) --b;
    while (b < bins - 1 && x >= static_cast<double>(b + 1) / bins) ++b;
    return b;
  }

  int bins() const { return static_cast<int>(masses_.size()); }
  double operator[](int b) const { return masses_[b]; }
  const Eigen::VectorXd& masses() const { return masses_; }

  bool operator==(const Histogram& other) const {
    return masses_.size() == other.masses_.size() && masses_ == other.masses_;
  }

 private:
  Eigen::VectorXd masses_;
};

// Per-bin log of the unnormalized midpoint mass, log sum_k w_k pdf_k(x_b).
template <typename Scalar>
Eigen::Array<Scalar, Eigen::Dynamic, 1> midpoint_log_density(const BetaMixture<Scalar>& m,
                                                             int bins) {
  Eigen::Array<Scalar, Eigen::Dynamic, 1> out(bins);
  for (int b = 0; b < bins; ++b) {
    out[b] = log_pdf(m, Scalar(Histogram::midpoint(b, bins)));
  }
  return out;
}

// Midpoint density times bin width, renormalized. Computed in log space so
// the masses stay well defined for sharply peaked components.
template <typename Scalar>
Histogram discretize(const BetaMixture<Scalar>& m, int bins) {
  if (bins < 2) throw InvalidArgument("discretize: need at least 2 bins");
  const auto logq = midpoint_log_density(m, bins);
  const Scalar top = logq.maxCoeff();
  Eigen::VectorXd masses = (logq - top).exp().matrix().template cast<double>();
  return Histogram(std::move(masses));
}

inline std::vector<double> sample(const BetaParams<double>& p, std::size_t n, Rng& rng) {
  std::vector<double> out(n);
  for (auto& x : out) x = rng.beta(p.alpha, p.beta);
  return out;
}

inline std::vector<double> sample(const BetaParams<double>& p, std::size_t n,
                                  std::uint64_t seed) {
  Rng rng(seed);
  return sample(p, n, rng);
}

inline std::vector<double> sample(const BetaMixture<double>& m, std::size_t n, Rng& rng) {
  std::vector<double> cumulative(static_cast<std::size_t>(m.size()));
  double acc = 0.0;
  for (Eigen::Index k = 0; k < m.size(); ++k) {
    acc += m.weights()[k];
    cumulative[static_cast<std::size_t>(k)] = acc;
  }
  std::vector<double> out(n);
  for (auto& x : out) {
    const double u = rng.uniform() * acc;
    const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
    const auto k = std::min<Eigen::Index>(it - cumulative.begin(), m.size() - 1);
    const auto c = m.component(k);
    x = rng.beta(c.alpha, c.beta);
  }
  return out;
}

}  // namespace bbcal

#endif  // BBCAL_BETA_HPP_
