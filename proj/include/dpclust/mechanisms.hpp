//
// Copyright 2026 The dpclust Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "dpclust/error.hpp"
#include "dpclust/random.hpp"

namespace dpclust {

class PrivacyBudget {
 public:
  PrivacyBudget(double epsilon, double delta) : epsilon_(epsilon), delta_(delta) {
    internal::RequireArg(std::isfinite(epsilon) && epsilon > 0,
                         "epsilon must be finite and > 0");
    internal::RequireArg(std::isfinite(delta) && delta > 0 && delta <= 1,
                         "delta must lie in (0, 1]");
  }

  double epsilon() const { return epsilon_; }
  double delta() const { return delta_; }

 private:
  double epsilon_;
  double delta_;
};

inline double LaplaceNoise(double scale, RandomStream& rng) {
  internal::RequireArg(std::isfinite(scale) && scale > 0,
                       "Laplace scale must be finite and > 0");
  if (rng.zero_noise()) return 0.0;
  double u = rng.Uniform() - 0.5;
  double magnitude = -scale * std::log1p(-2.0 * std::abs(u));
  return u < 0 ? -magnitude : magnitude;
}

inline std::vector<double> GaussianNoiseVec(double sigma, std::size_t dim,
                                            RandomStream& rng) {
  internal::RequireArg(dim > 0, "Gaussian noise dimension must be > 0");
  internal::RequireArg(std::isfinite(sigma) && sigma >= 0,
                       "Gaussian sigma must be finite and >= 0");
  std::vector<double> out(dim, 0.0);
  if (rng.zero_noise()) return out;
  for (double& v : out) v = sigma * rng.StandardNormal();
  return out;
}

// (lambda / eps) * sqrt(2 ln(1.25 / delta)), no range check on epsilon.
inline double GaussianSigmaUnchecked(double epsilon, double delta,
                                     double sensitivity) {
  return sensitivity / epsilon * std::sqrt(2.0 * std::log(1.25 / delta));
}

// Noise scale of the Gaussian mechanism for an l2 sensitivity. The classical
// calibration is only valid for epsilon < 1.
inline double GaussianSigmaFor(const PrivacyBudget& budget, double sensitivity) {
  internal::RequireArg(budget.epsilon() < 1,
                       "Gaussian mechanism calibration needs epsilon < 1");
  internal::RequireArg(std::isfinite(sensitivity) && sensitivity >= 0,
                       "sensitivity must be finite and >= 0");
  return GaussianSigmaUnchecked(budget.epsilon(), budget.delta(), sensitivity);
}

// Samples index i with probability proportional to exp(log_weights[i]).
// Entries equal to -inf are never chosen. Under zero noise the lowest-index
// entry among those with the largest `ranking` value is returned.
inline std::size_t SampleFromLogWeights(std::span<const double> log_weights,
                                        std::span<const double> ranking,
                                        RandomStream& rng) {
  internal::RequireArg(!log_weights.empty(), "empty candidate list");
  if (rng.zero_noise()) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < ranking.size(); ++i) {
      if (ranking[i] > ranking[best]) best = i;
    }
    return best;
  }
  double top = *std::max_element(log_weights.begin(), log_weights.end());
  internal::RequireArg(std::isfinite(top), "no candidate has finite weight");
  std::vector<double> cumulative(log_weights.size());
  double total = 0.0;
  for (std::size_t i = 0; i < log_weights.size(); ++i) {
    total += std::exp(log_weights[i] - top);
    cumulative[i] = total;
  }
  double target = rng.Uniform() * total;
  auto it = std::upper_bound(cumulative.begin(), cumulative.end(), target);
  if (it == cumulative.end()) --it;
  return static_cast<std::size_t>(it - cumulative.begin());
}

// Exponential mechanism over a finite candidate list with quality scores of
// sensitivity 1: P[i] proportional to exp(eps * q_i / 2).
inline std::size_t ExponentialChoice(std::span<const double> qualities,
                                     double epsilon, RandomStream& rng) {
  internal::RequireArg(!qualities.empty(), "empty candidate list");
  internal::RequireArg(std::isfinite(epsilon) && epsilon > 0,
                       "epsilon must be finite and > 0");
  std::vector<double> log_weights(qualities.size());
  for (std::size_t i = 0; i < qualities.size(); ++i) {
    log_weights[i] = epsilon * qualities[i] / 2.0;
  }
  return SampleFromLogWeights(log_weights, qualities, rng);
}

}  // namespace dpclust
