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
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <vector>

#include "dpclust/error.hpp"
#include "dpclust/geometry.hpp"
#include "dpclust/kmeans.hpp"
#include "dpclust/mechanisms.hpp"
#include "dpclust/random.hpp"
#include "dpclust/scalar_estimators.hpp"
#include "dpclust/tuple_clustering.hpp"
#include "dpclust/tuples.hpp"

namespace dpclust {

struct MixtureComponent {
  double weight = 1.0;
  Point mean;
  std::vector<double> variances;  // diagonal covariance

  static MixtureComponent Spherical(double weight, Point mean, double sigma) {
    std::size_t d = mean.size();
    return {weight, std::move(mean), std::vector<double>(d, sigma * sigma)};
  }
};

struct MixtureBounds {
  double radius = 1.0;  // bound on every mean norm
  double sigma_max = 1.0;
  double sigma_min = 1.0;
  double w_min = 0.0;
};

class MixtureParams {
 public:
  MixtureParams(std::vector<MixtureComponent> components, MixtureBounds bounds)
      : components_(std::move(components)), bounds_(bounds) {
    Validate();
  }

  std::size_t k() const { return components_.size(); }
  std::size_t d() const { return components_.front().mean.size(); }
  const std::vector<MixtureComponent>& components() const { return components_; }
  const MixtureComponent& operator[](std::size_t i) const { return components_[i]; }
  const MixtureBounds& bounds() const { return bounds_; }

 private:
  void Validate() const {
    internal::RequireArg(!components_.empty(), "mixture needs a component");
    std::size_t d = components_.front().mean.size();
    internal::RequireArg(d > 0, "mixture dimension must be > 0");
    double total = 0.0;
    for (const MixtureComponent& c : components_) {
      internal::Require(c.mean.size() == d && c.variances.size() == d,
                        ErrorCode::kShapeMismatch,
                        "component dimensions disagree");
      internal::RequireArg(c.weight >= 0, "weights must be >= 0");
      for (double v : c.variances) {
        internal::RequireArg(std::isfinite(v) && v >= 0, "variances must be >= 0");
      }
      total += c.weight;
    }
    internal::RequireArg(std::abs(total - 1.0) <= 1e-12, "weights must sum to 1");
  }

  std::vector<MixtureComponent> components_;
  MixtureBounds bounds_;
};

struct LabeledSample {
  PointSet points;
  std::vector<std::size_t> labels;
};

inline LabeledSample SampleMixture(const MixtureParams& params, std::size_t n,
                                   RandomStream& rng) {
  internal::RequireArg(n >= 1, "sample size must be >= 1");
  std::vector<double> cumulative;
  double running = 0.0;
  for (const MixtureComponent& c : params.components()) {
    running += c.weight;
    cumulative.push_back(running);
  }
  LabeledSample out{PointSet(params.d()), {}};
  out.points.Reserve(n);
  out.labels.reserve(n);
  Point x(params.d());
  for (std::size_t i = 0; i < n; ++i) {
    double u = rng.Uniform() * running;
    std::size_t j = static_cast<std::size_t>(
        std::upper_bound(cumulative.begin(), cumulative.end(), u) -
        cumulative.begin());
    j = std::min(j, params.k() - 1);
    while (params[j].weight == 0 && j > 0) --j;
    const MixtureComponent& c = params[j];
    for (std::size_t a = 0; a < x.size(); ++a) {
      x[a] = c.mean[a] + std::sqrt(c.variances[a]) * rng.StandardNormal();
    }
    out.points.Add(x);
    out.labels.push_back(j);
  }
  return out;
}

inline double LogDensity(const MixtureParams& params, PointView x) {
  double best = -std::numeric_limits<double>::infinity();
  std::vector<double> terms;
  for (const MixtureComponent& c : params.components()) {
    if (c.weight == 0) continue;
    double log_p = std::log(c.weight);
    for (std::size_t a = 0; a < x.size(); ++a) {
      double diff = x[a] - c.mean[a];
      log_p -= 0.5 * (std::log(2.0 * M_PI * c.variances[a]) +
                      diff * diff / c.variances[a]);
    }
    terms.push_back(log_p);
    best = std::max(best, log_p);
  }
  double sum = 0.0;
  for (double t : terms) sum += std::exp(t - best);
  return best + std::log(sum);
}

using Labeler = std::function<std::vector<std::size_t>(const PointSet&,
                                                       std::size_t, RandomStream&)>;

// Labels points by their closest k-means++/Lloyd center.
inline std::vector<std::size_t> NearestMeanLabeler(const PointSet& s,
                                                   std::size_t k,
                                                   RandomStream& rng) {
  internal::RequireArg(s.size() >= k, "fewer points than labels");
  CenterSet centers = KMeansPlusPlus(s, k, 20, rng);
  std::vector<std::size_t> labels(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) labels[i] = NearestIndex(s[i], centers);
  return labels;
}

struct EmpiricalMeans {
  TupleDatabase tuples{1, 1};
  // Chunks in which some label received no point.
  std::size_t degraded_runs = 0;
};

// Splits the first s * t points into t consecutive chunks of s points,
// labels each chunk and returns the per-label means as k-tuples.
inline EmpiricalMeans GenEmpiricalMeans(const PointSet& p, std::size_t k,
                                        std::size_t s, std::size_t t,
                                        const Labeler& labeler,
                                        RandomStream& rng) {
  internal::RequireArg(k > 0 && s >= k && t > 0, "need k > 0, s >= k, t > 0");
  if (p.size() < s * t) {
    throw TooSmallError("need at least s * t points",
                        static_cast<std::int64_t>(s * t));
  }
  std::size_t d = p.dim();
  EmpiricalMeans out;
  out.tuples = TupleDatabase(k, d);
  out.tuples.Reserve(t);
  for (std::size_t j = 0; j < t; ++j) {
    PointSet chunk(d, std::vector<double>(p.flat().begin() + static_cast<std::ptrdiff_t>(j * s * d),
                                          p.flat().begin() + static_cast<std::ptrdiff_t>((j + 1) * s * d)));
    RandomStream run_rng = rng.Split();
    std::vector<std::size_t> labels = labeler(chunk, k, run_rng);
    std::vector<Point> sums(k, Point(d, 0.0));
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < chunk.size(); ++i) {
      internal::RequireArg(labels[i] < k, "labeler returned an invalid label");
      for (std::size_t c = 0; c < d; ++c) sums[labels[i]][c] += chunk[i][c];
      ++counts[labels[i]];
    }
    Point global = Mean(chunk);
    bool degraded = false;
    for (std::size_t i = 0; i < k; ++i) {
      if (counts[i] == 0) {
        sums[i] = global;
        degraded = true;
      } else {
        for (double& v : sums[i]) v /= static_cast<double>(counts[i]);
      }
    }
    if (degraded) ++out.degraded_runs;
    out.tuples.Add(sums);
  }
  return out;
}

struct GaussianEstimate {
  Point mean;
  std::vector<double> variances;
};

using GaussianLearner = std::function<GaussianEstimate(
    const PointSet&, const std::optional<PrivacyBudget>&, RandomStream&)>;

namespace internal {

inline void ProjectToBall(std::span<double> x, double radius) {
  double norm = Norm(x);
  if (norm > radius) {
    for (double& v : x) v *= radius / norm;
  }
}

inline double LearnerClipRadius(const MixtureBounds& b, std::size_t d) {
  return b.radius + 4.0 * b.sigma_max * std::sqrt(static_cast<double>(d));
}

}  // namespace internal

// Empirical mean and diagonal variance floored at sigma_min^2. With a budget,
// points are clipped to the ball of radius R + 4 sigma_max sqrt(d) and both
// statistics go through the Gaussian mechanism, each at half the budget.
inline GaussianEstimate NaiveGaussianLearner(const PointSet& s,
                                             const std::optional<PrivacyBudget>& budget,
                                             const MixtureBounds& bounds,
                                             RandomStream& rng) {
  internal::RequireArg(s.size() >= 2, "learner needs at least 2 points");
  std::size_t d = s.dim();
  double n = static_cast<double>(s.size());
  double floor = bounds.sigma_min * bounds.sigma_min;
  GaussianEstimate out;
  if (!budget) {
    out.mean = Mean(s);
    out.variances.assign(d, 0.0);
    for (std::size_t i = 0; i < s.size(); ++i) {
      for (std::size_t c = 0; c < d; ++c) {
        double diff = s[i][c] - out.mean[c];
        out.variances[c] += diff * diff;
      }
    }
    for (double& v : out.variances) v = std::max(v / (n - 1.0), floor);
    return out;
  }
  if (rng.zero_noise()) internal::WarnZeroNoise("NaiveGaussianLearner");
  double clip = internal::LearnerClipRadius(bounds, d);
  PointSet clipped = s;
  for (std::size_t i = 0; i < clipped.size(); ++i) {
    internal::ProjectToBall(clipped.mutable_point(i), clip);
  }
  PrivacyBudget half(budget->epsilon() / 2.0, budget->delta() / 2.0);
  out.mean = Mean(clipped);
  std::vector<double> noise =
      GaussianNoiseVec(GaussianSigmaFor(half, 2.0 * clip / n), d, rng);
  for (std::size_t c = 0; c < d; ++c) out.mean[c] += noise[c];
  internal::ProjectToBall(out.mean, clip);

  out.variances.assign(d, 0.0);
  for (std::size_t i = 0; i < clipped.size(); ++i) {
    for (std::size_t c = 0; c < d; ++c) {
      double diff = clipped[i][c] - out.mean[c];
      out.variances[c] += diff * diff;
    }
  }
  double reach = 2.0 * clip;
  noise = GaussianNoiseVec(GaussianSigmaFor(half, 2.0 * reach * reach / n), d, rng);
  for (std::size_t c = 0; c < d; ++c) {
    out.variances[c] = std::max(out.variances[c] / n + noise[c], floor);
  }
  return out;
}

// Two-stage learner: a private per-coordinate location from the interior
// point mechanism, then mean and variance of the values clipped to a window
// of half-width `window` * sigma_max around it. Coordinates and stages share
// the budget by basic composition, so the error scales with sigma_max
// instead of the domain radius.
struct TwoStageLearnerOptions {
  double window = 8.0;
  double mean_share = 0.5;  // fraction of the budget spent on the mean
};

namespace internal {

struct TwoStageBudget {
  double location_eps;
  double mean_eps;
  double mean_delta;
  double var_eps;
  double var_delta;
};

inline TwoStageBudget SplitTwoStage(const PrivacyBudget& b, std::size_t d,
                                    const TwoStageLearnerOptions& opt) {
  double dd = static_cast<double>(d);
  double mean_eps = b.epsilon() * opt.mean_share / dd;
  double mean_delta = b.delta() * opt.mean_share / dd;
  TwoStageBudget out;
  out.location_eps = mean_eps / 2.0;
  out.mean_eps = mean_eps / 2.0;
  out.mean_delta = mean_delta;
  out.var_eps = b.epsilon() * (1.0 - opt.mean_share) / dd;
  out.var_delta = b.delta() * (1.0 - opt.mean_share) / dd;
  return out;
}

}  // namespace internal

inline GaussianEstimate TwoStageGaussianLearner(
    const PointSet& s, const std::optional<PrivacyBudget>& budget,
    const MixtureBounds& bounds, RandomStream& rng,
    const TwoStageLearnerOptions& opt = {}) {
  if (!budget) return NaiveGaussianLearner(s, budget, bounds, rng);
  internal::RequireArg(s.size() >= 2, "learner needs at least 2 points");
  internal::RequireArg(opt.window > 0 && opt.mean_share > 0 && opt.mean_share < 1,
                       "invalid learner options");
  if (rng.zero_noise()) internal::WarnZeroNoise("TwoStageGaussianLearner");
  std::size_t d = s.dim();
  double n = static_cast<double>(s.size());
  double clip = internal::LearnerClipRadius(bounds, d);
  double half = opt.window * bounds.sigma_max;
  double floor = bounds.sigma_min * bounds.sigma_min;
  internal::TwoStageBudget split = internal::SplitTwoStage(*budget, d, opt);
  double mean_sigma = GaussianSigmaFor(PrivacyBudget(split.mean_eps, split.mean_delta),
                                       2.0 * half / n);
  double reach = 2.0 * half;
  double var_sigma = GaussianSigmaFor(PrivacyBudget(split.var_eps, split.var_delta),
                                      reach * reach / n);
  GaussianEstimate out;
  out.mean.resize(d);
  out.variances.resize(d);
  std::vector<double> column(s.size());
  for (std::size_t c = 0; c < d; ++c) {
    for (std::size_t i = 0; i < s.size(); ++i) {
      column[i] = std::clamp(s[i][c], -clip, clip);
    }
    double center = InteriorPoint1d(column, clip, bounds.sigma_min / 4.0,
                                    split.location_eps, rng);
    double sum = 0.0;
    for (double& x : column) {
      x = std::clamp(x, center - half, center + half);
      sum += x;
    }
    double mean = sum / n + GaussianNoiseVec(mean_sigma, 1, rng)[0];
    mean = std::clamp(mean, center - half, center + half);
    double sq = 0.0;
    for (double x : column) sq += (x - mean) * (x - mean);
    out.mean[c] = mean;
    out.variances[c] =
        std::max(sq / n + GaussianNoiseVec(var_sigma, 1, rng)[0], floor);
  }
  return out;
}

// Points per part that make the two-stage learner's mean error at most
// `target` with probability 1 - beta (location stage assumed successful).
inline double TwoStageLearnerSampleSize(const PrivacyBudget& budget,
                                        std::size_t d,
                                        const MixtureBounds& bounds,
                                        double beta, double target,
                                        const TwoStageLearnerOptions& opt = {}) {
  internal::TwoStageBudget split = internal::SplitTwoStage(budget, d, opt);
  double half = opt.window * bounds.sigma_max;
  double per_point = GaussianSigmaFor(PrivacyBudget(split.mean_eps, split.mean_delta),
                                      2.0 * half);
  double spread = std::sqrt(static_cast<double>(d)) +
                  std::sqrt(2.0 * std::log(2.0 / beta));
  double noise_n = per_point * spread / target;
  double sampling_n =
      std::pow(bounds.sigma_max * spread / target, 2.0);
  Grid grid(internal::LearnerClipRadius(bounds, d), bounds.sigma_min / 4.0);
  double location_n = 8.0 / split.location_eps *
                      std::log(static_cast<double>(grid.size()) * 2.0 * static_cast<double>(d) / beta);
  return std::max({noise_n + sampling_n, location_n});
}

inline GaussianLearner MakeNaiveLearner(const MixtureBounds& bounds) {
  return [bounds](const PointSet& s, const std::optional<PrivacyBudget>& b,
                  RandomStream& rng) { return NaiveGaussianLearner(s, b, bounds, rng); };
}

inline GaussianLearner MakeTwoStageLearner(const MixtureBounds& bounds,
                                           const TwoStageLearnerOptions& opt = {}) {
  return [bounds, opt](const PointSet& s, const std::optional<PrivacyBudget>& b,
                       RandomStream& rng) {
    return TwoStageGaussianLearner(s, b, bounds, rng, opt);
  };
}

struct MixtureEstimate {
  std::vector<double> weights;
  std::vector<GaussianEstimate> components;
};

struct GmmResult {
  TestStatus status = TestStatus::kFailure;
  MixtureEstimate estimate;
  CenterSet tuple_centers;
  std::size_t replaced_tuples = 0;
  std::size_t degraded_runs = 0;
  // Some part of the second half had fewer than 2 points.
  bool degraded = false;
  bool privacy_size_ok = true;

  bool ok() const { return status == TestStatus::kSuccess; }
};

struct GmmConfig {
  std::size_t k = 2;
  std::size_t s = 100;
  std::size_t t = 100;
  PrivacyBudget budget{1.0, 1e-6};
  // When set, tuples with a point outside this ball are replaced by zeros
  // before the tuple stage.
  std::optional<double> domain_lambda;
  MixtureBounds bounds;
};

// Private mixture learner: tuple stage on per-chunk empirical means of the
// first half, then per-cluster learning and noisy counts on the second half.
inline GmmResult PrivateKGmm(const PointSet& p, const GmmConfig& cfg,
                             const Labeler& labeler, const GaussianLearner& learner,
                             const TupleClusterer& tuple_clusterer,
                             RandomStream& rng) {
  internal::RequireArg(p.size() % 2 == 0, "input must hold 2n points");
  std::size_t n = p.size() / 2;
  if (n < cfg.s * cfg.t) {
    throw TooSmallError("need n >= s * t", static_cast<std::int64_t>(cfg.s * cfg.t));
  }
  if (rng.zero_noise()) internal::WarnZeroNoise("PrivateKGmm");
  std::size_t d = p.dim();
  auto split = p.flat().begin() + static_cast<std::ptrdiff_t>(n * d);
  PointSet first(d, std::vector<double>(p.flat().begin(), split));
  PointSet second(d, std::vector<double>(split, p.flat().end()));

  GmmResult out;
  RandomStream label_rng = rng.Split();
  EmpiricalMeans means = GenEmpiricalMeans(first, cfg.k, cfg.s, cfg.t, labeler, label_rng);
  out.degraded_runs = means.degraded_runs;
  if (cfg.domain_lambda) {
    out.replaced_tuples = ReplaceOutOfDomainTuples(means.tuples, *cfg.domain_lambda);
  }
  CentersResult stage = tuple_clusterer(means.tuples, rng);
  out.status = stage.status;
  out.privacy_size_ok = stage.privacy_size_ok;
  if (!stage.ok()) return out;
  out.tuple_centers = stage.centers;

  double eps = cfg.budget.epsilon();
  PrivacyBudget learner_budget(eps / 4.0, cfg.budget.delta() / 2.0);
  std::vector<PointSet> parts = PartitionByNearest(second, stage.centers);
  std::vector<double> counts;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (parts[i].size() < 2) {
      out.degraded = true;
      GaussianEstimate fallback{stage.centers[i],
                                std::vector<double>(d, cfg.bounds.sigma_max * cfg.bounds.sigma_max)};
      out.estimate.components.push_back(std::move(fallback));
    } else {
      out.estimate.components.push_back(learner(parts[i], learner_budget, rng));
    }
    double noisy = static_cast<double>(parts[i].size()) + LaplaceNoise(4.0 / eps, rng);
    counts.push_back(std::max(noisy, 0.0));
  }
  double total = std::accumulate(counts.begin(), counts.end(), 0.0);
  for (double c : counts) {
    out.estimate.weights.push_back(total > 0 ? c / total
                                             : 1.0 / static_cast<double>(counts.size()));
  }
  return out;
}

struct GmmSampleBounds {
  double separation = 0.0;  // 8 + 12 / gamma
  double s_min = 0.0;
  double n_min = 0.0;
  std::int64_t s = 0;
  std::int64_t n = 0;
};

// Per-chunk sample size s and half-sample size n sufficient for the mixture
// learner's utility guarantee; n is evaluated at s = ceil(s_min).
inline GmmSampleBounds ComputeGmmSampleBounds(double d, double k, double t,
                                              double gamma, double h,
                                              double w_min, double beta,
                                              double upsilon, double epsilon,
                                              double eta) {
  internal::RequireArg(d > 0 && k > 0 && t > 0 && gamma > 0 && h > 0 &&
                           w_min > 0 && beta > 0 && upsilon > 0 &&
                           epsilon > 0 && eta > 0,
                       "all sample-bound inputs must be > 0");
  GmmSampleBounds out;
  out.separation = 8.0 + 12.0 / gamma;
  double sep2 = out.separation * out.separation;
  out.s_min = 4.0 / w_min *
              std::max(std::log(8.0 * k * t / beta),
                       sep2 * (d + 2.0 * std::log(16.0 * k * t / beta)) /
                           ((1.0 + gamma * gamma) * h * h));
  out.s = static_cast<std::int64_t>(std::ceil(out.s_min));
  out.n_min = std::max({static_cast<double>(out.s) * t,
                        (2.0 * upsilon + std::log(16.0 * k / beta)) / w_min,
                        4.0 * k * k / (epsilon * eta) * std::log(8.0 * k / beta)});
  out.n = static_cast<std::int64_t>(std::ceil(out.n_min));
  return out;
}

// Distance beyond which a point y is farther from a spherical Gaussian draw
// than its mean with probability at least 1 - beta, in any dimension.
inline double SeparationRadius(double beta, double sigma) {
  return 2.0 * std::sqrt(2.0 * std::log(1.0 / beta)) * sigma;
}

struct ParamErrorReport {
  std::vector<std::size_t> matching;  // truth component -> estimate component
  std::vector<double> mean_errors;
  std::vector<double> scale_errors;  // max |sigma_hat - sigma| over coordinates
  std::vector<double> weight_errors;
  double max_mean_error = 0.0;
  double max_scale_error = 0.0;
  double max_weight_error = 0.0;
};

inline ParamErrorReport MixtureParamError(const MixtureParams& truth,
                                          const MixtureEstimate& est) {
  std::size_t k = truth.k();
  internal::Require(est.components.size() == k && est.weights.size() == k,
                    ErrorCode::kShapeMismatch, "component counts differ");
  std::vector<std::vector<double>> cost(k, std::vector<double>(k));
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      cost[i][j] = Distance(truth[i].mean, est.components[j].mean);
    }
  }
  std::vector<std::size_t> best(k);
  std::iota(best.begin(), best.end(), 0);
  if (k <= 8) {
    std::vector<std::size_t> perm = best;
    double best_total = std::numeric_limits<double>::infinity();
    do {
      double total = 0.0;
      for (std::size_t i = 0; i < k; ++i) total += cost[i][perm[i]];
      if (total < best_total) {
        best_total = total;
        best = perm;
      }
    } while (std::next_permutation(perm.begin(), perm.end()));
  } else {
    std::vector<bool> used_t(k, false), used_e(k, false);
    for (std::size_t round = 0; round < k; ++round) {
      double top = std::numeric_limits<double>::infinity();
      std::size_t bi = 0, bj = 0;
      for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t j = 0; j < k; ++j) {
          if (!used_t[i] && !used_e[j] && cost[i][j] < top) {
            top = cost[i][j];
            bi = i;
            bj = j;
          }
        }
      }
      used_t[bi] = used_e[bj] = true;
      best[bi] = bj;
    }
  }
  ParamErrorReport out;
  out.matching = best;
  for (std::size_t i = 0; i < k; ++i) {
    const GaussianEstimate& e = est.components[best[i]];
    double scale = 0.0;
    for (std::size_t c = 0; c < truth.d(); ++c) {
      scale = std::max(scale, std::abs(std::sqrt(e.variances[c]) -
                                       std::sqrt(truth[i].variances[c])));
    }
    out.mean_errors.push_back(cost[i][best[i]]);
    out.scale_errors.push_back(scale);
    out.weight_errors.push_back(std::abs(est.weights[best[i]] - truth[i].weight));
    out.max_mean_error = std::max(out.max_mean_error, out.mean_errors.back());
    out.max_scale_error = std::max(out.max_scale_error, scale);
    out.max_weight_error = std::max(out.max_weight_error, out.weight_errors.back());
  }
  return out;
}

}  // namespace dpclust
