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
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "dpclust/error.hpp"
#include "dpclust/geometry.hpp"
#include "dpclust/mechanisms.hpp"
#include "dpclust/random.hpp"
#include "dpclust/scalar_estimators.hpp"
#include "dpclust/tuples.hpp"

namespace dpclust {

struct Ball {
  Point center;
  double radius = 0.0;
};

// k balls, or the distinguished empty set that partitions nothing.
class BallSet {
 public:
  BallSet() = default;
  explicit BallSet(std::vector<Ball> balls) : balls_(std::move(balls)) {}

  static BallSet Empty(std::size_t k, std::size_t d) {
    BallSet out(std::vector<Ball>(k, Ball{Point(d, 0.0), 0.0}));
    out.empty_ = true;
    return out;
  }

  bool is_empty() const { return empty_; }
  std::size_t size() const { return balls_.size(); }
  const Ball& operator[](std::size_t i) const { return balls_[i]; }
  const std::vector<Ball>& balls() const { return balls_; }

  std::vector<Point> centers() const {
    std::vector<Point> out;
    for (const Ball& b : balls_) out.push_back(b.center);
    return out;
  }

 private:
  std::vector<Ball> balls_;
  bool empty_ = false;
};

// Balls centered at the tuple points with radius (1 / delta_sep) times the
// distance to the closest other point. For k = 1 the radius is 2 * lambda,
// or infinite when no domain radius is given.
inline BallSet BallsFromTuple(TupleView x, double delta_sep,
                              std::optional<double> lambda = std::nullopt) {
  internal::RequireArg(delta_sep > 0, "separation must be > 0");
  std::vector<Ball> balls(x.k);
  for (std::size_t i = 0; i < x.k; ++i) {
    double nearest = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < x.k; ++j) {
      if (j != i) nearest = std::min(nearest, Distance(x.point(i), x.point(j)));
    }
    auto p = x.point(i);
    balls[i].center.assign(p.begin(), p.end());
    if (x.k == 1) {
      balls[i].radius = lambda ? 2.0 * *lambda
                               : std::numeric_limits<double>::infinity();
    } else {
      balls[i].radius = nearest / delta_sep;
    }
  }
  return BallSet(std::move(balls));
}

// True iff every pair of centers is at least delta_sep times the larger of
// the two radii apart.
inline bool IsFarBalls(const BallSet& balls, double delta_sep) {
  for (std::size_t i = 0; i < balls.size(); ++i) {
    for (std::size_t j = i + 1; j < balls.size(); ++j) {
      double gap = Distance(balls[i].center, balls[j].center);
      if (gap < delta_sep * std::max(balls[i].radius, balls[j].radius)) {
        return false;
      }
    }
  }
  return true;
}

// True iff each ball contains exactly one point of `y`, boundary included.
inline bool TuplePartitionedBy(TupleView y, const BallSet& balls) {
  if (balls.is_empty() || balls.size() != y.k) return false;
  for (std::size_t i = 0; i < balls.size(); ++i) {
    int inside = 0;
    for (std::size_t j = 0; j < y.k; ++j) {
      if (Distance(y.point(j), balls[i].center) <= balls[i].radius) ++inside;
    }
    if (inside != 1) return false;
  }
  return true;
}

inline std::size_t CountUnpartitioned(const TupleDatabase& t,
                                      const BallSet& balls) {
  std::size_t count = 0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (!TuplePartitionedBy(t[i], balls)) ++count;
  }
  return count;
}

// Cluster label of every database point (index i * k + j for point j of
// tuple i): the index of the closest point of the anchor tuple.
inline std::vector<std::size_t> PartitionOf(const TupleDatabase& t,
                                            std::size_t anchor = 0) {
  internal::RequireArg(anchor < t.size(), "anchor tuple out of range");
  TupleView x = t[anchor];
  std::vector<std::size_t> labels(t.size() * t.k());
  for (std::size_t i = 0; i < t.size(); ++i) {
    TupleView y = t[i];
    for (std::size_t j = 0; j < t.k(); ++j) {
      std::size_t best = 0;
      double best_d = std::numeric_limits<double>::infinity();
      for (std::size_t c = 0; c < t.k(); ++c) {
        double dist = Distance(y.point(j), x.point(c));
        if (dist < best_d) {
          best_d = dist;
          best = c;
        }
      }
      labels[i * t.k() + j] = best;
    }
  }
  return labels;
}

struct TesterSizes {
  std::int64_t m = 0;
  double eps1 = 0.0;
  double eps2 = 0.0;
  double ell = 0.0;
};

namespace internal {

inline std::optional<TesterSizes> TryComputeM(std::int64_t n, double epsilon,
                                              double delta, double beta) {
  double numerator = 2.0 * std::log(1.0 / delta) + std::log(1.0 / beta);
  for (std::int64_t m = 1;; ++m) {
    double inner = epsilon * static_cast<double>(n) / (2.0 * m) - 3.0;
    if (!(inner > 1.0)) return std::nullopt;
    double eps1 = std::log(inner);
    if (static_cast<double>(m) > numerator / eps1) {
      TesterSizes out;
      out.m = m;
      out.eps1 = eps1;
      out.eps2 = epsilon / 2.0;
      out.ell = 2.0 * m / epsilon * std::log(m / (beta * delta));
      return out;
    }
  }
}

inline void CheckTesterParams(double epsilon, double delta, double beta) {
  RequireArg(std::isfinite(epsilon) && epsilon > 0 && epsilon <= 1,
             "epsilon must lie in (0, 1]");
  RequireArg(delta > 0 && delta <= 1, "delta must lie in (0, 1]");
  RequireArg(beta > 0 && beta < 1, "beta must lie in (0, 1)");
}

}  // namespace internal

// Sample size m of the tester and the derived eps1, eps2 = eps / 2 and
// nearly-partitioned slack ell = (2m / eps) ln(m / (beta delta)).
inline TesterSizes ComputeM(std::int64_t n, double epsilon, double delta,
                            double beta) {
  internal::CheckTesterParams(epsilon, delta, beta);
  internal::RequireArg(n > 0, "database size must be > 0");
  if (auto sizes = internal::TryComputeM(n, epsilon, delta, beta)) return *sizes;
  std::int64_t hi = std::max<std::int64_t>(n, 1);
  while (!internal::TryComputeM(hi, epsilon, delta, beta)) hi *= 2;
  std::int64_t lo = hi / 2;
  while (hi - lo > 1) {
    std::int64_t mid = lo + (hi - lo) / 2;
    if (internal::TryComputeM(mid, epsilon, delta, beta)) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  throw TooSmallError("no tester sample size m exists for n = " +
                          std::to_string(n) + "; smallest feasible n is " +
                          std::to_string(hi),
                      hi);
}

inline double EllBound(std::int64_t n, double epsilon, double delta,
                       double beta) {
  return ComputeM(n, epsilon, delta, beta).ell;
}

namespace internal {

inline bool MeetsPrivacySize(std::int64_t n, double epsilon, double delta,
                             double beta) {
  auto sizes = TryComputeM(n, epsilon / 2.0, delta / 4.0, beta / 2.0);
  return sizes && static_cast<double>(n) >= 2.0 * sizes->ell + 2.0;
}

}  // namespace internal

// Smallest n with n >= 2 ell(n, eps/2, delta/4, beta/2) + 2, the database
// size the tuple clusterers need for their privacy argument.
inline std::int64_t MinTuplesForPrivacy(double epsilon, double delta,
                                        double beta,
                                        std::int64_t cap = 10'000'000) {
  internal::CheckTesterParams(epsilon, delta, beta);
  std::int64_t hi = 1;
  while (!internal::MeetsPrivacySize(hi, epsilon, delta, beta)) {
    if (hi >= cap) {
      throw TooSmallError("no database size up to the cap satisfies the bound",
                          0);
    }
    hi = std::min(hi * 2, cap);
  }
  std::int64_t lo = hi / 2;
  while (hi - lo > 1) {
    std::int64_t mid = lo + (hi - lo) / 2;
    if (internal::MeetsPrivacySize(mid, epsilon, delta, beta)) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return hi;
}

enum class TestStatus { kSuccess, kFailure };

struct TestOutcome {
  TestStatus status = TestStatus::kFailure;
  BallSet balls;
  std::size_t passes = 0;
  double noisy_passes = 0.0;
  double threshold = 0.0;

  bool success() const { return status == TestStatus::kSuccess; }
};

// Decides privately whether the tuples of `t2` are mostly partitioned by the
// balls induced by the candidate tuples of `t1`.
inline TestOutcome PrivateTestCloseTuples(
    const TupleDatabase& t1, const TupleDatabase& t2, double eps1, double eps2,
    double beta, double delta_sep, RandomStream& rng,
    std::optional<double> lambda = std::nullopt) {
  internal::RequireArg(!t1.empty(), "candidate tuples must be non-empty");
  internal::RequireArg(eps1 > 0 && eps2 > 0, "epsilons must be > 0");
  internal::RequireArg(beta > 0 && beta < 1, "beta must lie in (0, 1)");
  internal::Require(t1.k() == t2.k() && t1.d() == t2.d(),
                    ErrorCode::kShapeMismatch, "tuple shapes differ");
  if (rng.zero_noise()) internal::WarnZeroNoise("PrivateTestCloseTuples");
  double m = static_cast<double>(t1.size());
  double count_scale = m / eps2;
  double pass_limit = count_scale * std::log(m / beta);

  TestOutcome out;
  std::optional<BallSet> first_pass;
  for (std::size_t i = 0; i < t1.size(); ++i) {
    BallSet balls = BallsFromTuple(t1[i], delta_sep, lambda);
    double noisy = static_cast<double>(CountUnpartitioned(t2, balls)) +
                   LaplaceNoise(count_scale, rng);
    if (noisy <= pass_limit) {
      ++out.passes;
      if (!first_pass) first_pass = std::move(balls);
    }
  }
  out.noisy_passes =
      static_cast<double>(out.passes) + LaplaceNoise(1.0 / eps1, rng);
  out.threshold = m - std::log(1.0 / beta) / eps1;
  if (out.noisy_passes < out.threshold) {
    out.status = TestStatus::kFailure;
    return out;
  }
  out.status = TestStatus::kSuccess;
  out.balls = first_pass ? *first_pass : BallSet::Empty(t1.k(), t1.d());
  return out;
}

inline TupleDatabase SampleWithoutReplacement(const TupleDatabase& t,
                                              std::size_t m,
                                              RandomStream& rng) {
  internal::RequireArg(m <= t.size(), "sample larger than the database");
  std::vector<std::size_t> index(t.size());
  std::iota(index.begin(), index.end(), 0);
  TupleDatabase out(t.k(), t.d());
  out.Reserve(m);
  for (std::size_t i = 0; i < m; ++i) {
    std::size_t j = i + rng.UniformIndex(t.size() - i);
    std::swap(index[i], index[j]);
    out.Add(t[index[i]].data);
  }
  return out;
}

inline TestOutcome PrivateTestPartition(
    const TupleDatabase& t, const PrivacyBudget& budget, double beta,
    double delta_sep, RandomStream& rng,
    std::optional<double> lambda = std::nullopt) {
  internal::RequireArg(delta_sep > 6, "separation must be > 6");
  TesterSizes sizes = ComputeM(static_cast<std::int64_t>(t.size()),
                               budget.epsilon(), budget.delta(), beta);
  TupleDatabase t1 =
      SampleWithoutReplacement(t, static_cast<std::size_t>(sizes.m), rng);
  return PrivateTestCloseTuples(t1, t, sizes.eps1, sizes.eps2, beta, delta_sep,
                                rng, lambda);
}

struct CentersResult {
  TestStatus status = TestStatus::kFailure;
  std::vector<Point> centers;
  TestOutcome test;
  // False when the database is smaller than the privacy size bound and the
  // caller asked to run anyway.
  bool privacy_size_ok = true;

  bool ok() const { return status == TestStatus::kSuccess; }
};

namespace internal {

inline void RequireInBall(const TupleDatabase& t, double lambda) {
  PointSet points = t.Points();
  for (std::size_t i = 0; i < points.size(); ++i) {
    Require(Norm(points[i]) <= lambda, ErrorCode::kOutOfDomain,
            "tuple point lies outside the ball of radius lambda");
  }
}

inline void RequirePrivacySize(const TupleDatabase& t, double epsilon,
                               double delta, double beta) {
  std::int64_t n = static_cast<std::int64_t>(t.size());
  if (!MeetsPrivacySize(n, epsilon, delta, beta)) {
    std::int64_t need = MinTuplesForPrivacy(epsilon, delta, beta);
    throw TooSmallError("database of " + std::to_string(n) +
                            " tuples is below the privacy size bound " +
                            std::to_string(need),
                        need);
  }
}

}  // namespace internal

// Replaces every tuple with a point outside the ball of radius lambda by the
// all-zeros tuple. Returns how many tuples were replaced.
inline std::size_t ReplaceOutOfDomainTuples(TupleDatabase& t, double lambda) {
  std::size_t replaced = 0;
  KTuple zeros(std::vector<Point>(t.k(), Point(t.d(), 0.0)));
  for (std::size_t i = 0; i < t.size(); ++i) {
    TupleView y = t[i];
    bool outside = false;
    for (std::size_t j = 0; j < y.k && !outside; ++j) {
      outside = !(Norm(y.point(j)) <= lambda);
    }
    if (outside) {
      t.Replace(i, zeros);
      ++replaced;
    }
  }
  return replaced;
}

// Budget and confidence handed to each per-cluster average.
struct AveragesSplit {
  double ell = 0.0;
  double epsilon = 0.0;
  double delta = 0.0;
  double beta = 0.0;
};

inline AveragesSplit AveragesBudgetSplit(std::int64_t n, std::size_t k,
                                         const PrivacyBudget& budget,
                                         double beta) {
  double eps = budget.epsilon();
  double kk = static_cast<double>(k);
  AveragesSplit out;
  out.ell = EllBound(n, eps / 2.0, budget.delta() / 4.0, beta / 2.0);
  out.epsilon = eps / (4.0 * kk * (out.ell + 1.0));
  out.delta =
      budget.delta() / (8.0 * kk * std::exp(eps / 2.0) * (out.ell + 1.0));
  out.beta = beta / (2.0 * kk);
  return out;
}

// Tests for a clear k-cluster structure, then privately averages each
// cluster of database points.
inline CentersResult PrivateKAverages(const TupleDatabase& t,
                                      const PrivacyBudget& budget, double beta,
                                      double r_min, double lambda,
                                      RandomStream& rng) {
  internal::CheckTesterParams(budget.epsilon(), budget.delta(), beta);
  internal::RequireArg(std::isfinite(lambda) && lambda > 0,
                       "domain radius must be finite and > 0");
  internal::RequireArg(std::isfinite(r_min) && r_min > 0,
                       "minimal radius must be finite and > 0");
  internal::RequireArg(!t.empty(), "empty tuple database");
  internal::RequireInBall(t, lambda);
  internal::RequirePrivacySize(t, budget.epsilon(), budget.delta(), beta);
  if (rng.zero_noise()) internal::WarnZeroNoise("PrivateKAverages");

  CentersResult out;
  out.test = PrivateTestPartition(
      t, PrivacyBudget(budget.epsilon() / 2.0, budget.delta() / 4.0),
      beta / 2.0, 7.0, rng, lambda);
  out.status = out.test.status;
  if (!out.ok()) return out;

  AveragesSplit split = AveragesBudgetSplit(static_cast<std::int64_t>(t.size()),
                                            t.k(), budget, beta);
  std::vector<PointSet> clusters =
      PartitionByNearest(t.Points(), out.test.balls.centers());
  for (const PointSet& cluster : clusters) {
    out.centers.push_back(PrivateAverageRd(cluster, lambda, r_min,
                                           PrivacyBudget(split.epsilon, split.delta),
                                           split.beta, rng));
  }
  return out;
}

struct NoisyCentersOptions {
  // Needed only for k = 1, where it fixes the ball radius.
  std::optional<double> lambda;
  // When false, databases below MinTuplesForPrivacy are processed and the
  // result is flagged instead of rejected.
  bool enforce_privacy_size = true;
};

// Tests for a clear k-cluster structure, then releases one database tuple
// with Gaussian noise scaled to its own inter-point distances.
inline CentersResult PrivateKNoisyCenters(const TupleDatabase& t,
                                          const PrivacyBudget& budget,
                                          double beta, double delta_sep,
                                          RandomStream& rng,
                                          const NoisyCentersOptions& options = {}) {
  internal::CheckTesterParams(budget.epsilon(), budget.delta(), beta);
  internal::RequireArg(budget.delta() <= 0.5, "delta must be <= 1/2");
  internal::RequireArg(delta_sep > 6, "separation must be > 6");
  internal::RequireArg(!t.empty(), "empty tuple database");
  internal::RequireArg(t.k() > 1 || options.lambda.has_value(),
                       "k = 1 needs a domain radius");
  CentersResult out;
  out.privacy_size_ok = internal::MeetsPrivacySize(
      static_cast<std::int64_t>(t.size()), budget.epsilon(), budget.delta(),
      beta);
  if (options.enforce_privacy_size && !out.privacy_size_ok) {
    internal::RequirePrivacySize(t, budget.epsilon(), budget.delta(), beta);
  }
  if (rng.zero_noise()) internal::WarnZeroNoise("PrivateKNoisyCenters");

  double eps = budget.epsilon();
  double delta = budget.delta();
  double k = static_cast<double>(t.k());
  out.test = PrivateTestPartition(t, PrivacyBudget(eps / 2.0, delta / 4.0),
                                  beta / 2.0, delta_sep, rng, options.lambda);
  out.status = out.test.status;
  if (!out.ok()) return out;

  std::vector<Point> centers = out.test.balls.centers();
  double laplace_scale = 4.0 * k / eps;
  double gauss_factor = 4.0 * k / eps * std::sqrt(2.0 * std::log(10.0 * k / delta));
  for (std::size_t i = 0; i < centers.size(); ++i) {
    double gamma = 4.0 / (delta_sep - 2.0) *
                   (LaplaceNoise(laplace_scale, rng) +
                    laplace_scale * std::log(4.0 * k / delta) + 1.0);
    double nearest = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < centers.size(); ++j) {
      if (j != i) nearest = std::min(nearest, Distance(centers[i], centers[j]));
    }
    if (centers.size() == 1) nearest = 2.0 * *options.lambda;
    double spread = 2.0 / delta_sep * (1.0 + gamma) * nearest;
    // The noise law depends on sigma only through sigma^2.
    double sigma = std::abs(gauss_factor * spread);
    std::vector<double> noise = GaussianNoiseVec(sigma, t.d(), rng);
    Point noisy = centers[i];
    for (std::size_t c = 0; c < noisy.size(); ++c) noisy[c] += noise[c];
    out.centers.push_back(std::move(noisy));
  }
  return out;
}

// True iff assigning every database point to its closest center of `y`
// reproduces the database partition exactly, one center per cluster.
inline bool IsGoodSolution(const std::vector<Point>& y, const TupleDatabase& t) {
  if (y.size() != t.k() || t.empty()) return false;
  std::vector<std::size_t> labels = PartitionOf(t);
  std::vector<std::size_t> cluster_to_center(t.k(), t.k());
  std::vector<std::size_t> center_to_cluster(t.k(), t.k());
  PointSet points = t.Points();
  for (std::size_t i = 0; i < points.size(); ++i) {
    std::size_t c = NearestIndex(points[i], y);
    std::size_t label = labels[i];
    if (cluster_to_center[label] == t.k() && center_to_cluster[c] == t.k()) {
      cluster_to_center[label] = c;
      center_to_cluster[c] = label;
    }
    if (cluster_to_center[label] != c || center_to_cluster[c] != label) {
      return false;
    }
  }
  return true;
}

// Additive error bound of PrivateKAverages; `scale` stands in for the
// unspecified absolute constant.
inline double AlphaBound(std::int64_t n, std::size_t k, std::size_t d,
                         const PrivacyBudget& budget, double beta, double r_min,
                         double lambda, double scale = 1.0) {
  double ell = EllBound(n, budget.epsilon() / 2.0, budget.delta() / 4.0,
                        beta / 2.0);
  double kk = static_cast<double>(k);
  double dd = static_cast<double>(d);
  double delta = budget.delta();
  double lead = scale * dd * kk * ell * std::sqrt(std::log(kk * ell / delta)) /
                (budget.epsilon() * static_cast<double>(n));
  double tail = std::sqrt(std::log(dd * kk * ell / delta) *
                          std::log(dd * kk * ell / beta)) +
                std::log(lambda * dd * kk / (r_min * beta));
  return lead * tail;
}

}  // namespace dpclust
