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
#include <cstdint>
#include <span>
#include <vector>

#include "dpclust/error.hpp"
#include "dpclust/geometry.hpp"
#include "dpclust/mechanisms.hpp"
#include "dpclust/random.hpp"

namespace dpclust {

struct Segment {
  double lo = 0.0;
  double hi = 0.0;

  double width() const { return hi - lo; }
  double midpoint() const { return 0.5 * (lo + hi); }
  bool Contains(double x) const { return lo <= x && x <= hi; }
};

// Grid {-lambda + i * step : i = 0..ceil(2 lambda / step)} over [-lambda, lambda].
class Grid {
 public:
  Grid(double lambda, double step) : lambda_(lambda), step_(step) {
    internal::RequireArg(std::isfinite(lambda) && lambda > 0,
                         "domain radius must be finite and > 0");
    internal::RequireArg(std::isfinite(step) && step > 0,
                         "grid step must be finite and > 0");
    double cells = std::ceil(2.0 * lambda / step);
    internal::RequireArg(cells < 1e15, "grid is too fine for the domain");
    last_ = static_cast<std::int64_t>(cells);
  }

  double lambda() const { return lambda_; }
  double step() const { return step_; }
  std::int64_t last_index() const { return last_; }
  std::int64_t size() const { return last_ + 1; }

  double At(std::int64_t i) const {
    return -lambda_ + static_cast<double>(i) * step_;
  }
  std::int64_t LeftIndex(double x) const {
    return Clamp(static_cast<std::int64_t>(std::floor((x + lambda_) / step_)));
  }
  std::int64_t RightIndex(double x) const {
    return Clamp(static_cast<std::int64_t>(std::ceil((x + lambda_) / step_)));
  }
  double Left(double x) const { return At(LeftIndex(x)); }
  double Right(double x) const { return At(RightIndex(x)); }

 private:
  std::int64_t Clamp(std::int64_t i) const {
    return std::clamp<std::int64_t>(i, 0, last_);
  }

  double lambda_;
  double step_;
  std::int64_t last_;
};

namespace internal {

inline void RequireInDomain(std::span<const double> values, double lambda) {
  for (double x : values) {
    Require(std::isfinite(x) && std::abs(x) <= lambda, ErrorCode::kOutOfDomain,
            "value lies outside [-lambda, lambda]");
  }
}

}  // namespace internal

// Grid point y maximizing min(#{x : left(x) <= y}, #{x : right(x) >= y}) up to
// the exponential mechanism. Runs in O(n log n) by grouping grid points into
// runs of constant quality.
inline double InteriorPoint1d(std::span<const double> values, double lambda,
                              double grid_step, double epsilon,
                              RandomStream& rng) {
  internal::RequireArg(std::isfinite(epsilon) && epsilon > 0,
                       "epsilon must be finite and > 0");
  Grid grid(lambda, grid_step);
  internal::RequireInDomain(values, lambda);
  if (rng.zero_noise()) internal::WarnZeroNoise("InteriorPoint1d");

  std::vector<std::int64_t> lefts;
  std::vector<std::int64_t> rights;
  std::vector<std::int64_t> cuts;
  lefts.reserve(values.size());
  rights.reserve(values.size());
  cuts.reserve(4 * values.size() + 1);
  for (double x : values) {
    std::int64_t l = grid.LeftIndex(x);
    std::int64_t r = grid.RightIndex(x);
    lefts.push_back(l);
    rights.push_back(r);
    for (std::int64_t c : {l - 1, l, r, r + 1}) {
      if (c >= 0 && c <= grid.last_index()) cuts.push_back(c);
    }
  }
  cuts.push_back(grid.last_index());
  std::sort(lefts.begin(), lefts.end());
  std::sort(rights.begin(), rights.end());
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

  // Run i covers grid indices (cuts[i-1], cuts[i]] with cuts[-1] = -1.
  std::vector<double> log_weights(cuts.size());
  std::vector<double> quality(cuts.size());
  std::int64_t prev = -1;
  for (std::size_t i = 0; i < cuts.size(); ++i) {
    std::int64_t j = cuts[i];
    auto left_le =
        std::upper_bound(lefts.begin(), lefts.end(), j) - lefts.begin();
    auto right_ge =
        rights.end() - std::lower_bound(rights.begin(), rights.end(), j);
    double q = static_cast<double>(std::min(left_le, right_ge));
    quality[i] = q;
    log_weights[i] =
        epsilon * q / 2.0 + std::log(static_cast<double>(j - prev));
    prev = j;
  }
  std::size_t run = SampleFromLogWeights(log_weights, quality, rng);
  std::int64_t first = run == 0 ? 0 : cuts[run - 1] + 1;
  std::int64_t count = cuts[run] - first + 1;
  std::int64_t offset =
      rng.zero_noise()
          ? 0
          : static_cast<std::int64_t>(
                rng.UniformIndex(static_cast<std::uint64_t>(count)));
  return grid.At(first + offset);
}

// Segment that contains most of the input, of width about the data spread
// plus two grid steps. Small inputs collapse to a single interior point.
inline Segment BoundingSegment1d(std::span<const double> values, double lambda,
                                 double grid_step, double epsilon, double beta,
                                 RandomStream& rng) {
  internal::RequireArg(std::isfinite(epsilon) && epsilon > 0,
                       "epsilon must be finite and > 0");
  internal::RequireArg(beta > 0 && beta < 1, "beta must lie in (0, 1)");
  Grid grid(lambda, grid_step);
  internal::RequireInDomain(values, lambda);

  double log_term = std::log(4.0 * lambda / (grid_step * beta));
  double needed = 8.0 / epsilon * log_term + 2.0;
  if (static_cast<double>(values.size()) < needed) {
    double x = InteriorPoint1d(values, lambda, grid_step, epsilon, rng);
    return {x, x};
  }
  std::size_t tail = static_cast<std::size_t>(
      std::ceil(4.0 / epsilon * log_term + 1.0));
  tail = std::min(tail, values.size());
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  std::span<const double> all(sorted);
  double low = InteriorPoint1d(all.first(tail), lambda, grid_step, epsilon, rng);
  double high = InteriorPoint1d(all.last(tail), lambda, grid_step, epsilon, rng);
  if (low > high) std::swap(low, high);
  return {low - grid_step, high + grid_step};
}

struct Average1dResult {
  double value = 0.0;
  Segment segment;
  std::size_t kept = 0;
};

// Noisy average of the values that fall inside a privately chosen segment.
inline Average1dResult PrivateAverage1d(std::span<const double> values,
                                        double lambda, double r_min,
                                        const PrivacyBudget& budget,
                                        double beta, RandomStream& rng) {
  internal::RequireArg(std::isfinite(r_min) && r_min > 0,
                       "minimal radius must be finite and > 0");
  Average1dResult out;
  out.segment = BoundingSegment1d(values, lambda, r_min, budget.epsilon() / 2.0,
                                  beta / 2.0, rng);
  double sum = 0.0;
  for (double x : values) {
    if (out.segment.Contains(x)) {
      sum += x;
      ++out.kept;
    }
  }
  if (out.kept == 0) {
    out.value = out.segment.midpoint();
    return out;
  }
  double sensitivity = out.segment.width() / static_cast<double>(out.kept);
  double sigma = GaussianSigmaFor(
      PrivacyBudget(budget.epsilon() / 2.0, budget.delta()), sensitivity);
  out.value = sum / static_cast<double>(out.kept) +
              GaussianNoiseVec(sigma, 1, rng)[0];
  return out;
}

// Per-coordinate budget used by PrivateAverageRd.
inline double PerCoordinateEpsilon(double epsilon, double delta,
                                   std::size_t dim) {
  return epsilon /
         (2.0 * std::sqrt(2.0 * static_cast<double>(dim) * std::log(2.0 / delta)));
}

// Coordinate-wise private average of points inside the ball of radius lambda.
inline Point PrivateAverageRd(const PointSet& points, double lambda,
                              double r_min, const PrivacyBudget& budget,
                              double beta, RandomStream& rng) {
  std::size_t dim = points.dim();
  internal::RequireArg(dim > 0, "point dimension must be > 0");
  double d = static_cast<double>(dim);
  PrivacyBudget per_coord(PerCoordinateEpsilon(budget.epsilon(), budget.delta(), dim),
                          budget.delta() / d);
  Point out(dim);
  std::vector<double> column(points.size());
  for (std::size_t c = 0; c < dim; ++c) {
    for (std::size_t i = 0; i < points.size(); ++i) column[i] = points[i][c];
    out[c] = PrivateAverage1d(column, lambda, r_min, per_coord, beta / d, rng)
                 .value;
  }
  return out;
}

inline Point PrivateAverageRd(const std::vector<Point>& points,
                              std::size_t dim, double lambda, double r_min,
                              const PrivacyBudget& budget, double beta,
                              RandomStream& rng) {
  PointSet set(dim);
  for (const Point& p : points) {
    internal::Require(p.size() == dim, ErrorCode::kShapeMismatch,
                      "point dimension does not match");
    set.Add(p);
  }
  return PrivateAverageRd(set, lambda, r_min, budget, beta, rng);
}

}  // namespace dpclust
