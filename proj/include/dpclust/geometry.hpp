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

#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "dpclust/error.hpp"

namespace dpclust {

using Point = std::vector<double>;
using PointView = std::span<const double>;

// Dense row-major collection of points sharing one dimension.
class PointSet {
 public:
  PointSet() = default;
  explicit PointSet(std::size_t dim) : dim_(dim) {
    internal::RequireArg(dim > 0, "point dimension must be > 0");
  }
  PointSet(std::size_t dim, std::vector<double> flat)
      : dim_(dim), data_(std::move(flat)) {
    internal::RequireArg(dim > 0, "point dimension must be > 0");
    internal::Require(data_.size() % dim == 0, ErrorCode::kShapeMismatch,
                      "flat buffer is not a multiple of the dimension");
  }

  static PointSet FromPoints(const std::vector<Point>& points) {
    internal::RequireArg(!points.empty(), "cannot infer dimension of no points");
    PointSet out(points.front().size());
    for (const Point& p : points) out.Add(p);
    return out;
  }

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return dim_ == 0 ? 0 : data_.size() / dim_; }
  bool empty() const { return data_.empty(); }

  PointView operator[](std::size_t i) const {
    return PointView(data_.data() + i * dim_, dim_);
  }
  std::span<double> mutable_point(std::size_t i) {
    return std::span<double>(data_.data() + i * dim_, dim_);
  }

  void Add(PointView p) {
    internal::Require(p.size() == dim_, ErrorCode::kShapeMismatch,
                      "point dimension does not match the set");
    data_.insert(data_.end(), p.begin(), p.end());
  }
  void Reserve(std::size_t n) { data_.reserve(n * dim_); }

  const std::vector<double>& flat() const { return data_; }

 private:
  std::size_t dim_ = 0;
  std::vector<double> data_;
};

inline double SquaredDistance(PointView a, PointView b) {
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    double diff = a[i] - b[i];
    sum += diff * diff;
  }
  return sum;
}

inline double Distance(PointView a, PointView b) {
  return std::sqrt(SquaredDistance(a, b));
}

inline double Norm(PointView a) {
  double sum = 0.0;
  for (double v : a) sum += v * v;
  return std::sqrt(sum);
}

// Index of the closest center, lowest index on ties.
inline std::size_t NearestIndex(PointView x, const std::vector<Point>& centers) {
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < centers.size(); ++j) {
    double d = SquaredDistance(x, centers[j]);
    if (d < best_d) {
      best_d = d;
      best = j;
    }
  }
  return best;
}

inline Point Mean(const PointSet& points) {
  internal::RequireArg(!points.empty(), "mean of an empty set");
  Point mean(points.dim(), 0.0);
  for (std::size_t i = 0; i < points.size(); ++i) {
    PointView p = points[i];
    for (std::size_t c = 0; c < mean.size(); ++c) mean[c] += p[c];
  }
  for (double& v : mean) v /= static_cast<double>(points.size());
  return mean;
}

// Splits `points` by nearest center.
inline std::vector<PointSet> PartitionByNearest(
    const PointSet& points, const std::vector<Point>& centers) {
  std::vector<PointSet> parts(centers.size(), PointSet(points.dim()));
  for (std::size_t i = 0; i < points.size(); ++i) {
    parts[NearestIndex(points[i], centers)].Add(points[i]);
  }
  return parts;
}

}  // namespace dpclust
