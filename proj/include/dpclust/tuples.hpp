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
#include <cstddef>
#include <numeric>
#include <span>
#include <vector>

#include "dpclust/error.hpp"
#include "dpclust/geometry.hpp"

namespace dpclust {

// Read-only view of k points of dimension d stored contiguously.
struct TupleView {
  std::span<const double> data;
  std::size_t k = 0;
  std::size_t d = 0;

  PointView point(std::size_t i) const { return data.subspan(i * d, d); }
};

namespace internal {

// Reorders the k points of a flat tuple lexicographically.
inline std::vector<double> Canonicalize(std::span<const double> flat,
                                        std::size_t k, std::size_t d) {
  std::vector<std::size_t> order(k);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    auto pa = flat.subspan(a * d, d);
    auto pb = flat.subspan(b * d, d);
    return std::lexicographical_compare(pa.begin(), pa.end(), pb.begin(),
                                        pb.end());
  });
  std::vector<double> out;
  out.reserve(k * d);
  for (std::size_t i : order) {
    auto p = flat.subspan(i * d, d);
    out.insert(out.end(), p.begin(), p.end());
  }
  return out;
}

}  // namespace internal

// Unordered k-tuple of points; stored in lexicographic order so that equal
// tuples compare equal.
class KTuple {
 public:
  KTuple() = default;
  explicit KTuple(const std::vector<Point>& points) {
    internal::RequireArg(!points.empty(), "a tuple needs at least one point");
    k_ = points.size();
    d_ = points.front().size();
    internal::RequireArg(d_ > 0, "point dimension must be > 0");
    std::vector<double> flat;
    flat.reserve(k_ * d_);
    for (const Point& p : points) {
      internal::Require(p.size() == d_, ErrorCode::kShapeMismatch,
                        "tuple points have different dimensions");
      flat.insert(flat.end(), p.begin(), p.end());
    }
    data_ = internal::Canonicalize(flat, k_, d_);
  }

  std::size_t k() const { return k_; }
  std::size_t d() const { return d_; }
  PointView point(std::size_t i) const { return view().point(i); }
  TupleView view() const { return {data_, k_, d_}; }
  std::vector<Point> points() const {
    std::vector<Point> out;
    for (std::size_t i = 0; i < k_; ++i) {
      auto p = point(i);
      out.emplace_back(p.begin(), p.end());
    }
    return out;
  }

  bool operator==(const KTuple& other) const = default;

 private:
  std::size_t k_ = 0;
  std::size_t d_ = 0;
  std::vector<double> data_;
};

// Multiset of k-tuples sharing k and d.
class TupleDatabase {
 public:
  TupleDatabase(std::size_t k, std::size_t d) : k_(k), d_(d) {
    internal::RequireArg(k > 0 && d > 0, "k and d must be > 0");
  }

  std::size_t k() const { return k_; }
  std::size_t d() const { return d_; }
  std::size_t size() const { return data_.size() / (k_ * d_); }
  bool empty() const { return data_.empty(); }

  TupleView operator[](std::size_t i) const {
    return {std::span<const double>(data_).subspan(i * k_ * d_, k_ * d_), k_,
            d_};
  }

  void Add(std::span<const double> flat) {
    internal::Require(flat.size() == k_ * d_, ErrorCode::kShapeMismatch,
                      "tuple does not have k * d coordinates");
    std::vector<double> canonical = internal::Canonicalize(flat, k_, d_);
    data_.insert(data_.end(), canonical.begin(), canonical.end());
  }
  void Add(const KTuple& t) {
    internal::Require(t.k() == k_ && t.d() == d_, ErrorCode::kShapeMismatch,
                      "tuple shape does not match the database");
    Add(t.view().data);
  }
  void Add(const std::vector<Point>& points) { Add(KTuple(points)); }
  void Reserve(std::size_t n) { data_.reserve(n * k_ * d_); }

  // Replaces tuple i; used to build neighboring databases.
  void Replace(std::size_t i, const KTuple& t) {
    internal::Require(t.k() == k_ && t.d() == d_, ErrorCode::kShapeMismatch,
                      "tuple shape does not match the database");
    std::copy(t.view().data.begin(), t.view().data.end(),
              data_.begin() + static_cast<std::ptrdiff_t>(i * k_ * d_));
  }

  // All n * k points of the database.
  PointSet Points() const { return PointSet(d_, data_); }

  TupleDatabase Slice(std::size_t begin, std::size_t end) const {
    TupleDatabase out(k_, d_);
    out.data_.assign(data_.begin() + static_cast<std::ptrdiff_t>(begin * k_ * d_),
                     data_.begin() + static_cast<std::ptrdiff_t>(end * k_ * d_));
    return out;
  }

  const std::vector<double>& flat() const { return data_; }

 private:
  std::size_t k_;
  std::size_t d_;
  std::vector<double> data_;
};

}  // namespace dpclust
