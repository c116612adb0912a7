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


#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include <gtest/gtest.h>

#include "dpclust/tuple_clustering.hpp"
#include "dpclust/tuples.hpp"

namespace dpclust {
namespace {

// n tuples, one point within `radius` of each center.
TupleDatabase Clustered(const std::vector<Point>& centers, std::size_t n,
                        double radius, RandomStream& rng) {
  std::size_t d = centers.front().size();
  TupleDatabase db(centers.size(), d);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<Point> pts;
    for (const Point& c : centers) {
      Point dir(d);
      double norm = 0;
      for (double& v : dir) {
        v = rng.StandardNormal();
        norm += v * v;
      }
      double len = radius * rng.Uniform() / std::sqrt(norm);
      Point p = c;
      for (std::size_t a = 0; a < d; ++a) p[a] += len * dir[a];
      pts.push_back(p);
    }
    db.Add(pts);
  }
  return db;
}

TEST(TuplesTest, CanonicalOrderMakesTuplesUnordered) {
  KTuple a({{1, 0}, {0, 5}, {0, 1}});
  KTuple b({{0, 1}, {1, 0}, {0, 5}});
  EXPECT_EQ(a, b);
  EXPECT_THROW(KTuple(std::vector<Point>{{1, 0}, {1}}), Error);
  TupleDatabase db(2, 1);
  EXPECT_THROW(db.Add(std::vector<double>{1, 2, 3}), Error);
  db.Add(std::vector<Point>{{3}, {1}});
  EXPECT_EQ(db[0].point(0)[0], 1.0);
  EXPECT_EQ(db.Points().size(), 2u);
}

TEST(BallsTest, RadiusAndFarness) {
  KTuple x({{0, 0}, {10, 0}, {0, 40}});
  BallSet b = BallsFromTuple(x.view(), 10.0);
  // nearest distances 10, 40, 10 after canonical order (0,0), (0,40), (10,0)
  EXPECT_DOUBLE_EQ(b[0].radius, 1.0);
  EXPECT_DOUBLE_EQ(b[1].radius, 4.0);
  EXPECT_DOUBLE_EQ(b[2].radius, 1.0);
  EXPECT_TRUE(IsFarBalls(b, 10.0));
  EXPECT_FALSE(IsFarBalls(b, 11.0));
  KTuple one(std::vector<Point>{{3.0}});
  EXPECT_DOUBLE_EQ(BallsFromTuple(one.view(), 10.0, 5.0)[0].radius, 10.0);
  EXPECT_TRUE(std::isinf(BallsFromTuple(one.view(), 10.0)[0].radius));
}

TEST(BallsTest, PartitionedAndEmptySet) {
  BallSet b({Ball{{0.0}, 1.0}, Ball{{10.0}, 1.0}});
  KTuple in({{0.5}, {9.0}});
  KTuple both_in_one({{0.5}, {0.7}});
  KTuple out({{0.5}, {12.0}});
  EXPECT_TRUE(TuplePartitionedBy(in.view(), b));
  EXPECT_FALSE(TuplePartitionedBy(both_in_one.view(), b));
  EXPECT_FALSE(TuplePartitionedBy(out.view(), b));
  EXPECT_FALSE(TuplePartitionedBy(in.view(), BallSet::Empty(2, 1)));
  TupleDatabase db(2, 1);
  db.Add(in);
  db.Add(out);
  db.Add(both_in_one);
  EXPECT_EQ(CountUnpartitioned(db, b), 2u);
}

// Relabels clusters in order of first appearance so that partitions can be
// compared as equivalence relations.
std::vector<std::size_t> Normalized(const std::vector<std::size_t>& labels) {
  std::vector<std::size_t> map(labels.size() + 1, labels.size());
  std::vector<std::size_t> out;
  std::size_t next = 0;
  for (std::size_t l : labels) {
    if (map[l] == labels.size()) map[l] = next++;
    out.push_back(map[l]);
  }
  return out;
}

TEST(PartitionTest, AnchorInvariance) {
  RandomStream rng(1);
  for (int inst = 0; inst < 200; ++inst) {
    std::vector<Point> centers{{0, 0}, {100, 0}, {0, 100}};
    TupleDatabase db = Clustered(centers, 30, 100.0 / 8.0, rng);
    auto base = Normalized(PartitionOf(db, 0));
    for (std::size_t a = 1; a < db.size(); ++a) ASSERT_EQ(Normalized(PartitionOf(db, a)), base);
  }
}

TEST(PartitionTest, PermutationInvariance) {
  RandomStream rng(2);
  std::vector<Point> centers{{0.0}, {50.0}, {-80.0}};
  TupleDatabase db = Clustered(centers, 20, 2.0, rng);
  BallSet balls = BallsFromTuple(db[3], 7.0);
  std::size_t count = CountUnpartitioned(db, balls);
  // Reverse tuple order and permute points inside every tuple.
  TupleDatabase shuffled(3, 1);
  for (std::size_t i = db.size(); i-- > 0;) {
    std::vector<Point> pts{{db[i].point(2)[0]}, {db[i].point(0)[0]}, {db[i].point(1)[0]}};
    shuffled.Add(pts);
  }
  EXPECT_EQ(CountUnpartitioned(shuffled, balls), count);
  // Ball order does not matter either.
  auto bs = balls.balls();
  std::reverse(bs.begin(), bs.end());
  EXPECT_EQ(CountUnpartitioned(db, BallSet(bs)), count);
  EXPECT_EQ(IsFarBalls(BallSet(bs), 7.0), IsFarBalls(balls, 7.0));
}

TEST(TesterSizesTest, ReferenceExample) {
  TesterSizes s = ComputeM(3781, 1.0, std::exp(-28.0), 0.05);
  EXPECT_EQ(s.m, 12);
  EXPECT_NEAR(s.ell, 803.5, 0.1);
  EXPECT_DOUBLE_EQ(s.eps2, 0.5);
}

TEST(TesterSizesTest, MatchesBruteForce) {
  for (std::int64_t n : {500, 2000, 3781, 10000, 100000}) {
    for (double eps : {0.5, 1.0}) {
      double delta = 1e-9, beta = 0.05;
      double need = 2 * std::log(1 / delta) + std::log(1 / beta);
      std::int64_t m = 1;
      bool feasible = true;
      while (true) {
        double inner = eps * n / (2.0 * m) - 3;
        if (!(inner > 1)) {
          feasible = false;
          break;
        }
        if (std::log(inner) * m > need) break;
        ++m;
      }
      if (!feasible) {
        EXPECT_THROW(ComputeM(n, eps, delta, beta), TooSmallError) << n << " " << eps;
        continue;
      }
      auto s = ComputeM(n, eps, delta, beta);
      EXPECT_EQ(s.m, m) << n << " " << eps;
      EXPECT_NEAR(s.eps1, std::log(eps * n / (2.0 * m) - 3), 1e-12);
    }
  }
}

TEST(TesterSizesTest, TooSmallCarriesMinimum) {
  try {
    ComputeM(50, 1.0, 1e-9, 0.05);
    FAIL() << "expected TooSmallError";
  } catch (const TooSmallError& e) {
    EXPECT_GT(e.minimal_size(), 50);
    EXPECT_NO_THROW(ComputeM(e.minimal_size(), 1.0, 1e-9, 0.05));
    EXPECT_THROW(ComputeM(e.minimal_size() - 1, 1.0, 1e-9, 0.05), TooSmallError);
  }
}

TEST(MinTuplesTest, Window) {
  std::int64_t n = MinTuplesForPrivacy(1.0, std::exp(-28.0), 0.05);
  EXPECT_GE(n, 1890);
  EXPECT_LE(n, 7562);
  auto holds = [](std::int64_t v) {
    auto s = ComputeM(v, 0.5, std::exp(-28.0) / 4, 0.025);
    return v >= 2 * s.ell + 2;
  };
  EXPECT_TRUE(holds(n));
  EXPECT_FALSE(holds(n - 1));
}

TEST(TesterTest, SucceedsOnPartitionedDatabase) {
  RandomStream rng(3);
  TupleDatabase db = Clustered({{0.0}, {1000.0}}, 4000, 1000.0 / 16.0, rng);
  int ok = 0;
  for (int t = 0; t < 50; ++t) {
    TestOutcome o = PrivateTestPartition(db, PrivacyBudget(1.0, 1e-9), 0.05, 7.0, rng);
    if (o.status == TestStatus::kSuccess) {
      ++ok;
      EXPECT_EQ(CountUnpartitioned(db, o.balls), 0u);
    }
  }
  EXPECT_GE(ok, 48);
}

TEST(TesterTest, FailsOnUnstructuredDatabase) {
  RandomStream rng(4);
  TupleDatabase db(2, 1);
  for (int i = 0; i < 4000; ++i) db.Add(std::vector<Point>{{rng.Uniform()}, {rng.Uniform()}});
  int ok = 0;
  for (int t = 0; t < 50; ++t) {
    if (PrivateTestPartition(db, PrivacyBudget(1.0, 1e-9), 0.05, 7.0, rng).status ==
        TestStatus::kSuccess) {
      ++ok;
    }
  }
  EXPECT_LE(ok, 2);
}

TEST(TesterTest, ParameterErrors) {
  RandomStream rng(5);
  TupleDatabase db = Clustered({{0.0}, {10.0}}, 4000, 0.5, rng);
  EXPECT_THROW(PrivateTestPartition(db, PrivacyBudget(1.0, 1e-9), 0.05, 6.0, rng), Error);
  EXPECT_THROW(PrivateTestPartition(db, PrivacyBudget(2.0, 1e-9), 0.05, 7.0, rng), Error);
  EXPECT_THROW(PrivateTestPartition(db.Slice(0, 10), PrivacyBudget(1.0, 1e-9), 0.05, 7.0, rng),
               TooSmallError);
}

TEST(NoisyCentersTest, RecoversCentersAndRejectsSmallInput) {
  RandomStream rng(6);
  std::vector<Point> centers{{0.0, 0.0}, {500.0, 0.0}};
  TupleDatabase db = Clustered(centers, 5000, 0.05, rng);
  int good = 0;
  for (int t = 0; t < 20; ++t) {
    CentersResult r = PrivateKNoisyCenters(db, PrivacyBudget(1.0, 1e-9), 0.05, 2000.0, rng);
    if (r.ok() && IsGoodSolution(r.centers, db)) ++good;
  }
  EXPECT_GE(good, 18);
  EXPECT_THROW(PrivateKNoisyCenters(db.Slice(0, 500), PrivacyBudget(1.0, 1e-9), 0.05, 2000.0, rng),
               TooSmallError);
  NoisyCentersOptions lax;
  lax.enforce_privacy_size = false;
  CentersResult r =
      PrivateKNoisyCenters(db.Slice(0, 2000), PrivacyBudget(1.0, 1e-9), 0.05, 2000.0, rng, lax);
  EXPECT_FALSE(r.privacy_size_ok);
}

TEST(NoisyCentersTest, ZeroNoiseReturnsADatabaseTuple) {
  RandomStream rng(7);
  TupleDatabase db = Clustered({{0.0}, {500.0}}, 5000, 0.3, rng);
  RandomStream z(7, 0, NoiseMode::kZeroNoise);
  CentersResult r = PrivateKNoisyCenters(db, PrivacyBudget(1.0, 1e-9), 0.05, 200.0, z);
  ASSERT_TRUE(r.ok());
  KTuple out(r.centers);
  bool found = false;
  for (std::size_t i = 0; i < db.size() && !found; ++i) {
    found = std::equal(db[i].data.begin(), db[i].data.end(), out.view().data.begin());
  }
  EXPECT_TRUE(found);
}

TEST(AveragesTest, ZeroNoiseMatchesClusterMeansOnLargeInput) {
  RandomStream rng(8);
  TupleDatabase db = Clustered({{-5.0}, {5.0}}, 60000, 0.5, rng);
  RandomStream z(8, 0, NoiseMode::kZeroNoise);
  CentersResult r = PrivateKAverages(db, PrivacyBudget(1.0, 1e-9), 0.05, 0.1, 10.0, z);
  ASSERT_TRUE(r.ok());
  PointSet pts = db.Points();
  double lo = 0, hi = 0;
  std::size_t nlo = 0, nhi = 0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (pts[i][0] < 0) {
      lo += pts[i][0];
      ++nlo;
    } else {
      hi += pts[i][0];
      ++nhi;
    }
  }
  std::vector<double> got{r.centers[0][0], r.centers[1][0]};
  std::sort(got.begin(), got.end());
  // Zero noise leaves only grid snapping of the segments, which may trim a
  // thin tail of each cluster.
  EXPECT_NEAR(got[0], lo / nlo, 0.05);
  EXPECT_NEAR(got[1], hi / nhi, 0.05);
}

TEST(AveragesTest, DomainChecks) {
  RandomStream rng(9);
  TupleDatabase db = Clustered({{-5.0}, {5.0}}, 5000, 0.5, rng);
  EXPECT_THROW(PrivateKAverages(db, PrivacyBudget(1.0, 1e-9), 0.05, 0.1, 4.0, rng), Error);
  EXPECT_THROW(PrivateKAverages(db, PrivacyBudget(1.0, 1e-9), 0.05, 0.0, 10.0, rng), Error);
  TupleDatabase copy = db;
  copy.Replace(0, KTuple({{-50.0}, {5.0}}));
  EXPECT_EQ(ReplaceOutOfDomainTuples(copy, 10.0), 1u);
  EXPECT_EQ(copy[0].point(0)[0], 0.0);
}

TEST(AveragesTest, BudgetSplit) {
  PrivacyBudget b(1.0, 1e-6);
  AveragesSplit s = AveragesBudgetSplit(100000, 3, b, 0.05);
  double ell = EllBound(100000, 0.5, 0.25e-6, 0.025);
  EXPECT_DOUBLE_EQ(s.ell, ell);
  EXPECT_DOUBLE_EQ(s.epsilon, 1.0 / (12.0 * (ell + 1)));
  EXPECT_DOUBLE_EQ(s.delta, 1e-6 / (24.0 * std::exp(0.5) * (ell + 1)));
  EXPECT_DOUBLE_EQ(s.beta, 0.05 / 6.0);
}

TEST(GoodSolutionTest, Definition) {
  RandomStream rng(10);
  TupleDatabase db = Clustered({{0.0}, {100.0}}, 50, 1.0, rng);
  EXPECT_TRUE(IsGoodSolution({{1.0}, {99.0}}, db));
  EXPECT_TRUE(IsGoodSolution({{99.0}, {1.0}}, db));
  EXPECT_FALSE(IsGoodSolution({{1.0}, {-5.0}}, db));
  EXPECT_FALSE(IsGoodSolution({{1.0}}, db));
}

}  // namespace
}  // namespace dpclust
