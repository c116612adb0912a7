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


#include <cmath>
#include <numeric>
#include <set>
#include <vector>

#include <gtest/gtest.h>

#include "dpclust/mechanisms.hpp"
#include "dpclust/random.hpp"

namespace dpclust {
namespace {

TEST(RandomStreamTest, SameSeedSameSequence) {
  RandomStream a(42, 3), b(42, 3);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(a.Uniform(), b.Uniform());
}

TEST(RandomStreamTest, ChildrenAreKeyedAndDistinct) {
  RandomStream root(7);
  RandomStream c1 = root.Child(1), c1b = root.Child(1), c2 = root.Child(2);
  EXPECT_EQ(c1.Uniform(), c1b.Uniform());
  EXPECT_NE(root.Child(1).Uniform(), c2.Uniform());
  RandomStream s = root;
  RandomStream x = s.Split(), y = s.Split();
  EXPECT_NE(x.stream_id(), y.stream_id());
}

TEST(RandomStreamTest, UniformIsOpenInterval) {
  RandomStream rng(1);
  for (int i = 0; i < 100000; ++i) {
    double u = rng.Uniform();
    ASSERT_GT(u, 0.0);
    ASSERT_LT(u, 1.0);
  }
}

TEST(PrivacyBudgetTest, RejectsBadValues) {
  EXPECT_THROW(PrivacyBudget(0.0, 0.1), Error);
  EXPECT_THROW(PrivacyBudget(-1.0, 0.1), Error);
  EXPECT_THROW(PrivacyBudget(INFINITY, 0.1), Error);
  EXPECT_THROW(PrivacyBudget(1.0, 0.0), Error);
  EXPECT_THROW(PrivacyBudget(1.0, 1.5), Error);
  EXPECT_NO_THROW(PrivacyBudget(1.0, 1.0));
}

TEST(LaplaceTest, MomentsAndTail) {
  RandomStream rng(11);
  const int n = 200000;
  const double b = 2.0;
  double sum = 0, abs_sum = 0;
  int tail = 0;
  for (int i = 0; i < n; ++i) {
    double x = LaplaceNoise(b, rng);
    sum += x;
    abs_sum += std::abs(x);
    if (std::abs(x) > 3 * b) ++tail;
  }
  EXPECT_NEAR(sum / n, 0.0, 0.03);
  EXPECT_NEAR(abs_sum / n, b, 0.03);
  // P(|X| > t b) = e^-t
  EXPECT_NEAR(static_cast<double>(tail) / n, std::exp(-3.0), 0.003);
}

TEST(LaplaceTest, ZeroNoiseAndErrors) {
  RandomStream z(1, 0, NoiseMode::kZeroNoise);
  EXPECT_EQ(LaplaceNoise(5.0, z), 0.0);
  RandomStream rng(1);
  EXPECT_THROW(LaplaceNoise(0.0, rng), Error);
  EXPECT_THROW(LaplaceNoise(NAN, rng), Error);
}

TEST(GaussianTest, SigmaFormula) {
  // 1 / 0.5 * sqrt(2 ln 25)
  EXPECT_NEAR(GaussianSigmaFor(PrivacyBudget(0.5, 0.05), 1.0), 5.0745, 1e-3);
  EXPECT_THROW(GaussianSigmaFor(PrivacyBudget(1.0, 0.05), 1.0), Error);
  EXPECT_THROW(GaussianSigmaFor(PrivacyBudget(0.5, 0.05), -1.0), Error);
}

TEST(GaussianTest, VectorMomentsAndTail) {
  RandomStream rng(5);
  const double sigma = 3.0;
  double sq = 0;
  int tail = 0;
  const int n = 50000;
  for (int i = 0; i < n; ++i) {
    auto v = GaussianNoiseVec(sigma, 4, rng);
    for (double x : v) {
      sq += x * x;
      if (std::abs(x) > 2 * sigma) ++tail;
    }
  }
  EXPECT_NEAR(sq / (4.0 * n), sigma * sigma, 0.15);
  // P(|X| > 2 sigma) = 0.0455, below the 2 e^{-2} bound
  double freq = static_cast<double>(tail) / (4.0 * n);
  EXPECT_NEAR(freq, 0.0455, 0.003);
  EXPECT_LE(freq, 2 * std::exp(-2.0));
}

TEST(GaussianTest, ZeroNoiseAndErrors) {
  RandomStream z(1, 0, NoiseMode::kZeroNoise);
  EXPECT_EQ(GaussianNoiseVec(3.0, 3, z), std::vector<double>(3, 0.0));
  RandomStream rng(1);
  EXPECT_THROW(GaussianNoiseVec(1.0, 0, rng), Error);
  EXPECT_THROW(GaussianNoiseVec(-1.0, 2, rng), Error);
  EXPECT_EQ(GaussianNoiseVec(0.0, 2, rng), std::vector<double>(2, 0.0));
}

std::vector<double> Frequencies(const std::vector<double>& q, double eps, int n,
                                std::uint64_t seed) {
  RandomStream rng(seed);
  std::vector<double> f(q.size(), 0.0);
  for (int i = 0; i < n; ++i) f[ExponentialChoice(q, eps, rng)] += 1.0 / n;
  return f;
}

TEST(ExponentialMechanismTest, MatchesClosedForm) {
  // exp(5) / (1 + exp(5))
  auto f = Frequencies({0.0, 10.0}, 1.0, 100000, 3);
  EXPECT_NEAR(f[1], 0.9933, 0.002);
  // weights e^0, e^1, e^2
  auto g = Frequencies({0.0, 1.0, 2.0}, 2.0, 200000, 4);
  EXPECT_NEAR(g[0], 0.0900, 0.004);
  EXPECT_NEAR(g[1], 0.2447, 0.004);
  EXPECT_NEAR(g[2], 0.6652, 0.004);
}

TEST(ExponentialMechanismTest, FailureBound) {
  // P[q(out) <= OPT - (2 / eps)(ln |R| + t)] <= e^-t
  std::vector<double> q(50);
  std::iota(q.begin(), q.end(), 0.0);
  const double eps = 0.5, t = 2.0;
  double cutoff = 49.0 - 2.0 / eps * (std::log(50.0) + t);
  RandomStream rng(9);
  int bad = 0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    if (q[ExponentialChoice(q, eps, rng)] <= cutoff) ++bad;
  }
  EXPECT_LE(static_cast<double>(bad) / n, std::exp(-t));
}

TEST(ExponentialMechanismTest, ZeroNoisePicksLowestArgmax) {
  RandomStream z(1, 0, NoiseMode::kZeroNoise);
  std::vector<double> q{1.0, 3.0, 3.0, 2.0};
  EXPECT_EQ(ExponentialChoice(q, 1.0, z), 1u);
  RandomStream rng(1);
  EXPECT_THROW(ExponentialChoice(std::vector<double>{}, 1.0, rng), Error);
  EXPECT_THROW(ExponentialChoice(q, 0.0, rng), Error);
}

TEST(ExponentialMechanismTest, NegativeInfinityIsNeverChosen) {
  RandomStream rng(2);
  std::vector<double> w{-INFINITY, 0.0, -INFINITY};
  for (int i = 0; i < 1000; ++i) EXPECT_EQ(SampleFromLogWeights(w, w, rng), 1u);
}

}  // namespace
}  // namespace dpclust
