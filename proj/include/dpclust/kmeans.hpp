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
#include <vector>

#include "dpclust/error.hpp"
#include "dpclust/geometry.hpp"
#include "dpclust/mechanisms.hpp"
#include "dpclust/random.hpp"
#include "dpclust/tuple_clustering.hpp"
#include "dpclust/tuples.hpp"

namespace dpclust {

using CenterSet = std::vector<Point>;

inline double KMeansCost(const PointSet& points, const CenterSet& centers) {
  internal::RequireArg(!centers.empty(), "center set is empty");
  for (const Point& c : centers) {
    internal::Require(c.size() == points.dim(), ErrorCode::kShapeMismatch,
                      "center dimension does not match the points");
  }
  double cost = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    cost += SquaredDistance(points[i], centers[NearestIndex(points[i], centers)]);
  }
  return cost;
}

// One assignment/centroid round; clusters that receive no point keep their
// previous center.
inline CenterSet LloydStep(const PointSet& points, const CenterSet& centers) {
  internal::RequireArg(!centers.empty(), "center set is empty");
  std::size_t d = points.dim();
  std::vector<Point> sums(centers.size(), Point(d, 0.0));
  std::vector<std::size_t> counts(centers.size(), 0);
  for (std::size_t i = 0; i < points.size(); ++i) {
    std::size_t j = NearestIndex(points[i], centers);
    for (std::size_t c = 0; c < d; ++c) sums[j][c] += points[i][c];
    ++counts[j];
  }
  CenterSet out = centers;
  for (std::size_t j = 0; j < centers.size(); ++j) {
    if (counts[j] == 0) continue;
    for (std::size_t c = 0; c < d; ++c) {
      out[j][c] = sums[j][c] / static_cast<double>(counts[j]);
    }
  }
  return out;
}

// D^2 seeding followed by `lloyd_iters` Lloyd rounds.
inline CenterSet KMeansPlusPlus(const PointSet& points, std::size_t k,
                                int lloyd_iters, RandomStream& rng) {
  internal::RequireArg(k > 0, "k must be > 0");
  internal::RequireArg(points.size() >= k, "fewer points than centers");
  std::size_t n = points.size();
  CenterSet centers;
  auto first = points[rng.UniformIndex(n)];
  centers.emplace_back(first.begin(), first.end());
  std::vector<double> nearest(n);
  for (std::size_t i = 0; i < n; ++i) {
    nearest[i] = SquaredDistance(points[i], centers[0]);
  }
  while (centers.size() < k) {
    double total = 0.0;
    for (double v : nearest) total += v;
    std::size_t pick = 0;
    if (total > 0) {
      double target = rng.Uniform() * total;
      double running = 0.0;
      pick = n - 1;
      for (std::size_t i = 0; i < n; ++i) {
        running += nearest[i];
        if (running > target && nearest[i] > 0) {
          pick = i;
          break;
        }
      }
    } else {
      pick = rng.UniformIndex(n);
    }
    auto p = points[pick];
    centers.emplace_back(p.begin(), p.end());
    for (std::size_t i = 0; i < n; ++i) {
      nearest[i] = std::min(nearest[i], SquaredDistance(points[i], centers.back()));
    }
  }
  for (int it = 0; it < lloyd_iters; ++it) {
    CenterSet next = LloydStep(points, centers);
    if (next == centers) break;
    centers = std::move(next);
  }
  return centers;
}

// Lowest-cost result of `restarts` independent KMeansPlusPlus runs.
inline CenterSet BestOfKMeansPlusPlus(const PointSet& points, std::size_t k,
                                      int restarts, int lloyd_iters,
                                      RandomStream& rng) {
  internal::RequireArg(restarts > 0, "restarts must be > 0");
  CenterSet best;
  double best_cost = std::numeric_limits<double>::infinity();
  for (int r = 0; r < restarts; ++r) {
    CenterSet c = KMeansPlusPlus(points, k, lloyd_iters, rng);
    double cost = KMeansCost(points, c);
    if (cost < best_cost) {
      best_cost = cost;
      best = std::move(c);
    }
  }
  return best;
}

struct OptimalClustering {
  CenterSet centers;
  double cost = 0.0;
};

inline constexpr std::size_t kBruteForceCap = 12;

// Exact k-means optimum by enumerating every partition into at most k parts.
inline OptimalClustering OptBruteForce(const PointSet& points, std::size_t k) {
  internal::RequireArg(k > 0, "k must be > 0");
  internal::RequireArg(!points.empty(), "empty point set");
  internal::Require(points.size() <= kBruteForceCap, ErrorCode::kRefused,
                    "exhaustive search is limited to 12 points");
  std::size_t n = points.size();
  std::size_t d = points.dim();
  std::vector<std::size_t> label(n, 0);
  OptimalClustering best;
  best.cost = std::numeric_limits<double>::infinity();

  auto evaluate = [&](std::size_t blocks) {
    std::vector<Point> sums(blocks, Point(d, 0.0));
    std::vector<double> counts(blocks, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t c = 0; c < d; ++c) sums[label[i]][c] += points[i][c];
      counts[label[i]] += 1.0;
    }
    for (std::size_t b = 0; b < blocks; ++b) {
      for (double& v : sums[b]) v /= counts[b];
    }
    double cost = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      cost += SquaredDistance(points[i], sums[label[i]]);
    }
    if (cost < best.cost) {
      best.cost = cost;
      best.centers = sums;
    }
  };

  // Restricted growth strings: label[i] <= 1 + max(label[0..i-1]).
  std::function<void(std::size_t, std::size_t)> recurse =
      [&](std::size_t i, std::size_t used) {
        if (i == n) {
          evaluate(used);
          return;
        }
        std::size_t limit = std::min(used + 1, k);
        for (std::size_t b = 0; b < limit; ++b) {
          label[i] = b;
          recurse(i + 1, std::max(used, b + 1));
        }
      };
  recurse(0, 0);
  while (best.centers.size() < k) best.centers.push_back(best.centers.front());
  return best;
}

struct KMeansConfig {
  std::size_t k = 2;
  std::size_t s = 100;  // points per solver run
  std::size_t t = 100;  // number of solver runs
  double gamma = 1.0 / 16.0;
  double lambda = 1.0;
  PrivacyBudget budget{1.0, 1e-6};
  double beta = 0.05;
};

using KMeansSolver =
    std::function<CenterSet(const PointSet&, std::size_t, RandomStream&)>;

inline KMeansSolver DefaultKMeansSolver(int lloyd_iters = 20) {
  return [lloyd_iters](const PointSet& p, std::size_t k, RandomStream& rng) {
    return KMeansPlusPlus(p, k, lloyd_iters, rng);
  };
}

// Runs the solver t times, each on s points drawn from `points` with
// replacement, and collects the resulting k-tuples.
inline TupleDatabase GenCenters(const PointSet& points, const KMeansConfig& cfg,
                                const KMeansSolver& solver, RandomStream& rng) {
  internal::RequireArg(!points.empty(), "empty point set");
  internal::RequireArg(cfg.s >= cfg.k && cfg.t > 0, "need s >= k and t > 0");
  TupleDatabase out(cfg.k, points.dim());
  out.Reserve(cfg.t);
  PointSet sample(points.dim());
  for (std::size_t run = 0; run < cfg.t; ++run) {
    sample = PointSet(points.dim());
    sample.Reserve(cfg.s);
    for (std::size_t i = 0; i < cfg.s; ++i) {
      sample.Add(points[rng.UniformIndex(points.size())]);
    }
    RandomStream run_rng = rng.Split();
    out.Add(solver(sample, cfg.k, run_rng));
  }
  return out;
}

// D_i: distance from each center to its closest other center.
inline std::vector<double> NearestCenterDistances(const CenterSet& centers) {
  std::vector<double> out(centers.size(), std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i < centers.size(); ++i) {
    for (std::size_t j = 0; j < centers.size(); ++j) {
      if (j != i) out[i] = std::min(out[i], Distance(centers[i], centers[j]));
    }
  }
  return out;
}

// True iff every tuple has, for each reference center c_i, a point within
// gamma * D_i of c_i.
inline bool StabilityEventHolds(const TupleDatabase& t, const CenterSet& reference,
                                double gamma) {
  std::vector<double> gaps = NearestCenterDistances(reference);
  for (std::size_t row = 0; row < t.size(); ++row) {
    TupleView y = t[row];
    for (std::size_t i = 0; i < reference.size(); ++i) {
      bool found = false;
      for (std::size_t j = 0; j < y.k && !found; ++j) {
        found = Distance(y.point(j), reference[i]) <= gamma * gaps[i];
      }
      if (!found) return false;
    }
  }
  return true;
}

struct AveragerOutput {
  Point center;
  // Additive-error scale: with the configured confidence the output is
  // within zeta / |S| of the true average.
  double zeta = 0.0;
};

using Averager = std::function<AveragerOutput(const PointSet&, RandomStream&)>;
using TupleClusterer =
    std::function<CentersResult(const TupleDatabase&, RandomStream&)>;

// Gaussian mechanism on the mean of points clipped to the ball of radius
// lambda. `beta` is the failure probability used to report zeta.
inline Averager GaussianAverager(const PrivacyBudget& budget, double lambda,
                                 double beta) {
  return [budget, lambda, beta](const PointSet& s, RandomStream& rng) {
    internal::RequireArg(!s.empty(), "cannot average an empty set");
    double d = static_cast<double>(s.dim());
    double spread = std::sqrt(2.0 * std::log(1.25 / budget.delta())) / budget.epsilon();
    AveragerOutput out;
    out.zeta = 2.0 * lambda * spread *
               (std::sqrt(d) + std::sqrt(2.0 * std::log(1.0 / beta)));
    Point mean(s.dim(), 0.0);
    for (std::size_t i = 0; i < s.size(); ++i) {
      double norm = Norm(s[i]);
      double scale = norm > lambda ? lambda / norm : 1.0;
      for (std::size_t c = 0; c < mean.size(); ++c) mean[c] += scale * s[i][c];
    }
    double n = static_cast<double>(s.size());
    for (double& v : mean) v /= n;
    double sigma = GaussianSigmaFor(budget, 2.0 * lambda / n);
    std::vector<double> noise = GaussianNoiseVec(sigma, s.dim(), rng);
    for (std::size_t c = 0; c < mean.size(); ++c) mean[c] += noise[c];
    out.center = std::move(mean);
    return out;
  };
}

inline PrivacyBudget KMeansTupleBudget(const PrivacyBudget& b) {
  return PrivacyBudget(b.epsilon() / 6.0, b.delta() / (4.0 * std::exp(b.epsilon())));
}

inline PrivacyBudget KMeansAveragerBudget(const PrivacyBudget& b) {
  return PrivacyBudget(b.epsilon() / 12.0, b.delta() / (8.0 * std::exp(b.epsilon())));
}

inline Averager DefaultKMeansAverager(const KMeansConfig& cfg) {
  return GaussianAverager(KMeansAveragerBudget(cfg.budget), cfg.lambda,
                          cfg.beta / (2.0 * static_cast<double>(cfg.k)));
}

inline TupleClusterer DefaultKMeansTupleClusterer(const KMeansConfig& cfg,
                                                  std::size_t n) {
  PrivacyBudget budget = KMeansTupleBudget(cfg.budget);
  double r_min = cfg.gamma / static_cast<double>(n);
  double beta = cfg.beta / 2.0;
  double lambda = cfg.lambda;
  return [budget, r_min, beta, lambda](const TupleDatabase& t, RandomStream& rng) {
    return PrivateKAverages(t, budget, beta, r_min, lambda, rng);
  };
}

struct KMeansResult {
  TestStatus status = TestStatus::kFailure;
  CenterSet centers;
  CenterSet tuple_centers;
  double zeta = 0.0;
  // Some cluster received no point; its tuple-stage center was kept.
  bool degraded = false;
  TupleDatabase tuples{1, 1};

  bool ok() const { return status == TestStatus::kSuccess; }
};

// Private k-means for inputs whose solver outputs are stable across
// subsamples: collect solver tuples, cluster them privately, then take one
// private Lloyd step on the full data.
inline KMeansResult PrivateKMeans(const PointSet& points, const KMeansConfig& cfg,
                                  const KMeansSolver& solver,
                                  const Averager& averager,
                                  const TupleClusterer& tuple_clusterer,
                                  RandomStream& rng) {
  internal::RequireArg(cfg.k > 0 && cfg.s > 0 && cfg.t > 0,
                       "k, s and t must be > 0");
  internal::RequireArg(cfg.gamma > 0 && cfg.gamma <= 1.0 / 16.0,
                       "gamma must lie in (0, 1/16]");
  internal::RequireArg(cfg.lambda > 0, "domain radius must be > 0");
  if (points.size() < 2 * cfg.s * cfg.t) {
    throw TooSmallError("private k-means needs n >= 2 s t",
                        static_cast<std::int64_t>(2 * cfg.s * cfg.t));
  }
  for (std::size_t i = 0; i < points.size(); ++i) {
    internal::Require(Norm(points[i]) <= cfg.lambda, ErrorCode::kOutOfDomain,
                      "point lies outside the ball of radius lambda");
  }
  if (rng.zero_noise()) internal::WarnZeroNoise("PrivateKMeans");

  KMeansResult out;
  RandomStream gen_rng = rng.Split();
  out.tuples = GenCenters(points, cfg, solver, gen_rng);
  CentersResult stage = tuple_clusterer(out.tuples, rng);
  out.status = stage.status;
  if (!stage.ok()) return out;
  out.tuple_centers = stage.centers;
  std::vector<PointSet> parts = PartitionByNearest(points, stage.centers);
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (parts[i].empty()) {
      out.degraded = true;
      out.centers.push_back(stage.centers[i]);
      continue;
    }
    AveragerOutput avg = averager(parts[i], rng);
    out.zeta = std::max(out.zeta, avg.zeta);
    out.centers.push_back(std::move(avg.center));
  }
  return out;
}

inline double KMeansCostBound(double reference_cost, double gamma, double zeta,
                              std::size_t k, double lambda) {
  return (1.0 + 64.0 * gamma) * reference_cost +
         zeta * static_cast<double>(k) * (zeta + 2.0 * lambda);
}

// Stability slack xi(s, beta) for an omega-approximate solver.
inline double XiBound(double s, double beta, double n, double k, double d,
                      double lambda, double omega, double opt_k) {
  double m = 25.0 * lambda * lambda * k * d * std::log(2.0 * n * d / beta) * n / s;
  return 4.0 * (m + std::sqrt(m * omega * opt_k));
}

struct SeparationCheck {
  bool separated = false;
  bool approximate = false;
};

// OPT_k + xi <= phi^2 OPT_{k-1}, exact via brute force.
inline bool IsPhiXiSeparated(const PointSet& points, std::size_t k, double phi,
                             double xi) {
  internal::RequireArg(k >= 2, "separation needs k >= 2");
  internal::RequireArg(phi > 0 && phi < 1, "phi must lie in (0, 1)");
  double opt_k = OptBruteForce(points, k).cost;
  double opt_prev = OptBruteForce(points, k - 1).cost;
  return opt_k + xi <= phi * phi * opt_prev;
}

// Same predicate for large inputs, with both optima replaced by best-of-r
// k-means++ costs.
inline SeparationCheck IsPhiXiSeparatedApprox(const PointSet& points,
                                              std::size_t k, double phi,
                                              double xi, int restarts,
                                              RandomStream& rng) {
  if (points.size() <= kBruteForceCap) {
    return {IsPhiXiSeparated(points, k, phi, xi), false};
  }
  internal::RequireArg(k >= 2, "separation needs k >= 2");
  double opt_k = KMeansCost(points, BestOfKMeansPlusPlus(points, k, restarts, 50, rng));
  double opt_prev =
      KMeansCost(points, BestOfKMeansPlusPlus(points, k - 1, restarts, 50, rng));
  return {opt_k + xi <= phi * phi * opt_prev, true};
}

struct ClosenessCheck {
  bool close = false;
  bool within_hypothesis = false;
};

// Matches each center greedily (closest pairs first) to a distinct optimal
// center and checks ||c_i - c*_i|| <= 2 (nu + phi) / (1 - phi) * D_i.
inline ClosenessCheck OstrovskyClosenessCheck(const CenterSet& optimal,
                                              const CenterSet& centers,
                                              double nu, double phi) {
  internal::RequireArg(phi > 0 && phi < 1, "phi must lie in (0, 1)");
  ClosenessCheck out;
  out.within_hypothesis = (nu + phi * phi) / (1.0 - phi * phi) < 1.0 / 16.0;
  if (optimal.size() != centers.size()) return out;
  std::size_t k = optimal.size();
  std::vector<double> gaps = NearestCenterDistances(optimal);
  struct Pair {
    double dist;
    std::size_t c;
    std::size_t o;
  };
  std::vector<Pair> pairs;
  for (std::size_t c = 0; c < k; ++c) {
    for (std::size_t o = 0; o < k; ++o) {
      pairs.push_back({Distance(centers[c], optimal[o]), c, o});
    }
  }
  std::sort(pairs.begin(), pairs.end(),
            [](const Pair& a, const Pair& b) { return a.dist < b.dist; });
  std::vector<bool> used_c(k, false);
  std::vector<bool> used_o(k, false);
  double factor = 2.0 * (nu + phi) / (1.0 - phi);
  std::size_t matched = 0;
  for (const Pair& p : pairs) {
    if (used_c[p.c] || used_o[p.o]) continue;
    used_c[p.c] = used_o[p.o] = true;
    if (p.dist > factor * gaps[p.o]) return out;
    ++matched;
  }
  out.close = matched == k;
  return out;
}

}  // namespace dpclust
