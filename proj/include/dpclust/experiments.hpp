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
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "dpclust/error.hpp"
#include "dpclust/geometry.hpp"
#include "dpclust/gmm.hpp"
#include "dpclust/kmeans.hpp"
#include "dpclust/mechanisms.hpp"
#include "dpclust/random.hpp"
#include "dpclust/tuple_clustering.hpp"
#include "dpclust/tuples.hpp"

namespace dpclust {

enum class TestId { kTest1, kTest2, kTest3, kCustom };
enum class Algorithm { kAverages, kNoisyCenters, kBaseline };

inline TestId ParseTestId(const std::string& s) {
  if (s == "test1") return TestId::kTest1;
  if (s == "test2") return TestId::kTest2;
  if (s == "test3") return TestId::kTest3;
  if (s == "custom") return TestId::kCustom;
  throw Error(ErrorCode::kInvalidArgument, "unknown test id: " + s);
}

inline std::string TestIdName(TestId id) {
  switch (id) {
    case TestId::kTest1:
      return "test1";
    case TestId::kTest2:
      return "test2";
    case TestId::kTest3:
      return "test3";
    case TestId::kCustom:
      return "custom";
  }
  return "custom";
}

inline Algorithm ParseAlgorithm(const std::string& s) {
  if (s == "averages") return Algorithm::kAverages;
  if (s == "noisy-centers") return Algorithm::kNoisyCenters;
  if (s == "baseline") return Algorithm::kBaseline;
  throw Error(ErrorCode::kInvalidArgument, "unknown algorithm: " + s);
}

inline std::string AlgorithmName(Algorithm a) {
  switch (a) {
    case Algorithm::kAverages:
      return "averages";
    case Algorithm::kNoisyCenters:
      return "noisy-centers";
    case Algorithm::kBaseline:
      return "baseline";
  }
  return "averages";
}

// Mean norm R used by a test when no explicit scale is given.
inline double DefaultScale(TestId id, std::size_t k, std::size_t d) {
  switch (id) {
    case TestId::kTest1:
      return 512.0;
    case TestId::kTest2:
      return 512.0 * static_cast<double>(k);
    case TestId::kTest3:
      return 256.0 * std::sqrt(static_cast<double>(d));
    case TestId::kCustom:
      return 512.0;
  }
  return 512.0;
}

// Unit-variance spherical components with uniform weights and means at
// +R e_1, -R e_1, +R e_2, -R e_2, ...; k = 1 puts the single mean at R e_1.
inline MixtureParams MakeTestMixture(TestId id, std::size_t k, std::size_t d,
                                     std::optional<double> r_scale = std::nullopt) {
  if (id == TestId::kTest1) {
    internal::RequireArg(k == 2 && d == 1, "test1 uses k = 2, d = 1");
  } else if (id == TestId::kTest2) {
    internal::RequireArg(d == 4, "test2 uses d = 4");
  } else if (id == TestId::kTest3) {
    internal::RequireArg(k == 2, "test3 uses k = 2");
  }
  internal::RequireArg(k >= 1 && d >= 1, "k and d must be >= 1");
  internal::RequireArg(k == 1 || k % 2 == 0, "k must be 1 or even");
  internal::RequireArg((k + 1) / 2 <= d, "need d >= k / 2 axes for the layout");
  double r = r_scale.value_or(DefaultScale(id, k, d));
  internal::RequireArg(std::isfinite(r) && r > 0, "mean scale must be > 0");
  std::vector<MixtureComponent> comps;
  for (std::size_t i = 0; i < k; ++i) {
    Point mean(d, 0.0);
    mean[i / 2] = (i % 2 == 0) ? r : -r;
    comps.push_back(MixtureComponent::Spherical(1.0 / static_cast<double>(k), mean, 1.0));
  }
  return MixtureParams(std::move(comps), MixtureBounds{r, 1.0, 1.0, 1.0 / static_cast<double>(k)});
}

struct ExperimentConfig {
  TestId test = TestId::kTest1;
  Algorithm algorithm = Algorithm::kNoisyCenters;
  std::size_t k = 2;
  std::size_t d = 1;
  std::optional<double> r_scale;
  double epsilon = 1.0;
  double delta = std::exp(-28.0);
  double beta = 0.05;
  std::optional<double> delta_sep;  // default: DefaultSeparation
  std::optional<double> lambda;     // default: 2^10 k sqrt(d)
  double r_min = 0.1;
  std::optional<std::size_t> samples_per_tuple;  // default: 15 k
  std::size_t tuples = 3781;
  std::size_t trials = 20;
  std::size_t eval_samples = 10'000;
  std::uint64_t seed = 1;
  bool zero_noise = false;
  // When false, tuple counts below MinTuplesForPrivacy are run and flagged.
  bool enforce_privacy_size = false;
};

// (10 / eps) k ln(k / delta) sqrt(ln(k / beta)).
inline double DefaultSeparation(double epsilon, double delta, double beta,
                              std::size_t k) {
  double kk = static_cast<double>(k);
  return 10.0 / epsilon * kk * std::log(kk / delta) * std::sqrt(std::log(kk / beta));
}

inline double DefaultLambda(std::size_t k, std::size_t d) {
  return 1024.0 * static_cast<double>(k) * std::sqrt(static_cast<double>(d));
}

struct ResolvedConfig {
  MixtureParams mixture;
  double delta_sep;
  double lambda;
  std::size_t samples_per_tuple;
};

inline ResolvedConfig Resolve(const ExperimentConfig& cfg) {
  MixtureParams mixture = MakeTestMixture(cfg.test, cfg.k, cfg.d, cfg.r_scale);
  return {mixture,
          cfg.delta_sep.value_or(DefaultSeparation(cfg.epsilon, cfg.delta, cfg.beta, cfg.k)),
          cfg.lambda.value_or(DefaultLambda(cfg.k, cfg.d)),
          cfg.samples_per_tuple.value_or(15 * cfg.k)};
}

// One k-tuple per call: k-means++ with Lloyd refinement on fresh samples.
inline TupleDatabase GenerateTuples(const MixtureParams& mixture, std::size_t count,
                                    std::size_t samples_per_tuple, RandomStream& rng) {
  TupleDatabase out(mixture.k(), mixture.d());
  out.Reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    LabeledSample sample = SampleMixture(mixture, samples_per_tuple, rng);
    out.Add(KMeansPlusPlus(sample.points, mixture.k(), 20, rng));
  }
  return out;
}

// True iff there is a one-to-one assignment of components to centers such
// that every sample is closest to its own component's center.
inline bool ClassifiesCorrectly(const std::vector<Point>& centers,
                                const LabeledSample& sample, std::size_t k) {
  if (centers.size() != k) return false;
  std::vector<std::size_t> owner(k, k);
  std::vector<bool> taken(k, false);
  for (std::size_t i = 0; i < sample.points.size(); ++i) {
    std::size_t c = NearestIndex(sample.points[i], centers);
    std::size_t label = sample.labels[i];
    if (owner[label] == k) {
      if (taken[c]) return false;
      owner[label] = c;
      taken[c] = true;
    } else if (owner[label] != c) {
      return false;
    }
  }
  return true;
}

struct TrialRecord {
  std::size_t trial = 0;
  std::size_t tuples = 0;
  std::string status;  // success, failure or error:<code>
  bool success = false;
  bool privacy_size_ok = true;
  double wall_ms = 0.0;
};

// Runs the tuple clusterer on `tuples` and scores it on fresh held-out data.
inline TrialRecord RunTrialOnTuples(const ExperimentConfig& cfg,
                                    const ResolvedConfig& rc,
                                    const TupleDatabase& tuples,
                                    RandomStream& rng) {
  TrialRecord rec;
  rec.tuples = tuples.size();
  auto start = std::chrono::steady_clock::now();
  try {
    PrivacyBudget budget(cfg.epsilon, cfg.delta);
    CentersResult result;
    if (cfg.algorithm == Algorithm::kAverages) {
      result = PrivateKAverages(tuples, budget, cfg.beta, cfg.r_min, rc.lambda, rng);
    } else if (cfg.algorithm == Algorithm::kNoisyCenters) {
      NoisyCentersOptions options;
      options.lambda = rc.lambda;
      options.enforce_privacy_size = cfg.enforce_privacy_size;
      result = PrivateKNoisyCenters(tuples, budget, cfg.beta, rc.delta_sep, rng, options);
    } else {
      throw Error(ErrorCode::kInvalidArgument, "baseline is not a tuple clusterer");
    }
    rec.privacy_size_ok = result.privacy_size_ok;
    if (result.ok()) {
      LabeledSample held_out = SampleMixture(rc.mixture, cfg.eval_samples, rng);
      rec.success = ClassifiesCorrectly(result.centers, held_out, cfg.k);
      rec.status = "success";
    } else {
      rec.status = "failure";
    }
  } catch (const Error& e) {
    rec.status = std::string("error:") + ErrorCodeName(e.code());
  }
  rec.wall_ms = std::chrono::duration<double, std::milli>(
                    std::chrono::steady_clock::now() - start)
                    .count();
  return rec;
}

inline RandomStream TrialStream(const ExperimentConfig& cfg, std::size_t tuples,
                                std::size_t trial) {
  RandomStream base(cfg.seed, 0,
                    cfg.zero_noise ? NoiseMode::kZeroNoise : NoiseMode::kPrivate);
  return base.Child(tuples).Child(trial);
}

inline TrialRecord RunSeparationTrial(const ExperimentConfig& cfg,
                                      const ResolvedConfig& rc, std::size_t tuples,
                                      std::size_t trial) {
  RandomStream rng = TrialStream(cfg, tuples, trial);
  RandomStream data_rng = rng.Split();
  TupleDatabase db = GenerateTuples(rc.mixture, tuples, rc.samples_per_tuple, data_rng);
  TrialRecord rec = RunTrialOnTuples(cfg, rc, db, rng);
  rec.trial = trial;
  return rec;
}

struct RatePoint {
  std::size_t tuples = 0;
  std::vector<TrialRecord> trials;

  double rate() const {
    if (trials.empty()) return 0.0;
    double ok = 0.0;
    for (const TrialRecord& t : trials) ok += t.success ? 1.0 : 0.0;
    return ok / static_cast<double>(trials.size());
  }
};

inline RatePoint RunSeparationTest(const ExperimentConfig& cfg, std::size_t tuples) {
  ResolvedConfig rc = Resolve(cfg);
  RatePoint point;
  point.tuples = tuples;
  for (std::size_t i = 0; i < cfg.trials; ++i) {
    point.trials.push_back(RunSeparationTrial(cfg, rc, tuples, i));
  }
  return point;
}

// Wilson score interval for a binomial proportion.
inline std::pair<double, double> WilsonInterval(double successes, double n,
                                                double z = 1.96) {
  if (n <= 0) return {0.0, 1.0};
  double p = successes / n;
  double denom = 1.0 + z * z / n;
  double center = (p + z * z / (2.0 * n)) / denom;
  double half = z * std::sqrt(p * (1.0 - p) / n + z * z / (4.0 * n * n)) / denom;
  return {std::max(0.0, center - half), std::min(1.0, center + half)};
}

struct SweepResult {
  std::optional<std::size_t> tuples_needed;
  std::vector<RatePoint> points;
};

// Smallest tuple count whose success rate reaches `target`: doubling from
// `start`, then bisection between the last failing and first passing count.
inline SweepResult SweepTupleCount(const ExperimentConfig& cfg, std::size_t start,
                                   std::size_t cap, double target = 0.95) {
  internal::RequireArg(start > 0 && cap >= start, "invalid sweep range");
  SweepResult out;
  std::map<std::size_t, double> seen;
  auto rate_at = [&](std::size_t n) {
    auto it = seen.find(n);
    if (it != seen.end()) return it->second;
    RatePoint p = RunSeparationTest(cfg, n);
    double r = p.rate();
    out.points.push_back(std::move(p));
    seen[n] = r;
    return r;
  };
  std::size_t hi = start;
  while (rate_at(hi) < target) {
    if (hi >= cap) return out;
    hi = std::min(hi * 2, cap);
  }
  std::size_t lo = hi == start ? 0 : hi / 2;
  // Bisect to 5% relative precision.
  while (hi - lo > std::max<std::size_t>(1, hi / 20)) {
    std::size_t mid = lo + (hi - lo) / 2;
    if (rate_at(mid) >= target) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  out.tuples_needed = hi;
  return out;
}

struct BaselineReport {
  double noise_sigma = 0.0;
  ParamErrorReport error;
  std::vector<Point> fitted_means;
};

// Adds per-point Gaussian noise calibrated to the domain radius and fits the
// noisy sample non-privately (k-means++ labels, per-label means).
inline BaselineReport BaselineNoiseThenFit(const MixtureParams& mixture,
                                           std::size_t samples, double epsilon,
                                           double delta, double lambda,
                                           RandomStream& rng) {
  PrivacyBudget budget(epsilon, delta);
  BaselineReport out;
  out.noise_sigma = GaussianSigmaUnchecked(budget.epsilon(), budget.delta(), lambda);
  LabeledSample sample = SampleMixture(mixture, samples, rng);
  PointSet noisy = sample.points;
  for (std::size_t i = 0; i < noisy.size(); ++i) {
    std::vector<double> noise = GaussianNoiseVec(out.noise_sigma, noisy.dim(), rng);
    auto p = noisy.mutable_point(i);
    for (std::size_t c = 0; c < p.size(); ++c) p[c] += noise[c];
  }
  std::vector<std::size_t> labels = NearestMeanLabeler(noisy, mixture.k(), rng);
  std::vector<PointSet> parts(mixture.k(), PointSet(mixture.d()));
  for (std::size_t i = 0; i < noisy.size(); ++i) parts[labels[i]].Add(noisy[i]);
  MixtureEstimate est;
  for (const PointSet& part : parts) {
    GaussianEstimate g;
    g.mean = part.empty() ? Point(mixture.d(), 0.0) : Mean(part);
    g.variances.assign(mixture.d(), 1.0);
    out.fitted_means.push_back(g.mean);
    est.components.push_back(std::move(g));
    est.weights.push_back(static_cast<double>(part.size()) /
                          static_cast<double>(noisy.size()));
  }
  out.error = MixtureParamError(mixture, est);
  return out;
}

// Monte-Carlo total variation distance: E_{x~a} max(0, 1 - p_b(x) / p_a(x)).
inline double TvDistanceMc(const MixtureParams& a, const MixtureParams& b,
                           std::size_t samples, RandomStream& rng) {
  internal::Require(a.d() == b.d(), ErrorCode::kShapeMismatch, "dimensions differ");
  internal::RequireArg(samples > 0, "need at least one sample");
  LabeledSample draw = SampleMixture(a, samples, rng);
  double sum = 0.0;
  for (std::size_t i = 0; i < draw.points.size(); ++i) {
    double ratio = std::exp(LogDensity(b, draw.points[i]) - LogDensity(a, draw.points[i]));
    sum += std::max(0.0, 1.0 - ratio);
  }
  return sum / static_cast<double>(samples);
}

inline void WriteTrialCsvHeader(std::ostream& os) {
  os << "test_id,algorithm,tuples,trial,status,success,privacy_size_ok,k,d,"
        "r_scale,samples_per_tuple,epsilon,delta,beta,delta_sep,lambda,r_min,"
        "seed\n";
}

inline void WriteTrialCsvRows(std::ostream& os, const ExperimentConfig& cfg,
                              const ResolvedConfig& rc, const RatePoint& point) {
  auto old_precision = os.precision(17);
  for (const TrialRecord& t : point.trials) {
    os << TestIdName(cfg.test) << ',' << AlgorithmName(cfg.algorithm) << ','
       << point.tuples << ',' << t.trial << ',' << t.status << ','
       << (t.success ? 1 : 0) << ',' << (t.privacy_size_ok ? 1 : 0) << ','
       << cfg.k << ',' << cfg.d << ',' << rc.mixture.bounds().radius << ','
       << rc.samples_per_tuple << ',' << cfg.epsilon << ',' << cfg.delta << ','
       << cfg.beta << ',' << rc.delta_sep << ',' << rc.lambda << ',' << cfg.r_min
       << ',' << cfg.seed << '\n';
  }
  os.precision(old_precision);
}

// Aggregate row for a rate point: trial column "all", success column holds
// the success rate.
inline void WriteAggregateCsvRow(std::ostream& os, const ExperimentConfig& cfg,
                                 const ResolvedConfig& rc, const RatePoint& point) {
  auto old_precision = os.precision(17);
  bool privacy_ok = std::all_of(point.trials.begin(), point.trials.end(),
                                [](const TrialRecord& t) { return t.privacy_size_ok; });
  os << TestIdName(cfg.test) << ',' << AlgorithmName(cfg.algorithm) << ','
     << point.tuples << ",all,aggregate," << point.rate() << ','
     << (privacy_ok ? 1 : 0) << ',' << cfg.k << ',' << cfg.d << ','
     << rc.mixture.bounds().radius << ',' << rc.samples_per_tuple << ','
     << cfg.epsilon << ',' << cfg.delta << ',' << cfg.beta << ',' << rc.delta_sep
     << ',' << rc.lambda << ',' << cfg.r_min << ',' << cfg.seed << '\n';
  os.precision(old_precision);
}

}  // namespace dpclust
