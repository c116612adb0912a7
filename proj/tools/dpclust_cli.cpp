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


// Command line front end: tuple clustering, k-means, mixtures and the
// separation experiments.

#include <cmath>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "dpclust/dpclust.hpp"
#include "dpclust/io.hpp"

namespace {

using dpclust::Json;

struct CommonFlags {
  double epsilon = 1.0;
  std::string delta = "e^-28";
  double beta = 0.05;
  std::optional<double> delta_sep;
  std::optional<double> lambda;
  double r_min = 0.1;
  std::size_t k = 2;
  std::size_t d = 1;
  std::optional<double> r_scale;
  std::size_t tuples = 3781;
  std::optional<std::size_t> samples_per_tuple;
  std::size_t trials = 20;
  std::uint64_t seed = 1;
  std::string out;
  std::string in;
  bool zero_noise = false;
};

void AddBudgetFlags(CLI::App* app, CommonFlags& f) {
  app->add_option("--epsilon", f.epsilon, "privacy epsilon")->capture_default_str();
  app->add_option("--delta", f.delta, "privacy delta, number or e^-x")->capture_default_str();
  app->add_option("--beta", f.beta, "failure probability")->capture_default_str();
}

void AddIoFlags(CLI::App* app, CommonFlags& f, const std::string& in_help) {
  app->add_option("--in", f.in, in_help)->required();
  app->add_option("--out", f.out, "output file (default stdout)");
  app->add_option("--seed", f.seed, "random seed")->capture_default_str();
  app->add_flag("--zero-noise", f.zero_noise, "disable all noise (testing only)");
}

dpclust::RandomStream MakeStream(const CommonFlags& f) {
  return dpclust::RandomStream(
      f.seed, 0, f.zero_noise ? dpclust::NoiseMode::kZeroNoise : dpclust::NoiseMode::kPrivate);
}

std::ifstream OpenIn(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw dpclust::Error(dpclust::ErrorCode::kIo, "cannot open " + path);
  return in;
}

// Writes to --out when given, stdout otherwise.
class Output {
 public:
  explicit Output(const std::string& path) {
    if (!path.empty()) {
      file_ = std::make_unique<std::ofstream>(path);
      if (!*file_) throw dpclust::Error(dpclust::ErrorCode::kIo, "cannot write " + path);
    }
  }
  std::ostream& stream() { return file_ ? *file_ : std::cout; }

 private:
  std::unique_ptr<std::ofstream> file_;
};

Json CentersJson(const dpclust::CentersResult& r) {
  Json j;
  j["status"] = r.ok() ? "success" : "failure";
  j["privacy_size_ok"] = r.privacy_size_ok;
  j["centers"] = r.centers;
  j["tester"] = {{"passes", r.test.passes},
                 {"noisy_passes", r.test.noisy_passes},
                 {"threshold", r.test.threshold}};
  return j;
}

dpclust::ExperimentConfig ToExperiment(const CommonFlags& f) {
  dpclust::ExperimentConfig cfg;
  cfg.k = f.k;
  cfg.d = f.d;
  cfg.r_scale = f.r_scale;
  cfg.epsilon = f.epsilon;
  cfg.delta = dpclust::ParseRate(f.delta);
  cfg.beta = f.beta;
  cfg.delta_sep = f.delta_sep;
  cfg.lambda = f.lambda;
  cfg.r_min = f.r_min;
  cfg.samples_per_tuple = f.samples_per_tuple;
  cfg.tuples = f.tuples;
  cfg.trials = f.trials;
  cfg.seed = f.seed;
  cfg.zero_noise = f.zero_noise;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"differentially private clustering via k-tuple clustering"};
  app.require_subcommand(1);
  CommonFlags f;

  auto* min_tuples = app.add_subcommand("min-tuples", "smallest tuple count meeting the privacy size bound");
  AddBudgetFlags(min_tuples, f);

  auto* averages = app.add_subcommand("ktuple-averages", "private k-averages of a tuple database (JSON lines)");
  AddBudgetFlags(averages, f);
  AddIoFlags(averages, f, "tuple database, one JSON array of k points per line");
  averages->add_option("--lambda", f.lambda, "domain ball radius")->required();
  averages->add_option("--r-min", f.r_min, "smallest cluster radius")->capture_default_str();

  auto* noisy = app.add_subcommand("ktuple-noisy-centers", "private noisy centers of a tuple database (JSON lines)");
  AddBudgetFlags(noisy, f);
  AddIoFlags(noisy, f, "tuple database, one JSON array of k points per line");
  noisy->add_option("--delta-sep", f.delta_sep, "ball separation factor (> 6)")->required();
  noisy->add_option("--lambda", f.lambda, "domain ball radius (required for k = 1)");
  bool allow_small = false;
  noisy->add_flag("--allow-small", allow_small, "run below the privacy size bound and flag the result");

  auto* kmeans = app.add_subcommand("kmeans", "private k-means of a point set (CSV)");
  AddBudgetFlags(kmeans, f);
  AddIoFlags(kmeans, f, "points, one comma separated row each");
  kmeans->add_option("--k", f.k, "number of centers")->capture_default_str();
  kmeans->add_option("--lambda", f.lambda, "domain ball radius")->required();
  kmeans->add_option("--samples-per-tuple", f.samples_per_tuple, "points per solver run (s)")->required();
  kmeans->add_option("--tuples", f.tuples, "number of solver runs (t)")->capture_default_str();
  double gamma = 1.0 / 16.0;
  kmeans->add_option("--gamma", gamma, "stability parameter in (0, 1/16]")->capture_default_str();
  std::string tuple_stage = "averages";
  kmeans->add_option("--algorithm", tuple_stage, "tuple stage: averages or noisy-centers")
      ->check(CLI::IsMember({"averages", "noisy-centers"}))
      ->capture_default_str();
  kmeans->add_option("--delta-sep", f.delta_sep, "ball separation for noisy-centers");

  auto* gmm = app.add_subcommand("gmm", "private Gaussian mixture learning");
  AddBudgetFlags(gmm, f);
  gmm->add_option("--in", f.in, "labeled or unlabeled sample CSV (2n rows)");
  std::string mixture_path;
  gmm->add_option("--mixture", mixture_path, "mixture JSON: sample from it instead of --in; also supplies bounds");
  std::size_t sample_size = 0;
  gmm->add_option("--samples", sample_size, "points to draw from --mixture (2n)");
  gmm->add_option("--out", f.out, "output file (default stdout)");
  gmm->add_option("--seed", f.seed, "random seed")->capture_default_str();
  gmm->add_flag("--zero-noise", f.zero_noise, "disable all noise (testing only)");
  gmm->add_option("--k", f.k, "number of components")->capture_default_str();
  gmm->add_option("--samples-per-tuple", f.samples_per_tuple, "points per labeler run (s)")->required();
  gmm->add_option("--tuples", f.tuples, "number of labeler runs (t)")->capture_default_str();
  gmm->add_option("--delta-sep", f.delta_sep, "ball separation of the tuple stage (default: empirical rule)");
  gmm->add_option("--lambda", f.lambda, "domain radius for tuple points");
  double radius = 1.0, sigma_max = 1.0, sigma_min = 1.0;
  gmm->add_option("--radius", radius, "bound on mean norms (without --mixture)");
  gmm->add_option("--sigma-max", sigma_max, "largest standard deviation (without --mixture)");
  gmm->add_option("--sigma-min", sigma_min, "smallest standard deviation (without --mixture)");
  std::string learner_name = "naive";
  gmm->add_option("--learner", learner_name, "naive or two-stage")
      ->check(CLI::IsMember({"naive", "two-stage"}))
      ->capture_default_str();

  auto* experiment = app.add_subcommand("experiment", "separation experiment over mixture tuples");
  AddBudgetFlags(experiment, f);
  std::string test_name;
  experiment->add_option("test", test_name, "test1, test2, test3 or custom")
      ->required()
      ->check(CLI::IsMember({"test1", "test2", "test3", "custom"}));
  std::string algorithm = "noisy-centers";
  experiment->add_option("--algorithm", algorithm, "averages or noisy-centers")
      ->check(CLI::IsMember({"averages", "noisy-centers"}))
      ->capture_default_str();
  experiment->add_option("--delta-sep", f.delta_sep, "ball separation (default: empirical rule)");
  experiment->add_option("--lambda", f.lambda, "domain radius (default 1024 k sqrt(d))");
  experiment->add_option("--r-min", f.r_min, "smallest cluster radius")->capture_default_str();
  experiment->add_option("--k", f.k, "components")->capture_default_str();
  experiment->add_option("--d", f.d, "dimension")->capture_default_str();
  experiment->add_option("--r-scale", f.r_scale, "mean scale R");
  experiment->add_option("--tuples", f.tuples, "tuples per trial")->capture_default_str();
  experiment->add_option("--samples-per-tuple", f.samples_per_tuple, "samples per tuple (default 15 k)");
  experiment->add_option("--trials", f.trials, "trials")->capture_default_str();
  experiment->add_option("--seed", f.seed, "random seed")->capture_default_str();
  experiment->add_option("--out", f.out, "trial CSV (default stdout)");
  experiment->add_flag("--zero-noise", f.zero_noise, "disable all noise (testing only)");
  bool sweep = false;
  std::size_t sweep_cap = 1u << 22;
  experiment->add_flag("--sweep", sweep, "search the smallest tuple count reaching 1 - beta success");
  experiment->add_option("--sweep-cap", sweep_cap, "largest tuple count tried by --sweep")->capture_default_str();
  bool enforce = false;
  experiment->add_flag("--enforce-privacy-size", enforce, "reject tuple counts below the privacy size bound");

  auto* baseline = app.add_subcommand("baseline", "per-point noise followed by non-private fitting");
  AddBudgetFlags(baseline, f);
  std::string baseline_test = "test1";
  baseline->add_option("--test", baseline_test, "test1, test2, test3 or custom")->capture_default_str();
  baseline->add_option("--k", f.k, "components")->capture_default_str();
  baseline->add_option("--d", f.d, "dimension")->capture_default_str();
  baseline->add_option("--r-scale", f.r_scale, "mean scale R");
  baseline->add_option("--lambda", f.lambda, "domain radius (default 1024 k sqrt(d))");
  std::size_t baseline_samples = 100000;
  baseline->add_option("--samples", baseline_samples, "noisy samples")->capture_default_str();
  baseline->add_option("--trials", f.trials, "trials")->capture_default_str();
  baseline->add_option("--seed", f.seed, "random seed")->capture_default_str();
  baseline->add_option("--out", f.out, "output file (default stdout)");
  baseline->add_flag("--zero-noise", f.zero_noise, "disable all noise (testing only)");

  CLI11_PARSE(app, argc, argv);

  try {
    double delta = dpclust::ParseRate(f.delta);
    if (min_tuples->parsed()) {
      std::int64_t n = dpclust::MinTuplesForPrivacy(f.epsilon, delta, f.beta);
      dpclust::TesterSizes sizes = dpclust::ComputeM(n, f.epsilon / 2.0, delta / 4.0, f.beta / 2.0);
      Json j = {{"epsilon", f.epsilon}, {"delta", delta}, {"beta", f.beta},
                {"min_tuples", n}, {"m", sizes.m}, {"ell", sizes.ell}};
      std::cout << j.dump(2) << '\n';
    } else if (averages->parsed() || noisy->parsed()) {
      std::ifstream in = OpenIn(f.in);
      dpclust::TupleDatabase db = dpclust::ReadTuplesJsonl(in, f.lambda);
      dpclust::RandomStream rng = MakeStream(f);
      dpclust::PrivacyBudget budget(f.epsilon, delta);
      dpclust::CentersResult r;
      if (averages->parsed()) {
        r = dpclust::PrivateKAverages(db, budget, f.beta, f.r_min, *f.lambda, rng);
      } else {
        dpclust::NoisyCentersOptions options;
        options.lambda = f.lambda;
        options.enforce_privacy_size = !allow_small;
        r = dpclust::PrivateKNoisyCenters(db, budget, f.beta, *f.delta_sep, rng, options);
      }
      Output out(f.out);
      out.stream() << CentersJson(r).dump(2) << '\n';
    } else if (kmeans->parsed()) {
      std::ifstream in = OpenIn(f.in);
      dpclust::PointSet points = dpclust::ReadPointsCsv(in);
      dpclust::KMeansConfig cfg;
      cfg.k = f.k;
      cfg.s = *f.samples_per_tuple;
      cfg.t = f.tuples;
      cfg.gamma = gamma;
      cfg.lambda = *f.lambda;
      cfg.budget = dpclust::PrivacyBudget(f.epsilon, delta);
      cfg.beta = f.beta;
      dpclust::TupleClusterer clusterer = dpclust::DefaultKMeansTupleClusterer(cfg, points.size());
      if (tuple_stage == "noisy-centers") {
        dpclust::PrivacyBudget tb = dpclust::KMeansTupleBudget(cfg.budget);
        double sep = f.delta_sep.value_or(
            dpclust::DefaultSeparation(tb.epsilon(), tb.delta(), cfg.beta / 2.0, cfg.k));
        double lambda = cfg.lambda;
        double beta = cfg.beta / 2.0;
        clusterer = [tb, sep, lambda, beta](const dpclust::TupleDatabase& t,
                                            dpclust::RandomStream& r) {
          dpclust::NoisyCentersOptions options;
          options.lambda = lambda;
          return dpclust::PrivateKNoisyCenters(t, tb, beta, sep, r, options);
        };
      }
      dpclust::RandomStream rng = MakeStream(f);
      dpclust::KMeansResult r = dpclust::PrivateKMeans(
          points, cfg, dpclust::DefaultKMeansSolver(), dpclust::DefaultKMeansAverager(cfg),
          clusterer, rng);
      Json j;
      j["status"] = r.status == dpclust::TestStatus::kSuccess ? "success" : "failure";
      j["centers"] = r.centers;
      j["zeta"] = r.zeta;
      j["degraded"] = r.degraded;
      if (!r.centers.empty()) j["cost"] = dpclust::KMeansCost(points, r.centers);
      Output out(f.out);
      out.stream() << j.dump(2) << '\n';
    } else if (gmm->parsed()) {
      dpclust::RandomStream rng = MakeStream(f);
      dpclust::MixtureBounds bounds{radius, sigma_max, sigma_min, 0.0};
      dpclust::PointSet points(1);
      std::optional<dpclust::MixtureParams> truth;
      if (!mixture_path.empty()) {
        std::ifstream in = OpenIn(mixture_path);
        truth = dpclust::MixtureFromJson(Json::parse(in));
        bounds = truth->bounds();
        if (sample_size == 0) throw dpclust::Error(dpclust::ErrorCode::kInvalidArgument, "--samples is required with --mixture");
        dpclust::RandomStream data_rng = rng.Split();
        points = dpclust::SampleMixture(*truth, sample_size, data_rng).points;
      } else if (!f.in.empty()) {
        std::ifstream in = OpenIn(f.in);
        points = dpclust::ReadPointsCsv(in);
      } else {
        throw dpclust::Error(dpclust::ErrorCode::kInvalidArgument, "need --in or --mixture");
      }
      if (points.size() % 2 == 1) {
        dpclust::PointSet even(points.dim());
        for (std::size_t i = 0; i + 1 < points.size(); ++i) even.Add(points[i]);
        points = std::move(even);
      }
      dpclust::GmmConfig cfg;
      cfg.k = f.k;
      cfg.s = *f.samples_per_tuple;
      cfg.t = f.tuples;
      cfg.budget = dpclust::PrivacyBudget(f.epsilon, delta);
      cfg.bounds = bounds;
      cfg.domain_lambda = f.lambda;
      double sep = f.delta_sep.value_or(dpclust::DefaultSeparation(f.epsilon, delta, f.beta, f.k));
      dpclust::NoisyCentersOptions options;
      options.lambda = f.lambda;
      dpclust::PrivacyBudget budget = cfg.budget;
      double beta = f.beta;
      dpclust::TupleClusterer clusterer = [budget, beta, sep, options](
                                              const dpclust::TupleDatabase& t,
                                              dpclust::RandomStream& r) {
        return dpclust::PrivateKNoisyCenters(t, budget, beta, sep, r, options);
      };
      dpclust::GaussianLearner learner = learner_name == "two-stage"
                                             ? dpclust::MakeTwoStageLearner(bounds)
                                             : dpclust::MakeNaiveLearner(bounds);
      dpclust::GmmResult r = dpclust::PrivateKGmm(points, cfg, dpclust::NearestMeanLabeler,
                                                  learner, clusterer, rng);
      Json j;
      j["status"] = r.ok() ? "success" : "failure";
      j["privacy_size_ok"] = r.privacy_size_ok;
      j["degraded"] = r.degraded;
      j["degraded_runs"] = r.degraded_runs;
      j["replaced_tuples"] = r.replaced_tuples;
      j["delta_sep"] = sep;
      if (r.ok()) {
        j["estimate"] = dpclust::EstimateToJson(r.estimate);
        if (truth) {
          dpclust::ParamErrorReport e = dpclust::MixtureParamError(*truth, r.estimate);
          j["error"] = {{"max_mean_error", e.max_mean_error},
                        {"max_scale_error", e.max_scale_error},
                        {"max_weight_error", e.max_weight_error}};
        }
      }
      Output out(f.out);
      out.stream() << j.dump(2) << '\n';
    } else if (experiment->parsed()) {
      dpclust::ExperimentConfig cfg = ToExperiment(f);
      cfg.test = dpclust::ParseTestId(test_name);
      cfg.algorithm = dpclust::ParseAlgorithm(algorithm);
      cfg.enforce_privacy_size = enforce;
      dpclust::ResolvedConfig rc = dpclust::Resolve(cfg);
      Output out(f.out);
      dpclust::WriteTrialCsvHeader(out.stream());
      Json summary = {{"test", test_name}, {"algorithm", algorithm},
                      {"k", cfg.k}, {"d", cfg.d},
                      {"r_scale", rc.mixture.bounds().radius},
                      {"delta_sep", rc.delta_sep}, {"lambda", rc.lambda},
                      {"samples_per_tuple", rc.samples_per_tuple},
                      {"epsilon", cfg.epsilon}, {"delta", cfg.delta},
                      {"beta", cfg.beta}, {"r_min", cfg.r_min},
                      {"trials", cfg.trials}, {"seed", cfg.seed}};
      Json points = Json::array();
      auto emit = [&](const dpclust::RatePoint& p) {
        dpclust::WriteTrialCsvRows(out.stream(), cfg, rc, p);
        dpclust::WriteAggregateCsvRow(out.stream(), cfg, rc, p);
        double wall_ms = 0.0;
        for (const dpclust::TrialRecord& t : p.trials) wall_ms += t.wall_ms;
        points.push_back({{"tuples", p.tuples}, {"success_rate", p.rate()}, {"wall_ms", wall_ms}});
      };
      if (sweep) {
        dpclust::SweepResult s = dpclust::SweepTupleCount(cfg, cfg.tuples, sweep_cap, 1.0 - cfg.beta);
        for (const dpclust::RatePoint& p : s.points) emit(p);
        summary["tuples_needed"] = s.tuples_needed ? Json(*s.tuples_needed) : Json(nullptr);
      } else {
        emit(dpclust::RunSeparationTest(cfg, cfg.tuples));
      }
      summary["points"] = points;
      (f.out.empty() ? std::cerr : std::cout) << summary.dump(2) << '\n';
    } else if (baseline->parsed()) {
      dpclust::ExperimentConfig cfg = ToExperiment(f);
      cfg.test = dpclust::ParseTestId(baseline_test);
      dpclust::ResolvedConfig rc = dpclust::Resolve(cfg);
      Json trials = Json::array();
      for (std::size_t i = 0; i < f.trials; ++i) {
        dpclust::RandomStream rng = dpclust::TrialStream(cfg, baseline_samples, i);
        dpclust::BaselineReport r = dpclust::BaselineNoiseThenFit(
            rc.mixture, baseline_samples, cfg.epsilon, cfg.delta, rc.lambda, rng);
        trials.push_back({{"trial", i},
                          {"noise_sigma", r.noise_sigma},
                          {"max_mean_error", r.error.max_mean_error},
                          {"fitted_means", r.fitted_means}});
      }
      Json j = {{"test", baseline_test}, {"samples", baseline_samples},
                {"lambda", rc.lambda}, {"epsilon", cfg.epsilon},
                {"delta", cfg.delta}, {"trials", trials}};
      Output out(f.out);
      out.stream() << j.dump(2) << '\n';
    }
  } catch (const dpclust::TooSmallError& e) {
    std::cerr << "error[" << dpclust::ErrorCodeName(e.code()) << "]: " << e.what();
    if (e.minimal_size() > 0) std::cerr << " (need at least " << e.minimal_size() << ")";
    std::cerr << '\n';
    return 2;
  } catch (const dpclust::Error& e) {
    std::cerr << "error[" << dpclust::ErrorCodeName(e.code()) << "]: " << e.what() << '\n';
    return 2;
  } catch (const Json::exception& e) {
    std::cerr << "error[io]: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
