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

#include <charconv>
#include <cmath>
#include <cstddef>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "dpclust/error.hpp"
#include "dpclust/geometry.hpp"
#include "dpclust/gmm.hpp"
#include "dpclust/tuples.hpp"

namespace dpclust {

using Json = nlohmann::json;

// Parses a probability or rate written either as a plain number ("1e-6") or
// as a power of e ("e^-28").
inline double ParseRate(const std::string& text) {
  std::string s = text;
  if (s.rfind("e^", 0) == 0) {
    std::size_t used = 0;
    double exponent = 0.0;
    try {
      exponent = std::stod(s.substr(2), &used);
    } catch (const std::exception&) {
      used = 0;
    }
    internal::RequireArg(used > 0 && used == s.size() - 2, "cannot parse rate: " + text);
    return std::exp(exponent);
  }
  std::size_t used = 0;
  double value = 0.0;
  try {
    value = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  internal::RequireArg(used > 0 && used == s.size(), "cannot parse rate: " + text);
  return value;
}

namespace internal {

inline std::vector<double> ParseCsvRow(const std::string& line, std::size_t row) {
  std::vector<double> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(cell, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    while (used < cell.size() && std::isspace(static_cast<unsigned char>(cell[used]))) ++used;
    Require(used > 0 && used == cell.size(), ErrorCode::kIo,
            "bad number on csv row " + std::to_string(row) + ": '" + cell + "'");
    out.push_back(v);
  }
  return out;
}

inline bool IsHeader(const std::string& line) {
  return !line.empty() && (std::isalpha(static_cast<unsigned char>(line[0])) != 0);
}

}  // namespace internal

// One tuple per line: a JSON array of k points, each an array of d numbers.
// All lines must agree on k and d; with `lambda`, every point must lie in
// the ball of that radius.
inline TupleDatabase ReadTuplesJsonl(std::istream& in,
                                     std::optional<double> lambda = std::nullopt) {
  std::optional<TupleDatabase> db;
  std::string line;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    Json j;
    try {
      j = Json::parse(line);
    } catch (const Json::exception& e) {
      throw Error(ErrorCode::kIo, "line " + std::to_string(row) + ": " + e.what());
    }
    std::vector<Point> points;
    try {
      points = j.get<std::vector<Point>>();
    } catch (const Json::exception&) {
      throw Error(ErrorCode::kIo,
                  "line " + std::to_string(row) + ": expected an array of points");
    }
    internal::Require(!points.empty() && !points.front().empty(), ErrorCode::kIo,
                      "line " + std::to_string(row) + ": empty tuple");
    if (!db) db.emplace(points.size(), points.front().size());
    internal::Require(points.size() == db->k(), ErrorCode::kShapeMismatch,
                      "line " + std::to_string(row) + ": tuple size differs");
    for (const Point& p : points) {
      internal::Require(p.size() == db->d(), ErrorCode::kShapeMismatch,
                        "line " + std::to_string(row) + ": point dimension differs");
      if (lambda) {
        internal::Require(Norm(p) <= *lambda, ErrorCode::kOutOfDomain,
                          "line " + std::to_string(row) + ": point outside the domain ball");
      }
    }
    db->Add(points);
  }
  internal::Require(db.has_value(), ErrorCode::kIo, "no tuples in input");
  return std::move(*db);
}

inline void WriteTuplesJsonl(std::ostream& out, const TupleDatabase& db) {
  for (std::size_t i = 0; i < db.size(); ++i) {
    Json row = Json::array();
    for (std::size_t j = 0; j < db.k(); ++j) {
      PointView p = db[i].point(j);
      row.push_back(Point(p.begin(), p.end()));
    }
    out << row.dump() << '\n';
  }
}

// Comma separated points, one per row; a leading header row is skipped.
inline PointSet ReadPointsCsv(std::istream& in) {
  std::optional<PointSet> points;
  std::string line;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || (row == 1 && internal::IsHeader(line))) continue;
    std::vector<double> values = internal::ParseCsvRow(line, row);
    if (!points) points.emplace(values.size());
    internal::Require(values.size() == points->dim(), ErrorCode::kShapeMismatch,
                      "csv row " + std::to_string(row) + " has a different width");
    points->Add(values);
  }
  internal::Require(points.has_value(), ErrorCode::kIo, "no points in input");
  return std::move(*points);
}

inline void WritePointsCsv(std::ostream& out, const PointSet& points) {
  auto old = out.precision(17);
  for (std::size_t c = 0; c < points.dim(); ++c) out << (c ? "," : "") << 'x' << c;
  out << '\n';
  for (std::size_t i = 0; i < points.size(); ++i) {
    for (std::size_t c = 0; c < points.dim(); ++c) out << (c ? "," : "") << points[i][c];
    out << '\n';
  }
  out.precision(old);
}

// Labeled sample: coordinate columns followed by an integer label column.
inline void WriteSampleCsv(std::ostream& out, const LabeledSample& sample) {
  auto old = out.precision(17);
  for (std::size_t c = 0; c < sample.points.dim(); ++c) out << 'x' << c << ',';
  out << "label\n";
  for (std::size_t i = 0; i < sample.points.size(); ++i) {
    for (double v : sample.points[i]) out << v << ',';
    out << sample.labels[i] << '\n';
  }
  out.precision(old);
}

inline LabeledSample ReadSampleCsv(std::istream& in) {
  PointSet raw = ReadPointsCsv(in);
  internal::Require(raw.dim() >= 2, ErrorCode::kShapeMismatch,
                    "sample csv needs coordinates and a label column");
  std::size_t d = raw.dim() - 1;
  LabeledSample out{PointSet(d), {}};
  out.points.Reserve(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    PointView row = raw[i];
    double label = row[d];
    internal::Require(label >= 0 && std::floor(label) == label, ErrorCode::kIo,
                      "labels must be non-negative integers");
    out.points.Add(row.first(d));
    out.labels.push_back(static_cast<std::size_t>(label));
  }
  return out;
}

// {"bounds": {...}, "components": [{"weight", "mean", "variances" | "sigma"}]}
inline MixtureParams MixtureFromJson(const Json& j) {
  try {
    MixtureBounds bounds;
    if (j.contains("bounds")) {
      const Json& b = j.at("bounds");
      bounds.radius = b.value("radius", bounds.radius);
      bounds.sigma_max = b.value("sigma_max", bounds.sigma_max);
      bounds.sigma_min = b.value("sigma_min", bounds.sigma_min);
      bounds.w_min = b.value("w_min", bounds.w_min);
    }
    std::vector<MixtureComponent> comps;
    for (const Json& c : j.at("components")) {
      MixtureComponent comp;
      comp.weight = c.at("weight").get<double>();
      comp.mean = c.at("mean").get<Point>();
      if (c.contains("variances")) {
        comp.variances = c.at("variances").get<std::vector<double>>();
      } else {
        double sigma = c.at("sigma").get<double>();
        comp.variances.assign(comp.mean.size(), sigma * sigma);
      }
      comps.push_back(std::move(comp));
    }
    return MixtureParams(std::move(comps), bounds);
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::kIo, std::string("bad mixture config: ") + e.what());
  }
}

inline Json MixtureToJson(const MixtureParams& m) {
  Json comps = Json::array();
  for (const MixtureComponent& c : m.components()) {
    comps.push_back({{"weight", c.weight}, {"mean", c.mean}, {"variances", c.variances}});
  }
  const MixtureBounds& b = m.bounds();
  return {{"bounds",
           {{"radius", b.radius},
            {"sigma_max", b.sigma_max},
            {"sigma_min", b.sigma_min},
            {"w_min", b.w_min}}},
          {"components", comps}};
}

inline Json EstimateToJson(const MixtureEstimate& e) {
  Json comps = Json::array();
  for (std::size_t i = 0; i < e.components.size(); ++i) {
    comps.push_back({{"weight", e.weights[i]},
                     {"mean", e.components[i].mean},
                     {"variances", e.components[i].variances}});
  }
  return {{"components", comps}};
}

}  // namespace dpclust
