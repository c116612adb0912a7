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

#include <cstdint>
#include <iostream>
#include <mutex>
#include <random>
#include <set>
#include <string>

#include "dpclust/error.hpp"

namespace dpclust {

// Private draws real noise. ZeroNoise replaces every Laplace and Gaussian
// draw by 0 and makes the exponential mechanism return the lowest-index
// maximizer, which turns every algorithm into its deterministic skeleton.
enum class NoiseMode { kPrivate, kZeroNoise };

namespace internal {

inline std::uint64_t SplitMix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline void WarnZeroNoise(const std::string& where) {
  static std::mutex mu;
  static std::set<std::string> seen;
  std::lock_guard<std::mutex> lock(mu);
  if (seen.insert(where).second) {
    std::clog << "warning: " << where
              << " running with zero noise; output is NOT private\n";
  }
}

}  // namespace internal

// Reproducible random source identified by (seed, stream id). Children are
// derived deterministically, so independent trials can each own a stream.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed, std::uint64_t stream_id = 0,
                        NoiseMode mode = NoiseMode::kPrivate)
      : seed_(seed), stream_id_(stream_id), mode_(mode) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed),
                      static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream_id),
                      static_cast<std::uint32_t>(stream_id >> 32)};
    engine_.seed(seq);
  }

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_id_; }
  NoiseMode mode() const { return mode_; }
  bool zero_noise() const { return mode_ == NoiseMode::kZeroNoise; }

  // Child stream keyed by `tag`; the same tag always yields the same child.
  RandomStream Child(std::uint64_t tag) const {
    return RandomStream(seed_, internal::SplitMix64(stream_id_ ^
                                                    internal::SplitMix64(tag)),
                        mode_);
  }

  // Fresh child stream; successive calls give distinct children.
  RandomStream Split() { return Child(0x5eed0000ULL + split_count_++); }

  // Uniform double in the open interval (0, 1).
  double Uniform() {
    std::uint64_t bits = engine_() >> 11;
    return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
  }

  // Uniform integer in [0, n).
  std::uint64_t UniformIndex(std::uint64_t n) {
    internal::RequireArg(n > 0, "UniformIndex requires n > 0");
    std::uniform_int_distribution<std::uint64_t> dist(0, n - 1);
    return dist(engine_);
  }

  double StandardNormal() { return normal_(engine_); }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_id_;
  NoiseMode mode_;
  std::uint64_t split_count_ = 0;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace dpclust
