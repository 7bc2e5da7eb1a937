//
// Copyright 2026 The dpkalman Authors
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
#include <random>

namespace dpkalman {

// Tags that separate the independent noise substreams of one trial.
enum class StreamTag : std::uint32_t {
  kPrivacy = 1,
  kProcess = 2,
  kInitialState = 3,
};

// A Gaussian source keyed by (seed, tag, index). Two streams with different
// keys are statistically independent, and a stream's draws depend only on its
// key and the number of draws already taken, so trials can run in any order
// on any thread and still reproduce bit-for-bit.
class GaussianStream {
 public:
  GaussianStream(std::uint64_t seed, StreamTag tag, std::uint64_t index) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed),
                      static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(tag),
                      static_cast<std::uint32_t>(index),
                      static_cast<std::uint32_t>(index >> 32)};
    engine_.seed(seq);
  }

  double Next() { return normal_(engine_); }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace dpkalman
