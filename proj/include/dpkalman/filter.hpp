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

#include <string>
#include <vector>

#include "dpkalman/error.hpp"
#include "dpkalman/linalg.hpp"
#include "dpkalman/privacy.hpp"

namespace dpkalman {

/**
 * @brief Steady-state Kalman filter for privatized outputs.
 *
 * The gain is fixed at its steady-state value from k = 0 onward; there is no
 * transient covariance recursion. Immutable once built, so one solution can
 * drive any number of concurrent RunFilter calls.
 */
struct FilterSolution {
  SystemModel system;
  Matrix V;
  RiccatiSolution riccati;

  const Matrix& gain() const { return riccati.gain; }
};

inline FilterSolution MakeFilterSolution(const SystemModel& system,
                                         const Matrix& v,
                                         const RiccatiOptions& options = {}) {
  FilterSolution sol{system, v, SolveDare(system, v, options)};
  return sol;
}

// V = diag(sigma^2).
inline FilterSolution MakeFilterSolution(const SystemModel& system,
                                         const Vector& sigma,
                                         const RiccatiOptions& options = {}) {
  if (sigma.size() != system.output_dim()) {
    throw Error(ErrorKind::kDimensionMismatch,
                "sigma must have length " +
                    std::to_string(system.output_dim()));
  }
  return MakeFilterSolution(system, NoiseCovariance(sigma), options);
}

struct FilterState {
  Index k = 0;
  Vector x_hat_prior;  // prediction of x(k) before seeing y~(k)
  Vector x_hat;        // estimate of x(k) after seeing y~(k)
};

// x^-(k+1) = H x^(k)
inline Vector Predict(const FilterSolution& sol, const Vector& x_hat) {
  if (x_hat.size() != sol.system.state_dim()) {
    throw Error(ErrorKind::kDimensionMismatch, "state estimate has wrong size");
  }
  return sol.system.H * x_hat;
}

// x^(k) = x^-(k) + Sigma_bar C^T V^-1 (y~(k) - C x^-(k))
inline Vector Update(const FilterSolution& sol, const Vector& x_hat_prior,
                     const Vector& y_tilde) {
  if (x_hat_prior.size() != sol.system.state_dim() ||
      y_tilde.size() != sol.system.output_dim()) {
    throw Error(ErrorKind::kDimensionMismatch,
                "update expects a length-" +
                    std::to_string(sol.system.state_dim()) +
                    " prediction and a length-" +
                    std::to_string(sol.system.output_dim()) + " output");
  }
  return x_hat_prior + sol.gain() * (y_tilde - sol.system.C * x_hat_prior);
}

inline std::vector<FilterState> RunFilter(const FilterSolution& sol,
                                          const Trajectory& y_tilde,
                                          const Vector& x0_hat) {
  if (y_tilde.samples.empty()) {
    throw Error(ErrorKind::kInvalidArgument, "trajectory is empty");
  }
  if (y_tilde.dim != sol.system.output_dim() ||
      x0_hat.size() != sol.system.state_dim()) {
    throw Error(ErrorKind::kDimensionMismatch,
                "trajectory or initial mean has the wrong dimension");
  }
  y_tilde.Validate();
  std::vector<FilterState> out;
  out.reserve(y_tilde.samples.size());
  Vector prior = x0_hat;
  for (Index k = 0; k < y_tilde.size(); ++k) {
    Vector post = Update(sol, prior, y_tilde.samples[k]);
    Vector next_prior = Predict(sol, post);
    out.push_back({k, std::move(prior), std::move(post)});
    prior = std::move(next_prior);
  }
  return out;
}

}  // namespace dpkalman
