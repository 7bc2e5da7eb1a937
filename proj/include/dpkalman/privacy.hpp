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

// Gaussian mechanism for output perturbation of trajectory data: sensitivity
// of the output map, the standard normal tail function and its inverse, noise
// calibration and the privatization step itself.

#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "dpkalman/error.hpp"
#include "dpkalman/linalg.hpp"
#include "dpkalman/rng.hpp"

namespace dpkalman {

// Q(y) = P[Z > y] for standard normal Z.
inline double QFunction(double y) {
  return 0.5 * std::erfc(y / std::numbers::sqrt2);
}

namespace internal {

inline double StandardNormalDensity(double x) {
  return std::exp(-0.5 * x * x) * (0.5 * std::numbers::inv_sqrtpi *
                                    std::numbers::sqrt2);
}

// Acklam's rational approximation to the standard normal quantile, relative
// error about 1.15e-9. Used only as the starting point for refinement.
inline double ApproxNormalQuantile(double p) {
  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                 -2.759285104469687e+02, 1.383577518672690e+02,
                                 -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                 -1.556989798598866e+02, 6.680131188771972e+01,
                                 -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                 -2.400758277161838e+00, -2.549732539343734e+00,
                                 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                 2.445134137142996e+00, 3.754408661907416e+00};
  constexpr double kLow = 0.02425;
  constexpr double kHigh = 1.0 - kLow;

  if (p < kLow) {
    const double q = std::sqrt(-2.0 * std::log(p));
    return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q +
            c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  if (p > kHigh) {
    const double q = std::sqrt(-2.0 * std::log1p(-p));
    return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q +
             c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  const double q = p - 0.5;
  const double r = q * q;
  return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r +
          a[5]) *
         q /
         (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

}  // namespace internal

// K such that Q(K) = delta. The rational guess is polished with Halley steps on
// Q(x) - delta until the step stalls at machine precision.
inline double QInverse(double delta) {
  if (!(delta > 0.0 && delta < 1.0)) {
    throw Error(ErrorKind::kOutOfDomain,
                "Q^-1 requires 0 < delta < 1, got " + std::to_string(delta));
  }
  if (delta == 0.5) return 0.0;
  double x = -internal::ApproxNormalQuantile(delta);
  for (int i = 0; i < 50; ++i) {
    const double f = QFunction(x) - delta;
    const double pdf = internal::StandardNormalDensity(x);
    if (pdf == 0.0) break;
    const double step = 2.0 * f / (2.0 * pdf - f * x);
    x += step;
    if (std::abs(step) <= 1e-16 * std::max(1.0, std::abs(x))) break;
  }
  return x;
}

// Upper bound s_1(C) * B on the l2 sensitivity of y = C x over trajectories
// that differ by at most B in l2 norm.
inline double SensitivityBound(const Matrix& c, double adjacency_b) {
  if (!(adjacency_b > 0.0) || !std::isfinite(adjacency_b)) {
    throw Error(ErrorKind::kOutOfDomain,
                "adjacency bound B must be positive, got " +
                    std::to_string(adjacency_b));
  }
  const Vector s = SingularValues(c);
  if (s.size() == 0) return 0.0;
  return s(0) * adjacency_b;
}

inline void RequireMechanismDomain(double epsilon, double delta) {
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
    throw Error(ErrorKind::kOutOfDomain,
                "epsilon must be positive, got " + std::to_string(epsilon));
  }
  if (!(delta > 0.0 && delta < 0.5)) {
    throw Error(ErrorKind::kOutOfDomain,
                "delta must lie in (0, 0.5), got " + std::to_string(delta));
  }
}

// Smallest noise scale for which the Gaussian mechanism is
// (epsilon, delta)-differentially private:
//   sigma = sensitivity / (2 epsilon) * (K + sqrt(K^2 + 2 epsilon)),
// with K = Q^-1(delta).
inline double GaussianSigma(double epsilon, double delta, double sensitivity) {
  RequireMechanismDomain(epsilon, delta);
  if (!(sensitivity >= 0.0) || !std::isfinite(sensitivity)) {
    throw Error(ErrorKind::kOutOfDomain,
                "sensitivity must be nonnegative, got " +
                    std::to_string(sensitivity));
  }
  const double k = QInverse(delta);
  return sensitivity / (2.0 * epsilon) * (k + std::sqrt(k * k + 2.0 * epsilon));
}

struct PrivacyConfig {
  double epsilon = 0.0;
  double delta = 0.0;
  double adjacency_b = 0.0;
  double sensitivity = 0.0;
  double k_delta = 0.0;
  Vector sigma;  // per-channel noise scale

  double MinimalSigma() const {
    return GaussianSigma(epsilon, delta, sensitivity);
  }

  // True when every channel carries at least the mechanism's minimal noise.
  bool IsCompliant() const {
    const double floor = MinimalSigma();
    for (Index i = 0; i < sigma.size(); ++i) {
      if (sigma(i) < floor * (1.0 - 1e-12)) return false;
    }
    return true;
  }

  void Validate(Index output_dim) const {
    RequireMechanismDomain(epsilon, delta);
    if (!(adjacency_b > 0.0)) {
      throw Error(ErrorKind::kOutOfDomain, "adjacency_B must be positive");
    }
    if (!(sensitivity >= 0.0)) {
      throw Error(ErrorKind::kOutOfDomain, "sensitivity must be nonnegative");
    }
    if (std::abs(k_delta - QInverse(delta)) > 1e-9) {
      throw Error(ErrorKind::kInvalidArgument,
                  "k_delta does not match Q^-1(delta)");
    }
    if (sigma.size() != output_dim) {
      throw Error(ErrorKind::kDimensionMismatch,
                  "sigma must have one entry per output channel (" +
                      std::to_string(output_dim) + "), got " +
                      std::to_string(sigma.size()));
    }
    if (!sigma.allFinite() || (sigma.array() < 0.0).any()) {
      throw Error(ErrorKind::kNonPositiveSigma,
                  "sigma entries must be finite and nonnegative");
    }
  }
};

// Builds the isotropic mechanism for output matrix C: sensitivity from
// s_1(C) B and sigma at the minimal compliant value unless overridden.
inline PrivacyConfig MakePrivacyConfig(double epsilon, double delta,
                                       double adjacency_b, const Matrix& c,
                                       std::optional<Vector> sigma_override =
                                           std::nullopt) {
  PrivacyConfig cfg;
  cfg.epsilon = epsilon;
  cfg.delta = delta;
  cfg.adjacency_b = adjacency_b;
  cfg.sensitivity = SensitivityBound(c, adjacency_b);
  RequireMechanismDomain(epsilon, delta);
  cfg.k_delta = QInverse(delta);
  if (sigma_override) {
    cfg.sigma = *sigma_override;
  } else {
    cfg.sigma = Vector::Constant(c.rows(), cfg.MinimalSigma());
  }
  cfg.Validate(c.rows());
  return cfg;
}

// V = diag(sigma_1^2, ..., sigma_q^2)
inline Matrix NoiseCovariance(const Vector& sigma) {
  return sigma.array().square().matrix().asDiagonal();
}

// Samples indexed k = 0, 1, ..., T-1.
struct Trajectory {
  Index dim = 0;
  std::vector<Vector> samples;

  Index size() const { return static_cast<Index>(samples.size()); }

  void Validate() const {
    if (dim <= 0) {
      throw Error(ErrorKind::kDimensionMismatch,
                  "trajectory dimension must be positive");
    }
    for (const auto& s : samples) {
      if (s.size() != dim) {
        throw Error(ErrorKind::kDimensionMismatch,
                    "trajectory sample has length " + std::to_string(s.size()) +
                        ", expected " + std::to_string(dim));
      }
      if (!s.allFinite()) {
        throw Error(ErrorKind::kInvalidArgument,
                    "trajectory sample is not finite");
      }
    }
  }
};

// Adds v(k) ~ N(0, diag(sigma^2)) independently at every step. Draws are
// taken in (k, channel) order from the privacy stream for `stream_index`.
inline Trajectory Privatize(const Trajectory& y, const Vector& sigma,
                            std::uint64_t seed, std::uint64_t stream_index = 0) {
  y.Validate();
  if (sigma.size() != y.dim) {
    throw Error(ErrorKind::kDimensionMismatch,
                "sigma length does not match trajectory dimension");
  }
  if (!sigma.allFinite() || (sigma.array() < 0.0).any()) {
    throw Error(ErrorKind::kNonPositiveSigma, "sigma entries must be >= 0");
  }
  GaussianStream noise(seed, StreamTag::kPrivacy, stream_index);
  Trajectory out{y.dim, {}};
  out.samples.reserve(y.samples.size());
  for (const auto& sample : y.samples) {
    Vector noisy = sample;
    for (Index i = 0; i < y.dim; ++i) noisy(i) += sigma(i) * noise.Next();
    out.samples.push_back(std::move(noisy));
  }
  return out;
}

}  // namespace dpkalman
