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

// Privacy-level selection: given a target band [B_l, B_u] for the steady-state
// prediction or estimation MSE, return an epsilon interval that is sufficient
// to keep the MSE inside the band when sigma is set to the Gaussian
// mechanism's minimal value. The intervals are sufficient, not necessary, so
// an empty interval (eps_min > eps_max) is a normal outcome.

#pragma once

#include <cmath>
#include <map>
#include <string>
#include <string_view>

#include "dpkalman/bounds.hpp"
#include "dpkalman/error.hpp"
#include "dpkalman/linalg.hpp"
#include "dpkalman/privacy.hpp"

namespace dpkalman {

constexpr double kCalibrationDeltaMin = 1e-5;
constexpr double kCalibrationDeltaMax = 1e-1;

enum class CalibrationKind { kApriori, kAposteriori };

constexpr std::string_view CalibrationKindName(CalibrationKind kind) {
  return kind == CalibrationKind::kApriori ? "apriori" : "aposteriori";
}

struct CalibrationTarget {
  CalibrationKind kind = CalibrationKind::kApriori;
  double b_l = 0.0;
  double b_u = 0.0;
  double delta = 1e-3;
  double adjacency_b = 1.0;
};

struct EpsilonInterval {
  CalibrationKind kind = CalibrationKind::kApriori;
  double eps_min = 0.0;
  double eps_max = 0.0;
  bool feasible = false;
  std::map<std::string, double> eta_values;
  double sigma_at_eps_min = 0.0;
  double sigma_at_eps_max = 0.0;
  double sensitivity = 0.0;
  double k_delta = 0.0;
};

// Smallest epsilon with (9 + sqrt(2 eps)) / (2 eps) <= eta, i.e.
// (1/8) ((1 + sqrt(36 eta + 1)) / eta)^2.
inline double EpsilonFloor(double eta) {
  const double t = (1.0 + std::sqrt(36.0 * eta + 1.0)) / eta;
  return 0.125 * t * t;
}

namespace internal {

struct CalibrationInputs {
  Index n = 0;
  double tr_w = 0.0;
  double tr_hth = 0.0;
  double lambda_min_w = 0.0;
  double c_l = 0.0;
  double c_u = 0.0;
  double sensitivity = 0.0;
};

inline CalibrationInputs PrepareCalibration(const SystemModel& system,
                                            const CalibrationTarget& target) {
  system.Validate();
  if (!(target.delta >= kCalibrationDeltaMin &&
        target.delta <= kCalibrationDeltaMax)) {
    throw Error(ErrorKind::kInvalidTarget,
                "delta must lie in [1e-5, 1e-1], got " +
                    std::to_string(target.delta));
  }
  if (!(target.b_l < target.b_u)) {
    throw Error(ErrorKind::kInvalidTarget,
                "B_l must be strictly less than B_u");
  }
  CalibrationInputs in;
  in.n = system.state_dim();
  // The calibrated mechanism is isotropic, so the extreme channels depend on
  // C alone.
  const ChannelExtremes ext =
      FindChannelExtremes(system.C, Vector::Ones(system.output_dim()));
  in.c_l = ext.c_l;
  in.c_u = ext.c_u;
  if (in.c_l == 0.0) {
    throw Error(ErrorKind::kInvalidTarget,
                "C has a zero diagonal entry; the MSE upper bound is "
                "unbounded");
  }
  in.sensitivity = SensitivityBound(system.C, target.adjacency_b);
  if (!(in.sensitivity > 0.0)) {
    throw Error(ErrorKind::kInvalidTarget, "sensitivity must be positive");
  }
  in.tr_w = system.W.trace();
  in.tr_hth = (system.H.transpose() * system.H).trace();
  in.lambda_min_w = ExtremeEigenvalues(system.W).min;
  return in;
}

inline void FillInterval(EpsilonInterval& out, const CalibrationTarget& target,
                         double eps_min, double eps_max, double sensitivity) {
  out.eps_min = eps_min;
  out.eps_max = eps_max;
  out.feasible = eps_min <= eps_max;
  out.sensitivity = sensitivity;
  out.k_delta = QInverse(target.delta);
  out.sigma_at_eps_min = GaussianSigma(eps_min, target.delta, sensitivity);
  out.sigma_at_eps_max = GaussianSigma(eps_max, target.delta, sensitivity);
}

}  // namespace internal

// Epsilon range keeping tr Sigma inside [B_l, B_u]:
//   eta1 = sqrt((B_l - tr W) lam_n(W) Cu^2 /
//               (D^2 (tr(H^T H) lam_n(W) - B_l + tr W)))
//   eta3 = sqrt((B_u - tr W) Cl^2 / (D^2 tr(H^T H)))
//   EpsilonFloor(eta3) <= eps <= 1 / eta1
inline EpsilonInterval CalibrateApriori(const SystemModel& system,
                                        const CalibrationTarget& target) {
  const auto in = internal::PrepareCalibration(system, target);
  if (in.tr_hth == 0.0) {
    throw Error(ErrorKind::kDegenerateH,
                "tr(H^T H) = 0; the prediction MSE does not depend on "
                "epsilon");
  }
  if (!(target.b_l > in.tr_w)) {
    throw Error(ErrorKind::kInvalidTarget,
                "B_l must exceed tr W = " + std::to_string(in.tr_w));
  }
  const double denom = in.tr_hth * in.lambda_min_w - target.b_l + in.tr_w;
  if (!(denom > 0.0)) {
    throw Error(ErrorKind::kInvalidTarget,
                "B_l must be below tr W + tr(H^T H) lambda_n(W) = " +
                    std::to_string(in.tr_w + in.tr_hth * in.lambda_min_w));
  }
  const double d2 = in.sensitivity * in.sensitivity;
  const double eta1 = std::sqrt((target.b_l - in.tr_w) * in.lambda_min_w *
                                in.c_u * in.c_u / (d2 * denom));
  const double eta3 =
      std::sqrt((target.b_u - in.tr_w) * in.c_l * in.c_l / (d2 * in.tr_hth));
  EpsilonInterval out;
  out.kind = CalibrationKind::kApriori;
  out.eta_values = {{"eta1", eta1}, {"eta3", eta3}};
  internal::FillInterval(out, target, EpsilonFloor(eta3), 1.0 / eta1,
                         in.sensitivity);
  return out;
}

// Epsilon range keeping tr Sigma_bar inside [B_l, B_u]:
//   eta2 = sqrt(B_l Cu^2 / (D^2 (n - B_l / lam_n(W))))
//   eta4 = sqrt(B_u Cl^2 / (n D^2))
//   EpsilonFloor(eta4) <= eps <= 1 / eta2
inline EpsilonInterval CalibrateAposteriori(const SystemModel& system,
                                            const CalibrationTarget& target) {
  const auto in = internal::PrepareCalibration(system, target);
  const double n = static_cast<double>(in.n);
  if (!(target.b_l > 0.0)) {
    throw Error(ErrorKind::kInvalidTarget, "B_l must be positive");
  }
  const double denom = n - target.b_l / in.lambda_min_w;
  if (!(denom > 0.0)) {
    throw Error(ErrorKind::kInvalidTarget,
                "B_l must be below n lambda_n(W) = " +
                    std::to_string(n * in.lambda_min_w));
  }
  const double d2 = in.sensitivity * in.sensitivity;
  const double eta2 = std::sqrt(target.b_l * in.c_u * in.c_u / (d2 * denom));
  const double eta4 = std::sqrt(target.b_u * in.c_l * in.c_l / (n * d2));
  EpsilonInterval out;
  out.kind = CalibrationKind::kAposteriori;
  out.eta_values = {{"eta2", eta2}, {"eta4", eta4}};
  internal::FillInterval(out, target, EpsilonFloor(eta4), 1.0 / eta2,
                         in.sensitivity);
  return out;
}

inline EpsilonInterval Calibrate(const SystemModel& system,
                                 const CalibrationTarget& target) {
  return target.kind == CalibrationKind::kApriori
             ? CalibrateApriori(system, target)
             : CalibrateAposteriori(system, target);
}

struct VerificationReport {
  CalibrationKind kind = CalibrationKind::kApriori;
  double epsilon = 0.0;
  double sigma = 0.0;
  double achieved_trace = 0.0;
  bool within_bounds = false;
};

// Sets sigma to the mechanism minimum for epsilon, solves the Riccati
// equation with V = sigma^2 I and checks the resulting trace against the band.
inline VerificationReport VerifyCalibration(const SystemModel& system,
                                            const CalibrationTarget& target,
                                            double epsilon) {
  system.Validate();
  const double sensitivity = SensitivityBound(system.C, target.adjacency_b);
  VerificationReport out;
  out.kind = target.kind;
  out.epsilon = epsilon;
  out.sigma = GaussianSigma(epsilon, target.delta, sensitivity);
  if (!(out.sigma > 0.0)) {
    throw Error(ErrorKind::kSingularV,
                "sigma = 0 gives a singular noise covariance");
  }
  const Matrix v = Matrix::Identity(system.output_dim(), system.output_dim()) *
                   (out.sigma * out.sigma);
  const RiccatiSolution sol = SolveDare(system, v);
  out.achieved_trace = target.kind == CalibrationKind::kApriori
                           ? sol.sigma.trace()
                           : sol.sigma_bar.trace();
  out.within_bounds =
      out.achieved_trace >= target.b_l && out.achieved_trace <= target.b_u;
  return out;
}

}  // namespace dpkalman
