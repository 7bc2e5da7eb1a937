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

// Closed-form bounds on the steady-state error covariances of a Kalman filter
// fed with Gaussian-privatized outputs. All bounds assume a square diagonal
// output matrix C and per-channel noise scales sigma_i, so that
// C^T V^-1 C = diag(C_ii^2 / sigma_i^2).

#pragma once

#include <cmath>
#include <map>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>

#include "dpkalman/error.hpp"
#include "dpkalman/linalg.hpp"

namespace dpkalman {

// Off-diagonal entries below this fraction of max |C_ii| count as zero.
constexpr double kDiagonalTolerance = 1e-12;

inline void RequireDiagonalOutput(const Matrix& c) {
  if (c.rows() != c.cols() || c.rows() == 0) {
    throw Error(ErrorKind::kNotDiagonal,
                "diagonal-output assumption violated: C must be square, got " +
                    ShapeString(c));
  }
  const double scale = c.diagonal().cwiseAbs().maxCoeff();
  for (Index i = 0; i < c.rows(); ++i) {
    for (Index j = 0; j < c.cols(); ++j) {
      if (i != j && std::abs(c(i, j)) > kDiagonalTolerance * scale) {
        throw Error(ErrorKind::kNotDiagonal,
                    "diagonal-output assumption violated: C(" +
                        std::to_string(i) + "," + std::to_string(j) +
                        ") = " + std::to_string(c(i, j)));
      }
    }
  }
}

// Channels with the smallest (l) and largest (u) signal-to-noise ratio
// C_ii^2 / sigma_i^2. Ties go to the lowest index.
struct ChannelExtremes {
  Index l = 0;
  Index u = 0;
  double c_l = 0.0;
  double c_u = 0.0;
  double sigma_l = 0.0;
  double sigma_u = 0.0;

  double ratio_l() const { return c_l * c_l / (sigma_l * sigma_l); }
  double ratio_u() const { return c_u * c_u / (sigma_u * sigma_u); }
};

inline ChannelExtremes FindChannelExtremes(const Matrix& c,
                                           const Vector& sigma) {
  RequireDiagonalOutput(c);
  if (sigma.size() != c.rows()) {
    throw Error(ErrorKind::kDimensionMismatch,
                "sigma must have length " + std::to_string(c.rows()));
  }
  for (Index i = 0; i < sigma.size(); ++i) {
    if (!(sigma(i) > 0.0) || !std::isfinite(sigma(i))) {
      throw Error(ErrorKind::kNonPositiveSigma,
                  "sigma_" + std::to_string(i) + " must be positive, got " +
                      std::to_string(sigma(i)));
    }
  }
  ChannelExtremes out;
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (Index i = 0; i < sigma.size(); ++i) {
    const double r = c(i, i) * c(i, i) / (sigma(i) * sigma(i));
    if (r < lo) {
      lo = r;
      out.l = i;
    }
    if (r > hi) {
      hi = r;
      out.u = i;
    }
  }
  out.c_l = c(out.l, out.l);
  out.c_u = c(out.u, out.u);
  out.sigma_l = sigma(out.l);
  out.sigma_u = sigma(out.u);
  return out;
}

enum class BoundKind {
  kAprioriTrace,
  kAposterioriTrace,
  kAprioriLogDet,
  kAposterioriLogDet,
};

constexpr std::string_view BoundKindName(BoundKind kind) {
  switch (kind) {
    case BoundKind::kAprioriTrace: return "apriori_trace";
    case BoundKind::kAposterioriTrace: return "aposteriori_trace";
    case BoundKind::kAprioriLogDet: return "apriori_logdet";
    case BoundKind::kAposterioriLogDet: return "aposteriori_logdet";
  }
  return "unknown";
}

struct BoundReport {
  BoundKind kind = BoundKind::kAprioriTrace;
  double lower = 0.0;
  std::optional<double> upper;  // absent when the bound does not apply
  bool applicable = true;
  std::map<std::string, double> intermediates;

  bool Contains(double value) const {
    return value >= lower && (!upper || value <= *upper);
  }
};

namespace internal {

// Scalars shared by all four bounds.
struct SystemScalars {
  Index n = 0;
  double tr_w = 0.0;
  double tr_hth = 0.0;
  double lambda_min_w = 0.0;
  double lambda_max_w = 0.0;
  double det_h = 0.0;
  double det_w = 0.0;
  Vector singular_h;
  ChannelExtremes ext;
};

inline SystemScalars Prepare(const SystemModel& system, const Vector& sigma) {
  system.Validate();
  SystemScalars s;
  s.ext = FindChannelExtremes(system.C, sigma);
  s.n = system.state_dim();
  s.tr_w = system.W.trace();
  s.tr_hth = (system.H.transpose() * system.H).trace();
  const EigenRange w_range = ExtremeEigenvalues(system.W);
  s.lambda_min_w = w_range.min;
  s.lambda_max_w = w_range.max;
  s.det_h = Determinant(system.H);
  s.det_w = Determinant(system.W);
  s.singular_h = SingularValues(system.H);
  return s;
}

inline void RecordCommon(const SystemScalars& s, BoundReport& report) {
  auto& m = report.intermediates;
  m["n"] = static_cast<double>(s.n);
  m["tr_W"] = s.tr_w;
  m["tr_HtH"] = s.tr_hth;
  m["lambda_n_W"] = s.lambda_min_w;
  m["lambda_1_W"] = s.lambda_max_w;
  m["det_H"] = s.det_h;
  m["det_W"] = s.det_w;
  m["l"] = static_cast<double>(s.ext.l);
  m["u"] = static_cast<double>(s.ext.u);
  m["C_l"] = s.ext.c_l;
  m["C_u"] = s.ext.c_u;
  m["sigma_l"] = s.ext.sigma_l;
  m["sigma_u"] = s.ext.sigma_u;
  for (Index i = 0; i < s.singular_h.size(); ++i) {
    m["s_" + std::to_string(i + 1) + "_H"] = s.singular_h(i);
  }
}

}  // namespace internal

// Bounds on tr Sigma, the steady-state prediction MSE:
//   tr W + su^2 tr(H^T H) lam_n(W) / (su^2 + lam_n(W) Cu^2)
//     <= tr Sigma <= tr W + sl^2 tr(H^T H) / Cl^2
inline BoundReport AprioriTraceBounds(const SystemModel& system,
                                      const Vector& sigma) {
  const auto s = internal::Prepare(system, sigma);
  const double su2 = s.ext.sigma_u * s.ext.sigma_u;
  const double sl2 = s.ext.sigma_l * s.ext.sigma_l;
  BoundReport r;
  r.kind = BoundKind::kAprioriTrace;
  r.lower = s.tr_w + su2 * s.tr_hth * s.lambda_min_w /
                         (su2 + s.lambda_min_w * s.ext.c_u * s.ext.c_u);
  r.upper = s.tr_w + sl2 * s.tr_hth / (s.ext.c_l * s.ext.c_l);
  internal::RecordCommon(s, r);
  return r;
}

// Bounds on tr Sigma_bar, the steady-state estimation MSE:
//   n su^2 / (Cu^2 + su^2 / lam_n(W)) <= tr Sigma_bar <= n sl^2 / Cl^2
inline BoundReport AposterioriTraceBounds(const SystemModel& system,
                                          const Vector& sigma) {
  const auto s = internal::Prepare(system, sigma);
  const double n = static_cast<double>(s.n);
  const double su2 = s.ext.sigma_u * s.ext.sigma_u;
  const double sl2 = s.ext.sigma_l * s.ext.sigma_l;
  BoundReport r;
  r.kind = BoundKind::kAposterioriTrace;
  r.lower = n * su2 / (s.ext.c_u * s.ext.c_u + su2 / s.lambda_min_w);
  r.upper = n * sl2 / (s.ext.c_l * s.ext.c_l);
  internal::RecordCommon(s, r);
  return r;
}

/**
 * Log-determinant bounds for Sigma.
 *
 * With gamma_i = sigma_i^2 W_ii / (sigma_i^2 + C_ii^2 W_ii) and
 * eta = s_n(H)^2 max_i gamma_i + lam_n(W), the upper bound
 *   ln det Sigma < sl^2 lam_1(W) / (sl^2 + eta Cl^2 - sl^2 s_1(H)^2)
 *                  * sum_i s_i(H)^2 + tr W
 * holds only when s_1(H)^2 < 1 + eta Cl^2 / sl^2. Otherwise the report is
 * marked inapplicable and carries no upper value. The lower bound
 *   ln det Sigma >= ln[su^2 det(H)^2 / (su^2/lam_n(W) + Cu^2 + su^2 ln n)
 *                      + det W]
 * is always reported.
 */
inline BoundReport AprioriLogDetBounds(const SystemModel& system,
                                       const Vector& sigma) {
  const auto s = internal::Prepare(system, sigma);
  const double n = static_cast<double>(s.n);
  const double su2 = s.ext.sigma_u * s.ext.sigma_u;
  const double sl2 = s.ext.sigma_l * s.ext.sigma_l;
  const double cl2 = s.ext.c_l * s.ext.c_l;
  const double cu2 = s.ext.c_u * s.ext.c_u;

  BoundReport r;
  r.kind = BoundKind::kAprioriLogDet;
  internal::RecordCommon(s, r);

  double gamma_max = -std::numeric_limits<double>::infinity();
  for (Index i = 0; i < s.n; ++i) {
    const double si2 = sigma(i) * sigma(i);
    const double wii = system.W(i, i);
    const double cii = system.C(i, i);
    const double gamma = si2 * wii / (si2 + cii * cii * wii);
    r.intermediates["gamma_" + std::to_string(i + 1)] = gamma;
    gamma_max = std::max(gamma_max, gamma);
  }
  const double s1 = s.singular_h(0);
  const double sn = s.singular_h(s.singular_h.size() - 1);
  const double eta = sn * sn * gamma_max + s.lambda_min_w;
  const double lhs = s1 * s1;
  const double rhs = 1.0 + eta * cl2 / sl2;
  r.intermediates["lambda_1_Gamma"] = gamma_max;
  r.intermediates["eta"] = eta;
  r.intermediates["precondition_lhs"] = lhs;
  r.intermediates["precondition_rhs"] = rhs;

  r.lower = std::log(su2 * s.det_h * s.det_h /
                         (su2 / s.lambda_min_w + cu2 + su2 * std::log(n)) +
                     s.det_w);
  r.applicable = lhs < rhs;
  if (r.applicable) {
    const double sum_s2 = s.singular_h.squaredNorm();
    r.upper = sl2 * s.lambda_max_w / (sl2 + eta * cl2 - sl2 * lhs) * sum_s2 +
              s.tr_w;
  }
  return r;
}

// n ln(su^2 / (Cu^2 + su^2 / lam_n(W))) <= ln det Sigma_bar <= n ln(sl^2 / Cl^2)
inline BoundReport AposterioriLogDetBounds(const SystemModel& system,
                                           const Vector& sigma) {
  const auto s = internal::Prepare(system, sigma);
  const double n = static_cast<double>(s.n);
  const double su2 = s.ext.sigma_u * s.ext.sigma_u;
  const double sl2 = s.ext.sigma_l * s.ext.sigma_l;
  BoundReport r;
  r.kind = BoundKind::kAposterioriLogDet;
  r.lower =
      n * std::log(su2 / (s.ext.c_u * s.ext.c_u + su2 / s.lambda_min_w));
  r.upper = n * std::log(sl2 / (s.ext.c_l * s.ext.c_l));
  internal::RecordCommon(s, r);
  return r;
}

struct AllBounds {
  BoundReport apriori_trace;
  BoundReport aposteriori_trace;
  BoundReport apriori_logdet;
  BoundReport aposteriori_logdet;
};

inline AllBounds ComputeAllBounds(const SystemModel& system,
                                  const Vector& sigma) {
  return {AprioriTraceBounds(system, sigma),
          AposterioriTraceBounds(system, sigma),
          AprioriLogDetBounds(system, sigma),
          AposterioriLogDetBounds(system, sigma)};
}

// Entropy of N(mu, cov): (n/2) ln(2 pi e) + (1/2) ln det cov.
inline double DifferentialEntropy(const Matrix& cov) {
  RequireSymmetric(cov, "covariance");
  const double n = static_cast<double>(cov.rows());
  return 0.5 * n * std::log(2.0 * std::numbers::pi * std::numbers::e) +
         0.5 * LogDetSpd(cov);
}

}  // namespace dpkalman
