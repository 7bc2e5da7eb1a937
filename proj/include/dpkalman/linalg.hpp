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

// Small dense matrix helpers and the steady-state Riccati solver shared by the
// filter, bounds and calibration code.

#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "dpkalman/error.hpp"

namespace dpkalman {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

constexpr double kSymmetryTolerance = 1e-9;
constexpr double kDefaultRankTolerance = 1e-10;

inline std::string ShapeString(const Matrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

inline bool AllFinite(const Matrix& m) { return m.allFinite(); }

inline double MaxAsymmetry(const Matrix& s) {
  if (s.rows() != s.cols()) return std::numeric_limits<double>::infinity();
  return (s - s.transpose()).cwiseAbs().maxCoeff();
}

inline void RequireSquare(const Matrix& m, const char* name) {
  if (m.rows() != m.cols() || m.rows() == 0) {
    throw Error(ErrorKind::kDimensionMismatch,
                std::string(name) + " must be square and nonempty, got " +
                    ShapeString(m));
  }
}

inline void RequireSymmetric(const Matrix& s, const char* name,
                             double tol = kSymmetryTolerance) {
  RequireSquare(s, name);
  if (!s.allFinite()) {
    throw Error(ErrorKind::kInvalidArgument,
                std::string(name) + " has non-finite entries");
  }
  if (MaxAsymmetry(s) > tol) {
    throw Error(ErrorKind::kNonSymmetric,
                std::string(name) + " is not symmetric (max |S_ij - S_ji| = " +
                    std::to_string(MaxAsymmetry(s)) + ")");
  }
}

inline Matrix Symmetrized(const Matrix& s) {
  return 0.5 * (s + s.transpose());
}

struct EigenRange {
  double min = 0.0;
  double max = 0.0;
};

inline EigenRange ExtremeEigenvalues(const Matrix& s,
                                     double sym_tol = kSymmetryTolerance) {
  RequireSymmetric(s, "S", sym_tol);
  Eigen::SelfAdjointEigenSolver<Matrix> solver(Symmetrized(s),
                                               Eigen::EigenvaluesOnly);
  const Vector& ev = solver.eigenvalues();  // ascending
  return {ev(0), ev(ev.size() - 1)};
}

// Singular values, largest first.
inline Vector SingularValues(const Matrix& a) {
  if (!a.allFinite()) {
    throw Error(ErrorKind::kInvalidArgument, "matrix has non-finite entries");
  }
  if (a.size() == 0) return Vector();
  Eigen::JacobiSVD<Matrix> svd(a);
  return svd.singularValues();
}

inline Index NumericalRank(const Matrix& a,
                           double rank_tol = kDefaultRankTolerance) {
  const Vector s = SingularValues(a);
  if (s.size() == 0 || s(0) <= 0.0) return 0;
  const double cutoff = rank_tol * s(0);
  Index rank = 0;
  for (Index i = 0; i < s.size(); ++i) {
    if (s(i) > cutoff) ++rank;
  }
  return rank;
}

// Rank test on [C; CH; ...; CH^{n-1}].
inline bool IsObservable(const Matrix& h, const Matrix& c,
                         double rank_tol = kDefaultRankTolerance) {
  RequireSquare(h, "H");
  const Index n = h.rows();
  if (c.cols() != n) {
    throw Error(ErrorKind::kDimensionMismatch,
                "C must have " + std::to_string(n) + " columns, got " +
                    ShapeString(c));
  }
  const Index q = c.rows();
  Matrix stacked(q * n, n);
  Matrix block = c;
  for (Index i = 0; i < n; ++i) {
    stacked.middleRows(i * q, q) = block;
    block = block * h;
  }
  return NumericalRank(stacked, rank_tol) == n;
}

// D with W = D D^T from the eigendecomposition of a symmetric PSD W. Tiny
// negative eigenvalues (above -1e-9) are clamped to zero.
inline Matrix SymmetricFactor(const Matrix& w) {
  RequireSymmetric(w, "W");
  Eigen::SelfAdjointEigenSolver<Matrix> solver(Symmetrized(w));
  Vector ev = solver.eigenvalues();
  if (ev.minCoeff() < -1e-9) {
    throw Error(ErrorKind::kFactorizationFailure,
                "W has a negative eigenvalue " + std::to_string(ev.minCoeff()));
  }
  ev = ev.cwiseMax(0.0);
  return solver.eigenvectors() * ev.cwiseSqrt().asDiagonal();
}

// Rank test on [D, HD, ..., H^{n-1}D] with W = D D^T.
inline bool IsControllable(const Matrix& h, const Matrix& w,
                           double rank_tol = kDefaultRankTolerance) {
  RequireSquare(h, "H");
  const Index n = h.rows();
  if (w.rows() != n || w.cols() != n) {
    throw Error(ErrorKind::kDimensionMismatch,
                "W must be " + std::to_string(n) + "x" + std::to_string(n));
  }
  const Matrix d = SymmetricFactor(w);
  Matrix stacked(n, n * n);
  Matrix block = d;
  for (Index i = 0; i < n; ++i) {
    stacked.middleCols(i * n, n) = block;
    block = h * block;
  }
  return NumericalRank(stacked, rank_tol) == n;
}

// Public LTI model: x(k+1) = H x(k) + w(k), y(k) = C x(k), w ~ N(0, W).
struct SystemModel {
  Matrix H;
  Matrix C;
  Matrix W;
  Vector x0_hat;

  Index state_dim() const { return H.rows(); }
  Index output_dim() const { return C.rows(); }

  void Validate() const {
    RequireSquare(H, "H");
    const Index n = H.rows();
    if (C.cols() != n || C.rows() == 0) {
      throw Error(ErrorKind::kDimensionMismatch,
                  "C must be q x " + std::to_string(n) + ", got " +
                      ShapeString(C));
    }
    if (W.rows() != n || W.cols() != n) {
      throw Error(ErrorKind::kDimensionMismatch,
                  "W must be " + std::to_string(n) + "x" + std::to_string(n) +
                      ", got " + ShapeString(W));
    }
    if (x0_hat.size() != n) {
      throw Error(ErrorKind::kDimensionMismatch,
                  "x0_hat must have length " + std::to_string(n));
    }
    if (!H.allFinite() || !C.allFinite() || !x0_hat.allFinite()) {
      throw Error(ErrorKind::kInvalidArgument,
                  "system matrices must be finite");
    }
    RequireSymmetric(W, "W");
    const EigenRange range = ExtremeEigenvalues(W);
    if (!(range.min > 0.0) || range.min < 1e-14 * range.max) {
      throw Error(ErrorKind::kNotPositiveDefinite,
                  "W must be positive definite (lambda_min = " +
                      std::to_string(range.min) + ")");
    }
  }
};

// Inverse of a symmetric positive definite matrix through an LDLT solve.
inline Matrix SpdInverse(const Matrix& s, ErrorKind on_failure,
                         const char* name) {
  Eigen::LDLT<Matrix> ldlt(Symmetrized(s));
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) {
    throw Error(on_failure, std::string(name) + " is not invertible");
  }
  Matrix inv = ldlt.solve(Matrix::Identity(s.rows(), s.cols()));
  if (!inv.allFinite()) {
    throw Error(on_failure, std::string(name) + " is not invertible");
  }
  return Symmetrized(inv);
}

inline void RequireNoiseCovariance(const Matrix& v) {
  RequireSymmetric(v, "V");
  const EigenRange range = ExtremeEigenvalues(v);
  if (!(range.min > 0.0) || range.min < 1e-15 * range.max) {
    throw Error(ErrorKind::kSingularV,
                "V must be positive definite (lambda_min = " +
                    std::to_string(range.min) + ")");
  }
}

// C^T V^{-1} C
inline Matrix InformationMatrix(const Matrix& c, const Matrix& v) {
  Eigen::LDLT<Matrix> ldlt(Symmetrized(v));
  const Matrix vinv_c = ldlt.solve(c);
  return Symmetrized(c.transpose() * vinv_c);
}

// Sigma_bar = (C^T V^{-1} C + Sigma^{-1})^{-1}
inline Matrix PosteriorCovariance(const Matrix& sigma, const Matrix& c,
                                  const Matrix& v) {
  RequireSymmetric(sigma, "Sigma");
  if (c.cols() != sigma.rows() || v.rows() != c.rows()) {
    throw Error(ErrorKind::kDimensionMismatch,
                "Sigma " + ShapeString(sigma) + ", C " + ShapeString(c) +
                    ", V " + ShapeString(v) + " are inconsistent");
  }
  RequireNoiseCovariance(v);
  const EigenRange range = ExtremeEigenvalues(sigma);
  if (!(range.max > 0.0) || range.min < 1e-12 * range.max) {
    throw Error(ErrorKind::kSingularSigma,
                "Sigma is singular (lambda_min = " +
                    std::to_string(range.min) + ")");
  }
  const Matrix sigma_inv =
      SpdInverse(sigma, ErrorKind::kSingularSigma, "Sigma");
  return SpdInverse(InformationMatrix(c, v) + sigma_inv,
                    ErrorKind::kSingularSigma, "C^T V^-1 C + Sigma^-1");
}

struct RiccatiOptions {
  double step_tolerance = 1e-12;
  double residual_tolerance = 1e-10;
  long max_iterations = 100000;
  double rank_tolerance = kDefaultRankTolerance;
};

struct RiccatiSolution {
  Matrix sigma;      // a priori steady-state covariance
  Matrix sigma_bar;  // a posteriori steady-state covariance
  Matrix gain;       // Sigma_bar C^T V^{-1}
  double residual = 0.0;
  long iterations = 0;
};

namespace internal {

inline Matrix RiccatiMap(const Matrix& sigma, const Matrix& h,
                         const Matrix& info, const Matrix& w) {
  const Matrix sigma_inv =
      SpdInverse(sigma, ErrorKind::kSingularSigma, "Sigma");
  const Matrix post = SpdInverse(sigma_inv + info, ErrorKind::kSingularSigma,
                                 "Sigma^-1 + C^T V^-1 C");
  return h * post * h.transpose() + w;
}

}  // namespace internal

// Relative Frobenius residual of the fixed point
// Sigma = H (Sigma^{-1} + C^T V^{-1} C)^{-1} H^T + W.
inline double RiccatiResidual(const Matrix& sigma, const SystemModel& system,
                              const Matrix& v) {
  const Matrix info = InformationMatrix(system.C, v);
  const Matrix mapped = internal::RiccatiMap(sigma, system.H, info, system.W);
  return (sigma - mapped).norm() / sigma.norm();
}

// Fixed-point iteration on the inverse-sum form started from Sigma_0 = W.
inline RiccatiSolution SolveDare(const SystemModel& system, const Matrix& v,
                                 const RiccatiOptions& options = {}) {
  system.Validate();
  const Index q = system.output_dim();
  if (v.rows() != q || v.cols() != q) {
    throw Error(ErrorKind::kDimensionMismatch,
                "V must be " + std::to_string(q) + "x" + std::to_string(q) +
                    ", got " + ShapeString(v));
  }
  if (!IsObservable(system.H, system.C, options.rank_tolerance)) {
    throw Error(ErrorKind::kNotDetectable,
                "the pair (H, C) fails the observability rank test");
  }
  if (!IsControllable(system.H, system.W, options.rank_tolerance)) {
    throw Error(ErrorKind::kNotStabilizable,
                "the pair (H, D) with W = D D^T fails the controllability "
                "rank test");
  }
  RequireNoiseCovariance(v);

  const Matrix info = InformationMatrix(system.C, v);
  Matrix sigma = system.W;
  long iter = 0;
  double residual = std::numeric_limits<double>::infinity();
  double prev_step = std::numeric_limits<double>::infinity();
  // Below this the relative step is rounding noise.
  constexpr double kStepFloor = 1e-14;
  while (true) {
    if (iter >= options.max_iterations) {
      throw Error(ErrorKind::kNoConvergence,
                  "no convergence after " + std::to_string(iter) +
                      " iterations (residual " + std::to_string(residual) +
                      ")");
    }
    Matrix next =
        Symmetrized(internal::RiccatiMap(sigma, system.H, info, system.W));
    ++iter;
    if (!next.allFinite()) {
      throw Error(ErrorKind::kNoConvergence,
                  "iteration diverged at step " + std::to_string(iter));
    }
    const double step = (next - sigma).norm() / next.norm();
    sigma = std::move(next);
    // The iteration contracts linearly, so the distance to the fixed point is
    // about step / (1 - rate). Slow modes would otherwise stop early.
    double remaining = std::numeric_limits<double>::infinity();
    if (step < prev_step) {
      remaining = step / (1.0 - step / prev_step);
    } else if (step <= kStepFloor) {
      remaining = step;
    }
    prev_step = step;
    if (remaining < options.step_tolerance) {
      residual = RiccatiResidual(sigma, system, v);
      if (residual <= options.residual_tolerance) break;
    }
  }

  RiccatiSolution out;
  out.sigma = sigma;
  out.sigma_bar = SpdInverse(
      SpdInverse(sigma, ErrorKind::kSingularSigma, "Sigma") + info,
      ErrorKind::kSingularSigma, "Sigma^-1 + C^T V^-1 C");
  Eigen::LDLT<Matrix> vldlt(Symmetrized(v));
  out.gain = out.sigma_bar * vldlt.solve(system.C).transpose();
  out.residual = residual;
  out.iterations = iter;
  return out;
}

// ln det of a symmetric positive definite matrix.
inline double LogDetSpd(const Matrix& s) {
  RequireSymmetric(s, "matrix");
  Eigen::LLT<Matrix> llt(Symmetrized(s));
  if (llt.info() != Eigen::Success) {
    throw Error(ErrorKind::kNotPositiveDefinite,
                "matrix is not positive definite");
  }
  return 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
}

// Determinant through an LU factorization; the sign comes from the pivots.
inline double Determinant(const Matrix& m) {
  RequireSquare(m, "matrix");
  return Eigen::FullPivLU<Matrix>(m).determinant();
}

// Square block-diagonal assembly.
inline Matrix BlockDiagonal(const std::vector<Matrix>& blocks) {
  Index rows = 0, cols = 0;
  for (const auto& b : blocks) {
    rows += b.rows();
    cols += b.cols();
  }
  Matrix out = Matrix::Zero(rows, cols);
  Index r = 0, c = 0;
  for (const auto& b : blocks) {
    out.block(r, c, b.rows(), b.cols()) = b;
    r += b.rows();
    c += b.cols();
  }
  return out;
}

}  // namespace dpkalman
