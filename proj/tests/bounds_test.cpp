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

#include "dpkalman/bounds.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "test_support.hpp"

namespace dpkalman {
namespace {

using testing::Mat;

Vector Iso(Index n, double s) { return Vector::Constant(n, s); }

ErrorKind KindOf(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "expected dpkalman::Error";
  return ErrorKind::kInvalidArgument;
}

TEST(ChannelExtremes, Examples) {
  ChannelExtremes e = FindChannelExtremes(Matrix::Identity(2, 2), Iso(2, 3));
  EXPECT_EQ(e.l, 0);
  EXPECT_EQ(e.u, 0);
  EXPECT_DOUBLE_EQ(e.ratio_l(), 1.0 / 9);

  e = FindChannelExtremes(Mat({{1, 0}, {0, 2}}), Vector{{1.0, 4.0}});
  EXPECT_EQ(e.l, 1);
  EXPECT_EQ(e.u, 0);
  EXPECT_DOUBLE_EQ(e.ratio_l(), 0.25);
  EXPECT_DOUBLE_EQ(e.ratio_u(), 1.0);

  e = FindChannelExtremes(Mat({{2, 0, 0}, {0, 3, 0}, {0, 0, 1}}),
                          Vector{{1.0, 1.0, 2.0}});
  EXPECT_EQ(e.l, 2);
  EXPECT_EQ(e.u, 1);
  EXPECT_DOUBLE_EQ(e.c_l, 1);
  EXPECT_DOUBLE_EQ(e.sigma_l, 2);
  EXPECT_DOUBLE_EQ(e.c_u, 3);
  EXPECT_DOUBLE_EQ(e.sigma_u, 1);
}

TEST(ChannelExtremes, Errors) {
  EXPECT_EQ(KindOf([] { FindChannelExtremes(Mat({{1, 1}, {0, 1}}), Iso(2, 1)); }),
            ErrorKind::kNotDiagonal);
  EXPECT_EQ(KindOf([] { FindChannelExtremes(Mat({{1, 0, 0}, {0, 1, 0}}), Iso(2, 1)); }),
            ErrorKind::kNotDiagonal);
  EXPECT_EQ(KindOf([] { FindChannelExtremes(Matrix::Identity(2, 2), Vector{{1.0, 0.0}}); }),
            ErrorKind::kNonPositiveSigma);
}

TEST(TraceBounds, CaseStudyValues) {
  const SystemModel s = testing::CaseStudySystem();
  const Vector sigma = Iso(2, 2.9663);
  const BoundReport prior = AprioriTraceBounds(s, sigma);
  EXPECT_NEAR(prior.lower, 34.04, 0.01);
  ASSERT_TRUE(prior.upper);
  EXPECT_NEAR(*prior.upper, 46.40, 0.01);
  EXPECT_DOUBLE_EQ(prior.intermediates.at("tr_W"), 20);
  EXPECT_DOUBLE_EQ(prior.intermediates.at("tr_HtH"), 3);
  EXPECT_NEAR(prior.intermediates.at("lambda_n_W"), 10, 1e-12);

  const BoundReport post = AposterioriTraceBounds(s, sigma);
  EXPECT_NEAR(post.lower, 9.36, 0.01);
  EXPECT_NEAR(*post.upper, 17.60, 0.01);

  const RiccatiSolution sol = SolveDare(s, NoiseCovariance(sigma));
  EXPECT_TRUE(prior.Contains(sol.sigma.trace()));
  EXPECT_TRUE(post.Contains(sol.sigma_bar.trace()));
}

TEST(TraceBounds, ZeroDynamicsCollapse) {
  SystemModel s = testing::CaseStudySystem();
  s.H.setZero();
  const BoundReport r = AprioriTraceBounds(s, Iso(2, 2));
  EXPECT_DOUBLE_EQ(r.lower, 20);
  EXPECT_DOUBLE_EQ(*r.upper, 20);
  EXPECT_NEAR(SolveDare(s, NoiseCovariance(Iso(2, 2))).sigma.trace(), 20, 1e-12);
}

TEST(LogDetBounds, CaseStudyUnitNoise) {
  const BoundReport r = AprioriLogDetBounds(testing::CaseStudySystem(), Iso(2, 1));
  EXPECT_NEAR(r.intermediates.at("gamma_1"), 10.0 / 11, 1e-12);
  EXPECT_NEAR(r.intermediates.at("eta"), 10.347, 1e-3);
  EXPECT_NEAR(r.intermediates.at("precondition_lhs"), 2.618, 1e-3);
  EXPECT_TRUE(r.applicable);
  ASSERT_TRUE(r.upper);
  EXPECT_NEAR(*r.upper, 23.44, 0.01);
  EXPECT_NEAR(r.lower, 4.611, 1e-3);
}

TEST(LogDetBounds, CaseStudyMechanismNoiseIsInapplicable) {
  const BoundReport r =
      AprioriLogDetBounds(testing::CaseStudySystem(), Iso(2, 2.9663));
  EXPECT_FALSE(r.applicable);
  EXPECT_FALSE(r.upper);
  EXPECT_NEAR(r.intermediates.at("precondition_rhs"), 2.339, 1e-3);
  EXPECT_NEAR(r.intermediates.at("precondition_lhs"), 2.618, 1e-3);
  EXPECT_TRUE(std::isfinite(r.lower));
}

TEST(LogDetBounds, ZeroDynamics) {
  SystemModel s = testing::CaseStudySystem();
  s.H.setZero();
  const BoundReport r = AprioriLogDetBounds(s, Iso(2, 5));
  EXPECT_TRUE(r.applicable);
  EXPECT_NEAR(*r.upper, 20, 1e-12);
  EXPECT_NEAR(r.lower, std::log(100.0), 1e-12);
}

TEST(LogDetBounds, AposterioriCaseStudy) {
  const BoundReport r =
      AposterioriLogDetBounds(testing::CaseStudySystem(), Iso(2, 2.9663));
  EXPECT_NEAR(r.lower, 3.087, 1e-3);
  EXPECT_NEAR(*r.upper, 4.349, 1e-3);
  const RiccatiSolution sol =
      SolveDare(testing::CaseStudySystem(), NoiseCovariance(Iso(2, 2.9663)));
  EXPECT_TRUE(r.Contains(LogDetSpd(sol.sigma_bar)));
}

TEST(LogDetBounds, AposterioriGapIdentity) {
  std::mt19937_64 rng(6);
  for (int t = 0; t < 50; ++t) {
    const Index n = 1 + t % 4;
    SystemModel s = testing::RandomDiagonalSystem(rng, n);
    s.C = Matrix::Identity(n, n);
    const double sig = testing::Uniform(rng, 0.1, 5);
    const BoundReport r = AposterioriLogDetBounds(s, Iso(n, sig));
    const double lam = ExtremeEigenvalues(s.W).min;
    EXPECT_NEAR(*r.upper - r.lower, n * std::log(1 + sig * sig / lam), 1e-10);
  }
}

TEST(Bounds, RequireDiagonalC) {
  SystemModel s = testing::CaseStudySystem();
  s.C(0, 1) = 0.5;
  for (auto f : {AprioriTraceBounds, AposterioriTraceBounds, AprioriLogDetBounds,
                 AposterioriLogDetBounds}) {
    EXPECT_EQ(KindOf([&] { f(s, Iso(2, 1)); }), ErrorKind::kNotDiagonal);
  }
}

// Containment of solver output in every bound, over random systems.
class Containment : public ::testing::TestWithParam<int> {};

TEST_P(Containment, SolverInsideBounds) {
  std::mt19937_64 rng(5000 + GetParam());
  const Index n = 1 + GetParam() % 4;
  const SystemModel s = testing::RandomDiagonalSystem(rng, n);
  const Vector sigma = testing::RandomSigma(rng, n);
  const RiccatiSolution sol = SolveDare(s, NoiseCovariance(sigma));
  const AllBounds b = ComputeAllBounds(s, sigma);
  const double tr = sol.sigma.trace();
  const double tr_bar = sol.sigma_bar.trace();
  const double ld_bar = LogDetSpd(sol.sigma_bar);
  const double ld = LogDetSpd(sol.sigma);
  const double slack = 1e-9;

  EXPECT_GE(tr, b.apriori_trace.lower * (1 - slack));
  EXPECT_LE(tr, *b.apriori_trace.upper * (1 + slack));
  EXPECT_GE(tr_bar, b.aposteriori_trace.lower * (1 - slack));
  EXPECT_LE(tr_bar, *b.aposteriori_trace.upper * (1 + slack));
  EXPECT_GE(ld_bar, b.aposteriori_logdet.lower - slack);
  EXPECT_LE(ld_bar, *b.aposteriori_logdet.upper + slack);
  EXPECT_GE(ld, b.apriori_logdet.lower - slack);
  if (b.apriori_logdet.applicable) {
    EXPECT_LT(ld, *b.apriori_logdet.upper);
  }
  EXPECT_LE(tr_bar, tr);

  // Entropy of the estimation error lies between the entropies implied by the
  // log-det bounds.
  const double base = 0.5 * n * std::log(2 * std::numbers::pi * std::numbers::e);
  const double h = DifferentialEntropy(sol.sigma_bar);
  EXPECT_GE(h, base + 0.5 * b.aposteriori_logdet.lower - slack);
  EXPECT_LE(h, base + 0.5 * *b.aposteriori_logdet.upper + slack);
}

TEST_P(Containment, NoiseScalingMovesAposterioriBounds) {
  std::mt19937_64 rng(6000 + GetParam());
  const Index n = 1 + GetParam() % 4;
  const SystemModel s = testing::RandomDiagonalSystem(rng, n);
  const Vector sigma = testing::RandomSigma(rng, n);
  const BoundReport a = AposterioriTraceBounds(s, sigma);
  for (double t : {1.1, 2.0, 5.0}) {
    const BoundReport b = AposterioriTraceBounds(s, t * sigma);
    EXPECT_GT(*b.upper, *a.upper);
    EXPECT_NEAR(*b.upper, t * t * *a.upper, 1e-12 * t * t * *a.upper);
    EXPECT_GE(b.lower, a.lower);
  }
}

INSTANTIATE_TEST_SUITE_P(Seeds, Containment, ::testing::Range(0, 150));

TEST(DifferentialEntropy, Scalar) {
  const double v = 2.5;
  EXPECT_NEAR(DifferentialEntropy(Mat({{v}})),
              0.5 * std::log(2 * std::numbers::pi * std::numbers::e * v), 1e-14);
  EXPECT_EQ(KindOf([] { DifferentialEntropy(Mat({{1, 0}, {0, 0}})); }),
            ErrorKind::kNotPositiveDefinite);
}

TEST(BoundKindName, Names) {
  EXPECT_EQ(BoundKindName(BoundKind::kAprioriTrace), "apriori_trace");
  EXPECT_EQ(BoundKindName(BoundKind::kAposterioriLogDet), "aposteriori_logdet");
}

}  // namespace
}  // namespace dpkalman
