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

#include "dpkalman/filter.hpp"

#include <cmath>
#include <limits>
#include <random>

#include <gtest/gtest.h>

#include "test_support.hpp"

namespace dpkalman {
namespace {

using testing::Mat;

Vector Sig(Index q, double v) { return Vector::Constant(q, v); }

// Plain simulator for x(k+1) = H x(k) + w(k), y~(k) = C x(k) + v(k).
struct Path {
  std::vector<Vector> x;
  Trajectory y_tilde;
};

Path SimulatePath(const SystemModel& s, const Vector& sigma, Index steps,
                  std::mt19937_64& rng) {
  std::normal_distribution<double> z;
  const Matrix lw = Eigen::LLT<Matrix>(s.W).matrixL();
  Path p;
  p.y_tilde.dim = s.output_dim();
  Vector x = s.x0_hat;
  for (Index k = 0; k < steps; ++k) {
    Vector y = s.C * x;
    for (Index i = 0; i < y.size(); ++i) y(i) += sigma(i) * z(rng);
    p.x.push_back(x);
    p.y_tilde.samples.push_back(y);
    Vector w(s.state_dim());
    for (Index i = 0; i < w.size(); ++i) w(i) = z(rng);
    x = s.H * x + lw * w;
  }
  return p;
}

TEST(Predict, Examples) {
  SystemModel s = testing::CaseStudySystem();
  const FilterSolution sol = MakeFilterSolution(s, Sig(2, 3.0));
  EXPECT_EQ(Predict(sol, Vector::Constant(2, 0.0)), Vector::Zero(2));
  Vector x(2);
  x << 2, 3;
  Vector expect(2);
  expect << 5, 3;
  EXPECT_EQ(Predict(sol, x), expect);

  s.H = Matrix::Identity(2, 2);
  EXPECT_EQ(Predict(MakeFilterSolution(s, Sig(2, 1.0)), x), x);
  s.H.setZero();
  EXPECT_EQ(Predict(MakeFilterSolution(s, Sig(2, 1.0)), x),
            Vector::Zero(2));
  EXPECT_THROW(Predict(sol, Vector::Zero(3)), Error);
}

TEST(Update, ZeroInnovation) {
  const SystemModel s = testing::CaseStudySystem();
  const FilterSolution sol = MakeFilterSolution(s, Sig(2, 3.0));
  Vector prior(2);
  prior << 1.5, -0.7;
  EXPECT_LT((Update(sol, prior, s.C * prior) - prior).norm(), 1e-14);
}

TEST(Update, VanishingGain) {
  // Stable dynamics keep Sigma bounded, so the gain falls like 1 / V.
  SystemModel s = testing::CaseStudySystem();
  s.H = 0.5 * Matrix::Identity(2, 2);
  const FilterSolution sol =
      MakeFilterSolution(s, Matrix(1e8 * Matrix::Identity(2, 2)));
  Vector prior(2);
  prior << 3, -4;
  Vector y(2);
  y << 10, 10;
  const Vector post = Update(sol, prior, y);
  EXPECT_LT((post - prior).lpNorm<Eigen::Infinity>() / (prior.norm() + 1), 1e-5);
}

TEST(Update, GainShrinksWithNoiseForMarginalDynamics) {
  // With a double integrator Sigma grows with V and the gain only decays
  // like V^(-1/4).
  const SystemModel s = testing::CaseStudySystem();
  double prev = std::numeric_limits<double>::infinity();
  for (double scale : {1.0, 1e2, 1e4, 1e6, 1e8}) {
    const FilterSolution sol =
        MakeFilterSolution(s, Matrix(scale * Matrix::Identity(2, 2)));
    const double g = sol.gain().lpNorm<Eigen::Infinity>();
    EXPECT_LT(g, prev) << scale;
    prev = g;
  }
  EXPECT_GT(prev, 1e-3);
}

TEST(Update, ScalarSteadyState) {
  const FilterSolution sol =
      MakeFilterSolution(testing::ScalarSystem(), Sig(1, 1.0));
  const Vector post = Update(sol, Vector::Zero(1), Vector::Constant(1, 1.0));
  EXPECT_NEAR(post(0), (std::sqrt(5.0) - 1) / 2, 1e-9);
}

TEST(RunFilter, SingleStepAtPrior) {
  SystemModel s = testing::CaseStudySystem();
  s.x0_hat << 1, 2;
  const FilterSolution sol = MakeFilterSolution(s, Sig(2, 3.0));
  Trajectory y{2, {s.C * s.x0_hat}};
  const auto states = RunFilter(sol, y, s.x0_hat);
  ASSERT_EQ(states.size(), 1u);
  EXPECT_EQ(states[0].k, 0);
  EXPECT_EQ(states[0].x_hat_prior, s.x0_hat);
  EXPECT_LT((states[0].x_hat - s.x0_hat).norm(), 1e-14);
}

TEST(RunFilter, ConstantOutputContracts) {
  SystemModel s;
  s.H = Matrix::Identity(2, 2);
  s.C = Matrix::Identity(2, 2);
  s.W = 0.1 * Matrix::Identity(2, 2);
  s.x0_hat = Vector::Zero(2);
  const FilterSolution sol = MakeFilterSolution(s, Sig(2, 2.0));
  Vector c(2);
  c << 4, -3;
  Trajectory y{2, std::vector<Vector>(1000, c)};
  const auto states = RunFilter(sol, y, s.x0_hat);
  EXPECT_LT((states.back().x_hat - c).norm(), (s.x0_hat - c).norm() * 1e-2);
}

TEST(RunFilter, UpdateThenPredictOrdering) {
  const SystemModel s = testing::CaseStudySystem();
  const FilterSolution sol = MakeFilterSolution(s, Sig(2, 2.0));
  std::mt19937_64 rng(1);
  const Path p = SimulatePath(s, Vector::Constant(2, 2.0), 20, rng);
  const auto states = RunFilter(sol, p.y_tilde, s.x0_hat);
  Vector prior = s.x0_hat;
  for (std::size_t k = 0; k < states.size(); ++k) {
    EXPECT_EQ(states[k].x_hat_prior, prior);
    const Vector post =
        prior + sol.gain() * (p.y_tilde.samples[k] - s.C * prior);
    EXPECT_LT((states[k].x_hat - post).norm(), 1e-12);
    prior = s.H * states[k].x_hat;
  }
}

TEST(RunFilter, Errors) {
  const SystemModel s = testing::CaseStudySystem();
  const FilterSolution sol = MakeFilterSolution(s, Sig(2, 2.0));
  EXPECT_THROW(RunFilter(sol, Trajectory{2, {}}, s.x0_hat), Error);
  try {
    RunFilter(sol, Trajectory{3, {Vector::Zero(3)}}, s.x0_hat);
    ADD_FAILURE();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kDimensionMismatch);
  }
  EXPECT_THROW(MakeFilterSolution(s, Sig(3, 1.0)), Error);
}

TEST(FilterStatistics, BeatsNaiveInversion) {
  const SystemModel s = testing::CaseStudySystem();
  const Vector sigma = Vector::Constant(2, GaussianSigma(std::log(3.0), 1e-3, 1));
  const FilterSolution sol = MakeFilterSolution(s, sigma);
  const Matrix c_inv = s.C.inverse();
  std::mt19937_64 rng(2);
  double filt = 0, naive = 0;
  Vector mean_prior = Vector::Zero(2);
  const int trials = 1000;
  const Index steps = 100;
  for (int t = 0; t < trials; ++t) {
    const Path p = SimulatePath(s, sigma, steps, rng);
    const auto states = RunFilter(sol, p.y_tilde, s.x0_hat);
    for (Index k = 0; k < steps; ++k) {
      filt += (p.x[k] - states[k].x_hat).squaredNorm();
      naive += (p.x[k] - c_inv * p.y_tilde.samples[k]).squaredNorm();
    }
    mean_prior += p.x[50] - states[50].x_hat_prior;
  }
  EXPECT_LT(filt, naive);
  // Unbiased prediction at a fixed step, across independent trials.
  mean_prior /= trials;
  for (Index i = 0; i < 2; ++i) {
    const double se = std::sqrt(sol.riccati.sigma(i, i) / trials);
    EXPECT_LT(std::abs(mean_prior(i)), 4 * se) << i;
  }
}

TEST(FilterStatistics, EmpiricalCovarianceMatchesSigmaBar) {
  const SystemModel s = testing::CaseStudySystem();
  const Vector sigma = Vector::Constant(2, 2.9663);
  const FilterSolution sol = MakeFilterSolution(s, sigma);
  std::mt19937_64 rng(3);
  const Index steps = 10000, discard = 100;
  const int runs = 20;
  Matrix acc = Matrix::Zero(2, 2);
  long count = 0;
  for (int r = 0; r < runs; ++r) {
    const Path p = SimulatePath(s, sigma, steps, rng);
    const auto states = RunFilter(sol, p.y_tilde, s.x0_hat);
    for (Index k = discard; k < steps; ++k) {
      const Vector e = p.x[k] - states[k].x_hat;
      acc += e * e.transpose();
      ++count;
    }
  }
  acc /= static_cast<double>(count);
  const Matrix& target = sol.riccati.sigma_bar;
  // Off-diagonal entries are compared on the scale of the diagonal.
  for (Index i = 0; i < 2; ++i) {
    for (Index j = 0; j < 2; ++j) {
      const double scale = std::sqrt(target(i, i) * target(j, j));
      EXPECT_NEAR(acc(i, j), target(i, j), 0.05 * scale) << i << "," << j;
    }
  }
}

}  // namespace
}  // namespace dpkalman
