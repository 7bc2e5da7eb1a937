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

// Seeded Monte Carlo driver: simulate the true state, privatize its outputs,
// run the steady-state filter and record squared errors next to the analytic
// MSE bounds.

#pragma once

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <exception>
#include <limits>
#include <mutex>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <thread>
#include <tuple>
#include <utility>
#include <vector>

#include "dpkalman/bounds.hpp"
#include "dpkalman/error.hpp"
#include "dpkalman/filter.hpp"
#include "dpkalman/linalg.hpp"
#include "dpkalman/privacy.hpp"
#include "dpkalman/rng.hpp"

namespace dpkalman {

constexpr Index kDefaultBurnIn = 10;

struct SimulationConfig {
  SystemModel system;
  Vector sigma;                  // per-channel privacy noise scale
  Index horizon = 100;           // T
  Index trials = 1;
  std::uint64_t seed = 0;
  std::optional<Matrix> x0_cov;  // x(0) = x0_hat when absent
  Index burn_in = kDefaultBurnIn;
  unsigned threads = 0;          // 0 = hardware concurrency

  void Validate() const {
    system.Validate();
    if (horizon < 1) {
      throw Error(ErrorKind::kInvalidArgument, "horizon_T must be >= 1");
    }
    if (trials < 1) {
      throw Error(ErrorKind::kInvalidArgument, "trials must be >= 1");
    }
    if (burn_in < 0) {
      throw Error(ErrorKind::kInvalidArgument, "burn_in must be >= 0");
    }
    if (sigma.size() != system.output_dim()) {
      throw Error(ErrorKind::kDimensionMismatch,
                  "sigma must have one entry per output channel");
    }
    if (!sigma.allFinite() || (sigma.array() <= 0.0).any()) {
      throw Error(ErrorKind::kNonPositiveSigma,
                  "simulation needs sigma_i > 0 on every channel");
    }
    if (x0_cov) {
      if (x0_cov->rows() != system.state_dim() ||
          x0_cov->cols() != system.state_dim()) {
        throw Error(ErrorKind::kDimensionMismatch,
                    "x0 covariance has the wrong shape");
      }
      SymmetricFactor(*x0_cov);
    }
  }
};

struct SimulationRecord {
  Index k = 0;
  double sq_err_prior = 0.0;  // |x(k) - x^-(k)|^2
  double sq_err_post = 0.0;   // |x(k) - x^(k)|^2
  double bound_prior_lo = 0.0;
  double bound_prior_hi = 0.0;
  double bound_post_lo = 0.0;
  double bound_post_hi = 0.0;
};

struct SimulationSummary {
  double mean_sq_err_prior = 0.0;
  double mean_sq_err_post = 0.0;
  // Standard error of the means, from the spread of per-trial averages.
  double stderr_prior = 0.0;
  double stderr_post = 0.0;
  double trace_sigma = 0.0;
  double trace_sigma_bar = 0.0;
  double bound_prior_lo = 0.0;
  double bound_prior_hi = 0.0;
  double bound_post_lo = 0.0;
  double bound_post_hi = 0.0;
  Index trials = 0;
  Index horizon = 0;
  Index burn_in = 0;
  std::uint64_t seed = 0;
};

struct SimulationResult {
  std::vector<std::vector<SimulationRecord>> trials;
  SimulationSummary summary;
};

namespace internal {

struct BoundValues {
  double prior_lo, prior_hi, post_lo, post_hi;
};

// Trace bounds when C satisfies the diagonal assumption, NaN otherwise.
inline BoundValues TraceBoundsOrNan(const SystemModel& system,
                                    const Vector& sigma) {
  constexpr double nan = std::numeric_limits<double>::quiet_NaN();
  try {
    const BoundReport prior = AprioriTraceBounds(system, sigma);
    const BoundReport post = AposterioriTraceBounds(system, sigma);
    return {prior.lower, *prior.upper, post.lower, *post.upper};
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::kNotDiagonal) throw;
    return {nan, nan, nan, nan};
  }
}

inline std::vector<SimulationRecord> RunTrial(const SimulationConfig& config,
                                              const FilterSolution& sol,
                                              const Matrix& process_factor,
                                              const std::optional<Matrix>&
                                                  x0_factor,
                                              const BoundValues& bounds,
                                              std::uint64_t trial) {
  const SystemModel& sys = config.system;
  const Index n = sys.state_dim();

  Vector x = sys.x0_hat;
  if (x0_factor) {
    GaussianStream init(config.seed, StreamTag::kInitialState, trial);
    Vector z(n);
    for (Index i = 0; i < n; ++i) z(i) = init.Next();
    x += *x0_factor * z;
  }

  GaussianStream process(config.seed, StreamTag::kProcess, trial);
  std::vector<Vector> states;
  states.reserve(config.horizon);
  Trajectory outputs{sys.output_dim(), {}};
  outputs.samples.reserve(config.horizon);
  Vector w(n);
  for (Index k = 0; k < config.horizon; ++k) {
    states.push_back(x);
    outputs.samples.push_back(sys.C * x);
    for (Index i = 0; i < n; ++i) w(i) = process.Next();
    x = sys.H * x + process_factor * w;
  }

  const Trajectory noisy = Privatize(outputs, config.sigma, config.seed, trial);
  const std::vector<FilterState> est = RunFilter(sol, noisy, sys.x0_hat);

  std::vector<SimulationRecord> records;
  records.reserve(config.horizon);
  for (Index k = 0; k < config.horizon; ++k) {
    const auto& s = est[k];
    records.push_back({k, (states[k] - s.x_hat_prior).squaredNorm(),
                       (states[k] - s.x_hat).squaredNorm(), bounds.prior_lo,
                       bounds.prior_hi, bounds.post_lo, bounds.post_hi});
  }
  return records;
}

// Mean over trials of per-trial averages on k >= burn_in, with standard error.
inline std::pair<double, double> MeanAndStderr(const std::vector<double>& v) {
  const double m = static_cast<double>(v.size());
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= m;
  if (v.size() < 2) return {mean, 0.0};
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return {mean, std::sqrt(ss / (m - 1.0) / m)};
}

}  // namespace internal

/**
 * Runs `config.trials` independent trials of `config.horizon` steps.
 *
 * Each trial draws its process, privacy and initial-state noise from its own
 * substreams keyed by (seed, tag, trial), and the summary is reduced in trial
 * order, so the output is identical for any thread count.
 */
inline SimulationResult Simulate(const SimulationConfig& config) {
  config.Validate();
  const FilterSolution sol = MakeFilterSolution(config.system, config.sigma);

  Eigen::LLT<Matrix> w_llt(Symmetrized(config.system.W));
  const Matrix process_factor = w_llt.matrixL();
  std::optional<Matrix> x0_factor;
  if (config.x0_cov) x0_factor = SymmetricFactor(*config.x0_cov);
  const internal::BoundValues bounds =
      internal::TraceBoundsOrNan(config.system, config.sigma);

  SimulationResult result;
  result.trials.resize(config.trials);

  unsigned threads = config.threads;
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(
      std::min<Index>(threads, config.trials));

  std::atomic<Index> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;
  auto worker = [&] {
    try {
      for (Index t = next++; t < config.trials; t = next++) {
        result.trials[t] = internal::RunTrial(config, sol, process_factor,
                                              x0_factor, bounds,
                                              static_cast<std::uint64_t>(t));
      }
    } catch (...) {
      std::lock_guard lock(failure_mu);
      if (!failure) failure = std::current_exception();
      next = config.trials;
    }
  };
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(threads);
    for (unsigned i = 0; i < threads; ++i) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);

  const Index burn_in = config.burn_in < config.horizon ? config.burn_in : 0;
  std::vector<double> prior_avgs, post_avgs;
  prior_avgs.reserve(config.trials);
  post_avgs.reserve(config.trials);
  for (const auto& trial : result.trials) {
    double sp = 0.0, se = 0.0;
    for (Index k = burn_in; k < config.horizon; ++k) {
      sp += trial[k].sq_err_prior;
      se += trial[k].sq_err_post;
    }
    const double count = static_cast<double>(config.horizon - burn_in);
    prior_avgs.push_back(sp / count);
    post_avgs.push_back(se / count);
  }
  auto& s = result.summary;
  std::tie(s.mean_sq_err_prior, s.stderr_prior) =
      internal::MeanAndStderr(prior_avgs);
  std::tie(s.mean_sq_err_post, s.stderr_post) =
      internal::MeanAndStderr(post_avgs);
  s.trace_sigma = sol.riccati.sigma.trace();
  s.trace_sigma_bar = sol.riccati.sigma_bar.trace();
  s.bound_prior_lo = bounds.prior_lo;
  s.bound_prior_hi = bounds.prior_hi;
  s.bound_post_lo = bounds.post_lo;
  s.bound_post_hi = bounds.post_hi;
  s.trials = config.trials;
  s.horizon = config.horizon;
  s.burn_in = burn_in;
  s.seed = config.seed;
  return result;
}

struct ViolationStats {
  double frac_steps_prior_outside = 0.0;
  double frac_steps_post_outside = 0.0;
};

// Fraction of steps whose instantaneous squared error lies outside the MSE
// bounds. Informational: the bounds govern means, not single samples.
inline ViolationStats BoundViolationStats(
    std::span<const SimulationRecord> records) {
  if (records.empty()) {
    throw Error(ErrorKind::kInvalidArgument, "no records");
  }
  std::size_t prior = 0, post = 0;
  for (const auto& r : records) {
    if (r.sq_err_prior < r.bound_prior_lo || r.sq_err_prior > r.bound_prior_hi)
      ++prior;
    if (r.sq_err_post < r.bound_post_lo || r.sq_err_post > r.bound_post_hi)
      ++post;
  }
  const double m = static_cast<double>(records.size());
  return {static_cast<double>(prior) / m, static_cast<double>(post) / m};
}

inline constexpr std::string_view kCsvHeader =
    "trial,k,sq_err_prior,sq_err_post,bound_prior_lo,bound_prior_hi,"
    "bound_post_lo,bound_post_hi";

// Shortest round-trip decimal form; independent of the global locale.
inline std::string FormatDouble(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

inline void WriteCsv(std::ostream& out, const SimulationResult& result) {
  out << kCsvHeader << '\n';
  for (std::size_t t = 0; t < result.trials.size(); ++t) {
    for (const auto& r : result.trials[t]) {
      out << t << ',' << r.k << ',' << FormatDouble(r.sq_err_prior) << ','
          << FormatDouble(r.sq_err_post) << ','
          << FormatDouble(r.bound_prior_lo) << ','
          << FormatDouble(r.bound_prior_hi) << ','
          << FormatDouble(r.bound_post_lo) << ','
          << FormatDouble(r.bound_post_hi) << '\n';
    }
  }
}

}  // namespace dpkalman
