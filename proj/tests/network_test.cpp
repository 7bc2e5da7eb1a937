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

#include "dpkalman/network.hpp"

#include <algorithm>
#include <random>
#include <string>

#include <gtest/gtest.h>

#include "test_support.hpp"

namespace dpkalman {
namespace {

AgentSpec RandomAgent(std::mt19937_64& rng, const std::string& id) {
  AgentSpec a;
  a.id = id;
  a.system = testing::RandomDiagonalSystem(rng, 1 + static_cast<Index>(rng() % 2));
  a.privacy = MakePrivacyConfig(testing::Uniform(rng, 0.2, 3.0),
                                std::pow(10.0, testing::Uniform(rng, -5, -1)),
                                testing::Uniform(rng, 0.5, 2.0), a.system.C);
  return a;
}

std::vector<AgentSpec> RandomAgents(std::mt19937_64& rng, int count) {
  std::vector<AgentSpec> out;
  for (int i = 0; i < count; ++i) {
    out.push_back(RandomAgent(rng, "agent" + std::to_string(i)));
  }
  return out;
}

TEST(Compose, TwoScalarAgents) {
  AgentSpec a{"a", testing::ScalarSystem(1, 1, 1), {}};
  a.privacy = MakePrivacyConfig(1.0, 1e-3, 1.0, a.system.C);
  AgentSpec b{"b", testing::ScalarSystem(0.5, 2, 3), {}};
  b.privacy = MakePrivacyConfig(0.5, 1e-2, 2.0, b.system.C);
  const NetworkModel net = Compose({a, b});
  EXPECT_EQ(net.system.state_dim(), 2);
  EXPECT_EQ(net.system.output_dim(), 2);
  EXPECT_EQ(net.state_offsets[0], (IndexRange{0, 1}));
  EXPECT_EQ(net.state_offsets[1], (IndexRange{1, 2}));
  EXPECT_EQ(net.output_offsets[1], (IndexRange{1, 2}));
  EXPECT_EQ(net.sigma(0), a.privacy.sigma(0));
  EXPECT_EQ(net.sigma(1), b.privacy.sigma(0));
  EXPECT_EQ(net.system.H, testing::Mat({{1, 0}, {0, 0.5}}));
}

TEST(Compose, Errors) {
  try {
    Compose({});
    ADD_FAILURE();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kEmptyNetwork);
  }
  std::mt19937_64 rng(1);
  std::vector<AgentSpec> agents = RandomAgents(rng, 2);
  agents[1].id = agents[0].id;
  EXPECT_THROW(Compose(agents), Error);

  agents = RandomAgents(rng, 3);
  agents[2].system.W(0, 0) = -1;
  try {
    Compose(agents);
    ADD_FAILURE();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("agent 'agent2'"), std::string::npos)
        << e.what();
  }
  agents = RandomAgents(rng, 2);
  agents[0].privacy.sigma = Vector::Ones(5);
  try {
    Compose(agents);
    ADD_FAILURE();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kDimensionMismatch);
    EXPECT_NE(std::string(e.what()).find("agent 'agent0'"), std::string::npos);
  }
}

class Decomposition : public ::testing::TestWithParam<int> {};

TEST_P(Decomposition, NetworkSolveIsBlockDiagonal) {
  std::mt19937_64 rng(300 + GetParam());
  const int count = 1 + GetParam() % 4;
  const std::vector<AgentSpec> agents = RandomAgents(rng, count);
  const NetworkModel net = Compose(agents);
  const FilterSolution sol = MakeFilterSolution(net.system, net.sigma);

  std::vector<Matrix> sig, bar, gain;
  for (const auto& a : agents) {
    const FilterSolution alone = MakeFilterSolution(a.system, a.privacy.sigma);
    sig.push_back(alone.riccati.sigma);
    bar.push_back(alone.riccati.sigma_bar);
    gain.push_back(alone.riccati.gain);
  }
  EXPECT_LT(testing::RelFrob(sol.riccati.sigma, BlockDiagonal(sig)), 1e-9);
  EXPECT_LT(testing::RelFrob(sol.riccati.sigma_bar, BlockDiagonal(bar)), 1e-9);
  EXPECT_LT(testing::RelFrob(sol.riccati.gain, BlockDiagonal(gain)), 1e-9);

  const std::vector<AgentSlice> slices = PerAgentSlices(net, sol);
  for (int i = 0; i < count; ++i) {
    EXPECT_EQ(slices[i].id, agents[i].id);
    EXPECT_NEAR(slices[i].trace_sigma, sig[i].trace(), 1e-9 * sig[i].trace());
    EXPECT_NEAR(slices[i].trace_sigma_bar, bar[i].trace(), 1e-9 * bar[i].trace());
  }

  // Network-level trace bounds hold for the composed solution.
  const BoundReport prior = AprioriTraceBounds(net.system, net.sigma);
  const BoundReport post = AposterioriTraceBounds(net.system, net.sigma);
  EXPECT_GE(sol.riccati.sigma.trace(), prior.lower * (1 - 1e-9));
  EXPECT_LE(sol.riccati.sigma.trace(), *prior.upper * (1 + 1e-9));
  EXPECT_GE(sol.riccati.sigma_bar.trace(), post.lower * (1 - 1e-9));
  EXPECT_LE(sol.riccati.sigma_bar.trace(), *post.upper * (1 + 1e-9));
}

TEST_P(Decomposition, PermutationCovariance) {
  std::mt19937_64 rng(400 + GetParam());
  const int count = 2 + GetParam() % 3;
  std::vector<AgentSpec> agents = RandomAgents(rng, count);
  const NetworkModel net = Compose(agents);
  const auto slices = PerAgentSlices(net, MakeFilterSolution(net.system, net.sigma));

  std::vector<AgentSpec> reversed(agents.rbegin(), agents.rend());
  const NetworkModel rnet = Compose(reversed);
  const FilterSolution rsol = MakeFilterSolution(rnet.system, rnet.sigma);
  const auto rslices = PerAgentSlices(rnet, rsol);
  for (int i = 0; i < count; ++i) {
    const auto& a = slices[i];
    const auto& b = rslices[count - 1 - i];
    EXPECT_EQ(a.id, b.id);
    EXPECT_NEAR(a.trace_sigma, b.trace_sigma, 1e-9 * a.trace_sigma);
    EXPECT_NEAR(a.trace_sigma_bar, b.trace_sigma_bar, 1e-9 * a.trace_sigma_bar);
    EXPECT_EQ(net.state_offsets[i].size(), rnet.state_offsets[count - 1 - i].size());
  }
  // The same block lands at the new offset.
  const auto& r0 = rnet.state_offsets[count - 1];
  EXPECT_EQ(r0.begin, rnet.system.state_dim() - net.state_offsets[0].size());
  EXPECT_EQ(rnet.system.H.block(r0.begin, r0.begin, r0.size(), r0.size()),
            agents[0].system.H);
}

INSTANTIATE_TEST_SUITE_P(Seeds, Decomposition, ::testing::Range(0, 24));

}  // namespace
}  // namespace dpkalman
