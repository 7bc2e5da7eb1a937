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

#include <set>
#include <string>
#include <vector>

#include "dpkalman/error.hpp"
#include "dpkalman/filter.hpp"
#include "dpkalman/linalg.hpp"
#include "dpkalman/privacy.hpp"

namespace dpkalman {

struct AgentSpec {
  std::string id;
  SystemModel system;
  PrivacyConfig privacy;
};

// Half-open index range [begin, end).
struct IndexRange {
  Index begin = 0;
  Index end = 0;

  Index size() const { return end - begin; }
  bool operator==(const IndexRange&) const = default;
};

// Decoupled agents stacked into one block-diagonal system. Each agent keeps
// its own privacy parameters, so the network noise vector is heterogeneous.
struct NetworkModel {
  std::vector<AgentSpec> agents;
  SystemModel system;
  Vector sigma;
  std::vector<IndexRange> state_offsets;
  std::vector<IndexRange> output_offsets;
};

inline NetworkModel Compose(const std::vector<AgentSpec>& agents) {
  if (agents.empty()) {
    throw Error(ErrorKind::kEmptyNetwork, "network has no agents");
  }
  std::set<std::string> seen;
  std::vector<Matrix> hs, cs, ws;
  NetworkModel net;
  net.agents = agents;
  Index n = 0, q = 0;
  for (const auto& agent : agents) {
    if (!seen.insert(agent.id).second) {
      throw Error(ErrorKind::kInvalidArgument,
                  "duplicate agent id '" + agent.id + "'");
    }
    try {
      agent.system.Validate();
      agent.privacy.Validate(agent.system.output_dim());
    } catch (const Error& e) {
      throw Error(e.kind(), "agent '" + agent.id + "': " + e.what());
    }
    const Index ni = agent.system.state_dim();
    const Index qi = agent.system.output_dim();
    net.state_offsets.push_back({n, n + ni});
    net.output_offsets.push_back({q, q + qi});
    n += ni;
    q += qi;
    hs.push_back(agent.system.H);
    cs.push_back(agent.system.C);
    ws.push_back(agent.system.W);
  }
  net.system.H = BlockDiagonal(hs);
  net.system.C = BlockDiagonal(cs);
  net.system.W = BlockDiagonal(ws);
  net.system.x0_hat.resize(n);
  net.sigma.resize(q);
  for (std::size_t i = 0; i < agents.size(); ++i) {
    const auto& s = net.state_offsets[i];
    const auto& o = net.output_offsets[i];
    net.system.x0_hat.segment(s.begin, s.size()) = agents[i].system.x0_hat;
    net.sigma.segment(o.begin, o.size()) = agents[i].privacy.sigma;
  }
  return net;
}

struct AgentSlice {
  std::string id;
  double trace_sigma = 0.0;
  double trace_sigma_bar = 0.0;
};

// Traces of each agent's diagonal block of the network covariances.
inline std::vector<AgentSlice> PerAgentSlices(const NetworkModel& network,
                                              const FilterSolution& sol) {
  const Index n = network.system.state_dim();
  if (sol.riccati.sigma.rows() != n || sol.riccati.sigma_bar.rows() != n) {
    throw Error(ErrorKind::kDimensionMismatch,
                "filter solution does not match the network dimension");
  }
  std::vector<AgentSlice> out;
  out.reserve(network.agents.size());
  for (std::size_t i = 0; i < network.agents.size(); ++i) {
    const auto& r = network.state_offsets[i];
    out.push_back(
        {network.agents[i].id,
         sol.riccati.sigma.block(r.begin, r.begin, r.size(), r.size()).trace(),
         sol.riccati.sigma_bar.block(r.begin, r.begin, r.size(), r.size())
             .trace()});
  }
  return out;
}

}  // namespace dpkalman
