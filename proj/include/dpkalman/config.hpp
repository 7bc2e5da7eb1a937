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

// JSON configuration files and report serialization.
//
// Matrices are objects {"rows": r, "cols": c, "data": [[...], ...]} with
// row-major nested arrays. Unknown keys are rejected everywhere.

#pragma once

#include <cstdint>
#include <fstream>
#include <initializer_list>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "dpkalman/bounds.hpp"
#include "dpkalman/calibration.hpp"
#include "dpkalman/error.hpp"
#include "dpkalman/linalg.hpp"
#include "dpkalman/network.hpp"
#include "dpkalman/privacy.hpp"
#include "dpkalman/simulation.hpp"

namespace dpkalman {

using Json = nlohmann::json;

struct PrivacySpec {
  std::optional<double> epsilon;
  double delta = 0.0;
  double adjacency_b = 0.0;
  std::optional<Vector> sigma;  // override; a scalar in the file means isotropic
  bool sigma_is_scalar = false;
};

struct SimulationSpec {
  Index horizon = 100;
  Index trials = 1;
  std::uint64_t seed = 0;
  std::optional<Index> burn_in;
  std::optional<Matrix> x0_cov;
};

struct CalibrationSpec {
  std::optional<CalibrationKind> kind;
  double b_l = 0.0;
  double b_u = 0.0;
};

struct AgentConfig {
  std::string id;
  SystemModel system;
  PrivacySpec privacy;
};

struct Config {
  std::optional<SystemModel> system;
  std::optional<std::vector<AgentConfig>> agents;
  std::optional<PrivacySpec> privacy;
  std::optional<SimulationSpec> simulation;
  std::optional<CalibrationSpec> calibration;
};

namespace internal {

[[noreturn]] inline void ConfigFail(const std::string& where,
                                    const std::string& what) {
  throw Error(ErrorKind::kConfig, where + ": " + what);
}

inline void RejectUnknownKeys(const Json& obj, const std::string& where,
                              std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) ConfigFail(where, "expected an object");
  for (const auto& [key, _] : obj.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) ConfigFail(where, "unknown key '" + key + "'");
  }
}

inline const Json& Require(const Json& obj, const std::string& where,
                           const char* key) {
  auto it = obj.find(key);
  if (it == obj.end()) ConfigFail(where, std::string("missing key '") + key + "'");
  return *it;
}

inline double ReadNumber(const Json& v, const std::string& where) {
  if (!v.is_number()) ConfigFail(where, "expected a number");
  return v.get<double>();
}

inline std::int64_t ReadInteger(const Json& v, const std::string& where) {
  if (!v.is_number_integer()) ConfigFail(where, "expected an integer");
  return v.get<std::int64_t>();
}

inline Matrix ReadMatrix(const Json& v, const std::string& where) {
  RejectUnknownKeys(v, where, {"rows", "cols", "data"});
  const auto rows = ReadInteger(Require(v, where, "rows"), where + ".rows");
  const auto cols = ReadInteger(Require(v, where, "cols"), where + ".cols");
  if (rows <= 0 || cols <= 0) ConfigFail(where, "rows and cols must be >= 1");
  const Json& data = Require(v, where, "data");
  if (!data.is_array() || static_cast<std::int64_t>(data.size()) != rows) {
    ConfigFail(where + ".data", "expected " + std::to_string(rows) + " rows");
  }
  Matrix m(rows, cols);
  for (std::int64_t i = 0; i < rows; ++i) {
    const Json& row = data[i];
    const std::string rw = where + ".data[" + std::to_string(i) + "]";
    if (!row.is_array() || static_cast<std::int64_t>(row.size()) != cols) {
      ConfigFail(rw, "expected " + std::to_string(cols) + " entries");
    }
    for (std::int64_t j = 0; j < cols; ++j) {
      m(i, j) = ReadNumber(row[j], rw + "[" + std::to_string(j) + "]");
    }
  }
  return m;
}

inline Vector ReadVector(const Json& v, const std::string& where) {
  if (!v.is_array() || v.empty()) ConfigFail(where, "expected a nonempty array");
  Vector out(static_cast<Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) {
    out(static_cast<Index>(i)) =
        ReadNumber(v[i], where + "[" + std::to_string(i) + "]");
  }
  return out;
}

inline SystemModel ReadSystem(const Json& v, const std::string& where) {
  RejectUnknownKeys(v, where, {"H", "C", "W", "x0_hat"});
  SystemModel s;
  s.H = ReadMatrix(Require(v, where, "H"), where + ".H");
  s.C = ReadMatrix(Require(v, where, "C"), where + ".C");
  s.W = ReadMatrix(Require(v, where, "W"), where + ".W");
  if (auto it = v.find("x0_hat"); it != v.end()) {
    s.x0_hat = ReadVector(*it, where + ".x0_hat");
  } else {
    s.x0_hat = Vector::Zero(s.H.rows());
  }
  return s;
}

inline PrivacySpec ReadPrivacy(const Json& v, const std::string& where) {
  RejectUnknownKeys(v, where, {"epsilon", "delta", "adjacency_B", "sigma"});
  PrivacySpec p;
  if (auto it = v.find("epsilon"); it != v.end()) {
    p.epsilon = ReadNumber(*it, where + ".epsilon");
  }
  p.delta = ReadNumber(Require(v, where, "delta"), where + ".delta");
  p.adjacency_b =
      ReadNumber(Require(v, where, "adjacency_B"), where + ".adjacency_B");
  if (auto it = v.find("sigma"); it != v.end()) {
    if (it->is_number()) {
      p.sigma = Vector::Constant(1, it->get<double>());
      p.sigma_is_scalar = true;
    } else {
      p.sigma = ReadVector(*it, where + ".sigma");
    }
  }
  return p;
}

inline SimulationSpec ReadSimulation(const Json& v, const std::string& where) {
  RejectUnknownKeys(v, where,
                    {"horizon_T", "trials", "seed", "burn_in", "x0_cov"});
  SimulationSpec s;
  s.horizon = ReadInteger(Require(v, where, "horizon_T"), where + ".horizon_T");
  s.trials = ReadInteger(Require(v, where, "trials"), where + ".trials");
  const Json& seed = Require(v, where, "seed");
  if (!seed.is_number_integer()) ConfigFail(where + ".seed", "expected an integer");
  s.seed = seed.is_number_unsigned() ? seed.get<std::uint64_t>()
                                     : static_cast<std::uint64_t>(
                                           seed.get<std::int64_t>());
  if (auto it = v.find("burn_in"); it != v.end()) {
    s.burn_in = ReadInteger(*it, where + ".burn_in");
  }
  if (auto it = v.find("x0_cov"); it != v.end()) {
    s.x0_cov = ReadMatrix(*it, where + ".x0_cov");
  }
  return s;
}

inline CalibrationKind ParseCalibrationKind(const std::string& s,
                                            const std::string& where) {
  if (s == "apriori") return CalibrationKind::kApriori;
  if (s == "aposteriori") return CalibrationKind::kAposteriori;
  ConfigFail(where, "kind must be 'apriori' or 'aposteriori', got '" + s + "'");
}

inline CalibrationSpec ReadCalibration(const Json& v, const std::string& where) {
  RejectUnknownKeys(v, where, {"kind", "B_l", "B_u"});
  CalibrationSpec c;
  if (auto it = v.find("kind"); it != v.end()) {
    if (!it->is_string()) ConfigFail(where + ".kind", "expected a string");
    c.kind = ParseCalibrationKind(it->get<std::string>(), where + ".kind");
  }
  c.b_l = ReadNumber(Require(v, where, "B_l"), where + ".B_l");
  c.b_u = ReadNumber(Require(v, where, "B_u"), where + ".B_u");
  return c;
}

}  // namespace internal

inline Config ParseConfig(const Json& doc) {
  using namespace internal;
  RejectUnknownKeys(doc, "config",
                    {"system", "agents", "privacy", "simulation", "calibration"});
  Config cfg;
  const bool has_system = doc.contains("system");
  const bool has_agents = doc.contains("agents");
  if (has_system && has_agents) {
    ConfigFail("config", "'system' and 'agents' are mutually exclusive");
  }
  if (has_system) cfg.system = ReadSystem(doc["system"], "system");
  if (has_agents) {
    const Json& list = doc["agents"];
    if (!list.is_array()) ConfigFail("agents", "expected an array");
    cfg.agents.emplace();
    for (std::size_t i = 0; i < list.size(); ++i) {
      const std::string where = "agents[" + std::to_string(i) + "]";
      RejectUnknownKeys(list[i], where, {"id", "system", "privacy"});
      AgentConfig a;
      const Json& id = Require(list[i], where, "id");
      if (!id.is_string()) ConfigFail(where + ".id", "expected a string");
      a.id = id.get<std::string>();
      a.system = ReadSystem(Require(list[i], where, "system"), where + ".system");
      a.privacy =
          ReadPrivacy(Require(list[i], where, "privacy"), where + ".privacy");
      cfg.agents->push_back(std::move(a));
    }
  }
  if (doc.contains("privacy")) cfg.privacy = ReadPrivacy(doc["privacy"], "privacy");
  if (doc.contains("simulation")) {
    cfg.simulation = ReadSimulation(doc["simulation"], "simulation");
  }
  if (doc.contains("calibration")) {
    cfg.calibration = ReadCalibration(doc["calibration"], "calibration");
  }
  return cfg;
}

// Parse errors carry nlohmann's "line L, column C" location.
inline Config ParseConfigText(const std::string& text) {
  Json doc;
  try {
    doc = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw Error(ErrorKind::kConfig, std::string("malformed JSON: ") + e.what());
  }
  return ParseConfig(doc);
}

inline Config LoadConfig(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, "cannot open config '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return ParseConfigText(buf.str());
}

// ---------------------------------------------------------------------------
// Serialization

inline Json ToJson(const Matrix& m) {
  Json data = Json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    data.push_back(std::move(row));
  }
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::move(data)}};
}

inline Json VectorToJson(const Vector& v) {
  Json out = Json::array();
  for (Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

inline Json ToJson(const SystemModel& s) {
  return {{"H", ToJson(s.H)},
          {"C", ToJson(s.C)},
          {"W", ToJson(s.W)},
          {"x0_hat", VectorToJson(s.x0_hat)}};
}

inline Json ToJson(const PrivacySpec& p) {
  Json out = {{"delta", p.delta}, {"adjacency_B", p.adjacency_b}};
  if (p.epsilon) out["epsilon"] = *p.epsilon;
  if (p.sigma) {
    out["sigma"] = p.sigma_is_scalar ? Json((*p.sigma)(0)) : VectorToJson(*p.sigma);
  }
  return out;
}

inline Json ToJson(const SimulationSpec& s) {
  Json out = {{"horizon_T", s.horizon}, {"trials", s.trials}, {"seed", s.seed}};
  if (s.burn_in) out["burn_in"] = *s.burn_in;
  if (s.x0_cov) out["x0_cov"] = ToJson(*s.x0_cov);
  return out;
}

inline Json ToJson(const CalibrationSpec& c) {
  Json out = {{"B_l", c.b_l}, {"B_u", c.b_u}};
  if (c.kind) out["kind"] = std::string(CalibrationKindName(*c.kind));
  return out;
}

inline Json ToJson(const Config& cfg) {
  Json out = Json::object();
  if (cfg.system) out["system"] = ToJson(*cfg.system);
  if (cfg.agents) {
    Json list = Json::array();
    for (const auto& a : *cfg.agents) {
      list.push_back({{"id", a.id},
                      {"system", ToJson(a.system)},
                      {"privacy", ToJson(a.privacy)}});
    }
    out["agents"] = std::move(list);
  }
  if (cfg.privacy) out["privacy"] = ToJson(*cfg.privacy);
  if (cfg.simulation) out["simulation"] = ToJson(*cfg.simulation);
  if (cfg.calibration) out["calibration"] = ToJson(*cfg.calibration);
  return out;
}

inline Json ToJson(const BoundReport& r) {
  Json inter = Json::object();
  for (const auto& [k, v] : r.intermediates) inter[k] = v;
  return {{"kind", std::string(BoundKindName(r.kind))},
          {"lower", r.lower},
          {"upper", r.upper ? Json(*r.upper) : Json(nullptr)},
          {"applicable", r.applicable},
          {"intermediates", std::move(inter)}};
}

inline Json ToJson(const EpsilonInterval& e) {
  Json eta = Json::object();
  for (const auto& [k, v] : e.eta_values) eta[k] = v;
  return {{"kind", std::string(CalibrationKindName(e.kind))},
          {"eps_min", e.eps_min},
          {"eps_max", e.eps_max},
          {"feasible", e.feasible},
          {"eta_values", std::move(eta)},
          {"sigma_at_eps_min", e.sigma_at_eps_min},
          {"sigma_at_eps_max", e.sigma_at_eps_max},
          {"sensitivity", e.sensitivity},
          {"k_delta", e.k_delta}};
}

inline Json ToJson(const VerificationReport& v) {
  return {{"kind", std::string(CalibrationKindName(v.kind))},
          {"epsilon", v.epsilon},
          {"sigma", v.sigma},
          {"achieved_trace", v.achieved_trace},
          {"within_bounds", v.within_bounds}};
}

inline Json ToJson(const SimulationSummary& s) {
  return {{"mean_sq_err_prior", s.mean_sq_err_prior},
          {"mean_sq_err_post", s.mean_sq_err_post},
          {"stderr_prior", s.stderr_prior},
          {"stderr_post", s.stderr_post},
          {"trace_sigma", s.trace_sigma},
          {"trace_sigma_bar", s.trace_sigma_bar},
          {"bound_prior_lo", s.bound_prior_lo},
          {"bound_prior_hi", s.bound_prior_hi},
          {"bound_post_lo", s.bound_post_lo},
          {"bound_post_hi", s.bound_post_hi},
          {"trials", s.trials},
          {"horizon_T", s.horizon},
          {"burn_in", s.burn_in},
          {"seed", s.seed}};
}

inline Json ToJson(const RiccatiSolution& r) {
  return {{"trace_sigma", r.sigma.trace()},
          {"trace_sigma_bar", r.sigma_bar.trace()},
          {"logdet_sigma", LogDetSpd(r.sigma)},
          {"logdet_sigma_bar", LogDetSpd(r.sigma_bar)},
          {"iterations", r.iterations},
          {"residual", r.residual},
          {"Sigma", ToJson(r.sigma)},
          {"Sigma_bar", ToJson(r.sigma_bar)},
          {"gain", ToJson(r.gain)}};
}

}  // namespace dpkalman
