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

// Command line front end:
//   dpkalman <calibrate|bounds|simulate|dare|compose> --config <path>
//            [--kind apriori|aposteriori] [--out <csv>] [--summary <json>]
//            [--json] [--threads N] [--seed N]
//
// With --json, stdout carries exactly one JSON document; diagnostics always
// go to stderr. Exit codes: 0 ok, 1 validation or I/O error, 2 infeasible
// calibration, 3 numerical failure.

#pragma once

#include <cstdint>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include "dpkalman/bounds.hpp"
#include "dpkalman/calibration.hpp"
#include "dpkalman/config.hpp"
#include "dpkalman/error.hpp"
#include "dpkalman/filter.hpp"
#include "dpkalman/linalg.hpp"
#include "dpkalman/network.hpp"
#include "dpkalman/privacy.hpp"
#include "dpkalman/simulation.hpp"

namespace dpkalman::cli {

struct Options {
  std::string command;
  std::string config_path;
  std::string kind;
  std::string out_path;
  std::string summary_path;
  bool json = false;
  unsigned threads = 0;
  std::optional<std::uint64_t> seed;
};

// System plus the per-channel noise scale it is filtered with.
struct ResolvedModel {
  SystemModel system;
  Vector sigma;
  std::optional<NetworkModel> network;
};

inline PrivacyConfig ResolvePrivacy(const PrivacySpec& spec,
                                    const SystemModel& system,
                                    const std::string& where,
                                    std::ostream& err) {
  if (!spec.epsilon) {
    throw Error(ErrorKind::kConfig, where + ": missing key 'epsilon'");
  }
  std::optional<Vector> sigma;
  if (spec.sigma) {
    if (spec.sigma_is_scalar) {
      sigma = Vector::Constant(system.output_dim(), (*spec.sigma)(0));
    } else {
      sigma = *spec.sigma;
    }
  }
  PrivacyConfig cfg = MakePrivacyConfig(*spec.epsilon, spec.delta,
                                        spec.adjacency_b, system.C, sigma);
  if (!cfg.IsCompliant()) {
    err << "warning: " << where << ".sigma is below the minimal value "
        << std::setprecision(6) << cfg.MinimalSigma()
        << " for the requested (epsilon, delta)\n";
  }
  return cfg;
}

inline std::vector<AgentSpec> ResolveAgents(const Config& cfg,
                                            std::ostream& err) {
  std::vector<AgentSpec> agents;
  for (std::size_t i = 0; i < cfg.agents->size(); ++i) {
    const AgentConfig& a = (*cfg.agents)[i];
    try {
      a.system.Validate();
      agents.push_back({a.id, a.system,
                        ResolvePrivacy(a.privacy, a.system,
                                       "agents[" + std::to_string(i) +
                                           "].privacy",
                                       err)});
    } catch (const Error& e) {
      throw Error(e.kind(), "agent '" + a.id + "': " + e.what());
    }
  }
  return agents;
}

inline ResolvedModel ResolveModel(const Config& cfg, std::ostream& err) {
  ResolvedModel out;
  if (cfg.agents) {
    out.network = Compose(ResolveAgents(cfg, err));
    out.system = out.network->system;
    out.sigma = out.network->sigma;
    return out;
  }
  if (!cfg.system) {
    throw Error(ErrorKind::kConfig, "config: needs a 'system' or 'agents'");
  }
  if (!cfg.privacy) {
    throw Error(ErrorKind::kConfig, "config: missing 'privacy' section");
  }
  cfg.system->Validate();
  out.system = *cfg.system;
  out.sigma = ResolvePrivacy(*cfg.privacy, out.system, "privacy", err).sigma;
  return out;
}

inline void Emit(std::ostream& out, const Json& doc) {
  out << doc.dump(2) << '\n';
}

inline std::string Fmt(double x) {
  std::ostringstream os;
  os << std::setprecision(6) << x;
  return os.str();
}

inline int CmdCalibrate(const Options& opt, const Config& cfg,
                        std::ostream& out, std::ostream&) {
  if (!cfg.system) {
    throw Error(ErrorKind::kConfig, "calibrate needs a single 'system'");
  }
  if (!cfg.privacy) {
    throw Error(ErrorKind::kConfig, "config: missing 'privacy' section");
  }
  if (!cfg.calibration) {
    throw Error(ErrorKind::kConfig, "config: missing 'calibration' section");
  }
  CalibrationTarget target;
  if (!opt.kind.empty()) {
    target.kind = internal::ParseCalibrationKind(opt.kind, "--kind");
  } else if (cfg.calibration->kind) {
    target.kind = *cfg.calibration->kind;
  } else {
    throw Error(ErrorKind::kConfig,
                "calibration.kind: not given in the config or via --kind");
  }
  target.b_l = cfg.calibration->b_l;
  target.b_u = cfg.calibration->b_u;
  target.delta = cfg.privacy->delta;
  target.adjacency_b = cfg.privacy->adjacency_b;

  const EpsilonInterval interval = Calibrate(*cfg.system, target);
  if (opt.json) {
    Emit(out, ToJson(interval));
  } else {
    out << "kind              " << CalibrationKindName(interval.kind) << '\n'
        << "eps_min           " << Fmt(interval.eps_min) << '\n'
        << "eps_max           " << Fmt(interval.eps_max) << '\n'
        << "feasible          " << (interval.feasible ? "yes" : "no") << '\n';
    for (const auto& [name, value] : interval.eta_values) {
      out << std::left << std::setw(18) << name << Fmt(value) << '\n';
    }
    out << "sigma_at_eps_min  " << Fmt(interval.sigma_at_eps_min) << '\n'
        << "sigma_at_eps_max  " << Fmt(interval.sigma_at_eps_max) << '\n';
  }
  return static_cast<int>(interval.feasible ? ExitStatus::kSuccess
                                            : ExitStatus::kInfeasible);
}

inline int CmdBounds(const Options& opt, const Config& cfg, std::ostream& out,
                     std::ostream& err) {
  const ResolvedModel model = ResolveModel(cfg, err);
  const AllBounds b = ComputeAllBounds(model.system, model.sigma);
  const BoundReport* reports[] = {&b.apriori_trace, &b.aposteriori_trace,
                                  &b.apriori_logdet, &b.aposteriori_logdet};
  if (opt.json) {
    Json list = Json::array();
    for (const auto* r : reports) list.push_back(ToJson(*r));
    Emit(out, {{"sigma", VectorToJson(model.sigma)}, {"reports", list}});
  } else {
    out << std::left << std::setw(20) << "kind" << std::setw(14) << "lower"
        << std::setw(14) << "upper"
        << "applicable\n";
    for (const auto* r : reports) {
      out << std::left << std::setw(20) << BoundKindName(r->kind)
          << std::setw(14) << Fmt(r->lower) << std::setw(14)
          << (r->upper ? Fmt(*r->upper) : std::string("-"))
          << (r->applicable ? "yes" : "no") << '\n';
    }
  }
  return 0;
}

inline int CmdSimulate(const Options& opt, const Config& cfg,
                       std::ostream& out, std::ostream& err) {
  if (!cfg.simulation) {
    throw Error(ErrorKind::kConfig, "config: missing 'simulation' section");
  }
  const ResolvedModel model = ResolveModel(cfg, err);
  SimulationConfig sim;
  sim.system = model.system;
  sim.sigma = model.sigma;
  sim.horizon = cfg.simulation->horizon;
  sim.trials = cfg.simulation->trials;
  sim.seed = opt.seed ? *opt.seed : cfg.simulation->seed;
  sim.x0_cov = cfg.simulation->x0_cov;
  if (cfg.simulation->burn_in) sim.burn_in = *cfg.simulation->burn_in;
  sim.threads = opt.threads;

  // Open outputs before the run so a bad path fails fast.
  std::ofstream csv, summary;
  if (!opt.out_path.empty()) {
    csv.open(opt.out_path, std::ios::binary);
    if (!csv) throw Error(ErrorKind::kIo, "cannot write '" + opt.out_path + "'");
  }
  if (!opt.summary_path.empty()) {
    summary.open(opt.summary_path, std::ios::binary);
    if (!summary) {
      throw Error(ErrorKind::kIo, "cannot write '" + opt.summary_path + "'");
    }
  }

  const SimulationResult result = Simulate(sim);
  const Json summary_json = ToJson(result.summary);
  if (csv.is_open()) {
    WriteCsv(csv, result);
    csv.close();
    if (!csv) throw Error(ErrorKind::kIo, "failed writing '" + opt.out_path + "'");
  }
  if (summary.is_open()) {
    summary << summary_json.dump(2) << '\n';
    summary.close();
    if (!summary) {
      throw Error(ErrorKind::kIo, "failed writing '" + opt.summary_path + "'");
    }
  }
  if (opt.json) {
    Emit(out, summary_json);
  } else {
    const auto& s = result.summary;
    out << "trials            " << s.trials << '\n'
        << "horizon_T         " << s.horizon << '\n'
        << "burn_in           " << s.burn_in << '\n'
        << "mean_sq_err_prior " << Fmt(s.mean_sq_err_prior) << " +/- "
        << Fmt(s.stderr_prior) << "  bounds [" << Fmt(s.bound_prior_lo)
        << ", " << Fmt(s.bound_prior_hi) << "]  tr Sigma "
        << Fmt(s.trace_sigma) << '\n'
        << "mean_sq_err_post  " << Fmt(s.mean_sq_err_post) << " +/- "
        << Fmt(s.stderr_post) << "  bounds [" << Fmt(s.bound_post_lo) << ", "
        << Fmt(s.bound_post_hi) << "]  tr Sigma_bar "
        << Fmt(s.trace_sigma_bar) << '\n';
  }
  return 0;
}

inline int CmdDare(const Options&, const Config& cfg, std::ostream& out,
                   std::ostream& err) {
  const ResolvedModel model = ResolveModel(cfg, err);
  const RiccatiSolution sol =
      SolveDare(model.system, NoiseCovariance(model.sigma));
  Emit(out, ToJson(sol));
  return 0;
}

inline int CmdCompose(const Options& opt, const Config& cfg, std::ostream& out,
                      std::ostream& err) {
  if (!cfg.agents) {
    throw Error(ErrorKind::kConfig, "compose needs an 'agents' list");
  }
  const std::vector<AgentSpec> agents = ResolveAgents(cfg, err);
  const NetworkModel net = Compose(agents);
  const FilterSolution sol = MakeFilterSolution(net.system, net.sigma);
  const std::vector<AgentSlice> slices = PerAgentSlices(net, sol);

  Json list = Json::array();
  for (std::size_t i = 0; i < agents.size(); ++i) {
    const FilterSolution alone =
        MakeFilterSolution(agents[i].system, agents[i].privacy.sigma);
    const auto& so = net.state_offsets[i];
    const auto& oo = net.output_offsets[i];
    list.push_back({{"id", slices[i].id},
                    {"state_offset", {so.begin, so.end}},
                    {"output_offset", {oo.begin, oo.end}},
                    {"trace_sigma", slices[i].trace_sigma},
                    {"trace_sigma_bar", slices[i].trace_sigma_bar},
                    {"standalone_trace_sigma", alone.riccati.sigma.trace()},
                    {"standalone_trace_sigma_bar",
                     alone.riccati.sigma_bar.trace()}});
  }
  Json bounds = nullptr;
  try {
    bounds = {{"apriori_trace", ToJson(AprioriTraceBounds(net.system, net.sigma))},
              {"aposteriori_trace",
               ToJson(AposterioriTraceBounds(net.system, net.sigma))}};
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::kNotDiagonal) throw;
  }
  const Json doc = {{"n", net.system.state_dim()},
                    {"q", net.system.output_dim()},
                    {"trace_sigma", sol.riccati.sigma.trace()},
                    {"trace_sigma_bar", sol.riccati.sigma_bar.trace()},
                    {"agents", list},
                    {"network_bounds", bounds}};
  if (opt.json) {
    Emit(out, doc);
  } else {
    out << "n " << net.system.state_dim() << "  q " << net.system.output_dim()
        << '\n';
    out << std::left << std::setw(16) << "agent" << std::setw(12) << "states"
        << std::setw(12) << "outputs" << std::setw(14) << "tr Sigma_i"
        << "tr Sigma_bar_i\n";
    for (std::size_t i = 0; i < slices.size(); ++i) {
      const auto& so = net.state_offsets[i];
      const auto& oo = net.output_offsets[i];
      out << std::left << std::setw(16) << slices[i].id << std::setw(12)
          << ("[" + std::to_string(so.begin) + "," + std::to_string(so.end) +
              ")")
          << std::setw(12)
          << ("[" + std::to_string(oo.begin) + "," + std::to_string(oo.end) +
              ")")
          << std::setw(14) << Fmt(slices[i].trace_sigma)
          << Fmt(slices[i].trace_sigma_bar) << '\n';
    }
  }
  return 0;
}

inline int Dispatch(const Options& opt, std::ostream& out, std::ostream& err) {
  const Config cfg = LoadConfig(opt.config_path);
  if (opt.command == "calibrate") return CmdCalibrate(opt, cfg, out, err);
  if (opt.command == "bounds") return CmdBounds(opt, cfg, out, err);
  if (opt.command == "simulate") return CmdSimulate(opt, cfg, out, err);
  if (opt.command == "dare") return CmdDare(opt, cfg, out, err);
  if (opt.command == "compose") return CmdCompose(opt, cfg, out, err);
  throw Error(ErrorKind::kInvalidArgument, "unknown command " + opt.command);
}

inline int Run(const std::vector<std::string>& args, std::ostream& out,
               std::ostream& err) {
  CLI::App app{"Differentially private steady-state Kalman filtering"};
  app.require_subcommand(1);
  Options opt;

  const std::pair<const char*, const char*> commands[] = {
      {"calibrate", "privacy level interval for a covariance target"},
      {"bounds", "steady-state covariance bounds at the configured noise"},
      {"simulate", "Monte Carlo run of the privatized filter"},
      {"dare", "steady-state Riccati solution and gain"},
      {"compose", "network of agents solved as one block system"},
  };
  for (const auto& [name, about] : commands) {
    CLI::App* sub = app.add_subcommand(name, about);
    sub->add_option("--config", opt.config_path, "JSON config file")
        ->required();
    sub->add_flag("--json", opt.json, "emit a single JSON document");
    sub->add_option("--threads", opt.threads,
                    "simulation worker threads (0 = all cores)");
    sub->add_option("--seed", opt.seed, "override simulation.seed");
    if (std::string(name) == "calibrate") {
      sub->add_option("--kind", opt.kind, "apriori or aposteriori")
          ->check(CLI::IsMember({"apriori", "aposteriori"}));
    }
    if (std::string(name) == "simulate") {
      sub->add_option("--out", opt.out_path, "per-step CSV output");
      sub->add_option("--summary", opt.summary_path, "summary JSON output");
    }
    sub->callback([&opt, name] { opt.command = name; });
  }

  std::vector<std::string> argv_store = args;
  std::vector<char*> argv;
  argv.reserve(argv_store.size());
  for (auto& a : argv_store) argv.push_back(a.data());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : static_cast<int>(ExitStatus::kValidation);
  }

  try {
    return Dispatch(opt, out, err);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return static_cast<int>(ExitCodeFor(e.kind()));
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return static_cast<int>(ExitStatus::kValidation);
  }
}

}  // namespace dpkalman::cli
