#pragma once

// JSON run configuration. Every section and key is optional; unknown ones are
// rejected with UsageError.
//
// {
//   "model":      {"shape": "quadratic-canonical", "alpha": 1.0},
//   "sim":        {"dt": 0.001, "t_max": 20, "seed": 1, "n_paths": 10000,
//                  "x0": 1.0, "grid_step": 0.01, "component": "D1",
//                  "window": [t_lo, t_hi]},
//   "fv":         {"n_particles": 10000, "t_end": 200, "init": "uniform:0:2",
//                  "stationary_fraction": 0.2, "stationary_stride": 10,
//                  "burn_in_fraction": 0.5, "trace_interval": 0.1,
//                  "bins": 100, "observation_times": [0, 1]},
//   "sweep":      {"n_points": 25, "lo_factor": 0.2, "hi_factor": 3.0,
//                  "t_end": 40, "init": "uniform:0:2", "threshold": 0.03},
//   "spectral":   {"n_cells": 4096, "refine_levels": 4},
//   "chain":      {"path": "chain.json"} or {"n1": 1, "n2": 1, "Q": [[...]]},
//                 plus "max_n": 1000, "stride": 1,
//   "timechange": {"alphas": [0.5, 2, 4], "n_paths": 100000, "x0": 4,
//                  "horizon": 12, "grid_step": 0.01},
//   "basin":      {"alpha_factors": [0.5, 2], "t_end": 20,
//                  "seed_weight": 0.01, "dirac": 4},
//   "output":     {"dir": "results", "svg": false}
// }

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "qsdlab/diffusion.hpp"
#include "qsdlab/fleming_viot.hpp"

namespace qsdlab::config {

struct ModelSection {
  std::string shape = "quadratic-canonical";
  double alpha = 1.0;
};

struct SimSection {
  double dt = 1e-3;
  double t_max = 20.0;
  std::uint64_t seed = 1;
  std::size_t n_paths = 10000;
  double x0 = 1.0;
  double grid_step = 0.01;
  std::string component = "D1";
  std::optional<std::pair<double, double>> window;
};

struct FvSection {
  std::size_t n_particles = 10000;
  double t_end = 200.0;
  std::string init = "uniform:0:2";
  double stationary_fraction = 0.2;
  std::uint64_t stationary_stride = 10;
  double burn_in_fraction = 0.5;
  double trace_interval = 0.1;
  int bins = 100;
  std::vector<double> observation_times;
};

struct SweepSection {
  int n_points = 25;
  double lo_factor = 0.2;
  double hi_factor = 3.0;
  double t_end = 40.0;
  std::string init = "uniform:0:2";
  double threshold = 0.03;
};

struct SpectralSection {
  int n_cells = 4096;
  int refine_levels = 4;
};

struct ChainSection {
  std::string path;
  std::string inline_json;  // {"n1","n2","Q"} given inside the config
  long long max_n = 1000;
  long long stride = 1;
};

struct TimechangeSection {
  std::vector<double> alphas{0.5, 2.0, 4.0};
  std::size_t n_paths = 100000;
  double x0 = 4.0;
  double horizon = 12.0;    // survival horizon at alpha = 1, divided by alpha
  double grid_step = 0.01;  // likewise
};

struct BasinSection {
  std::vector<double> alpha_factors{0.5, 2.0};
  double t_end = 20.0;
  double seed_weight = 0.01;
  double dirac = 4.0;
};

struct OutputSection {
  std::string dir = "results";
  bool svg = false;
};

struct RunConfig {
  ModelSection model;
  SimSection sim;
  FvSection fv;
  SweepSection sweep;
  SpectralSection spectral;
  ChainSection chain;
  TimechangeSection timechange;
  BasinSection basin;
  OutputSection output;

  // Throws UsageError / DomainError on out-of-range values.
  void validate() const;

  diffusion::SimConfig sim_config() const;
  fleming_viot::FvOptions fv_options() const;
};

RunConfig parse_run_config(std::string_view json_text);
RunConfig load_run_config(const std::string& path);
std::string to_json(const RunConfig& cfg);

}  // namespace qsdlab::config
