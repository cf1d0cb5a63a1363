#include "qsdlab/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "qsdlab/error.hpp"
#include "qsdlab/model.hpp"

namespace qsdlab::config {

using nlohmann::json;

namespace {

class Section {
 public:
  Section(const json& root, std::string name) : name_(std::move(name)) {
    if (!root.contains(name_)) return;
    node_ = &root.at(name_);
    if (!node_->is_object()) throw UsageError("config section '" + name_ + "' must be an object");
  }

  template <class T>
  void read(const std::string& key, T& out) {
    seen_.insert(key);
    if (!node_ || !node_->contains(key)) return;
    try {
      out = node_->at(key).get<T>();
    } catch (const json::exception& e) {
      throw UsageError("config key '" + name_ + "." + key + "' has the wrong type: " + e.what());
    }
  }

  const json* raw(const std::string& key) {
    seen_.insert(key);
    return node_ && node_->contains(key) ? &node_->at(key) : nullptr;
  }

  void finish() const {
    if (!node_) return;
    for (const auto& [key, _] : node_->items()) {
      if (!seen_.count(key)) throw UsageError("unknown config key '" + name_ + "." + key + "'");
    }
  }

 private:
  std::string name_;
  const json* node_ = nullptr;
  std::set<std::string> seen_;
};

void require(bool ok, const std::string& what) {
  if (!ok) throw UsageError(what);
}

}  // namespace

void RunConfig::validate() const {
  model::parse_shape(model.shape);
  model::ModelParams{model.alpha}.validate();
  sim_config().validate();
  require(sim.grid_step > 0.0, "sim.grid_step must be positive");
  diffusion::parse_component(sim.component);
  if (sim.window) require(sim.window->second > sim.window->first, "sim.window must be increasing");
  fv_options().validate();
  diffusion::InitialLaw::parse(fv.init);
  diffusion::InitialLaw::parse(sweep.init);
  require(sweep.n_points >= 2, "sweep.n_points must be at least 2");
  require(sweep.lo_factor > 0.0 && sweep.hi_factor > sweep.lo_factor, "sweep factors need 0 < lo < hi");
  require(sweep.t_end > 0.0, "sweep.t_end must be positive");
  require(sweep.threshold > 0.0 && sweep.threshold < 1.0, "sweep.threshold must lie in (0,1)");
  require(spectral.n_cells >= 64, "spectral.n_cells must be at least 64");
  require(spectral.refine_levels >= 1, "spectral.refine_levels must be at least 1");
  require(chain.max_n >= 1 && chain.stride >= 1, "chain.max_n and chain.stride must be positive");
  require(!timechange.alphas.empty(), "timechange.alphas must not be empty");
  for (double a : timechange.alphas) model::ModelParams{a}.validate();
  require(timechange.n_paths >= 1, "timechange.n_paths must be positive");
  require(timechange.x0 >= 3.0 && timechange.x0 < 5.0, "timechange.x0 must lie in [3,5)");
  require(timechange.horizon > 0.0 && timechange.grid_step > 0.0, "timechange horizon and grid_step must be positive");
  require(!basin.alpha_factors.empty(), "basin.alpha_factors must not be empty");
  for (double f : basin.alpha_factors) require(f > 0.0, "basin.alpha_factors must be positive");
  require(basin.t_end > 0.0, "basin.t_end must be positive");
  require(basin.seed_weight > 0.0 && basin.seed_weight < 1.0, "basin.seed_weight must lie in (0,1)");
  require(basin.dirac >= 3.0 && basin.dirac < 5.0, "basin.dirac must lie in [3,5)");
  require(!output.dir.empty(), "output.dir must not be empty");
}

diffusion::SimConfig RunConfig::sim_config() const {
  return {model.alpha, sim.dt, sim.t_max, sim.seed, sim.n_paths};
}

fleming_viot::FvOptions RunConfig::fv_options() const {
  fleming_viot::FvOptions o;
  o.n_particles = fv.n_particles;
  o.t_end = fv.t_end;
  o.observation_times = fv.observation_times;
  o.stationary_fraction = fv.stationary_fraction;
  o.stationary_stride = fv.stationary_stride;
  o.burn_in_fraction = fv.burn_in_fraction;
  o.trace_interval = fv.trace_interval;
  o.grid = {0.0, 5.0, fv.bins};
  return o;
}

RunConfig parse_run_config(std::string_view json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::exception& e) {
    throw UsageError(std::string("config does not parse: ") + e.what());
  }
  if (!root.is_object()) throw UsageError("config must be a JSON object");
  static const std::set<std::string> sections{"model", "sim", "fv", "sweep", "spectral",
                                              "chain", "timechange", "basin", "output"};
  for (const auto& [key, _] : root.items()) {
    if (!sections.count(key)) throw UsageError("unknown config section '" + key + "'");
  }

  RunConfig c;
  {
    Section s(root, "model");
    s.read("shape", c.model.shape);
    s.read("alpha", c.model.alpha);
    s.finish();
  }
  {
    Section s(root, "sim");
    s.read("dt", c.sim.dt);
    s.read("t_max", c.sim.t_max);
    s.read("seed", c.sim.seed);
    s.read("n_paths", c.sim.n_paths);
    s.read("x0", c.sim.x0);
    s.read("grid_step", c.sim.grid_step);
    s.read("component", c.sim.component);
    if (const json* w = s.raw("window")) {
      if (!w->is_array() || w->size() != 2) throw UsageError("sim.window must be [t_lo, t_hi]");
      try {
        c.sim.window = std::make_pair((*w)[0].get<double>(), (*w)[1].get<double>());
      } catch (const json::exception&) {
        throw UsageError("sim.window must hold two numbers");
      }
    }
    s.finish();
  }
  {
    Section s(root, "fv");
    s.read("n_particles", c.fv.n_particles);
    s.read("t_end", c.fv.t_end);
    s.read("init", c.fv.init);
    s.read("stationary_fraction", c.fv.stationary_fraction);
    s.read("stationary_stride", c.fv.stationary_stride);
    s.read("burn_in_fraction", c.fv.burn_in_fraction);
    s.read("trace_interval", c.fv.trace_interval);
    s.read("bins", c.fv.bins);
    s.read("observation_times", c.fv.observation_times);
    s.finish();
  }
  {
    Section s(root, "sweep");
    s.read("n_points", c.sweep.n_points);
    s.read("lo_factor", c.sweep.lo_factor);
    s.read("hi_factor", c.sweep.hi_factor);
    s.read("t_end", c.sweep.t_end);
    s.read("init", c.sweep.init);
    s.read("threshold", c.sweep.threshold);
    s.finish();
  }
  {
    Section s(root, "spectral");
    s.read("n_cells", c.spectral.n_cells);
    s.read("refine_levels", c.spectral.refine_levels);
    s.finish();
  }
  {
    Section s(root, "chain");
    s.read("path", c.chain.path);
    s.read("max_n", c.chain.max_n);
    s.read("stride", c.chain.stride);
    const json* n1 = s.raw("n1");
    const json* n2 = s.raw("n2");
    const json* q = s.raw("Q");
    if (n1 || n2 || q) {
      if (!(n1 && n2 && q)) throw UsageError("inline chain needs n1, n2 and Q");
      c.chain.inline_json = json{{"n1", *n1}, {"n2", *n2}, {"Q", *q}}.dump();
    }
    s.finish();
  }
  {
    Section s(root, "timechange");
    s.read("alphas", c.timechange.alphas);
    s.read("n_paths", c.timechange.n_paths);
    s.read("x0", c.timechange.x0);
    s.read("horizon", c.timechange.horizon);
    s.read("grid_step", c.timechange.grid_step);
    s.finish();
  }
  {
    Section s(root, "basin");
    s.read("alpha_factors", c.basin.alpha_factors);
    s.read("t_end", c.basin.t_end);
    s.read("seed_weight", c.basin.seed_weight);
    s.read("dirac", c.basin.dirac);
    s.finish();
  }
  {
    Section s(root, "output");
    s.read("dir", c.output.dir);
    s.read("svg", c.output.svg);
    s.finish();
  }
  c.validate();
  return c;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_run_config(buf.str());
}

std::string to_json(const RunConfig& c) {
  json j;
  j["model"] = {{"shape", c.model.shape}, {"alpha", c.model.alpha}};
  j["sim"] = {{"dt", c.sim.dt},       {"t_max", c.sim.t_max},         {"seed", c.sim.seed},
              {"n_paths", c.sim.n_paths}, {"x0", c.sim.x0},           {"grid_step", c.sim.grid_step},
              {"component", c.sim.component}};
  if (c.sim.window) j["sim"]["window"] = {c.sim.window->first, c.sim.window->second};
  j["fv"] = {{"n_particles", c.fv.n_particles},
             {"t_end", c.fv.t_end},
             {"init", c.fv.init},
             {"stationary_fraction", c.fv.stationary_fraction},
             {"stationary_stride", c.fv.stationary_stride},
             {"burn_in_fraction", c.fv.burn_in_fraction},
             {"trace_interval", c.fv.trace_interval},
             {"bins", c.fv.bins},
             {"observation_times", c.fv.observation_times}};
  j["sweep"] = {{"n_points", c.sweep.n_points}, {"lo_factor", c.sweep.lo_factor}, {"hi_factor", c.sweep.hi_factor},
                {"t_end", c.sweep.t_end},       {"init", c.sweep.init},           {"threshold", c.sweep.threshold}};
  j["spectral"] = {{"n_cells", c.spectral.n_cells}, {"refine_levels", c.spectral.refine_levels}};
  j["chain"] = {{"max_n", c.chain.max_n}, {"stride", c.chain.stride}};
  if (!c.chain.path.empty()) j["chain"]["path"] = c.chain.path;
  if (!c.chain.inline_json.empty()) j["chain"].update(json::parse(c.chain.inline_json));
  j["timechange"] = {{"alphas", c.timechange.alphas},
                     {"n_paths", c.timechange.n_paths},
                     {"x0", c.timechange.x0},
                     {"horizon", c.timechange.horizon},
                     {"grid_step", c.timechange.grid_step}};
  j["basin"] = {{"alpha_factors", c.basin.alpha_factors},
                {"t_end", c.basin.t_end},
                {"seed_weight", c.basin.seed_weight},
                {"dirac", c.basin.dirac}};
  j["output"] = {{"dir", c.output.dir}, {"svg", c.output.svg}};
  return j.dump(2);
}

}  // namespace qsdlab::config
