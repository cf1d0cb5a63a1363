#include "qsdlab/cli.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "json.hpp"
#include "qsdlab/chain.hpp"
#include "qsdlab/chain_io.hpp"
#include "qsdlab/config.hpp"
#include "qsdlab/diffusion.hpp"
#include "qsdlab/error.hpp"
#include "qsdlab/experiments.hpp"
#include "qsdlab/fleming_viot.hpp"
#include "qsdlab/output.hpp"
#include "qsdlab/parallel.hpp"
#include "qsdlab/spectral.hpp"

namespace qsdlab::cli {

namespace fs = std::filesystem;
using output::CsvTable;

namespace {

struct Flags {
  std::string config;
  std::optional<double> alpha;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> n_particles;
  std::optional<std::size_t> n_paths;
  std::optional<double> dt;
  std::optional<double> x0;
  std::optional<double> t_max;
  std::optional<double> t_end;
  std::optional<std::string> component;
  std::optional<std::string> out;
  std::optional<std::string> chain;
  std::optional<std::size_t> threads;
  bool svg = false;
  bool refine = false;
};

struct Context {
  config::RunConfig cfg;
  Flags flags;
  fs::path dir;
  std::ostream& out;

  void emit(const std::string& name, const CsvTable& t) const {
    t.write(dir / name);
    out << "wrote " << (dir / name).string() << '\n';
  }
  void emit_text(const std::string& name, const std::string& text) const {
    output::write_text(dir / name, text);
    out << "wrote " << (dir / name).string() << '\n';
  }
};

config::RunConfig resolve_config(const Flags& f) {
  auto c = f.config.empty() ? config::RunConfig{} : config::load_run_config(f.config);
  if (f.alpha) c.model.alpha = *f.alpha;
  if (f.seed) c.sim.seed = *f.seed;
  if (f.n_particles) c.fv.n_particles = *f.n_particles;
  if (f.n_paths) c.sim.n_paths = *f.n_paths;
  if (f.dt) c.sim.dt = *f.dt;
  if (f.x0) c.sim.x0 = *f.x0;
  if (f.t_max) c.sim.t_max = *f.t_max;
  if (f.t_end) c.fv.t_end = *f.t_end;
  if (f.component) c.sim.component = *f.component;
  if (f.out) c.output.dir = *f.out;
  if (f.svg) c.output.svg = true;
  c.validate();
  return c;
}

CsvTable histogram_table(const measure::EmpiricalMeasure& m) {
  CsvTable t({"bin_lo", "bin_hi", "mass"});
  for (int i = 0; i < m.grid().bins; ++i) t.add_row({m.bin_lo(i), m.bin_hi(i), m.masses()[i]});
  return t;
}

output::Series histogram_series(const std::string& name, const measure::EmpiricalMeasure& m) {
  output::Series s{name, {}, {}};
  for (int i = 0; i < m.grid().bins; ++i) {
    s.x.push_back(0.5 * (m.bin_lo(i) + m.bin_hi(i)));
    s.y.push_back(m.masses()[i] / m.grid().width());
  }
  return s;
}

chain::ReducibleChain load_chain(const Context& ctx) {
  if (ctx.flags.chain) return chain::load_chain(*ctx.flags.chain);
  if (!ctx.cfg.chain.inline_json.empty()) return chain::parse_chain_json(ctx.cfg.chain.inline_json);
  if (!ctx.cfg.chain.path.empty()) return chain::load_chain(ctx.cfg.chain.path);
  throw UsageError("chain needs --chain <path> or a chain section in the config");
}

void cmd_chain(const Context& ctx) {
  const auto ch = load_chain(ctx);
  const auto qsds = chain::enumerate_qsds(ch);
  CsvTable q({"qsd", "rate", "support_d1", "residual", "state", "mass"});
  for (std::size_t k = 0; k < qsds.size(); ++k) {
    const double res = chain::eigen_residual(ch, qsds[k]);
    for (int s = 0; s < ch.size(); ++s)
      q.add_row({static_cast<long long>(k), qsds[k].rate, static_cast<long long>(qsds[k].support_d1), res,
                 static_cast<long long>(s), qsds[k].distribution[s]});
  }
  ctx.emit("chain_qsds.csv", q);

  const auto rates = chain::block_rates(ch);
  const auto md = chain::malthus_data(ch);
  CsvTable r({"lambda1", "lambda2", "rate_class", "lambda0"});
  r.add_row({rates.lambda1, rates.lambda2, std::string(chain::rate_class_name(md.rate_class)), md.lambda});
  ctx.emit("chain_rates.csv", r);

  CsvTable d({"n", "dev_exponential", "dev_critical"});
  output::Series se{"exponential scaling", {}, {}}, sc{"critical scaling", {}, {}};
  for (long long n = 1; n <= ctx.cfg.chain.max_n; n += ctx.cfg.chain.stride) {
    const auto dev = chain::malthus_deviation(ch, n);
    d.add_row({n, dev.dev_exponential, dev.dev_critical});
    se.x.push_back(n);
    se.y.push_back(dev.dev_exponential);
    sc.x.push_back(n);
    sc.y.push_back(dev.dev_critical);
  }
  ctx.emit("chain_deviation.csv", d);
  if (ctx.cfg.output.svg)
    ctx.emit_text("chain_deviation.svg",
                  output::svg_chart({"Distance to the Malthusian limit", "n", "deviation", true}, {se, sc}));
}

diffusion::SurvivalCurve survival(const Context& ctx) {
  const auto sim = ctx.cfg.sim_config();
  const auto times = diffusion::uniform_time_grid(sim.t_max, ctx.cfg.sim.grid_step);
  return diffusion::survival_curve(ctx.cfg.sim.x0, sim, times);
}

void cmd_sde(const Context& ctx) {
  const auto c = survival(ctx);
  CsvTable t({"t", "n_D1", "n_D2right", "n_total"});
  for (std::size_t i = 0; i < c.times.size(); ++i)
    t.add_row({c.times[i], static_cast<long long>(c.n_d1[i]), static_cast<long long>(c.n_d2right[i]),
               static_cast<long long>(c.n_total[i])});
  ctx.emit("sde.csv", t);
  if (ctx.cfg.output.svg) {
    std::vector<output::Series> s{{"D1", c.times, {}}, {"D2 right", c.times, {}}, {"total", c.times, {}}};
    for (std::size_t i = 0; i < c.times.size(); ++i) {
      s[0].y.push_back(double(c.n_d1[i]) / c.n_paths);
      s[1].y.push_back(double(c.n_d2right[i]) / c.n_paths);
      s[2].y.push_back(double(c.n_total[i]) / c.n_paths);
    }
    ctx.emit_text("sde.svg", output::svg_chart({"Survival fractions", "t", "fraction of paths"}, s));
  }
}

void cmd_lambda(const Context& ctx) {
  const auto c = survival(ctx);
  const auto wanted = diffusion::parse_component(ctx.cfg.sim.component);
  CsvTable t({"component", "lambda_hat", "stderr", "window_lo", "window_hi"});
  for (auto comp : {diffusion::Component::D1, diffusion::Component::D2Right, diffusion::Component::Total}) {
    try {
      const auto e = diffusion::lambda_from_survival(c, comp, ctx.cfg.sim.window);
      t.add_row({std::string(diffusion::component_name(comp)), e.lambda, e.std_error, e.window_lo, e.window_hi});
    } catch (const EstimationError&) {
      if (comp == wanted) throw;
    }
  }
  ctx.emit("lambda.csv", t);
}

void cmd_spectral(const Context& ctx) {
  const double alpha = ctx.cfg.model.alpha;
  const int n = ctx.cfg.spectral.n_cells;
  CsvTable t({"interval", "alpha", "lambda", "residual", "n_cells"});
  std::vector<output::Series> dens;
  for (auto iv : {spectral::Interval::Left, spectral::Interval::Right}) {
    const auto s = spectral::solve(iv, alpha, n);
    const std::string name(spectral::interval_name(iv));
    t.add_row({name, alpha, s.lambda, s.residual, static_cast<long long>(s.n_cells)});
    CsvTable d({"x", "density"});
    for (std::size_t i = 0; i < s.x.size(); ++i) d.add_row({s.x[i], s.density[i]});
    ctx.emit("spectral_density_" + std::string(iv == spectral::Interval::Left ? "left" : "right") + ".csv", d);
    dens.push_back({name, s.x, s.density});
  }
  ctx.emit("spectral.csv", t);

  const auto crit = spectral::critical_alpha(n);
  CsvTable c({"alpha_star", "lambda1", "lambda2_unit", "n_cells", "relative_change"});
  c.add_row({crit.alpha_star, crit.lambda1, crit.lambda2_unit, static_cast<long long>(crit.n_cells),
             crit.relative_change});
  ctx.emit("spectral_critical.csv", c);

  if (ctx.flags.refine) {
    CsvTable r({"interval", "n_cells", "lambda", "residual", "relative_change"});
    for (auto iv : {spectral::Interval::Left, spectral::Interval::Right}) {
      const auto levels = spectral::refinement_study(iv, alpha, n, ctx.cfg.spectral.refine_levels);
      for (std::size_t k = 0; k < levels.size(); ++k) {
        const double change =
            k ? std::abs(levels[k].lambda - levels[k - 1].lambda) / std::abs(levels[k].lambda) : std::nan("");
        r.add_row({std::string(spectral::interval_name(iv)), static_cast<long long>(levels[k].n_cells),
                   levels[k].lambda, levels[k].residual, change});
      }
    }
    ctx.emit("spectral_refinement.csv", r);
  }
  if (ctx.cfg.output.svg)
    ctx.emit_text("spectral.svg", output::svg_chart({"Quasi-stationary densities", "x", "density"}, dens));
}

void cmd_fv(const Context& ctx) {
  const auto law = diffusion::InitialLaw::parse(ctx.cfg.fv.init);
  const auto r = fleming_viot::run_fv(law, ctx.cfg.sim_config(), ctx.cfg.fv_options());

  CsvTable tr({"t", "mass_D1", "resample_rate"});
  output::Series mass{"mass_D1", {}, {}};
  for (const auto& p : r.trace) {
    tr.add_row({p.t, p.mass_d1, p.resample_rate});
    mass.x.push_back(p.t);
    mass.y.push_back(p.mass_d1);
  }
  ctx.emit("fv_trace.csv", tr);
  ctx.emit("fv_stationary.csv", histogram_table(r.stationary));
  for (std::size_t k = 0; k < r.observations.size(); ++k)
    ctx.emit("fv_histogram_" + std::to_string(k) + ".csv", histogram_table(r.observations[k]));

  CsvTable s({"rate_hat", "window_lo", "window_hi", "resample_count", "mass_D1"});
  s.add_row({r.rate_hat, r.rate_window_lo, r.rate_window_hi, static_cast<long long>(r.resample_count),
             r.stationary.mass_d1()});
  ctx.emit("fv_summary.csv", s);

  if (ctx.cfg.output.svg) {
    ctx.emit_text("fv_trace.svg", output::svg_chart({"Particle mass in (0,2)", "t", "mass_D1"}, {mass}));
    ctx.emit_text("fv_stationary.svg", output::svg_chart({"Stationary histogram", "x", "density"},
                                                         {histogram_series("particles", r.stationary)}));
  }
}

void cmd_sweep(const Context& ctx) {
  const auto r = experiments::bifurcation_sweep(ctx.cfg);
  CsvTable t({"alpha", "mass_D1", "rate_hat"});
  for (std::size_t i = 0; i < r.alphas.size(); ++i) t.add_row({r.alphas[i], r.mass_d1[i], r.rate_hat[i]});
  ctx.emit("sweep.csv", t);

  nlohmann::json meta{{"threshold", r.threshold},
                      {"alpha_star_spectral", r.alpha_star_spectral},
                      {"lambda1", r.lambda1},
                      {"lambda2_unit", r.lambda2_unit},
                      {"n_points", ctx.cfg.sweep.n_points},
                      {"lo_factor", ctx.cfg.sweep.lo_factor},
                      {"hi_factor", ctx.cfg.sweep.hi_factor},
                      {"t_end", ctx.cfg.sweep.t_end},
                      {"init", ctx.cfg.sweep.init},
                      {"n_particles", ctx.cfg.fv.n_particles},
                      {"dt", ctx.cfg.sim.dt},
                      {"seed", ctx.cfg.sim.seed},
                      {"missing", r.failures}};
  meta["alpha_star_empirical"] = std::isnan(r.alpha_star_empirical) ? nlohmann::json(nullptr)
                                                                    : nlohmann::json(r.alpha_star_empirical);
  ctx.emit_text("sweep_meta.json", meta.dump(2) + "\n");

  std::vector<output::VerticalMarker> marks{{r.alpha_star_spectral, "spectral"}};
  if (!std::isnan(r.alpha_star_empirical)) marks.push_back({r.alpha_star_empirical, "crossing"});
  ctx.emit_text("sweep.svg", output::svg_chart({"Stationary mass in (0,2)", "alpha", "mass_D1", true},
                                               {{"mass_D1", r.alphas, r.mass_d1}}, marks));
  for (const auto& f : r.failures) ctx.out << "missing point: " << f << '\n';
}

void cmd_basin(const Context& ctx) {
  const auto rep = experiments::basin_experiment(ctx.cfg);
  CsvTable t({"start", "reference", "alpha_factor", "alpha", "mass_D1_initial", "mass_D1_final", "tv"});
  for (const auto& r : rep.runs)
    t.add_row({r.start, r.reference, r.alpha_factor, r.alpha, r.mass_d1_initial, r.mass_d1_final, r.tv});
  ctx.emit("basin.csv", t);
}

void cmd_timechange(const Context& ctx) {
  const auto rows = experiments::timechange_check(ctx.cfg);
  CsvTable t({"engine", "alpha", "lambda", "lambda_unit", "ratio", "deviation"});
  for (const auto& r : rows) t.add_row({r.engine, r.alpha, r.lambda, r.lambda_unit, r.ratio, r.deviation});
  ctx.emit("timechange.csv", t);
}

int run(CLI::App& app, const std::function<void(CLI::App&)>& parse, std::ostream& out, std::ostream& err) {
  Flags f;
  app.require_subcommand(1);
  app.fallthrough();
  app.add_option("--config", f.config, "JSON run configuration")->check(CLI::ExistingFile);
  app.add_option("--alpha", f.alpha, "noise and drift weight alpha");
  app.add_option("--seed", f.seed, "master seed");
  app.add_option("--n-particles", f.n_particles, "Fleming-Viot particle count");
  app.add_option("--n-paths", f.n_paths, "Monte Carlo path count");
  app.add_option("--dt", f.dt, "time step");
  app.add_option("--x0", f.x0, "starting point of sde and lambda");
  app.add_option("--t-max", f.t_max, "horizon of sde and lambda");
  app.add_option("--t-end", f.t_end, "horizon of fv");
  app.add_option("--component", f.component, "D1, D2right or total");
  app.add_option("--out", f.out, "output directory");
  app.add_option("--chain", f.chain, "chain JSON file")->check(CLI::ExistingFile);
  app.add_option("--threads", f.threads, "worker count (default QSDLAB_THREADS or all cores)");
  app.add_flag("--svg", f.svg, "also write SVG charts");
  app.add_flag("--refine", f.refine, "spectral: add a grid refinement study");

  const std::vector<std::pair<const char*, const char*>> subs{
      {"chain", "QSDs, rates and Malthusian deviations of a reducible chain"},
      {"sde", "survival counts of the diffusion"},
      {"lambda", "absorption rates fitted to survival counts"},
      {"spectral", "principal eigenpairs on (0,2) and (3,5)"},
      {"fv", "Fleming-Viot particle system"},
      {"sweep", "bifurcation sweep over alpha"},
      {"basin", "basin-of-attraction runs"},
      {"timechange", "lambda2(alpha)/lambda2(1) against alpha"}};
  for (const auto& [name, desc] : subs) app.add_subcommand(name, desc);

  try {
    parse(app);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return 1;
  }

  const std::string cmd = app.get_subcommands().front()->get_name();
  struct ThreadReset {
    bool active = false;
    ~ThreadReset() {
      if (active) parallel::set_worker_count(0);
    }
  } reset;
  try {
    if (f.threads) {
      if (*f.threads == 0) throw UsageError("--threads must be positive");
      parallel::set_worker_count(*f.threads);
      reset.active = true;
    }
    Context ctx{resolve_config(f), f, {}, out};
    ctx.dir = ctx.cfg.output.dir;
    if (cmd == "chain") cmd_chain(ctx);
    else if (cmd == "sde") cmd_sde(ctx);
    else if (cmd == "lambda") cmd_lambda(ctx);
    else if (cmd == "spectral") cmd_spectral(ctx);
    else if (cmd == "fv") cmd_fv(ctx);
    else if (cmd == "sweep") cmd_sweep(ctx);
    else if (cmd == "basin") cmd_basin(ctx);
    else cmd_timechange(ctx);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const DomainError& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Quasi-stationary laws of a reducible diffusion", "qsdlab"};
  return run(
      app,
      [&](CLI::App& a) {
        std::vector<std::string> rev(args.rbegin(), args.rend());
        a.parse(rev);
      },
      out, err);
}

int run_cli(int argc, char** argv) {
  CLI::App app{"Quasi-stationary laws of a reducible diffusion", "qsdlab"};
  return run(app, [&](CLI::App& a) { a.parse(argc, argv); }, std::cout, std::cerr);
}

}  // namespace qsdlab::cli
