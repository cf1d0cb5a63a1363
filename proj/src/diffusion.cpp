#include "qsdlab/diffusion.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <functional>
#include <sstream>

#include "qsdlab/error.hpp"
#include "qsdlab/parallel.hpp"
#include "qsdlab/rng.hpp"

namespace qsdlab::diffusion {

using kernels::Status;

namespace {

// Paths per work item. Fixed, so that chunking never depends on workers.
constexpr std::size_t kChunk = 4096;

double parse_number(std::string_view s, std::string_view context) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw UsageError("bad number '" + std::string(s) + "' in initial law '" + std::string(context) + "'");
  }
  return v;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t pos = s.find(sep, start);
    out.push_back(s.substr(start, pos - start));
    if (pos == std::string_view::npos) return out;
    start = pos + 1;
  }
}

void check_component(const InitialLaw::Component& c) {
  if (!(c.weight > 0.0)) throw UsageError("initial law weights must be positive");
  if (c.lo == c.hi) {
    if (!(c.lo > model::kDomainLo && c.lo < model::kDomainHi)) {
      throw UsageError("Dirac initial position must lie in (0,5)");
    }
  } else if (!(c.lo >= model::kDomainLo && c.hi <= model::kDomainHi && c.lo < c.hi)) {
    throw UsageError("uniform initial law needs 0 <= a < b <= 5");
  }
}

// Runs paths [first, first + count) and calls visit(k, alive positions) at
// each step in record_steps (sorted).
void propagate_chunk(const InitialLaw& law, const SimConfig& cfg, std::uint64_t first, std::size_t count,
                     std::span<const std::uint64_t> record_steps,
                     const std::function<void(std::size_t, std::span<const double>)>& visit) {
  std::vector<double> pos(count);
  std::vector<std::uint32_t> ids(count);
  std::vector<Status> status(count);
  std::vector<double> spare(count);
  for (std::size_t j = 0; j < count; ++j) {
    ids[j] = static_cast<std::uint32_t>(first + j);
    pos[j] = law.sample(cfg.seed, first + j);
  }
  const kernels::AdvanceFn advance = kernels::advance();
  const kernels::StepParams params = cfg.step_params();
  std::size_t alive = count;
  std::size_t next_record = 0;
  std::uint64_t step = 0;
  while (next_record < record_steps.size()) {
    while (next_record < record_steps.size() && record_steps[next_record] == step) {
      visit(next_record++, std::span<const double>(pos.data(), alive));
    }
    if (next_record == record_steps.size()) break;
    if (alive == 0) {
      while (next_record < record_steps.size()) visit(next_record++, {});
      break;
    }
    advance(std::span(pos.data(), alive), std::span(ids.data(), alive), std::span(status.data(), alive),
            std::span(spare.data(), alive), params, {cfg.seed, step});
    std::size_t w = 0;
    for (std::size_t j = 0; j < alive; ++j) {
      if (status[j] != Status::Alive) continue;
      pos[w] = pos[j];
      ids[w] = ids[j];
      spare[w] = spare[j];
      ++w;
    }
    alive = w;
    ++step;
  }
}

void for_each_chunk(std::size_t n_paths, const std::function<void(std::size_t, std::uint64_t, std::size_t)>& fn) {
  const std::size_t chunks = (n_paths + kChunk - 1) / kChunk;
  parallel::for_each_index(chunks, [&](std::size_t c) {
    const std::uint64_t first = c * kChunk;
    fn(c, first, std::min(kChunk, n_paths - c * kChunk));
  });
}

}  // namespace

void SimConfig::validate() const {
  model::ModelParams{alpha}.validate();
  if (!(dt > 0.0 && dt <= 0.1)) throw UsageError("dt must lie in (0, 0.1]");
  if (!(t_max >= 0.0) || !std::isfinite(t_max)) throw UsageError("t_max must be nonnegative");
  if (n_paths < 1) throw UsageError("n_paths must be at least 1");
  if (n_paths > 0xFFFFFFFFull) throw UsageError("n_paths exceeds the 32-bit stream space");
}

std::uint64_t SimConfig::steps(double t) const {
  if (!(t >= 0.0)) throw UsageError("time must be nonnegative");
  return static_cast<std::uint64_t>(std::llround(t / dt));
}

InitialLaw InitialLaw::dirac(double x) {
  InitialLaw law;
  law.parts_.push_back({1.0, x, x});
  check_component(law.parts_.back());
  return law;
}

InitialLaw InitialLaw::uniform(double lo, double hi) {
  InitialLaw law;
  law.parts_.push_back({1.0, lo, hi});
  check_component(law.parts_.back());
  return law;
}

InitialLaw InitialLaw::parse(std::string_view spec) {
  InitialLaw law;
  double total = 0.0;
  for (std::string_view term : split(spec, '+')) {
    double weight = 1.0;
    if (const auto star = term.find('*'); star != std::string_view::npos) {
      weight = parse_number(term.substr(0, star), spec);
      term = term.substr(star + 1);
    }
    const auto fields = split(term, ':');
    InitialLaw::Component c{weight, 0.0, 0.0};
    if (fields[0] == "dirac" && fields.size() == 2) {
      c.lo = c.hi = parse_number(fields[1], spec);
    } else if (fields[0] == "uniform" && fields.size() == 3) {
      c.lo = parse_number(fields[1], spec);
      c.hi = parse_number(fields[2], spec);
      if (c.lo == c.hi) throw UsageError("uniform initial law needs a < b");
    } else {
      throw UsageError("cannot parse initial law term '" + std::string(term) + "'");
    }
    check_component(c);
    total += weight;
    law.parts_.push_back(c);
  }
  if (std::abs(total - 1.0) > 1e-9) throw UsageError("initial law weights must sum to 1");
  return law;
}

std::string InitialLaw::describe() const {
  std::ostringstream out;
  out.precision(17);
  for (std::size_t i = 0; i < parts_.size(); ++i) {
    const auto& c = parts_[i];
    if (i > 0) out << '+';
    if (parts_.size() > 1) out << c.weight << '*';
    if (c.lo == c.hi) {
      out << "dirac:" << c.lo;
    } else {
      out << "uniform:" << c.lo << ':' << c.hi;
    }
  }
  return out.str();
}

double InitialLaw::mass_d1() const {
  double m = 0.0;
  for (const auto& c : parts_) {
    if (c.lo == c.hi) {
      m += c.lo < 2.0 ? c.weight : 0.0;
    } else {
      m += c.weight * std::clamp((2.0 - c.lo) / (c.hi - c.lo), 0.0, 1.0);
    }
  }
  return m;
}

double InitialLaw::sample(std::uint64_t seed, std::uint64_t index) const {
  const auto w = rng::philox_words({seed, index, 0, rng::Domain::InitialLaw});
  const Component* pick = &parts_.back();
  if (parts_.size() > 1) {
    const double u = rng::one_to_two(w[0], w[1]) - 1.0;
    double acc = 0.0;
    for (const auto& c : parts_) {
      acc += c.weight;
      if (u < acc) {
        pick = &c;
        break;
      }
    }
  }
  if (pick->lo == pick->hi) return pick->lo;
  // Midpoint of one of 2^52 equal cells: strictly inside (0,1).
  const double u = (rng::one_to_two(w[2], w[3]) - 1.0) + 0x1p-53;
  return pick->lo + (pick->hi - pick->lo) * u;
}

TrajectoryRecord simulate_trajectory(double x0, const SimConfig& cfg, std::uint32_t path,
                                     std::uint64_t history_stride) {
  cfg.validate();
  if (!(x0 > model::kDomainLo && x0 < model::kDomainHi)) throw DomainError("x0 must lie in (0,5)");
  TrajectoryRecord rec;
  const std::uint64_t n_steps = cfg.steps(cfg.t_max);
  const kernels::StepParams params = cfg.step_params();
  double x = x0;
  for (std::uint64_t k = 0; k < n_steps; ++k) {
    if (history_stride > 0 && k % history_stride == 0) rec.region_history.push_back(model::classify(x));
    const kernels::StepOutcome out = kernels::step_position(x, params, rng::diffusion_noise(cfg.seed, k, path));
    x = out.position;
    if (out.status != Status::Alive) {
      rec.status = out.status;
      rec.position = x;
      rec.time = static_cast<double>(k + 1) * cfg.dt;
      if (history_stride > 0) rec.region_history.push_back(model::Region::Absorbed);
      return rec;
    }
  }
  if (history_stride > 0 && n_steps % history_stride == 0) rec.region_history.push_back(model::classify(x));
  rec.position = x;
  rec.time = static_cast<double>(n_steps) * cfg.dt;
  return rec;
}

std::vector<double> uniform_time_grid(double t_max, double step) {
  if (!(step > 0.0)) throw UsageError("grid step must be positive");
  std::vector<double> out;
  const auto n = static_cast<std::size_t>(std::floor(t_max / step + 1e-9));
  for (std::size_t i = 0; i <= n; ++i) out.push_back(static_cast<double>(i) * step);
  return out;
}

SurvivalCurve survival_curve(const InitialLaw& law, const SimConfig& cfg, std::span<const double> times) {
  cfg.validate();
  std::vector<std::uint64_t> steps;
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (!(times[i] >= 0.0 && times[i] <= cfg.t_max + 1e-12)) throw UsageError("time grid must lie in [0, t_max]");
    if (i > 0 && !(times[i] > times[i - 1])) throw UsageError("time grid must be increasing");
    steps.push_back(cfg.steps(times[i]));
    if (i > 0 && steps[i] == steps[i - 1]) throw UsageError("time grid finer than dt");
  }
  const std::size_t chunks = (cfg.n_paths + kChunk - 1) / kChunk;
  std::vector<std::vector<std::uint64_t>> d1(chunks, std::vector<std::uint64_t>(times.size()));
  auto d2 = d1;
  auto total = d1;
  for_each_chunk(cfg.n_paths, [&](std::size_t c, std::uint64_t first, std::size_t count) {
    propagate_chunk(law, cfg, first, count, steps, [&](std::size_t k, std::span<const double> xs) {
      std::uint64_t a = 0;
      std::uint64_t b = 0;
      for (double x : xs) {
        a += x < 2.0;
        b += x >= 3.0;
      }
      d1[c][k] = a;
      d2[c][k] = b;
      total[c][k] = xs.size();
    });
  });
  SurvivalCurve out;
  out.times.assign(times.begin(), times.end());
  out.n_paths = cfg.n_paths;
  out.n_d1.assign(times.size(), 0);
  out.n_d2right.assign(times.size(), 0);
  out.n_total.assign(times.size(), 0);
  for (std::size_t c = 0; c < chunks; ++c) {
    for (std::size_t k = 0; k < times.size(); ++k) {
      out.n_d1[k] += d1[c][k];
      out.n_d2right[k] += d2[c][k];
      out.n_total[k] += total[c][k];
    }
  }
  return out;
}

SurvivalCurve survival_curve(double x0, const SimConfig& cfg, std::span<const double> times) {
  return survival_curve(InitialLaw::dirac(x0), cfg, times);
}

Component parse_component(std::string_view name) {
  if (name == "D1") return Component::D1;
  if (name == "D2right") return Component::D2Right;
  if (name == "total") return Component::Total;
  throw UsageError("unknown component '" + std::string(name) + "' (D1, D2right, total)");
}

std::string_view component_name(Component c) {
  switch (c) {
    case Component::D1:
      return "D1";
    case Component::D2Right:
      return "D2right";
    case Component::Total:
      return "total";
  }
  return "?";
}

LambdaEstimate lambda_from_survival(const SurvivalCurve& curve, Component component,
                                    std::optional<std::pair<double, double>> window) {
  const auto& counts = component == Component::D1        ? curve.n_d1
                       : component == Component::D2Right ? curve.n_d2right
                                                         : curve.n_total;
  if (curve.n_paths == 0 || counts.size() != curve.times.size()) throw EstimationError("empty survival curve");
  const double n = static_cast<double>(curve.n_paths);
  std::size_t lo = 0;
  std::size_t hi = 0;  // exclusive
  if (window) {
    while (lo < curve.times.size() && curve.times[lo] < window->first) ++lo;
    hi = lo;
    while (hi < curve.times.size() && curve.times[hi] <= window->second) ++hi;
  } else {
    while (lo < counts.size() && counts[lo] / n > kWindowHigh) ++lo;
    hi = counts.size();
    while (hi > lo && counts[hi - 1] / n < kWindowLow) --hi;
  }
  if (hi < lo + 3) throw EstimationError("fit window holds fewer than 3 grid points");
  double st = 0.0;
  double sy = 0.0;
  for (std::size_t i = lo; i < hi; ++i) {
    if (counts[i] == 0) throw EstimationError("zero survivors inside the fit window");
    st += curve.times[i];
    sy += -std::log(counts[i] / n);
  }
  const double m = static_cast<double>(hi - lo);
  const double tbar = st / m;
  const double ybar = sy / m;
  double sxx = 0.0;
  double sxy = 0.0;
  double syy = 0.0;
  for (std::size_t i = lo; i < hi; ++i) {
    const double dt = curve.times[i] - tbar;
    const double dy = -std::log(counts[i] / n) - ybar;
    sxx += dt * dt;
    sxy += dt * dy;
    syy += dy * dy;
  }
  LambdaEstimate est;
  est.lambda = sxy / sxx;
  const double ssr = std::max(0.0, syy - est.lambda * sxy);
  est.std_error = std::sqrt(ssr / (m - 2.0) / sxx);
  est.r_squared = syy > 0.0 ? 1.0 - ssr / syy : 1.0;
  est.window_lo = curve.times[lo];
  est.window_hi = curve.times[hi - 1];
  est.points = hi - lo;
  return est;
}

RejectionSample sample_conditional_rejection(const InitialLaw& law, const SimConfig& cfg, double t,
                                             measure::BinGrid grid) {
  cfg.validate();
  if (!(t >= 0.0 && t <= cfg.t_max + 1e-12)) throw UsageError("rejection time must lie in [0, t_max]");
  const std::uint64_t steps[] = {cfg.steps(t)};
  const std::size_t chunks = (cfg.n_paths + kChunk - 1) / kChunk;
  std::vector<measure::Histogram> parts(chunks, measure::Histogram(grid));
  for_each_chunk(cfg.n_paths, [&](std::size_t c, std::uint64_t first, std::size_t count) {
    propagate_chunk(law, cfg, first, count, steps,
                    [&](std::size_t, std::span<const double> xs) { parts[c].add_all(xs); });
  });
  measure::Histogram all(grid);
  for (const auto& h : parts) all.merge(h);
  const std::uint64_t survivors = all.total();
  if (survivors < kMinRejectionSurvivors) {
    throw EstimationError("rejection oracle kept only " + std::to_string(survivors) + " survivors");
  }
  return {all.measure(), survivors};
}

}  // namespace qsdlab::diffusion
