#pragma once

// Monte Carlo paths of the absorbed diffusion. Path i at step k uses the
// noise rng::diffusion_noise(seed, k, i) and its start is drawn from the
// InitialLaw domain with counter i, so every result is a pure function of
// (config, path index) whatever the worker count.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "qsdlab/kernels.hpp"
#include "qsdlab/measure.hpp"
#include "qsdlab/model.hpp"

namespace qsdlab::diffusion {

struct SimConfig {
  double alpha = 1.0;
  double dt = 1e-3;
  double t_max = 20.0;
  std::uint64_t seed = 1;
  std::size_t n_paths = 10000;

  // Throws UsageError unless dt in (0, 0.1], t_max >= 0, n_paths >= 1, and
  // DomainError unless alpha > 0.
  void validate() const;
  // Number of steps to reach time t (rounded to the nearest step).
  std::uint64_t steps(double t) const;
  kernels::StepParams step_params() const { return {alpha, dt}; }
};

// Finite mixture of Dirac masses and uniform laws inside (0,5).
class InitialLaw {
 public:
  struct Component {
    double weight;
    double lo;
    double hi;  // lo == hi is a Dirac mass
  };

  static InitialLaw dirac(double x);
  static InitialLaw uniform(double lo, double hi);
  // Terms joined by '+', each "[w*]dirac:x" or "[w*]uniform:a:b", e.g.
  // "0.01*uniform:0:2+0.99*dirac:4". Throws UsageError.
  static InitialLaw parse(std::string_view spec);

  std::string describe() const;
  const std::vector<Component>& components() const { return parts_; }
  double mass_d1() const;

  // Draw number `index`; uniform parts never return their endpoints.
  double sample(std::uint64_t seed, std::uint64_t index) const;

 private:
  std::vector<Component> parts_;
};

struct TrajectoryRecord {
  kernels::Status status = kernels::Status::Alive;
  double position = 0.0;  // boundary hit when absorbed
  double time = 0.0;      // absorption time, or t_max when alive
  // Region every `history_stride` steps from time 0, then Absorbed if killed.
  std::vector<model::Region> region_history;
};

// Follows path `path` (noise stream) from x0 until absorption or t_max.
TrajectoryRecord simulate_trajectory(double x0, const SimConfig& cfg, std::uint32_t path = 0,
                                     std::uint64_t history_stride = 1);

struct SurvivalCurve {
  std::vector<double> times;
  std::vector<std::uint64_t> n_d1;
  std::vector<std::uint64_t> n_d2right;
  std::vector<std::uint64_t> n_total;
  std::size_t n_paths = 0;
};

// Counts of the cfg.n_paths paths in (0,2), [3,5) and (0,5) at each time of
// an increasing grid inside [0, t_max].
SurvivalCurve survival_curve(const InitialLaw& law, const SimConfig& cfg, std::span<const double> times);
SurvivalCurve survival_curve(double x0, const SimConfig& cfg, std::span<const double> times);

// 0, step, 2 step, ... up to t_max.
std::vector<double> uniform_time_grid(double t_max, double step);

enum class Component { D1, D2Right, Total };
Component parse_component(std::string_view name);
std::string_view component_name(Component c);

struct LambdaEstimate {
  double lambda = 0.0;
  double std_error = 0.0;
  double window_lo = 0.0;
  double window_hi = 0.0;
  std::size_t points = 0;
  double r_squared = 0.0;
};

// Survival fraction window used when none is given.
inline constexpr double kWindowHigh = 0.5;
inline constexpr double kWindowLow = 0.01;

// Least-squares slope of -log(count/n_paths) against t. Without a window the
// largest interval with survival fraction in [0.01, 0.5] is used. Throws
// EstimationError on an empty window or a zero count inside it.
LambdaEstimate lambda_from_survival(const SurvivalCurve& curve, Component component,
                                    std::optional<std::pair<double, double>> window = std::nullopt);

struct RejectionSample {
  measure::EmpiricalMeasure measure;
  std::uint64_t survivors = 0;
};

inline constexpr std::uint64_t kMinRejectionSurvivors = 100;

// Histogram of X_t over the paths still alive at t. Throws EstimationError
// when fewer than 100 survive.
RejectionSample sample_conditional_rejection(const InitialLaw& law, const SimConfig& cfg, double t,
                                             measure::BinGrid grid = {});

}  // namespace qsdlab::diffusion
