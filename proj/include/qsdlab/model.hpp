#pragma once

// Coefficients of the absorbed diffusion on D = (0,5):
//
//   dX = (phi1(X) + sqrt(alpha) phi2(X)) dB + (psi1(X) + alpha psi2(X)) dt,
//
// killed at {0,5}. The diffusion vanishes on [2,3] and the drift is positive
// there, so [3,5) is absorbing for the non-killed dynamics.

#include <array>
#include <string_view>

namespace qsdlab::model {

inline constexpr double kDomainLo = 0.0;
inline constexpr double kDomainHi = 5.0;

enum class CoefficientShape { QuadraticCanonical };

// Parses the `model.shape` config value. Throws UsageError on unknown names.
CoefficientShape parse_shape(std::string_view name);
std::string_view shape_name(CoefficientShape shape);

struct Coefficients {
  double phi1;
  double phi2;
  double psi1;
  double psi2;
};

// Piecewise coefficient family. Only the canonical quadratic shape exists:
// phi1 = (2-x)^2 on [1,2], phi2 = (x-3)^2 on [3,4], psi1 = (3-x)^2 on (2,3),
// psi2 = 1 - psi1, constants elsewhere.
struct CoefficientSet {
  std::array<double, 6> breakpoints{0.0, 1.0, 2.0, 3.0, 4.0, 5.0};
  CoefficientShape shape = CoefficientShape::QuadraticCanonical;

  // Throws DomainError unless 0 < x < 5.
  Coefficients eval(double x) const;
};

struct ModelParams {
  double alpha = 1.0;

  // Throws DomainError unless alpha > 0 and finite.
  void validate() const;
};

enum class Region { D1, Transit, D2Right, Absorbed };

// D1 = (0,2), Transit = [2,3), D2Right = [3,5), Absorbed otherwise.
constexpr Region classify(double x) noexcept {
  if (!(x > kDomainLo) || !(x < kDomainHi)) return Region::Absorbed;
  if (x < 2.0) return Region::D1;
  if (x < 3.0) return Region::Transit;
  return Region::D2Right;
}

std::string_view region_name(Region r);

Coefficients eval_coefficients(double x);

// psi1(x) + alpha psi2(x).
double drift(double x, double alpha);

// phi1(x) + sqrt(alpha) phi2(x). Zero exactly on [2,3].
double sigma(double x, double alpha);

// Time for the deterministic flow on [2,3] to travel from x to 3, from the
// closed-form integral of 1/drift. Requires 2 <= x <= 3.
double transit_time_t3(double x, double alpha);

// Fixed step used by ode_flow.
inline constexpr double kOdeStep = 1e-4;

// Flow of x' = drift(x, alpha) started at x in [2,3], integrated with RK4 at
// step <= kOdeStep and capped at 3 once reached.
double ode_flow(double x, double alpha, double t);

// Closed-form flow of the same ODE (tan/tanh of the t3 integral), capped at 3.
// Agrees with ode_flow to RK4 accuracy and costs a few library calls.
double transit_flow(double x, double alpha, double t);

}  // namespace qsdlab::model
