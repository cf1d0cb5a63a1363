#include "qsdlab/model.hpp"

#include <cmath>
#include <string>

#include "qsdlab/error.hpp"

namespace qsdlab::model {

namespace {

void require_open_domain(double x) {
  if (!(x > kDomainLo && x < kDomainHi)) {
    throw DomainError("position " + std::to_string(x) + " outside (0,5)");
  }
}

void require_alpha(double alpha) {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) {
    throw DomainError("alpha must be positive, got " + std::to_string(alpha));
  }
}

double sq(double v) { return v * v; }

// |1 - alpha| below this uses the linear (alpha = 1) branch of t3.
constexpr double kUnitAlphaBand = 1e-12;

}  // namespace

CoefficientShape parse_shape(std::string_view name) {
  if (name == "quadratic-canonical") return CoefficientShape::QuadraticCanonical;
  throw UsageError("unknown model.shape '" + std::string(name) + "'");
}

std::string_view shape_name(CoefficientShape shape) {
  switch (shape) {
    case CoefficientShape::QuadraticCanonical:
      return "quadratic-canonical";
  }
  return "?";
}

std::string_view region_name(Region r) {
  switch (r) {
    case Region::D1:
      return "D1";
    case Region::Transit:
      return "Transit";
    case Region::D2Right:
      return "D2right";
    case Region::Absorbed:
      return "Absorbed";
  }
  return "?";
}

Coefficients CoefficientSet::eval(double x) const {
  require_open_domain(x);
  Coefficients c{};
  c.phi1 = x <= 1.0 ? 1.0 : (x < 2.0 ? sq(2.0 - x) : 0.0);
  c.phi2 = x <= 3.0 ? 0.0 : (x < 4.0 ? sq(x - 3.0) : 1.0);
  c.psi1 = x <= 2.0 ? 1.0 : (x < 3.0 ? sq(3.0 - x) : 0.0);
  c.psi2 = 1.0 - c.psi1;
  return c;
}

void ModelParams::validate() const { require_alpha(alpha); }

Coefficients eval_coefficients(double x) { return CoefficientSet{}.eval(x); }

double drift(double x, double alpha) {
  require_alpha(alpha);
  const Coefficients c = eval_coefficients(x);
  return c.psi1 + alpha * c.psi2;
}

double sigma(double x, double alpha) {
  require_alpha(alpha);
  const Coefficients c = eval_coefficients(x);
  return c.phi1 + std::sqrt(alpha) * c.phi2;
}

double transit_time_t3(double x, double alpha) {
  require_alpha(alpha);
  if (!(x >= 2.0 && x <= 3.0)) {
    throw DomainError("transit_time_t3 needs x in [2,3], got " + std::to_string(x));
  }
  // drift = alpha + (1 - alpha) u^2 with u = 3 - x.
  const double u = 3.0 - x;
  const double c = 1.0 - alpha;
  if (std::abs(c) < kUnitAlphaBand) return u / alpha;
  if (c > 0.0) {
    const double r = std::sqrt(alpha * c);
    return std::atan(u * std::sqrt(c / alpha)) / r;
  }
  const double k = -c;
  const double r = std::sqrt(alpha * k);
  return std::atanh(u * std::sqrt(k / alpha)) / r;
}

double transit_flow(double x, double alpha, double t) {
  const double u0 = 3.0 - x;
  const double c = 1.0 - alpha;
  double u = 0.0;
  if (std::abs(c) < kUnitAlphaBand) {
    u = u0 - alpha * t;
  } else if (c > 0.0) {
    const double s = std::sqrt(c / alpha);
    const double theta = std::atan(u0 * s) - std::sqrt(alpha * c) * t;
    u = theta > 0.0 ? std::tan(theta) / s : 0.0;
  } else {
    const double s = std::sqrt(-c / alpha);
    const double theta = std::atanh(u0 * s) - std::sqrt(-alpha * c) * t;
    u = theta > 0.0 ? std::tanh(theta) / s : 0.0;
  }
  return u > 0.0 ? 3.0 - u : 3.0;
}

double ode_flow(double x, double alpha, double t) {
  require_alpha(alpha);
  if (!(x >= 2.0 && x <= 3.0)) {
    throw DomainError("ode_flow needs x in [2,3], got " + std::to_string(x));
  }
  if (!(t >= 0.0)) throw DomainError("ode_flow needs t >= 0");
  if (t == 0.0 || x >= 3.0) return x >= 3.0 ? 3.0 : x;

  // The flow never leaves [2,3] before hitting 3, so the drift can be written
  // on [2,3] directly; beyond 3 it is the constant alpha.
  const auto f = [alpha](double y) {
    if (y >= 3.0) return alpha;
    const double u = sq(3.0 - y);
    return u + alpha * (1.0 - u);
  };
  const auto n = static_cast<long long>(std::ceil(t / kOdeStep));
  const double h = t / static_cast<double>(n);
  double y = x;
  for (long long i = 0; i < n; ++i) {
    const double k1 = f(y);
    const double k2 = f(y + 0.5 * h * k1);
    const double k3 = f(y + 0.5 * h * k2);
    const double k4 = f(y + h * k3);
    y += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (y >= 3.0) return 3.0;
  }
  return y;
}

}  // namespace qsdlab::model
