#include "qsdlab/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "qsdlab/error.hpp"
#include "qsdlab/model.hpp"

namespace qsdlab::spectral {

namespace {

constexpr double kShiftMargin = 1e-3;
constexpr double kVectorTolerance = 1e-12;
// The Rayleigh quotient carries rounding noise of order eps |L| / lambda,
// about 1e-11 relative at 16k cells; convergence is judged on the vectors.
constexpr double kLambdaTolerance = 1e-9;
// The shift is frozen once the iterates settle, so rounding noise in the
// bound does not keep perturbing the iteration.
constexpr double kFreezeShift = 1e-8;

// Solves (-L - s I) u = f by the Thomas algorithm; transpose swaps the bands.
std::vector<double> shifted_solve(const Tridiagonal& L, double s, const std::vector<double>& f, bool transpose) {
  const std::size_t n = L.size();
  const auto& sub = transpose ? L.upper : L.lower;  // coefficient of u[i-1]
  const auto& sup = transpose ? L.lower : L.upper;  // coefficient of u[i+1]
  std::vector<double> c(n);
  std::vector<double> d(n);
  // Row i of -L - sI: -sub[i], -diag[i] - s, -sup[i] (transposed bands shift by one).
  auto a_at = [&](std::size_t i) { return transpose ? -sub[i - 1] : -sub[i]; };
  auto c_at = [&](std::size_t i) { return transpose ? -sup[i + 1] : -sup[i]; };
  double pivot = -L.diag[0] - s;
  c[0] = n > 1 ? c_at(0) / pivot : 0.0;
  d[0] = f[0] / pivot;
  for (std::size_t i = 1; i < n; ++i) {
    const double ai = a_at(i);
    pivot = (-L.diag[i] - s) - ai * c[i - 1];
    if (!(pivot > 0.0)) throw NumericalError("shifted generator lost its M-matrix structure");
    c[i] = i + 1 < n ? c_at(i) / pivot : 0.0;
    d[i] = (f[i] - ai * d[i - 1]) / pivot;
  }
  std::vector<double> u(n);
  u[n - 1] = d[n - 1];
  for (std::size_t i = n - 1; i-- > 0;) u[i] = d[i] - c[i] * u[i + 1];
  return u;
}

double normalize_max(std::vector<double>& v) {
  const double m = *std::max_element(v.begin(), v.end());
  for (double& e : v) e /= m;
  return m;
}

double max_change(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

}  // namespace

std::string_view interval_name(Interval iv) { return iv == Interval::Left ? "(0,2)" : "(3,5)"; }

Interval parse_interval(std::string_view name) {
  if (name == "(0,2)" || name == "left" || name == "D1") return Interval::Left;
  if (name == "(3,5)" || name == "right" || name == "D2right") return Interval::Right;
  throw UsageError("unknown interval '" + std::string(name) + "'");
}

void GeneratorGrid::validate() const {
  if (n_cells < kMinCells) throw UsageError("n_cells must be at least 64");
  if (!(b > a)) throw UsageError("empty interval");
  model::ModelParams{alpha}.validate();
}

GeneratorGrid make_grid(Interval iv, int n_cells, double alpha) {
  GeneratorGrid g{iv == Interval::Left ? 0.0 : 3.0, iv == Interval::Left ? 2.0 : 5.0, n_cells, alpha};
  g.validate();
  return g;
}

std::vector<double> Tridiagonal::apply(const std::vector<double>& u) const {
  const std::size_t n = size();
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    double s = diag[i] * u[i];
    if (i > 0) s += lower[i] * u[i - 1];
    if (i + 1 < n) s += upper[i] * u[i + 1];
    out[i] = s;
  }
  return out;
}

std::vector<double> Tridiagonal::apply_transpose(const std::vector<double>& v) const {
  const std::size_t n = size();
  std::vector<double> out(n);
  for (std::size_t j = 0; j < n; ++j) {
    double s = diag[j] * v[j];
    if (j > 0) s += upper[j - 1] * v[j - 1];
    if (j + 1 < n) s += lower[j + 1] * v[j + 1];
    out[j] = s;
  }
  return out;
}

Tridiagonal Tridiagonal::scaled(double c) const {
  Tridiagonal t = *this;
  for (auto* band : {&t.lower, &t.diag, &t.upper}) {
    for (double& e : *band) e *= c;
  }
  return t;
}

Tridiagonal build_generator(double a, double b, int n_cells, const std::function<double(double)>& sigma,
                            const std::function<double(double)>& drift) {
  if (n_cells < 2 || !(b > a)) throw UsageError("generator needs n_cells >= 2 and a < b");
  const std::size_t n = static_cast<std::size_t>(n_cells - 1);
  const double h = (b - a) / n_cells;
  Tridiagonal L{std::vector<double>(n, 0.0), std::vector<double>(n, 0.0), std::vector<double>(n, 0.0)};
  for (std::size_t k = 0; k < n; ++k) {
    const double x = a + (b - a) * static_cast<double>(k + 1) / n_cells;
    const double s = sigma(x);
    const double s2 = s * s;
    const double v = drift(x);
    const double diff = s2 / (2.0 * h * h);
    double lo = diff;
    double up = diff;
    double di = -2.0 * diff;
    if (s2 == 0.0 || std::abs(v) * h > kPecletLimit * s2) {
      if (v > 0.0) {
        up += v / h;
        di -= v / h;
      } else {
        lo -= v / h;
        di += v / h;
      }
    } else {
      up += v / (2.0 * h);
      lo -= v / (2.0 * h);
    }
    L.lower[k] = k > 0 ? lo : 0.0;
    L.upper[k] = k + 1 < n ? up : 0.0;
    L.diag[k] = di;
  }
  return L;
}

Tridiagonal build_generator(const GeneratorGrid& grid) {
  grid.validate();
  const double alpha = grid.alpha;
  return build_generator(
      grid.a, grid.b, grid.n_cells, [alpha](double x) { return model::sigma(x, alpha); },
      [alpha](double x) { return model::drift(x, alpha); });
}

SpectralSolution principal_eigenpair(const Tridiagonal& L, double a, double b) {
  const std::size_t n = L.size();
  if (n < 2) throw UsageError("eigenproblem needs at least two unknowns");
  const double h = (b - a) / static_cast<double>(n + 1);
  std::vector<double> r(n, 1.0);
  std::vector<double> l(n, 1.0);
  double shift = 0.0;
  double lambda = 0.0;
  int it = 0;
  for (;;) {
    if (++it > kMaxIterations) {
      const auto ar = L.apply(r);
      double res = 0.0;
      for (std::size_t i = 0; i < n; ++i) res = std::max(res, std::abs(ar[i] + lambda * r[i]));
      throw NumericalError("inverse iteration did not converge, residual " + std::to_string(res));
    }
    auto r_new = shifted_solve(L, shift, r, false);
    auto l_new = shifted_solve(L, shift, l, true);
    normalize_max(r_new);
    normalize_max(l_new);
    const double change = std::max(max_change(r_new, r), max_change(l_new, l));
    r = std::move(r_new);
    l = std::move(l_new);

    // -L r: its ratios to r bracket lambda (Collatz-Wielandt).
    const auto lr = L.apply(r);
    double lower_bound = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
      if (r[i] > 0.0) lower_bound = std::min(lower_bound, -lr[i] / r[i]);
    }
    const double next_lambda = -dot(l, lr) / dot(l, r);
    const bool settled = std::abs(next_lambda - lambda) <= kLambdaTolerance * std::abs(next_lambda);
    lambda = next_lambda;
    if (change < kVectorTolerance && settled) break;
    if (change > kFreezeShift && lower_bound > 0.0 && std::isfinite(lower_bound)) {
      shift = std::max(shift, (1.0 - kShiftMargin) * std::min(lower_bound, lambda));
    }
  }

  SpectralSolution sol;
  sol.iterations = it;
  sol.n_cells = static_cast<int>(n + 1);
  sol.x.resize(n);
  for (std::size_t i = 0; i < n; ++i) sol.x[i] = a + (b - a) * static_cast<double>(i + 1) / (n + 1);
  const double mass = h * std::accumulate(l.begin(), l.end(), 0.0);
  sol.density = l;
  for (double& d : sol.density) d /= mass;
  const double pairing = h * dot(sol.density, r);
  sol.right_vector = r;
  for (double& e : sol.right_vector) e /= pairing;
  const auto lr = L.apply(sol.right_vector);
  sol.lambda = -dot(sol.density, lr) / dot(sol.density, sol.right_vector);
  const auto dl = L.apply_transpose(sol.density);
  for (std::size_t i = 0; i < n; ++i) {
    sol.residual = std::max(sol.residual, std::abs(dl[i] + sol.lambda * sol.density[i]));
  }
  return sol;
}

SpectralSolution solve(const GeneratorGrid& grid) {
  return principal_eigenpair(build_generator(grid), grid.a, grid.b);
}

SpectralSolution solve(Interval iv, double alpha, int n_cells) { return solve(make_grid(iv, n_cells, alpha)); }

SpectralSolution solve_domain(double alpha, int n_cells) {
  GeneratorGrid g{model::kDomainLo, model::kDomainHi, n_cells, alpha};
  g.validate();
  return solve(g);
}

std::vector<RefinementLevel> refinement_study(Interval iv, double alpha, int n_cells, int levels) {
  if (levels < 1) throw UsageError("refinement needs at least one level");
  std::vector<RefinementLevel> out;
  for (int k = 0; k < levels; ++k, n_cells *= 2) {
    const SpectralSolution s = solve(iv, alpha, n_cells);
    out.push_back({n_cells, s.lambda, s.residual});
  }
  return out;
}

CriticalAlpha critical_alpha(int n_cells, int max_cells) {
  CriticalAlpha prev;
  for (; n_cells <= max_cells; n_cells *= 2) {
    CriticalAlpha cur;
    cur.n_cells = n_cells;
    cur.lambda1 = solve(Interval::Left, 1.0, n_cells).lambda;
    cur.lambda2_unit = solve(Interval::Right, 1.0, n_cells).lambda;
    cur.alpha_star = cur.lambda1 / cur.lambda2_unit;
    if (prev.n_cells > 0) {
      cur.relative_change = std::abs(cur.alpha_star - prev.alpha_star) / cur.alpha_star;
      if (cur.relative_change < kCriticalRefineTolerance) return cur;
    }
    prev = cur;
  }
  throw NumericalError("critical alpha did not settle under grid refinement");
}

}  // namespace qsdlab::spectral
