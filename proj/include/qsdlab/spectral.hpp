#pragma once

// Finite-difference generator of the diffusion killed outside (a,b) and its
// principal eigenpair. Unknowns are the n_cells - 1 interior nodes; the
// exterior nodes carry the Dirichlet value 0.

#include <functional>
#include <string_view>
#include <vector>

namespace qsdlab::spectral {

enum class Interval { Left, Right };  // (0,2) and (3,5)

std::string_view interval_name(Interval iv);
Interval parse_interval(std::string_view name);

struct GeneratorGrid {
  double a = 0.0;
  double b = 2.0;
  int n_cells = 4096;
  double alpha = 1.0;

  // Throws UsageError for n_cells < 64 or an empty interval.
  void validate() const;
  double h() const { return (b - a) / n_cells; }
  double node(int i) const { return a + (b - a) * i / n_cells; }  // i in 1..n_cells-1
};

inline constexpr int kDefaultCells = 4096;
inline constexpr int kMinCells = 64;

GeneratorGrid make_grid(Interval iv, int n_cells = kDefaultCells, double alpha = 1.0);

// Row i of L acts as lower[i] u[i-1] + diag[i] u[i] + upper[i] u[i+1];
// lower[0] and upper[n-1] are unused and zero.
struct Tridiagonal {
  std::vector<double> lower;
  std::vector<double> diag;
  std::vector<double> upper;

  std::size_t size() const { return diag.size(); }
  std::vector<double> apply(const std::vector<double>& u) const;
  std::vector<double> apply_transpose(const std::vector<double>& v) const;
  Tridiagonal scaled(double c) const;
};

// Cells with Peclet number |b| h / sigma^2 above this use one-sided drift.
inline constexpr double kPecletLimit = 1.0;

// Discretization of (sigma^2/2) u'' + drift u' on the interior nodes of (a,b):
// central second differences, and central first differences unless the cell
// Peclet number exceeds kPecletLimit, in which case the drift is taken
// upwind. Every off-diagonal entry is then nonnegative.
Tridiagonal build_generator(double a, double b, int n_cells, const std::function<double(double)>& sigma,
                            const std::function<double(double)>& drift);
Tridiagonal build_generator(const GeneratorGrid& grid);

struct SpectralSolution {
  double lambda = 0.0;
  std::vector<double> x;             // interior nodes
  std::vector<double> density;       // left eigenvector, sum(h density) = 1
  std::vector<double> right_vector;  // right eigenvector, sum(h density eta) = 1
  double residual = 0.0;             // max |density L + lambda density|
  int iterations = 0;
  int n_cells = 0;
};

inline constexpr int kMaxIterations = 10000;

// Smallest eigenvalue lambda of -L with positive eigenvectors, by shifted
// inverse iteration. The shift stays below the Collatz-Wielandt lower bound
// for lambda, so every solve is with a nonsingular M-matrix. Throws
// NumericalError after kMaxIterations.
SpectralSolution principal_eigenpair(const Tridiagonal& L, double a, double b);
SpectralSolution solve(const GeneratorGrid& grid);
SpectralSolution solve(Interval iv, double alpha = 1.0, int n_cells = kDefaultCells);

// Principal eigenpair of the generator on the whole domain (0,5) at alpha.
// Away from the critical alpha its density is the quasi-stationary law
// reached from any start charging (0,2): nu2 below, the full-support QSD
// above. At the critical alpha the eigenvalue is double and this throws.
SpectralSolution solve_domain(double alpha, int n_cells = 5 * kDefaultCells);

struct RefinementLevel {
  int n_cells;
  double lambda;
  double residual;
};
// Solutions at n_cells, 2 n_cells, ... (levels entries).
std::vector<RefinementLevel> refinement_study(Interval iv, double alpha, int n_cells, int levels);

struct CriticalAlpha {
  double alpha_star = 0.0;
  double lambda1 = 0.0;
  double lambda2_unit = 0.0;  // lambda2 at alpha = 1
  int n_cells = 0;
  double relative_change = 0.0;  // against the previous grid
};

inline constexpr double kCriticalRefineTolerance = 1e-4;

// lambda1 / lambda2(1), doubling the grid from n_cells until two successive
// values differ by less than kCriticalRefineTolerance relative.
CriticalAlpha critical_alpha(int n_cells = kDefaultCells, int max_cells = 1 << 17);

}  // namespace qsdlab::spectral
