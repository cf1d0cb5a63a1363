#pragma once

// Exact computations for two-cluster reducible sub-stochastic chains in
// discrete time. States 0..n1-1 form D1, states n1..n1+n2-1 form D2, and the
// row deficits are the jump probabilities to the cemetery. D2 never leads
// back to D1.
//
// Measures are row vectors stored as Eigen::VectorXd.

#include <Eigen/Dense>
#include <string>
#include <string_view>
#include <vector>

namespace qsdlab::chain {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

struct ReducibleChain {
  int n1 = 0;
  int n2 = 0;
  Matrix Q;

  // Throws UsageError on bad shape, entries outside [0,1], row sums above 1
  // or a nonzero D2 -> D1 block.
  void validate() const;

  int size() const { return n1 + n2; }
  Matrix q11() const { return Q.topLeftCorner(n1, n1); }
  Matrix q12() const { return Q.topRightCorner(n1, n2); }
  Matrix q22() const { return Q.bottomRightCorner(n2, n2); }
};

ReducibleChain make_chain(int n1, int n2, const Matrix& Q);

// The two-state chain {1,2} with P(1->1)=a, P(1->2)=1-a, P(2->2)=b.
ReducibleChain two_state_chain(double a, double b);

bool is_irreducible(const Matrix& block);

// Perron data of a nonnegative irreducible block: left and right eigenvectors
// for the spectral radius, normalized so that sum(left) = 1, left.right = 1.
struct PerronPair {
  double rho = 0.0;
  Vector left;
  Vector right;
  int iterations = 0;
};

// Power iteration on (B + eps I)/(1 + eps), which is aperiodic even when B is
// periodic. Throws ReducibleBlockError when the block is reducible or has
// spectral radius 0, and NumericalError without convergence.
PerronPair perron(const Matrix& block, const std::string& name = "block");

inline constexpr double kPowerShift = 1e-3;
inline constexpr double kPowerTolerance = 1e-13;
inline constexpr int kPowerMaxIterations = 2'000'000;

// lambda_i = -log rho(Q_ii); +infinity for a nilpotent block.
struct BlockRates {
  double lambda1 = 0.0;
  double lambda2 = 0.0;
};
BlockRates block_rates(const ReducibleChain& chain);

enum class RateClass { ExponentialQSD2, ExponentialQSD1, CriticalPolynomial };

inline constexpr double kCriticalTolerance = 1e-10;

// Critical when |lambda1 - lambda2| < kCriticalTolerance, else QSD2 when
// lambda2 < lambda1 and QSD1 when lambda1 < lambda2.
RateClass rate_classify(const ReducibleChain& chain);
std::string_view rate_class_name(RateClass c);

struct QsdRecord {
  Vector distribution;
  double rate = 0.0;  // per-step rate: distribution.Q = exp(-rate) distribution
  bool support_d1 = false;
};

// Always returns nu2 (left Perron vector of Q22 padded by zero) first. Adds
// the full-support QSD when lambda1 < lambda2. When Q12 = 0 the left Perron
// vector of Q11 padded by zero is a QSD in every regime and is added too.
// Throws ReducibleBlockError naming "D1" or "D2" for a reducible block.
std::vector<QsdRecord> enumerate_qsds(const ReducibleChain& chain);

// max |nu.Q - exp(-rate) nu|.
double eigen_residual(const ReducibleChain& chain, const QsdRecord& qsd);

// (mu0 Q^n) / |mu0 Q^n|_1 with renormalization at every step. Throws
// ExtinctionError carrying the last step with positive mass.
Vector conditional_evolution(const ReducibleChain& chain, const Vector& mu0, int n);

struct SeriesResult {
  Vector values;
  int terms = 0;
  double tail_bound = 0.0;
};

// Terms used when K <= 0: enough for a geometric tail bound below this.
inline constexpr double kSeriesTolerance = 1e-12;
inline constexpr int kSeriesMaxTerms = 1'000'000;

// eta on D1 u D2 in the regime lambda2 < lambda1: eta = eta2 on D2 and
// eta(x) = sum_{k>=1} exp(lambda2 k) E_x[1{first entrance in D2 at k} eta2(X_k)]
// on D1. eta2 is the right Perron vector of Q22 with nu2.eta2 = 1, i.e. the
// limit of exp(lambda2 n) P_x(X_n != cemetery). Throws RegimeError otherwise.
SeriesResult eta_series(const ReducibleChain& chain, int K = 0);

// Unnormalized full-support QSD in the regime lambda1 < lambda2:
// nu = nu1 on D1 and nu = sum_{k>=0} exp(lambda1 (k+1)) nu1 Q12 Q22^k on D2.
// Throws RegimeError otherwise.
SeriesResult nu_series(const ReducibleChain& chain, int K = 0);

// Closed forms of the two series: (rho2 I - Q11)^-1 Q12 eta2 and
// nu1 Q12 (rho1 I - Q22)^-1.
Vector eta_eigen(const ReducibleChain& chain);
Vector nu_eigen(const ReducibleChain& chain);

// Limit profile and measure of the Malthusian behaviour in each regime:
//   QSD2:     exp(lambda2 n) P_x(X_n in .) -> eta(x) nu2
//   QSD1:     exp(lambda1 n) P_x(X_n in .) -> eta(x) nu
//   critical: exp(lambda0 n)/n P_x(X_n in .) -> eta(x) nu2
// with eta = 0 on D2 in the last two cases and, in the critical case,
// eta = eta1 (nu1 Q12 eta2) / rho on D1.
struct MalthusData {
  RateClass rate_class;
  double lambda = 0.0;
  double rho = 0.0;  // exp(-lambda)
  Vector eta;
  QsdRecord nu;
};
MalthusData malthus_data(const ReducibleChain& chain);

// (Q/rho)^n by repeated squaring; rho = exp(-lambda) gives exp(lambda n) Q^n.
Matrix scaled_power(const ReducibleChain& chain, double rho, long long n);

// sup over states x of the total variation norm sum_y |scaled P_x(X_n = y) -
// eta(x) nu(y)|. Only the component matching the regime is computed; the other
// one, and any non-finite result, is NaN.
struct Deviation {
  double dev_exponential;
  double dev_critical;
};
Deviation malthus_deviation(const ReducibleChain& chain, long long n);

// Critical chains only: the same norm with the plain exp(lambda0 n) scaling,
// which grows linearly in n.
double plain_critical_deviation(const ReducibleChain& chain, long long n);

}  // namespace qsdlab::chain
