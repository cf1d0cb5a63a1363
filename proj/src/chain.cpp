#include "qsdlab/chain.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "qsdlab/error.hpp"

namespace qsdlab::chain {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kEntrySlack = 1e-12;

std::vector<bool> reachable_from(const Matrix& b, int start, bool transposed) {
  const int n = static_cast<int>(b.rows());
  std::vector<bool> seen(n, false);
  std::vector<int> stack{start};
  seen[start] = true;
  while (!stack.empty()) {
    const int i = stack.back();
    stack.pop_back();
    for (int j = 0; j < n; ++j) {
      const double w = transposed ? b(j, i) : b(i, j);
      if (w > 0.0 && !seen[j]) {
        seen[j] = true;
        stack.push_back(j);
      }
    }
  }
  return seen;
}

// Nilpotent iff the support graph has no cycle, i.e. B^n = 0.
bool is_nilpotent(const Matrix& b) {
  Matrix support = (b.array() > 0.0).cast<double>().matrix();
  Matrix power = support;
  for (int k = 1; k < b.rows(); ++k) {
    power = (power * support).unaryExpr([](double v) { return v > 0.0 ? 1.0 : 0.0; });
  }
  return power.isZero(0.0);
}

double spectral_radius(const Matrix& b, const std::string& name) {
  if (b.rows() == 0 || is_nilpotent(b)) return 0.0;
  if (is_irreducible(b)) return perron(b, name).rho;
  return Eigen::EigenSolver<Matrix>(b, false).eigenvalues().cwiseAbs().maxCoeff();
}

Vector pad(const Vector& d1, const Vector& d2) {
  Vector out(d1.size() + d2.size());
  out << d1, d2;
  return out;
}

struct Perrons {
  PerronPair d1;
  PerronPair d2;
  RateClass rate_class;
};

RateClass classify(double lambda1, double lambda2) {
  if (lambda1 == lambda2 || std::abs(lambda1 - lambda2) < kCriticalTolerance) {
    return RateClass::CriticalPolynomial;
  }
  return lambda2 < lambda1 ? RateClass::ExponentialQSD2 : RateClass::ExponentialQSD1;
}

Perrons both_perrons(const ReducibleChain& chain) {
  chain.validate();
  Perrons p{perron(chain.q11(), "D1"), perron(chain.q22(), "D2"), RateClass::CriticalPolynomial};
  p.rate_class = classify(-std::log(p.d1.rho), -std::log(p.d2.rho));
  return p;
}

void require_regime(RateClass actual, RateClass wanted, const char* what) {
  if (actual != wanted) {
    throw RegimeError(std::string(what) + " requires the " + std::string(rate_class_name(wanted)) +
                      " regime, chain is " + std::string(rate_class_name(actual)));
  }
}

// Geometric tail estimate from the latest term norm and the contraction ratio.
double tail_estimate(double term_norm, double ratio) {
  if (term_norm == 0.0) return 0.0;
  if (!(ratio < 1.0)) return kInf;
  return term_norm * ratio / (1.0 - ratio);
}

double sup_tv_deviation(const Matrix& scaled, const Vector& eta, const Vector& nu) {
  double worst = 0.0;
  for (int x = 0; x < scaled.rows(); ++x) {
    const double d = (scaled.row(x).transpose() - eta(x) * nu).cwiseAbs().sum();
    if (!std::isfinite(d)) return kNaN;
    worst = std::max(worst, d);
  }
  return worst;
}

}  // namespace

void ReducibleChain::validate() const {
  if (n1 <= 0 || n2 <= 0) throw UsageError("chain block sizes must be positive");
  if (Q.rows() != size() || Q.cols() != size()) {
    throw UsageError("chain matrix must be " + std::to_string(size()) + "x" + std::to_string(size()));
  }
  for (int i = 0; i < size(); ++i) {
    for (int j = 0; j < size(); ++j) {
      const double v = Q(i, j);
      if (!(v >= 0.0 && v <= 1.0)) throw UsageError("chain entries must lie in [0,1]");
      if (i >= n1 && j < n1 && v != 0.0) throw UsageError("chain block D2 -> D1 must be zero");
    }
    if (Q.row(i).sum() > 1.0 + kEntrySlack) {
      throw UsageError("chain row " + std::to_string(i) + " sums above 1");
    }
  }
}

ReducibleChain make_chain(int n1, int n2, const Matrix& Q) {
  ReducibleChain c{n1, n2, Q};
  c.validate();
  return c;
}

ReducibleChain two_state_chain(double a, double b) {
  Matrix q(2, 2);
  q << a, 1.0 - a, 0.0, b;
  return make_chain(1, 1, q);
}

bool is_irreducible(const Matrix& block) {
  if (block.rows() == 0 || block.rows() != block.cols()) return false;
  if (block.rows() == 1) return true;
  const auto fwd = reachable_from(block, 0, false);
  const auto bwd = reachable_from(block, 0, true);
  return std::all_of(fwd.begin(), fwd.end(), [](bool b) { return b; }) &&
         std::all_of(bwd.begin(), bwd.end(), [](bool b) { return b; });
}

PerronPair perron(const Matrix& block, const std::string& name) {
  if (!is_irreducible(block)) throw ReducibleBlockError(name, "block " + name + " is reducible");
  const int n = static_cast<int>(block.rows());
  const Matrix shifted = (block + kPowerShift * Matrix::Identity(n, n)) / (1.0 + kPowerShift);

  Vector right = Vector::Constant(n, 1.0 / n);
  Vector left = right;
  PerronPair out;
  for (int it = 1;; ++it) {
    Vector r = shifted * right;
    Vector l = shifted.transpose() * left;
    const double rs = r.sum();
    const double ls = l.sum();
    if (!(rs > 0.0) || !(ls > 0.0)) break;
    r /= rs;
    l /= ls;
    const double change = std::max((r - right).cwiseAbs().maxCoeff() / r.maxCoeff(),
                                   (l - left).cwiseAbs().maxCoeff() / l.maxCoeff());
    right = r;
    left = l;
    if (change < kPowerTolerance) {
      out.iterations = it;
      break;
    }
    if (it >= kPowerMaxIterations) {
      throw NumericalError("power iteration on block " + name + " did not converge");
    }
  }
  out.rho = (block * right).sum() / right.sum();
  if (!(out.rho > 0.0)) throw ReducibleBlockError(name, "block " + name + " has spectral radius 0");
  out.left = left / left.sum();
  out.right = right / out.left.dot(right);
  return out;
}

BlockRates block_rates(const ReducibleChain& chain) {
  chain.validate();
  const double r1 = spectral_radius(chain.q11(), "D1");
  const double r2 = spectral_radius(chain.q22(), "D2");
  return {r1 > 0.0 ? -std::log(r1) : kInf, r2 > 0.0 ? -std::log(r2) : kInf};
}

RateClass rate_classify(const ReducibleChain& chain) {
  const BlockRates r = block_rates(chain);
  return classify(r.lambda1, r.lambda2);
}

std::string_view rate_class_name(RateClass c) {
  switch (c) {
    case RateClass::ExponentialQSD2:
      return "ExponentialQSD2";
    case RateClass::ExponentialQSD1:
      return "ExponentialQSD1";
    case RateClass::CriticalPolynomial:
      return "CriticalPolynomial";
  }
  return "?";
}

std::vector<QsdRecord> enumerate_qsds(const ReducibleChain& chain) {
  const Perrons p = both_perrons(chain);
  std::vector<QsdRecord> out;
  out.push_back({pad(Vector::Zero(chain.n1), p.d2.left), -std::log(p.d2.rho), false});
  if (p.rate_class == RateClass::ExponentialQSD1) {
    Vector nu = nu_eigen(chain);
    out.push_back({nu / nu.sum(), -std::log(p.d1.rho), true});
  } else if (chain.q12().isZero(0.0)) {
    out.push_back({pad(p.d1.left, Vector::Zero(chain.n2)), -std::log(p.d1.rho), true});
  }
  return out;
}

double eigen_residual(const ReducibleChain& chain, const QsdRecord& qsd) {
  const Vector lhs = chain.Q.transpose() * qsd.distribution;
  return (lhs - std::exp(-qsd.rate) * qsd.distribution).cwiseAbs().maxCoeff();
}

Vector conditional_evolution(const ReducibleChain& chain, const Vector& mu0, int n) {
  chain.validate();
  if (mu0.size() != chain.size()) throw UsageError("initial law has the wrong dimension");
  if ((mu0.array() < 0.0).any() || std::abs(mu0.sum() - 1.0) > 1e-9) {
    throw UsageError("initial law must be a probability vector");
  }
  if (n < 0) throw UsageError("step count must be nonnegative");
  Vector v = mu0;
  const Matrix qt = chain.Q.transpose();
  for (int step = 1; step <= n; ++step) {
    v = qt * v;
    const double mass = v.sum();
    if (!(mass > 0.0)) throw ExtinctionError("conditioned law went extinct", step - 1);
    v /= mass;
  }
  return v;
}

Vector eta_eigen(const ReducibleChain& chain) {
  const Perrons p = both_perrons(chain);
  require_regime(p.rate_class, RateClass::ExponentialQSD2, "eta");
  const Matrix a = p.d2.rho * Matrix::Identity(chain.n1, chain.n1) - chain.q11();
  const Vector d1 = a.partialPivLu().solve(chain.q12() * p.d2.right);
  return pad(d1, p.d2.right);
}

Vector nu_eigen(const ReducibleChain& chain) {
  const Perrons p = both_perrons(chain);
  require_regime(p.rate_class, RateClass::ExponentialQSD1, "nu");
  const Matrix a = p.d1.rho * Matrix::Identity(chain.n2, chain.n2) - chain.q22();
  const Vector rhs = chain.q12().transpose() * p.d1.left;
  const Vector d2 = a.transpose().partialPivLu().solve(rhs);
  return pad(p.d1.left, d2);
}

SeriesResult eta_series(const ReducibleChain& chain, int K) {
  const Perrons p = both_perrons(chain);
  require_regime(p.rate_class, RateClass::ExponentialQSD2, "eta_series");
  const double rho2 = p.d2.rho;
  const double ratio = p.d1.rho / rho2;
  const Matrix q11 = chain.q11();

  Vector term = chain.q12() * p.d2.right / rho2;
  Vector sum = term;
  double prev_norm = term.cwiseAbs().maxCoeff();
  double tail = tail_estimate(prev_norm, ratio);
  int k = 1;
  const int limit = K > 0 ? K : kSeriesMaxTerms;
  while (k < limit && (K > 0 || tail >= kSeriesTolerance)) {
    term = q11 * term / rho2;
    sum += term;
    ++k;
    const double norm = term.cwiseAbs().maxCoeff();
    const double observed = prev_norm > 0.0 ? norm / prev_norm : 0.0;
    tail = tail_estimate(norm, std::max(ratio, observed));
    prev_norm = norm;
  }
  if (K <= 0 && tail >= kSeriesTolerance) throw NumericalError("eta series did not converge");
  return {pad(sum, p.d2.right), k, tail};
}

SeriesResult nu_series(const ReducibleChain& chain, int K) {
  const Perrons p = both_perrons(chain);
  require_regime(p.rate_class, RateClass::ExponentialQSD1, "nu_series");
  const double rho1 = p.d1.rho;
  const double ratio = p.d2.rho / rho1;
  const Matrix q22t = chain.q22().transpose();

  // Term k is exp(lambda1 (k+1)) nu1 Q12 Q22^k, k = 0, 1, ...
  Vector term = chain.q12().transpose() * p.d1.left / rho1;
  Vector sum = term;
  double prev_norm = term.cwiseAbs().maxCoeff();
  double tail = tail_estimate(prev_norm, ratio);
  int k = 1;
  const int limit = K > 0 ? K : kSeriesMaxTerms;
  while (k < limit && (K > 0 || tail >= kSeriesTolerance)) {
    term = q22t * term / rho1;
    sum += term;
    ++k;
    const double norm = term.cwiseAbs().maxCoeff();
    const double observed = prev_norm > 0.0 ? norm / prev_norm : 0.0;
    tail = tail_estimate(norm, std::max(ratio, observed));
    prev_norm = norm;
  }
  if (K <= 0 && tail >= kSeriesTolerance) throw NumericalError("nu series did not converge");
  return {pad(p.d1.left, sum), k, tail};
}

MalthusData malthus_data(const ReducibleChain& chain) {
  const Perrons p = both_perrons(chain);
  MalthusData m;
  m.rate_class = p.rate_class;
  switch (p.rate_class) {
    case RateClass::ExponentialQSD2:
      m.rho = p.d2.rho;
      m.eta = eta_eigen(chain);
      m.nu = {pad(Vector::Zero(chain.n1), p.d2.left), -std::log(p.d2.rho), false};
      break;
    case RateClass::ExponentialQSD1: {
      m.rho = p.d1.rho;
      const Vector nu = nu_eigen(chain);
      const double mass = nu.sum();
      m.nu = {nu / mass, -std::log(p.d1.rho), true};
      m.eta = pad(p.d1.right * mass, Vector::Zero(chain.n2));
      break;
    }
    case RateClass::CriticalPolynomial: {
      m.rho = p.d2.rho;
      const double flux = p.d1.left.dot(chain.q12() * p.d2.right);
      m.nu = {pad(Vector::Zero(chain.n1), p.d2.left), -std::log(p.d2.rho), false};
      m.eta = pad(p.d1.right * (flux / m.rho), Vector::Zero(chain.n2));
      break;
    }
  }
  m.lambda = -std::log(m.rho);
  return m;
}

Matrix scaled_power(const ReducibleChain& chain, double rho, long long n) {
  if (n < 0) throw UsageError("power must be nonnegative");
  Matrix base = chain.Q / rho;
  Matrix result = Matrix::Identity(chain.size(), chain.size());
  while (n > 0) {
    if (n & 1) result = result * base;
    n >>= 1;
    if (n > 0) base = base * base;
  }
  return result;
}

Deviation malthus_deviation(const ReducibleChain& chain, long long n) {
  if (n < 1) throw UsageError("deviation needs n >= 1");
  const MalthusData m = malthus_data(chain);
  Matrix scaled = scaled_power(chain, m.rho, n);
  if (m.rate_class == RateClass::CriticalPolynomial) {
    scaled /= static_cast<double>(n);
    return {kNaN, sup_tv_deviation(scaled, m.eta, m.nu.distribution)};
  }
  return {sup_tv_deviation(scaled, m.eta, m.nu.distribution), kNaN};
}

double plain_critical_deviation(const ReducibleChain& chain, long long n) {
  if (n < 1) throw UsageError("deviation needs n >= 1");
  const MalthusData m = malthus_data(chain);
  require_regime(m.rate_class, RateClass::CriticalPolynomial, "plain_critical_deviation");
  return sup_tv_deviation(scaled_power(chain, m.rho, n), m.eta, m.nu.distribution);
}

}  // namespace qsdlab::chain
