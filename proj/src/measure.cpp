#include "qsdlab/measure.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "qsdlab/error.hpp"

namespace qsdlab::measure {

void BinGrid::validate() const {
  if (!(hi > lo) || bins <= 0) throw UsageError("histogram grid needs hi > lo and bins > 0");
}

int BinGrid::index(double x) const {
  const double pos = (x - lo) * bins / (hi - lo);
  if (!(pos >= 0.0)) return 0;
  return std::min(bins - 1, static_cast<int>(pos));
}

EmpiricalMeasure::EmpiricalMeasure(BinGrid grid, std::vector<double> masses)
    : grid_(grid), masses_(std::move(masses)) {
  grid_.validate();
  if (static_cast<int>(masses_.size()) != grid_.bins) throw UsageError("mass vector does not match grid");
  const double total = std::accumulate(masses_.begin(), masses_.end(), 0.0);
  if (!(total > 0.0)) throw EstimationError("empty histogram");
  for (double& m : masses_) m /= total;
}

EmpiricalMeasure EmpiricalMeasure::from_samples(std::span<const double> xs, BinGrid grid) {
  Histogram h(grid);
  h.add_all(xs);
  return h.measure();
}

EmpiricalMeasure EmpiricalMeasure::from_counts(std::span<const std::uint64_t> counts, BinGrid grid) {
  return EmpiricalMeasure(grid, std::vector<double>(counts.begin(), counts.end()));
}

double EmpiricalMeasure::mass_d1() const { return mass_between(grid_.lo, 2.0); }

double EmpiricalMeasure::mass_between(double lo, double hi) const {
  const double slack = 1e-9 * grid_.width();
  double s = 0.0;
  for (int i = 0; i < grid_.bins; ++i) {
    if (bin_lo(i) >= lo - slack && bin_hi(i) <= hi + slack) s += masses_[i];
  }
  return s;
}

double tv_distance(const EmpiricalMeasure& a, const EmpiricalMeasure& b) {
  if (!(a.grid() == b.grid())) throw UsageError("total variation needs identical bin grids");
  double s = 0.0;
  for (std::size_t i = 0; i < a.masses().size(); ++i) s += std::abs(a.masses()[i] - b.masses()[i]);
  return 0.5 * s;
}

EmpiricalMeasure bin_density(std::span<const double> xs, std::span<const double> density, BinGrid grid) {
  grid.validate();
  if (xs.size() != density.size() || xs.size() < 2) throw UsageError("density needs matching nodes");
  const double h = xs[1] - xs[0];
  // Node values padded by the zero boundary values on both sides.
  std::vector<double> x{xs.front() - h};
  std::vector<double> v{0.0};
  x.insert(x.end(), xs.begin(), xs.end());
  v.insert(v.end(), density.begin(), density.end());
  x.push_back(xs.back() + h);
  v.push_back(0.0);

  std::vector<double> masses(grid.bins, 0.0);
  for (std::size_t c = 0; c + 1 < x.size(); ++c) {
    const double x0 = x[c];
    const double x1 = x[c + 1];
    const double slope = (v[c + 1] - v[c]) / (x1 - x0);
    const auto value = [&](double t) { return v[c] + slope * (t - x0); };
    double a = std::max(x0, grid.lo);
    const double end = std::min(x1, grid.hi);
    while (a < end) {
      int bin = grid.index(a);
      if (grid.edge(bin + 1) <= a) ++bin;
      if (bin >= grid.bins) break;
      const double b = std::min(end, grid.edge(bin + 1));
      masses[bin] += 0.5 * (value(a) + value(b)) * (b - a);
      a = b;
    }
  }
  for (double& m : masses) m = std::max(m, 0.0);
  return EmpiricalMeasure(grid, std::move(masses));
}

Histogram::Histogram(BinGrid grid) : grid_(grid), counts_(grid.bins, 0) { grid_.validate(); }

void Histogram::add_all(std::span<const double> xs) {
  for (double x : xs) add(x);
}

void Histogram::merge(const Histogram& other) {
  if (!(grid_ == other.grid_)) throw UsageError("cannot merge histograms on different grids");
  for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += other.counts_[i];
}

std::uint64_t Histogram::total() const {
  return std::accumulate(counts_.begin(), counts_.end(), std::uint64_t{0});
}

EmpiricalMeasure Histogram::measure() const { return EmpiricalMeasure::from_counts(counts_, grid_); }

}  // namespace qsdlab::measure
