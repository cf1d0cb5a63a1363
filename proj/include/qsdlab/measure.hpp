#pragma once

// Fixed-bin probability histograms over an interval, by default 100 bins of
// width 0.05 on (0,5) so that 2 and 3 fall on bin edges.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace qsdlab::measure {

struct BinGrid {
  double lo = 0.0;
  double hi = 5.0;
  int bins = 100;

  void validate() const;
  double width() const { return (hi - lo) / bins; }
  double edge(int i) const { return lo + (hi - lo) * i / bins; }
  // Bin of x, clamped to the grid.
  int index(double x) const;
  bool operator==(const BinGrid&) const = default;
};

class EmpiricalMeasure {
 public:
  EmpiricalMeasure() = default;
  // Masses are normalized to sum 1. Throws EstimationError if all are zero.
  EmpiricalMeasure(BinGrid grid, std::vector<double> masses);

  static EmpiricalMeasure from_samples(std::span<const double> xs, BinGrid grid = {});
  static EmpiricalMeasure from_counts(std::span<const std::uint64_t> counts, BinGrid grid = {});

  const BinGrid& grid() const { return grid_; }
  const std::vector<double>& masses() const { return masses_; }
  double bin_lo(int i) const { return grid_.edge(i); }
  double bin_hi(int i) const { return grid_.edge(i + 1); }

  // Mass of the bins whose right edge is <= 2.
  double mass_d1() const;
  // Mass of the bins inside [lo, hi].
  double mass_between(double lo, double hi) const;

 private:
  BinGrid grid_;
  std::vector<double> masses_;
};

// Half the L1 distance. Throws UsageError on different grids.
double tv_distance(const EmpiricalMeasure& a, const EmpiricalMeasure& b);

// Bins a density given at nodes xs (uniform spacing, value 0 one step beyond
// both ends) by exact integration of its piecewise-linear interpolant.
EmpiricalMeasure bin_density(std::span<const double> xs, std::span<const double> density,
                             BinGrid grid = {});

// Accumulates counts, then converts to an EmpiricalMeasure.
class Histogram {
 public:
  explicit Histogram(BinGrid grid = {});
  void add(double x) { ++counts_[grid_.index(x)]; }
  void add_all(std::span<const double> xs);
  void merge(const Histogram& other);
  std::uint64_t total() const;
  const std::vector<std::uint64_t>& counts() const { return counts_; }
  EmpiricalMeasure measure() const;

 private:
  BinGrid grid_;
  std::vector<std::uint64_t> counts_;
};

}  // namespace qsdlab::measure
