#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "betalab/core_numerics.hpp"

namespace betalab {

/// p -> ratio * p + translation, chosen with probability `weight`.
struct AffineMap1D {
  double ratio = 0.5;
  double translation = 0.0;
  double weight = 0.5;

  double apply(double p) const { return ratio * p + translation; }
  /// The expanding inverse T(x) = (x - translation) / ratio.
  double invert(double x) const { return (x - translation) / ratio; }
};

/// Weighted contracting system on the line. Its stationary measure satisfies
/// nu = sum_i w_i nu o S_i^-1; the density then obeys
/// h(x) = sum_i (w_i / r_i) h(T_i x).
struct AffineSystem1D {
  std::vector<AffineMap1D> maps;

  /// Smallest interval mapped into itself: [min_i c_i, max_i c_i] with c_i
  /// the fixed points.
  Interval hull() const;
  double weight_sum() const;
};

/// The two inverse branches S_i(x) = (x + i) / beta with weight 1/2 each.
AffineSystem1D bernoulli_system(const BetaParam& beta);

/// Piecewise-constant probability density on half-open cells [lo, hi).
class DensityGrid {
 public:
  DensityGrid() = default;
  /// values are cell-average densities; must be nonnegative, power-of-two
  /// count, unit mass.
  DensityGrid(Interval support, std::vector<double> values);

  static DensityGrid uniform(Interval support, std::size_t cells);
  /// Normalizes the given nonnegative masses per cell.
  static DensityGrid from_masses(Interval support, std::span<const double> masses);

  const Interval& support() const { return support_; }
  std::size_t cell_count() const { return values_.size(); }
  double cell_width() const { return width_; }
  double cell_lo(std::size_t i) const { return support_.lo + width_ * static_cast<double>(i); }
  double cell_hi(std::size_t i) const { return support_.lo + width_ * static_cast<double>(i + 1); }
  double cell_mid(std::size_t i) const { return support_.lo + width_ * (static_cast<double>(i) + 0.5); }
  std::span<const double> values() const { return values_; }

  double total_mass() const;
  /// Cell containing x, or -1 when x is off the half-open support.
  std::ptrdiff_t cell_index(double x) const;
  double evaluate(double x) const;
  double cdf(double x) const;
  double max_value() const;
  /// Largest jump between neighbouring cells, counting the drop to zero at
  /// both ends of the support.
  double max_jump() const;

 private:
  Interval support_;
  double width_ = 0.0;
  std::vector<double> values_;
};

struct DensityDiagnostics {
  double l1_residual = 0.0;
  double sup_estimate = 0.0;
  int iterations = 0;
  double refinement_stability = 0.0;
  bool converged = false;
  double last_step_l1 = 0.0;
  /// max_j |g_j - (P g)_j|: distance of the returned grid from an exact
  /// fixed point of the discrete operator.
  double fixed_point_gap = 0.0;
  double max_jump = 0.0;
  /// Bound on |h(y) - sum_i (w_i/r_i) h(T_i y)| at every point y, valid for
  /// the returned grid.
  double pointwise_budget = 0.0;
};

struct SolveOptions {
  double tol = 1e-10;
  int max_iter = 20000;
  bool refinement_check = true;
  unsigned threads = 1;
};

/// One Ulam transfer step: each cell's mass is pushed through every branch
/// S_i with weight w_i, split across target cells by overlap.
DensityGrid transfer_step(const DensityGrid& grid, const AffineSystem1D& system, unsigned threads = 1);
DensityGrid ulam_step(const DensityGrid& grid, const BetaParam& beta);

struct DensitySolution {
  DensityGrid grid;
  DensityDiagnostics diagnostics;
};

/// Iterates transfer_step from the uniform density on the hull.
DensitySolution solve_invariant_density(const AffineSystem1D& system, std::size_t cells,
                                        const SolveOptions& options = {});
DensitySolution solve_density(const BetaParam& beta, std::size_t cells, double tol, int max_iter,
                              bool refinement_check = true);

/// ||h - sum_i (w_i/r_i) h o T_i||_1 with the right-hand side sampled at cell
/// midpoints.
double functional_residual(const DensityGrid& grid, const AffineSystem1D& system);
/// Pointwise bound derived from max_jump and the fixed-point gap.
double pointwise_budget(const DensityGrid& grid, const AffineSystem1D& system);
double fixed_point_gap(const DensityGrid& grid, const AffineSystem1D& system);

struct SampledDensity {
  DensityGrid grid;
  double mean = 0.0;
  double variance = 0.0;
  std::uint64_t samples = 0;
  std::uint64_t outside_support = 0;
};

/// Smallest L with beta^-L / (beta - 1) below the cell width.
int minimal_truncation(const BetaParam& beta, std::size_t cells);

/// Histogram of sum_{i<=L} a_i beta^-i with fair-coin digits. Samples are
/// split into fixed blocks with their own derived seeds, so the result does
/// not depend on the thread count.
SampledDensity sample_density(const BetaParam& beta, std::uint64_t sample_count, int truncation,
                              std::size_t cells, std::uint64_t seed, unsigned threads = 1);

double evaluate_density(const DensityGrid& grid, double x);
/// Density against normalized Lebesgue measure on the grid's support,
/// h(x) * |support|. Counting limits such as (beta/2)^n N_n(x) converge to
/// this value rather than to h(x).
double normalized_density(const DensityGrid& grid, double x);

/// Mass-preserving transfer of a piecewise-constant density to new cells.
DensityGrid rebin(const DensityGrid& grid, Interval support, std::size_t cells);
/// Exact L1 distance between two piecewise-constant densities.
double l1_distance(const DensityGrid& a, const DensityGrid& b);
/// h(lo + hi - x).
DensityGrid reflect(const DensityGrid& grid);

void write_density_csv(std::ostream& out, const DensityGrid& grid);

}  // namespace betalab
