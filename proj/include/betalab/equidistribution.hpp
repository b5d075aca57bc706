#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "betalab/core_numerics.hpp"
#include "betalab/density.hpp"
#include "betalab/expansions.hpp"

namespace betalab {

struct Atom {
  double location = 0.0;
  double weight = 0.0;
};

/// Finite atomic measure, atoms sorted by location. Uniform orbit measures
/// have total weight 1; conditional ones carry the raw fiber masses, so their
/// total is the fiber mass_sum. Distances always use the normalized CDF.
struct EmpiricalMeasure {
  std::vector<Atom> atoms;
  double total_weight = 0.0;

  double mass(double lo, double hi, bool lo_closed = true, bool hi_closed = true) const;
};

EmpiricalMeasure orbit_measure_uniform(double x, const BetaParam& beta, int n,
                                       const EnumerationOptions& options = {});
EmpiricalMeasure orbit_measure_uniform(const AlgebraicValue& x, const BetaParam& beta, int n,
                                       const EnumerationOptions& options = {});
EmpiricalMeasure orbit_measure_conditional(double x, const BetaParam& beta, int n, const DensityGrid& density);

/// Nondecreasing CDF that is linear between knots and may jump at a knot;
/// 0 before the first knot and 1 after the last.
class PiecewiseCdf {
 public:
  static PiecewiseCdf uniform(Interval support);
  static PiecewiseCdf from_density(const DensityGrid& density);
  static PiecewiseCdf from_measure(const EmpiricalMeasure& measure);

  double left_limit(double t) const;
  double right_limit(double t) const;
  const std::vector<double>& knots() const { return knots_; }

 private:
  std::vector<double> knots_;
  std::vector<double> left_;
  std::vector<double> right_;
};

double ks_distance(const PiecewiseCdf& a, const PiecewiseCdf& b);
double wasserstein1(const PiecewiseCdf& a, const PiecewiseCdf& b);

double ks_distance(const EmpiricalMeasure& e, const DensityGrid& reference);
/// Against normalized Lebesgue measure on the interval.
double ks_distance(const EmpiricalMeasure& e, Interval uniform_reference);
double ks_distance(const EmpiricalMeasure& a, const EmpiricalMeasure& b);
double wasserstein1(const EmpiricalMeasure& e, const DensityGrid& reference);
double wasserstein1(const EmpiricalMeasure& e, Interval uniform_reference);
double wasserstein1(const EmpiricalMeasure& a, const EmpiricalMeasure& b);

struct GrowthDiagnostics {
  std::vector<std::uint64_t> count;      // N_n, n = 0..N
  std::vector<std::uint64_t> branching;  // |O^n cap S|
  std::vector<double> scaled;            // (beta/2)^n N_n
  std::vector<double> mu_s;              // mu_{n,x}(S)
  std::vector<double> k_series;          // k_n = (beta/2)(mu_{n,x}(S) + 1), n = 0..N
  std::vector<double> k_product;         // prod_{i<=n} k_i
  /// Max and min of the scaled series over the second half of the run.
  double f_upper = 0.0;
  double f_lower = 0.0;
  /// N_{n+1} = N_n + |O^n cap S| for every n < N, and the reduced fraction
  /// prod_{i<=n} (N_i + S_i) / N_i equals N_{n+1}. Together these give
  /// (beta/2)^{n+1} N_{n+1} = prod_{i=0}^{n} k_i exactly.
  bool telescoping_exact = false;
  /// Largest relative gap between k_product[n] and scaled[n+1] in doubles.
  double telescoping_float_gap = 0.0;
};

GrowthDiagnostics growth_series(double x, const BetaParam& beta, int max_n, const EnumerationOptions& options = {});
GrowthDiagnostics growth_series(const AlgebraicValue& x, const BetaParam& beta, int max_n,
                                const EnumerationOptions& options = {});
GrowthDiagnostics growth_from_counts(const CountSeries& series, const BetaParam& beta);

struct EdgeMasses {
  double lo = 0.0;  // mu([0, delta))
  double hi = 0.0;  // mu((1/(beta-1) - delta, 1/(beta-1)])
};
EdgeMasses edge_masses(const EmpiricalMeasure& measure, const BetaParam& beta, double delta = 0.05);

/// m1_x-mass of the words of length n + |block| that end in block.
double tail_block_mass(double x, const BetaParam& beta, int n, const SymbolWord& block, const DensityGrid& density);

/// Riemann estimate of the integral over I_beta of prod_{i<=n} k_i(x) on a
/// midpoint grid. A sampled number, not a decision about integrability.
double sampled_product_integral(const BetaParam& beta, int n, std::size_t grid_points, unsigned threads = 1);

struct EquidistRow {
  int n = 0;
  std::uint64_t count = 0;
  double scaled = 0.0;
  double ks_uniform = 0.0;
  double ks_nu = 0.0;
  double w1_uniform = 0.0;
  double k_n = 0.0;
  EdgeMasses edge;
};

/// One row per requested depth; ks_nu compares the conditional orbit measure
/// with the grid CDF.
std::vector<EquidistRow> equidist_table(double x, const BetaParam& beta, const std::vector<int>& depths,
                                        const DensityGrid& density, const EnumerationOptions& options = {});
void write_equidist_csv(std::ostream& out, const std::vector<EquidistRow>& rows);

}  // namespace betalab
