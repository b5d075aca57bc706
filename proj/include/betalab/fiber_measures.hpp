#pragma once

#include <vector>

#include "betalab/core_numerics.hpp"
#include "betalab/density.hpp"

namespace betalab {

struct FiberEntry {
  SymbolWord word;
  double mass = 0.0;
  double image = 0.0;  // T_w(x)
};

/// m1_x restricted to the admissible words of one depth.
struct FiberDistribution {
  double x = 0.0;
  int depth = 0;
  std::vector<FiberEntry> entries;
  double mass_sum = 0.0;
};

struct CoverSum {
  int depth = 0;
  double value = 0.0;  // (beta/2)^n N_n
};

struct HausdorffBounds {
  double exponent = 0.0;
  std::vector<CoverSum> cover_sums;
  /// h(x) against normalized Lebesgue measure on I_beta.
  double density_at_x = 0.0;
  double upper_cap = 0.0;    // 2 h(x)
  double lower_floor = 0.0;  // h(x) / sup h, an estimate; scale free
  /// Cover sum at the deepest level divided by h(x); estimates the
  /// proportionality constant K between H^gamma(E_beta(x)) and h(x).
  double ratio_estimate = 0.0;
};

/// log(2/beta) / log 2.
double hausdorff_exponent(const BetaParam& beta);

/// Diameter 2^-n of a depth-n cylinder in the symbolic metric.
double cylinder_diameter(const SymbolWord& word);
/// d(a, b) = 2^-k with k the length of the common prefix (1 if the first
/// digits differ). Equal words have distance 2^-length.
double symbolic_distance(const SymbolWord& a, const SymbolWord& b);

/// (beta/2)^|w| h(T_w x) / h(x); 0 for inadmissible words. At x = 0 and
/// x = 1/(beta-1) the fiber is a single word and the mass is 1 on it.
double cylinder_mass(double x, const SymbolWord& word, const DensityGrid& density, const BetaParam& beta);

FiberDistribution fiber_distribution(double x, const BetaParam& beta, int n, const DensityGrid& density);

/// Largest parent-minus-children defect over every node of the depth-n
/// fiber tree, compared against the per-node grid budget
/// (beta/2)^k * pointwise_budget / h(x).
struct ConsistencyReport {
  double max_defect = 0.0;
  double worst_ratio = 0.0;  // max over nodes of defect / budget
  std::size_t nodes = 0;
  bool within_budget = true;
};
ConsistencyReport fiber_consistency(double x, const BetaParam& beta, int n, const DensityGrid& density,
                                    double pointwise_budget);

/// Grid budget for |mass_sum - 1| at depth n:
/// pointwise_budget * sum_{k<n} (beta/2)^k N_k(x) / h(x).
double fiber_mass_budget(double x, const BetaParam& beta, int n, const DensityGrid& density,
                         double pointwise_budget);

HausdorffBounds hausdorff_bounds(double x, const BetaParam& beta, int n_max, const DensityGrid& density,
                                 double sup_estimate);

}  // namespace betalab
