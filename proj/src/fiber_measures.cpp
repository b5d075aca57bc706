#include "betalab/fiber_measures.hpp"

#include <cmath>

#include "betalab/expansions.hpp"

namespace betalab {

namespace {

double density_at_base(double x, const DensityGrid& density) {
  const double hx = density.evaluate(x);
  if (!(hx > 0.0)) throw UndefinedFiberError("h(x) = 0 at grid resolution; m1_x is undefined");
  return hx;
}

// The fiber over 0 or 1/(beta-1) is one word, so m_x is a point mass there.
bool endpoint(double x, const BetaParam& beta) {
  return std::abs(x) <= beta.tolerance() || std::abs(x - beta.upper()) <= beta.tolerance();
}

}  // namespace

double hausdorff_exponent(const BetaParam& beta) { return std::log(2.0 / beta.value()) / std::log(2.0); }

double cylinder_diameter(const SymbolWord& word) { return std::ldexp(1.0, -static_cast<int>(word.size())); }

double symbolic_distance(const SymbolWord& a, const SymbolWord& b) {
  const std::size_t n = std::min(a.size(), b.size());
  std::size_t k = 0;
  while (k < n && a[k] == b[k]) ++k;
  if (k == 0) return 1.0;
  return std::ldexp(1.0, -static_cast<int>(k));
}

double cylinder_mass(double x, const SymbolWord& word, const DensityGrid& density, const BetaParam& beta) {
  const bool dirac = endpoint(x, beta);
  const double hx = dirac ? 1.0 : density_at_base(x, density);
  double y = x;
  for (auto d : word.digits()) {
    y = apply_map(d, y, beta);
    if (!in_support(y, beta)) return 0.0;
  }
  if (dirac) return 1.0;
  return std::pow(beta.value() / 2.0, static_cast<double>(word.size())) * density.evaluate(y) / hx;
}

FiberDistribution fiber_distribution(double x, const BetaParam& beta, int n, const DensityGrid& density) {
  const bool dirac = endpoint(x, beta);
  const double hx = dirac ? 1.0 : density_at_base(x, density);
  const double scale = std::pow(beta.value() / 2.0, static_cast<double>(n));
  FiberDistribution fiber;
  fiber.x = x;
  fiber.depth = n;
  for (auto& w : admissible_words(x, beta, n)) {
    const double mass = dirac ? 1.0 : scale * density.evaluate(w.image) / hx;
    fiber.mass_sum += mass;
    fiber.entries.push_back({std::move(w.word), mass, w.image});
  }
  return fiber;
}

ConsistencyReport fiber_consistency(double x, const BetaParam& beta, int n, const DensityGrid& density,
                                    double pointwise_budget) {
  if (endpoint(x, beta)) return {0.0, 0.0, static_cast<std::size_t>(std::max(n, 0)), true};
  const double hx = density_at_base(x, density);
  const FloatArithmetic arith(beta);
  const double half = beta.value() / 2.0;
  ConsistencyReport report;
  walk_expansion_tree(arith, x, n - 1, [&](const std::vector<std::uint8_t>& path, double y) {
    const double scale = std::pow(half, static_cast<double>(path.size()));
    const double parent = scale * density.evaluate(y) / hx;
    double children = 0.0;
    for (int i = 0; i < 2; ++i) {
      const double child = arith.step(i, y);
      if (arith.in_support(child)) children += scale * half * density.evaluate(child) / hx;
    }
    const double defect = std::abs(parent - children);
    const double budget = scale * pointwise_budget / hx;
    report.max_defect = std::max(report.max_defect, defect);
    if (budget > 0.0) report.worst_ratio = std::max(report.worst_ratio, defect / budget);
    if (defect > budget * (1.0 + 1e-9) + 1e-15) report.within_budget = false;
    ++report.nodes;
  });
  return report;
}

double fiber_mass_budget(double x, const BetaParam& beta, int n, const DensityGrid& density,
                         double pointwise_budget) {
  if (n == 0 || endpoint(x, beta)) return 0.0;
  const double hx = density_at_base(x, density);
  const auto series = count_series(x, beta, n - 1);
  double acc = 0.0;
  double scale = 1.0;
  for (int k = 0; k < n; ++k) {
    acc += scale * static_cast<double>(series.count[static_cast<std::size_t>(k)]);
    scale *= beta.value() / 2.0;
  }
  return pointwise_budget * acc / hx;
}

HausdorffBounds hausdorff_bounds(double x, const BetaParam& beta, int n_max, const DensityGrid& density,
                                 double sup_estimate) {
  HausdorffBounds bounds;
  bounds.exponent = hausdorff_exponent(beta);
  bounds.density_at_x = normalized_density(density, x);
  bounds.upper_cap = 2.0 * bounds.density_at_x;
  bounds.lower_floor = sup_estimate > 0.0 ? density.evaluate(x) / sup_estimate : 0.0;
  const auto series = count_series(x, beta, n_max);
  // (2^-n)^gamma = (beta/2)^n, so the uniform depth-n cover sum is (beta/2)^n N_n.
  double scale = 1.0;
  for (int n = 0; n <= n_max; ++n) {
    bounds.cover_sums.push_back({n, scale * static_cast<double>(series.count[static_cast<std::size_t>(n)])});
    scale *= beta.value() / 2.0;
  }
  if (bounds.density_at_x > 0.0) bounds.ratio_estimate = bounds.cover_sums.back().value / bounds.density_at_x;
  return bounds;
}

}  // namespace betalab
