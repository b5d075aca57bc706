#include "betalab/equidistribution.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

#include "betalab/fiber_measures.hpp"
#include "betalab/parallel.hpp"

namespace betalab {

namespace {

using u128 = unsigned __int128;

u128 gcd128(u128 a, u128 b) {
  while (b != 0) {
    const u128 r = a % b;
    a = b;
    b = r;
  }
  return a;
}

EmpiricalMeasure from_orbit(const OrbitMultiset& orbit) {
  EmpiricalMeasure m;
  const double n = static_cast<double>(orbit.total);
  for (const auto& e : orbit.entries) m.atoms.push_back({e.value, static_cast<double>(e.multiplicity) / n});
  m.total_weight = 1.0;
  return m;
}

double integrate_abs_linear(double width, double d0, double d1) {
  if ((d0 >= 0.0) == (d1 >= 0.0)) return width * (std::abs(d0) + std::abs(d1)) / 2.0;
  return width * (d0 * d0 + d1 * d1) / (2.0 * (std::abs(d0) + std::abs(d1)));
}

std::vector<double> merged_knots(const PiecewiseCdf& a, const PiecewiseCdf& b) {
  std::vector<double> t;
  std::merge(a.knots().begin(), a.knots().end(), b.knots().begin(), b.knots().end(), std::back_inserter(t));
  t.erase(std::unique(t.begin(), t.end()), t.end());
  return t;
}

}  // namespace

double EmpiricalMeasure::mass(double lo, double hi, bool lo_closed, bool hi_closed) const {
  double acc = 0.0;
  for (const auto& a : atoms) {
    const bool above = lo_closed ? a.location >= lo : a.location > lo;
    const bool below = hi_closed ? a.location <= hi : a.location < hi;
    if (above && below) acc += a.weight;
  }
  return acc;
}

EmpiricalMeasure orbit_measure_uniform(double x, const BetaParam& beta, int n, const EnumerationOptions& options) {
  return from_orbit(enumerate_orbit(x, beta, n, options));
}

EmpiricalMeasure orbit_measure_uniform(const AlgebraicValue& x, const BetaParam& beta, int n,
                                       const EnumerationOptions& options) {
  return from_orbit(enumerate_orbit(x, beta, n, options));
}

EmpiricalMeasure orbit_measure_conditional(double x, const BetaParam& beta, int n, const DensityGrid& density) {
  const auto fiber = fiber_distribution(x, beta, n, density);
  EmpiricalMeasure m;
  for (const auto& e : fiber.entries) m.atoms.push_back({e.image, e.mass});
  std::sort(m.atoms.begin(), m.atoms.end(), [](const Atom& a, const Atom& b) { return a.location < b.location; });
  m.total_weight = fiber.mass_sum;
  return m;
}

PiecewiseCdf PiecewiseCdf::uniform(Interval support) {
  PiecewiseCdf c;
  if (support.lo == support.hi) {
    c.knots_ = {support.lo};
    c.left_ = {0.0};
    c.right_ = {1.0};
    return c;
  }
  c.knots_ = {support.lo, support.hi};
  c.left_ = {0.0, 1.0};
  c.right_ = {0.0, 1.0};
  return c;
}

PiecewiseCdf PiecewiseCdf::from_density(const DensityGrid& density) {
  PiecewiseCdf c;
  const auto v = density.values();
  const double total = density.total_mass();
  double acc = 0.0;
  c.knots_.push_back(density.cell_lo(0));
  c.left_.push_back(0.0);
  c.right_.push_back(0.0);
  for (std::size_t i = 0; i < v.size(); ++i) {
    acc += v[i] * density.cell_width();
    const double f = i + 1 == v.size() ? 1.0 : acc / total;
    c.knots_.push_back(density.cell_hi(i));
    c.left_.push_back(f);
    c.right_.push_back(f);
  }
  return c;
}

PiecewiseCdf PiecewiseCdf::from_measure(const EmpiricalMeasure& measure) {
  if (measure.atoms.empty() || !(measure.total_weight > 0.0)) throw DomainError("empty measure has no CDF");
  PiecewiseCdf c;
  double acc = 0.0;
  for (const auto& a : measure.atoms) {
    if (!c.knots_.empty() && c.knots_.back() == a.location) {
      acc += a.weight;
      c.right_.back() = acc / measure.total_weight;
      continue;
    }
    c.knots_.push_back(a.location);
    c.left_.push_back(acc / measure.total_weight);
    acc += a.weight;
    c.right_.push_back(acc / measure.total_weight);
  }
  c.right_.back() = 1.0;
  return c;
}

double PiecewiseCdf::left_limit(double t) const {
  const auto it = std::upper_bound(knots_.begin(), knots_.end(), t);
  if (it == knots_.begin()) return 0.0;
  const auto k = static_cast<std::size_t>(it - knots_.begin()) - 1;
  if (knots_[k] == t) return left_[k];
  if (k + 1 == knots_.size()) return 1.0;
  const double s = (t - knots_[k]) / (knots_[k + 1] - knots_[k]);
  return right_[k] + s * (left_[k + 1] - right_[k]);
}

double PiecewiseCdf::right_limit(double t) const {
  const auto it = std::upper_bound(knots_.begin(), knots_.end(), t);
  if (it == knots_.begin()) return 0.0;
  const auto k = static_cast<std::size_t>(it - knots_.begin()) - 1;
  if (knots_[k] == t) return right_[k];
  if (k + 1 == knots_.size()) return 1.0;
  const double s = (t - knots_[k]) / (knots_[k + 1] - knots_[k]);
  return right_[k] + s * (left_[k + 1] - right_[k]);
}

double ks_distance(const PiecewiseCdf& a, const PiecewiseCdf& b) {
  double best = 0.0;
  for (double t : merged_knots(a, b)) {
    best = std::max(best, std::abs(a.left_limit(t) - b.left_limit(t)));
    best = std::max(best, std::abs(a.right_limit(t) - b.right_limit(t)));
  }
  return best;
}

double wasserstein1(const PiecewiseCdf& a, const PiecewiseCdf& b) {
  const auto t = merged_knots(a, b);
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < t.size(); ++i) {
    const double d0 = a.right_limit(t[i]) - b.right_limit(t[i]);
    const double d1 = a.left_limit(t[i + 1]) - b.left_limit(t[i + 1]);
    acc += integrate_abs_linear(t[i + 1] - t[i], d0, d1);
  }
  return acc;
}

double ks_distance(const EmpiricalMeasure& e, const DensityGrid& reference) {
  return ks_distance(PiecewiseCdf::from_measure(e), PiecewiseCdf::from_density(reference));
}

double ks_distance(const EmpiricalMeasure& e, Interval uniform_reference) {
  return ks_distance(PiecewiseCdf::from_measure(e), PiecewiseCdf::uniform(uniform_reference));
}

double ks_distance(const EmpiricalMeasure& a, const EmpiricalMeasure& b) {
  return ks_distance(PiecewiseCdf::from_measure(a), PiecewiseCdf::from_measure(b));
}

double wasserstein1(const EmpiricalMeasure& e, const DensityGrid& reference) {
  return wasserstein1(PiecewiseCdf::from_measure(e), PiecewiseCdf::from_density(reference));
}

double wasserstein1(const EmpiricalMeasure& e, Interval uniform_reference) {
  return wasserstein1(PiecewiseCdf::from_measure(e), PiecewiseCdf::uniform(uniform_reference));
}

double wasserstein1(const EmpiricalMeasure& a, const EmpiricalMeasure& b) {
  return wasserstein1(PiecewiseCdf::from_measure(a), PiecewiseCdf::from_measure(b));
}

GrowthDiagnostics growth_from_counts(const CountSeries& series, const BetaParam& beta) {
  GrowthDiagnostics g;
  g.count = series.count;
  g.branching = series.branching;
  const double half = beta.value() / 2.0;
  const std::size_t levels = series.count.size();
  double scale = 1.0;
  double product = 1.0;
  for (std::size_t n = 0; n < levels; ++n) {
    const double cnt = static_cast<double>(series.count[n]);
    g.scaled.push_back(scale * cnt);
    g.mu_s.push_back(static_cast<double>(series.branching[n]) / cnt);
    g.k_series.push_back(half * (g.mu_s.back() + 1.0));
    product *= g.k_series.back();
    g.k_product.push_back(product);
    scale *= half;
  }

  const std::size_t tail = levels / 2;
  g.f_upper = *std::max_element(g.scaled.begin() + static_cast<std::ptrdiff_t>(tail), g.scaled.end());
  g.f_lower = *std::min_element(g.scaled.begin() + static_cast<std::ptrdiff_t>(tail), g.scaled.end());

  bool exact = !series.count.empty() && series.count[0] == 1;
  u128 num = 1;
  u128 den = 1;
  for (std::size_t n = 0; exact && n + 1 < levels; ++n) {
    const u128 nn = series.count[n];
    const u128 grown = nn + series.branching[n];
    if (grown != series.count[n + 1]) exact = false;
    const u128 g1 = gcd128(num, nn);
    const u128 g2 = gcd128(grown, den);
    num = (num / g1) * (grown / g2);
    den = (den / g2) * (nn / g1);
    if (den != 1 || num != series.count[n + 1]) exact = false;
  }
  g.telescoping_exact = exact;
  for (std::size_t n = 0; n + 1 < levels; ++n) {
    g.telescoping_float_gap =
        std::max(g.telescoping_float_gap, std::abs(g.k_product[n] - g.scaled[n + 1]) / g.scaled[n + 1]);
  }
  return g;
}

GrowthDiagnostics growth_series(double x, const BetaParam& beta, int max_n, const EnumerationOptions& options) {
  return growth_from_counts(count_series(x, beta, max_n, options), beta);
}

GrowthDiagnostics growth_series(const AlgebraicValue& x, const BetaParam& beta, int max_n,
                                const EnumerationOptions& options) {
  return growth_from_counts(count_series(x, beta, max_n, options), beta);
}

EdgeMasses edge_masses(const EmpiricalMeasure& measure, const BetaParam& beta, double delta) {
  const double upper = beta.upper();
  const double total = measure.total_weight;
  return {measure.mass(0.0, delta, true, false) / total, measure.mass(upper - delta, upper, false, true) / total};
}

double tail_block_mass(double x, const BetaParam& beta, int n, const SymbolWord& block, const DensityGrid& density) {
  const auto fiber = fiber_distribution(x, beta, n + static_cast<int>(block.size()), density);
  double acc = 0.0;
  for (const auto& e : fiber.entries) {
    if (std::equal(block.digits().begin(), block.digits().end(),
                   e.word.digits().begin() + static_cast<std::ptrdiff_t>(n))) {
      acc += e.mass;
    }
  }
  return acc;
}

double sampled_product_integral(const BetaParam& beta, int n, std::size_t grid_points, unsigned threads) {
  if (grid_points == 0) throw DomainError("grid_points must be positive");
  const Interval support = beta.support();
  const double width = support.length() / static_cast<double>(grid_points);
  std::vector<double> values(grid_points);
  parallel_tasks(grid_points, threads, [&](std::size_t i) {
    const double x = support.lo + width * (static_cast<double>(i) + 0.5);
    EnumerationOptions opts;
    opts.max_depth = std::max(opts.max_depth, n + 1);
    const auto series = count_series(x, beta, n + 1, opts);
    values[i] = std::pow(beta.value() / 2.0, n + 1) * static_cast<double>(series.count.back());
  });
  double acc = 0.0;
  for (double v : values) acc += v;
  return acc * width;
}

std::vector<EquidistRow> equidist_table(double x, const BetaParam& beta, const std::vector<int>& depths,
                                        const DensityGrid& density, const EnumerationOptions& options) {
  std::vector<EquidistRow> rows;
  for (int n : depths) {
    const auto orbit = enumerate_orbit(x, beta, n, options);
    const auto mu = from_orbit(orbit);
    const auto nu = orbit_measure_conditional(x, beta, n, density);
    EquidistRow row;
    row.n = n;
    row.count = orbit.total;
    row.scaled = std::pow(beta.value() / 2.0, n) * static_cast<double>(orbit.total);
    row.ks_uniform = ks_distance(mu, beta.support());
    row.ks_nu = ks_distance(nu, density);
    row.w1_uniform = wasserstein1(mu, beta.support());
    row.k_n = beta.value() / 2.0 *
              (1.0 + static_cast<double>(orbit.switch_count(beta)) / static_cast<double>(orbit.total));
    row.edge = edge_masses(mu, beta);
    rows.push_back(row);
  }
  return rows;
}

void write_equidist_csv(std::ostream& out, const std::vector<EquidistRow>& rows) {
  out << "n,N_n,scaled_count,ks_uniform,ks_nu,w1_uniform,k_n,edge_mass_lo,edge_mass_hi\n";
  char buf[512];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%d,%llu,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", r.n,
                  static_cast<unsigned long long>(r.count), r.scaled, r.ks_uniform, r.ks_nu, r.w1_uniform, r.k_n,
                  r.edge.lo, r.edge.hi);
    out << buf;
  }
}

}  // namespace betalab
