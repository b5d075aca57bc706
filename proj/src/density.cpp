#include "betalab/density.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <random>

#include "betalab/parallel.hpp"

namespace betalab {

namespace {

// Adds `mass`, spread uniformly over [lo, hi), to cells of width w starting at
// origin. The last touched cell takes the remainder so the total is exact.
void deposit(std::vector<double>& out, double origin, double w, double lo, double hi, double mass) {
  const auto n = static_cast<std::ptrdiff_t>(out.size());
  auto clamp_index = [n](double t) {
    if (!(t >= 0.0)) return std::ptrdiff_t{0};
    const auto j = static_cast<std::ptrdiff_t>(t);
    return std::min(j, n - 1);
  };
  const std::ptrdiff_t j0 = clamp_index((lo - origin) / w);
  const std::ptrdiff_t j1 = clamp_index((hi - origin) / w);
  if (j0 == j1 || !(hi > lo)) {
    out[static_cast<std::size_t>(j0)] += mass;
    return;
  }
  double left = mass;
  const double span = hi - lo;
  for (std::ptrdiff_t j = j0; j < j1; ++j) {
    const double edge = origin + w * static_cast<double>(j + 1);
    const double start = std::max(lo, origin + w * static_cast<double>(j));
    const double part = mass * std::max(0.0, edge - start) / span;
    out[static_cast<std::size_t>(j)] += part;
    left -= part;
  }
  out[static_cast<std::size_t>(j1)] += std::max(0.0, left);
}

}  // namespace

Interval AffineSystem1D::hull() const {
  if (maps.empty()) throw DomainError("empty affine system");
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (const auto& m : maps) {
    if (!(m.ratio > 0.0 && m.ratio < 1.0)) throw DomainError("contraction ratio must lie in (0, 1)");
    const double fixed = m.translation / (1.0 - m.ratio);
    lo = std::min(lo, fixed);
    hi = std::max(hi, fixed);
  }
  return {lo, hi};
}

double AffineSystem1D::weight_sum() const {
  double s = 0.0;
  for (const auto& m : maps) s += m.weight;
  return s;
}

AffineSystem1D bernoulli_system(const BetaParam& beta) {
  const double r = 1.0 / beta.value();
  return AffineSystem1D{{{r, 0.0, 0.5}, {r, r, 0.5}}};
}

DensityGrid::DensityGrid(Interval support, std::vector<double> values)
    : support_(support), values_(std::move(values)) {
  if (values_.empty() || !std::has_single_bit(values_.size())) {
    throw DomainError("cell count must be a power of two");
  }
  if (!(support_.length() > 0.0)) throw DomainError("density support must have positive length");
  width_ = support_.length() / static_cast<double>(values_.size());
  for (double v : values_) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw DomainError("density values must be finite and nonnegative");
  }
  if (std::abs(total_mass() - 1.0) > 1e-9) throw DomainError("density must carry unit mass");
}

DensityGrid DensityGrid::uniform(Interval support, std::size_t cells) {
  return DensityGrid(support, std::vector<double>(cells, 1.0 / support.length()));
}

DensityGrid DensityGrid::from_masses(Interval support, std::span<const double> masses) {
  double total = 0.0;
  for (double m : masses) total += m;
  if (!(total > 0.0)) throw DomainError("cannot normalize a zero density");
  const double w = support.length() / static_cast<double>(masses.size());
  std::vector<double> values(masses.size());
  for (std::size_t i = 0; i < masses.size(); ++i) values[i] = masses[i] / (total * w);
  return DensityGrid(support, std::move(values));
}

double DensityGrid::total_mass() const {
  double s = 0.0;
  for (double v : values_) s += v;
  return s * width_;
}

std::ptrdiff_t DensityGrid::cell_index(double x) const {
  if (!(x >= support_.lo && x < support_.hi)) return -1;
  const auto i = static_cast<std::ptrdiff_t>((x - support_.lo) / width_);
  return std::min<std::ptrdiff_t>(i, static_cast<std::ptrdiff_t>(values_.size()) - 1);
}

double DensityGrid::evaluate(double x) const {
  const auto i = cell_index(x);
  return i < 0 ? 0.0 : values_[static_cast<std::size_t>(i)];
}

double DensityGrid::cdf(double x) const {
  if (x <= support_.lo) return 0.0;
  if (x >= support_.hi) return 1.0;
  const auto i = static_cast<std::size_t>(cell_index(x));
  double s = 0.0;
  for (std::size_t k = 0; k < i; ++k) s += values_[k];
  return std::min(1.0, s * width_ + values_[i] * (x - cell_lo(i)));
}

double DensityGrid::max_value() const { return *std::max_element(values_.begin(), values_.end()); }

double DensityGrid::max_jump() const {
  double jump = std::max(values_.front(), values_.back());
  for (std::size_t i = 1; i < values_.size(); ++i) jump = std::max(jump, std::abs(values_[i] - values_[i - 1]));
  return jump;
}

DensityGrid transfer_step(const DensityGrid& grid, const AffineSystem1D& system, unsigned threads) {
  const std::size_t n = grid.cell_count();
  const double w = grid.cell_width();
  const double origin = grid.support().lo;
  const auto values = grid.values();
  // Fixed chunking keeps the summation order, and so the bits, independent of threads.
  const std::size_t chunks = std::min<std::size_t>(8, n);

  std::vector<std::vector<double>> partial(chunks, std::vector<double>(n, 0.0));
  parallel_tasks(chunks, threads, [&](std::size_t c) {
    auto& out = partial[c];
    const std::size_t begin = n * c / chunks;
    const std::size_t end = n * (c + 1) / chunks;
    for (std::size_t k = begin; k < end; ++k) {
      const double mass = values[k] * w;
      if (mass == 0.0) continue;
      const double a = grid.cell_lo(k);
      const double b = grid.cell_hi(k);
      for (const auto& m : system.maps) deposit(out, origin, w, m.apply(a), m.apply(b), mass * m.weight);
    }
  });
  std::vector<double> out = std::move(partial.front());
  for (std::size_t c = 1; c < chunks; ++c) {
    for (std::size_t j = 0; j < n; ++j) out[j] += partial[c][j];
  }
  for (double& v : out) v /= w;
  return DensityGrid(grid.support(), std::move(out));
}

DensityGrid ulam_step(const DensityGrid& grid, const BetaParam& beta) {
  return transfer_step(grid, bernoulli_system(beta));
}

double functional_residual(const DensityGrid& grid, const AffineSystem1D& system) {
  double acc = 0.0;
  const auto values = grid.values();
  for (std::size_t j = 0; j < grid.cell_count(); ++j) {
    const double mid = grid.cell_mid(j);
    double rhs = 0.0;
    for (const auto& m : system.maps) rhs += m.weight / m.ratio * grid.evaluate(m.invert(mid));
    acc += std::abs(values[j] - rhs);
  }
  return acc * grid.cell_width();
}

double fixed_point_gap(const DensityGrid& grid, const AffineSystem1D& system) {
  const DensityGrid next = transfer_step(grid, system);
  double gap = 0.0;
  for (std::size_t j = 0; j < grid.cell_count(); ++j) gap = std::max(gap, std::abs(grid.values()[j] - next.values()[j]));
  return gap;
}

double pointwise_budget(const DensityGrid& grid, const AffineSystem1D& system) {
  // A point of T_i(C_j) sees one of at most ceil(1/r_i) + 1 neighbouring
  // cells, while the discrete fixed point averages over all of them.
  double factor = 0.0;
  for (const auto& m : system.maps) factor += m.weight / m.ratio * std::ceil(1.0 / m.ratio);
  return factor * grid.max_jump() + fixed_point_gap(grid, system);
}

DensitySolution solve_invariant_density(const AffineSystem1D& system, std::size_t cells,
                                        const SolveOptions& options) {
  if (cells < 256) throw DomainError("at least 2^8 cells are required");
  if (!(options.tol > 0.0)) throw DomainError("tolerance must be positive");
  const Interval hull = system.hull();
  DensityGrid g = DensityGrid::uniform(hull, cells);
  DensityDiagnostics diag;
  for (int it = 1; it <= options.max_iter; ++it) {
    DensityGrid next = transfer_step(g, system, options.threads);
    double diff = 0.0;
    for (std::size_t j = 0; j < cells; ++j) diff += std::abs(next.values()[j] - g.values()[j]);
    diff *= g.cell_width();
    g = std::move(next);
    diag.iterations = it;
    diag.last_step_l1 = diff;
    if (diff < options.tol) {
      diag.converged = true;
      break;
    }
  }
  diag.l1_residual = functional_residual(g, system);
  diag.sup_estimate = g.max_value();
  diag.max_jump = g.max_jump();
  diag.fixed_point_gap = fixed_point_gap(g, system);
  diag.pointwise_budget = pointwise_budget(g, system);
  if (options.refinement_check) {
    SolveOptions finer = options;
    finer.refinement_check = false;
    const auto refined = solve_invariant_density(system, cells * 2, finer);
    diag.refinement_stability = std::abs(refined.diagnostics.sup_estimate - diag.sup_estimate) / diag.sup_estimate;
  }
  return {std::move(g), diag};
}

DensitySolution solve_density(const BetaParam& beta, std::size_t cells, double tol, int max_iter,
                              bool refinement_check) {
  SolveOptions options;
  options.tol = tol;
  options.max_iter = max_iter;
  options.refinement_check = refinement_check;
  return solve_invariant_density(bernoulli_system(beta), cells, options);
}

int minimal_truncation(const BetaParam& beta, std::size_t cells) {
  const double width = beta.upper() / static_cast<double>(cells);
  const double b = beta.value();
  int L = 1;
  while (std::pow(b, -L) / (b - 1.0) >= width) ++L;
  return L;
}

SampledDensity sample_density(const BetaParam& beta, std::uint64_t sample_count, int truncation,
                              std::size_t cells, std::uint64_t seed, unsigned threads) {
  if (truncation < minimal_truncation(beta, cells)) {
    throw DomainError("truncation length leaves a tail wider than one cell");
  }
  if (sample_count == 0) throw DomainError("sample count must be positive");
  constexpr std::size_t kBlocks = 64;
  const double inv_beta = 1.0 / beta.value();
  const double upper = beta.upper();
  const double width = upper / static_cast<double>(cells);
  const double tol = beta.tolerance();

  struct Block {
    std::vector<std::uint64_t> counts;
    long double sum = 0.0L;
    long double sum_sq = 0.0L;
    std::uint64_t outside = 0;
  };
  std::vector<Block> blocks(kBlocks);
  parallel_tasks(kBlocks, threads, [&](std::size_t blk) {
    Block& out = blocks[blk];
    out.counts.assign(cells, 0);
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(blk)};
    std::mt19937_64 rng(seq);
    const std::uint64_t begin = sample_count * blk / kBlocks;
    const std::uint64_t end = sample_count * (blk + 1) / kBlocks;
    for (std::uint64_t s = begin; s < end; ++s) {
      // Horner from the deepest digit: v = (v + a_i) / beta.
      double v = 0.0;
      int remaining = truncation;
      while (remaining > 0) {
        std::uint64_t bits = rng();
        const int take = std::min(remaining, 64);
        for (int i = 0; i < take; ++i) {
          v = (v + static_cast<double>(bits & 1u)) * inv_beta;
          bits >>= 1;
        }
        remaining -= take;
      }
      if (v < -tol || v > upper + tol) ++out.outside;
      auto idx = static_cast<std::ptrdiff_t>(v / width);
      idx = std::clamp<std::ptrdiff_t>(idx, 0, static_cast<std::ptrdiff_t>(cells) - 1);
      ++out.counts[static_cast<std::size_t>(idx)];
      out.sum += v;
      out.sum_sq += static_cast<long double>(v) * v;
    }
  });

  std::vector<double> masses(cells, 0.0);
  long double sum = 0.0L;
  long double sum_sq = 0.0L;
  SampledDensity result;
  for (const auto& blk : blocks) {
    for (std::size_t j = 0; j < cells; ++j) masses[j] += static_cast<double>(blk.counts[j]);
    sum += blk.sum;
    sum_sq += blk.sum_sq;
    result.outside_support += blk.outside;
  }
  const auto n = static_cast<long double>(sample_count);
  result.samples = sample_count;
  result.mean = static_cast<double>(sum / n);
  result.variance = static_cast<double>(sum_sq / n - (sum / n) * (sum / n));
  result.grid = DensityGrid::from_masses(beta.support(), masses);
  return result;
}

double evaluate_density(const DensityGrid& grid, double x) { return grid.evaluate(x); }

DensityGrid rebin(const DensityGrid& grid, Interval support, std::size_t cells) {
  std::vector<double> masses(cells, 0.0);
  const double w = support.length() / static_cast<double>(cells);
  for (std::size_t k = 0; k < grid.cell_count(); ++k) {
    const double mass = grid.values()[k] * grid.cell_width();
    if (mass == 0.0) continue;
    const double lo = std::max(grid.cell_lo(k), support.lo);
    const double hi = std::min(grid.cell_hi(k), support.hi);
    if (!(hi > lo)) continue;
    deposit(masses, support.lo, w, lo, hi, mass * (hi - lo) / grid.cell_width());
  }
  return DensityGrid::from_masses(support, masses);
}

double normalized_density(const DensityGrid& grid, double x) { return grid.evaluate(x) * grid.support().length(); }

double l1_distance(const DensityGrid& a, const DensityGrid& b) {
  std::vector<double> edges;
  edges.reserve(a.cell_count() + b.cell_count() + 2);
  for (std::size_t i = 0; i <= a.cell_count(); ++i) edges.push_back(a.support().lo + a.cell_width() * static_cast<double>(i));
  for (std::size_t i = 0; i <= b.cell_count(); ++i) edges.push_back(b.support().lo + b.cell_width() * static_cast<double>(i));
  std::sort(edges.begin(), edges.end());
  double acc = 0.0;
  for (std::size_t i = 1; i < edges.size(); ++i) {
    const double len = edges[i] - edges[i - 1];
    if (!(len > 0.0)) continue;
    const double mid = 0.5 * (edges[i] + edges[i - 1]);
    acc += std::abs(a.evaluate(mid) - b.evaluate(mid)) * len;
  }
  return acc;
}

DensityGrid reflect(const DensityGrid& grid) {
  std::vector<double> values(grid.values().rbegin(), grid.values().rend());
  return DensityGrid(grid.support(), std::move(values));
}

void write_density_csv(std::ostream& out, const DensityGrid& grid) {
  out << "cell_lo,cell_hi,value\n";
  char buf[96];
  for (std::size_t i = 0; i < grid.cell_count(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", grid.cell_lo(i), grid.cell_hi(i), grid.values()[i]);
    out << buf;
  }
}

}  // namespace betalab
