#include "betalab/dynsys.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <random>

#include "betalab/parallel.hpp"

namespace betalab {

namespace {

double unit_draw(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

// Area of {(x, y) : x in [a, b), y in [y0, y1), y <= h(x)}.
double region_area(const DensityGrid& g, double a, double b, double y0, double y1) {
  double area = 0.0;
  const double w = g.cell_width();
  const auto first = static_cast<std::ptrdiff_t>(std::floor((a - g.support().lo) / w));
  const auto last = static_cast<std::ptrdiff_t>(std::ceil((b - g.support().lo) / w));
  for (std::ptrdiff_t k = std::max<std::ptrdiff_t>(first, 0);
       k < std::min<std::ptrdiff_t>(last, static_cast<std::ptrdiff_t>(g.cell_count())); ++k) {
    const auto j = static_cast<std::size_t>(k);
    const double overlap = std::min(b, g.cell_hi(j)) - std::max(a, g.cell_lo(j));
    if (overlap <= 0.0) continue;
    area += overlap * std::clamp(g.values()[j] - y0, 0.0, y1 - y0);
  }
  return area;
}

}  // namespace

PhaseSpace::PhaseSpace(DensityGrid density, BetaParam beta) : density_(std::move(density)), beta_(std::move(beta)) {
  tolerance_ = pointwise_budget(density_, bernoulli_system(beta_)) * std::max(1.0, 2.0 / beta_.value());
}

bool PhaseSpace::contains(const PhiPoint& p) const {
  if (!in_support(p.x, beta_)) return false;
  return p.y >= -tolerance_ && p.y <= height(p.x) + tolerance_;
}

double PhaseSpace::split(double x) const { return beta_.value() / 2.0 * height(beta_.value() * x); }

PhiStep phi_step(const PhiPoint& p, const PhaseSpace& space) {
  if (!space.contains(p)) throw DomainError("point lies outside X");
  const double b = space.beta().value();
  int digit = p.y <= space.split(p.x) ? 0 : 1;
  if (!in_support(b * p.x - digit, space.beta())) digit = 1 - digit;

  PhiStep out;
  out.digit = digit;
  out.point.x = std::clamp(b * p.x - digit, 0.0, space.beta().upper());
  double y = 2.0 * p.y / b - (digit == 1 ? space.height(b * p.x) : 0.0);
  const double top = space.height(out.point.x);
  out.overshoot = std::max({0.0, y - top, -y});
  out.point.y = std::clamp(y, 0.0, top);
  return out;
}

PhiOrbit phi_orbit(const PhiPoint& p, const PhaseSpace& space, int n) {
  if (n < 0) throw DomainError("step count must be nonnegative");
  PhiOrbit orbit;
  orbit.points.push_back(p);
  for (int k = 0; k < n; ++k) {
    const auto step = phi_step(orbit.points.back(), space);
    orbit.code.push_back(static_cast<unsigned>(step.digit));
    orbit.points.push_back(step.point);
    orbit.max_overshoot = std::max(orbit.max_overshoot, step.overshoot);
  }
  return orbit;
}

SymbolWord phi_code(const PhiPoint& p, const PhaseSpace& space, int n) { return phi_orbit(p, space, n).code; }

Interval fiber_interval(double x, const SymbolWord& word, const PhaseSpace& space) {
  if (!(space.height(x) > 0.0)) throw UndefinedFiberError("h(x) = 0; the fiber over x is empty");
  const double half = space.beta().value() / 2.0;
  // Unwind y = offset_k + (beta/2) y_{k+1} from the deepest level outward.
  std::vector<double> offsets;
  double y = x;
  for (auto d : word.digits()) {
    offsets.push_back(d == 1 ? space.split(y) : 0.0);
    y = apply_map(d, y, space.beta());
  }
  double lo = 0.0;
  double hi = space.height(y);
  for (auto it = offsets.rbegin(); it != offsets.rend(); ++it) {
    lo = *it + half * lo;
    hi = *it + half * hi;
  }
  return {lo, hi};
}

PhiHatPoint phi_hat_step(const PhiHatPoint& p, const PhaseSpace& space) {
  if (p.z < 0.0 || p.z > 1.0) throw DomainError("z must lie in [0, 1]");
  const auto step = phi_step({p.x, p.y}, space);
  return {step.point.x, step.point.y, p.z / 2.0 + step.digit / 2.0};
}

BranchAreas branch_areas(const PhaseSpace& space) {
  const auto& g = space.density();
  const double b = space.beta().value();
  // min(h(x), split(x)) is constant between grid edges and their preimages.
  std::vector<double> cuts;
  for (std::size_t j = 0; j <= g.cell_count(); ++j) {
    const double e = g.support().lo + g.cell_width() * static_cast<double>(j);
    cuts.push_back(e);
    cuts.push_back(e / b);
  }
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  BranchAreas areas;
  for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
    const double a = cuts[k];
    const double c = cuts[k + 1];
    if (a < g.support().lo || c > g.support().hi) continue;
    const double mid = 0.5 * (a + c);
    const double h = space.height(mid);
    const double lower = std::min(h, space.split(mid));
    areas.lower += (c - a) * lower;
    areas.upper += (c - a) * (h - lower);
  }
  return areas;
}

PreservationReport measure_preservation(const PhaseSpace& space, std::uint64_t sample_count, int steps,
                                        std::uint64_t seed, std::size_t bins, unsigned threads) {
  if (sample_count == 0) throw DomainError("sample count must be positive");
  if (bins == 0) throw DomainError("bin count must be positive");
  if (steps < 0) throw DomainError("step count must be nonnegative");
  constexpr std::size_t kBlocks = 64;
  const auto& g = space.density();
  const double upper = space.beta().upper();
  const double top = g.max_value();
  const double dx = upper / static_cast<double>(bins);
  const double dy = top / static_cast<double>(bins);

  struct Block {
    std::vector<std::uint64_t> counts;
    std::uint64_t leaked = 0;
  };
  std::vector<Block> blocks(kBlocks);
  parallel_tasks(kBlocks, threads, [&](std::size_t blk) {
    Block& out = blocks[blk];
    out.counts.assign(bins * bins, 0);
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(blk), 0x9e37u};
    std::mt19937_64 rng(seq);
    const std::uint64_t begin = sample_count * blk / kBlocks;
    const std::uint64_t end = sample_count * (blk + 1) / kBlocks;
    for (std::uint64_t s = begin; s < end; ++s) {
      PhiPoint p;
      do {
        p.x = unit_draw(rng) * upper;
        p.y = unit_draw(rng) * top;
      } while (p.y > space.height(p.x));
      bool leaked = false;
      for (int k = 0; k < steps; ++k) {
        const auto step = phi_step(p, space);
        leaked = leaked || step.overshoot > 0.0;
        p = step.point;
      }
      if (leaked) ++out.leaked;
      const auto i = std::min(static_cast<std::size_t>(p.x / dx), bins - 1);
      const auto j = std::min(static_cast<std::size_t>(p.y / dy), bins - 1);
      ++out.counts[i * bins + j];
    }
  });

  PreservationReport report;
  report.samples = sample_count;
  report.histogram = {bins, bins, {0.0, upper}, {0.0, top}, std::vector<std::uint64_t>(bins * bins, 0)};
  for (const auto& blk : blocks) {
    for (std::size_t k = 0; k < blk.counts.size(); ++k) report.histogram.counts[k] += blk.counts[k];
    report.leaked += blk.leaked;
  }

  std::vector<double> expected(bins * bins);
  double total_area = 0.0;
  for (std::size_t i = 0; i < bins; ++i) {
    for (std::size_t j = 0; j < bins; ++j) {
      const double a = region_area(g, dx * static_cast<double>(i), dx * static_cast<double>(i + 1),
                                   dy * static_cast<double>(j), dy * static_cast<double>(j + 1));
      expected[i * bins + j] = a;
      total_area += a;
    }
  }
  double tv = 0.0;
  const auto n = static_cast<double>(sample_count);
  for (std::size_t k = 0; k < expected.size(); ++k) {
    tv += std::abs(static_cast<double>(report.histogram.counts[k]) / n - expected[k] / total_area);
  }
  report.tv = tv / 2.0;
  return report;
}

double check_measure_preservation(const DensityGrid& density, const BetaParam& beta, std::uint64_t sample_count,
                                  int steps, std::uint64_t seed) {
  return measure_preservation(PhaseSpace(density, beta), sample_count, steps, seed).tv;
}

void write_histogram_csv(std::ostream& out, const Histogram2D& histogram) {
  out << "bin_x,bin_y,count\n";
  for (std::size_t i = 0; i < histogram.bins_x; ++i) {
    for (std::size_t j = 0; j < histogram.bins_y; ++j) out << i << ',' << j << ',' << histogram.at(i, j) << '\n';
  }
}

}  // namespace betalab
