#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "betalab/core_numerics.hpp"
#include "betalab/density.hpp"

namespace betalab {

struct PhiPoint {
  double x = 0.0;
  double y = 0.0;
};

/// X = {(x, y) : x in I_beta, 0 <= y <= h(x)} for a grid density h.
class PhaseSpace {
 public:
  PhaseSpace(DensityGrid density, BetaParam beta);

  const DensityGrid& density() const { return density_; }
  const BetaParam& beta() const { return beta_; }
  double height(double x) const { return density_.evaluate(x); }
  /// Slack on y when testing membership; derived from the grid's pointwise
  /// budget for the functional equation.
  double tolerance() const { return tolerance_; }
  bool contains(const PhiPoint& p) const;
  /// Threshold (beta/2) h(beta x) separating X_0 from X_1.
  double split(double x) const;

 private:
  DensityGrid density_;
  BetaParam beta_;
  double tolerance_ = 0.0;
};

struct PhiStep {
  PhiPoint point;
  int digit = 0;
  /// How far the unclamped y' exceeded h(x') (or fell below 0); the returned
  /// point is clamped back into X.
  double overshoot = 0.0;
};

PhiStep phi_step(const PhiPoint& p, const PhaseSpace& space);

struct PhiOrbit {
  SymbolWord code;
  std::vector<PhiPoint> points;  // points[k] = phi^k(p)
  double max_overshoot = 0.0;
};

SymbolWord phi_code(const PhiPoint& p, const PhaseSpace& space, int n);
PhiOrbit phi_orbit(const PhiPoint& p, const PhaseSpace& space, int n);

/// The part of the fiber {x} x [0, h(x)] coded by w.
Interval fiber_interval(double x, const SymbolWord& word, const PhaseSpace& space);

struct PhiHatPoint {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
};

/// phi on (x, y) and z -> z/2 + digit/2. Reading the binary digits of z
/// backwards undoes the step, which is the fat baker's direction.
PhiHatPoint phi_hat_step(const PhiHatPoint& p, const PhaseSpace& space);

struct BranchAreas {
  double lower = 0.0;  // Lebesgue measure of X_0
  double upper = 0.0;  // Lebesgue measure of X_1
};
BranchAreas branch_areas(const PhaseSpace& space);

struct Histogram2D {
  std::size_t bins_x = 0;
  std::size_t bins_y = 0;
  Interval x_range;
  Interval y_range;
  std::vector<std::uint64_t> counts;  // row-major in x

  std::uint64_t& at(std::size_t i, std::size_t j) { return counts[i * bins_y + j]; }
  std::uint64_t at(std::size_t i, std::size_t j) const { return counts[i * bins_y + j]; }
};

struct PreservationReport {
  double tv = 0.0;
  std::uint64_t samples = 0;
  /// Samples whose unclamped image left X at some step.
  std::uint64_t leaked = 0;
  Histogram2D histogram;
};

/// Samples uniformly in X by rejection from [0, 1/(beta-1)] x [0, max h],
/// applies phi `steps` times and compares the histogram with the exact
/// per-bin area of X. Sampling runs in fixed seeded blocks.
PreservationReport measure_preservation(const PhaseSpace& space, std::uint64_t sample_count, int steps,
                                        std::uint64_t seed, std::size_t bins = 64, unsigned threads = 1);
double check_measure_preservation(const DensityGrid& density, const BetaParam& beta, std::uint64_t sample_count,
                                  int steps, std::uint64_t seed);

void write_histogram_csv(std::ostream& out, const Histogram2D& histogram);

}  // namespace betalab
