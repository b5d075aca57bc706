#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "betalab/core_numerics.hpp"
#include "betalab/density.hpp"

namespace betalab {

using Vec = std::vector<double>;

struct Box {
  Vec lo;
  Vec hi;

  double diameter() const;
};

/// S_i(p) = ratio * p + translation.
struct IfsMap {
  double ratio = 0.5;
  Vec translation;
};

struct IfsSpec {
  int dimension = 2;
  std::vector<IfsMap> maps;
  Box open_set;

  /// Throws DomainError on bad dimensions or ratios, and when the images of
  /// the open-set box leave it or overlap with positive volume.
  void validate() const;
  /// Bounding box of the attractor: per axis, the hull of the fixed points.
  Box attractor_box() const;
  bool uniform_ratio() const;
};

/// Line format, '#' starts a comment:
///   dimension 2
///   map <ratio> <t_1> ... <t_d>
///   open_set <lo_1> ... <lo_d> <hi_1> ... <hi_d>
/// Numbers may be written as fractions such as 1/3.
IfsSpec parse_ifs(std::istream& in);
IfsSpec load_ifs(const std::string& path);

/// "sierpinski_carpet" (alias "carpet") or "menger_sponge" (alias "sponge").
IfsSpec preset(const std::string& name);
std::vector<std::string> preset_names();

/// Root of sum_i ratio_i^s = 1 by bisection.
double moran_dimension(const IfsSpec& ifs);

/// 2-D: (cos t, sin t). 3-D: (cos t1 cos t2, sin t1 cos t2, sin t2).
Vec direction(int dimension, const std::vector<double>& theta);

struct ProjectionSpec {
  std::vector<double> theta;
  Vec u;
  double s = 0.0;
  /// p -> ratio_i p + <d_i, u> with weight ratio_i^s.
  AffineSystem1D system;
  Interval hull;
};

ProjectionSpec project_ifs(const IfsSpec& ifs, const std::vector<double>& theta);

DensitySolution solve_projected_density(const ProjectionSpec& proj, std::size_t cells,
                                        const SolveOptions& options = {});

/// Histogram of pi_theta of i.i.d. attractor samples. Each sample applies a
/// random word of the given length (maps drawn with weights ratio^s) to the
/// first fixed point, innermost map first.
DensityGrid chaos_game_projection(const IfsSpec& ifs, const ProjectionSpec& proj, std::uint64_t samples,
                                  std::size_t cells, std::uint64_t seed, int word_length = 0, unsigned threads = 1);

struct SliceCylinder {
  /// a_1 ... a_n with cylinder S_{a_1} o ... o S_{a_n}(E).
  SymbolWord word;
  Interval hull;  // projection hull of the cylinder copy
  double diameter_bound = 0.0;
  double image = 0.0;  // T_w(x) = T_{a_n} o ... o T_{a_1}(x)
  double mass = 0.0;
};

/// Prefix-pruned enumeration of depth-n words whose projected hull contains
/// x; internal nodes are visited in lexicographic order.
class SliceGeometry {
 public:
  SliceGeometry(IfsSpec ifs, const std::vector<double>& theta);

  const IfsSpec& ifs() const { return ifs_; }
  const ProjectionSpec& projection() const { return proj_; }
  double attractor_diameter() const { return diameter_; }
  const Box& box() const { return box_; }

  std::vector<SliceCylinder> cylinders(double x, int depth) const;
  /// Diameter of the union of the cylinder boxes cut by the slice hyperplane.
  double slice_diameter(double x, const std::vector<SliceCylinder>& cylinders) const;
  double slice_diameter(double x, int depth) const;
  /// Fraction of admissible depth-(n-1) nodes with no admissible child.
  double dead_end_fraction(double x, int depth) const;

 private:
  bool admissible(double image) const;
  Box cylinder_box(const SymbolWord& word) const;

  IfsSpec ifs_;
  ProjectionSpec proj_;
  Box box_;
  double diameter_ = 0.0;
  double tol_ = 0.0;
  Vec basis1_;
  Vec basis2_;
};

std::vector<SliceCylinder> enumerate_slice_cylinders(const SliceGeometry& geometry, double x, int depth);

/// (prod ratio_{a_k})^{s-1} h(T_w x) / h(x).
double slice_cylinder_mass(const SymbolWord& word, double x, const ProjectionSpec& proj, const DensityGrid& h);

struct SliceCodingReport {
  struct Sample {
    double x = 0.0;
    double diameter = 0.0;
    bool empty = false;
    bool single_first_level = false;
    std::vector<unsigned> first_letters;
  };
  std::vector<Sample> samples;
  /// Smallest diameter among slices not inside one first-level cylinder.
  double delta = 0.0;
  /// Non-empty slices that are neither inside one first-level cylinder nor
  /// thicker than the depth resolution.
  std::vector<double> violations;
  double resolution = 0.0;
};

SliceCodingReport check_slice_coding(const SliceGeometry& geometry, const std::vector<double>& x_samples, int depth);

/// 1.1 * max h(x) / |E_x|^(s-1) over samples with |E_x| >= delta.
double estimate_ratio_constant(const SliceGeometry& geometry, const DensityGrid& h, double delta,
                               const std::vector<double>& x_samples, int depth);

double slice_lower_bound(double x, const DensityGrid& h, double c);

/// sum over admissible depth-n words of (ratio_w |E|)^(s-1).
double slice_cover_sum(const SliceGeometry& geometry, double x, int depth);

struct MarstrandReport {
  double lower_integral = 0.0;  // Riemann sum of h(x)/C
  double lower_exact = 0.0;     // 1/C
  double upper_estimate = 0.0;  // sum over depth-n words of (ratio_w |E|)^s
  int depth = 0;
  bool consistent = false;
};

MarstrandReport marstrand_report(const SliceGeometry& geometry, const DensityGrid& h, double c,
                                 const std::vector<double>& x_grid, int depth);

/// Least-squares K with cover sums ~ K h(x) over the grid.
double fit_ratio_k(const std::vector<double>& cover_sums, const std::vector<double>& densities);

struct SliceReport {
  std::vector<double> theta;
  double x = 0.0;
  int depth = 0;
  std::vector<SliceCylinder> cylinders;
  double mass_sum = 0.0;
  double diameter_estimate = 0.0;
  double density = 0.0;
  double lower_bound = 0.0;
  double cover_sum = 0.0;
  bool single_first_level = false;
  double dead_end_fraction = 0.0;
};

SliceReport slice_report(const SliceGeometry& geometry, const DensityGrid& h, double c, double x, int depth);

/// The squared-ratio systems carrying the odd and even digit positions:
/// (ratio^2, t_i) and (ratio^2, ratio * t_i).
AffineSystem1D odd_system(const ProjectionSpec& proj);
AffineSystem1D even_system(const ProjectionSpec& proj);

/// nu_theta as the convolution of the odd- and even-position measures,
/// returned on `cells` cells over the projected hull.
DensityGrid odd_even_convolution(const IfsSpec& ifs, const std::vector<double>& theta, std::size_t cells,
                                 const SolveOptions& options = {});

/// Discrete convolution of two densities: pairs of cells spread their mass
/// half and half over two output cells of the common width.
DensityGrid convolve(const DensityGrid& a, const DensityGrid& b, Interval support, std::size_t cells);

}  // namespace betalab
