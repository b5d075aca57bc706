#include "betalab/fractal_slicer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <random>
#include <sstream>

#include "betalab/parallel.hpp"

namespace betalab {

namespace {

double dot(const Vec& a, const Vec& b) {
  double acc = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) acc += a[k] * b[k];
  return acc;
}

Vec normalized(Vec v) {
  const double n = std::sqrt(dot(v, v));
  for (auto& c : v) c /= n;
  return v;
}

double parse_number(const std::string& token) {
  const auto slash = token.find('/');
  std::size_t used = 0;
  if (slash == std::string::npos) {
    const double v = std::stod(token, &used);
    if (used != token.size()) throw std::invalid_argument(token);
    return v;
  }
  const std::string num = token.substr(0, slash);
  const std::string den = token.substr(slash + 1);
  std::size_t used_den = 0;
  const double a = std::stod(num, &used);
  const double b = std::stod(den, &used_den);
  if (used != num.size() || used_den != den.size() || b == 0.0) throw std::invalid_argument(token);
  return a / b;
}

// Spreads masses of cells [lo + k w, lo + (k+1) w) over destination cells by
// overlap, treating each source cell as uniform.
std::vector<double> transfer_masses(std::span<const double> masses, double lo, double w, double dst_lo, double dst_w,
                                    std::size_t dst_count) {
  std::vector<double> out(dst_count, 0.0);
  const auto last = static_cast<std::ptrdiff_t>(dst_count) - 1;
  for (std::size_t k = 0; k < masses.size(); ++k) {
    if (masses[k] == 0.0) continue;
    const double a = lo + w * static_cast<double>(k);
    const double b = a + w;
    auto first = static_cast<std::ptrdiff_t>(std::floor((a - dst_lo) / dst_w));
    auto stop = static_cast<std::ptrdiff_t>(std::floor((b - dst_lo) / dst_w));
    first = std::clamp<std::ptrdiff_t>(first, 0, last);
    stop = std::clamp<std::ptrdiff_t>(stop, 0, last);
    if (first == stop) {
      out[static_cast<std::size_t>(first)] += masses[k];
      continue;
    }
    for (std::ptrdiff_t j = first; j <= stop; ++j) {
      const double c = j == 0 ? a : std::max(a, dst_lo + dst_w * static_cast<double>(j));
      const double d = j == last ? b : std::min(b, dst_lo + dst_w * static_cast<double>(j + 1));
      if (d > c) out[static_cast<std::size_t>(j)] += masses[k] * (d - c) / w;
    }
  }
  return out;
}

std::vector<double> grid_masses(const DensityGrid& g) {
  std::vector<double> m(g.values().begin(), g.values().end());
  for (auto& v : m) v *= g.cell_width();
  return m;
}

struct Point2 {
  double a;
  double b;
};

double cross(const Point2& o, const Point2& p, const Point2& q) {
  return (p.a - o.a) * (q.b - o.b) - (p.b - o.b) * (q.a - o.a);
}

double hull_diameter(std::vector<Point2> pts) {
  if (pts.size() < 2) return 0.0;
  std::sort(pts.begin(), pts.end(), [](const Point2& l, const Point2& r) { return l.a < r.a || (l.a == r.a && l.b < r.b); });
  std::vector<Point2> hull(2 * pts.size());
  std::size_t k = 0;
  for (const auto& p : pts) {
    while (k >= 2 && cross(hull[k - 2], hull[k - 1], p) <= 0.0) --k;
    hull[k++] = p;
  }
  for (std::size_t i = pts.size() - 1, t = k + 1; i-- > 0;) {
    while (k >= t && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0.0) --k;
    hull[k++] = pts[i];
  }
  hull.resize(k > 1 ? k - 1 : k);
  double best = 0.0;
  for (std::size_t i = 0; i < hull.size(); ++i) {
    for (std::size_t j = i + 1; j < hull.size(); ++j) {
      best = std::max(best, std::hypot(hull[i].a - hull[j].a, hull[i].b - hull[j].b));
    }
  }
  return best;
}

}  // namespace

double Box::diameter() const {
  double acc = 0.0;
  for (std::size_t k = 0; k < lo.size(); ++k) acc += (hi[k] - lo[k]) * (hi[k] - lo[k]);
  return std::sqrt(acc);
}

void IfsSpec::validate() const {
  if (dimension != 2 && dimension != 3) throw DomainError("dimension must be 2 or 3");
  if (maps.empty()) throw DomainError("IFS needs at least one map");
  const auto d = static_cast<std::size_t>(dimension);
  for (const auto& m : maps) {
    if (!(m.ratio > 0.0 && m.ratio < 1.0)) throw DomainError("ratios must lie in (0, 1)");
    if (m.translation.size() != d) throw DomainError("translation has the wrong dimension");
  }
  if (open_set.lo.size() != d || open_set.hi.size() != d) throw DomainError("open_set has the wrong dimension");
  for (std::size_t k = 0; k < d; ++k) {
    if (!(open_set.lo[k] < open_set.hi[k])) throw DomainError("open_set box is empty");
  }
  const double tol = 1e-12 * (1.0 + open_set.diameter());
  auto image = [&](const IfsMap& m) {
    Box b{Vec(d), Vec(d)};
    for (std::size_t k = 0; k < d; ++k) {
      b.lo[k] = m.ratio * open_set.lo[k] + m.translation[k];
      b.hi[k] = m.ratio * open_set.hi[k] + m.translation[k];
    }
    return b;
  };
  std::vector<Box> images;
  for (const auto& m : maps) {
    images.push_back(image(m));
    for (std::size_t k = 0; k < d; ++k) {
      if (images.back().lo[k] < open_set.lo[k] - tol || images.back().hi[k] > open_set.hi[k] + tol) {
        throw DomainError("a map sends the open set outside itself");
      }
    }
  }
  for (std::size_t i = 0; i < images.size(); ++i) {
    for (std::size_t j = i + 1; j < images.size(); ++j) {
      bool separated = false;
      for (std::size_t k = 0; k < d && !separated; ++k) {
        separated = std::min(images[i].hi[k], images[j].hi[k]) - std::max(images[i].lo[k], images[j].lo[k]) <= tol;
      }
      if (!separated) throw DomainError("images of the open set overlap");
    }
  }
}

Box IfsSpec::attractor_box() const {
  const auto d = static_cast<std::size_t>(dimension);
  Box b{Vec(d, INFINITY), Vec(d, -INFINITY)};
  for (const auto& m : maps) {
    for (std::size_t k = 0; k < d; ++k) {
      const double fixed = m.translation[k] / (1.0 - m.ratio);
      b.lo[k] = std::min(b.lo[k], fixed);
      b.hi[k] = std::max(b.hi[k], fixed);
    }
  }
  return b;
}

bool IfsSpec::uniform_ratio() const {
  return std::all_of(maps.begin(), maps.end(), [&](const IfsMap& m) { return m.ratio == maps.front().ratio; });
}

IfsSpec parse_ifs(std::istream& in) {
  IfsSpec ifs;
  ifs.dimension = 0;
  bool have_open_set = false;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream fields(line);
    std::string key;
    if (!(fields >> key)) continue;
    std::vector<double> values;
    std::string token;
    try {
      while (fields >> token) values.push_back(parse_number(token));
    } catch (const std::exception&) {
      throw DomainError("line " + std::to_string(line_no) + ": bad number '" + token + "'");
    }
    const auto d = static_cast<std::size_t>(ifs.dimension);
    if (key == "dimension") {
      if (values.size() != 1) throw DomainError("line " + std::to_string(line_no) + ": dimension takes one value");
      ifs.dimension = static_cast<int>(values[0]);
      if (ifs.dimension != 2 && ifs.dimension != 3) throw DomainError("dimension must be 2 or 3");
    } else if (key == "map") {
      if (d == 0) throw DomainError("line " + std::to_string(line_no) + ": map before dimension");
      if (values.size() != d + 1) throw DomainError("line " + std::to_string(line_no) + ": map needs ratio and translation");
      ifs.maps.push_back({values[0], Vec(values.begin() + 1, values.end())});
    } else if (key == "open_set") {
      if (d == 0) throw DomainError("line " + std::to_string(line_no) + ": open_set before dimension");
      if (values.size() != 2 * d) throw DomainError("line " + std::to_string(line_no) + ": open_set needs lo and hi corners");
      ifs.open_set = {Vec(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(d)),
                      Vec(values.begin() + static_cast<std::ptrdiff_t>(d), values.end())};
      have_open_set = true;
    } else {
      throw DomainError("line " + std::to_string(line_no) + ": unknown key '" + key + "'");
    }
  }
  if (ifs.dimension == 0) throw DomainError("missing dimension line");
  if (!have_open_set) throw DomainError("missing open_set line");
  ifs.validate();
  return ifs;
}

IfsSpec load_ifs(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DomainError("cannot open IFS file " + path);
  return parse_ifs(in);
}

IfsSpec preset(const std::string& name) {
  IfsSpec ifs;
  if (name == "sierpinski_carpet" || name == "carpet") {
    ifs.dimension = 2;
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) {
        if (i == 1 && j == 1) continue;
        ifs.maps.push_back({1.0 / 3.0, {i / 3.0, j / 3.0}});
      }
    }
    ifs.open_set = {{0.0, 0.0}, {1.0, 1.0}};
  } else if (name == "menger_sponge" || name == "sponge") {
    ifs.dimension = 3;
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) {
        for (int k = 0; k < 3; ++k) {
          if ((i == 1) + (j == 1) + (k == 1) >= 2) continue;
          ifs.maps.push_back({1.0 / 3.0, {i / 3.0, j / 3.0, k / 3.0}});
        }
      }
    }
    ifs.open_set = {{0.0, 0.0, 0.0}, {1.0, 1.0, 1.0}};
  } else {
    throw DomainError("unknown preset '" + name + "'");
  }
  return ifs;
}

std::vector<std::string> preset_names() { return {"sierpinski_carpet", "menger_sponge"}; }

double moran_dimension(const IfsSpec& ifs) {
  if (ifs.maps.size() < 2) return 0.0;
  auto excess = [&](double s) {
    double acc = 0.0;
    for (const auto& m : ifs.maps) acc += std::pow(m.ratio, s);
    return acc - 1.0;
  };
  double lo = 0.0;
  double hi = 1.0;
  while (excess(hi) > 0.0) hi *= 2.0;
  while (hi - lo > 1e-13 * std::max(1.0, hi)) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    (excess(mid) > 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

Vec direction(int dimension, const std::vector<double>& theta) {
  if (dimension == 2) {
    if (theta.size() != 1) throw DomainError("2-D directions take one angle");
    return {std::cos(theta[0]), std::sin(theta[0])};
  }
  if (dimension == 3) {
    if (theta.size() != 2) throw DomainError("3-D directions take two angles");
    return {std::cos(theta[0]) * std::cos(theta[1]), std::sin(theta[0]) * std::cos(theta[1]), std::sin(theta[1])};
  }
  throw DomainError("dimension must be 2 or 3");
}

ProjectionSpec project_ifs(const IfsSpec& ifs, const std::vector<double>& theta) {
  ifs.validate();
  ProjectionSpec proj;
  proj.theta = theta;
  proj.u = direction(ifs.dimension, theta);
  proj.s = moran_dimension(ifs);
  for (const auto& m : ifs.maps) {
    proj.system.maps.push_back({m.ratio, dot(m.translation, proj.u), std::pow(m.ratio, proj.s)});
  }
  proj.hull = proj.system.hull();
  return proj;
}

DensitySolution solve_projected_density(const ProjectionSpec& proj, std::size_t cells, const SolveOptions& options) {
  return solve_invariant_density(proj.system, cells, options);
}

DensityGrid chaos_game_projection(const IfsSpec& ifs, const ProjectionSpec& proj, std::uint64_t samples,
                                  std::size_t cells, std::uint64_t seed, int word_length, unsigned threads) {
  if (samples == 0) throw DomainError("sample count must be positive");
  const auto d = static_cast<std::size_t>(ifs.dimension);
  double ratio_max = 0.0;
  for (const auto& m : ifs.maps) ratio_max = std::max(ratio_max, m.ratio);
  const double diameter = ifs.attractor_box().diameter();
  const double width = proj.hull.length() / static_cast<double>(cells);
  if (word_length <= 0) {
    word_length = static_cast<int>(std::ceil(std::log(1e-3 * width / diameter) / std::log(ratio_max)));
    word_length = std::max(word_length, 1);
  }
  std::vector<double> cumulative;
  double acc = 0.0;
  for (const auto& m : proj.system.maps) cumulative.push_back(acc += m.weight);
  for (auto& c : cumulative) c /= acc;
  cumulative.back() = 1.0;
  Vec start(d);
  for (std::size_t k = 0; k < d; ++k) start[k] = ifs.maps[0].translation[k] / (1.0 - ifs.maps[0].ratio);

  constexpr std::size_t kBlocks = 64;
  std::vector<std::vector<double>> counts(kBlocks);
  parallel_tasks(kBlocks, threads, [&](std::size_t blk) {
    auto& local = counts[blk];
    local.assign(cells, 0.0);
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(blk), 0xc4a05u};
    std::mt19937_64 rng(seq);
    const std::uint64_t begin = samples * blk / kBlocks;
    const std::uint64_t end = samples * (blk + 1) / kBlocks;
    Vec p(d);
    for (std::uint64_t n = begin; n < end; ++n) {
      p = start;
      for (int k = 0; k < word_length; ++k) {
        const double r = static_cast<double>(rng() >> 11) * 0x1.0p-53;
        const auto i = static_cast<std::size_t>(std::upper_bound(cumulative.begin(), cumulative.end(), r) -
                                                cumulative.begin());
        const auto& m = ifs.maps[std::min(i, ifs.maps.size() - 1)];
        for (std::size_t c = 0; c < d; ++c) p[c] = m.ratio * p[c] + m.translation[c];
      }
      auto idx = static_cast<std::ptrdiff_t>(std::floor((dot(p, proj.u) - proj.hull.lo) / width));
      idx = std::clamp<std::ptrdiff_t>(idx, 0, static_cast<std::ptrdiff_t>(cells) - 1);
      local[static_cast<std::size_t>(idx)] += 1.0;
    }
  });
  std::vector<double> masses(cells, 0.0);
  for (const auto& local : counts) {
    for (std::size_t j = 0; j < cells; ++j) masses[j] += local[j];
  }
  return DensityGrid::from_masses(proj.hull, masses);
}

SliceGeometry::SliceGeometry(IfsSpec ifs, const std::vector<double>& theta)
    : ifs_(std::move(ifs)), proj_(project_ifs(ifs_, theta)), box_(ifs_.attractor_box()) {
  diameter_ = box_.diameter();
  tol_ = 1e-9 * std::max(proj_.hull.length(), 1e-300);
  const Vec& u = proj_.u;
  if (ifs_.dimension == 2) {
    basis1_ = {-u[1], u[0]};
  } else {
    std::size_t k = 0;
    for (std::size_t c = 1; c < 3; ++c) {
      if (std::abs(u[c]) < std::abs(u[k])) k = c;
    }
    Vec e(3, 0.0);
    e[k] = 1.0;
    const double along = dot(e, u);
    for (std::size_t c = 0; c < 3; ++c) e[c] -= along * u[c];
    basis1_ = normalized(e);
    basis2_ = {u[1] * basis1_[2] - u[2] * basis1_[1], u[2] * basis1_[0] - u[0] * basis1_[2],
               u[0] * basis1_[1] - u[1] * basis1_[0]};
  }
}

bool SliceGeometry::admissible(double image) const {
  return image >= proj_.hull.lo - tol_ && image <= proj_.hull.hi + tol_;
}

std::vector<SliceCylinder> SliceGeometry::cylinders(double x, int depth) const {
  if (depth < 0) throw DomainError("depth must be nonnegative");
  std::vector<SliceCylinder> out;
  if (!admissible(x)) return out;
  const auto alphabet = static_cast<unsigned>(std::max<std::size_t>(ifs_.maps.size(), 2));
  struct Frame {
    std::vector<std::uint8_t> word;
    double image;
    double ratio;
    double shift;
  };
  std::vector<Frame> stack;
  stack.push_back({{}, x, 1.0, 0.0});
  const auto& maps = proj_.system.maps;
  while (!stack.empty()) {
    Frame f = std::move(stack.back());
    stack.pop_back();
    if (static_cast<int>(f.word.size()) == depth) {
      SliceCylinder c;
      c.hull = {f.ratio * proj_.hull.lo + f.shift, f.ratio * proj_.hull.hi + f.shift};
      c.diameter_bound = f.ratio * diameter_;
      c.image = f.image;
      c.word = SymbolWord(std::move(f.word), alphabet);
      out.push_back(std::move(c));
      continue;
    }
    for (std::size_t i = maps.size(); i-- > 0;) {
      const double image = maps[i].invert(f.image);
      if (!admissible(image)) continue;
      Frame child{f.word, image, f.ratio * maps[i].ratio, f.shift + f.ratio * maps[i].translation};
      child.word.push_back(static_cast<std::uint8_t>(i));
      stack.push_back(std::move(child));
    }
  }
  return out;
}

Box SliceGeometry::cylinder_box(const SymbolWord& word) const {
  const auto d = static_cast<std::size_t>(ifs_.dimension);
  Vec shift(d, 0.0);
  double ratio = 1.0;
  for (auto a : word.digits()) {
    const auto& m = ifs_.maps[a];
    for (std::size_t k = 0; k < d; ++k) shift[k] += ratio * m.translation[k];
    ratio *= m.ratio;
  }
  Box b{Vec(d), Vec(d)};
  for (std::size_t k = 0; k < d; ++k) {
    b.lo[k] = ratio * box_.lo[k] + shift[k];
    b.hi[k] = ratio * box_.hi[k] + shift[k];
  }
  return b;
}

double SliceGeometry::slice_diameter(double x, const std::vector<SliceCylinder>& cylinders) const {
  const Vec& u = proj_.u;
  const double slack = tol_;
  if (ifs_.dimension == 2) {
    double lo = INFINITY;
    double hi = -INFINITY;
    for (const auto& c : cylinders) {
      const Box b = cylinder_box(c.word);
      double t0 = -INFINITY;
      double t1 = INFINITY;
      bool empty = false;
      for (std::size_t k = 0; k < 2 && !empty; ++k) {
        const double base = x * u[k];
        const double v = basis1_[k];
        if (std::abs(v) < 1e-15) {
          empty = base < b.lo[k] - slack || base > b.hi[k] + slack;
          continue;
        }
        double a = (b.lo[k] - base) / v;
        double e = (b.hi[k] - base) / v;
        if (a > e) std::swap(a, e);
        t0 = std::max(t0, a);
        t1 = std::min(t1, e);
      }
      if (empty || t0 > t1 + slack) continue;
      lo = std::min(lo, t0);
      hi = std::max(hi, std::max(t0, t1));
    }
    return hi > lo ? hi - lo : 0.0;
  }

  std::vector<Point2> pts;
  for (const auto& c : cylinders) {
    const Box b = cylinder_box(c.word);
    Vec corner[8];
    double f[8];
    for (int m = 0; m < 8; ++m) {
      corner[m] = {(m & 1) ? b.hi[0] : b.lo[0], (m & 2) ? b.hi[1] : b.lo[1], (m & 4) ? b.hi[2] : b.lo[2]};
      f[m] = dot(corner[m], u) - x;
    }
    auto emit = [&](const Vec& p) { pts.push_back({dot(p, basis1_), dot(p, basis2_)}); };
    for (int m = 0; m < 8; ++m) {
      if (std::abs(f[m]) <= slack) emit(corner[m]);
      for (int bit = 1; bit < 8; bit <<= 1) {
        if (m & bit) continue;
        const int n = m | bit;
        if ((f[m] < -slack && f[n] > slack) || (f[m] > slack && f[n] < -slack)) {
          const double t = f[m] / (f[m] - f[n]);
          Vec p(3);
          for (std::size_t k = 0; k < 3; ++k) p[k] = corner[m][k] + t * (corner[n][k] - corner[m][k]);
          emit(p);
        }
      }
    }
  }
  return hull_diameter(std::move(pts));
}

double SliceGeometry::slice_diameter(double x, int depth) const { return slice_diameter(x, cylinders(x, depth)); }

double SliceGeometry::dead_end_fraction(double x, int depth) const {
  if (depth < 1) return 0.0;
  const auto parents = cylinders(x, depth - 1);
  if (parents.empty()) return 0.0;
  std::size_t dead = 0;
  for (const auto& p : parents) {
    bool alive = false;
    for (const auto& m : proj_.system.maps) alive = alive || admissible(m.invert(p.image));
    if (!alive) ++dead;
  }
  return static_cast<double>(dead) / static_cast<double>(parents.size());
}

std::vector<SliceCylinder> enumerate_slice_cylinders(const SliceGeometry& geometry, double x, int depth) {
  return geometry.cylinders(x, depth);
}

double slice_cylinder_mass(const SymbolWord& word, double x, const ProjectionSpec& proj, const DensityGrid& h) {
  const double hx = h.evaluate(x);
  if (!(hx > 0.0)) throw UndefinedFiberError("h_theta(x) = 0; the slice measure is undefined");
  double y = x;
  double ratio = 1.0;
  for (auto a : word.digits()) {
    const auto& m = proj.system.maps.at(a);
    y = m.invert(y);
    ratio *= m.ratio;
  }
  return std::pow(ratio, proj.s - 1.0) * h.evaluate(y) / hx;
}

SliceCodingReport check_slice_coding(const SliceGeometry& geometry, const std::vector<double>& x_samples, int depth) {
  SliceCodingReport report;
  double ratio_max = 0.0;
  for (const auto& m : geometry.ifs().maps) ratio_max = std::max(ratio_max, m.ratio);
  report.resolution = std::pow(ratio_max, depth) * geometry.attractor_diameter();
  report.delta = INFINITY;
  for (double x : x_samples) {
    SliceCodingReport::Sample s;
    s.x = x;
    const auto cyl = geometry.cylinders(x, std::max(depth, 1));
    s.empty = cyl.empty();
    for (const auto& c : cyl) s.first_letters.push_back(c.word[0]);
    std::sort(s.first_letters.begin(), s.first_letters.end());
    s.first_letters.erase(std::unique(s.first_letters.begin(), s.first_letters.end()), s.first_letters.end());
    s.single_first_level = s.first_letters.size() == 1;
    s.diameter = geometry.slice_diameter(x, cyl);
    if (!s.empty && !s.single_first_level) {
      report.delta = std::min(report.delta, s.diameter);
      if (s.diameter <= report.resolution) report.violations.push_back(x);
    }
    report.samples.push_back(std::move(s));
  }
  if (!std::isfinite(report.delta)) report.delta = 0.0;
  return report;
}

double estimate_ratio_constant(const SliceGeometry& geometry, const DensityGrid& h, double delta,
                               const std::vector<double>& x_samples, int depth) {
  const double s = geometry.projection().s;
  double best = -1.0;
  for (double x : x_samples) {
    const double diam = geometry.slice_diameter(x, depth);
    if (!(diam > 0.0) || diam < delta) continue;
    best = std::max(best, h.evaluate(x) / std::pow(diam, s - 1.0));
  }
  if (best < 0.0) throw NumericError("no thick slices found");
  return 1.1 * best;
}

double slice_lower_bound(double x, const DensityGrid& h, double c) {
  const double hx = h.evaluate(x);
  if (hx == 0.0) return 0.0;
  return hx / c;
}

double slice_cover_sum(const SliceGeometry& geometry, double x, int depth) {
  const double s = geometry.projection().s;
  double acc = 0.0;
  for (const auto& c : geometry.cylinders(x, depth)) acc += std::pow(c.diameter_bound, s - 1.0);
  return acc;
}

MarstrandReport marstrand_report(const SliceGeometry& geometry, const DensityGrid& h, double c,
                                 const std::vector<double>& x_grid, int depth) {
  MarstrandReport r;
  r.depth = depth;
  const auto& hull = geometry.projection().hull;
  const double dx = x_grid.empty() ? 0.0 : hull.length() / static_cast<double>(x_grid.size());
  for (double x : x_grid) r.lower_integral += slice_lower_bound(x, h, c) * dx;
  r.lower_exact = 1.0 / c;
  const double s = geometry.projection().s;
  double level = 0.0;
  for (const auto& m : geometry.ifs().maps) level += std::pow(m.ratio, s);
  r.upper_estimate = std::pow(geometry.attractor_diameter(), s) * std::pow(level, depth);
  r.consistent = r.lower_exact <= r.upper_estimate && r.lower_integral <= r.upper_estimate;
  return r;
}

double fit_ratio_k(const std::vector<double>& cover_sums, const std::vector<double>& densities) {
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < cover_sums.size() && i < densities.size(); ++i) {
    num += cover_sums[i] * densities[i];
    den += densities[i] * densities[i];
  }
  if (den == 0.0) throw NumericError("density vanishes on the whole grid");
  return num / den;
}

SliceReport slice_report(const SliceGeometry& geometry, const DensityGrid& h, double c, double x, int depth) {
  SliceReport r;
  r.theta = geometry.projection().theta;
  r.x = x;
  r.depth = depth;
  r.density = h.evaluate(x);
  r.cylinders = geometry.cylinders(x, depth);
  const double s = geometry.projection().s;
  const double diam = geometry.attractor_diameter();
  for (auto& cyl : r.cylinders) {
    if (r.density > 0.0) cyl.mass = std::pow(cyl.diameter_bound / diam, s - 1.0) * h.evaluate(cyl.image) / r.density;
    r.mass_sum += cyl.mass;
    r.cover_sum += std::pow(cyl.diameter_bound, s - 1.0);
  }
  r.diameter_estimate = geometry.slice_diameter(x, r.cylinders);
  r.lower_bound = slice_lower_bound(x, h, c);
  if (depth >= 1 && !r.cylinders.empty()) {
    r.single_first_level = std::all_of(r.cylinders.begin(), r.cylinders.end(),
                                       [&](const SliceCylinder& cyl) { return cyl.word[0] == r.cylinders[0].word[0]; });
  }
  r.dead_end_fraction = geometry.dead_end_fraction(x, depth);
  return r;
}

AffineSystem1D odd_system(const ProjectionSpec& proj) {
  AffineSystem1D sys;
  for (const auto& m : proj.system.maps) sys.maps.push_back({m.ratio * m.ratio, m.translation, m.weight});
  return sys;
}

AffineSystem1D even_system(const ProjectionSpec& proj) {
  AffineSystem1D sys;
  for (const auto& m : proj.system.maps) sys.maps.push_back({m.ratio * m.ratio, m.ratio * m.translation, m.weight});
  return sys;
}

DensityGrid convolve(const DensityGrid& a, const DensityGrid& b, Interval support, std::size_t cells) {
  const double w = std::min(a.cell_width(), b.cell_width());
  auto resample = [&](const DensityGrid& g) {
    const auto count = static_cast<std::size_t>(std::ceil(g.support().length() / w - 1e-9));
    return transfer_masses(grid_masses(g), g.support().lo, g.cell_width(), g.support().lo, w, count);
  };
  const auto ma = resample(a);
  const auto mb = resample(b);
  std::vector<double> out(ma.size() + mb.size(), 0.0);
  for (std::size_t i = 0; i < ma.size(); ++i) {
    if (ma[i] == 0.0) continue;
    for (std::size_t j = 0; j < mb.size(); ++j) {
      const double m = 0.5 * ma[i] * mb[j];
      out[i + j] += m;
      out[i + j + 1] += m;
    }
  }
  const double lo = a.support().lo + b.support().lo;
  const auto masses = transfer_masses(out, lo, w, support.lo, support.length() / static_cast<double>(cells), cells);
  return DensityGrid::from_masses(support, masses);
}

DensityGrid odd_even_convolution(const IfsSpec& ifs, const std::vector<double>& theta, std::size_t cells,
                                 const SolveOptions& options) {
  if (!ifs.uniform_ratio()) throw UnsupportedError("odd/even convolution needs a common contraction ratio");
  const auto proj = project_ifs(ifs, theta);
  SolveOptions opts = options;
  opts.refinement_check = false;
  const auto odd = solve_invariant_density(odd_system(proj), cells, opts);
  const auto even = solve_invariant_density(even_system(proj), cells, opts);
  return convolve(odd.grid, even.grid, proj.hull, cells);
}

}  // namespace betalab
