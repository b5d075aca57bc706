#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "betalab/fractal_slicer.hpp"

using namespace betalab;

namespace {

std::vector<double> grid_over(const Interval& hull, std::size_t n) {
  std::vector<double> xs;
  for (std::size_t i = 0; i < n; ++i) xs.push_back(hull.lo + hull.length() * (i + 0.5) / n);
  return xs;
}

IfsSpec scaled(IfsSpec ifs, double c) {
  for (auto& m : ifs.maps)
    for (auto& t : m.translation) t *= c;
  for (auto& v : ifs.open_set.lo) v *= c;
  for (auto& v : ifs.open_set.hi) v *= c;
  return ifs;
}

IfsSpec four_squares() {
  std::istringstream in(
      "dimension 2\n"
      "map 1/2 0 0\nmap 1/2 1/2 0\nmap 1/2 0 1/2\nmap 1/2 1/2 1/2\n"
      "open_set 0 0 1 1\n");
  return parse_ifs(in);
}

}  // namespace

TEST_SUITE("fractal_slicer") {

TEST_CASE("moran dimension") {
  CHECK(std::abs(moran_dimension(preset("menger_sponge")) - std::log(20.0) / std::log(3.0)) <= 1e-10);
  CHECK(std::abs(moran_dimension(preset("carpet")) - std::log(8.0) / std::log(3.0)) <= 1e-10);
  // ratios 1/2 and 1/4: t + t^2 = 1 with t = 2^-s
  IfsSpec two;
  two.dimension = 2;
  two.maps = {{0.5, {0, 0}}, {0.25, {0.75, 0.75}}};
  two.open_set = {{0, 0}, {1, 1}};
  CHECK_NOTHROW(two.validate());
  const double t = (std::sqrt(5.0) - 1) / 2;
  CHECK(std::abs(moran_dimension(two) - std::log(t) / std::log(0.5)) <= 1e-10);
  CHECK(moran_dimension(two) == doctest::Approx(0.6942).epsilon(1e-4));

  // singular projected measure still solves to a probability density
  const auto sol = solve_projected_density(project_ifs(two, {0.3}), 1024);
  CHECK(std::abs(sol.grid.total_mass() - 1.0) <= 1e-9);
}

TEST_CASE("ifs parsing and validation") {
  std::istringstream ok("# carpet corner\ndimension 2\nmap 1/3 0 0   # first\nmap 1/3 2/3 2/3\nopen_set 0 0 1 1\n");
  const auto ifs = parse_ifs(ok);
  CHECK(ifs.maps.size() == 2);
  CHECK(ifs.maps[1].translation[0] == doctest::Approx(2.0 / 3));
  std::istringstream bad_key("dimension 2\nmapp 1/3 0 0\nopen_set 0 0 1 1\n");
  CHECK_THROWS_AS(parse_ifs(bad_key), DomainError);
  std::istringstream overlap("dimension 2\nmap 1/2 0 0\nmap 1/2 1/4 0\nopen_set 0 0 1 1\n");
  CHECK_THROWS_AS(parse_ifs(overlap), DomainError);
  std::istringstream outside("dimension 2\nmap 1/2 0.7 0\nopen_set 0 0 1 1\n");
  CHECK_THROWS_AS(parse_ifs(outside), DomainError);
  CHECK_THROWS_AS(preset("koch"), DomainError);
  CHECK_THROWS_AS(load_ifs("/nonexistent.ifs"), DomainError);
  CHECK(preset_names().size() == 2);
}

TEST_CASE("projection of the carpet") {
  const auto carpet = preset("carpet");
  const auto axis = project_ifs(carpet, {0.0});
  for (std::size_t i = 0; i < carpet.maps.size(); ++i)
    CHECK(axis.system.maps[i].translation == doctest::Approx(carpet.maps[i].translation[0]));
  CHECK(axis.system.weight_sum() == doctest::Approx(1.0).epsilon(1e-12));

  const auto p = project_ifs(carpet, {0.61});
  double lo = 1e9, hi = -1e9;
  for (const auto& m : p.system.maps) {
    lo = std::min(lo, m.translation / (1 - m.ratio));
    hi = std::max(hi, m.translation / (1 - m.ratio));
  }
  CHECK(p.hull.lo == doctest::Approx(lo));
  CHECK(p.hull.hi == doctest::Approx(hi));
}

TEST_CASE("projected density of the carpet") {
  const auto carpet = preset("carpet");
  const auto p = project_ifs(carpet, {0.61});
  const auto sol = solve_projected_density(p, 1 << 14);
  CHECK(sol.diagnostics.converged);
  CHECK(std::abs(sol.grid.total_mass() - 1.0) <= 1e-9);
  CHECK(sol.diagnostics.l1_residual <= 5e-3);
  const auto chaos = chaos_game_projection(carpet, p, 4000000, 1024, 3, 0, 4);
  CHECK(l1_distance(rebin(sol.grid, p.hull, 1024), chaos) <= 0.02);
  const auto same = chaos_game_projection(carpet, p, 4000000, 1024, 3, 0, 1);
  CHECK(l1_distance(same, chaos) == 0.0);
}

TEST_CASE("axis-aligned carpet against the chaos game") {
  const auto carpet = preset("carpet");
  const auto p = project_ifs(carpet, {0.0});
  const auto sol = solve_projected_density(p, 1 << 14);
  CHECK(p.hull.lo == doctest::Approx(0.0));
  CHECK(p.hull.hi == doctest::Approx(1.0));
  const auto chaos = chaos_game_projection(carpet, p, 4000000, 1024, 5, 0, 4);
  CHECK(l1_distance(rebin(sol.grid, p.hull, 1024), chaos) <= 0.02);
}

TEST_CASE("sponge density is stable under refinement") {
  const auto p = project_ifs(preset("sponge"), {0.61, 0.37});
  const auto sol = solve_projected_density(p, 1 << 12);
  CHECK(sol.diagnostics.refinement_stability < 0.05);
}

TEST_CASE("slice cylinders") {
  const SliceGeometry geo(preset("carpet"), {0.0});
  const auto root = geo.cylinders(0.5, 0);
  REQUIRE(root.size() == 1);
  CHECK(root[0].word.empty());
  CHECK(geo.cylinders(1.5, 3).empty());

  std::vector<unsigned> expected;
  const auto& maps = geo.ifs().maps;
  for (unsigned i = 0; i < maps.size(); ++i)
    if (maps[i].translation[0] <= 0.5 && 0.5 <= maps[i].translation[0] + maps[i].ratio) expected.push_back(i);
  std::vector<unsigned> got;
  for (const auto& c : geo.cylinders(0.5, 1)) got.push_back(c.word[0]);
  CHECK(got == expected);
  CHECK(got.size() == 2);

  const SliceGeometry tilted(preset("carpet"), {0.61});
  const double x = 0.7;
  const auto parents = tilted.cylinders(x, 3);
  for (const auto& c : tilted.cylinders(x, 4)) {
    const auto parent = std::find_if(parents.begin(), parents.end(), [&](auto& q) { return q.word == c.word.prefix(3); });
    REQUIRE(parent != parents.end());
    CHECK(parent->hull.contains(c.hull));
    CHECK(c.hull.contains(x));
  }
}

TEST_CASE("slice masses") {
  const SliceGeometry geo(preset("carpet"), {0.61});
  const auto& p = geo.projection();
  const auto h = solve_projected_density(p, 1 << 14).grid;
  const double x = 0.7;
  CHECK(slice_cylinder_mass(SymbolWord(), x, p, h) == 1.0);
  const auto sol = solve_projected_density(p, 1 << 14);
  for (const auto& parent : geo.cylinders(x, 2)) {
    double kids = 0.0;
    for (const auto& c : geo.cylinders(x, 3))
      if (c.word.prefix(2) == parent.word) kids += c.mass;
    const double scale = std::pow(1.0 / 3, (p.s - 1) * 2) / h.evaluate(x);
    CHECK(std::abs(kids - parent.mass) <= scale * sol.diagnostics.pointwise_budget);
  }
  const auto r = slice_report(geo, h, 1.4, x, 6);
  CHECK(r.mass_sum >= 0.97);
  CHECK(r.mass_sum <= 1.03);
  CHECK_THROWS_AS(slice_cylinder_mass(SymbolWord({0}), p.hull.hi + 1, p, h), UndefinedFiberError);
}

TEST_CASE("slice coding") {
  const SliceGeometry axis(preset("carpet"), {0.0});
  const auto report = check_slice_coding(axis, {0.5, 0.1, 1.5}, 6);
  REQUIRE(report.samples.size() == 3);
  // the middle column holds two first-level squares
  CHECK_FALSE(report.samples[0].single_first_level);
  CHECK(report.samples[0].first_letters.size() == 2);
  CHECK(report.samples[0].diameter == doctest::Approx(1.0));
  CHECK(report.samples[2].empty);
  CHECK(report.violations.empty());

  const SliceGeometry geo(preset("carpet"), {0.61});
  const auto xs = grid_over(geo.projection().hull, 1000);
  const auto wide = check_slice_coding(geo, xs, 10);
  CHECK(wide.delta > 0.0);
  CHECK(wide.violations.empty());
}

TEST_CASE("ratio constant") {
  // four squares tiling the unit square: h = 1 and every slice has diameter 1
  const SliceGeometry tiles(four_squares(), {0.0});
  const auto h = solve_projected_density(tiles.projection(), 1024).grid;
  const auto xs = grid_over(tiles.projection().hull, 64);
  const auto coding = check_slice_coding(tiles, xs, 5);
  CHECK(coding.delta == doctest::Approx(1.0));
  CHECK(estimate_ratio_constant(tiles, h, coding.delta, xs, 5) == doctest::Approx(1.1));
  CHECK_THROWS_AS(estimate_ratio_constant(tiles, h, 2.0, xs, 5), NumericError);

  // rescaling translations by c scales C by c^-s
  const auto carpet = preset("carpet");
  const double s = moran_dimension(carpet);
  const SliceGeometry g1(carpet, {0.61});
  const SliceGeometry g2(scaled(carpet, 2.0), {0.61});
  const auto h1 = solve_projected_density(g1.projection(), 1 << 12).grid;
  const auto h2 = solve_projected_density(g2.projection(), 1 << 12).grid;
  const auto x1 = grid_over(g1.projection().hull, 128);
  std::vector<double> x2;
  for (double x : x1) x2.push_back(2 * x);
  const double c1 = estimate_ratio_constant(g1, h1, 0.3, x1, 8);
  const double c2 = estimate_ratio_constant(g2, h2, 0.6, x2, 8);
  CHECK(c2 / c1 == doctest::Approx(std::pow(2.0, -s)).epsilon(1e-6));

  // stable when the sample count quadruples
  const auto x4 = grid_over(g1.projection().hull, 512);
  const double c4 = estimate_ratio_constant(g1, h1, 0.3, x4, 8);
  CHECK(std::abs(c4 / c1 - 1) <= 0.2);
}

TEST_CASE("lower bounds and covers") {
  const SliceGeometry geo(preset("carpet"), {0.61});
  const auto sol = solve_projected_density(geo.projection(), 1 << 14);
  const auto& h = sol.grid;
  const auto xs = grid_over(geo.projection().hull, 64);
  const auto coding = check_slice_coding(geo, xs, 10);
  const double c = estimate_ratio_constant(geo, h, coding.delta, xs, 10);
  CHECK(slice_lower_bound(geo.projection().hull.hi + 1, h, c) == 0.0);
  for (double x : xs) {
    if (h.evaluate(x) > 0) CHECK(slice_lower_bound(x, h, c) > 0.0);
    for (int n : {4, 8, 10}) CHECK(slice_cover_sum(geo, x, n) >= slice_lower_bound(x, h, c));
  }
  const auto m = marstrand_report(geo, h, c, xs, 8);
  CHECK(m.lower_exact == doctest::Approx(1 / c));
  CHECK(m.lower_integral == doctest::Approx(1 / c).epsilon(1e-2));
  CHECK(std::isfinite(m.upper_estimate));
  CHECK(m.upper_estimate > 0.0);
  CHECK(m.consistent);
}

TEST_CASE("odd and even systems") {
  const auto sponge = preset("sponge");
  const auto p = project_ifs(sponge, {0.61, 0.37});
  const auto odd = odd_system(p), even = even_system(p);
  REQUIRE(odd.maps.size() == p.system.maps.size());
  for (std::size_t i = 0; i < odd.maps.size(); ++i) {
    CHECK(odd.maps[i].ratio == doctest::Approx(1.0 / 9));
    CHECK(odd.maps[i].translation == doctest::Approx(p.system.maps[i].translation));
    CHECK(even.maps[i].translation == doctest::Approx(p.system.maps[i].translation / 3));
  }
  const auto conv = odd_even_convolution(sponge, {0.61, 0.37}, 1 << 12);
  const auto direct = solve_projected_density(p, 1 << 12);
  CHECK(l1_distance(conv, direct.grid) <= 0.05);
  CHECK(std::abs(conv.total_mass() - 1) <= 1e-9);

  IfsSpec mixed;
  mixed.dimension = 2;
  mixed.maps = {{0.5, {0, 0}}, {0.25, {0.75, 0.75}}};
  mixed.open_set = {{0, 0}, {1, 1}};
  CHECK_THROWS_AS(odd_even_convolution(mixed, {0.3}, 1024), UnsupportedError);
}

TEST_CASE("convolution of two boxes") {
  // uniform on [0,1] convolved with itself is the triangle on [0,2]
  const auto u = DensityGrid::uniform({0, 1}, 256);
  const auto t = convolve(u, u, {0, 2}, 512);
  CHECK(t.evaluate(1.0) == doctest::Approx(1.0).epsilon(1e-2));
  CHECK(t.evaluate(0.5) == doctest::Approx(0.5).epsilon(1e-2));
  CHECK(t.total_mass() == doctest::Approx(1.0));
}

}
