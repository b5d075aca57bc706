#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "betalab/dynsys.hpp"
#include "betalab/expansions.hpp"
#include "betalab/fiber_measures.hpp"

using namespace betalab;

namespace {

const PhaseSpace& space14() {
  static const PhaseSpace space(solve_density(BetaParam::floating(1.4), 1 << 14, 1e-10, 20000, false).grid,
                                BetaParam::floating(1.4));
  return space;
}

PhiPoint random_point(std::mt19937_64& rng, const PhaseSpace& space) {
  std::uniform_real_distribution<double> ux(0.0, space.beta().upper());
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  const double x = ux(rng);
  return {x, u01(rng) * space.height(x)};
}

}  // namespace

TEST_SUITE("dynsys") {

TEST_CASE("origin is fixed") {
  const auto& s = space14();
  const auto step = phi_step({0.0, 0.0}, s);
  CHECK(step.point.x == 0.0);
  CHECK(step.point.y == 0.0);
  CHECK(step.digit == 0);
  const auto code = phi_code({0.0, 0.0}, s, 12);
  CHECK(code == SymbolWord(std::vector<std::uint8_t>(12, 0)));
}

TEST_CASE("outside X is rejected") {
  const auto& s = space14();
  CHECK_THROWS_AS(phi_step({1.0, 5.0}, s), DomainError);
  CHECK_THROWS_AS(phi_step({3.0, 0.0}, s), DomainError);
}

TEST_CASE("vertical stretch by 2/beta") {
  const auto& s = space14();
  const double x = 0.9;
  const double y1 = 0.1 * s.split(x), y2 = 0.3 * s.split(x);
  const auto a = phi_step({x, y1}, s), b = phi_step({x, y2}, s);
  REQUIRE(a.digit == b.digit);
  CHECK(b.point.y - a.point.y == doctest::Approx(2 / 1.4 * (y2 - y1)).epsilon(1e-12));
}

TEST_CASE("conjugacy with apply_word") {
  const auto& s = space14();
  std::mt19937_64 rng(5);
  for (int t = 0; t < 200; ++t) {
    const auto p = random_point(rng, s);
    const auto orbit = phi_orbit(p, s, 30);
    CHECK(orbit.code[0] == phi_step(p, s).digit);
    for (std::size_t k = 0; k <= 30; ++k)
      CHECK(std::abs(orbit.points[k].x - apply_word(orbit.code.prefix(k), p.x, s.beta())) <= 1e-6);
  }
}

TEST_CASE("fiber intervals") {
  const auto& s = space14();
  const auto b = s.beta();
  for (double x : {0.3, 1.0, 1.7}) {
    const auto root = fiber_interval(x, SymbolWord(), s);
    CHECK(root.lo == 0.0);
    CHECK(root.hi == doctest::Approx(s.height(x)));
    const auto i0 = fiber_interval(x, SymbolWord({0}), s);
    const auto i1 = fiber_interval(x, SymbolWord({1}), s);
    CHECK(i0.length() + i1.length() == doctest::Approx(s.height(x)).epsilon(s.tolerance() / s.height(x)));
    for (const auto& w : admissible_words(x, b, 6)) {
      const auto iv = fiber_interval(x, w.word, s);
      const double mass = cylinder_mass(x, w.word, s.density(), b);
      CHECK(iv.length() / s.height(x) == doctest::Approx(mass).epsilon(1e-9));
      // nested up to the grid budget carried to depth 5
      const auto parent = fiber_interval(x, w.word.prefix(5), s);
      const double slack = std::pow(0.7, 5) * s.tolerance();
      CHECK(iv.lo >= parent.lo - slack);
      CHECK(iv.hi <= parent.hi + slack);
    }
  }
  CHECK_THROWS_AS(fiber_interval(2.6, SymbolWord(), s), UndefinedFiberError);
}

TEST_CASE("phi_hat keeps the digit history in z") {
  const auto& s = space14();
  PhiHatPoint p{1.0, 0.2, 0.0};
  std::vector<int> digits;
  for (int k = 0; k < 20; ++k) {
    const double z = p.z;
    const auto next = phi_hat_step(p, s);
    digits.push_back(phi_step({p.x, p.y}, s).digit);
    CHECK(next.z == doctest::Approx(z / 2 + digits.back() / 2.0));
    p = next;
  }
  // binary digits of z, read from the first place, are the digits in reverse
  double z = p.z;
  for (int k = 19; k >= 0; --k) {
    const int bit = z >= 0.5 ? 1 : 0;
    CHECK(bit == digits[static_cast<std::size_t>(k)]);
    z = 2 * z - bit;
  }
}

TEST_CASE("branch areas") {
  const auto a = branch_areas(space14());
  const double tol = space14().tolerance() * space14().beta().upper();
  CHECK(std::abs(a.lower - 0.5) <= tol);
  CHECK(std::abs(a.upper - 0.5) <= tol);
}

TEST_CASE("measure preservation") {
  const auto& s = space14();
  const auto base = measure_preservation(s, 1000000, 0, 9, 64, 4);
  const auto one = measure_preservation(s, 1000000, 1, 9, 64, 4);
  const auto five = measure_preservation(s, 1000000, 5, 9, 64, 4);
  CHECK(base.leaked == 0);
  CHECK(one.tv <= 3 * base.tv);
  CHECK(five.tv <= 3 * base.tv);
  CHECK(static_cast<double>(one.leaked) <= 1e-3 * 1e6);
  const auto again = measure_preservation(s, 1000000, 1, 9, 64, 1);
  CHECK(again.tv == one.tv);
  CHECK(again.histogram.counts == one.histogram.counts);

  std::ostringstream out;
  write_histogram_csv(out, one.histogram);
  CHECK(out.str().rfind("bin_x,bin_y,count\n", 0) == 0);
}

}
