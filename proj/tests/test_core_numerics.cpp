#include <doctest.h>

#include <cmath>
#include <random>

#include "betalab/core_numerics.hpp"
#include "betalab/expansions.hpp"

using namespace betalab;

TEST_SUITE("core_numerics") {

TEST_CASE("apply_map examples") {
  const auto b15 = BetaParam::floating(1.5);
  CHECK(apply_map(0, 0.0, b15) == 0.0);
  CHECK(apply_map(0, 0.0, BetaParam::floating(1.2)) == 0.0);
  CHECK(apply_map(1, 1.0, b15) == doctest::Approx(0.5).epsilon(1e-15));

  // beta^2 - 1 = beta in Z[beta]
  const auto golden = BetaParam::golden();
  const QuadraticField f(golden);
  const auto beta = f.beta_element();
  CHECK(apply_map(1, beta, golden) == beta);
  CHECK(apply_map(1, beta, golden).shadow == doctest::Approx(golden.value()));
}

TEST_CASE("apply_word order") {
  const auto b = BetaParam::floating(1.5);
  CHECK(apply_word(SymbolWord(), 0.37, b) == 0.37);
  CHECK(apply_word(SymbolWord({1, 0}), 1.0, b) == doctest::Approx(0.75));
  CHECK(apply_word(SymbolWord({0, 1}), 1.0, b) == doctest::Approx(1.25));
}

TEST_CASE("apply_word composes over prefixes") {
  const auto golden = BetaParam::golden();
  const QuadraticField f(golden);
  const auto x = f.make(1, 0, 2);
  const auto fb = BetaParam::floating(1.37);
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<std::uint8_t> p(rng() % 6), w(rng() % 6);
    for (auto& d : p) d = rng() & 1;
    for (auto& d : w) d = rng() & 1;
    const SymbolWord pw(p), ww(w);
    CHECK(apply_word(pw.concat(ww), x, golden) == apply_word(ww, apply_word(pw, x, golden), golden));
    CHECK(std::abs(apply_word(pw.concat(ww), 0.4, fb) - apply_word(ww, apply_word(pw, 0.4, fb), fb)) <= 1e-9);
  }
}

TEST_CASE("exact shadow tracks float evaluation") {
  // Rounding grows like beta^n, so the bound is max(n 1e-12, 8 eps beta^n (1 + |x|)).
  const auto golden = BetaParam::golden();
  const QuadraticField f(golden);
  const auto fb = golden.as_float();
  for (auto x : {f.make(1, 0, 2), f.make(1), f.make(-1, 1), f.make(3, 0, 10)}) {
    const auto word = greedy_expansion(x, golden, 40);
    for (std::size_t n = 0; n <= word.size(); ++n) {
      const auto w = word.prefix(n);
      const double exact = apply_word(w, x, golden).shadow;
      const double flt = apply_word(w, x.shadow, fb);
      const double bound = std::max(static_cast<double>(n) * 1e-12,
                                    8 * 2.2e-16 * std::pow(golden.value(), static_cast<double>(n)) * (1 + std::abs(x.shadow)));
      CHECK(std::abs(exact - flt) <= bound);
    }
  }
}

TEST_CASE("regions") {
  const auto r = regions(BetaParam::floating(1.5));
  CHECK(r.switch_region.lo == doctest::Approx(2.0 / 3));
  CHECK(r.switch_region.hi == doctest::Approx(4.0 / 3));
  CHECK(r.upper.hi == doctest::Approx(2.0));
  CHECK(r.lower.lo == 0.0);
  CHECK(r.lower.hi == r.switch_region.lo);
  CHECK(r.switch_region.hi == r.upper.lo);

  const auto golden = BetaParam::golden();
  const auto g = regions(golden);
  CHECK(g.switch_region.lo == doctest::Approx(1 / golden.value()));
  CHECK(g.switch_region.hi == doctest::Approx(1.0));

  // normalized measure of S is 2/beta - 1
  for (double b : {1.3, 1.9, 1.999}) {
    const auto rr = regions(BetaParam::floating(b));
    CHECK(rr.switch_region.length() / rr.upper.hi == doctest::Approx(2 / b - 1));
  }
  CHECK(regions(BetaParam::floating(1.9999)).switch_region.length() < 2e-4);

  const auto b15 = BetaParam::floating(1.5);
  CHECK(region_of(2.0 / 3, b15) == Region::Switch);
  CHECK(region_of(4.0 / 3, b15) == Region::Switch);
  CHECK(region_of(0.5, b15) == Region::Lower);
  CHECK(region_of(1.5, b15) == Region::Upper);
  CHECK(region_of(2.5, b15) == Region::Outside);
}

TEST_CASE("golden left edge of S branches exactly") {
  const auto golden = BetaParam::golden();
  const QuadraticField f(golden);
  CHECK(branches(f.make(-1, 1), f));  // 1/beta = beta - 1
  CHECK(branches(f.make(1), f));
  CHECK_FALSE(branches(f.make(1, 0, 2), f));
}

TEST_CASE("bernoulli_cylinder_mass") {
  CHECK(bernoulli_cylinder_mass(SymbolWord()) == 1.0);
  CHECK(bernoulli_cylinder_mass(SymbolWord({0, 1})) == 0.25);
  CHECK(bernoulli_cylinder_mass(SymbolWord::parse("0110100111")) == 1.0 / 1024);
}

TEST_CASE("shift_word") {
  CHECK(shift_word(SymbolWord({0, 1, 1})) == SymbolWord({1, 1}));
  CHECK(shift_word(SymbolWord({1})).empty());
  CHECK_THROWS_AS(shift_word(SymbolWord()), DomainError);
  std::mt19937_64 rng(3);
  for (int t = 0; t < 20; ++t) {
    std::vector<std::uint8_t> d(20);
    for (auto& v : d) v = rng() & 1;
    CHECK(shift_word(SymbolWord(d)).size() == 19);
  }
}

TEST_CASE("beta parameters") {
  CHECK_THROWS_AS(BetaParam::floating(2.0), DomainError);
  CHECK_THROWS_AS(BetaParam::floating(1.0), DomainError);
  CHECK(BetaParam::golden().value() == doctest::Approx((1 + std::sqrt(5.0)) / 2).epsilon(1e-15));
  CHECK_THROWS_AS(BetaParam::exact_quadratic(2, 1), DomainError);  // 1 + sqrt 2 > 2
  CHECK_THROWS_AS(BetaParam::exact_quadratic(0, 4), DomainError);  // rational root
  CHECK_THROWS_AS(QuadraticField(BetaParam::floating(1.4)), UnsupportedError);
}

}
