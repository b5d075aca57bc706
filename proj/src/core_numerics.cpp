#include "betalab/core_numerics.hpp"

#include <cmath>
#include <sstream>

namespace betalab {

namespace {

using i128 = __int128;

std::int64_t checked_add(std::int64_t x, std::int64_t y) {
  std::int64_t r;
  if (__builtin_add_overflow(x, y, &r)) throw ResourceError("algebraic coefficient overflow");
  return r;
}

std::int64_t checked_mul(std::int64_t x, std::int64_t y) {
  std::int64_t r;
  if (__builtin_mul_overflow(x, y, &r)) throw ResourceError("algebraic coefficient overflow");
  return r;
}

int sign_of(i128 v) { return (v > 0) - (v < 0); }

bool is_perfect_square(std::int64_t n) {
  if (n < 0) return false;
  auto r = static_cast<std::int64_t>(std::llround(std::sqrt(static_cast<double>(n))));
  for (std::int64_t c = std::max<std::int64_t>(0, r - 2); c <= r + 2; ++c) {
    if (c * c == n) return true;
  }
  return false;
}

}  // namespace

Interval::Interval(double lo_, double hi_) : lo(lo_), hi(hi_) {
  if (!(lo <= hi)) throw DomainError("interval requires lo <= hi");
}

SymbolWord::SymbolWord(std::vector<std::uint8_t> digits, unsigned alphabet)
    : digits_(std::move(digits)), alphabet_(alphabet) {
  if (alphabet_ < 2 || alphabet_ > 255) throw DomainError("alphabet size must be in [2, 255]");
  for (auto d : digits_) {
    if (d >= alphabet_) throw DomainError("digit outside alphabet");
  }
}

SymbolWord SymbolWord::parse(const std::string& text, unsigned alphabet) {
  std::vector<std::uint8_t> digits;
  for (char c : text) {
    if (c == ',' || c == ' ' || c == '[' || c == ']') continue;
    if (c < '0' || c > '9') throw DomainError("invalid digit character in word");
    digits.push_back(static_cast<std::uint8_t>(c - '0'));
  }
  return SymbolWord(std::move(digits), alphabet);
}

void SymbolWord::push_back(unsigned digit) {
  if (digit >= alphabet_) throw DomainError("digit outside alphabet");
  digits_.push_back(static_cast<std::uint8_t>(digit));
}

SymbolWord SymbolWord::extended(unsigned digit) const {
  SymbolWord w = *this;
  w.push_back(digit);
  return w;
}

SymbolWord SymbolWord::concat(const SymbolWord& tail) const {
  SymbolWord w = *this;
  for (auto d : tail.digits_) w.push_back(d);
  return w;
}

SymbolWord SymbolWord::prefix(std::size_t n) const {
  if (n > digits_.size()) throw DomainError("prefix longer than word");
  return SymbolWord({digits_.begin(), digits_.begin() + static_cast<std::ptrdiff_t>(n)}, alphabet_);
}

std::string SymbolWord::to_string() const {
  std::string s;
  s.reserve(digits_.size() * 2);
  for (std::size_t i = 0; i < digits_.size(); ++i) {
    if (alphabet_ > 10 && i > 0) s.push_back(',');
    s += std::to_string(digits_[i]);
  }
  return s;
}

BetaParam BetaParam::floating(double beta, double tolerance) {
  if (!(beta > 1.0 && beta < 2.0)) throw DomainError("beta must lie in (1, 2)");
  if (!(tolerance >= 0.0)) throw DomainError("tolerance must be nonnegative");
  return BetaParam(beta, FloatPolicy{tolerance});
}

BetaParam BetaParam::exact_quadratic(std::int64_t p, std::int64_t q) {
  const std::int64_t disc = p * p + 4 * q;
  if (disc <= 0 || is_perfect_square(disc)) {
    throw DomainError("x^2 - p x - q must have an irrational real root");
  }
  const double beta = (static_cast<double>(p) + std::sqrt(static_cast<double>(disc))) / 2.0;
  if (!(beta > 1.0 && beta < 2.0)) throw DomainError("quadratic root must lie in (1, 2)");
  if (std::abs(beta * beta - static_cast<double>(p) * beta - static_cast<double>(q)) > 1e-12) {
    throw DomainError("float shadow of quadratic base is inaccurate");
  }
  return BetaParam(beta, ExactQuadraticPolicy{{p, q}});
}

std::optional<QuadraticPolynomial> BetaParam::polynomial() const {
  if (auto* e = std::get_if<ExactQuadraticPolicy>(&policy_)) return e->polynomial;
  return std::nullopt;
}

double BetaParam::tolerance() const {
  if (auto* f = std::get_if<FloatPolicy>(&policy_)) return f->tolerance;
  return FloatPolicy{}.tolerance;
}

bool AlgebraicValue::operator==(const AlgebraicValue& o) const {
  if (den == o.den) return a == o.a && b == o.b;
  return static_cast<i128>(a) * o.den == static_cast<i128>(o.a) * den &&
         static_cast<i128>(b) * o.den == static_cast<i128>(o.b) * den;
}

std::string AlgebraicValue::to_string() const {
  std::ostringstream os;
  os << "(" << a << (b < 0 ? " - " : " + ") << (b < 0 ? -b : b) << "*beta)";
  if (den != 1) os << "/" << den;
  return os.str();
}

QuadraticField::QuadraticField(const BetaParam& beta) : beta_(beta.value()) {
  auto poly = beta.polynomial();
  if (!poly) throw UnsupportedError("exact arithmetic requires a quadratic base");
  poly_ = *poly;
  discriminant_ = poly_.p * poly_.p + 4 * poly_.q;
}

AlgebraicValue QuadraticField::make(std::int64_t a, std::int64_t b, std::int64_t den) const {
  if (den <= 0) throw DomainError("denominator must be positive");
  return AlgebraicValue{a, b, den, evaluate(a, b, den)};
}

AlgebraicValue QuadraticField::times_beta(const AlgebraicValue& v) const {
  // (a + b beta) beta = b q + (a + b p) beta
  const std::int64_t a = checked_mul(v.b, poly_.q);
  const std::int64_t b = checked_add(v.a, checked_mul(v.b, poly_.p));
  return make(a, b, v.den);
}

AlgebraicValue QuadraticField::minus_integer(const AlgebraicValue& v, std::int64_t i) const {
  return make(checked_add(v.a, -checked_mul(i, v.den)), v.b, v.den);
}

AlgebraicValue QuadraticField::apply_map(int digit, const AlgebraicValue& v) const {
  return minus_integer(times_beta(v), digit);
}

int QuadraticField::sign(std::int64_t a, std::int64_t b) const {
  // 2(a + b beta) = u + b sqrt(D), u = 2a + b p
  const i128 u = static_cast<i128>(2) * a + static_cast<i128>(b) * poly_.p;
  if (b == 0) return sign_of(u);
  if (u == 0) return sign_of(b);
  if ((u > 0) == (b > 0)) return sign_of(u);
  const i128 lhs = u * u;
  const i128 rhs = static_cast<i128>(b) * b * discriminant_;
  return u > 0 ? sign_of(lhs - rhs) : sign_of(rhs - lhs);
}

int QuadraticField::compare(const AlgebraicValue& lhs, const AlgebraicValue& rhs) const {
  if (lhs.den == rhs.den) {
    return sign(checked_add(lhs.a, -rhs.a), checked_add(lhs.b, -rhs.b));
  }
  const std::int64_t a = checked_add(checked_mul(lhs.a, rhs.den), -checked_mul(rhs.a, lhs.den));
  const std::int64_t b = checked_add(checked_mul(lhs.b, rhs.den), -checked_mul(rhs.b, lhs.den));
  return sign(a, b);
}

bool QuadraticField::in_support(const AlgebraicValue& v) const {
  if (sign(v) < 0) return false;
  // v (beta - 1) <= 1  <=>  den - (b q - a) - (a + b p - b) beta >= 0
  const std::int64_t vb_a = checked_mul(v.b, poly_.q);
  const std::int64_t vb_b = checked_add(v.a, checked_mul(v.b, poly_.p));
  const std::int64_t a = checked_add(v.den, -checked_add(vb_a, -v.a));
  const std::int64_t b = -checked_add(vb_b, -v.b);
  return sign(a, b) >= 0;
}

double QuadraticField::evaluate(std::int64_t a, std::int64_t b, std::int64_t den) const {
  const i128 u = static_cast<i128>(2) * a + static_cast<i128>(b) * poly_.p;
  const long double root = std::sqrt(static_cast<long double>(discriminant_));
  const long double ub = static_cast<long double>(u);
  const long double bb = static_cast<long double>(b);
  long double twice;
  if (b == 0 || u == 0 || (u > 0) == (b > 0)) {
    twice = ub + bb * root;
  } else {
    const i128 num = u * u - static_cast<i128>(b) * b * discriminant_;
    twice = static_cast<long double>(num) / (ub - bb * root);
  }
  return static_cast<double>(twice / (2.0L * static_cast<long double>(den)));
}

Regions regions(const BetaParam& beta) {
  const double b = beta.value();
  const double lo_s = 1.0 / b;
  const double hi_s = 1.0 / (b * (b - 1.0));
  return Regions{Interval(0.0, lo_s), Interval(lo_s, hi_s), Interval(hi_s, beta.upper())};
}

Region region_of(double x, const BetaParam& beta) {
  const double b = beta.value();
  if (x < 0.0 || x > beta.upper()) return Region::Outside;
  if (x < 1.0 / b) return Region::Lower;
  if (x <= 1.0 / (b * (b - 1.0))) return Region::Switch;
  return Region::Upper;
}

bool in_support(double x, const BetaParam& beta) {
  const double tol = beta.tolerance();
  return x >= -tol && x <= beta.upper() + tol;
}

bool branches(double y, const BetaParam& beta) {
  return in_support(apply_map(0, y, beta), beta) && in_support(apply_map(1, y, beta), beta);
}

bool branches(const AlgebraicValue& y, const QuadraticField& field) {
  return field.in_support(field.apply_map(0, y)) && field.in_support(field.apply_map(1, y));
}

double apply_map(int digit, double x, const BetaParam& beta) { return beta.value() * x - digit; }

AlgebraicValue apply_map(int digit, const AlgebraicValue& x, const BetaParam& beta) {
  return QuadraticField(beta).apply_map(digit, x);
}

double apply_word(const SymbolWord& word, double x, const BetaParam& beta) {
  const double b = beta.value();
  for (auto d : word.digits()) x = b * x - d;
  return x;
}

AlgebraicValue apply_word(const SymbolWord& word, const AlgebraicValue& x, const BetaParam& beta) {
  const QuadraticField field(beta);
  AlgebraicValue y = x;
  for (auto d : word.digits()) y = field.apply_map(d, y);
  return y;
}

double bernoulli_cylinder_mass(const SymbolWord& word) {
  return std::ldexp(1.0, -static_cast<int>(word.size()));
}

SymbolWord shift_word(const SymbolWord& word) {
  if (word.empty()) throw DomainError("empty word");
  return SymbolWord({word.digits().begin() + 1, word.digits().end()}, word.alphabet());
}

}  // namespace betalab
