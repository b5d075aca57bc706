#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace betalab {

// Error taxonomy shared by every module. The CLI maps DomainError and
// ResourceError to config failures and UndefinedFiberError / NumericError to
// numeric failures.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

class ResourceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class UndefinedFiberError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

class UnsupportedError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  Interval() = default;
  Interval(double lo_, double hi_);

  double length() const { return hi - lo; }
  bool contains(double x) const { return x >= lo && x <= hi; }
  bool contains(const Interval& other) const { return other.lo >= lo && other.hi <= hi; }

  bool operator==(const Interval&) const = default;
};

/// Finite word over {0, ..., alphabet-1}. The beta side uses the binary
/// alphabet; IFS words use one symbol per map (0-based).
class SymbolWord {
 public:
  SymbolWord() = default;
  explicit SymbolWord(std::vector<std::uint8_t> digits, unsigned alphabet = 2);

  static SymbolWord parse(const std::string& text, unsigned alphabet = 2);

  std::size_t size() const { return digits_.size(); }
  bool empty() const { return digits_.empty(); }
  unsigned alphabet() const { return alphabet_; }
  std::uint8_t operator[](std::size_t i) const { return digits_[i]; }
  std::span<const std::uint8_t> digits() const { return digits_; }

  void push_back(unsigned digit);
  void pop_back() { digits_.pop_back(); }
  SymbolWord extended(unsigned digit) const;
  SymbolWord concat(const SymbolWord& tail) const;
  SymbolWord prefix(std::size_t n) const;

  std::string to_string() const;

  auto operator<=>(const SymbolWord& other) const { return digits_ <=> other.digits_; }
  bool operator==(const SymbolWord& other) const { return digits_ == other.digits_; }

 private:
  std::vector<std::uint8_t> digits_;
  unsigned alphabet_ = 2;
};

/// Minimal polynomial x^2 - p x - q of a quadratic integer base.
struct QuadraticPolynomial {
  std::int64_t p = 1;
  std::int64_t q = 1;
  bool operator==(const QuadraticPolynomial&) const = default;
};

struct FloatPolicy {
  double tolerance = 1e-9;
};

struct ExactQuadraticPolicy {
  QuadraticPolynomial polynomial;
};

using NumericPolicy = std::variant<FloatPolicy, ExactQuadraticPolicy>;

class BetaParam {
 public:
  static BetaParam floating(double beta, double tolerance = 1e-9);
  static BetaParam exact_quadratic(std::int64_t p, std::int64_t q);
  static BetaParam golden() { return exact_quadratic(1, 1); }

  double value() const { return beta_; }
  const NumericPolicy& policy() const { return policy_; }
  bool is_exact() const { return std::holds_alternative<ExactQuadraticPolicy>(policy_); }
  std::optional<QuadraticPolynomial> polynomial() const;

  /// Admissibility slack used by every floating-point comparison; exact mode
  /// falls back to the default so float shadows can still be classified.
  double tolerance() const;

  /// 1/(beta-1), the right end of I_beta.
  double upper() const { return 1.0 / (beta_ - 1.0); }
  Interval support() const { return {0.0, upper()}; }

  /// Same base, float policy. Used when an exact base feeds float-only code.
  BetaParam as_float() const { return floating(beta_, tolerance()); }

 private:
  BetaParam(double beta, NumericPolicy policy) : beta_(beta), policy_(policy) {}

  double beta_;
  NumericPolicy policy_;
};

/// Element (a + b*beta)/den of Q(beta). All values of one orbit share den,
/// which the maps T_i preserve.
struct AlgebraicValue {
  std::int64_t a = 0;
  std::int64_t b = 0;
  std::int64_t den = 1;
  double shadow = 0.0;

  bool operator==(const AlgebraicValue& o) const;
  std::string to_string() const;
};

/// Arithmetic in Z[beta][1/den] for beta a root of x^2 - p x - q.
class QuadraticField {
 public:
  explicit QuadraticField(const BetaParam& beta);

  AlgebraicValue make(std::int64_t a, std::int64_t b = 0, std::int64_t den = 1) const;
  AlgebraicValue beta_element(std::int64_t den = 1) const { return make(0, den, den); }

  AlgebraicValue times_beta(const AlgebraicValue& v) const;
  AlgebraicValue minus_integer(const AlgebraicValue& v, std::int64_t i) const;
  AlgebraicValue apply_map(int digit, const AlgebraicValue& v) const;

  /// Exact sign of a + b*beta.
  int sign(std::int64_t a, std::int64_t b) const;
  int sign(const AlgebraicValue& v) const { return sign(v.a, v.b); }
  /// Exact three-way comparison.
  int compare(const AlgebraicValue& lhs, const AlgebraicValue& rhs) const;

  bool in_support(const AlgebraicValue& v) const;
  /// Accurate float value of (a + b*beta)/den, avoiding cancellation.
  double evaluate(std::int64_t a, std::int64_t b, std::int64_t den) const;

  const QuadraticPolynomial& polynomial() const { return poly_; }
  double beta() const { return beta_; }

 private:
  QuadraticPolynomial poly_;
  std::int64_t discriminant_;
  double beta_;
};

// Numeric policies used by the enumeration templates. Both expose the same
// surface: one step of T_i and the (tolerant or exact) membership in I_beta.
struct FloatArithmetic {
  using value_type = double;

  explicit FloatArithmetic(const BetaParam& beta)
      : beta(beta.value()), tol(beta.tolerance()), upper(beta.upper()) {}

  double step(int digit, double x) const { return beta * x - digit; }
  bool in_support(double y) const { return y >= -tol && y <= upper + tol; }
  double shadow(double y) const { return y; }

  double beta;
  double tol;
  double upper;
};

struct ExactArithmetic {
  using value_type = AlgebraicValue;

  explicit ExactArithmetic(const BetaParam& beta) : field(beta) {}

  AlgebraicValue step(int digit, const AlgebraicValue& x) const { return field.apply_map(digit, x); }
  bool in_support(const AlgebraicValue& y) const { return field.in_support(y); }
  double shadow(const AlgebraicValue& y) const { return y.shadow; }

  QuadraticField field;
};

enum class Region { Lower, Switch, Upper, Outside };

/// Partition of I_beta into [0, 1/beta), S = [1/beta, 1/(beta(beta-1))] and
/// (1/(beta(beta-1)), 1/(beta-1)]. Endpoint conventions live in region_of.
struct Regions {
  Interval lower;
  Interval switch_region;
  Interval upper;
};

Regions regions(const BetaParam& beta);

/// Literal classification with closed S; points off I_beta are Outside.
Region region_of(double x, const BetaParam& beta);

/// Both T_0(y) and T_1(y) stay in I_beta (tolerant in float mode). This is the
/// branching test the enumeration uses, so branch counts and S-mass agree.
bool branches(double y, const BetaParam& beta);
bool branches(const AlgebraicValue& y, const QuadraticField& field);

bool in_support(double x, const BetaParam& beta);

/// T_i(x) = beta*x - i.
double apply_map(int digit, double x, const BetaParam& beta);
AlgebraicValue apply_map(int digit, const AlgebraicValue& x, const BetaParam& beta);

/// T_{a_1...a_n}: applies T_{a_1} first and T_{a_n} last.
double apply_word(const SymbolWord& word, double x, const BetaParam& beta);
AlgebraicValue apply_word(const SymbolWord& word, const AlgebraicValue& x, const BetaParam& beta);

/// m[a_1...a_n] = 2^-n.
double bernoulli_cylinder_mass(const SymbolWord& word);

SymbolWord shift_word(const SymbolWord& word);

}  // namespace betalab
