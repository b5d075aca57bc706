#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <random>
#include <utility>
#include <vector>

#include "betalab/core_numerics.hpp"

namespace betalab {

struct OrbitEntry {
  double value = 0.0;
  std::optional<AlgebraicValue> exact;
  std::uint64_t multiplicity = 0;
};

/// The multiset O^n(x) = {T_w(x) : |w| = n, T_w(x) in I_beta}. Multiplicity
/// counts the words landing on the same value.
struct OrbitMultiset {
  int depth = 0;
  std::vector<OrbitEntry> entries;  // sorted by value
  std::uint64_t total = 0;          // N_n(x; beta)

  /// Sum of multiplicities of entries where both branches are admissible.
  std::uint64_t switch_count(const BetaParam& beta) const;
};

struct EnumerationOptions {
  int max_depth = 40;
  unsigned threads = 1;
  /// Subtrees rooted at this depth are handed to workers.
  int split_depth = 6;
};

OrbitMultiset enumerate_orbit(double x, const BetaParam& beta, int n, const EnumerationOptions& options = {});
OrbitMultiset enumerate_orbit(const AlgebraicValue& x, const BetaParam& beta, int n,
                              const EnumerationOptions& options = {});

/// count[n] = N_n and branching[n] = |O^n(x) cap S| for n = 0..N, from one
/// depth-first pass. count[0] = 1.
struct CountSeries {
  std::vector<std::uint64_t> count;
  std::vector<std::uint64_t> branching;

  int max_depth() const { return static_cast<int>(count.size()) - 1; }
  /// N_1..N_N.
  std::vector<std::uint64_t> levels() const { return {count.begin() + 1, count.end()}; }
};

CountSeries count_series(double x, const BetaParam& beta, int max_n, const EnumerationOptions& options = {});
CountSeries count_series(const AlgebraicValue& x, const BetaParam& beta, int max_n,
                         const EnumerationOptions& options = {});

void write_count_series_csv(std::ostream& out, const CountSeries& series, const BetaParam& beta);

/// All admissible words of length n in lexicographic order, with T_w(x).
struct AdmissibleWord {
  SymbolWord word;
  double image = 0.0;
};
std::vector<AdmissibleWord> admissible_words(double x, const BetaParam& beta, int n, int max_depth = 40);

SymbolWord greedy_expansion(double x, const BetaParam& beta, int n);
SymbolWord lazy_expansion(double x, const BetaParam& beta, int n);
SymbolWord greedy_expansion(const AlgebraicValue& x, const BetaParam& beta, int n);
SymbolWord lazy_expansion(const AlgebraicValue& x, const BetaParam& beta, int n);

/// Point of the random beta-transformation together with its coin stream.
/// The stream omega is drawn 64 bits at a time from a seeded mt19937_64 and is
/// only consumed inside the switch region.
class RandomState {
 public:
  RandomState(double x, std::uint64_t seed);

  double x() const { return x_; }
  std::uint64_t seed() const { return seed_; }
  std::uint64_t consumed() const { return consumed_; }

  int next_coin();
  void set_x(double x) { x_ = x; }

 private:
  double x_;
  std::uint64_t seed_;
  std::mt19937_64 rng_;
  std::uint64_t buffer_ = 0;
  int buffered_ = 0;
  std::uint64_t consumed_ = 0;
};

/// One application of K_beta. Returns the advanced state and the emitted digit.
std::pair<RandomState, int> random_beta_step(RandomState state, const BetaParam& beta);
/// In-place variant for long trajectories.
int random_beta_advance(RandomState& state, const BetaParam& beta);

// Depth-first walk over the admissibility tree with an explicit stack. visit
// is called on every node (root included) with the digit path and T_path(x);
// children are pushed only when their image stays in I_beta. Children are
// visited in digit order, so leaves appear in lexicographic order.
template <class Arith, class Visitor>
void walk_expansion_tree(const Arith& arith, const typename Arith::value_type& x, int depth, Visitor&& visit) {
  using V = typename Arith::value_type;
  struct Frame {
    V value;
    int depth;
    int digit;
  };
  std::vector<Frame> stack;
  std::vector<std::uint8_t> path;
  stack.push_back({x, 0, -1});
  while (!stack.empty()) {
    Frame f = std::move(stack.back());
    stack.pop_back();
    if (f.depth > 0) {
      path.resize(static_cast<std::size_t>(f.depth - 1));
      path.push_back(static_cast<std::uint8_t>(f.digit));
    } else {
      path.clear();
    }
    visit(static_cast<const std::vector<std::uint8_t>&>(path), static_cast<const V&>(f.value));
    if (f.depth >= depth) continue;
    for (int digit = 1; digit >= 0; --digit) {
      V child = arith.step(digit, f.value);
      if (arith.in_support(child)) stack.push_back({std::move(child), f.depth + 1, digit});
    }
  }
}

}  // namespace betalab
