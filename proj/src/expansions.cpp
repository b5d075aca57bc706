#include "betalab/expansions.hpp"

#include <algorithm>
#include <cstdio>
#include <ostream>

#include "betalab/parallel.hpp"

namespace betalab {

namespace {

void check_request(double x_shadow, bool in_range, int n, const EnumerationOptions& options) {
  if (n < 0) throw DomainError("depth must be nonnegative");
  if (n > options.max_depth) throw ResourceError("depth exceeds the configured cap");
  if (!in_range) throw DomainError("x = " + std::to_string(x_shadow) + " lies outside I_beta");
}

// Levels [0, k) are tallied while collecting the frontier at depth k.
template <class Arith>
std::vector<typename Arith::value_type> frontier(const Arith& arith, const typename Arith::value_type& x, int k,
                                                 CountSeries* tally) {
  std::vector<typename Arith::value_type> nodes;
  walk_expansion_tree(arith, x, k, [&](const std::vector<std::uint8_t>& path, const auto& value) {
    const auto d = path.size();
    if (static_cast<int>(d) == k) {
      nodes.push_back(value);
      return;
    }
    if (tally) {
      tally->count[d] += 1;
      if (arith.in_support(arith.step(0, value)) && arith.in_support(arith.step(1, value))) {
        tally->branching[d] += 1;
      }
    }
  });
  return nodes;
}

template <class Arith>
CountSeries count_series_impl(const Arith& arith, const typename Arith::value_type& x, int max_n,
                              const EnumerationOptions& options) {
  CountSeries series;
  series.count.assign(static_cast<std::size_t>(max_n) + 1, 0);
  series.branching.assign(static_cast<std::size_t>(max_n) + 1, 0);
  const int k = std::min(options.split_depth, max_n);
  const auto roots = frontier(arith, x, k, &series);

  std::vector<CountSeries> partial(roots.size());
  parallel_tasks(roots.size(), options.threads, [&](std::size_t t) {
    CountSeries& local = partial[t];
    local.count.assign(static_cast<std::size_t>(max_n - k) + 1, 0);
    local.branching.assign(static_cast<std::size_t>(max_n - k) + 1, 0);
    walk_expansion_tree(arith, roots[t], max_n - k, [&](const std::vector<std::uint8_t>& path, const auto& value) {
      const auto d = path.size();
      local.count[d] += 1;
      if (arith.in_support(arith.step(0, value)) && arith.in_support(arith.step(1, value))) {
        local.branching[d] += 1;
      }
    });
  });
  for (const auto& local : partial) {
    for (std::size_t d = 0; d < local.count.size(); ++d) {
      series.count[d + static_cast<std::size_t>(k)] += local.count[d];
      series.branching[d + static_cast<std::size_t>(k)] += local.branching[d];
    }
  }
  return series;
}

template <class Arith>
std::vector<typename Arith::value_type> collect_leaves(const Arith& arith, const typename Arith::value_type& x, int n,
                                                       const EnumerationOptions& options) {
  const int k = std::min(options.split_depth, n);
  const auto roots = frontier(arith, x, k, nullptr);
  std::vector<std::vector<typename Arith::value_type>> partial(roots.size());
  parallel_tasks(roots.size(), options.threads, [&](std::size_t t) {
    walk_expansion_tree(arith, roots[t], n - k, [&](const std::vector<std::uint8_t>& path, const auto& value) {
      if (static_cast<int>(path.size()) == n - k) partial[t].push_back(value);
    });
  });
  std::vector<typename Arith::value_type> leaves;
  for (auto& p : partial) leaves.insert(leaves.end(), p.begin(), p.end());
  return leaves;
}

template <class Arith>
SymbolWord greedy_impl(const Arith& arith, typename Arith::value_type x, int n, bool greedy) {
  if (!arith.in_support(x)) throw DomainError("x lies outside I_beta");
  if (n < 0) throw DomainError("length must be nonnegative");
  SymbolWord word;
  const int preferred = greedy ? 1 : 0;
  for (int k = 0; k < n; ++k) {
    auto next = arith.step(preferred, x);
    if (arith.in_support(next)) {
      word.push_back(static_cast<unsigned>(preferred));
    } else {
      next = arith.step(1 - preferred, x);
      word.push_back(static_cast<unsigned>(1 - preferred));
    }
    x = std::move(next);
  }
  return word;
}

}  // namespace

std::uint64_t OrbitMultiset::switch_count(const BetaParam& beta) const {
  std::uint64_t total_in_s = 0;
  std::optional<QuadraticField> field;
  if (beta.is_exact()) field.emplace(beta);
  for (const auto& e : entries) {
    const bool in_s = (e.exact && field) ? branches(*e.exact, *field) : branches(e.value, beta);
    if (in_s) total_in_s += e.multiplicity;
  }
  return total_in_s;
}

OrbitMultiset enumerate_orbit(double x, const BetaParam& beta, int n, const EnumerationOptions& options) {
  const FloatArithmetic arith(beta);
  check_request(x, arith.in_support(x), n, options);
  auto leaves = collect_leaves(arith, x, n, options);
  std::sort(leaves.begin(), leaves.end());

  OrbitMultiset result;
  result.depth = n;
  result.total = leaves.size();
  // Runs whose consecutive gaps are within tolerance collapse to their first value.
  for (std::size_t i = 0; i < leaves.size(); ++i) {
    if (i > 0 && leaves[i] - leaves[i - 1] <= arith.tol) {
      result.entries.back().multiplicity += 1;
    } else {
      result.entries.push_back({leaves[i], std::nullopt, 1});
    }
  }
  return result;
}

OrbitMultiset enumerate_orbit(const AlgebraicValue& x, const BetaParam& beta, int n,
                              const EnumerationOptions& options) {
  const ExactArithmetic arith(beta);
  check_request(x.shadow, arith.in_support(x), n, options);
  auto leaves = collect_leaves(arith, x, n, options);
  const auto& field = arith.field;
  std::sort(leaves.begin(), leaves.end(), [&](const AlgebraicValue& l, const AlgebraicValue& r) {
    if (l.shadow != r.shadow) return l.shadow < r.shadow;
    return field.compare(l, r) < 0;
  });

  OrbitMultiset result;
  result.depth = n;
  result.total = leaves.size();
  for (std::size_t i = 0; i < leaves.size(); ++i) {
    if (!result.entries.empty() && *result.entries.back().exact == leaves[i]) {
      result.entries.back().multiplicity += 1;
    } else {
      result.entries.push_back({leaves[i].shadow, leaves[i], 1});
    }
  }
  return result;
}

CountSeries count_series(double x, const BetaParam& beta, int max_n, const EnumerationOptions& options) {
  const FloatArithmetic arith(beta);
  check_request(x, arith.in_support(x), max_n, options);
  return count_series_impl(arith, x, max_n, options);
}

CountSeries count_series(const AlgebraicValue& x, const BetaParam& beta, int max_n,
                         const EnumerationOptions& options) {
  const ExactArithmetic arith(beta);
  check_request(x.shadow, arith.in_support(x), max_n, options);
  return count_series_impl(arith, x, max_n, options);
}

void write_count_series_csv(std::ostream& out, const CountSeries& series, const BetaParam& beta) {
  out << "n,N_n,scaled\n";
  const double half = beta.value() / 2.0;
  double scale = 1.0;
  char buf[64];
  for (std::size_t n = 0; n < series.count.size(); ++n) {
    std::snprintf(buf, sizeof buf, "%.17g", scale * static_cast<double>(series.count[n]));
    if (n > 0) out << n << ',' << series.count[n] << ',' << buf << '\n';
    scale *= half;
  }
}

std::vector<AdmissibleWord> admissible_words(double x, const BetaParam& beta, int n, int max_depth) {
  const FloatArithmetic arith(beta);
  EnumerationOptions opts;
  opts.max_depth = max_depth;
  check_request(x, arith.in_support(x), n, opts);
  std::vector<AdmissibleWord> words;
  walk_expansion_tree(arith, x, n, [&](const std::vector<std::uint8_t>& path, double value) {
    if (static_cast<int>(path.size()) == n) words.push_back({SymbolWord(path), value});
  });
  return words;
}

SymbolWord greedy_expansion(double x, const BetaParam& beta, int n) {
  return greedy_impl(FloatArithmetic(beta), x, n, true);
}

SymbolWord lazy_expansion(double x, const BetaParam& beta, int n) {
  return greedy_impl(FloatArithmetic(beta), x, n, false);
}

SymbolWord greedy_expansion(const AlgebraicValue& x, const BetaParam& beta, int n) {
  return greedy_impl(ExactArithmetic(beta), x, n, true);
}

SymbolWord lazy_expansion(const AlgebraicValue& x, const BetaParam& beta, int n) {
  return greedy_impl(ExactArithmetic(beta), x, n, false);
}

RandomState::RandomState(double x, std::uint64_t seed) : x_(x), seed_(seed), rng_(seed) {}

int RandomState::next_coin() {
  if (buffered_ == 0) {
    buffer_ = rng_();
    buffered_ = 64;
  }
  const int coin = static_cast<int>(buffer_ & 1u);
  buffer_ >>= 1;
  --buffered_;
  ++consumed_;
  return coin;
}

int random_beta_advance(RandomState& state, const BetaParam& beta) {
  const double x = state.x();
  if (!in_support(x, beta)) throw DomainError("K_beta state lies outside I_beta");
  const double b = beta.value();
  int digit;
  if (x < 1.0 / b) {
    digit = 0;
  } else if (x > 1.0 / (b * (b - 1.0))) {
    digit = 1;
  } else {
    digit = state.next_coin();
  }
  state.set_x(b * x - digit);
  return digit;
}

std::pair<RandomState, int> random_beta_step(RandomState state, const BetaParam& beta) {
  const int digit = random_beta_advance(state, beta);
  return {std::move(state), digit};
}

}  // namespace betalab
