#pragma once

// Shared fixtures and brute-force oracles. Everything here stays independent
// of the implementation paths it checks: truth tables, exhaustive subset
// enumeration, and direct evaluation of the Shapley sum.

#include <functional>
#include <random>
#include <vector>

#include "ddbc/ddbc.hpp"

namespace ddbc::test {

// The worked three-input network used throughout: hidden weights
// (-1,-1,1) / (-1,-1,-1) / (1,1,1) with biases 0.16, output weights
// (1,1,-1) with bias -0.01. Its CNF is the pairwise at-most-one over
// x1,x2,x3.
inline BnnModel example_bnn() {
  Layer hidden;
  hidden.weights = {{-1, -1, 1}, {-1, -1, -1}, {1, 1, 1}};
  hidden.biases = {0.16, 0.16, 0.16};
  Layer out;
  out.weights = {{1, 1, -1}};
  out.biases = {-0.01};
  return BnnModel({hidden, out}, {"x1", "x2", "x3"});
}

inline CnfFormula example_cnf() {
  Clause c12{0, bit(0) | bit(1)};
  Clause c13{0, bit(0) | bit(2)};
  Clause c23{0, bit(1) | bit(2)};
  return CnfFormula(3, {c12, c13, c23});
}

// Deterministic fleet of small random models shared by property tests.
struct FleetSpec {
  int inputs;
  int hidden;
  u64 seed;
};

inline std::vector<FleetSpec> fleet(size_t count, int max_inputs,
                                    int max_hidden, u64 seed0 = 1000) {
  std::vector<FleetSpec> out;
  std::mt19937_64 rng(seed0);
  for (size_t i = 0; i < count; ++i) {
    const int n = 2 + int(rng() % u64(max_inputs - 1));
    const int h = 1 + int(rng() % u64(max_hidden));
    out.push_back({n, h, rng()});
  }
  return out;
}

inline bool functions_equal(const std::function<bool(u64)>& a,
                            const std::function<bool(u64)>& b, int n) {
  for (u64 m = 0; m < (u64(1) << n); ++m)
    if (a(m) != b(m)) return false;
  return true;
}

inline u64 brute_model_count(const std::function<bool(u64)>& f, int n) {
  u64 count = 0;
  for (u64 m = 0; m < (u64(1) << n); ++m)
    if (f(m)) ++count;
  return count;
}

// E[f(e') | e'_S = e_S] by direct weighted enumeration of completions.
inline double brute_conditional_expectation(const std::function<bool(u64)>& f,
                                            int n, u64 entity, u64 s,
                                            const DistributionSpec& dist) {
  const u64 full = low_bits(n);
  const u64 u = full & ~s;
  const u64 base = entity & s;
  double acc = 0.0;
  for (u64 t = u;; t = (t - 1) & u) {
    double w = 1.0;
    u64 scan = u;
    while (scan) {
      const int v = std::countr_zero(scan);
      scan &= scan - 1;
      w *= ((t >> v) & 1) ? dist.q(v) : 1.0 - dist.q(v);
    }
    acc += w * (f(base | t) ? 1.0 : 0.0);
    if (t == 0) break;
  }
  return acc;
}

// alpha(l) = sum_{|S|=l, S subset of vars} E[f | e_S], enumerated directly.
inline std::vector<double> brute_alpha(const std::function<bool(u64)>& f,
                                       int n, u64 vars, u64 entity,
                                       const DistributionSpec& dist) {
  const int m = popcount(vars);
  std::vector<double> alpha(size_t(m) + 1, 0.0);
  for (u64 s = vars;; s = (s - 1) & vars) {
    alpha[size_t(popcount(s))] +=
        brute_conditional_expectation(f, n, entity, s, dist);
    if (s == 0) break;
  }
  return alpha;
}

// The Shapley sum evaluated literally, term by term.
inline std::vector<double> brute_shap(const std::function<bool(u64)>& f,
                                      int n, u64 entity,
                                      const DistributionSpec& dist) {
  std::vector<double> scores(size_t(n), 0.0);
  const u64 full = low_bits(n);
  for (int i = 0; i < n; ++i) {
    const u64 others = full & ~bit(i);
    double total = 0.0;
    for (u64 s = others;; s = (s - 1) & others) {
      const double coef = shapley_coefficient(popcount(s), n).value();
      total += coef * (brute_conditional_expectation(f, n, entity, s | bit(i),
                                                     dist) -
                       brute_conditional_expectation(f, n, entity, s, dist));
      if (s == 0) break;
    }
    scores[size_t(i)] = total;
  }
  return scores;
}

// The per-feature score assembled from the public conditioning ops, exactly
// as the open-box contract states it; an independent route for checking the
// fused engine.
inline double conditioning_score(const Circuit& c, const Entity& e,
                                 const DistributionSpec& dist, int feature) {
  const int n = popcount(c.universe());
  const double q = dist.q(feature);
  auto padded_alpha = [&](int value) {
    const Circuit cc = condition(c, feature, value);
    AlphaVector a = alpha_vector(cc, e, dist);
    return pad_missing_vars(a, (n - 1) - a.vars());
  };
  const AlphaVector a1 = padded_alpha(1);
  const AlphaVector a0 = padded_alpha(0);
  const AlphaVector& ae = e.values[size_t(feature)] ? a1 : a0;
  double score = 0.0;
  for (int l = 0; l <= n - 1; ++l)
    score += shapley_coefficient(l, n).value() *
             (ae.values[size_t(l)] -
              (q * a1.values[size_t(l)] + (1.0 - q) * a0.values[size_t(l)]));
  return score;
}

inline DistributionSpec random_product_distribution(int n, u64 seed) {
  std::mt19937_64 rng(seed);
  std::vector<double> p(static_cast<size_t>(n));
  for (double& v : p) v = canonical_unit(rng());
  return DistributionSpec::product(std::move(p));
}

}  // namespace ddbc::test
