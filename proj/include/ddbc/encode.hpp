#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "ddbc/bnn.hpp"
#include "ddbc/cnf.hpp"
#include "ddbc/nnf.hpp"
#include "ddbc/util.hpp"

namespace ddbc {

// Minimal number of conveniently instantiated inputs (sign matching the
// weight) that force a neuron true:
//   d = ceil((-b + sum(w)) / 2) + #negative weights.
// The sum of weights is integral; only -b passes through floating point, and
// an exact zero of w.i + b counts as firing. Unclamped: d <= 0 means the
// neuron is constantly true, d > fan-in constantly false.
inline long convenient_threshold(std::span<const int> w, double b) {
  long sum = 0, negatives = 0;
  for (int wi : w) {
    if (wi != 1 && wi != -1)
      throw ValidationError("convenient_threshold: weights must be -1 or +1");
    sum += wi;
    if (wi < 0) ++negatives;
  }
  return long(std::ceil((double(sum) - b) / 2.0)) + negatives;
}

// Convenient inputs for one neuron, in input order, plus its threshold.
struct ThresholdSpec {
  std::vector<NnfRef> convenient_literals;
  long d = 0;
};

// Cell (M, d) of the row-wise threshold matrix
//   c(k,t) = (lit_k & c(k-1,t-1)) | c(k-1,t),  c(k,0) = T,  c(k,t) = F (k<t),
// whose semantics is "at least t of the first k inputs are conveniently
// instantiated". Cells are shared, so the result is a DAG, not a tree.
inline NnfRef build_threshold_matrix(const ThresholdSpec& spec) {
  const long m = long(spec.convenient_literals.size());
  if (spec.d <= 0) return nnf_true();
  if (spec.d > m) return nnf_false();
  const size_t cols = size_t(spec.d) + 1;
  std::vector<NnfRef> prev(cols), cur(cols);
  prev[0] = nnf_true();
  for (size_t t = 1; t < cols; ++t) prev[t] = nnf_false();
  for (long k = 1; k <= m; ++k) {
    const NnfRef& lit = spec.convenient_literals[size_t(k - 1)];
    cur[0] = nnf_true();
    for (long t = 1; t <= spec.d; ++t) {
      cur[size_t(t)] = t > k ? nnf_false()
                             : nnf_or2(nnf_and2(lit, prev[size_t(t - 1)]),
                                       prev[size_t(t)]);
    }
    std::swap(prev, cur);
  }
  return prev[size_t(spec.d)];
}

// Formula for one neuron over the formulas of its inputs: input k enters
// positively when w_k = +1 and De-Morgan-negated when w_k = -1.
inline NnfRef encode_neuron(const std::vector<NnfRef>& input_formulas,
                            std::span<const int> w, double b) {
  if (input_formulas.size() != w.size())
    throw ValidationError("encode_neuron: input/weight count mismatch");
  ThresholdSpec spec;
  spec.d = convenient_threshold(w, b);
  spec.convenient_literals.reserve(w.size());
  for (size_t k = 0; k < w.size(); ++k)
    spec.convenient_literals.push_back(
        w[k] > 0 ? input_formulas[k] : nnf_negate(input_formulas[k]));
  return build_threshold_matrix(spec);
}

struct EncodeOptions {
  size_t clause_budget = 1'000'000;
};

namespace detail {

// The same matrix recurrence with every cell held as a simplified CNF, so
// intermediate formulas stay pruned before they are reused.
inline CnfFormula threshold_matrix_cnf(const std::vector<CnfFormula>& lits,
                                       long d, int num_vars,
                                       size_t clause_budget) {
  const long m = long(lits.size());
  if (d <= 0) return CnfFormula::constant_true(num_vars);
  if (d > m) return CnfFormula::constant_false(num_vars);
  auto check = [&](const CnfFormula& f) -> const CnfFormula& {
    if (clause_budget && f.clause_count() > clause_budget)
      throw BudgetExceeded("cnf-encoder",
                           "clause count " + std::to_string(f.clause_count()) +
                               " exceeds budget " +
                               std::to_string(clause_budget));
    return f;
  };
  const size_t cols = size_t(d) + 1;
  std::vector<CnfFormula> prev(cols), cur(cols);
  prev[0] = CnfFormula::constant_true(num_vars);
  for (size_t t = 1; t < cols; ++t)
    prev[t] = CnfFormula::constant_false(num_vars);
  for (long k = 1; k <= m; ++k) {
    const CnfFormula& lit = lits[size_t(k - 1)];
    cur[0] = CnfFormula::constant_true(num_vars);
    for (long t = 1; t <= d; ++t) {
      if (t > k) {
        cur[size_t(t)] = CnfFormula::constant_false(num_vars);
        continue;
      }
      CnfFormula cell =
          cnf_or(cnf_and(lit, prev[size_t(t - 1)]), prev[size_t(t)]);
      cur[size_t(t)] = simplify_cnf(cell);
      check(cur[size_t(t)]);
    }
    std::swap(prev, cur);
  }
  return prev[size_t(d)];
}

}  // namespace detail

// Whole-network encoding: neurons become CNFs layer by layer, each layer's
// formulas substituting for the inputs of the next. No variables beyond the
// N inputs are ever introduced; the price is a possibly exponential
// distribution step, guarded by the clause budget.
inline CnfFormula encode_bnn(const BnnModel& model,
                             const EncodeOptions& options = {}) {
  const int n = model.num_inputs();
  if (n > 64)
    throw ValidationError("encode_bnn: at most 64 input features supported");

  // Positive/negated CNFs of the previous layer's outputs.
  std::vector<CnfFormula> pos, neg;
  pos.reserve(size_t(n));
  neg.reserve(size_t(n));
  for (int v = 1; v <= n; ++v) {
    pos.push_back(CnfFormula::literal(n, v, false));
    neg.push_back(CnfFormula::literal(n, v, true));
  }

  for (size_t layer_idx = 0; layer_idx < model.layers().size(); ++layer_idx) {
    const Layer& layer = model.layers()[layer_idx];
    std::vector<CnfFormula> next_pos;
    next_pos.reserve(size_t(layer.neurons()));
    for (int r = 0; r < layer.neurons(); ++r) {
      const std::vector<int>& w = layer.weights[size_t(r)];
      std::vector<CnfFormula> lits;
      lits.reserve(w.size());
      for (size_t k = 0; k < w.size(); ++k)
        lits.push_back(w[k] > 0 ? pos[k] : neg[k]);
      CnfFormula phi = detail::threshold_matrix_cnf(
          lits, convenient_threshold(w, layer.biases[size_t(r)]), n,
          options.clause_budget);
      next_pos.push_back(simplify_cnf(phi));
    }
    pos = std::move(next_pos);
    neg.clear();
    if (layer_idx + 1 < model.layers().size()) {
      // Negations are only needed where a next-layer weight is -1.
      std::vector<bool> needed(pos.size(), false);
      const Layer& next_layer = model.layers()[layer_idx + 1];
      for (const auto& row : next_layer.weights)
        for (size_t k = 0; k < row.size(); ++k)
          if (row[k] < 0) needed[k] = true;
      neg.resize(pos.size());
      for (size_t k = 0; k < pos.size(); ++k)
        if (needed[k])
          neg[k] = simplify_cnf(
              to_cnf(nnf_negate(cnf_to_nnf(pos[k])), n, options.clause_budget));
    }
  }
  return pos[0];
}

}  // namespace ddbc
