#pragma once

#include <chrono>
#include <functional>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "ddbc/bnn.hpp"
#include "ddbc/circuit.hpp"
#include "ddbc/util.hpp"

namespace ddbc {

enum class DistKind { Uniform, Product };

// Per-feature Bernoulli model of the entity population; uniform is the
// all-1/2 special case.
struct DistributionSpec {
  DistKind kind = DistKind::Uniform;
  std::vector<double> p;  // P(feature i = 1), Product only

  static DistributionSpec uniform() { return {}; }

  static DistributionSpec product(std::vector<double> probs) {
    for (double v : probs)
      if (!(v >= 0.0 && v <= 1.0))
        throw ValidationError("distribution: probabilities must be in [0,1]");
    DistributionSpec d;
    d.kind = DistKind::Product;
    d.p = std::move(probs);
    return d;
  }

  double q(int feature) const {
    if (kind == DistKind::Uniform) return 0.5;
    if (feature < 0 || feature >= int(p.size()))
      throw ValidationError("distribution: feature index out of range");
    return p[size_t(feature)];
  }

  bool is_uniform_equivalent() const {
    if (kind == DistKind::Uniform) return true;
    for (double v : p)
      if (v != 0.5) return false;
    return true;
  }

  void require_size(int n) const {
    if (kind == DistKind::Product && int(p.size()) != n)
      throw ValidationError("distribution covers " + std::to_string(p.size()) +
                            " features, expected " + std::to_string(n));
  }
};

// --- exact Shapley coefficients ----------------------------------------------

inline u128 gcd_u128(u128 a, u128 b) {
  while (b) {
    const u128 t = a % b;
    a = b;
    b = t;
  }
  return a;
}

struct Rational {
  u128 num = 0;
  u128 den = 1;

  Rational() = default;
  Rational(u128 n, u128 d) : num(n), den(d) {
    if (den == 0) throw ValidationError("rational with zero denominator");
    const u128 g = gcd_u128(num == 0 ? den : num, den);
    num /= g;
    den /= g;
    if (num == 0) den = 1;
  }

  double value() const { return double(num) / double(den); }
  bool operator==(const Rational& o) const {
    return num == o.num && den == o.den;
  }
};

inline u128 binomial_u128(int n, int k) {
  if (k < 0 || k > n) return 0;
  if (k > n - k) k = n - k;
  u128 r = 1;
  for (int i = 1; i <= k; ++i) r = r * u128(n - k + i) / u128(i);
  return r;
}

// l!(n-l-1)!/n! reduced through the identity 1 / (n * C(n-1, l)), which
// keeps everything inside 128 bits for n up to 64.
inline Rational shapley_coefficient(int l, int n) {
  if (n < 1 || l < 0 || l > n - 1)
    throw ValidationError("shapley_coefficient: need 0 <= l <= n-1");
  return Rational(1, u128(n) * binomial_u128(n - 1, l));
}

// --- alpha vectors -------------------------------------------------------------

// alpha(l) = sum over the C(m, l) subsets S of the gate's variable set with
// |S| = l of E[gate | entity agrees on S]. Literal leaves seed
// (P(lit), lit(e)); conjunction convolves (disjoint supports factor the
// expectation), disjunction adds (exclusive branches).
struct AlphaVector {
  std::vector<double> values;  // index l = 0..m
  u64 var_mask = 0;
  Entity entity;
  DistributionSpec dist;

  int vars() const { return int(values.size()) - 1; }
};

namespace detail {

inline std::vector<double> convolve(const std::vector<double>& a,
                                    const std::vector<double>& b) {
  std::vector<double> out(a.size() + b.size() - 1, 0.0);
  for (size_t i = 0; i < a.size(); ++i)
    for (size_t j = 0; j < b.size(); ++j) out[i + j] += a[i] * b[j];
  return out;
}

inline void require_sfi2(const Circuit& c, const char* who) {
  const auto rep = analyze(c, DetMode::Structural);
  if (!rep.decomposable)
    throw ValidationError(std::string(who) + ": circuit is not decomposable");
  if (!rep.smooth)
    throw ValidationError(std::string(who) + ": circuit is not smooth");
  if (rep.max_fan_in > 2)
    throw ValidationError(std::string(who) + ": fan-in exceeds 2");
  if (rep.determinism != DetStatus::Certified)
    throw ValidationError(std::string(who) +
                          ": determinism could not be certified");
}

}  // namespace detail

inline AlphaVector alpha_vector(const Circuit& c, const Entity& e,
                                const DistributionSpec& dist) {
  detail::require_sfi2(c, "alpha_vector");
  if (e.size() != c.num_features())
    throw ValidationError("alpha_vector: entity size mismatch");
  dist.require_size(c.num_features());
  const auto live = c.reachable();
  std::vector<std::vector<double>> buf(c.size());
  for (std::uint32_t id = 0; id < c.size(); ++id) {
    if (!live[id]) continue;
    const Gate& g = c.gate(id);
    switch (g.kind) {
      case GateKind::True: buf[id] = {1.0}; break;
      case GateKind::False: buf[id] = {0.0}; break;
      case GateKind::Lit: {
        const double q = g.negated ? 1.0 - dist.q(g.var) : dist.q(g.var);
        const bool holds = (e.values[size_t(g.var)] != 0) != g.negated;
        buf[id] = {q, holds ? 1.0 : 0.0};
        break;
      }
      case GateKind::And: {
        std::vector<double> acc{1.0};
        for (std::uint32_t ch : g.children)
          acc = detail::convolve(acc, buf[ch]);
        buf[id] = std::move(acc);
        break;
      }
      case GateKind::Or: {
        std::vector<double> acc(buf[g.children[0]].size(), 0.0);
        for (std::uint32_t ch : g.children)
          for (size_t l = 0; l < acc.size(); ++l) acc[l] += buf[ch][l];
        buf[id] = std::move(acc);
        break;
      }
    }
  }
  AlphaVector a;
  a.values = std::move(buf[c.root()]);
  a.var_mask = c.vars_of(c.root());
  a.entity = e;
  a.dist = dist;
  return a;
}

// Extend an alpha vector over m_extra features the circuit does not mention:
// conditioning on them never changes the expectation, so each slot picks up
// a binomial number of ways to choose the extra conditioned features.
inline AlphaVector pad_missing_vars(const AlphaVector& a, int m_extra) {
  if (m_extra < 0) throw ValidationError("pad_missing_vars: negative pad");
  if (m_extra == 0) return a;
  AlphaVector out = a;
  const int m = a.vars();
  out.values.assign(size_t(m + m_extra) + 1, 0.0);
  for (int j = 0; j <= m; ++j)
    for (int l = j; l <= j + m_extra; ++l)
      out.values[size_t(l)] +=
          a.values[size_t(j)] * double(binomial_u128(m_extra, l - j));
  return out;
}

// E[label] under the distribution: probability at literal leaves, product
// at and-gates, sum at or-gates. Equals alpha(0).
inline double expected_value(const Circuit& c, const DistributionSpec& dist) {
  const auto rep = analyze(c, DetMode::Structural);
  if (!rep.decomposable || !rep.smooth ||
      rep.determinism != DetStatus::Certified)
    throw ValidationError(
        "expected_value: needs a smooth deterministic decomposable circuit");
  dist.require_size(c.num_features());
  const auto live = c.reachable();
  std::vector<double> val(c.size(), 0.0);
  for (std::uint32_t id = 0; id < c.size(); ++id) {
    if (!live[id]) continue;
    const Gate& g = c.gate(id);
    switch (g.kind) {
      case GateKind::True: val[id] = 1.0; break;
      case GateKind::False: val[id] = 0.0; break;
      case GateKind::Lit:
        val[id] = g.negated ? 1.0 - dist.q(g.var) : dist.q(g.var);
        break;
      case GateKind::And: {
        double v = 1.0;
        for (std::uint32_t ch : g.children) v *= val[ch];
        val[id] = v;
        break;
      }
      case GateKind::Or: {
        double v = 0.0;
        for (std::uint32_t ch : g.children) v += val[ch];
        val[id] = v;
        break;
      }
    }
  }
  return val[c.root()];
}

// Exact integer alpha for the uniform distribution, scaled by 2^m at a gate
// with m variables. Anchors the floating-point path in tests.
inline std::vector<u128> alpha_vector_exact_uniform(const Circuit& c,
                                                    const Entity& e) {
  detail::require_sfi2(c, "alpha_vector_exact_uniform");
  const auto live = c.reachable();
  std::vector<std::vector<u128>> buf(c.size());
  for (std::uint32_t id = 0; id < c.size(); ++id) {
    if (!live[id]) continue;
    const Gate& g = c.gate(id);
    switch (g.kind) {
      case GateKind::True: buf[id] = {1}; break;
      case GateKind::False: buf[id] = {0}; break;
      case GateKind::Lit: {
        const bool holds = (e.values[size_t(g.var)] != 0) != g.negated;
        buf[id] = {1, holds ? u128(2) : u128(0)};
        break;
      }
      case GateKind::And: {
        std::vector<u128> acc{1};
        for (std::uint32_t ch : g.children) {
          std::vector<u128> next(acc.size() + buf[ch].size() - 1, 0);
          for (size_t i = 0; i < acc.size(); ++i)
            for (size_t j = 0; j < buf[ch].size(); ++j)
              next[i + j] += acc[i] * buf[ch][j];
          acc = std::move(next);
        }
        buf[id] = std::move(acc);
        break;
      }
      case GateKind::Or: {
        std::vector<u128> acc(buf[g.children[0]].size(), 0);
        for (std::uint32_t ch : g.children)
          for (size_t l = 0; l < acc.size(); ++l) acc[l] += buf[ch][l];
        buf[id] = std::move(acc);
        break;
      }
    }
  }
  return buf[c.root()];
}

// --- score reports -------------------------------------------------------------

enum class ShapMode { OpenboxCircuit, BlackboxCircuit, BlackboxBnn };

inline std::string to_string(ShapMode m) {
  switch (m) {
    case ShapMode::OpenboxCircuit: return "openbox-circuit";
    case ShapMode::BlackboxCircuit: return "blackbox-circuit";
    case ShapMode::BlackboxBnn: return "blackbox-bnn";
  }
  return "?";
}

inline ShapMode shap_mode_from_string(const std::string& s) {
  if (s == "openbox-circuit") return ShapMode::OpenboxCircuit;
  if (s == "blackbox-circuit") return ShapMode::BlackboxCircuit;
  if (s == "blackbox-bnn") return ShapMode::BlackboxBnn;
  throw ValidationError("unknown mode: " + s);
}

struct ShapReport {
  std::string entity_id;
  int label = 0;
  std::vector<double> scores;
  DistKind dist = DistKind::Uniform;
  ShapMode mode = ShapMode::OpenboxCircuit;
  double seconds = 0.0;
};

namespace detail {

inline double now_seconds() {
  return std::chrono::duration<double>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

}  // namespace detail

// Open-box scorer over a smooth fan-in-2 circuit covering every feature.
//
// For feature i the score is
//   sum_l coef(l, n) * [ alpha_{c|x_i=e_i}(l)
//                        - q_i * alpha_{c|x_i=1}(l)
//                        - (1-q_i) * alpha_{c|x_i=0}(l) ].
// Writing a gate's alpha vector as a polynomial in a grading variable, the
// root polynomial is jointly affine in the two leaf polynomials of any
// feature (decomposability forbids their product, determinism keeps sums).
// So one forward pass plus one reverse accumulation yields, for every
// feature at once, the coefficients A_i (positive leaf) and B_i (negated
// leaf) with  alpha_{c|x_i=1} - alpha_{c|x_i=0} = A_i - B_i,  and the
// bracket above collapses to (e_i - q_i) * (A_i - B_i). One explain() call
// costs two sweeps of the circuit instead of 3N conditioned evaluations.
class OpenboxShap {
 public:
  OpenboxShap(const Circuit& c, DistributionSpec dist)
      : circuit_(c), dist_(std::move(dist)) {
    const int n_features = c.num_features();
    if (n_features == 0) throw ValidationError("shap_openbox: no features");
    if (c.universe() != low_bits(n_features))
      throw ValidationError(
          "shap_openbox: circuit must range over all features");
    dist_.require_size(n_features);
    detail::require_sfi2(c, "shap_openbox");
    n_ = popcount(c.universe());
    const Gate& root = c.gate(c.root());
    root_constant_ =
        root.kind == GateKind::True || root.kind == GateKind::False;
    if (!root_constant_ && c.vars_of(c.root()) != c.universe())
      throw ValidationError(
          "shap_openbox: root does not cover every feature; apply "
          "make_smooth_fanin2 first");
    const auto live = c.reachable();
    for (std::uint32_t id = 0; id < c.size(); ++id)
      if (live[id]) topo_.push_back(id);
    coef_.resize(size_t(n_));
    for (int l = 0; l < n_; ++l)
      coef_[size_t(l)] = shapley_coefficient(l, n_).value();
  }

  ShapReport explain(const Entity& e) const {
    const double t0 = detail::now_seconds();
    if (e.size() != circuit_.num_features())
      throw ValidationError("shap_openbox: entity size mismatch");
    ShapReport rep;
    rep.entity_id = e.id;
    rep.mode = ShapMode::OpenboxCircuit;
    rep.dist = dist_.kind;
    rep.label = circuit_.evaluate(e) ? 1 : 0;
    rep.scores.assign(size_t(circuit_.num_features()), 0.0);
    if (root_constant_) {  // every conditional expectation coincides
      rep.seconds = detail::now_seconds() - t0;
      return rep;
    }

    std::vector<std::vector<double>> fwd(circuit_.size());
    for (std::uint32_t id : topo_) {
      const Gate& g = circuit_.gate(id);
      switch (g.kind) {
        case GateKind::True: fwd[id] = {1.0}; break;
        case GateKind::False: fwd[id] = {0.0}; break;
        case GateKind::Lit: {
          const double q = g.negated ? 1.0 - dist_.q(g.var) : dist_.q(g.var);
          const bool holds = (e.values[size_t(g.var)] != 0) != g.negated;
          fwd[id] = {q, holds ? 1.0 : 0.0};
          break;
        }
        case GateKind::And: {
          std::vector<double> acc{1.0};
          for (std::uint32_t ch : g.children)
            acc = detail::convolve(acc, fwd[ch]);
          fwd[id] = std::move(acc);
          break;
        }
        case GateKind::Or: {
          std::vector<double> acc(fwd[g.children[0]].size(), 0.0);
          for (std::uint32_t ch : g.children)
            for (size_t l = 0; l < acc.size(); ++l) acc[l] += fwd[ch][l];
          fwd[id] = std::move(acc);
          break;
        }
      }
    }

    // Reverse pass: adj[g] holds the polynomial coefficient of gate g in
    // the root polynomial, graded over the n - m_g features outside g.
    std::vector<std::vector<double>> adj(circuit_.size());
    for (std::uint32_t id : topo_)
      adj[id].assign(size_t(n_ - (int(fwd[id].size()) - 1) + 1), 0.0);
    adj[circuit_.root()][0] = 1.0;
    for (auto it = topo_.rbegin(); it != topo_.rend(); ++it) {
      const std::uint32_t id = *it;
      const Gate& g = circuit_.gate(id);
      if (g.kind == GateKind::Or) {
        for (std::uint32_t ch : g.children)
          for (size_t l = 0; l < adj[id].size(); ++l)
            adj[ch][l] += adj[id][l];
      } else if (g.kind == GateKind::And) {
        if (g.children.size() == 1) {
          for (size_t l = 0; l < adj[id].size(); ++l)
            adj[g.children[0]][l] += adj[id][l];
        } else {
          const std::uint32_t a = g.children[0];
          const std::uint32_t b = g.children[1];
          accumulate_product(adj[a], adj[id], fwd[b]);
          accumulate_product(adj[b], adj[id], fwd[a]);
        }
      }
    }

    for (std::uint32_t id : topo_) {
      const Gate& g = circuit_.gate(id);
      if (g.kind != GateKind::Lit) continue;
      const double e_i = e.values[size_t(g.var)] ? 1.0 : 0.0;
      const double sign = g.negated ? -1.0 : 1.0;
      double contribution = 0.0;
      for (int l = 0; l < n_; ++l)
        contribution += coef_[size_t(l)] * adj[id][size_t(l)];
      rep.scores[size_t(g.var)] +=
          (e_i - dist_.q(g.var)) * sign * contribution;
    }
    rep.seconds = detail::now_seconds() - t0;
    return rep;
  }

  const DistributionSpec& dist() const { return dist_; }

 private:
  static void accumulate_product(std::vector<double>& into,
                                 const std::vector<double>& a,
                                 const std::vector<double>& b) {
    for (size_t i = 0; i < a.size(); ++i) {
      if (a[i] == 0.0) continue;
      for (size_t j = 0; j < b.size(); ++j) into[i + j] += a[i] * b[j];
    }
  }

  const Circuit& circuit_;
  DistributionSpec dist_;
  int n_ = 0;
  bool root_constant_ = false;
  std::vector<std::uint32_t> topo_;
  std::vector<double> coef_;
};

inline ShapReport shap_openbox(const Circuit& c, const Entity& e,
                               const DistributionSpec& dist) {
  return OpenboxShap(c, dist).explain(e);
}

// Black-box scorer: precomputes the label of every entity in the population,
// then evaluates the Shapley sum literally, with the conditional expectation
// E[L | s] cached per feature-subset mask.
class BlackboxShap {
 public:
  BlackboxShap(const std::function<int(u64)>& label_of_mask, int n,
               DistributionSpec dist, ShapMode mode, int cap = 20)
      : n_(n), dist_(std::move(dist)), mode_(mode) {
    if (n < 1) throw ValidationError("shap_blackbox: no features");
    if (n > cap)
      throw BudgetExceeded("shap-blackbox",
                           "N=" + std::to_string(n) + " exceeds the cap of " +
                               std::to_string(cap) + " features");
    dist_.require_size(n);
    const u64 size = u64(1) << n;
    labels_.resize(size);
    for (u64 m = 0; m < size; ++m) {
      const int l = label_of_mask(m);
      if (l != 0 && l != 1)
        throw ValidationError("shap_blackbox: labels must be 0 or 1");
      labels_[m] = std::uint8_t(l);
    }
    weight_one_.assign(size, 1.0);
    weight_zero_.assign(size, 1.0);
    for (u64 m = 1; m < size; ++m) {
      const int low = std::countr_zero(m);
      weight_one_[m] = weight_one_[m & (m - 1)] * dist_.q(low);
      weight_zero_[m] = weight_zero_[m & (m - 1)] * (1.0 - dist_.q(low));
    }
    coef_.resize(size_t(n_));
    for (int l = 0; l < n_; ++l)
      coef_[size_t(l)] = shapley_coefficient(l, n_).value();
  }

  ShapReport explain(const Entity& e) const {
    const double t0 = detail::now_seconds();
    if (e.size() != n_) throw ValidationError("shap_blackbox: entity size");
    const u64 full = low_bits(n_);
    const u64 emask = e.to_mask();

    // E[L | entity agrees on s], for every subset mask s.
    std::vector<double> cond(size_t(1) << n_);
    for (u64 s = 0; s <= full; ++s) {
      const u64 u = full & ~s;
      const u64 base = emask & s;
      double acc = 0.0;
      for (u64 t = u;; t = (t - 1) & u) {
        acc += weight_one_[t] * weight_zero_[u ^ t] * labels_[base | t];
        if (t == 0) break;
      }
      cond[s] = acc;
    }

    ShapReport rep;
    rep.entity_id = e.id;
    rep.mode = mode_;
    rep.dist = dist_.kind;
    rep.label = labels_[emask];
    rep.scores.assign(size_t(n_), 0.0);
    for (int f = 0; f < n_; ++f) {
      const u64 others = full & ~bit(f);
      double score = 0.0;
      for (u64 s = others;; s = (s - 1) & others) {
        score += coef_[size_t(popcount(s))] * (cond[s | bit(f)] - cond[s]);
        if (s == 0) break;
      }
      rep.scores[size_t(f)] = score;
    }
    rep.seconds = detail::now_seconds() - t0;
    return rep;
  }

 private:
  int n_;
  DistributionSpec dist_;
  ShapMode mode_;
  std::vector<std::uint8_t> labels_;
  std::vector<double> weight_one_, weight_zero_;
  std::vector<double> coef_;
};

inline ShapReport shap_blackbox(const std::function<int(u64)>& label_of_mask,
                                int n, const Entity& e,
                                const DistributionSpec& dist,
                                ShapMode mode = ShapMode::BlackboxCircuit,
                                int cap = 20) {
  return BlackboxShap(label_of_mask, n, dist, mode, cap).explain(e);
}

inline ShapReport shap_blackbox_circuit(const Circuit& c, const Entity& e,
                                        const DistributionSpec& dist,
                                        int cap = 20) {
  return shap_blackbox(
      [&c](u64 m) { return c.evaluate_mask(m) ? 1 : 0; }, c.num_features(), e,
      dist, ShapMode::BlackboxCircuit, cap);
}

inline ShapReport shap_blackbox_bnn(const BnnModel& model, const Entity& e,
                                    const DistributionSpec& dist,
                                    int cap = 20) {
  return shap_blackbox([&model](u64 m) { return forward_mask(model, m); },
                       model.num_inputs(), e, dist, ShapMode::BlackboxBnn,
                       cap);
}

// --- CSV ------------------------------------------------------------------------

inline void write_scores_csv(std::ostream& os,
                             const std::vector<ShapReport>& reports,
                             const std::vector<std::string>& feature_names,
                             const std::vector<std::string>& notes = {}) {
  for (const std::string& note : notes) os << "# " << note << "\n";
  os << "entity_id,label,mode,feature,score,seconds\n";
  os.precision(17);
  for (const ShapReport& r : reports) {
    for (size_t f = 0; f < r.scores.size(); ++f) {
      os << r.entity_id << "," << r.label << "," << to_string(r.mode) << ","
         << (f < feature_names.size() ? feature_names[f]
                                      : "x" + std::to_string(f + 1))
         << "," << r.scores[f] << "," << r.seconds << "\n";
    }
  }
}

// Rows of `feature,p1`; features not listed stay at 1/2.
inline DistributionSpec parse_distribution_file(
    std::istream& is, const std::vector<std::string>& feature_names) {
  std::vector<double> p(feature_names.size(), 0.5);
  std::string line;
  bool any = false;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos)
      throw ValidationError("distribution file: expected `feature,p1`: " +
                            line);
    const std::string name = line.substr(0, comma);
    const std::string value = line.substr(comma + 1);
    if (name == "feature" && value == "p1") continue;  // header
    auto it = std::find(feature_names.begin(), feature_names.end(), name);
    if (it == feature_names.end())
      throw ValidationError("distribution file: unknown feature: " + name);
    try {
      p[size_t(it - feature_names.begin())] = std::stod(value);
    } catch (const std::exception&) {
      throw ValidationError("distribution file: bad probability: " + value);
    }
    any = true;
  }
  if (!any) return DistributionSpec::uniform();
  return DistributionSpec::product(std::move(p));
}

}  // namespace ddbc
