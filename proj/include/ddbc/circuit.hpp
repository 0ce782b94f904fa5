#pragma once

#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "ddbc/bnn.hpp"
#include "ddbc/util.hpp"

namespace ddbc {

enum class GateKind : std::uint8_t { Lit, True, False, And, Or };

struct Gate {
  GateKind kind;
  int var = -1;           // 0-based feature, Lit only
  bool negated = false;   // Lit only
  std::vector<std::uint32_t> children;
  u64 vars = 0;           // feature mask beneath this gate
};

// Deterministic decomposable Boolean circuit as a gate table in topological
// order (children always precede parents). Negations appear on variable
// leaves only. Building goes through the make_* methods, which fold
// constants and hash-cons structurally identical gates; the file loader uses
// raw appends instead and re-validates.
//
// `universe` tracks which features are still free: conditioning a feature
// removes it, so model counts and alpha vectors range over the remaining
// features while feature indices stay stable.
class Circuit {
 public:
  explicit Circuit(int num_features, std::vector<std::string> names = {})
      : num_features_(num_features),
        universe_(low_bits(num_features)),
        names_(std::move(names)) {
    if (num_features < 0 || num_features > 64)
      throw ValidationError("circuits support between 0 and 64 features");
    if (!names_.empty() && int(names_.size()) != num_features)
      throw ValidationError("feature name count does not match feature count");
  }

  int num_features() const { return num_features_; }
  u64 universe() const { return universe_; }
  void set_universe(u64 u) {
    if (u & ~low_bits(num_features_))
      throw ValidationError("universe mentions unknown features");
    universe_ = u;
  }
  const std::vector<std::string>& feature_names() const { return names_; }
  std::string feature_name(int i) const {
    return names_.empty() ? "x" + std::to_string(i + 1) : names_[size_t(i)];
  }

  std::uint32_t root() const { return root_; }
  void set_root(std::uint32_t r) {
    if (r >= gates_.size()) throw ValidationError("root gate out of range");
    root_ = r;
  }

  size_t size() const { return gates_.size(); }
  const Gate& gate(std::uint32_t id) const { return gates_[id]; }
  u64 vars_of(std::uint32_t id) const { return gates_[id].vars; }

  bool is_const(std::uint32_t id, bool value) const {
    return gates_[id].kind == (value ? GateKind::True : GateKind::False);
  }
  bool is_literal(std::uint32_t id) const {
    return gates_[id].kind == GateKind::Lit;
  }

  // --- builders -------------------------------------------------------------

  std::uint32_t constant(bool value) {
    Gate g{value ? GateKind::True : GateKind::False};
    return intern(std::move(g));
  }

  std::uint32_t literal(int var, bool negated) {
    if (var < 0 || var >= num_features_)
      throw ValidationError("literal: feature index out of range");
    Gate g{GateKind::Lit};
    g.var = var;
    g.negated = negated;
    g.vars = bit(var);
    return intern(std::move(g));
  }

  std::uint32_t make_and2(std::uint32_t a, std::uint32_t b) {
    return make_and({a, b});
  }
  std::uint32_t make_or2(std::uint32_t a, std::uint32_t b) {
    return make_or({a, b});
  }

  std::uint32_t make_and(std::vector<std::uint32_t> children) {
    std::vector<std::uint32_t> kept;
    for (std::uint32_t c : children) {
      check_id(c);
      if (is_const(c, false)) return constant(false);
      if (is_const(c, true)) continue;
      bool dup = false;
      for (std::uint32_t k : kept) {
        if (k == c) dup = true;
        if (complementary_literals(k, c)) return constant(false);
      }
      if (!dup) kept.push_back(c);
    }
    if (kept.empty()) return constant(true);
    if (kept.size() == 1) return kept[0];
    Gate g{GateKind::And};
    for (std::uint32_t c : kept) g.vars |= gates_[c].vars;
    g.children = std::move(kept);
    return intern(std::move(g));
  }

  // Complementary literal children are kept: (v | -v) is the smoothing
  // gadget and must stay a gate with variable set {v}.
  std::uint32_t make_or(std::vector<std::uint32_t> children) {
    std::vector<std::uint32_t> kept;
    for (std::uint32_t c : children) {
      check_id(c);
      if (is_const(c, true)) return constant(true);
      if (is_const(c, false)) continue;
      bool dup = false;
      for (std::uint32_t k : kept)
        if (k == c) dup = true;
      if (!dup) kept.push_back(c);
    }
    if (kept.empty()) return constant(false);
    if (kept.size() == 1) return kept[0];
    Gate g{GateKind::Or};
    for (std::uint32_t c : kept) g.vars |= gates_[c].vars;
    g.children = std::move(kept);
    return intern(std::move(g));
  }

  // Loader path: no folding, no hash-consing, but children must precede.
  std::uint32_t append_gate(Gate g) {
    for (std::uint32_t c : g.children)
      if (c >= gates_.size())
        throw ValidationError("gate references a later or missing gate");
    g.vars = 0;
    if (g.kind == GateKind::Lit) {
      if (g.var < 0 || g.var >= num_features_)
        throw ValidationError("literal feature index out of range");
      g.vars = bit(g.var);
    }
    for (std::uint32_t c : g.children) g.vars |= gates_[c].vars;
    gates_.push_back(std::move(g));
    return std::uint32_t(gates_.size() - 1);
  }

  bool complementary_literals(std::uint32_t a, std::uint32_t b) const {
    const Gate& ga = gates_[a];
    const Gate& gb = gates_[b];
    return ga.kind == GateKind::Lit && gb.kind == GateKind::Lit &&
           ga.var == gb.var && ga.negated != gb.negated;
  }

  // --- evaluation -----------------------------------------------------------

  bool evaluate_mask(u64 assignment) const {
    std::vector<char> val(gates_.size());
    for (std::uint32_t id = 0; id < gates_.size(); ++id) {
      const Gate& g = gates_[id];
      switch (g.kind) {
        case GateKind::True: val[id] = 1; break;
        case GateKind::False: val[id] = 0; break;
        case GateKind::Lit:
          val[id] = (((assignment >> g.var) & 1) != u64(g.negated)) ? 1 : 0;
          break;
        case GateKind::And: {
          char v = 1;
          for (std::uint32_t c : g.children) v = char(v & val[c]);
          val[id] = v;
          break;
        }
        case GateKind::Or: {
          char v = 0;
          for (std::uint32_t c : g.children) v = char(v | val[c]);
          val[id] = v;
          break;
        }
      }
    }
    return val[root_] != 0;
  }

  bool evaluate(const Entity& e) const {
    if (e.size() != num_features_)
      throw ValidationError("evaluate: entity has " + std::to_string(e.size()) +
                            " values, circuit " +
                            std::to_string(num_features_) + " features");
    return evaluate_mask(e.to_mask());
  }

  std::vector<bool> reachable() const {
    std::vector<bool> seen(gates_.size(), false);
    if (gates_.empty()) return seen;
    std::vector<std::uint32_t> stack{root_};
    while (!stack.empty()) {
      const auto id = stack.back();
      stack.pop_back();
      if (seen[id]) continue;
      seen[id] = true;
      for (std::uint32_t c : gates_[id].children) stack.push_back(c);
    }
    return seen;
  }

  size_t reachable_count() const {
    size_t n = 0;
    for (bool b : reachable()) n += b;
    return n;
  }

 private:
  void check_id(std::uint32_t id) const {
    if (id >= gates_.size()) throw ValidationError("gate id out of range");
  }

  std::uint32_t intern(Gate g) {
    u64 h = hash_combine(u64(g.kind), u64(g.var) ^ (u64(g.negated) << 32));
    for (std::uint32_t c : g.children) h = hash_combine(h, c);
    auto [it, inserted] = hash_.try_emplace(h, std::vector<std::uint32_t>{});
    for (std::uint32_t cand : it->second) {
      const Gate& gc = gates_[cand];
      if (gc.kind == g.kind && gc.var == g.var && gc.negated == g.negated &&
          gc.children == g.children)
        return cand;
    }
    gates_.push_back(std::move(g));
    const auto id = std::uint32_t(gates_.size() - 1);
    it->second.push_back(id);
    return id;
  }

  std::vector<Gate> gates_;
  std::unordered_map<u64, std::vector<std::uint32_t>> hash_;
  std::uint32_t root_ = 0;
  int num_features_;
  u64 universe_;
  std::vector<std::string> names_;
};

// --- structural validators --------------------------------------------------

inline bool check_decomposable(const Circuit& c) {
  const auto live = c.reachable();
  for (std::uint32_t id = 0; id < c.size(); ++id) {
    if (!live[id]) continue;
    const Gate& g = c.gate(id);
    if (g.kind != GateKind::And) continue;
    u64 seen = 0;
    for (std::uint32_t ch : g.children) {
      if (seen & c.vars_of(ch)) return false;
      seen |= c.vars_of(ch);
    }
  }
  return true;
}

inline bool check_smooth(const Circuit& c) {
  const auto live = c.reachable();
  for (std::uint32_t id = 0; id < c.size(); ++id) {
    if (!live[id]) continue;
    const Gate& g = c.gate(id);
    if (g.kind != GateKind::Or) continue;
    for (std::uint32_t ch : g.children)
      if (c.vars_of(ch) != c.vars_of(g.children[0])) return false;
  }
  return true;
}

inline int max_fan_in(const Circuit& c) {
  const auto live = c.reachable();
  int m = 0;
  for (std::uint32_t id = 0; id < c.size(); ++id)
    if (live[id] &&
        (c.gate(id).kind == GateKind::And || c.gate(id).kind == GateKind::Or))
      m = std::max(m, int(c.gate(id).children.size()));
  return m;
}

inline bool check_fanin(const Circuit& c, int k) { return max_fan_in(c) <= k; }

enum class DetMode { Structural, Exhaustive };
enum class DetStatus { Certified, Violated, Unverified };

struct DetCheck {
  DetStatus status = DetStatus::Certified;
  std::optional<u64> witness_assignment;
  std::optional<std::uint32_t> witness_gate;
};

namespace detail {

// A literal anchors a gate when gate-true forces the literal true. Or-gates
// take the intersection of their children's anchors, and-gates the union;
// an unsatisfiable child anchors everything. Two or-children with
// complementary anchors can never both fire.
struct Anchors {
  u64 pos = 0, neg = 0;
  bool never_true = false;
};

inline std::vector<Anchors> compute_anchors(const Circuit& c) {
  std::vector<Anchors> a(c.size());
  for (std::uint32_t id = 0; id < c.size(); ++id) {
    const Gate& g = c.gate(id);
    switch (g.kind) {
      case GateKind::Lit:
        (g.negated ? a[id].neg : a[id].pos) = bit(g.var);
        break;
      case GateKind::True:
        break;
      case GateKind::False:
        a[id].never_true = true;
        break;
      case GateKind::And:
        for (std::uint32_t ch : g.children) {
          a[id].pos |= a[ch].pos;
          a[id].neg |= a[ch].neg;
          a[id].never_true = a[id].never_true || a[ch].never_true;
        }
        break;
      case GateKind::Or: {
        bool first = true, all_never = true;
        for (std::uint32_t ch : g.children) {
          if (a[ch].never_true) continue;
          all_never = false;
          if (first) {
            a[id].pos = a[ch].pos;
            a[id].neg = a[ch].neg;
            first = false;
          } else {
            a[id].pos &= a[ch].pos;
            a[id].neg &= a[ch].neg;
          }
        }
        a[id].never_true = all_never;
        break;
      }
    }
  }
  return a;
}

}  // namespace detail

// Structural mode certifies or-gates whose children carry complementary
// anchor literals (the shape produced by decision-diagram translation and
// preserved by the smoothing gadget); it never claims a violation.
// Exhaustive mode checks every assignment over the gate's variable set, up
// to the per-gate budget; gates above the budget leave the result
// Unverified rather than silently passing.
inline DetCheck check_deterministic(const Circuit& c, DetMode mode,
                                    u64 per_gate_budget = u64(1) << 20) {
  DetCheck result;
  const auto live = c.reachable();
  if (mode == DetMode::Structural) {
    const auto anchors = detail::compute_anchors(c);
    for (std::uint32_t id = 0; id < c.size(); ++id) {
      if (!live[id] || c.gate(id).kind != GateKind::Or) continue;
      const auto& ch = c.gate(id).children;
      for (size_t i = 0; i < ch.size(); ++i) {
        for (size_t j = i + 1; j < ch.size(); ++j) {
          const auto& ai = anchors[ch[i]];
          const auto& aj = anchors[ch[j]];
          if (ai.never_true || aj.never_true) continue;
          if ((ai.pos & aj.neg) || (ai.neg & aj.pos)) continue;
          result.status = DetStatus::Unverified;
          result.witness_gate = id;
          return result;
        }
      }
    }
    return result;
  }

  // Exhaustive: evaluate the sub-DAG under each or-gate.
  for (std::uint32_t id = 0; id < c.size(); ++id) {
    if (!live[id] || c.gate(id).kind != GateKind::Or) continue;
    const u64 vm = c.vars_of(id);
    const int m = popcount(vm);
    if (m >= 63 || (u64(1) << m) > per_gate_budget) {
      result.status = DetStatus::Unverified;
      result.witness_gate = id;
      continue;
    }
    // Gates under id, in topological order.
    std::vector<std::uint32_t> sub;
    {
      std::vector<bool> seen(c.size(), false);
      std::vector<std::uint32_t> stack{id};
      while (!stack.empty()) {
        const auto g = stack.back();
        stack.pop_back();
        if (seen[g]) continue;
        seen[g] = true;
        sub.push_back(g);
        for (std::uint32_t chd : c.gate(g).children) stack.push_back(chd);
      }
      std::sort(sub.begin(), sub.end());
    }
    std::vector<char> val(c.size());
    for (u64 s = vm;; s = (s - 1) & vm) {
      for (std::uint32_t g : sub) {
        const Gate& gg = c.gate(g);
        switch (gg.kind) {
          case GateKind::True: val[g] = 1; break;
          case GateKind::False: val[g] = 0; break;
          case GateKind::Lit:
            val[g] = (((s >> gg.var) & 1) != u64(gg.negated)) ? 1 : 0;
            break;
          case GateKind::And: {
            char v = 1;
            for (std::uint32_t chd : gg.children) v = char(v & val[chd]);
            val[g] = v;
            break;
          }
          case GateKind::Or: {
            char v = 0;
            for (std::uint32_t chd : gg.children) v = char(v | val[chd]);
            val[g] = v;
            break;
          }
        }
      }
      int fired = 0;
      for (std::uint32_t chd : c.gate(id).children) fired += val[chd];
      if (fired > 1) {
        result.status = DetStatus::Violated;
        result.witness_assignment = s;
        result.witness_gate = id;
        return result;
      }
      if (s == 0) break;
    }
  }
  return result;
}

struct StructuralReport {
  bool decomposable = false;
  bool smooth = false;
  int max_fan_in = 0;
  DetStatus determinism = DetStatus::Unverified;
  DetMode det_mode = DetMode::Structural;
  size_t gate_count = 0;

  bool deterministic() const { return determinism == DetStatus::Certified; }
  bool is_sfi2() const {
    return decomposable && smooth && deterministic() && max_fan_in <= 2;
  }
};

inline StructuralReport analyze(const Circuit& c,
                                DetMode mode = DetMode::Structural,
                                u64 per_gate_budget = u64(1) << 20) {
  StructuralReport r;
  r.decomposable = check_decomposable(c);
  r.smooth = check_smooth(c);
  r.max_fan_in = max_fan_in(c);
  r.det_mode = mode;
  r.determinism = check_deterministic(c, mode, per_gate_budget).status;
  r.gate_count = c.reachable_count();
  return r;
}

// --- smooth + fan-in 2 transform ---------------------------------------------

// Rewrites an NNF deterministic decomposable circuit into an equivalent
// smooth circuit with fan-in at most 2. m-ary gates become chains; each
// or-child gets a (v | -v) gadget for every variable its sibling covers and
// it does not; finally the root is padded so its variable set is the whole
// universe. Constants short-circuit bottom-up. The "child equals the
// negation of the accumulator" shortcut is decided on literal leaves only.
inline Circuit make_smooth_fanin2(const Circuit& in) {
  Circuit out(in.num_features(), in.feature_names());
  out.set_universe(in.universe());
  auto gadget = [&](int v) {
    return out.make_or2(out.literal(v, false), out.literal(v, true));
  };
  std::vector<std::optional<std::uint32_t>> memo(in.size());

  auto fix = [&](auto&& self, std::uint32_t id) -> std::uint32_t {
    if (memo[id]) return *memo[id];
    const Gate& g = in.gate(id);
    std::uint32_t result = 0;
    switch (g.kind) {
      case GateKind::Lit:
        result = out.literal(g.var, g.negated);
        break;
      case GateKind::True:
        result = out.constant(true);
        break;
      case GateKind::False:
        result = out.constant(false);
        break;
      case GateKind::And: {
        std::uint32_t acc = out.constant(true);
        bool dead = false;
        for (std::uint32_t ch : g.children) {
          const std::uint32_t cf = self(self, ch);
          if (out.is_const(cf, false) || out.complementary_literals(acc, cf)) {
            dead = true;
            break;
          }
          if (out.is_const(cf, true)) continue;
          acc = out.make_and2(acc, cf);
        }
        result = dead ? out.constant(false) : acc;
        break;
      }
      case GateKind::Or: {
        std::uint32_t acc = out.constant(false);
        bool taut = false;
        for (std::uint32_t ch : g.children) {
          const std::uint32_t cf = self(self, ch);
          if (out.is_const(cf, true) || out.complementary_literals(acc, cf)) {
            taut = true;
            break;
          }
          if (out.is_const(cf, false)) continue;
          const u64 av = out.vars_of(acc);
          const u64 cv = out.vars_of(cf);
          std::uint32_t aligned = cf;
          u64 missing = av & ~cv;
          while (missing) {
            const int v = std::countr_zero(missing);
            missing &= missing - 1;
            aligned = out.make_and2(aligned, gadget(v));
          }
          if (!out.is_const(acc, false)) {
            u64 extra = cv & ~av;
            while (extra) {
              const int v = std::countr_zero(extra);
              extra &= extra - 1;
              acc = out.make_and2(acc, gadget(v));
            }
          }
          acc = out.make_or2(acc, aligned);
        }
        result = taut ? out.constant(true) : acc;
        break;
      }
    }
    memo[id] = result;
    return result;
  };

  std::uint32_t root = fix(fix, in.root());
  if (!out.is_const(root, false)) {
    u64 missing = in.universe() & ~out.vars_of(root);
    while (missing) {
      const int v = std::countr_zero(missing);
      missing &= missing - 1;
      root = out.make_and2(root, gadget(v));
    }
  }
  out.set_root(root);

  const size_t in_size = in.size() + size_t(in.num_features());
  const size_t quad_budget = 64 + 8 * in_size * in_size;
  if (out.size() > quad_budget)
    throw BudgetExceeded("circuit-transform",
                         "smooth/fan-in-2 output grew past the quadratic "
                         "budget (" +
                             std::to_string(out.size()) + " gates)");
  return out;
}

// --- conditioning -------------------------------------------------------------

// Pin a feature to a value: its leaves become constants, constants fold
// upward, and the feature leaves the universe. Determinism, decomposability
// and smoothness over the remaining variables survive.
inline Circuit condition(const Circuit& in, int feature, int value) {
  if (feature < 0 || feature >= in.num_features() ||
      !((in.universe() >> feature) & 1))
    throw ValidationError("condition: unknown feature id " +
                          std::to_string(feature));
  if (value != 0 && value != 1)
    throw ValidationError("condition: value must be 0 or 1");
  Circuit out(in.num_features(), in.feature_names());
  out.set_universe(in.universe() & ~bit(feature));
  std::vector<std::optional<std::uint32_t>> memo(in.size());
  auto fix = [&](auto&& self, std::uint32_t id) -> std::uint32_t {
    if (memo[id]) return *memo[id];
    const Gate& g = in.gate(id);
    std::uint32_t result = 0;
    switch (g.kind) {
      case GateKind::Lit:
        result = g.var == feature
                     ? out.constant((value == 1) != g.negated)
                     : out.literal(g.var, g.negated);
        break;
      case GateKind::True:
        result = out.constant(true);
        break;
      case GateKind::False:
        result = out.constant(false);
        break;
      case GateKind::And:
      case GateKind::Or: {
        std::vector<std::uint32_t> kids;
        kids.reserve(g.children.size());
        for (std::uint32_t ch : g.children) kids.push_back(self(self, ch));
        result = g.kind == GateKind::And ? out.make_and(std::move(kids))
                                         : out.make_or(std::move(kids));
        break;
      }
    }
    memo[id] = result;
    return result;
  };
  out.set_root(fix(fix, in.root()));
  return out;
}

// --- model counting -----------------------------------------------------------

// Exact satisfying-assignment count over the circuit's universe. Requires
// smoothness, decomposability and certified determinism; then disjoint
// supports make conjunction multiplicative and exclusive branches make
// disjunction additive.
inline u128 model_count(const Circuit& c) {
  const auto rep = analyze(c, DetMode::Structural);
  if (!rep.decomposable)
    throw ValidationError("model_count: circuit is not decomposable");
  if (!rep.smooth) throw ValidationError("model_count: circuit is not smooth");
  if (rep.determinism != DetStatus::Certified)
    throw ValidationError(
        "model_count: determinism could not be certified structurally");
  std::vector<u128> count(c.size(), 0);
  const auto live = c.reachable();
  for (std::uint32_t id = 0; id < c.size(); ++id) {
    if (!live[id]) continue;
    const Gate& g = c.gate(id);
    switch (g.kind) {
      case GateKind::Lit: count[id] = 1; break;
      case GateKind::True: count[id] = 1; break;
      case GateKind::False: count[id] = 0; break;
      case GateKind::And: {
        u128 v = 1;
        for (std::uint32_t ch : g.children) v *= count[ch];
        count[id] = v;
        break;
      }
      case GateKind::Or: {
        u128 v = 0;
        for (std::uint32_t ch : g.children) v += count[ch];
        count[id] = v;
        break;
      }
    }
  }
  const int free_vars = popcount(c.universe() & ~c.vars_of(c.root()));
  return count[c.root()] << free_vars;
}

// --- text format ---------------------------------------------------------------
//
//   ddbc <gate-count> <num-features>
//   c var <i> <name>          (optional, 1-based)
//   L <+-var> | T | F | A <k> <children...> | O <k> <children...>
//
// One gate per line, children refer to earlier lines (0-based), the last
// line is the root.

inline void save_circuit(std::ostream& os, const Circuit& c) {
  if (c.universe() != low_bits(c.num_features()))
    throw ValidationError("save_circuit: conditioned circuits are not saved");
  const auto live = c.reachable();
  std::vector<std::uint32_t> new_id(c.size(), 0);
  size_t count = 0;
  for (std::uint32_t id = 0; id < c.size(); ++id)
    if (live[id]) new_id[id] = std::uint32_t(count++);
  os << "ddbc " << count << " " << c.num_features() << "\n";
  if (!c.feature_names().empty())
    for (int i = 0; i < c.num_features(); ++i)
      os << "c var " << (i + 1) << " = " << c.feature_names()[size_t(i)]
         << "\n";
  for (std::uint32_t id = 0; id < c.size(); ++id) {
    if (!live[id]) continue;
    const Gate& g = c.gate(id);
    switch (g.kind) {
      case GateKind::Lit:
        os << "L " << (g.negated ? -(g.var + 1) : (g.var + 1)) << "\n";
        break;
      case GateKind::True: os << "T\n"; break;
      case GateKind::False: os << "F\n"; break;
      case GateKind::And:
      case GateKind::Or:
        os << (g.kind == GateKind::And ? "A " : "O ") << g.children.size();
        for (std::uint32_t ch : g.children) os << " " << new_id[ch];
        os << "\n";
        break;
    }
  }
}

inline Circuit load_circuit(std::istream& is) {
  std::string line;
  size_t declared = 0;
  int num_features = -1;
  std::vector<std::string> names;
  std::optional<Circuit> c;
  size_t seen = 0;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string tok;
    ls >> tok;
    if (tok == "ddbc") {
      if (!(ls >> declared >> num_features) || num_features < 0)
        throw ValidationError("malformed circuit header: " + line);
      continue;
    }
    if (tok == "c") {
      std::string kw, eq;
      size_t idx;
      if (ls >> kw >> idx >> eq && kw == "var" && eq == "=") {
        std::string rest;
        std::getline(ls, rest);
        if (!rest.empty() && rest.front() == ' ') rest.erase(rest.begin());
        if (names.size() < idx) names.resize(idx);
        if (idx >= 1) names[idx - 1] = rest;
      }
      continue;
    }
    if (num_features < 0)
      throw ValidationError("circuit file: gate before header");
    if (!c) {
      if (!names.empty()) names.resize(size_t(num_features));
      c.emplace(num_features, names);
    }
    Gate g{GateKind::True};
    if (tok == "T") {
      g.kind = GateKind::True;
    } else if (tok == "F") {
      g.kind = GateKind::False;
    } else if (tok == "L") {
      long lit;
      if (!(ls >> lit) || lit == 0)
        throw ValidationError("circuit file: bad literal line: " + line);
      g.kind = GateKind::Lit;
      g.var = int((lit > 0 ? lit : -lit) - 1);
      g.negated = lit < 0;
    } else if (tok == "A" || tok == "O") {
      g.kind = tok == "A" ? GateKind::And : GateKind::Or;
      size_t k;
      if (!(ls >> k) || k < 1)
        throw ValidationError("circuit file: bad gate arity: " + line);
      g.children.resize(k);
      for (size_t i = 0; i < k; ++i)
        if (!(ls >> g.children[i]))
          throw ValidationError("circuit file: missing children: " + line);
      std::uint32_t extra;
      if (ls >> extra)
        throw ValidationError("circuit file: trailing children: " + line);
    } else {
      throw ValidationError("circuit file: unknown gate kind: " + line);
    }
    c->append_gate(std::move(g));
    ++seen;
  }
  if (num_features < 0) throw ValidationError("circuit file: missing header");
  if (!c || seen == 0) throw ValidationError("circuit file: no gates");
  if (seen != declared)
    throw ValidationError("circuit file: gate count does not match header");
  c->set_root(std::uint32_t(seen - 1));
  return *c;
}

}  // namespace ddbc
