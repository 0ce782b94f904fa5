#pragma once

#include <cstdlib>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "ddbc/nnf.hpp"
#include "ddbc/util.hpp"

namespace ddbc {

// A clause over at most 64 variables: bit v-1 of pos/neg marks literal
// v / -v. The whole encoder works on these masks, which keeps tautology,
// subsumption and resolution checks to a couple of bitwise ops.
struct Clause {
  u64 pos = 0;
  u64 neg = 0;

  u64 vars() const noexcept { return pos | neg; }
  int size() const noexcept { return popcount(pos) + popcount(neg); }
  bool empty() const noexcept { return pos == 0 && neg == 0; }
  bool tautology() const noexcept { return (pos & neg) != 0; }
  // this subsumes o: every literal of this occurs in o.
  bool subsumes(const Clause& o) const noexcept {
    return (pos & ~o.pos) == 0 && (neg & ~o.neg) == 0;
  }
  bool operator==(const Clause& o) const noexcept {
    return pos == o.pos && neg == o.neg;
  }
  bool operator<(const Clause& o) const noexcept {
    const int s = size(), so = o.size();
    if (s != so) return s < so;
    if (pos != o.pos) return pos < o.pos;
    return neg < o.neg;
  }
};

struct ClauseHash {
  size_t operator()(const Clause& c) const noexcept {
    return size_t(hash_combine(hash_mix(c.pos), c.neg));
  }
};

namespace detail {

// Keep only minimal clauses (an antichain under set inclusion).
// Candidates are processed in increasing size; a clause survives unless some
// already-kept subset of its literals exists. For short clauses the subset
// lookup enumerates sub-clauses against a hash set, otherwise it scans.
inline void subsumption_reduce(std::vector<Clause>& clauses) {
  std::sort(clauses.begin(), clauses.end());
  clauses.erase(std::unique(clauses.begin(), clauses.end()), clauses.end());
  std::vector<Clause> kept;
  std::unordered_set<Clause, ClauseHash> kept_set;
  kept.reserve(clauses.size());
  for (const Clause& c : clauses) {
    bool subsumed = false;
    const u64 vm = c.vars();
    const size_t enum_cost = size_t(1) << std::min(c.size(), 24);
    if (enum_cost <= 4 * kept.size() + 64) {
      for (u64 sub = vm;; sub = (sub - 1) & vm) {
        if (sub != vm) {
          Clause d{c.pos & sub, c.neg & sub};
          if (kept_set.count(d)) {
            subsumed = true;
            break;
          }
        }
        if (sub == 0) break;
      }
    } else {
      for (const Clause& d : kept)
        if (d.subsumes(c)) {
          subsumed = true;
          break;
        }
    }
    if (!subsumed) {
      kept.push_back(c);
      kept_set.insert(c);
    }
  }
  clauses = std::move(kept);
}

}  // namespace detail

// Clause set in conjunctive normal form. Canonical invariants: no
// tautologies, no duplicate clauses, clauses sorted. An empty clause set is
// the canonical TRUE; a set holding the empty clause is the canonical FALSE.
class CnfFormula {
 public:
  CnfFormula() = default;

  explicit CnfFormula(int num_vars) : num_vars_(check_vars(num_vars)) {}

  CnfFormula(int num_vars, std::vector<Clause> clauses)
      : num_vars_(check_vars(num_vars)) {
    clauses_.reserve(clauses.size());
    for (const Clause& c : clauses) {
      if (c.vars() & ~low_bits(num_vars_))
        throw ValidationError("clause mentions a variable beyond num_vars");
      if (!c.tautology()) clauses_.push_back(c);
    }
    std::sort(clauses_.begin(), clauses_.end());
    clauses_.erase(std::unique(clauses_.begin(), clauses_.end()),
                   clauses_.end());
    if (!clauses_.empty() && clauses_.front().empty())
      clauses_ = {Clause{}};  // canonical FALSE
  }

  static CnfFormula constant_true(int num_vars) { return CnfFormula(num_vars); }

  static CnfFormula constant_false(int num_vars) {
    return CnfFormula(num_vars, {Clause{}});
  }

  static CnfFormula literal(int num_vars, int var, bool negated) {
    Clause c;
    (negated ? c.neg : c.pos) = bit(var - 1);
    return CnfFormula(num_vars, {c});
  }

  int num_vars() const { return num_vars_; }
  const std::vector<Clause>& clauses() const { return clauses_; }
  size_t clause_count() const { return clauses_.size(); }
  bool is_true() const { return clauses_.empty(); }
  bool is_false() const {
    return clauses_.size() == 1 && clauses_.front().empty();
  }

  // Variables that actually occur in some clause.
  u64 used_vars() const {
    u64 m = 0;
    for (const Clause& c : clauses_) m |= c.vars();
    return m;
  }

  bool sat(u64 assignment) const {
    const u64 full = low_bits(num_vars_);
    for (const Clause& c : clauses_)
      if ((c.pos & assignment) == 0 && (c.neg & ~assignment & full) == 0)
        return false;
    return true;
  }

  bool operator==(const CnfFormula& o) const {
    return num_vars_ == o.num_vars_ && clauses_ == o.clauses_;
  }

 private:
  static int check_vars(int n) {
    if (n < 0 || n > 64)
      throw ValidationError("CNF supports between 0 and 64 variables, got " +
                            std::to_string(n));
    return n;
  }

  int num_vars_ = 0;
  std::vector<Clause> clauses_;
};

// Conjunction: union of the clause sets, pruned to minimal clauses.
inline CnfFormula cnf_and(const CnfFormula& a, const CnfFormula& b) {
  if (a.num_vars() != b.num_vars())
    throw ValidationError("cnf_and: variable universes differ");
  if (a.is_false() || b.is_false())
    return CnfFormula::constant_false(a.num_vars());
  std::vector<Clause> out = a.clauses();
  out.insert(out.end(), b.clauses().begin(), b.clauses().end());
  detail::subsumption_reduce(out);
  return CnfFormula(a.num_vars(), std::move(out));
}

// Disjunction by distribution: every pair of clauses merges into one,
// tautologies and duplicates dropped on the fly, survivors pruned to an
// antichain. This is the step that can blow up; work_limit caps the number
// of generated pairs.
inline CnfFormula cnf_or(const CnfFormula& a, const CnfFormula& b,
                         size_t work_limit = 50'000'000) {
  if (a.num_vars() != b.num_vars())
    throw ValidationError("cnf_or: variable universes differ");
  if (a.is_true() || b.is_true()) return CnfFormula::constant_true(a.num_vars());
  if (a.is_false()) return b;
  if (b.is_false()) return a;
  if (a.clause_count() * b.clause_count() > work_limit)
    throw BudgetExceeded("cnf-encoder",
                         "disjunction product of " +
                             std::to_string(a.clause_count()) + " x " +
                             std::to_string(b.clause_count()) +
                             " clauses exceeds the work limit");
  std::vector<Clause> out;
  std::unordered_set<Clause, ClauseHash> seen;
  out.reserve(a.clause_count() + b.clause_count());
  for (const Clause& ca : a.clauses()) {
    for (const Clause& cb : b.clauses()) {
      Clause c{ca.pos | cb.pos, ca.neg | cb.neg};
      if (c.tautology()) continue;
      if (seen.insert(c).second) out.push_back(c);
    }
  }
  detail::subsumption_reduce(out);
  return CnfFormula(a.num_vars(), std::move(out));
}

// NNF -> CNF by distributing disjunctions over conjunctions. Shared DAG
// nodes are converted once.
inline CnfFormula to_cnf(const NnfRef& f, int num_vars,
                         size_t clause_budget = 0) {
  std::unordered_map<const NnfNode*, CnfFormula> memo;
  auto rec = [&](auto&& self, const NnfRef& n) -> CnfFormula {
    auto it = memo.find(n.get());
    if (it != memo.end()) return it->second;
    CnfFormula result;
    switch (n->kind) {
      case NnfNode::Kind::True:
        result = CnfFormula::constant_true(num_vars);
        break;
      case NnfNode::Kind::False:
        result = CnfFormula::constant_false(num_vars);
        break;
      case NnfNode::Kind::Lit:
        result = CnfFormula::literal(num_vars, n->var, n->negated);
        break;
      case NnfNode::Kind::And: {
        result = CnfFormula::constant_true(num_vars);
        for (const auto& c : n->children) result = cnf_and(result, self(self, c));
        break;
      }
      case NnfNode::Kind::Or: {
        result = CnfFormula::constant_false(num_vars);
        for (const auto& c : n->children) result = cnf_or(result, self(self, c));
        break;
      }
    }
    if (clause_budget && result.clause_count() > clause_budget)
      throw BudgetExceeded("cnf-encoder",
                           "clause count " +
                               std::to_string(result.clause_count()) +
                               " exceeds budget " +
                               std::to_string(clause_budget));
    memo.emplace(n.get(), result);
    return result;
  };
  return rec(rec, f);
}

// Equivalence-preserving shrinking to a fixed point: unit propagation,
// subsumption, and self-subsuming resolution. Never grows the clause count.
inline CnfFormula simplify_cnf(const CnfFormula& input) {
  std::vector<Clause> clauses = input.clauses();
  const int n = input.num_vars();

  bool changed = true;
  while (changed) {
    changed = false;

    // Empty clause wins immediately.
    for (const Clause& c : clauses)
      if (c.empty()) return CnfFormula::constant_false(n);

    // Unit propagation. Units stay; other clauses containing the unit
    // literal are subsumed, clauses with the complement are strengthened.
    u64 unit_pos = 0, unit_neg = 0;
    for (const Clause& c : clauses)
      if (c.size() == 1) {
        unit_pos |= c.pos;
        unit_neg |= c.neg;
      }
    if (unit_pos & unit_neg) return CnfFormula::constant_false(n);
    if (unit_pos || unit_neg) {
      std::vector<Clause> next;
      next.reserve(clauses.size());
      for (const Clause& c : clauses) {
        if (c.size() == 1) {
          next.push_back(c);
          continue;
        }
        if ((c.pos & unit_pos) || (c.neg & unit_neg)) {
          changed = true;  // satisfied by a unit, subsumed
          continue;
        }
        Clause d{c.pos & ~unit_neg, c.neg & ~unit_pos};
        if (!(d == c)) changed = true;
        if (d.empty()) return CnfFormula::constant_false(n);
        next.push_back(d);
      }
      clauses = std::move(next);
    }

    const size_t before = clauses.size();
    detail::subsumption_reduce(clauses);
    if (clauses.size() != before) changed = true;

    // Self-subsuming resolution: if C2 \ {-l} is contained in C1 \ {l},
    // the resolvent subsumes C1, so l can be dropped from C1.
    std::unordered_set<Clause, ClauseHash> set(clauses.begin(), clauses.end());
    for (Clause& c : clauses) {
      bool strengthened = true;
      while (strengthened && c.size() > 1) {
        strengthened = false;
        u64 lits = c.vars();
        while (lits) {
          const int v = std::countr_zero(lits);
          lits &= lits - 1;
          const bool in_pos = (c.pos >> v) & 1;
          Clause flipped = c;
          if (in_pos) {
            flipped.pos &= ~bit(v);
            flipped.neg |= bit(v);
          } else {
            flipped.neg &= ~bit(v);
            flipped.pos |= bit(v);
          }
          // Any kept subset of `flipped` that includes the flipped literal
          // licenses dropping v from c.
          const u64 vm = flipped.vars();
          bool found = false;
          for (u64 sub = vm;; sub = (sub - 1) & vm) {
            if ((sub >> v) & 1) {
              Clause d{flipped.pos & sub, flipped.neg & sub};
              if (set.count(d)) {
                found = true;
                break;
              }
            }
            if (sub == 0) break;
          }
          if (found) {
            set.erase(c);
            if (in_pos)
              c.pos &= ~bit(v);
            else
              c.neg &= ~bit(v);
            set.insert(c);
            strengthened = true;
            changed = true;
            break;
          }
        }
      }
    }
    if (changed) {
      detail::subsumption_reduce(clauses);
    }
  }
  return CnfFormula(n, std::move(clauses));
}

inline NnfRef cnf_to_nnf(const CnfFormula& f) {
  if (f.is_true()) return nnf_true();
  if (f.is_false()) return nnf_false();
  std::vector<NnfRef> conj;
  for (const Clause& c : f.clauses()) {
    std::vector<NnfRef> disj;
    for (int v = 0; v < f.num_vars(); ++v) {
      if ((c.pos >> v) & 1) disj.push_back(nnf_lit(v + 1, false));
      if ((c.neg >> v) & 1) disj.push_back(nnf_lit(v + 1, true));
    }
    conj.push_back(nnf_or(std::move(disj)));
  }
  return nnf_and(std::move(conj));
}

// --- DIMACS ---------------------------------------------------------------

inline void write_dimacs(std::ostream& os, const CnfFormula& f,
                         const std::vector<std::string>& names = {}) {
  for (size_t i = 0; i < names.size() && int(i) < f.num_vars(); ++i)
    os << "c var " << (i + 1) << " = " << names[i] << "\n";
  os << "p cnf " << f.num_vars() << " " << f.clause_count() << "\n";
  for (const Clause& c : f.clauses()) {
    for (int v = 0; v < f.num_vars(); ++v) {
      if ((c.pos >> v) & 1) os << (v + 1) << " ";
      if ((c.neg >> v) & 1) os << -(v + 1) << " ";
    }
    os << "0\n";
  }
}

inline std::string to_dimacs(const CnfFormula& f,
                             const std::vector<std::string>& names = {}) {
  std::ostringstream os;
  write_dimacs(os, f, names);
  return os.str();
}

inline CnfFormula parse_dimacs(std::istream& is,
                               std::vector<std::string>* names_out = nullptr) {
  std::string line;
  int num_vars = -1;
  size_t num_clauses = 0;
  std::vector<Clause> clauses;
  std::vector<std::string> names;
  Clause current;
  bool in_clause = false;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    if (line[0] == 'c') {
      std::istringstream ls(line);
      std::string c, var_kw, idx, eq;
      if (ls >> c >> var_kw >> idx >> eq && var_kw == "var" && eq == "=") {
        std::string rest;
        std::getline(ls, rest);
        if (!rest.empty() && rest.front() == ' ') rest.erase(rest.begin());
        const size_t i = std::strtoul(idx.c_str(), nullptr, 10);
        if (names.size() < i) names.resize(i);
        if (i >= 1) names[i - 1] = rest;
      }
      continue;
    }
    if (line[0] == 'p') {
      std::istringstream ls(line);
      std::string p, fmt;
      if (!(ls >> p >> fmt >> num_vars >> num_clauses) || fmt != "cnf")
        throw ValidationError("malformed DIMACS header: " + line);
      if (num_vars < 0 || num_vars > 64)
        throw ValidationError("DIMACS: supported variable range is 0..64");
      continue;
    }
    if (num_vars < 0) throw ValidationError("DIMACS: clause before header");
    std::istringstream ls(line);
    long lit;
    while (ls >> lit) {
      if (lit == 0) {
        clauses.push_back(current);
        current = Clause{};
        in_clause = false;
      } else {
        const long v = lit > 0 ? lit : -lit;
        if (v > num_vars)
          throw ValidationError("DIMACS: literal out of range: " +
                                std::to_string(lit));
        if (lit > 0)
          current.pos |= bit(int(v) - 1);
        else
          current.neg |= bit(int(v) - 1);
        in_clause = true;
      }
    }
  }
  if (in_clause) throw ValidationError("DIMACS: unterminated clause");
  if (num_vars < 0) throw ValidationError("DIMACS: missing header");
  if (clauses.size() != num_clauses)
    throw ValidationError("DIMACS: clause count does not match header");
  if (names_out) {
    names.resize(size_t(num_vars));
    *names_out = std::move(names);
  }
  return CnfFormula(num_vars, std::move(clauses));
}

}  // namespace ddbc
