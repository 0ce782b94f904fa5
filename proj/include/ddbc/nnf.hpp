#pragma once

#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include "ddbc/util.hpp"

namespace ddbc {

// Negation-normal-form formula node. Shared immutable DAG: the threshold
// matrix reuses cells heavily, so subtrees must not be copied.
struct NnfNode;
using NnfRef = std::shared_ptr<const NnfNode>;

struct NnfNode {
  enum class Kind { Lit, True, False, And, Or };
  Kind kind;
  int var = 0;            // 1-based, Lit only
  bool negated = false;   // Lit only
  std::vector<NnfRef> children;

  explicit NnfNode(Kind k) : kind(k) {}
};

inline NnfRef nnf_true() {
  static const NnfRef t = std::make_shared<NnfNode>(NnfNode::Kind::True);
  return t;
}

inline NnfRef nnf_false() {
  static const NnfRef f = std::make_shared<NnfNode>(NnfNode::Kind::False);
  return f;
}

inline NnfRef nnf_lit(int var, bool negated) {
  if (var < 1) throw ValidationError("nnf_lit: variables are 1-based");
  auto n = std::make_shared<NnfNode>(NnfNode::Kind::Lit);
  n->var = var;
  n->negated = negated;
  return n;
}

inline bool nnf_is_true(const NnfRef& f) {
  return f->kind == NnfNode::Kind::True;
}
inline bool nnf_is_false(const NnfRef& f) {
  return f->kind == NnfNode::Kind::False;
}

// Binary connectives with constant absorption; no flattening, so the shape
// of the threshold-matrix recurrence is preserved exactly.
inline NnfRef nnf_and2(const NnfRef& a, const NnfRef& b) {
  if (nnf_is_false(a) || nnf_is_false(b)) return nnf_false();
  if (nnf_is_true(a)) return b;
  if (nnf_is_true(b)) return a;
  auto n = std::make_shared<NnfNode>(NnfNode::Kind::And);
  n->children = {a, b};
  return n;
}

inline NnfRef nnf_or2(const NnfRef& a, const NnfRef& b) {
  if (nnf_is_true(a) || nnf_is_true(b)) return nnf_true();
  if (nnf_is_false(a)) return b;
  if (nnf_is_false(b)) return a;
  auto n = std::make_shared<NnfNode>(NnfNode::Kind::Or);
  n->children = {a, b};
  return n;
}

inline NnfRef nnf_and(std::vector<NnfRef> children) {
  std::vector<NnfRef> kept;
  for (auto& c : children) {
    if (nnf_is_false(c)) return nnf_false();
    if (!nnf_is_true(c)) kept.push_back(std::move(c));
  }
  if (kept.empty()) return nnf_true();
  if (kept.size() == 1) return kept[0];
  auto n = std::make_shared<NnfNode>(NnfNode::Kind::And);
  n->children = std::move(kept);
  return n;
}

inline NnfRef nnf_or(std::vector<NnfRef> children) {
  std::vector<NnfRef> kept;
  for (auto& c : children) {
    if (nnf_is_true(c)) return nnf_true();
    if (!nnf_is_false(c)) kept.push_back(std::move(c));
  }
  if (kept.empty()) return nnf_false();
  if (kept.size() == 1) return kept[0];
  auto n = std::make_shared<NnfNode>(NnfNode::Kind::Or);
  n->children = std::move(kept);
  return n;
}

namespace detail {

inline NnfRef nnf_negate_rec(const NnfRef& f,
                             std::unordered_map<const NnfNode*, NnfRef>& memo) {
  auto it = memo.find(f.get());
  if (it != memo.end()) return it->second;
  NnfRef result;
  switch (f->kind) {
    case NnfNode::Kind::True:
      result = nnf_false();
      break;
    case NnfNode::Kind::False:
      result = nnf_true();
      break;
    case NnfNode::Kind::Lit:
      result = nnf_lit(f->var, !f->negated);
      break;
    case NnfNode::Kind::And: {
      std::vector<NnfRef> kids;
      for (const auto& c : f->children) kids.push_back(nnf_negate_rec(c, memo));
      result = nnf_or(std::move(kids));
      break;
    }
    case NnfNode::Kind::Or: {
      std::vector<NnfRef> kids;
      for (const auto& c : f->children) kids.push_back(nnf_negate_rec(c, memo));
      result = nnf_and(std::move(kids));
      break;
    }
  }
  memo.emplace(f.get(), result);
  return result;
}

}  // namespace detail

// De Morgan push-down; keeps negations on variables only.
inline NnfRef nnf_negate(const NnfRef& f) {
  std::unordered_map<const NnfNode*, NnfRef> memo;
  return detail::nnf_negate_rec(f, memo);
}

// Bitmask of 1-based variables occurring in the formula (bit var-1).
inline u64 nnf_vars(const NnfRef& f) {
  std::unordered_map<const NnfNode*, u64> memo;
  auto rec = [&](auto&& self, const NnfRef& n) -> u64 {
    auto it = memo.find(n.get());
    if (it != memo.end()) return it->second;
    u64 m = 0;
    if (n->kind == NnfNode::Kind::Lit) m = bit(n->var - 1);
    for (const auto& c : n->children) m |= self(self, c);
    memo.emplace(n.get(), m);
    return m;
  };
  return rec(rec, f);
}

// Evaluate under an assignment mask (bit var-1 set means variable true).
inline bool nnf_eval(const NnfRef& f, u64 assignment) {
  std::unordered_map<const NnfNode*, bool> memo;
  auto rec = [&](auto&& self, const NnfRef& n) -> bool {
    auto it = memo.find(n.get());
    if (it != memo.end()) return it->second;
    bool v = false;
    switch (n->kind) {
      case NnfNode::Kind::True: v = true; break;
      case NnfNode::Kind::False: v = false; break;
      case NnfNode::Kind::Lit:
        v = ((assignment >> (n->var - 1)) & 1) != u64(n->negated);
        break;
      case NnfNode::Kind::And:
        v = true;
        for (const auto& c : n->children) v = v && self(self, c);
        break;
      case NnfNode::Kind::Or:
        v = false;
        for (const auto& c : n->children) v = v || self(self, c);
        break;
    }
    memo.emplace(n.get(), v);
    return v;
  };
  return rec(rec, f);
}

inline std::string nnf_to_string(const NnfRef& f) {
  switch (f->kind) {
    case NnfNode::Kind::True: return "T";
    case NnfNode::Kind::False: return "F";
    case NnfNode::Kind::Lit:
      return (f->negated ? "-x" : "x") + std::to_string(f->var);
    case NnfNode::Kind::And:
    case NnfNode::Kind::Or: {
      const char* sep = f->kind == NnfNode::Kind::And ? " & " : " | ";
      std::string s = "(";
      for (size_t i = 0; i < f->children.size(); ++i) {
        if (i) s += sep;
        s += nnf_to_string(f->children[i]);
      }
      return s + ")";
    }
  }
  return "?";
}

}  // namespace ddbc
