#pragma once

#include <deque>
#include <ostream>
#include <sstream>
#include <unordered_map>
#include <vector>

#include "ddbc/cnf.hpp"
#include "ddbc/util.hpp"

namespace ddbc {

// Min-degree elimination order on the primal graph (variables as nodes,
// edges between co-occurring variables). Ties break toward the smaller
// variable index, so the order is deterministic. Variables that occur in no
// clause are appended in index order.
inline std::vector<int> choose_variable_order(const CnfFormula& cnf) {
  const int n = cnf.num_vars();
  std::vector<u64> adj(size_t(n), 0);
  for (const Clause& c : cnf.clauses()) {
    const u64 vm = c.vars();
    u64 rest = vm;
    while (rest) {
      const int v = std::countr_zero(rest);
      rest &= rest - 1;
      adj[size_t(v)] |= vm & ~bit(v);
    }
  }
  u64 used = cnf.used_vars();
  std::vector<int> order;
  order.reserve(size_t(n));
  u64 remaining = used;
  while (remaining) {
    int best = -1, best_deg = 65;
    u64 scan = remaining;
    while (scan) {
      const int v = std::countr_zero(scan);
      scan &= scan - 1;
      const int deg = popcount(adj[size_t(v)] & remaining);
      if (deg < best_deg) {
        best_deg = deg;
        best = v;
      }
    }
    // Eliminate: connect the neighbourhood into a clique.
    const u64 nb = adj[size_t(best)] & remaining & ~bit(best);
    u64 scan_nb = nb;
    while (scan_nb) {
      const int u = std::countr_zero(scan_nb);
      scan_nb &= scan_nb - 1;
      adj[size_t(u)] |= nb & ~bit(u);
    }
    remaining &= ~bit(best);
    order.push_back(best + 1);
  }
  for (int v = 0; v < n; ++v)
    if (!((used >> v) & 1)) order.push_back(v + 1);
  return order;
}

// Largest degree seen at elimination time; an upper bound on the tree-width
// of the primal graph under this order.
inline int elimination_width_bound(const CnfFormula& cnf,
                                   const std::vector<int>& order) {
  const int n = cnf.num_vars();
  std::vector<u64> adj(size_t(n), 0);
  for (const Clause& c : cnf.clauses()) {
    const u64 vm = c.vars();
    u64 rest = vm;
    while (rest) {
      const int v = std::countr_zero(rest);
      rest &= rest - 1;
      adj[size_t(v)] |= vm & ~bit(v);
    }
  }
  u64 remaining = low_bits(n);
  int width = 0;
  for (int var : order) {
    const int v = var - 1;
    const u64 nb = adj[size_t(v)] & remaining & ~bit(v);
    width = std::max(width, popcount(nb));
    u64 scan = nb;
    while (scan) {
      const int u = std::countr_zero(scan);
      scan &= scan - 1;
      adj[size_t(u)] |= nb & ~bit(u);
    }
    remaining &= ~bit(v);
  }
  return width;
}

// Reduced ordered binary decision diagram with a shared unique table and an
// apply cache. Node ids 0/1 are the terminals; every interior node tests the
// variable at its level, low = false branch, high = true branch.
class Obdd {
 public:
  struct Node {
    int level;
    std::uint32_t lo, hi;
  };

  static constexpr std::uint32_t kFalse = 0;
  static constexpr std::uint32_t kTrue = 1;

  Obdd(std::vector<int> order, size_t node_budget = 10'000'000)
      : order_(std::move(order)), node_budget_(node_budget) {
    var_to_level_.assign(65, -1);
    for (size_t lvl = 0; lvl < order_.size(); ++lvl) {
      const int var = order_[lvl];
      if (var < 1 || var > 64 || var_to_level_[size_t(var)] != -1)
        throw ValidationError("variable order is not a permutation");
      var_to_level_[size_t(var)] = int(lvl);
    }
    const int terminal_level = int(order_.size());
    nodes_.push_back({terminal_level, 0, 0});  // false
    nodes_.push_back({terminal_level, 0, 0});  // true
  }

  int num_levels() const { return int(order_.size()); }
  const std::vector<int>& order() const { return order_; }
  int var_at_level(int lvl) const { return order_[size_t(lvl)]; }
  int level_of_var(int var) const { return var_to_level_[size_t(var)]; }

  std::uint32_t root() const { return root_; }
  void set_root(std::uint32_t r) { root_ = r; }

  const Node& node(std::uint32_t id) const { return nodes_[id]; }
  size_t table_size() const { return nodes_.size(); }
  bool is_terminal(std::uint32_t id) const { return id <= kTrue; }

  std::uint32_t make(int level, std::uint32_t lo, std::uint32_t hi) {
    if (lo == hi) return lo;
    const u64 key = (u64(level) << 56) ^ (u64(lo) << 28) ^ u64(hi);
    auto it = unique_.find(key);
    if (it != unique_.end()) return it->second;
    if (nodes_.size() >= node_budget_)
      throw BudgetExceeded("dd-compiler",
                           "node budget " + std::to_string(node_budget_) +
                               " exceeded");
    nodes_.push_back({level, lo, hi});
    const auto id = std::uint32_t(nodes_.size() - 1);
    unique_.emplace(key, id);
    return id;
  }

  enum class Op { And, Or };

  std::uint32_t apply(std::uint32_t f, std::uint32_t g, Op op) {
    if (op == Op::And) {
      if (f == kFalse || g == kFalse) return kFalse;
      if (f == kTrue) return g;
      if (g == kTrue) return f;
    } else {
      if (f == kTrue || g == kTrue) return kTrue;
      if (f == kFalse) return g;
      if (g == kFalse) return f;
    }
    if (f == g) return f;
    if (f > g) std::swap(f, g);  // both ops are commutative
    const u64 key = (u64(op == Op::And ? 1 : 2) << 60) ^ (u64(f) << 30) ^ u64(g);
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;
    const Node& nf = node(f);
    const Node& ng = node(g);
    const int level = std::min(nf.level, ng.level);
    const std::uint32_t f_lo = nf.level == level ? nf.lo : f;
    const std::uint32_t f_hi = nf.level == level ? nf.hi : f;
    const std::uint32_t g_lo = ng.level == level ? ng.lo : g;
    const std::uint32_t g_hi = ng.level == level ? ng.hi : g;
    const std::uint32_t lo = apply(f_lo, g_lo, op);
    const std::uint32_t hi = apply(f_hi, g_hi, op);
    const std::uint32_t r = make(level, lo, hi);
    cache_.emplace(key, r);
    return r;
  }

  bool evaluate(std::uint32_t id, u64 assignment) const {
    while (!is_terminal(id)) {
      const Node& nd = nodes_[id];
      const int var = order_[size_t(nd.level)];
      id = ((assignment >> (var - 1)) & 1) ? nd.hi : nd.lo;
    }
    return id == kTrue;
  }

  bool evaluate(u64 assignment) const { return evaluate(root_, assignment); }

  // Exact satisfying-assignment count over all num_levels() variables.
  u128 model_count() const {
    std::unordered_map<std::uint32_t, u128> memo;
    auto rec = [&](auto&& self, std::uint32_t id) -> u128 {
      if (id == kFalse) return 0;
      if (id == kTrue) return 1;
      auto it = memo.find(id);
      if (it != memo.end()) return it->second;
      const Node& nd = nodes_[id];
      const u128 lo = self(self, nd.lo)
                      << (node(nd.lo).level - nd.level - 1);
      const u128 hi = self(self, nd.hi)
                      << (node(nd.hi).level - nd.level - 1);
      const u128 total = lo + hi;
      memo.emplace(id, total);
      return total;
    };
    return rec(rec, root_) << node(root_).level;
  }

  // Count of nodes reachable from the root (terminals excluded).
  size_t reachable_nodes() const {
    if (is_terminal(root_)) return 0;
    std::vector<bool> seen(nodes_.size(), false);
    std::vector<std::uint32_t> stack{root_};
    size_t count = 0;
    while (!stack.empty()) {
      const auto id = stack.back();
      stack.pop_back();
      if (is_terminal(id) || seen[id]) continue;
      seen[id] = true;
      ++count;
      stack.push_back(nodes_[id].lo);
      stack.push_back(nodes_[id].hi);
    }
    return count;
  }

  // Reduction invariants: no node with lo == hi, no duplicate
  // (level, lo, hi) triples, children strictly below their parent.
  bool check_reduced() const {
    std::unordered_set<u64> seen;
    for (std::uint32_t id = 2; id < nodes_.size(); ++id) {
      const Node& nd = nodes_[id];
      if (nd.lo == nd.hi) return false;
      if (node(nd.lo).level <= nd.level || node(nd.hi).level <= nd.level)
        return false;
      const u64 key = (u64(nd.level) << 56) ^ (u64(nd.lo) << 28) ^ u64(nd.hi);
      if (!seen.insert(key).second) return false;
    }
    return true;
  }

  void write_dot(std::ostream& os) const {
    os << "digraph obdd {\n";
    os << "  f0 [label=\"0\", shape=box];\n  f1 [label=\"1\", shape=box];\n";
    std::vector<bool> seen(nodes_.size(), false);
    std::vector<std::uint32_t> stack{root_};
    while (!stack.empty()) {
      const auto id = stack.back();
      stack.pop_back();
      if (is_terminal(id) || seen[id]) continue;
      seen[id] = true;
      const Node& nd = nodes_[id];
      os << "  n" << id << " [label=\"x" << order_[size_t(nd.level)]
         << "\"];\n";
      auto edge = [&](std::uint32_t child, const char* style) {
        os << "  n" << id << " -> "
           << (is_terminal(child) ? (child ? "f1" : "f0")
                                  : "n" + std::to_string(child))
           << " [style=" << style << "];\n";
      };
      edge(nd.lo, "dashed");
      edge(nd.hi, "solid");
      stack.push_back(nd.lo);
      stack.push_back(nd.hi);
    }
    os << "}\n";
  }

 private:
  std::vector<Node> nodes_;
  std::unordered_map<u64, std::uint32_t> unique_;
  std::unordered_map<u64, std::uint32_t> cache_;
  std::vector<int> order_;
  std::vector<int> var_to_level_;
  std::uint32_t root_ = kFalse;
  size_t node_budget_;
};

// Compile a CNF: each clause becomes a single chain along the order, and the
// clause diagrams are conjoined pairwise in balanced rounds, which keeps
// intermediate diagrams smaller than a left fold would.
inline Obdd compile_cnf_to_obdd(const CnfFormula& cnf,
                                const std::vector<int>& order,
                                size_t node_budget = 10'000'000) {
  if (int(order.size()) != cnf.num_vars())
    throw ValidationError("variable order size does not match CNF");
  Obdd dd(order, node_budget);
  std::deque<std::uint32_t> queue;
  for (const Clause& c : cnf.clauses()) {
    // Build the chain bottom-up: deepest clause variable first.
    std::vector<std::pair<int, bool>> lits;  // (level, positive)
    u64 rest = c.pos;
    while (rest) {
      const int v = std::countr_zero(rest);
      rest &= rest - 1;
      lits.emplace_back(dd.level_of_var(v + 1), true);
    }
    rest = c.neg;
    while (rest) {
      const int v = std::countr_zero(rest);
      rest &= rest - 1;
      lits.emplace_back(dd.level_of_var(v + 1), false);
    }
    std::sort(lits.begin(), lits.end(),
              [](const auto& a, const auto& b) { return a.first > b.first; });
    std::uint32_t acc = Obdd::kFalse;
    for (const auto& [level, positive] : lits) {
      acc = positive ? dd.make(level, acc, Obdd::kTrue)
                     : dd.make(level, Obdd::kTrue, acc);
    }
    queue.push_back(acc);
  }
  if (queue.empty()) {
    dd.set_root(Obdd::kTrue);
    return dd;
  }
  while (queue.size() > 1) {
    const auto a = queue.front();
    queue.pop_front();
    const auto b = queue.front();
    queue.pop_front();
    queue.push_back(dd.apply(a, b, Obdd::Op::And));
  }
  dd.set_root(queue.front());
  return dd;
}

}  // namespace ddbc
