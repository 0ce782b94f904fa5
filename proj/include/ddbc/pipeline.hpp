#pragma once

#include <chrono>
#include <optional>
#include <ostream>
#include <vector>

#include "ddbc/bnn.hpp"
#include "ddbc/circuit.hpp"
#include "ddbc/cnf.hpp"
#include "ddbc/encode.hpp"
#include "ddbc/obdd.hpp"
#include "ddbc/util.hpp"

namespace ddbc {

// Translate a reduced ordered diagram into a deterministic decomposable
// circuit: a decision node on x becomes (-x & low) | (x & high), with
// shared sub-diagrams shared as gates and constant branches folded. The
// result is NNF, deterministic (branches exclude each other on x) and
// decomposable (x cannot reappear below), but not yet smooth.
inline Circuit obdd_to_ddbc(const Obdd& dd, int num_features,
                            std::vector<std::string> names = {}) {
  Circuit c(num_features, std::move(names));
  std::unordered_map<std::uint32_t, std::uint32_t> memo;
  auto rec = [&](auto&& self, std::uint32_t id) -> std::uint32_t {
    if (id == Obdd::kFalse) return c.constant(false);
    if (id == Obdd::kTrue) return c.constant(true);
    auto it = memo.find(id);
    if (it != memo.end()) return it->second;
    const Obdd::Node& nd = dd.node(id);
    const int var = dd.var_at_level(nd.level) - 1;  // to 0-based feature
    const std::uint32_t lo = self(self, nd.lo);
    const std::uint32_t hi = self(self, nd.hi);
    const std::uint32_t gate = c.make_or2(c.make_and2(c.literal(var, true), lo),
                                          c.make_and2(c.literal(var, false), hi));
    memo.emplace(id, gate);
    return gate;
  };
  c.set_root(rec(rec, dd.root()));
  return c;
}

struct PipelineOptions {
  size_t clause_budget = 1'000'000;
  size_t node_budget = 10'000'000;
  std::optional<std::vector<int>> order_override;
};

struct PipelineStats {
  size_t cnf_clauses = 0;
  size_t obdd_nodes = 0;
  size_t gates_raw = 0;      // before the smooth/fan-in-2 transform
  size_t gates_final = 0;
  int elim_width_bound = 0;
  std::vector<int> order;
  double sec_encode = 0, sec_order = 0, sec_obdd = 0, sec_translate = 0,
         sec_transform = 0;

  double total_seconds() const {
    return sec_encode + sec_order + sec_obdd + sec_translate + sec_transform;
  }
};

struct CompileResult {
  Circuit circuit;
  PipelineStats stats;
};

namespace detail {

class StageTimer {
 public:
  StageTimer() : start_(std::chrono::steady_clock::now()) {}
  double lap() {
    const auto now = std::chrono::steady_clock::now();
    const double s = std::chrono::duration<double>(now - start_).count();
    start_ = now;
    return s;
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

}  // namespace detail

// The whole compilation path: encode the model as a simplified CNF, pick a
// variable order, compile to a reduced ordered diagram, translate to a
// circuit, make it smooth with fan-in 2, and refuse to hand out anything
// that fails the structural validators.
inline CompileResult compile_model(const BnnModel& model,
                                   const PipelineOptions& options = {}) {
  detail::StageTimer timer;
  PipelineStats stats;

  EncodeOptions eo;
  eo.clause_budget = options.clause_budget;
  const CnfFormula cnf = encode_bnn(model, eo);
  stats.cnf_clauses = cnf.clause_count();
  stats.sec_encode = timer.lap();

  std::vector<int> order;
  if (options.order_override) {
    order = *options.order_override;
    std::vector<bool> seen(size_t(cnf.num_vars()) + 1, false);
    if (int(order.size()) != cnf.num_vars())
      throw ValidationError("order override must list every variable once");
    for (int v : order) {
      if (v < 1 || v > cnf.num_vars() || seen[size_t(v)])
        throw ValidationError("order override is not a permutation");
      seen[size_t(v)] = true;
    }
  } else {
    order = choose_variable_order(cnf);
  }
  stats.order = order;
  stats.elim_width_bound = elimination_width_bound(cnf, order);
  stats.sec_order = timer.lap();

  const Obdd dd = compile_cnf_to_obdd(cnf, order, options.node_budget);
  stats.obdd_nodes = dd.reachable_nodes();
  stats.sec_obdd = timer.lap();

  Circuit raw = obdd_to_ddbc(dd, model.num_inputs(), model.feature_names());
  stats.gates_raw = raw.reachable_count();
  stats.sec_translate = timer.lap();

  Circuit circuit = make_smooth_fanin2(raw);
  stats.gates_final = circuit.reachable_count();
  stats.sec_transform = timer.lap();

  const auto report = analyze(circuit, DetMode::Structural);
  if (!report.is_sfi2())
    throw ValidationError(
        "compile_model: produced circuit failed structural validation");
  return CompileResult{std::move(circuit), std::move(stats)};
}

inline void write_stats(std::ostream& os, const PipelineStats& s) {
  os << "cnf_clauses      " << s.cnf_clauses << "\n";
  os << "elim_width_bound " << s.elim_width_bound << "\n";
  os << "obdd_nodes       " << s.obdd_nodes << "\n";
  os << "gates_raw        " << s.gates_raw << "\n";
  os << "gates_final      " << s.gates_final << "\n";
  os << "order           ";
  for (int v : s.order) os << " x" << v;
  os << "\n";
  os << "sec_encode       " << s.sec_encode << "\n";
  os << "sec_order        " << s.sec_order << "\n";
  os << "sec_obdd         " << s.sec_obdd << "\n";
  os << "sec_translate    " << s.sec_translate << "\n";
  os << "sec_transform    " << s.sec_transform << "\n";
  os << "sec_total        " << s.total_seconds() << "\n";
}

}  // namespace ddbc
