#ifndef COMPOPT_LEDGER_HPP
#define COMPOPT_LEDGER_HPP

#include <cstdint>

namespace compopt {

/// Query accounting in two conventions: `paper_queries` follows the per-line
/// annotations of the algorithm listings (D per anchor, A per inner estimate,
/// 4 per sampled pair); the raw_* counters record every component-oracle
/// evaluation actually performed. Trace-only evaluations are diverted to
/// `evaluation_queries` and never touch the headline numbers.
struct QueryLedger {
  std::uint64_t paper_queries = 0;
  std::uint64_t raw_inner_values = 0;
  std::uint64_t raw_inner_jacobians = 0;
  std::uint64_t raw_outer_values = 0;
  std::uint64_t raw_outer_gradients = 0;
  std::uint64_t evaluation_queries = 0;

  void charge_paper(std::uint64_t q);
  void charge_inner_values(std::uint64_t c);
  void charge_inner_jacobians(std::uint64_t c);
  void charge_outer_values(std::uint64_t c);
  void charge_outer_gradients(std::uint64_t c);

  std::uint64_t raw_total() const {
    return raw_inner_values + raw_inner_jacobians + raw_outer_values + raw_outer_gradients;
  }

  void merge(const QueryLedger& other);

  bool in_evaluation() const { return evaluation_depth_ > 0; }

 private:
  friend class EvaluationScope;
  int evaluation_depth_ = 0;
};

/// While alive, all charges on the ledger count as evaluation queries.
class EvaluationScope {
 public:
  explicit EvaluationScope(QueryLedger& ledger) : ledger_(ledger) { ++ledger_.evaluation_depth_; }
  ~EvaluationScope() { --ledger_.evaluation_depth_; }
  EvaluationScope(const EvaluationScope&) = delete;
  EvaluationScope& operator=(const EvaluationScope&) = delete;

 private:
  QueryLedger& ledger_;
};

/// Paper-convention cost of one epoch: D + K*(A + 4b).
std::uint64_t epoch_cost(std::uint64_t D, std::uint64_t K, std::uint64_t A, std::uint64_t b);

/// The convex-corollary convention counts an epoch as D + K*A.
std::uint64_t epoch_cost_corollary(std::uint64_t D, std::uint64_t K, std::uint64_t A);

}  // namespace compopt

#endif  // COMPOPT_LEDGER_HPP
