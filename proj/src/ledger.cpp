#include "compopt/ledger.hpp"

namespace compopt {

void QueryLedger::charge_paper(std::uint64_t q) {
  if (evaluation_depth_ > 0) return;
  paper_queries += q;
}

void QueryLedger::charge_inner_values(std::uint64_t c) {
  if (evaluation_depth_ > 0)
    evaluation_queries += c;
  else
    raw_inner_values += c;
}

void QueryLedger::charge_inner_jacobians(std::uint64_t c) {
  if (evaluation_depth_ > 0)
    evaluation_queries += c;
  else
    raw_inner_jacobians += c;
}

void QueryLedger::charge_outer_values(std::uint64_t c) {
  if (evaluation_depth_ > 0)
    evaluation_queries += c;
  else
    raw_outer_values += c;
}

void QueryLedger::charge_outer_gradients(std::uint64_t c) {
  if (evaluation_depth_ > 0)
    evaluation_queries += c;
  else
    raw_outer_gradients += c;
}

void QueryLedger::merge(const QueryLedger& other) {
  paper_queries += other.paper_queries;
  raw_inner_values += other.raw_inner_values;
  raw_inner_jacobians += other.raw_inner_jacobians;
  raw_outer_values += other.raw_outer_values;
  raw_outer_gradients += other.raw_outer_gradients;
  evaluation_queries += other.evaluation_queries;
}

std::uint64_t epoch_cost(std::uint64_t D, std::uint64_t K, std::uint64_t A, std::uint64_t b) {
  return D + K * (A + 4 * b);
}

std::uint64_t epoch_cost_corollary(std::uint64_t D, std::uint64_t K, std::uint64_t A) {
  return D + K * A;
}

}  // namespace compopt
