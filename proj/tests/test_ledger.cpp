#include "compopt/ledger.hpp"
#include "doctest.h"

using namespace compopt;

TEST_CASE("epoch cost follows the per-line annotations") {
  CHECK(epoch_cost(5, 3, 2, 1) == 23);  // 5 + 3*(2 + 4)
  CHECK(epoch_cost(7, 0, 9, 2) == 7);
  CHECK(epoch_cost(0, 0, 0, 5) == 0);
  CHECK(epoch_cost_corollary(5, 3, 2) == 11);
}

TEST_CASE("evaluation scope diverts raw charges") {
  QueryLedger ledger;
  ledger.charge_paper(10);
  ledger.charge_inner_values(4);
  {
    EvaluationScope eval(ledger);
    ledger.charge_inner_values(6);
    ledger.charge_outer_gradients(2);
    ledger.charge_paper(100);  // evaluation never counts as paper queries
  }
  ledger.charge_outer_gradients(1);
  CHECK(ledger.paper_queries == 10);
  CHECK(ledger.raw_inner_values == 4);
  CHECK(ledger.raw_outer_gradients == 1);
  CHECK(ledger.evaluation_queries == 8);
  CHECK(ledger.raw_total() == 5);
}

TEST_CASE("ledgers merge additively") {
  QueryLedger a, b;
  a.charge_paper(3);
  a.charge_inner_jacobians(2);
  b.charge_paper(4);
  b.charge_outer_values(5);
  a.merge(b);
  CHECK(a.paper_queries == 7);
  CHECK(a.raw_inner_jacobians == 2);
  CHECK(a.raw_outer_values == 5);
}
