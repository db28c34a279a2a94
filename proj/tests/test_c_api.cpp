#include <cmath>
#include <cstring>
#include <string>
#include <vector>

#include "compopt/c_api.h"
#include "doctest.h"

namespace {

struct ProblemGuard {
  compopt_problem* p = nullptr;
  ~ProblemGuard() { compopt_problem_destroy(p); }
};
struct ScheduleGuard {
  compopt_schedule* s = nullptr;
  ~ScheduleGuard() { compopt_schedule_destroy(s); }
};
struct ResultGuard {
  compopt_result* r = nullptr;
  ~ResultGuard() { compopt_result_destroy(r); }
};
struct ReportGuard {
  compopt_report* r = nullptr;
  ~ReportGuard() { compopt_report_destroy(r); }
};

}  // namespace

TEST_CASE("problem round trip through the C surface") {
  ProblemGuard p;
  REQUIRE(compopt_problem_create("lcq n=4 N=2 M=2 seed=7 region=10", &p.p) == COMPOPT_OK);
  int64_t n = 0, dx = 0, dw = 0;
  CHECK(compopt_problem_counts(p.p, &n, &dx, &dw) == COMPOPT_OK);
  CHECK(n == 4);
  CHECK(dx == 2);
  CHECK(dw == 2);
  CHECK(std::string(compopt_problem_spec(p.p)) == "lcq n=4 N=2 M=2 seed=7 region=10");

  ProblemGuard q;
  REQUIRE(compopt_problem_create(compopt_problem_spec(p.p), &q.p) == COMPOPT_OK);
  const std::vector<double> x = {0.3, -0.8};
  double fp = 0.0, fq = 0.0;
  CHECK(compopt_problem_value(p.p, x.data(), &fp) == COMPOPT_OK);
  CHECK(compopt_problem_value(q.p, x.data(), &fq) == COMPOPT_OK);
  CHECK(fp == fq);
}

TEST_CASE("bad specs surface as argument errors with a message") {
  compopt_problem* raw = nullptr;
  CHECK(compopt_problem_create("no_such_kind n=1", &raw) == COMPOPT_ERR_ARGUMENT);
  CHECK(std::strlen(compopt_last_error()) > 0);
}

TEST_CASE("constants and optimum are readable, constants writable") {
  ProblemGuard p;
  REQUIRE(compopt_problem_create("lcq_ref", &p.p) == COMPOPT_OK);
  compopt_constants k;
  REQUIRE(compopt_problem_constants(p.p, &k) == COMPOPT_OK);
  CHECK(k.mu == doctest::Approx(8.0));
  CHECK(k.B_G == doctest::Approx(3.0));
  CHECK(k.estimated_mask == 0);

  double x_star = 0.0, f_star = 0.0;
  REQUIRE(compopt_problem_optimum(p.p, &x_star, 1, &f_star) == COMPOPT_OK);
  CHECK(x_star == doctest::Approx(0.5));
  CHECK(f_star == doctest::Approx(1.0));

  k.H1 = 0.0;
  CHECK(compopt_problem_set_constants(p.p, &k) == COMPOPT_OK);
  compopt_constants k2;
  compopt_problem_constants(p.p, &k2);
  CHECK(k2.H1 == 0.0);
}

TEST_CASE("nonconvex problems report no optimum") {
  ProblemGuard p;
  REQUIRE(compopt_problem_create("nonconvex n=4 N=2 M=2 beta=0.5 seed=3 region=10", &p.p) ==
          COMPOPT_OK);
  double buf[2];
  CHECK(compopt_problem_optimum(p.p, buf, 2, nullptr) == COMPOPT_ERR_ARGUMENT);
}

TEST_CASE("schedules derive, read back, and accept overrides") {
  ProblemGuard p;
  REQUIRE(compopt_problem_create("lcq n=10 N=3 M=3 seed=7 region=10", &p.p) == COMPOPT_OK);
  ScheduleGuard s;
  REQUIRE(compopt_schedule_convex(p.p, 1e-4, 1, 0.25, &s.s) == COMPOPT_OK);
  CHECK(compopt_schedule_mode(s.s) == 0);
  double a_size = 0.0;
  int overridden = -1;
  REQUIRE(compopt_schedule_get(s.s, "A", &a_size, &overridden) == COMPOPT_OK);
  CHECK(a_size == 10.0);
  CHECK(overridden == 0);
  REQUIRE(compopt_schedule_set(s.s, "K", 50) == COMPOPT_OK);
  double k_count = 0.0;
  compopt_schedule_get(s.s, "K", &k_count, &overridden);
  CHECK(k_count == 50.0);
  CHECK(overridden == 1);
  CHECK(compopt_schedule_set(s.s, "nope", 1) == COMPOPT_ERR_ARGUMENT);
  CHECK(compopt_schedule_set(s.s, "A", 0) == COMPOPT_ERR_ARGUMENT);
}

TEST_CASE("runs produce rows, ledgers, outputs, and byte-stable CSV") {
  ProblemGuard p;
  REQUIRE(compopt_problem_create("lcq n=6 N=2 M=2 seed=9 region=10", &p.p) == COMPOPT_OK);
  ScheduleGuard s;
  REQUIRE(compopt_schedule_convex(p.p, 1e-3, 1, 1.0, &s.s) == COMPOPT_OK);
  // Keep the run small.
  REQUIRE(compopt_schedule_set(s.s, "K", 20) == COMPOPT_OK);
  REQUIRE(compopt_schedule_set(s.s, "S", 3) == COMPOPT_OK);

  ResultGuard r1, r2;
  REQUIRE(compopt_run(p.p, s.s, COMPOPT_ALG_SCSCG, 42, nullptr, 0, &r1.r) == COMPOPT_OK);
  REQUIRE(compopt_run(p.p, s.s, COMPOPT_ALG_SCSCG, 42, nullptr, 0, &r2.r) == COMPOPT_OK);
  CHECK(std::string(compopt_result_csv(r1.r)) == std::string(compopt_result_csv(r2.r)));
  CHECK(compopt_result_rows(r1.r) == 3);

  compopt_trace_row row;
  REQUIRE(compopt_result_row(r1.r, 2, &row) == COMPOPT_OK);
  CHECK(row.s == 3);
  compopt_ledger ledger;
  REQUIRE(compopt_result_ledger(r1.r, &ledger) == COMPOPT_OK);
  double a_size = 0.0, d_size = 0.0;
  compopt_schedule_get(s.s, "A", &a_size, nullptr);
  compopt_schedule_get(s.s, "D", &d_size, nullptr);
  CHECK(ledger.paper_queries ==
        3 * compopt_epoch_cost(static_cast<uint64_t>(d_size), 20,
                               static_cast<uint64_t>(a_size), 1));
  CHECK(row.paper_queries == ledger.paper_queries);

  double out[2], fin[2];
  REQUIRE(compopt_result_output(r1.r, out, 2) == COMPOPT_OK);
  REQUIRE(compopt_result_final(r1.r, fin, 2) == COMPOPT_OK);
  CHECK(std::isfinite(out[0]));
  CHECK(std::isfinite(fin[1]));
  CHECK(compopt_result_row(r1.r, 99, &row) == COMPOPT_ERR_ARGUMENT);

  // Header echoes the effective parameters.
  const std::string csv = compopt_result_csv(r1.r);
  CHECK(csv.find("# problem=lcq n=6") != std::string::npos);
  CHECK(csv.find("K=20 (override)") != std::string::npos);
  CHECK(csv.find("eta=") != std::string::npos);
  CHECK(csv.find("s,f_value,grad_norm_sq,dist_sq_opt,paper_queries,paper_queries_corollary,"
                 "raw_queries") != std::string::npos);
}

TEST_CASE("diverging runs return the divergence status") {
  ProblemGuard p;
  REQUIRE(compopt_problem_create("lcq_ref", &p.p) == COMPOPT_OK);
  ScheduleGuard s;
  REQUIRE(compopt_schedule_convex(p.p, 1e-3, 1, 1.0, &s.s) == COMPOPT_OK);
  REQUIRE(compopt_schedule_set(s.s, "eta", 10.0) == COMPOPT_OK);
  REQUIRE(compopt_schedule_set(s.s, "K", 100) == COMPOPT_OK);
  compopt_result* raw = nullptr;
  CHECK(compopt_run(p.p, s.s, COMPOPT_ALG_SCSCG, 1, nullptr, 0, &raw) == COMPOPT_ERR_DIVERGED);
}

TEST_CASE("verification reports ride through the C surface") {
  ProblemGuard p;
  REQUIRE(compopt_problem_create("lcq_ref", &p.p) == COMPOPT_OK);
  ReportGuard rep;
  REQUIRE(compopt_verify(p.p, nullptr, &rep.r) == COMPOPT_OK);
  CHECK(compopt_report_rows(rep.r) > 10);
  CHECK(compopt_report_all_pass(rep.r) == 1);
  const std::string csv = compopt_report_csv(rep.r);
  CHECK(csv.find("lemma1_without_replacement") != std::string::npos);
  CHECK(csv.find("minibatch") != std::string::npos);
  CHECK(csv.find("fail") == std::string::npos);
}

TEST_CASE("analysis quantities are reachable from the C surface") {
  ProblemGuard p;
  REQUIRE(compopt_problem_create("nonconvex n=32 N=4 M=4 beta=0.5 seed=2026 region=10", &p.p) ==
          COMPOPT_OK);
  ScheduleGuard s;
  REQUIRE(compopt_schedule_nonconvex(p.p, 1e-2, 1, 1.0, 1.0, 1.0, &s.s) == COMPOPT_OK);
  CHECK(compopt_schedule_mode(s.s) == 1);
  double u0 = 0.0, j0 = -1.0, c0 = 0.0;
  int valid = 0;
  REQUIRE(compopt_nonconvex_sequence(p.p, s.s, &u0, &j0, &c0, &valid) == COMPOPT_OK);
  CHECK(valid == 1);
  CHECK(u0 > 0.0);
  CHECK(j0 == 0.0);  // D = n
  CHECK(c0 > 0.0);

  ProblemGuard q;
  REQUIRE(compopt_problem_create("lcq n=10 N=3 M=3 seed=7 region=10", &q.p) == COMPOPT_OK);
  ScheduleGuard cs;
  REQUIRE(compopt_schedule_convex(q.p, 1e-4, 1, 0.25, &cs.s) == COMPOPT_OK);
  double rho = 0.0;
  REQUIRE(compopt_convex_rates(q.p, cs.s, &rho, nullptr, nullptr, nullptr, &valid) == COMPOPT_OK);
  CHECK(valid == 1);
  CHECK(rho < 1.0);
}
