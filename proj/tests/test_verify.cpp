#include <Eigen/Core>
#include <cmath>
#include <vector>

#include "compopt/errors.hpp"
#include "compopt/problem.hpp"
#include "compopt/sampling.hpp"
#include "compopt/verify.hpp"
#include "doctest.h"

using namespace compopt;

namespace {

std::vector<Eigen::VectorXd> centered_vectors(int n, int dim, std::uint64_t seed) {
  StreamFactory streams(seed);
  RngStream rng = streams.derived(0xF0);
  std::vector<Eigen::VectorXd> v(static_cast<std::size_t>(n));
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(dim);
  for (auto& vi : v) {
    vi = Eigen::VectorXd(dim);
    for (int d = 0; d < dim; ++d) vi(d) = 2.0 * rng.next_unit() - 1.0;
    mean += vi;
  }
  mean /= n;
  for (auto& vi : v) vi -= mean;
  return v;
}

Eigen::VectorXd scalar_vec(double v) { return Eigen::VectorXd::Constant(1, v); }

}  // namespace

TEST_CASE("two-point subset variance: v=(1,-1), A=1 in both modes") {
  std::vector<Eigen::VectorXd> v = {scalar_vec(1.0), scalar_vec(-1.0)};
  for (SampleMode mode : {SampleMode::without_replacement, SampleMode::with_replacement}) {
    const VarianceReport r = subset_variance_exact(v, 1, mode);
    REQUIRE(r.exact);
    CHECK(*r.exact == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(r.bound == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(r.verdict == Verdict::pass);
  }
}

TEST_CASE("full subset without replacement has zero mean deviation") {
  std::vector<Eigen::VectorXd> v = centered_vectors(5, 3, 7);
  const VarianceReport r = subset_variance_exact(v, 5, SampleMode::without_replacement);
  CHECK(*r.exact <= 1e-28);
  CHECK(r.bound == 0.0);  // indicator vanishes
  CHECK(r.verdict == Verdict::pass);
}

TEST_CASE("three-point worked example without replacement") {
  // v = (2,-1,-1), A=2: exact E|mean|^2 = (n-A)/(A(n-1)) (1/n) sum v^2 = 0.5.
  std::vector<Eigen::VectorXd> v = {scalar_vec(2.0), scalar_vec(-1.0), scalar_vec(-1.0)};
  const VarianceReport r = subset_variance_exact(v, 2, SampleMode::without_replacement);
  CHECK(*r.exact == doctest::Approx(0.5).epsilon(1e-14));
}

TEST_CASE("lemma-1 exact constants hold for every n <= 8, A <= n") {
  for (int n = 2; n <= 8; ++n) {
    std::vector<Eigen::VectorXd> v = centered_vectors(n, 4, 100 + static_cast<std::uint64_t>(n));
    double s2 = 0.0;
    for (const auto& vi : v) s2 += vi.squaredNorm();
    s2 /= n;
    for (int A = 1; A <= n; ++A) {
      const VarianceReport rw = subset_variance_exact(v, A, SampleMode::without_replacement);
      const double want_wor = A < n ? (n - A) / (A * static_cast<double>(n - 1)) * s2 : 0.0;
      CHECK(std::abs(*rw.exact - want_wor) <= 1e-10 * (1.0 + std::abs(want_wor)));
      const VarianceReport rr = subset_variance_exact(v, A, SampleMode::with_replacement);
      const double want_wr = s2 / A;  // independent-draws equality
      CHECK(std::abs(*rr.exact - want_wr) <= 1e-10 * (1.0 + std::abs(want_wr)));
    }
  }
}

TEST_CASE("uncentered inputs beyond tolerance are rejected, centering is applied") {
  std::vector<Eigen::VectorXd> v = {scalar_vec(5.0), scalar_vec(3.0)};  // mean 4
  const VarianceReport r = subset_variance_exact(v, 1, SampleMode::with_replacement);
  CHECK(*r.exact == doctest::Approx(1.0));  // deviations (1,-1)
}

TEST_CASE("subset variance falls back to Monte Carlo past the guard") {
  std::vector<Eigen::VectorXd> v = centered_vectors(6, 2, 9);
  VerifyBudget budget;
  budget.enumeration_guard = 2;
  budget.mc_samples = 20000;
  const VarianceReport r = subset_variance_exact(v, 3, SampleMode::with_replacement, budget);
  CHECK(r.method == ReportMethod::monte_carlo);
  CHECK_FALSE(r.exact);
  CHECK(r.sigma > 0.0);
  CHECK(r.verdict == Verdict::pass);
  double s2 = 0.0;
  for (const auto& vi : v) s2 += vi.squaredNorm();
  CHECK(std::abs(r.empirical - s2 / 6 / 3) <= 4.0 * r.sigma);
}

TEST_CASE("lemma-2 oracle on the scalar example") {
  // w=(1,3), v=(1,-1), D=1: centered factors give LHS = bound = 1.
  std::vector<Eigen::MatrixXd> w = {Eigen::MatrixXd::Constant(1, 1, 1.0),
                                    Eigen::MatrixXd::Constant(1, 1, 3.0)};
  std::vector<Eigen::VectorXd> v = {scalar_vec(1.0), scalar_vec(-1.0)};
  const VarianceReport r = double_subset_variance(w, v, 1, SampleMode::with_replacement);
  REQUIRE(r.exact);
  CHECK(*r.exact == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(r.bound == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(r.verdict == Verdict::pass);
}

TEST_CASE("lemma-2 oracle: identical factors have zero variance") {
  std::vector<Eigen::MatrixXd> w(4, Eigen::MatrixXd::Constant(2, 2, 1.5));
  std::vector<Eigen::VectorXd> v(4, Eigen::VectorXd::Constant(2, -0.5));
  const VarianceReport r = double_subset_variance(w, v, 2, SampleMode::with_replacement);
  CHECK(*r.exact == 0.0);
  CHECK(r.bound == 0.0);
  CHECK(r.verdict == Verdict::pass);
}

TEST_CASE("lemma-2 oracle: batches of size n are exact covers") {
  std::vector<Eigen::MatrixXd> w = {Eigen::MatrixXd::Constant(1, 1, 1.0),
                                    Eigen::MatrixXd::Constant(1, 1, 3.0)};
  std::vector<Eigen::VectorXd> v = {scalar_vec(1.0), scalar_vec(-1.0)};
  const VarianceReport r = double_subset_variance(w, v, 2, SampleMode::with_replacement);
  CHECK(*r.exact == 0.0);
  CHECK(r.bound == 0.0);  // indicator I(D^2 < n^2) = 0
  CHECK(r.verdict == Verdict::pass);
}

TEST_CASE("lemma-2 bound holds across modes and sizes on problem data") {
  auto p = make_lcq(5, 2, 2, 23);
  const Eigen::VectorXd x = Eigen::VectorXd::Constant(2, 0.8);
  const Eigen::VectorXd g = full_inner(*p, x);
  std::vector<Eigen::MatrixXd> w(5);
  std::vector<Eigen::VectorXd> v(5);
  for (int j = 0; j < 5; ++j) {
    w[static_cast<std::size_t>(j)] = p->inner_jacobian(j, x);
    v[static_cast<std::size_t>(j)] = p->outer_gradient(j, g);
  }
  for (SampleMode mode : {SampleMode::with_replacement, SampleMode::without_replacement})
    for (int D : {1, 2, 3, 5}) {
      const VarianceReport r = double_subset_variance(w, v, D, mode);
      CHECK(r.verdict == Verdict::pass);
    }
}

TEST_CASE("estimator checks: exact covers give zero error at the anchor point") {
  auto p = make_lcq_reference();
  const Eigen::VectorXd x = Eigen::VectorXd::Constant(1, 0.7);
  const EstimatorBiasReports r = estimator_bias_enumeration(*p, x, x, 2, 2, 1);
  CHECK(*r.inner.exact <= 1e-28);
  CHECK(*r.conditional_mean.exact <= 1e-28);
  CHECK(*r.per_pair.exact <= 1e-24);
  CHECK(*r.minibatch.exact <= 1e-24);
}

TEST_CASE("estimator checks: displacement-free case is bounded by the H1 term") {
  auto p = make_lcq_reference();
  const EstimatorBiasReports r = estimator_bias_enumeration(
      *p, Eigen::VectorXd::Ones(1), Eigen::VectorXd::Ones(1), 1, 1, 1);
  // x_k = x~: lemma-3 LHS reduces to the D1 variance, bounded by 2 H1 / D.
  CHECK(r.inner.bound == doctest::Approx(2.0 * p->constants().H1).epsilon(1e-12));
  CHECK(*r.inner.exact <= r.inner.bound);
  CHECK(r.inner.verdict == Verdict::pass);
}

TEST_CASE("estimator checks: full enumeration on the reference instance") {
  auto p = make_lcq_reference();
  const EstimatorBiasReports r = estimator_bias_enumeration(
      *p, Eigen::VectorXd::Ones(1), Eigen::VectorXd::Zero(1), 1, 1, 1);
  CHECK(r.inner.method == ReportMethod::enumerated);
  for (const VarianceReport* rep : {&r.inner, &r.conditional_mean, &r.per_pair, &r.minibatch})
    CHECK(rep->verdict == Verdict::pass);
}

TEST_CASE("estimator Monte Carlo path stays within the bounds") {
  auto p = make_lcq(4, 2, 2, 29);
  VerifyBudget budget;
  budget.enumeration_guard = 1;  // force Monte Carlo
  budget.mc_samples = 10000;
  budget.mc_seed = 77;
  const EstimatorBiasReports r = estimator_bias_enumeration(
      *p, Eigen::VectorXd::Ones(2), Eigen::VectorXd::Zero(2), 2, 2, 2,
      SampleMode::with_replacement, budget);
  for (const VarianceReport* rep : {&r.inner, &r.conditional_mean, &r.per_pair, &r.minibatch}) {
    CHECK(rep->method == ReportMethod::monte_carlo);
    CHECK(rep->samples == 10000);
    CHECK(rep->verdict == Verdict::pass);
  }
}

TEST_CASE("estimated constants downgrade verdicts to informational") {
  auto p = make_lcq(3, 2, 2, 5);
  ProblemConstants k = p->constants();
  k.set_estimated(ConstantField::H1, true);
  p->set_constants(k);
  const EstimatorBiasReports r = estimator_bias_enumeration(
      *p, Eigen::VectorXd::Ones(2), Eigen::VectorXd::Zero(2), 1, 1, 1);
  CHECK(r.inner.informational);
  CHECK(r.minibatch.informational);
}

TEST_CASE("minibatch variance shrinks with b at fixed batch sizes") {
  auto p = make_lcq_reference();
  double prev = 1e300;
  for (int b : {1, 2, 4}) {
    const EstimatorBiasReports r = estimator_bias_enumeration(
        *p, Eigen::VectorXd::Ones(1), Eigen::VectorXd::Zero(1), 1, 1, b);
    CHECK(*r.minibatch.exact < prev);
    prev = *r.minibatch.exact;
  }
}

TEST_CASE("finite differences reproduce the composite gradient") {
  auto p = make_lcq_reference();
  CHECK(finite_diff_gradient(*p, Eigen::VectorXd::Ones(1), 1e-6)(0) ==
        doctest::Approx(4.0).epsilon(1e-6));
  CHECK(std::abs(finite_diff_gradient(*p, *p->optimum(), 1e-6)(0)) <= 1e-6);

  auto q = make_nonconvex_synthetic(4, 3, 3, 0.6, 3);
  StreamFactory streams(4);
  RngStream rng = streams.derived(12);
  for (int t = 0; t < 100; ++t) {
    Eigen::VectorXd x(3);
    for (int d = 0; d < 3; ++d) x(d) = 2.0 * rng.next_unit() - 1.0;
    const Eigen::VectorXd fd = finite_diff_gradient(*q, x, 1e-5 * (1.0 + x.norm()));
    const Eigen::VectorXd grad = full_gradient(*q, x);
    CHECK((fd - grad).norm() <= 1e-5 * (1.0 + grad.norm()));
  }
}

TEST_CASE("lemma grid passes on built-in instances and renders verdicts") {
  auto p = make_lcq(4, 2, 2, 61);
  const std::vector<LemmaGridRow> rows = run_lemma_grid(*p, {});
  CHECK(rows.size() > 20);
  CHECK(all_pass(rows));
}

TEST_CASE("restricting the grid to full covers zeroes the batch-driven errors") {
  auto p = make_lcq(4, 2, 2, 61);
  LemmaGridOptions options;
  options.sizes = {4};
  options.bs = {1};
  const std::vector<LemmaGridRow> rows = run_lemma_grid(*p, options);
  for (const auto& row : rows) {
    // The pure i.i.d. oracle (lemma 1) keeps its variance at A = n; the
    // per-pair quantities still fluctuate over (i,j) away from the anchor.
    if (row.lemma.rfind("lemma1", 0) == 0) continue;
    REQUIRE(row.report.exact);
    CHECK(row.report.verdict == Verdict::pass);
    if (row.lemma == "lemma2" || row.lemma == "lemma3_inner" ||
        row.lemma == "lemma4_conditional_mean")
      CHECK(*row.report.exact <= 1e-20);
    else if (row.x_case == "ones_from_ones")
      CHECK(*row.report.exact <= 1e-12);  // pairs cancel exactly at x_k = x~
  }
}

TEST_CASE("corrupting H1 to zero makes the displacement-free lemma-3 row fail") {
  auto p = make_lcq(4, 2, 2, 61);
  ProblemConstants k = p->constants();
  k.H1 = 0.0;
  p->set_constants(k);
  const std::vector<LemmaGridRow> rows = run_lemma_grid(*p, {});
  bool lemma3_failed = false;
  for (const auto& row : rows)
    if (row.lemma == "lemma3_inner" && row.report.verdict == Verdict::fail) lemma3_failed = true;
  CHECK(lemma3_failed);
  CHECK_FALSE(all_pass(rows));
}

TEST_CASE("enumeration primitives count and weight outcomes correctly") {
  CHECK(multiset_count(3, 2) == 6);   // C(4,2)
  CHECK(subset_count(5, 2) == 10);
  double total = 0.0;
  for_each_multiset(4, 3, [&](const std::vector<int>& counts, double prob) {
    int sum = 0;
    for (int c : counts) sum += c;
    CHECK(sum == 3);
    total += prob;
  });
  CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
  int subsets = 0;
  for_each_subset(5, 3, [&](const std::vector<int>& counts, double prob) {
    CHECK(prob == doctest::Approx(0.1));
    int sum = 0;
    for (int c : counts) sum += c;
    CHECK(sum == 3);
    ++subsets;
  });
  CHECK(subsets == 10);
}
