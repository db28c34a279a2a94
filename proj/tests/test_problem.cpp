#include <Eigen/Dense>
#include <cmath>

#include "compopt/errors.hpp"
#include "compopt/problem.hpp"
#include "compopt/sampling.hpp"
#include "doctest.h"

using namespace compopt;

namespace {

Eigen::VectorXd random_point(RngStream& rng, int dim, double half_width) {
  Eigen::VectorXd x(dim);
  for (int d = 0; d < dim; ++d) x(d) = (2.0 * rng.next_unit() - 1.0) * half_width;
  return x;
}

// Column-wise central differences of the inner value.
Eigen::MatrixXd fd_inner_jacobian(const CompositionProblem& p, int j, const Eigen::VectorXd& x,
                                  double step) {
  Eigen::MatrixXd jac(p.dim_w(), p.dim_x());
  Eigen::VectorXd probe = x;
  for (int d = 0; d < p.dim_x(); ++d) {
    probe(d) = x(d) + step;
    const Eigen::VectorXd fp = p.inner_value(j, probe);
    probe(d) = x(d) - step;
    const Eigen::VectorXd fm = p.inner_value(j, probe);
    probe(d) = x(d);
    jac.col(d) = (fp - fm) / (2.0 * step);
  }
  return jac;
}

Eigen::VectorXd fd_outer_gradient(const CompositionProblem& p, int i, const Eigen::VectorXd& w,
                                  double step) {
  Eigen::VectorXd grad(p.dim_w());
  Eigen::VectorXd probe = w;
  for (int d = 0; d < p.dim_w(); ++d) {
    probe(d) = w(d) + step;
    const double fp = p.outer_value(i, probe);
    probe(d) = w(d) - step;
    const double fm = p.outer_value(i, probe);
    probe(d) = w(d);
    grad(d) = (fp - fm) / (2.0 * step);
  }
  return grad;
}

void check_oracle_consistency(const CompositionProblem& p, std::uint64_t seed) {
  StreamFactory streams(seed);
  RngStream rng = streams.derived(0xC0);
  for (int t = 0; t < 100; ++t) {
    const Eigen::VectorXd x = random_point(rng, p.dim_x(), 2.0);
    const double step = 1e-5 * (1.0 + x.norm());
    const int j = static_cast<int>(rng.next_below(p.component_count()));
    const Eigen::MatrixXd jac = p.inner_jacobian(j, x);
    const Eigen::MatrixXd jac_fd = fd_inner_jacobian(p, j, x, step);
    CHECK((jac - jac_fd).norm() <= 1e-5 * (1.0 + jac.norm()));

    const Eigen::VectorXd w = p.inner_value(j, x);
    const int i = static_cast<int>(rng.next_below(p.component_count()));
    const Eigen::VectorXd og = p.outer_gradient(i, w);
    const Eigen::VectorXd og_fd = fd_outer_gradient(p, i, w, step);
    CHECK((og - og_fd).norm() <= 1e-5 * (1.0 + og.norm()));
  }
}

}  // namespace

TEST_CASE("reference instance matches its closed form") {
  auto p = make_lcq_reference();
  const Eigen::VectorXd one = Eigen::VectorXd::Ones(1);
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(1);
  CHECK(full_inner(*p, one)(0) == doctest::Approx(2.0));     // (x + 3x)/2 at x=1
  CHECK(full_value(*p, one) == doctest::Approx(2.0));        // 4x^2-4x+2 at 1
  CHECK(full_gradient(*p, one)(0) == doctest::Approx(4.0));  // 8x-4 at 1
  CHECK(full_gradient(*p, zero)(0) == doctest::Approx(-4.0));
  REQUIRE(p->optimum());
  CHECK((*p->optimum())(0) == doctest::Approx(0.5));
  CHECK(*p->optimum_value() == doctest::Approx(1.0));
  CHECK(full_gradient(*p, *p->optimum()).norm() <= 1e-8);
  CHECK(p->constants().mu == doctest::Approx(8.0));
  CHECK(p->constants().B_G == doctest::Approx(3.0));
  CHECK(p->constants().L_F == doctest::Approx(2.0));
  CHECK_FALSE(p->constants().any_estimated());
}

TEST_CASE("full_inner is linear at the origin for zero-offset instances") {
  auto p = make_lcq_reference();
  CHECK(full_inner(*p, Eigen::VectorXd::Zero(1)).norm() == 0.0);
}

TEST_CASE("n=1 reduces full_inner to the single oracle") {
  auto p = make_lcq(1, 2, 2, 5);
  StreamFactory streams(9);
  RngStream rng = streams.derived(1);
  const Eigen::VectorXd x = random_point(rng, 2, 3.0);
  CHECK((full_inner(*p, x) - p->inner_value(0, x)).norm() == 0.0);
}

TEST_CASE("full_inner charges n raw evaluations through a ledger") {
  auto p = make_lcq(4, 2, 2, 5);
  QueryLedger ledger;
  full_inner(*p, Eigen::VectorXd::Zero(2), &ledger);
  CHECK(ledger.raw_inner_values == 4);
  CHECK(ledger.paper_queries == 0);
}

TEST_CASE("oracle index and dimension mismatches are configuration errors") {
  auto p = make_lcq(3, 2, 2, 5);
  CHECK_THROWS_AS(p->inner_value(3, Eigen::VectorXd::Zero(2)), ArgumentError);
  CHECK_THROWS_AS(p->inner_value(-1, Eigen::VectorXd::Zero(2)), ArgumentError);
  CHECK_THROWS_AS(p->inner_value(0, Eigen::VectorXd::Zero(5)), ArgumentError);
  CHECK_THROWS_AS(p->outer_gradient(0, Eigen::VectorXd::Zero(1)), ArgumentError);
}

TEST_CASE("generated lcq instances are deterministic and serializable") {
  auto p1 = make_lcq(4, 3, 2, 7);
  auto p2 = make_lcq(4, 3, 2, 7);
  CHECK(p1->serialize() == p2->serialize());
  auto p3 = parse_problem(p1->serialize());
  StreamFactory streams(17);
  RngStream rng = streams.derived(2);
  for (int t = 0; t < 20; ++t) {
    const Eigen::VectorXd x = random_point(rng, 3, 5.0);
    CHECK((full_inner(*p1, x) - full_inner(*p2, x)).norm() == 0.0);
    CHECK((full_gradient(*p1, x) - full_gradient(*p3, x)).norm() == 0.0);
    CHECK(full_value(*p1, x) == full_value(*p3, x));
  }
}

TEST_CASE("lcq optimum satisfies first-order optimality") {
  for (std::uint64_t seed : {1ULL, 7ULL, 23ULL}) {
    auto p = make_lcq(6, 3, 4, seed);
    REQUIRE(p->optimum());
    CHECK(full_gradient(*p, *p->optimum()).norm() <= 1e-8);
    CHECK(p->constants().mu > 0.0);
  }
}

TEST_CASE("single-component lcq optimum zeroes the gradient") {
  auto p = make_lcq(1, 2, 2, 11);
  REQUIRE(p->optimum());
  CHECK(full_gradient(*p, *p->optimum()).norm() <= 1e-8);
}

TEST_CASE("finite differences agree with the oracles on built-in problems") {
  check_oracle_consistency(*make_lcq_reference(), 100);
  check_oracle_consistency(*make_lcq(5, 3, 3, 13), 101);
  check_oracle_consistency(*make_mean_variance(4, 3, 0.7, 3), 102);
  check_oracle_consistency(*make_nonconvex_synthetic(5, 3, 3, 0.5, 19), 103);
}

TEST_CASE("mean-variance composition equals mean plus lambda variance") {
  const double lambda = 0.8;
  auto p = make_mean_variance(3, 2, lambda, 21);
  StreamFactory streams(33);
  RngStream rng = streams.derived(3);
  for (int t = 0; t < 25; ++t) {
    const Eigen::VectorXd x = random_point(rng, 2, 4.0);
    Eigen::VectorXd h(3);
    for (int i = 0; i < 3; ++i) h(i) = p->inner_value(i, x)(2);
    const double mean = h.mean();
    const double var = (h.array() - mean).square().mean();
    CHECK(full_value(*p, x) == doctest::Approx(mean + lambda * var).epsilon(1e-12));
  }
}

TEST_CASE("mean-variance with lambda=0 is the plain mean loss") {
  auto p = make_mean_variance(5, 2, 0.0, 4);
  StreamFactory streams(5);
  RngStream rng = streams.derived(4);
  const Eigen::VectorXd x = random_point(rng, 2, 2.0);
  double mean = 0.0;
  for (int i = 0; i < 5; ++i) mean += p->inner_value(i, x)(2);
  mean /= 5.0;
  CHECK(full_value(*p, x) == doctest::Approx(mean).epsilon(1e-12));
}

TEST_CASE("mean-variance gradient at lambda=0 is the mean loss slope") {
  auto p = make_mean_variance(6, 3, 0.0, 14);
  Eigen::VectorXd slope_sum = Eigen::VectorXd::Zero(3);
  for (int i = 0; i < 6; ++i)
    slope_sum += p->inner_jacobian(i, Eigen::VectorXd::Zero(3)).row(3).transpose();
  slope_sum /= 6.0;
  const Eigen::VectorXd grad = full_gradient(*p, Eigen::VectorXd::Constant(3, 0.4));
  CHECK((grad - slope_sum).norm() <= 1e-12);
}

TEST_CASE("single-sample mean-variance has zero variance term") {
  auto with = make_mean_variance(1, 2, 5.0, 6);
  auto without = make_mean_variance(1, 2, 0.0, 6);
  StreamFactory streams(6);
  RngStream rng = streams.derived(5);
  const Eigen::VectorXd x = random_point(rng, 2, 2.0);
  CHECK(full_value(*with, x) == doctest::Approx(full_value(*without, x)).epsilon(1e-12));
}

TEST_CASE("nonconvex instance with beta=0 is convex with a known optimum") {
  auto p = make_nonconvex_synthetic(4, 3, 3, 0.0, 9);
  CHECK(p->constants().L_G == 0.0);
  CHECK(p->constants().mu > 0.0);
  REQUIRE(p->optimum());
  CHECK(full_gradient(*p, *p->optimum()).norm() <= 1e-8);
}

TEST_CASE("nonconvex instances are deterministic under the seed") {
  auto p1 = make_nonconvex_synthetic(6, 3, 3, 0.5, 77);
  auto p2 = make_nonconvex_synthetic(6, 3, 3, 0.5, 77);
  StreamFactory streams(8);
  RngStream rng = streams.derived(6);
  for (int t = 0; t < 10; ++t) {
    const Eigen::VectorXd x = random_point(rng, 3, 3.0);
    CHECK((full_gradient(*p1, x) - full_gradient(*p2, x)).norm() == 0.0);
  }
}

TEST_CASE("stored constants upper-bound empirical quantities at 100 points") {
  const std::unique_ptr<CompositionProblem> problems[] = {
      make_lcq(5, 3, 3, 31), make_mean_variance(4, 2, 0.6, 32),
      make_nonconvex_synthetic(5, 3, 3, 0.4, 33)};
  for (const auto& p : problems) {
    const ProblemConstants& k = p->constants();
    StreamFactory streams(77);
    RngStream rng = streams.derived(7);
    const int n = p->component_count();
    for (int t = 0; t < 100; ++t) {
      const Eigen::VectorXd x = random_point(rng, p->dim_x(), p->region());
      CHECK(empirical_h1(*p, x) <= k.H1 * (1 + 1e-12));
      CHECK(empirical_h2(*p, x) <= k.H2 * (1 + 1e-12) + 1e-12);
      const int j = static_cast<int>(rng.next_below(n));
      const Eigen::MatrixXd jac = p->inner_jacobian(j, x);
      Eigen::JacobiSVD<Eigen::MatrixXd> svd(jac);
      CHECK(svd.singularValues()(0) <= k.B_G * (1 + 1e-12));
      const int i = static_cast<int>(rng.next_below(n));
      CHECK(p->outer_gradient(i, full_inner(*p, x)).norm() <= k.B_F * (1 + 1e-12));
    }
  }
}

TEST_CASE("strong convexity constant is consistent with sampled curvature") {
  auto p = make_lcq(6, 3, 3, 41);
  const double mu = p->constants().mu;
  StreamFactory streams(42);
  RngStream rng = streams.derived(8);
  for (int t = 0; t < 50; ++t) {
    const Eigen::VectorXd x = random_point(rng, 3, 5.0);
    const Eigen::VectorXd y = random_point(rng, 3, 5.0);
    if ((x - y).norm() < 1e-9) continue;
    const double curvature =
        (full_gradient(*p, x) - full_gradient(*p, y)).dot(x - y) / (x - y).squaredNorm();
    CHECK(curvature >= mu * (1 - 1e-9));
  }
}

TEST_CASE("estimate_constants reports flagged empirical bounds") {
  auto p = make_lcq(4, 2, 2, 51);
  const ProblemConstants est = estimate_constants(*p, 200, 99);
  CHECK(est.any_estimated());
  CHECK(est.estimated(ConstantField::H1));
  // Estimates never exceed the proven region bounds.
  CHECK(est.B_G <= p->constants().B_G * (1 + 1e-9));
  CHECK(est.H1 <= p->constants().H1 * (1 + 1e-9));
  CHECK(est.L_f <= p->constants().L_f * (1 + 1e-9));
  CHECK(est.mu >= 0.0);
}

TEST_CASE("parse_problem rejects malformed specs") {
  CHECK_THROWS_AS(parse_problem(""), ArgumentError);
  CHECK_THROWS_AS(parse_problem("frobnicate n=2"), ArgumentError);
  CHECK_THROWS_AS(parse_problem("lcq n=two N=1 M=1 seed=1"), ArgumentError);
  CHECK_THROWS_AS(parse_problem("mean_variance n=2 N=1 seed=1"), ArgumentError);
  CHECK_THROWS_AS(parse_problem("lcq n=2 N=1 M=1 seed=1 bogus=3"), ArgumentError);
}
