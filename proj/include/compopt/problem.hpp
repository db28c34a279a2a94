#ifndef COMPOPT_PROBLEM_HPP
#define COMPOPT_PROBLEM_HPP

#include <Eigen/Core>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>

#include "compopt/ledger.hpp"

namespace compopt {

enum class ConstantField : unsigned {
  mu = 0,
  B_G = 1,
  L_G = 2,
  B_F = 3,
  L_F = 4,
  L_f = 5,
  H1 = 6,
  H2 = 7,
};

/// Smoothness/variance constants of a composition problem. `mu` is the strong
/// convexity of the composite objective (0 means non-convex mode). H1 and H2
/// bound the component variances of the inner values and of the composite
/// per-pair gradients over the problem's box region.
struct ProblemConstants {
  double mu = 0.0;
  double B_G = 0.0;
  double L_G = 0.0;
  double B_F = 0.0;
  double L_F = 0.0;
  double L_f = 0.0;
  double H1 = 0.0;
  double H2 = 0.0;

  /// Bit set => the field is an empirical estimate, not a proven bound.
  unsigned estimated_mask = 0;

  bool estimated(ConstantField f) const {
    return (estimated_mask >> static_cast<unsigned>(f)) & 1u;
  }
  void set_estimated(ConstantField f, bool on) {
    const unsigned bit = 1u << static_cast<unsigned>(f);
    estimated_mask = on ? (estimated_mask | bit) : (estimated_mask & ~bit);
  }
  bool any_estimated() const { return estimated_mask != 0; }
};

/// Oracle bundle for f(x) = (1/n) sum_i F_i((1/n) sum_j G_j(x)).
///
/// Oracles are deterministic and read-only after construction; they may be
/// evaluated concurrently. All bounds-checked entry points throw
/// ArgumentError on index or dimension mismatches. An optional ledger records
/// raw oracle-call counts.
class CompositionProblem {
 public:
  virtual ~CompositionProblem() = default;

  int component_count() const { return n_; }
  int dim_x() const { return dim_x_; }
  int dim_w() const { return dim_w_; }

  /// Half-width of the box |x|_inf <= region over which the variance
  /// constants were computed.
  double region() const { return region_; }

  const ProblemConstants& constants() const { return constants_; }
  void set_constants(const ProblemConstants& c) { constants_ = c; }

  const std::optional<Eigen::VectorXd>& optimum() const { return optimum_; }
  std::optional<double> optimum_value() const { return optimum_value_; }

  /// G_j(x), j in [0, n).
  Eigen::VectorXd inner_value(int j, const Eigen::VectorXd& x, QueryLedger* ledger = nullptr) const;
  /// dG_j(x), an (dim_w x dim_x) Jacobian.
  Eigen::MatrixXd inner_jacobian(int j, const Eigen::VectorXd& x,
                                 QueryLedger* ledger = nullptr) const;
  /// F_i(w), i in [0, n).
  double outer_value(int i, const Eigen::VectorXd& w, QueryLedger* ledger = nullptr) const;
  /// grad F_i(w).
  Eigen::VectorXd outer_gradient(int i, const Eigen::VectorXd& w,
                                 QueryLedger* ledger = nullptr) const;

  /// Flat one-line text form sufficient to regenerate bit-identical oracles.
  virtual std::string serialize() const = 0;

 protected:
  CompositionProblem(int n, int dim_x, int dim_w, double region)
      : n_(n), dim_x_(dim_x), dim_w_(dim_w), region_(region) {}

  virtual Eigen::VectorXd do_inner_value(int j, const Eigen::VectorXd& x) const = 0;
  virtual Eigen::MatrixXd do_inner_jacobian(int j, const Eigen::VectorXd& x) const = 0;
  virtual double do_outer_value(int i, const Eigen::VectorXd& w) const = 0;
  virtual Eigen::VectorXd do_outer_gradient(int i, const Eigen::VectorXd& w) const = 0;

  ProblemConstants constants_;
  std::optional<Eigen::VectorXd> optimum_;
  std::optional<double> optimum_value_;

 private:
  int n_;
  int dim_x_;
  int dim_w_;
  double region_;
};

/// G(x) = (1/n) sum_j G_j(x), the exact inner mean.
Eigen::VectorXd full_inner(const CompositionProblem& p, const Eigen::VectorXd& x,
                           QueryLedger* ledger = nullptr);

/// f(x) = (1/n) sum_i F_i(G(x)).
double full_value(const CompositionProblem& p, const Eigen::VectorXd& x,
                  QueryLedger* ledger = nullptr);

/// grad f(x) = (dG(x))^T gradF(G(x)). Evaluation/verification oracle only;
/// never called inside the solver loop.
Eigen::VectorXd full_gradient(const CompositionProblem& p, const Eigen::VectorXd& x,
                              QueryLedger* ledger = nullptr);

/// Linear-composition-quadratic family: G_j(x) = A_j x + b_j,
/// F_i(w) = |w - c_i|^2. Strongly convex whenever the mean matrix has full
/// column rank, with closed-form optimum and exact constants.
std::unique_ptr<CompositionProblem> make_lcq(int n, int N, int M, std::uint64_t seed,
                                             double region = 10.0);

/// The 1-D reference member of the family: n=2, G_1(x)=x, G_2(x)=3x,
/// F_1(w)=w^2, F_2(w)=(w-2)^2, so f(x)=4x^2-4x+2 with x*=0.5, f*=1.
std::unique_ptr<CompositionProblem> make_lcq_reference();

/// Mean-variance objective E[h] + lambda Var[h] with linear losses
/// h(x;a,b) = <a,x> - b, encoded as a two-level composition:
/// G_j(x) = (x, h(x;a_j,b_j)), F_i(u,v) = h(u;a_i,b_i) + lambda (h(u;a_i,b_i) - v)^2.
std::unique_ptr<CompositionProblem> make_mean_variance(int n, int N, double lambda,
                                                       std::uint64_t seed, double region = 10.0);

/// Smooth non-convex instance: G_j(x) = A_j x + (beta/N) L sin(x) with a
/// unit-norm lift L of the elementwise sine, F_i(w) = 0.5 |w - c_i|^2.
/// beta = 0 recovers an affine-inner, quadratic-outer convex instance.
std::unique_ptr<CompositionProblem> make_nonconvex_synthetic(int n, int N, int M, double beta,
                                                             std::uint64_t seed,
                                                             double region = 10.0);

/// Rebuilds a problem from its serialize() text.
std::unique_ptr<CompositionProblem> parse_problem(const std::string& text);

/// Empirical constants for user problems: samples `points` random points in
/// the region box and reports observed maxima, all flagged estimated.
ProblemConstants estimate_constants(const CompositionProblem& p, int points, std::uint64_t seed);

/// (1/n) sum_j |G_j(x) - G(x)|^2, the inner-value component variance at x.
double empirical_h1(const CompositionProblem& p, const Eigen::VectorXd& x);

/// (1/n^2) sum_ij |(dG_j(x))^T gradF_i(G(x)) - (dG(x))^T gradF(G(x))|^2.
double empirical_h2(const CompositionProblem& p, const Eigen::VectorXd& x);

}  // namespace compopt

#endif  // COMPOPT_PROBLEM_HPP
