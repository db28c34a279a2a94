#ifndef COMPOPT_ANALYSIS_HPP
#define COMPOPT_ANALYSIS_HPP

#include <cstdint>
#include <vector>

#include "compopt/problem.hpp"
#include "compopt/schedule.hpp"

namespace compopt {

/// Rate quantities of the strongly convex recursion
///   rho1 E|x~_{s+1} - x*|^2 <= (1/K + rho2) E|x~_s - x*|^2 + rho3,
/// with rho = (1/K + rho2)/rho1 the per-epoch contraction factor.
struct ConvexRates {
  double V = 0.0;
  double V1 = 0.0;
  double V2 = 0.0;
  double rho1 = 0.0;
  double rho2 = 0.0;
  double rho3 = 0.0;
  double rho = 0.0;
  /// False when rho1 <= 0 (the schedule admits no contraction statement).
  bool valid = false;
  /// rho >= 1 means no geometric decrease even when rho1 > 0.
  bool contracting = false;
};

ConvexRates convex_rates(const Schedule& schedule, const ProblemConstants& constants, int n);

/// Lyapunov coefficients of the non-convex analysis. The sequence c_k obeys
/// the backward recursion c_k = c_{k+1} Y + U from c_K = 0, with closed form
/// c_0 = U (Y^K - 1)/(Y - 1).
struct NonconvexSequence {
  double W = 0.0;
  double W1 = 0.0;
  double W2 = 0.0;
  double Y = 0.0;
  double U = 0.0;
  double C = 0.0;  // Y^K - 1
  /// c[k] = c_k for k = 0..K (c[K] = 0).
  std::vector<double> c;
  double u0 = 0.0;
  double J0 = 0.0;
  /// False when u0 <= 0 (the gradient bound is vacuous for this schedule).
  bool valid = false;
};

NonconvexSequence nonconvex_sequence(const Schedule& schedule, const ProblemConstants& constants,
                                     int n);

/// Closed-form c_0 of the geometric progression (Y > 1, K >= 0).
double closed_form_c0(double Y, double U, std::int64_t K);

/// Theorem bound on E|grad f(x^)|^2: f0_gap/(u0 K S) + J0/u0.
double theorem_bound_nonconvex(const NonconvexSequence& seq, double f0_gap, std::int64_t K,
                               std::int64_t S);

}  // namespace compopt

#endif  // COMPOPT_ANALYSIS_HPP
