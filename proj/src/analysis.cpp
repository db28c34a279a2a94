#include "compopt/analysis.hpp"

#include <cmath>

#include "compopt/errors.hpp"

namespace compopt {

namespace {

double indicator(bool cond) { return cond ? 1.0 : 0.0; }

// V and W share one formula: B_G^4 L_F^2 (4 I(A<n)/A + 4 I(D<n)/D).
double displacement_coefficient(const Schedule& s, const ProblemConstants& k, int n) {
  const double b4 = k.B_G * k.B_G * k.B_G * k.B_G;
  const double ia = indicator(s.A < n) / static_cast<double>(s.A);
  const double id = indicator(s.D < n) / static_cast<double>(s.D);
  return b4 * k.L_F * k.L_F * (4.0 * ia + 4.0 * id);
}

// V1 and W1: 20 B_G^2 L_F^2 I(D<n)/D H1 + 5 I(D^2<n^2)/D^2 H2.
double variance_coefficient(const Schedule& s, const ProblemConstants& k, int n) {
  const double dd = static_cast<double>(s.D);
  const double nn = static_cast<double>(n);
  const double id = indicator(static_cast<double>(s.D) < nn) / dd;
  const double id2 = indicator(dd * dd < nn * nn) / (dd * dd);
  return 20.0 * k.B_G * k.B_G * k.L_F * k.L_F * id * k.H1 + 5.0 * id2 * k.H2;
}

}  // namespace

ConvexRates convex_rates(const Schedule& s, const ProblemConstants& k, int n) {
  ConvexRates r;
  r.V = displacement_coefficient(s, k, n);
  r.V1 = variance_coefficient(s, k, n);
  r.V2 = 0.8 * r.V1;
  const double eta = s.eta;
  const double h = s.h;
  const double lf2 = k.L_f * k.L_f;
  r.rho1 = (2.0 * k.mu - h - 4.0 * r.V / h - (12.0 * lf2 + 10.0 * r.V) * eta) * eta;
  r.rho2 = 2.0 * (2.0 * r.V / h + 5.0 * (lf2 + r.V) * eta) * eta;
  r.rho3 = (eta / h) * r.V2 + 2.0 * eta * eta * r.V1;
  r.valid = r.rho1 > 0.0;
  if (r.valid) {
    r.rho = (1.0 / static_cast<double>(s.K) + r.rho2) / r.rho1;
    r.contracting = r.rho < 1.0;
  }
  return r;
}

double closed_form_c0(double Y, double U, std::int64_t K) {
  if (K <= 0) return 0.0;
  if (Y <= 1.0) return U * static_cast<double>(K);  // eta = 0 degenerate case
  return U * (std::pow(Y, static_cast<double>(K)) - 1.0) / (Y - 1.0);
}

NonconvexSequence nonconvex_sequence(const Schedule& s, const ProblemConstants& k, int n) {
  NonconvexSequence seq;
  seq.W = displacement_coefficient(s, k, n);
  seq.W1 = variance_coefficient(s, k, n);
  seq.W2 = 0.8 * seq.W1;
  const double eta = s.eta;
  const double h = s.h;
  const double lf = k.L_f;
  const double lf2 = lf * lf;
  seq.Y = 1.0 + (2.0 / h + 4.0 * h * seq.W) * eta + 10.0 * (lf2 + seq.W) * eta * eta;
  seq.U = 2.0 * seq.W * eta + 5.0 * (lf2 + seq.W) * lf * eta * eta;
  seq.C = std::pow(seq.Y, static_cast<double>(s.K)) - 1.0;

  // Backward recursion c_k = c_{k+1} Y + U from c_K = 0.
  const std::size_t K = static_cast<std::size_t>(s.K);
  seq.c.assign(K + 1, 0.0);
  for (std::size_t idx = K; idx-- > 0;) seq.c[idx] = seq.c[idx + 1] * seq.Y + seq.U;

  const double c1 = K >= 1 ? seq.c[1] : 0.0;
  seq.u0 = (0.5 - h * c1) * eta - (lf + 2.0 * c1) * eta * eta;
  seq.J0 = (0.5 + h * c1) * seq.W2 * eta + (lf + 2.0 * c1) * seq.W1 * eta * eta;
  seq.valid = seq.u0 > 0.0;
  return seq;
}

double theorem_bound_nonconvex(const NonconvexSequence& seq, double f0_gap, std::int64_t K,
                               std::int64_t S) {
  if (seq.u0 <= 0.0)
    throw ArgumentError("theorem_bound_nonconvex: u0 must be positive");
  return f0_gap / (seq.u0 * static_cast<double>(K) * static_cast<double>(S)) + seq.J0 / seq.u0;
}

}  // namespace compopt
