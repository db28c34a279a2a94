#include "compopt/schedule.hpp"

#include <cmath>
#include <sstream>

#include "compopt/analysis.hpp"
#include "compopt/errors.hpp"

namespace compopt {

namespace {

std::int64_t ceil_to_i64(double v) {
  if (!(v > 0.0)) return 1;
  const double c = std::ceil(v);
  if (c > 9.0e18) throw ArgumentError("schedule: derived count overflows");
  return static_cast<std::int64_t>(c);
}

std::int64_t min_with_n(int n, double bound, const char* field, std::vector<std::string>& notes) {
  if (bound >= static_cast<double>(n)) {
    notes.push_back(std::string(field) + ": min bound at n");
    return n;
  }
  notes.push_back(std::string(field) + ": min bound at formula");
  return ceil_to_i64(bound);
}

void warn_estimated(const ProblemConstants& k, std::vector<std::string>& warnings) {
  if (k.any_estimated())
    warnings.push_back("constants: one or more fields are empirical estimates");
}

}  // namespace

void Schedule::validate() const {
  if (A < 1 || D < 1 || K < 1 || S < 1 || b < 1)
    throw ArgumentError("schedule: A, D, K, S, b must be positive");
  if (eta < 0.0 || !std::isfinite(eta)) throw ArgumentError("schedule: eta must be finite and >= 0");
  if (h < 0.0 || !std::isfinite(h)) throw ArgumentError("schedule: h must be finite and >= 0");
}

Schedule convex_schedule(const ProblemConstants& k, int n, double epsilon, std::int64_t b,
                         double x0_gap) {
  if (n < 1) throw ArgumentError("convex_schedule: n must be positive");
  if (k.mu <= 0.0) throw ArgumentError("convex_schedule: requires mu > 0 (convex mode)");
  if (k.L_f <= 0.0) throw ArgumentError("convex_schedule: requires L_f > 0");
  if (epsilon <= 0.0) throw ArgumentError("convex_schedule: epsilon must be positive");
  if (b < 1) throw ArgumentError("convex_schedule: b must be positive");

  Schedule s;
  s.mode = ScheduleMode::convex;
  s.b = b;
  s.epsilon = epsilon;
  warn_estimated(k, s.warnings);

  const double mu = k.mu;
  const double lf2 = k.L_f * k.L_f;
  const double b4f2 = k.B_G * k.B_G * k.B_G * k.B_G * k.L_F * k.L_F;

  s.h = mu;
  s.eta = static_cast<double>(b) * mu / (135.0 * lf2);
  s.A = min_with_n(n, 128.0 * b4f2 / (mu * mu), "A", s.notes);
  s.D = min_with_n(n, 5.0 * (16.0 * b4f2 * k.H1 + 4.0 * k.H2) / (4.0 * epsilon * mu * mu), "D",
                   s.notes);
  s.K = ceil_to_i64(540.0 * lf2 / (static_cast<double>(b) * mu * mu));

  double gap = x0_gap;
  if (!(gap > 0.0)) {
    gap = 1.0;
    s.warnings.push_back("x0_gap: unknown, defaulting to 1.0");
  }

  // S from the geometric factor rho = (1/K + rho2)/rho1.
  s.S = 1;
  const ConvexRates rates = convex_rates(s, k, n);
  if (!rates.valid || !rates.contracting)
    throw ArgumentError("convex_schedule: derived schedule has rho >= 1");
  const double needed = std::log(2.0 * gap / epsilon) / std::log(1.0 / rates.rho);
  s.S = std::max<std::int64_t>(1, ceil_to_i64(needed));
  return s;
}

Schedule nonconvex_schedule(const ProblemConstants& k, int n, double epsilon, std::int64_t b,
                            double c_A, double c_D, double c_T) {
  if (n < 1) throw ArgumentError("nonconvex_schedule: n must be positive");
  if (epsilon <= 0.0 || epsilon >= 1.0)
    throw ArgumentError("nonconvex_schedule: epsilon must lie in (0,1)");
  if (b < 1) throw ArgumentError("nonconvex_schedule: b must be positive");
  if (c_A <= 0.0 || c_D <= 0.0 || c_T <= 0.0)
    throw ArgumentError("nonconvex_schedule: c_A, c_D, c_T must be positive");

  Schedule s;
  s.mode = ScheduleMode::nonconvex;
  s.b = b;
  s.epsilon = epsilon;
  warn_estimated(k, s.warnings);

  const double bb = static_cast<double>(b);
  const double n_term = std::pow(static_cast<double>(n), -0.4);
  const double eps_term = std::pow(epsilon, 0.4);
  s.eta = std::pow(bb, 0.6) * std::min(n_term, eps_term);
  {
    std::ostringstream note;
    note << "eta: min bound at " << (n_term <= eps_term ? "1/n^(2/5)" : "eps^(2/5)");
    s.notes.push_back(note.str());
  }
  s.h = std::sqrt(bb / s.eta);
  s.A = min_with_n(n, c_A * bb / s.eta, "A", s.notes);
  s.D = min_with_n(n, c_D / epsilon, "D", s.notes);
  s.K = ceil_to_i64(std::sqrt(bb) / std::pow(s.eta, 1.5));
  const std::int64_t T = ceil_to_i64(c_T / (epsilon * s.eta));
  s.S = std::max<std::int64_t>(
      1, (T + s.K - 1) / s.K);
  return s;
}

const char* to_string(Provenance p) {
  return p == Provenance::corollary ? "corollary" : "override";
}

const char* to_string(ScheduleMode m) {
  return m == ScheduleMode::convex ? "convex" : "nonconvex";
}

}  // namespace compopt
