#ifndef COMPOPT_SCHEDULE_HPP
#define COMPOPT_SCHEDULE_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "compopt/problem.hpp"

namespace compopt {

enum class ScheduleMode { convex, nonconvex };

enum class Provenance { corollary, user_override };

/// All tunables of the two algorithm variants. Fields are either derived from
/// the corollaries (convex_schedule / nonconvex_schedule) or user overrides;
/// per-field provenance is kept for the trace header.
struct Schedule {
  ScheduleMode mode = ScheduleMode::convex;
  std::int64_t A = 1;
  std::int64_t D = 1;
  std::int64_t K = 1;
  std::int64_t S = 1;
  std::int64_t b = 1;
  double eta = 0.0;
  double h = 0.0;
  double epsilon = 0.0;

  Provenance prov_A = Provenance::corollary;
  Provenance prov_D = Provenance::corollary;
  Provenance prov_K = Provenance::corollary;
  Provenance prov_S = Provenance::corollary;
  Provenance prov_b = Provenance::corollary;
  Provenance prov_eta = Provenance::corollary;
  Provenance prov_h = Provenance::corollary;

  /// Which min{} branches bound, and similar derivation notes.
  std::vector<std::string> notes;
  /// Estimated-constant and fallback warnings.
  std::vector<std::string> warnings;

  /// Throws ArgumentError on nonsensical values (sizes < 1, eta < 0, ...).
  void validate() const;
};

/// Convex-corollary schedule: h = mu, eta = b mu/(135 L_f^2),
/// A = min{n, ceil(128 B_G^4 L_F^2/mu^2)},
/// D = min{n, ceil(5(16 B_G^4 L_F^2 H1 + 4 H2)/(4 eps mu^2))},
/// K = ceil(540 L_f^2/(b mu^2)), S = ceil(log(2 x0_gap/eps)/log(1/rho)).
/// x0_gap <= 0 selects the default 1.0 with a warning.
Schedule convex_schedule(const ProblemConstants& constants, int n, double epsilon,
                         std::int64_t b, double x0_gap);

/// Non-convex corollary schedule: eta = b^{3/5} min{1/n^{2/5}, eps^{2/5}},
/// h = sqrt(b/eta), A = min{n, ceil(c_A b/eta)}, D = min{n, ceil(c_D/eps)},
/// K = ceil(sqrt(b)/eta^{3/2}), S = ceil(T/K) with T = ceil(c_T/(eps eta)).
/// The corollaries leave the O(.) constants unstated; c_A, c_D, c_T expose
/// them with default 1.
Schedule nonconvex_schedule(const ProblemConstants& constants, int n, double epsilon,
                            std::int64_t b, double c_A = 1.0, double c_D = 1.0, double c_T = 1.0);

const char* to_string(Provenance p);
const char* to_string(ScheduleMode m);

}  // namespace compopt

#endif  // COMPOPT_SCHEDULE_HPP
