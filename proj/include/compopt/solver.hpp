#ifndef COMPOPT_SOLVER_HPP
#define COMPOPT_SOLVER_HPP

#include <Eigen/Core>
#include <cstdint>
#include <vector>

#include "compopt/estimator.hpp"
#include "compopt/ledger.hpp"
#include "compopt/problem.hpp"
#include "compopt/sampling.hpp"
#include "compopt/schedule.hpp"

namespace compopt {

enum class Algorithm { scscg, scscg_minibatch, full_anchor };

/// One per-epoch trace record, evaluated at the epoch-end snapshot x~_s
/// (s = 1..S). The exact-oracle evaluations behind f/grad/dist are charged to
/// the evaluation ledger, never to the paper counts.
struct TraceRow {
  std::int64_t s = 0;
  double f_value = 0.0;
  double grad_norm_sq = 0.0;
  double dist_sq_opt = 0.0;  // NaN when x* unknown
  std::uint64_t paper_queries = 0;
  std::uint64_t paper_queries_corollary = 0;
  std::uint64_t raw_queries = 0;
};

/// Optional per-iteration record (verbose runs only).
struct IterRow {
  std::int64_t s = 0;
  std::int64_t k = 0;
  double dist_sq_anchor = 0.0;
  double grad_est_norm_sq = 0.0;
};

struct RunTrace {
  std::vector<TraceRow> epochs;
  std::vector<IterRow> iterations;
};

struct RunOptions {
  /// Initial point x~_0; zero vector when empty.
  Eigen::VectorXd x0;
  bool verbose = false;
  /// When true and b == n^2, the mini-batch enumerates every (i,j) pair
  /// exactly once instead of sampling.
  bool enumerate_pairs = false;
  SampleMode mode = SampleMode::with_replacement;
};

struct RunResult {
  Eigen::VectorXd x_hat;       // reservoir-selected output iterate
  std::int64_t output_epoch = 0;
  std::int64_t output_iter = 0;
  Eigen::VectorXd x_final;     // x~_S
  RunTrace trace;
  QueryLedger ledger;
};

/// Algorithm 1: per epoch build a subsampled anchor (D queries), then K inner
/// steps, each with a fresh inner estimate (A queries) and one sampled pair
/// (4 queries). Batches of size n are exact covers. Deterministic under
/// (seed, schedule, problem). Throws DivergenceError on non-finite iterates.
RunResult run_scscg(const CompositionProblem& p, const Schedule& schedule, std::uint64_t seed,
                    const RunOptions& options = {});

/// Algorithm 2: the inner update averages b pair estimates sharing one inner
/// estimate. b = 1 reproduces run_scscg bit-identically.
RunResult run_scscg_minibatch(const CompositionProblem& p, const Schedule& schedule,
                              std::uint64_t seed, const RunOptions& options = {});

/// Baseline with exact anchors: D1 = D2 = [n] covers regardless of the
/// schedule's D, so the anchor gradient is the exact full gradient.
RunResult run_full_anchor(const CompositionProblem& p, const Schedule& schedule,
                          std::uint64_t seed, const RunOptions& options = {});

RunResult run_algorithm(Algorithm algorithm, const CompositionProblem& p,
                        const Schedule& schedule, std::uint64_t seed,
                        const RunOptions& options = {});

const char* to_string(Algorithm a);

}  // namespace compopt

#endif  // COMPOPT_SOLVER_HPP
