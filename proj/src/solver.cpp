#include "compopt/solver.hpp"

#include <cmath>
#include <limits>

#include "compopt/errors.hpp"

namespace compopt {

namespace {

constexpr double kDivergenceNorm = 1e12;

RunResult run_impl(const CompositionProblem& p, const Schedule& schedule, std::uint64_t seed,
                   const RunOptions& options, std::int64_t b, bool force_full_anchor) {
  schedule.validate();
  const int n = p.component_count();
  const std::int64_t D = force_full_anchor ? n : schedule.D;
  const std::int64_t A = schedule.A;
  const std::int64_t K = schedule.K;
  const std::int64_t S = schedule.S;
  if (K * S == 0) throw ArgumentError("run: K*S must be positive");

  Eigen::VectorXd x_tilde = options.x0.size() > 0 ? options.x0
                                                  : Eigen::VectorXd::Zero(p.dim_x());
  if (x_tilde.size() != p.dim_x()) throw ArgumentError("run: x0 has wrong dimension");

  std::vector<std::pair<int, int>> pairs(static_cast<std::size_t>(b));
  const bool enumerate = options.enumerate_pairs;
  if (enumerate && b != static_cast<std::int64_t>(n) * n)
    throw ArgumentError("run: pair enumeration requires b = n^2");

  StreamFactory streams(seed);
  RngStream out_rng = streams.output_selection();

  RunResult result;
  result.ledger = QueryLedger{};
  result.trace.epochs.reserve(static_cast<std::size_t>(S));
  result.x_hat = x_tilde;

  std::uint64_t considered = 0;  // reservoir count over all (s,k)

  for (std::int64_t s = 0; s < S; ++s) {
    RngStream d1_rng = streams.anchor_d1(static_cast<std::uint64_t>(s));
    RngStream d2_rng = streams.anchor_d2(static_cast<std::uint64_t>(s));
    const EpochAnchor anchor =
        build_anchor(p, x_tilde, static_cast<int>(D), d1_rng, d2_rng, options.mode,
                     &result.ledger, static_cast<int>(s));

    Eigen::VectorXd x = x_tilde;
    for (std::int64_t k = 0; k < K; ++k) {
      // Output point: uniform over all (s,k) via single-slot reservoir.
      ++considered;
      if (out_rng.next_below(considered) == 0) {
        result.x_hat = x;
        result.output_epoch = s;
        result.output_iter = k;
      }

      RngStream a_rng = streams.inner_batch(static_cast<std::uint64_t>(s),
                                            static_cast<std::uint64_t>(k));
      const InnerEstimate inner_est = estimate_inner(p, x, anchor, static_cast<int>(A), a_rng,
                                                     options.mode, &result.ledger);

      if (enumerate) {
        std::size_t t = 0;
        for (int i = 0; i < n; ++i)
          for (int j = 0; j < n; ++j) pairs[t++] = {i, j};
      } else {
        for (std::int64_t t = 0; t < b; ++t) {
          RngStream pair_rng = streams.pair(static_cast<std::uint64_t>(s),
                                            static_cast<std::uint64_t>(k),
                                            static_cast<std::uint64_t>(t));
          const int i_k = static_cast<int>(pair_rng.next_below(static_cast<std::uint64_t>(n)));
          const int j_k = static_cast<int>(pair_rng.next_below(static_cast<std::uint64_t>(n)));
          pairs[static_cast<std::size_t>(t)] = {i_k, j_k};
        }
      }
      const Eigen::VectorXd step = minibatch_gradient(p, x, inner_est, anchor, pairs,
                                                      &result.ledger);
      x -= schedule.eta * step;

      if (!x.allFinite() || x.norm() > kDivergenceNorm)
        throw DivergenceError("run: iterate diverged", s, k);

      if (options.verbose) {
        IterRow row;
        row.s = s;
        row.k = k;
        row.dist_sq_anchor = (x - x_tilde).squaredNorm();
        row.grad_est_norm_sq = step.squaredNorm();
        result.trace.iterations.push_back(row);
      }
    }
    x_tilde = x;

    TraceRow row;
    row.s = s + 1;
    {
      EvaluationScope eval(result.ledger);
      row.f_value = full_value(p, x_tilde, &result.ledger);
      row.grad_norm_sq = full_gradient(p, x_tilde, &result.ledger).squaredNorm();
      row.dist_sq_opt = p.optimum() ? (x_tilde - *p.optimum()).squaredNorm()
                                    : std::numeric_limits<double>::quiet_NaN();
    }
    row.paper_queries = result.ledger.paper_queries;
    row.paper_queries_corollary =
        static_cast<std::uint64_t>(s + 1) *
        epoch_cost_corollary(static_cast<std::uint64_t>(D), static_cast<std::uint64_t>(K),
                             static_cast<std::uint64_t>(A));
    row.raw_queries = result.ledger.raw_total();
    result.trace.epochs.push_back(row);
  }

  result.x_final = x_tilde;
  return result;
}

}  // namespace

RunResult run_scscg(const CompositionProblem& p, const Schedule& schedule, std::uint64_t seed,
                    const RunOptions& options) {
  return run_impl(p, schedule, seed, options, 1, false);
}

RunResult run_scscg_minibatch(const CompositionProblem& p, const Schedule& schedule,
                              std::uint64_t seed, const RunOptions& options) {
  return run_impl(p, schedule, seed, options, schedule.b, false);
}

RunResult run_full_anchor(const CompositionProblem& p, const Schedule& schedule,
                          std::uint64_t seed, const RunOptions& options) {
  return run_impl(p, schedule, seed, options, 1, true);
}

RunResult run_algorithm(Algorithm algorithm, const CompositionProblem& p,
                        const Schedule& schedule, std::uint64_t seed,
                        const RunOptions& options) {
  switch (algorithm) {
    case Algorithm::scscg:
      return run_scscg(p, schedule, seed, options);
    case Algorithm::scscg_minibatch:
      return run_scscg_minibatch(p, schedule, seed, options);
    case Algorithm::full_anchor:
      return run_full_anchor(p, schedule, seed, options);
  }
  throw ArgumentError("run_algorithm: unknown algorithm");
}

const char* to_string(Algorithm a) {
  switch (a) {
    case Algorithm::scscg:
      return "scscg";
    case Algorithm::scscg_minibatch:
      return "scscg_minibatch";
    case Algorithm::full_anchor:
      return "full_anchor";
  }
  return "?";
}

}  // namespace compopt
