#ifndef COMPOPT_ESTIMATOR_HPP
#define COMPOPT_ESTIMATOR_HPP

#include <Eigen/Core>
#include <span>
#include <utility>

#include "compopt/problem.hpp"
#include "compopt/sampling.hpp"

namespace compopt {

/// Per-epoch snapshot: the anchor point with its cached subsampled inner
/// value G_{D1}(x~) and the (generally biased) anchor gradient
/// (dG_{D1}(x~))^T gradF_{D2}(G_{D1}(x~)).
struct EpochAnchor {
  Eigen::VectorXd x_tilde;
  IndexBatch d1;
  IndexBatch d2;
  Eigen::VectorXd g_anchor;
  Eigen::VectorXd grad_anchor;
  int epoch = 0;
};

/// Variance-reduced inner estimate G_A(x_k) - G_A(x~) + G_{D1}(x~).
struct InnerEstimate {
  Eigen::VectorXd value;
  IndexBatch a_batch;
  Eigen::VectorXd at_x;
};

/// Anchor from explicit index batches. Charges |d1| paper queries plus the
/// raw counts (|d1| inner values, |d1| Jacobians, |d2| outer gradients).
EpochAnchor compute_anchor(const CompositionProblem& p, const Eigen::VectorXd& x_tilde,
                           IndexBatch d1, IndexBatch d2, QueryLedger* ledger = nullptr,
                           int epoch = 0);

/// Samples D1 and D2 independently (D draws each; an exact cover when D == n)
/// and builds the anchor.
EpochAnchor build_anchor(const CompositionProblem& p, const Eigen::VectorXd& x_tilde, int D,
                         RngStream& d1_rng, RngStream& d2_rng,
                         SampleMode mode = SampleMode::with_replacement,
                         QueryLedger* ledger = nullptr, int epoch = 0);

/// Inner estimate from an explicit A batch. Charges |a| paper queries and 2|a|
/// raw inner values (G_A at both x_k and x~).
InnerEstimate compute_inner_estimate(const CompositionProblem& p, const Eigen::VectorXd& x_k,
                                     const EpochAnchor& anchor, IndexBatch a_batch,
                                     QueryLedger* ledger = nullptr);

/// Samples a fresh A batch (exact cover when A == n) and estimates the inner
/// function at x_k.
InnerEstimate estimate_inner(const CompositionProblem& p, const Eigen::VectorXd& x_k,
                             const EpochAnchor& anchor, int A, RngStream& rng,
                             SampleMode mode = SampleMode::with_replacement,
                             QueryLedger* ledger = nullptr);

/// Composite gradient estimate for one sampled pair (i_k, j_k):
///   (dG_{j}(x_k))^T gradF_{i}(G^) - (dG_{j}(x~))^T gradF_{i}(G_{D1}(x~)) + anchor.
/// Charges 4 paper queries (2 Jacobians + 2 outer gradients raw).
Eigen::VectorXd estimate_gradient(const CompositionProblem& p, const Eigen::VectorXd& x_k,
                                  const InnerEstimate& inner_est, const EpochAnchor& anchor,
                                  int i_k, int j_k, QueryLedger* ledger = nullptr);

/// Mini-batch aggregate over the given pairs, all sharing one inner estimate.
/// Charges 4b paper queries; with a single pair it is bit-identical to
/// estimate_gradient.
Eigen::VectorXd minibatch_gradient(const CompositionProblem& p, const Eigen::VectorXd& x_k,
                                   const InnerEstimate& inner_est, const EpochAnchor& anchor,
                                   std::span<const std::pair<int, int>> pairs,
                                   QueryLedger* ledger = nullptr);

/// Batch helper used across solver and verification: an exact cover when
/// size == n, a random batch otherwise.
IndexBatch batch_or_cover(int n, int size, SampleMode mode, RngStream& rng);

}  // namespace compopt

#endif  // COMPOPT_ESTIMATOR_HPP
