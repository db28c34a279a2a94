#include "compopt/estimator.hpp"

#include "compopt/errors.hpp"

namespace compopt {

namespace {

Eigen::VectorXd batch_inner_mean(const CompositionProblem& p, const IndexBatch& batch,
                                 const Eigen::VectorXd& x, QueryLedger* ledger) {
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(p.dim_w());
  for (int j : batch.indices) acc += p.inner_value(j, x, ledger);
  return acc / static_cast<double>(batch.indices.size());
}

}  // namespace

IndexBatch batch_or_cover(int n, int size, SampleMode mode, RngStream& rng) {
  if (size == n) return exact_cover(n);
  return sample(n, size, mode, rng);
}

EpochAnchor compute_anchor(const CompositionProblem& p, const Eigen::VectorXd& x_tilde,
                           IndexBatch d1, IndexBatch d2, QueryLedger* ledger, int epoch) {
  if (d1.indices.empty() || d2.indices.empty())
    throw ArgumentError("compute_anchor: empty index batch");
  EpochAnchor anchor;
  anchor.x_tilde = x_tilde;
  anchor.epoch = epoch;
  if (ledger) ledger->charge_paper(d1.indices.size());

  anchor.g_anchor = batch_inner_mean(p, d1, x_tilde, ledger);

  Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(p.dim_w(), p.dim_x());
  for (int j : d1.indices) jac += p.inner_jacobian(j, x_tilde, ledger);
  jac /= static_cast<double>(d1.indices.size());

  Eigen::VectorXd grad = Eigen::VectorXd::Zero(p.dim_w());
  for (int i : d2.indices) grad += p.outer_gradient(i, anchor.g_anchor, ledger);
  grad /= static_cast<double>(d2.indices.size());

  anchor.grad_anchor = jac.transpose() * grad;
  anchor.d1 = std::move(d1);
  anchor.d2 = std::move(d2);
  return anchor;
}

EpochAnchor build_anchor(const CompositionProblem& p, const Eigen::VectorXd& x_tilde, int D,
                         RngStream& d1_rng, RngStream& d2_rng, SampleMode mode,
                         QueryLedger* ledger, int epoch) {
  if (D < 1) throw ArgumentError("build_anchor: D must be positive");
  const int n = p.component_count();
  IndexBatch d1 = batch_or_cover(n, D, mode, d1_rng);
  IndexBatch d2 = batch_or_cover(n, D, mode, d2_rng);
  return compute_anchor(p, x_tilde, std::move(d1), std::move(d2), ledger, epoch);
}

InnerEstimate compute_inner_estimate(const CompositionProblem& p, const Eigen::VectorXd& x_k,
                                     const EpochAnchor& anchor, IndexBatch a_batch,
                                     QueryLedger* ledger) {
  if (a_batch.indices.empty()) throw ArgumentError("compute_inner_estimate: empty A batch");
  if (ledger) ledger->charge_paper(a_batch.indices.size());
  InnerEstimate est;
  est.at_x = x_k;
  est.value = batch_inner_mean(p, a_batch, x_k, ledger) -
              batch_inner_mean(p, a_batch, anchor.x_tilde, ledger) + anchor.g_anchor;
  est.a_batch = std::move(a_batch);
  return est;
}

InnerEstimate estimate_inner(const CompositionProblem& p, const Eigen::VectorXd& x_k,
                             const EpochAnchor& anchor, int A, RngStream& rng, SampleMode mode,
                             QueryLedger* ledger) {
  if (A < 1) throw ArgumentError("estimate_inner: A must be positive");
  IndexBatch a_batch = batch_or_cover(p.component_count(), A, mode, rng);
  return compute_inner_estimate(p, x_k, anchor, std::move(a_batch), ledger);
}

Eigen::VectorXd estimate_gradient(const CompositionProblem& p, const Eigen::VectorXd& x_k,
                                  const InnerEstimate& inner_est, const EpochAnchor& anchor,
                                  int i_k, int j_k, QueryLedger* ledger) {
  if (ledger) ledger->charge_paper(4);
  const Eigen::MatrixXd jac_k = p.inner_jacobian(j_k, x_k, ledger);
  const Eigen::MatrixXd jac_t = p.inner_jacobian(j_k, anchor.x_tilde, ledger);
  const Eigen::VectorXd og_k = p.outer_gradient(i_k, inner_est.value, ledger);
  const Eigen::VectorXd og_t = p.outer_gradient(i_k, anchor.g_anchor, ledger);
  return jac_k.transpose() * og_k - jac_t.transpose() * og_t + anchor.grad_anchor;
}

Eigen::VectorXd minibatch_gradient(const CompositionProblem& p, const Eigen::VectorXd& x_k,
                                   const InnerEstimate& inner_est, const EpochAnchor& anchor,
                                   std::span<const std::pair<int, int>> pairs,
                                   QueryLedger* ledger) {
  if (pairs.empty()) throw ArgumentError("minibatch_gradient: b must be positive");
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(p.dim_x());
  for (const auto& [i_k, j_k] : pairs)
    acc += estimate_gradient(p, x_k, inner_est, anchor, i_k, j_k, ledger);
  return acc / static_cast<double>(pairs.size());
}

}  // namespace compopt
