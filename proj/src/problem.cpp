#include "compopt/problem.hpp"

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <cmath>
#include <functional>
#include <sstream>

#include "compopt/csv.hpp"
#include "compopt/errors.hpp"
#include "compopt/sampling.hpp"

namespace compopt {

namespace {

constexpr std::uint64_t kGenMatrices = 0x41;
constexpr std::uint64_t kGenOffsets = 0x42;
constexpr std::uint64_t kGenTargets = 0x43;
constexpr std::uint64_t kGenEstimate = 0x44;

double uniform_pm(RngStream& rng, double half_width) {
  return (2.0 * rng.next_unit() - 1.0) * half_width;
}

double spectral_norm(const Eigen::MatrixXd& m) {
  if (m.size() == 0) return 0.0;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  return svd.singularValues()(0);
}

/// Max over the 2^dim corners of the box |x|_inf <= region. Exact supremum
/// for functions convex in x.
double box_corner_max(int dim, double region,
                      const std::function<double(const Eigen::VectorXd&)>& f) {
  Eigen::VectorXd x(dim);
  double best = -std::numeric_limits<double>::infinity();
  const std::uint64_t corners = std::uint64_t(1) << dim;
  for (std::uint64_t mask = 0; mask < corners; ++mask) {
    for (int d = 0; d < dim; ++d) x(d) = ((mask >> d) & 1u) ? region : -region;
    best = std::max(best, f(x));
  }
  return best;
}

constexpr int kCornerDimLimit = 16;

double sampled_max(int dim, double region, std::uint64_t seed,
                   const std::function<double(const Eigen::VectorXd&)>& f, int points) {
  RngStream rng(seed);
  Eigen::VectorXd x(dim);
  double best = -std::numeric_limits<double>::infinity();
  for (int p = 0; p < points; ++p) {
    for (int d = 0; d < dim; ++d) x(d) = uniform_pm(rng, region);
    best = std::max(best, f(x));
  }
  return best;
}

}  // namespace

Eigen::VectorXd CompositionProblem::inner_value(int j, const Eigen::VectorXd& x,
                                                QueryLedger* ledger) const {
  if (j < 0 || j >= n_) throw ArgumentError("inner_value: component index out of range");
  if (x.size() != dim_x_) throw ArgumentError("inner_value: x has wrong dimension");
  if (ledger) ledger->charge_inner_values(1);
  return do_inner_value(j, x);
}

Eigen::MatrixXd CompositionProblem::inner_jacobian(int j, const Eigen::VectorXd& x,
                                                   QueryLedger* ledger) const {
  if (j < 0 || j >= n_) throw ArgumentError("inner_jacobian: component index out of range");
  if (x.size() != dim_x_) throw ArgumentError("inner_jacobian: x has wrong dimension");
  if (ledger) ledger->charge_inner_jacobians(1);
  return do_inner_jacobian(j, x);
}

double CompositionProblem::outer_value(int i, const Eigen::VectorXd& w,
                                       QueryLedger* ledger) const {
  if (i < 0 || i >= n_) throw ArgumentError("outer_value: component index out of range");
  if (w.size() != dim_w_) throw ArgumentError("outer_value: w has wrong dimension");
  if (ledger) ledger->charge_outer_values(1);
  return do_outer_value(i, w);
}

Eigen::VectorXd CompositionProblem::outer_gradient(int i, const Eigen::VectorXd& w,
                                                   QueryLedger* ledger) const {
  if (i < 0 || i >= n_) throw ArgumentError("outer_gradient: component index out of range");
  if (w.size() != dim_w_) throw ArgumentError("outer_gradient: w has wrong dimension");
  if (ledger) ledger->charge_outer_gradients(1);
  return do_outer_gradient(i, w);
}

Eigen::VectorXd full_inner(const CompositionProblem& p, const Eigen::VectorXd& x,
                           QueryLedger* ledger) {
  const int n = p.component_count();
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(p.dim_w());
  for (int j = 0; j < n; ++j) acc += p.inner_value(j, x, ledger);
  return acc / static_cast<double>(n);
}

double full_value(const CompositionProblem& p, const Eigen::VectorXd& x, QueryLedger* ledger) {
  const int n = p.component_count();
  const Eigen::VectorXd g = full_inner(p, x, ledger);
  double acc = 0.0;
  for (int i = 0; i < n; ++i) acc += p.outer_value(i, g, ledger);
  return acc / static_cast<double>(n);
}

Eigen::VectorXd full_gradient(const CompositionProblem& p, const Eigen::VectorXd& x,
                              QueryLedger* ledger) {
  const int n = p.component_count();
  const Eigen::VectorXd g = full_inner(p, x, ledger);
  Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(p.dim_w(), p.dim_x());
  for (int j = 0; j < n; ++j) jac += p.inner_jacobian(j, x, ledger);
  jac /= static_cast<double>(n);
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(p.dim_w());
  for (int i = 0; i < n; ++i) grad += p.outer_gradient(i, g, ledger);
  grad /= static_cast<double>(n);
  return jac.transpose() * grad;
}

double empirical_h1(const CompositionProblem& p, const Eigen::VectorXd& x) {
  const int n = p.component_count();
  std::vector<Eigen::VectorXd> vals(static_cast<std::size_t>(n));
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(p.dim_w());
  for (int j = 0; j < n; ++j) {
    vals[static_cast<std::size_t>(j)] = p.inner_value(j, x);
    mean += vals[static_cast<std::size_t>(j)];
  }
  mean /= static_cast<double>(n);
  double acc = 0.0;
  for (int j = 0; j < n; ++j) acc += (vals[static_cast<std::size_t>(j)] - mean).squaredNorm();
  return acc / static_cast<double>(n);
}

double empirical_h2(const CompositionProblem& p, const Eigen::VectorXd& x) {
  const int n = p.component_count();
  const Eigen::VectorXd g = full_inner(p, x);
  std::vector<Eigen::MatrixXd> jacs(static_cast<std::size_t>(n));
  std::vector<Eigen::VectorXd> grads(static_cast<std::size_t>(n));
  Eigen::MatrixXd jac_mean = Eigen::MatrixXd::Zero(p.dim_w(), p.dim_x());
  Eigen::VectorXd grad_mean = Eigen::VectorXd::Zero(p.dim_w());
  for (int j = 0; j < n; ++j) {
    jacs[static_cast<std::size_t>(j)] = p.inner_jacobian(j, x);
    jac_mean += jacs[static_cast<std::size_t>(j)];
    grads[static_cast<std::size_t>(j)] = p.outer_gradient(j, g);
    grad_mean += grads[static_cast<std::size_t>(j)];
  }
  jac_mean /= static_cast<double>(n);
  grad_mean /= static_cast<double>(n);
  const Eigen::VectorXd center = jac_mean.transpose() * grad_mean;
  double acc = 0.0;
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i)
      acc += (jacs[static_cast<std::size_t>(j)].transpose() * grads[static_cast<std::size_t>(i)] -
              center)
                 .squaredNorm();
  return acc / (static_cast<double>(n) * static_cast<double>(n));
}

// ---------------------------------------------------------------------------
// Linear-composition-quadratic family.

namespace {

class LcqProblem final : public CompositionProblem {
 public:
  LcqProblem(std::vector<Eigen::MatrixXd> a, std::vector<Eigen::VectorXd> b,
             std::vector<Eigen::VectorXd> c, double region, std::string serialized)
      : CompositionProblem(static_cast<int>(a.size()), static_cast<int>(a[0].cols()),
                           static_cast<int>(a[0].rows()), region),
        a_(std::move(a)),
        b_(std::move(b)),
        c_(std::move(c)),
        serialized_(std::move(serialized)) {
    const int n = component_count();
    a_mean_ = Eigen::MatrixXd::Zero(dim_w(), dim_x());
    b_mean_ = Eigen::VectorXd::Zero(dim_w());
    Eigen::VectorXd c_mean = Eigen::VectorXd::Zero(dim_w());
    for (int j = 0; j < n; ++j) {
      a_mean_ += a_[static_cast<std::size_t>(j)];
      b_mean_ += b_[static_cast<std::size_t>(j)];
      c_mean += c_[static_cast<std::size_t>(j)];
    }
    a_mean_ /= n;
    b_mean_ /= n;
    c_mean /= n;
    compute_constants(c_mean);
  }

  std::string serialize() const override { return serialized_; }

  const Eigen::MatrixXd& mean_matrix() const { return a_mean_; }

 protected:
  Eigen::VectorXd do_inner_value(int j, const Eigen::VectorXd& x) const override {
    return a_[static_cast<std::size_t>(j)] * x + b_[static_cast<std::size_t>(j)];
  }
  Eigen::MatrixXd do_inner_jacobian(int j, const Eigen::VectorXd&) const override {
    return a_[static_cast<std::size_t>(j)];
  }
  double do_outer_value(int i, const Eigen::VectorXd& w) const override {
    return (w - c_[static_cast<std::size_t>(i)]).squaredNorm();
  }
  Eigen::VectorXd do_outer_gradient(int i, const Eigen::VectorXd& w) const override {
    return 2.0 * (w - c_[static_cast<std::size_t>(i)]);
  }

 private:
  void compute_constants(const Eigen::VectorXd& c_mean) {
    const int n = component_count();
    const int N = dim_x();
    ProblemConstants k;
    for (int j = 0; j < n; ++j)
      k.B_G = std::max(k.B_G, spectral_norm(a_[static_cast<std::size_t>(j)]));
    k.L_G = 0.0;
    k.L_F = 2.0;
    // Per-pair composite map x -> 2 A_j^T (Gbar x + bbar - c_i) has Lipschitz
    // constant 2 |A_j^T Gbar|.
    for (int j = 0; j < n; ++j)
      k.L_f = std::max(
          k.L_f, 2.0 * spectral_norm(a_[static_cast<std::size_t>(j)].transpose() * a_mean_));
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(a_mean_, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const double sigma_min = (dim_w() >= N) ? svd.singularValues().minCoeff() : 0.0;
    k.mu = 2.0 * sigma_min * sigma_min;

    double w_max = 0.0;
    double c_max = 0.0;
    for (int j = 0; j < n; ++j)
      w_max = std::max(w_max, spectral_norm(a_[static_cast<std::size_t>(j)]) * region() *
                                  std::sqrt(static_cast<double>(N)) +
                              b_[static_cast<std::size_t>(j)].norm());
    for (int i = 0; i < n; ++i) c_max = std::max(c_max, c_[static_cast<std::size_t>(i)].norm());
    k.B_F = 2.0 * (w_max + c_max);

    auto h1 = [this](const Eigen::VectorXd& x) { return empirical_h1(*this, x); };
    auto h2 = [this](const Eigen::VectorXd& x) { return empirical_h2(*this, x); };
    if (N <= kCornerDimLimit) {
      k.H1 = box_corner_max(N, region(), h1);
      k.H2 = box_corner_max(N, region(), h2);
    } else {
      k.H1 = 2.0 * sampled_max(N, region(), 0x517, h1, 2000);
      k.H2 = 2.0 * sampled_max(N, region(), 0x518, h2, 2000);
      k.set_estimated(ConstantField::H1, true);
      k.set_estimated(ConstantField::H2, true);
    }
    constants_ = k;

    // Least-squares minimizer of |Gbar x + bbar - cbar|^2 (least-norm when
    // the mean matrix is rank deficient; the normal equations still hold).
    const Eigen::VectorXd x_star = svd.solve(c_mean - b_mean_);
    optimum_ = x_star;
    optimum_value_ = full_value(*this, x_star);
  }

  std::vector<Eigen::MatrixXd> a_;
  std::vector<Eigen::VectorXd> b_;
  std::vector<Eigen::VectorXd> c_;
  Eigen::MatrixXd a_mean_;
  Eigen::VectorXd b_mean_;
  std::string serialized_;
};

}  // namespace

std::unique_ptr<CompositionProblem> make_lcq(int n, int N, int M, std::uint64_t seed,
                                             double region) {
  if (n < 1 || N < 1 || M < 1) throw ArgumentError("make_lcq: n, N, M must be positive");
  if (region <= 0.0) throw ArgumentError("make_lcq: region must be positive");

  for (std::uint64_t attempt = 0; attempt < 32; ++attempt) {
    const std::uint64_t s = seed + attempt;
    StreamFactory streams(s);
    RngStream mat_rng = streams.derived(kGenMatrices);
    RngStream off_rng = streams.derived(kGenOffsets);
    RngStream tgt_rng = streams.derived(kGenTargets);

    std::vector<Eigen::MatrixXd> a(static_cast<std::size_t>(n));
    std::vector<Eigen::VectorXd> b(static_cast<std::size_t>(n));
    std::vector<Eigen::VectorXd> c(static_cast<std::size_t>(n));
    Eigen::MatrixXd base = Eigen::MatrixXd::Zero(M, N);
    for (int d = 0; d < std::min(M, N); ++d) base(d, d) = 1.0;
    for (int j = 0; j < n; ++j) {
      Eigen::MatrixXd pert(M, N);
      for (int r = 0; r < M; ++r)
        for (int col = 0; col < N; ++col) pert(r, col) = uniform_pm(mat_rng, 1.0);
      a[static_cast<std::size_t>(j)] = base + 0.3 * pert;
      Eigen::VectorXd off(M);
      for (int r = 0; r < M; ++r) off(r) = uniform_pm(off_rng, 0.5);
      b[static_cast<std::size_t>(j)] = off;
      Eigen::VectorXd tgt(M);
      for (int r = 0; r < M; ++r) tgt(r) = uniform_pm(tgt_rng, 1.0);
      c[static_cast<std::size_t>(j)] = tgt;
    }

    Eigen::MatrixXd mean = Eigen::MatrixXd::Zero(M, N);
    for (const auto& m : a) mean += m;
    mean /= n;
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(mean);
    if (M >= N && svd.singularValues().minCoeff() < 1e-3) continue;  // degenerate draw

    std::ostringstream text;
    text << "lcq n=" << n << " N=" << N << " M=" << M << " seed=" << s
         << " region=" << format_double(region);
    return std::make_unique<LcqProblem>(std::move(a), std::move(b), std::move(c), region,
                                        text.str());
  }
  throw ArgumentError("make_lcq: could not draw a nonsingular instance");
}

std::unique_ptr<CompositionProblem> make_lcq_reference() {
  std::vector<Eigen::MatrixXd> a(2);
  std::vector<Eigen::VectorXd> b(2);
  std::vector<Eigen::VectorXd> c(2);
  a[0] = Eigen::MatrixXd::Constant(1, 1, 1.0);
  a[1] = Eigen::MatrixXd::Constant(1, 1, 3.0);
  b[0] = Eigen::VectorXd::Zero(1);
  b[1] = Eigen::VectorXd::Zero(1);
  c[0] = Eigen::VectorXd::Zero(1);
  c[1] = Eigen::VectorXd::Constant(1, 2.0);
  return std::make_unique<LcqProblem>(std::move(a), std::move(b), std::move(c), 10.0, "lcq_ref");
}

// ---------------------------------------------------------------------------
// Mean-variance with linear losses.

namespace {

class MeanVarianceProblem final : public CompositionProblem {
 public:
  MeanVarianceProblem(std::vector<Eigen::VectorXd> a, Eigen::VectorXd b, double lambda,
                      double region, std::string serialized)
      : CompositionProblem(static_cast<int>(a.size()), static_cast<int>(a[0].size()),
                           static_cast<int>(a[0].size()) + 1, region),
        a_(std::move(a)),
        b_(std::move(b)),
        lambda_(lambda),
        serialized_(std::move(serialized)) {
    const int n = component_count();
    a_mean_ = Eigen::VectorXd::Zero(dim_x());
    for (const auto& ai : a_) a_mean_ += ai;
    a_mean_ /= n;
    b_mean_ = b_.mean();
    compute_constants();
  }

  std::string serialize() const override { return serialized_; }

 protected:
  // G_j(x) = (x, <a_j,x> - b_j)
  Eigen::VectorXd do_inner_value(int j, const Eigen::VectorXd& x) const override {
    Eigen::VectorXd w(dim_w());
    w.head(dim_x()) = x;
    w(dim_x()) = a_[static_cast<std::size_t>(j)].dot(x) - b_(j);
    return w;
  }
  Eigen::MatrixXd do_inner_jacobian(int j, const Eigen::VectorXd&) const override {
    Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(dim_w(), dim_x());
    jac.topRows(dim_x()).setIdentity();
    jac.row(dim_x()) = a_[static_cast<std::size_t>(j)].transpose();
    return jac;
  }
  // F_i(u, v) = h_i(u) + lambda (h_i(u) - v)^2
  double do_outer_value(int i, const Eigen::VectorXd& w) const override {
    const double h = a_[static_cast<std::size_t>(i)].dot(w.head(dim_x())) - b_(i);
    const double r = h - w(dim_x());
    return h + lambda_ * r * r;
  }
  Eigen::VectorXd do_outer_gradient(int i, const Eigen::VectorXd& w) const override {
    const double h = a_[static_cast<std::size_t>(i)].dot(w.head(dim_x())) - b_(i);
    const double r = h - w(dim_x());
    Eigen::VectorXd grad(dim_w());
    grad.head(dim_x()) = (1.0 + 2.0 * lambda_ * r) * a_[static_cast<std::size_t>(i)];
    grad(dim_x()) = -2.0 * lambda_ * r;
    return grad;
  }

 private:
  void compute_constants() {
    const int n = component_count();
    const int N = dim_x();
    ProblemConstants k;
    double a_sq_max = 0.0;
    for (const auto& ai : a_) a_sq_max = std::max(a_sq_max, ai.squaredNorm());
    k.B_G = std::sqrt(1.0 + a_sq_max);
    k.L_G = 0.0;
    k.L_F = 2.0 * lambda_ * (1.0 + a_sq_max);
    // Per-pair map x -> a_i + 2 lambda r_i(x) (a_i - a_j) with affine
    // r_i(x) = <a_i - abar, x> - (b_i - bbar); exact global constant.
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        k.L_f = std::max(k.L_f, 2.0 * lambda_ *
                                    (a_[static_cast<std::size_t>(i)] -
                                     a_[static_cast<std::size_t>(j)])
                                        .norm() *
                                    (a_[static_cast<std::size_t>(i)] - a_mean_).norm());

    Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(N, N);
    Eigen::VectorXd d = Eigen::VectorXd::Zero(N);
    for (int i = 0; i < n; ++i) {
      const Eigen::VectorXd dev = a_[static_cast<std::size_t>(i)] - a_mean_;
      cov += dev * dev.transpose();
      d += (b_(i) - b_mean_) * dev;
    }
    cov /= n;
    d /= n;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
    const double lam_min = eig.eigenvalues().minCoeff();
    k.mu = std::max(0.0, 2.0 * lambda_ * lam_min);

    if (k.mu > 1e-12) {
      // grad f = abar + 2 lambda (C x - d)
      Eigen::VectorXd x_star = cov.ldlt().solve(d - a_mean_ / (2.0 * lambda_));
      optimum_ = x_star;
      optimum_value_ = full_value(*this, x_star);
    }

    const double r_max = region() * std::sqrt(static_cast<double>(N));
    double h_dev_max = 0.0;
    for (int i = 0; i < n; ++i)
      h_dev_max = std::max(h_dev_max, (a_[static_cast<std::size_t>(i)] - a_mean_).norm() * r_max +
                                          std::abs(b_(i) - b_mean_));
    k.B_F = std::sqrt(1.0 + a_sq_max) * (1.0 + 2.0 * lambda_ * h_dev_max) +
            2.0 * lambda_ * h_dev_max;

    auto h1 = [this](const Eigen::VectorXd& x) { return empirical_h1(*this, x); };
    auto h2 = [this](const Eigen::VectorXd& x) { return empirical_h2(*this, x); };
    if (N <= kCornerDimLimit) {
      k.H1 = box_corner_max(N, region(), h1);
      k.H2 = box_corner_max(N, region(), h2);
    } else {
      k.H1 = 2.0 * sampled_max(N, region(), 0x527, h1, 2000);
      k.H2 = 2.0 * sampled_max(N, region(), 0x528, h2, 2000);
      k.set_estimated(ConstantField::H1, true);
      k.set_estimated(ConstantField::H2, true);
    }
    constants_ = k;
  }

  std::vector<Eigen::VectorXd> a_;
  Eigen::VectorXd b_;
  Eigen::VectorXd a_mean_;
  double b_mean_;
  double lambda_;
  std::string serialized_;
};

}  // namespace

std::unique_ptr<CompositionProblem> make_mean_variance(int n, int N, double lambda,
                                                       std::uint64_t seed, double region) {
  if (n < 1 || N < 1) throw ArgumentError("make_mean_variance: n, N must be positive");
  if (lambda < 0.0) throw ArgumentError("make_mean_variance: lambda must be nonnegative");
  StreamFactory streams(seed);
  RngStream a_rng = streams.derived(kGenMatrices);
  RngStream b_rng = streams.derived(kGenOffsets);
  std::vector<Eigen::VectorXd> a(static_cast<std::size_t>(n));
  Eigen::VectorXd b(n);
  for (int i = 0; i < n; ++i) {
    Eigen::VectorXd ai(N);
    for (int d = 0; d < N; ++d) ai(d) = uniform_pm(a_rng, 1.0);
    a[static_cast<std::size_t>(i)] = ai;
    b(i) = uniform_pm(b_rng, 1.0);
  }
  std::ostringstream text;
  text << "mean_variance n=" << n << " N=" << N << " lambda=" << format_double(lambda)
       << " seed=" << seed << " region=" << format_double(region);
  return std::make_unique<MeanVarianceProblem>(std::move(a), std::move(b), lambda, region,
                                               text.str());
}

// ---------------------------------------------------------------------------
// Non-convex synthetic instance.

namespace {

class NonconvexSyntheticProblem final : public CompositionProblem {
 public:
  NonconvexSyntheticProblem(std::vector<Eigen::MatrixXd> a, std::vector<Eigen::VectorXd> c,
                            double beta, double region, std::string serialized)
      : CompositionProblem(static_cast<int>(a.size()), static_cast<int>(a[0].cols()),
                           static_cast<int>(a[0].rows()), region),
        a_(std::move(a)),
        c_(std::move(c)),
        beta_(beta),
        sin_scale_(beta / static_cast<double>(a_[0].cols())),
        serialized_(std::move(serialized)) {
    build_lift();
    const int n = component_count();
    a_mean_ = Eigen::MatrixXd::Zero(dim_w(), dim_x());
    for (const auto& m : a_) a_mean_ += m;
    a_mean_ /= n;
    compute_constants();
  }

  std::string serialize() const override { return serialized_; }

 protected:
  Eigen::VectorXd do_inner_value(int j, const Eigen::VectorXd& x) const override {
    return a_[static_cast<std::size_t>(j)] * x + sin_scale_ * (lift_ * x.array().sin().matrix());
  }
  Eigen::MatrixXd do_inner_jacobian(int j, const Eigen::VectorXd& x) const override {
    return a_[static_cast<std::size_t>(j)] +
           sin_scale_ * lift_ * x.array().cos().matrix().asDiagonal();
  }
  double do_outer_value(int i, const Eigen::VectorXd& w) const override {
    return 0.5 * (w - c_[static_cast<std::size_t>(i)]).squaredNorm();
  }
  Eigen::VectorXd do_outer_gradient(int i, const Eigen::VectorXd& w) const override {
    return w - c_[static_cast<std::size_t>(i)];
  }

 private:
  void build_lift() {
    // Row r carries sin(x_{r mod N}); columns normalized so |lift| = 1.
    const int M = dim_w();
    const int N = dim_x();
    lift_ = Eigen::MatrixXd::Zero(M, N);
    Eigen::VectorXd count = Eigen::VectorXd::Zero(N);
    for (int r = 0; r < M; ++r) count(r % N) += 1.0;
    for (int r = 0; r < M; ++r) lift_(r, r % N) = 1.0 / std::sqrt(count(r % N));
  }

  void compute_constants() {
    const int n = component_count();
    const int N = dim_x();
    ProblemConstants k;
    double a_norm_max = 0.0;
    for (const auto& m : a_) a_norm_max = std::max(a_norm_max, spectral_norm(m));
    k.B_G = a_norm_max + sin_scale_;
    k.L_G = sin_scale_;
    k.L_F = 1.0;

    const double x_norm_max = region() * std::sqrt(static_cast<double>(N));
    const double g_norm_max =
        spectral_norm(a_mean_) * x_norm_max + sin_scale_ * std::sqrt(static_cast<double>(N));
    double c_norm_max = 0.0;
    for (const auto& ci : c_) c_norm_max = std::max(c_norm_max, ci.norm());
    const double grad_f_outer_max = g_norm_max + c_norm_max;
    k.B_F = grad_f_outer_max;
    k.L_f = k.B_G * (spectral_norm(a_mean_) + sin_scale_) + k.L_G * grad_f_outer_max;

    // Inner deviations G_j - G = (A_j - Abar) x are affine (the sine part is
    // shared), so the corner maximum is exact.
    auto h1 = [this](const Eigen::VectorXd& x) { return empirical_h1(*this, x); };
    if (N <= kCornerDimLimit) {
      k.H1 = box_corner_max(N, region(), h1);
    } else {
      k.H1 = 2.0 * sampled_max(N, region(), 0x537, h1, 2000);
      k.set_estimated(ConstantField::H1, true);
    }
    // Per-pair deviation: A_j^T(G - c_i) - Abar^T(G - cbar) + s C(x)^T (cbar - c_i);
    // bounded termwise over the region.
    Eigen::VectorXd c_mean = Eigen::VectorXd::Zero(dim_w());
    for (const auto& ci : c_) c_mean += ci;
    c_mean /= n;
    double acc = 0.0;
    for (int j = 0; j < n; ++j) {
      const double dev_j = spectral_norm(a_[static_cast<std::size_t>(j)] - a_mean_);
      for (int i = 0; i < n; ++i) {
        const Eigen::VectorXd ci_dev = c_mean - c_[static_cast<std::size_t>(i)];
        const double term = dev_j * g_norm_max +
                            (a_[static_cast<std::size_t>(j)].transpose() *
                                 c_[static_cast<std::size_t>(i)] -
                             a_mean_.transpose() * c_mean)
                                .norm() +
                            sin_scale_ * ci_dev.norm();
        acc += term * term;
      }
    }
    k.H2 = acc / (static_cast<double>(n) * static_cast<double>(n));

    if (beta_ == 0.0) {
      // Affine inner maps: the composite is quadratic with Hessian Abar^T Abar.
      Eigen::JacobiSVD<Eigen::MatrixXd> svd(a_mean_, Eigen::ComputeThinU | Eigen::ComputeThinV);
      const double sigma_min = (dim_w() >= N) ? svd.singularValues().minCoeff() : 0.0;
      k.mu = sigma_min * sigma_min;
      const Eigen::VectorXd x_star = svd.solve(c_mean);
      optimum_ = x_star;
      optimum_value_ = full_value(*this, x_star);
    } else {
      k.mu = 0.0;
    }
    constants_ = k;
  }

  std::vector<Eigen::MatrixXd> a_;
  std::vector<Eigen::VectorXd> c_;
  Eigen::MatrixXd a_mean_;
  Eigen::MatrixXd lift_;
  double beta_;
  double sin_scale_;
  std::string serialized_;
};

}  // namespace

std::unique_ptr<CompositionProblem> make_nonconvex_synthetic(int n, int N, int M, double beta,
                                                             std::uint64_t seed, double region) {
  if (n < 1 || N < 1 || M < 1)
    throw ArgumentError("make_nonconvex_synthetic: n, N, M must be positive");
  if (beta < 0.0) throw ArgumentError("make_nonconvex_synthetic: beta must be nonnegative");
  StreamFactory streams(seed);
  RngStream mat_rng = streams.derived(kGenMatrices);
  RngStream tgt_rng = streams.derived(kGenTargets);

  // Linear parts with fixed spectral norm, small against the sine term so the
  // instance stays desk-scale smooth.
  const double a_norm = 0.05;
  std::vector<Eigen::MatrixXd> a(static_cast<std::size_t>(n));
  std::vector<Eigen::VectorXd> c(static_cast<std::size_t>(n));
  for (int j = 0; j < n; ++j) {
    Eigen::MatrixXd raw(M, N);
    for (int r = 0; r < M; ++r)
      for (int col = 0; col < N; ++col) raw(r, col) = uniform_pm(mat_rng, 1.0);
    const double norm = spectral_norm(raw);
    a[static_cast<std::size_t>(j)] = norm > 0.0 ? (a_norm / norm) * raw : raw;
    Eigen::VectorXd tgt(M);
    for (int r = 0; r < M; ++r) tgt(r) = uniform_pm(tgt_rng, 0.2);
    c[static_cast<std::size_t>(j)] = tgt;
  }
  std::ostringstream text;
  text << "nonconvex n=" << n << " N=" << N << " M=" << M << " beta=" << format_double(beta)
       << " seed=" << seed << " region=" << format_double(region);
  return std::make_unique<NonconvexSyntheticProblem>(std::move(a), std::move(c), beta, region,
                                                     text.str());
}

// ---------------------------------------------------------------------------

std::unique_ptr<CompositionProblem> parse_problem(const std::string& text) {
  std::istringstream in(text);
  std::string kind;
  in >> kind;
  if (kind.empty()) throw ArgumentError("parse_problem: empty problem spec");
  if (kind == "lcq_ref") return make_lcq_reference();

  long n = 0, N = 0, M = 0;
  std::uint64_t seed = 0;
  double region = 10.0, lambda = 0.0, beta = 0.0;
  bool has_lambda = false, has_beta = false;
  std::string token;
  while (in >> token) {
    const auto eq = token.find('=');
    if (eq == std::string::npos)
      throw ArgumentError("parse_problem: expected key=value, got '" + token + "'");
    const std::string key = token.substr(0, eq);
    const std::string val = token.substr(eq + 1);
    try {
      if (key == "n")
        n = std::stol(val);
      else if (key == "N")
        N = std::stol(val);
      else if (key == "M")
        M = std::stol(val);
      else if (key == "seed")
        seed = std::stoull(val);
      else if (key == "region")
        region = std::stod(val);
      else if (key == "lambda") {
        lambda = std::stod(val);
        has_lambda = true;
      } else if (key == "beta") {
        beta = std::stod(val);
        has_beta = true;
      } else
        throw ArgumentError("parse_problem: unknown key '" + key + "'");
    } catch (const std::invalid_argument&) {
      throw ArgumentError("parse_problem: bad value for '" + key + "'");
    } catch (const std::out_of_range&) {
      throw ArgumentError("parse_problem: value out of range for '" + key + "'");
    }
  }

  if (kind == "lcq") return make_lcq(static_cast<int>(n), static_cast<int>(N),
                                     static_cast<int>(M), seed, region);
  if (kind == "mean_variance") {
    if (!has_lambda) throw ArgumentError("parse_problem: mean_variance requires lambda=");
    return make_mean_variance(static_cast<int>(n), static_cast<int>(N), lambda, seed, region);
  }
  if (kind == "nonconvex") {
    if (!has_beta) throw ArgumentError("parse_problem: nonconvex requires beta=");
    return make_nonconvex_synthetic(static_cast<int>(n), static_cast<int>(N),
                                    static_cast<int>(M), beta, seed, region);
  }
  throw ArgumentError("parse_problem: unknown problem kind '" + kind + "'");
}

ProblemConstants estimate_constants(const CompositionProblem& p, int points, std::uint64_t seed) {
  if (points < 2) throw ArgumentError("estimate_constants: need at least 2 sample points");
  StreamFactory streams(seed);
  RngStream rng = streams.derived(kGenEstimate);
  const int n = p.component_count();
  const int N = p.dim_x();

  ProblemConstants k;
  double mu_min = std::numeric_limits<double>::infinity();
  Eigen::VectorXd prev_x;
  Eigen::VectorXd prev_grad;
  std::vector<Eigen::MatrixXd> prev_jac(static_cast<std::size_t>(n));
  std::vector<Eigen::VectorXd> prev_og(static_cast<std::size_t>(n));
  Eigen::VectorXd prev_g;

  for (int t = 0; t < points; ++t) {
    Eigen::VectorXd x(N);
    for (int d = 0; d < N; ++d) x(d) = uniform_pm(rng, p.region());
    const Eigen::VectorXd g = full_inner(p, x);
    const Eigen::VectorXd grad = full_gradient(p, x);
    std::vector<Eigen::MatrixXd> jac(static_cast<std::size_t>(n));
    std::vector<Eigen::VectorXd> og(static_cast<std::size_t>(n));
    for (int j = 0; j < n; ++j) {
      jac[static_cast<std::size_t>(j)] = p.inner_jacobian(j, x);
      k.B_G = std::max(k.B_G, spectral_norm(jac[static_cast<std::size_t>(j)]));
      og[static_cast<std::size_t>(j)] = p.outer_gradient(j, g);
      k.B_F = std::max(k.B_F, og[static_cast<std::size_t>(j)].norm());
    }
    k.H1 = std::max(k.H1, empirical_h1(p, x));
    k.H2 = std::max(k.H2, empirical_h2(p, x));

    if (t > 0) {
      const double dx = (x - prev_x).norm();
      if (dx > 1e-12) {
        mu_min = std::min(mu_min, (grad - prev_grad).dot(x - prev_x) / (dx * dx));
        for (int j = 0; j < n; ++j)
          k.L_G = std::max(k.L_G, spectral_norm(jac[static_cast<std::size_t>(j)] -
                                                prev_jac[static_cast<std::size_t>(j)]) /
                                      dx);
        for (int i = 0; i < n; ++i)
          for (int j = 0; j < n; ++j)
            k.L_f = std::max(
                k.L_f,
                (jac[static_cast<std::size_t>(j)].transpose() * og[static_cast<std::size_t>(i)] -
                 prev_jac[static_cast<std::size_t>(j)].transpose() *
                     prev_og[static_cast<std::size_t>(i)])
                        .norm() /
                    dx);
      }
      const double dw = (g - prev_g).norm();
      if (dw > 1e-12)
        for (int i = 0; i < n; ++i)
          k.L_F = std::max(k.L_F, (og[static_cast<std::size_t>(i)] -
                                   prev_og[static_cast<std::size_t>(i)])
                                      .norm() /
                                      dw);
    }
    prev_x = x;
    prev_grad = grad;
    prev_jac = jac;
    prev_og = og;
    prev_g = g;
  }
  k.mu = std::max(0.0, std::isfinite(mu_min) ? mu_min : 0.0);
  k.estimated_mask = 0xFF;
  return k;
}

}  // namespace compopt
