#include "dpt/shearing.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include <boost/math/special_functions/erf.hpp>

#include "dpt/errors.hpp"

namespace dpt {

namespace {

// Slack on the threshold comparison so that a schedule landing exactly on the
// threshold terminates.
constexpr double kThresholdSlack = 1e-12;
// Rebuild the whitened constraint Gram from (A, b) this often.
constexpr int kRefreshInterval = 256;

}  // namespace

void ShearingConfig::validate() const {
  if (!(p_step > 0.0 && p_step < p_threshold && p_threshold < 1.0)) {
    throw ConfigError("shearing requires 0 < p_step < p_threshold < 1");
  }
  if (!(epsilon_total > 0.0 && epsilon_total < 1.0)) throw ConfigError("epsilon_total must lie in (0, 1)");
  if (max_iterations < 0) throw ConfigError("max_iterations must be nonnegative");
}

double violation_probability(double x0) { return 0.5 * std::erfc(-x0); }

double truncated_mean_excess(double x) {
  if (x <= 2.0) {
    return std::exp(-x * x) / (std::sqrt(std::numbers::pi) * std::erfc(x)) - x;
  }
  // Continued fraction of exp(x^2) erfc(x), evaluated from the tail.
  double t = 0.0;
  for (int k = 200; k >= 1; --k) t = (0.5 * k) / (x + t);
  return t;
}

ViolationStats standardize_constraint(const GaussianPosterior& post, const Eigen::VectorXd& v, double u) {
  if (v.size() != post.dim()) throw DimensionError("constraint vector dimension mismatch");
  Eigen::LLT<Eigen::MatrixXd> llt(post.A());
  if (llt.info() != Eigen::Success) throw NumericalError("posterior precision is singular");
  const Eigen::VectorXd w = llt.solve(v);
  const double norm_sq = v.dot(w);
  if (!(norm_sq > 0.0)) throw NumericalError("constraint has zero whitened norm");
  ViolationStats s;
  s.x0 = (u - 0.5 * w.dot(post.b())) / std::sqrt(norm_sq);
  s.p = violation_probability(s.x0);
  return s;
}

ShearCoefficients solve_shear_coefficients(double x0, double p_target) {
  const double p_now = violation_probability(x0);
  if (!std::isfinite(x0) || !(p_target > 0.0) || !(p_target < 1.0)) {
    throw NumericalError("shear target must lie in (0, 1)");
  }
  if (p_target > p_now) throw NumericalError("shear target exceeds current violation probability");
  if (p_target == p_now) return {};

  // With s = sqrt(1+a) and z = erf^-1(2p-1), the sheared marginal is exp(-y^2) in
  // y = s x - b/(2s). Its truncated mean is x0 + (excess(z))/s after mapping back,
  // which fixes s; the violation condition then gives b.
  const double z = boost::math::erf_inv(2.0 * p_target - 1.0);
  const double s = truncated_mean_excess(z) / truncated_mean_excess(x0);
  if (!(s > 0.0) || !std::isfinite(s)) {
    throw NumericalError("shear solve produced invalid scale at x0=" + std::to_string(x0));
  }
  ShearCoefficients out;
  out.a = s * s - 1.0;
  out.b = 2.0 * s * s * x0 - 2.0 * s * z;
  return out;
}

GaussianPosterior apply_shear(const GaussianPosterior& post, const Eigen::VectorXd& v, double a, double b_shear) {
  if (!(1.0 + a > 0.0)) throw NumericalError("shear with 1 + a <= 0 would break positive definiteness");
  if (v.size() != post.dim()) throw DimensionError("constraint vector dimension mismatch");
  if (a == 0.0 && b_shear == 0.0) return post;
  Eigen::LLT<Eigen::MatrixXd> llt(post.A());
  if (llt.info() != Eigen::Success) throw NumericalError("posterior precision is singular");
  const Eigen::VectorXd w = llt.solve(v);
  const double norm_sq = v.dot(w);
  const double norm = std::sqrt(norm_sq);
  const double vAb = w.dot(post.b());
  Eigen::MatrixXd A = post.A() + (a / norm_sq) * v * v.transpose();
  Eigen::VectorXd b = post.b() + (b_shear / norm + a * vAb / norm_sq) * v;
  return GaussianPosterior(std::move(A), std::move(b));
}

namespace {

// Whitened view of all constraints against the current (A, b):
// gram = V^T A^-1 V and proj = V^T A^-1 b. Rank-one shears update both in O(I^2).
struct WhitenedConstraints {
  Eigen::MatrixXd gram;
  Eigen::VectorXd proj;

  void rebuild(const Eigen::MatrixXd& A, const Eigen::VectorXd& b, const Eigen::MatrixXd& V) {
    Eigen::LLT<Eigen::MatrixXd> llt(A);
    if (llt.info() != Eigen::Success) throw NumericalError("posterior precision is not positive definite");
    const Eigen::MatrixXd W = llt.solve(V);
    gram.noalias() = V.transpose() * W;
    proj.noalias() = W.transpose() * b;
  }

  double x0(const Eigen::VectorXd& u, Eigen::Index i) const {
    return (u[i] - 0.5 * proj[i]) / std::sqrt(gram(i, i));
  }
};

}  // namespace

ShearResult shear_until_physical(const GaussianPosterior& post, const LinearConstraintSet& constraints,
                                 const ShearingConfig& config) {
  config.validate();
  const Eigen::Index I = constraints.count();
  if (I > 0 && constraints.dim() != post.dim()) throw DimensionError("constraint set dimension mismatch");

  // Unit normals; the half-space and every shear are invariant under joint scaling of (v, u).
  Eigen::MatrixXd V = constraints.v;
  Eigen::VectorXd u = constraints.u;
  for (Eigen::Index i = 0; i < I; ++i) {
    const double n = V.col(i).norm();
    if (!(n > 0.0)) throw ConfigError("constraint " + std::to_string(i) + " has a zero normal");
    V.col(i) /= n;
    u[i] /= n;
  }

  Eigen::MatrixXd A = post.A();
  Eigen::VectorXd b = post.b();
  ShearReport report;
  if (I == 0) return {post, report};

  WhitenedConstraints wc;
  wc.rebuild(A, b, V);

  auto count_violating = [&] {
    int n = 0;
    for (Eigen::Index i = 0; i < I; ++i) n += violation_probability(wc.x0(u, i)) > config.p_threshold;
    return n;
  };
  report.violating_before = count_violating();

  Eigen::VectorXd column(I);
  for (;;) {
    Eigen::Index j = 0;
    double best = -std::numeric_limits<double>::infinity();
    int violating = 0;
    for (Eigen::Index i = 0; i < I; ++i) {
      const double x0 = wc.x0(u, i);
      violating += violation_probability(x0) > config.p_threshold + kThresholdSlack;
      const double key = config.rule == DeviationRule::signed_x0 ? x0 : std::abs(x0);
      if (key > best) {
        best = key;
        j = i;
      }
    }
    const double x0 = wc.x0(u, j);
    const double p = violation_probability(x0);
    if (p <= config.p_threshold + kThresholdSlack) break;
    if (report.iterations >= config.max_iterations) {
      report.max_iterations_hit = true;
      break;
    }
    report.violating_history.push_back(violating);

    const auto [a, bs] = solve_shear_coefficients(x0, p - config.p_step);
    const double q = wc.gram(j, j);
    const double alpha = a / q;
    const double beta = bs / std::sqrt(q) + a * wc.proj[j] / q;
    const auto vj = V.col(j);
    A.selfadjointView<Eigen::Lower>().rankUpdate(vj, alpha);
    A.triangularView<Eigen::StrictlyUpper>() = A.transpose();
    b += beta * vj;

    // Sherman-Morrison on A^-1 projected onto the constraint normals.
    const double kappa = alpha / (1.0 + a);
    const double dj = wc.proj[j];
    column = wc.gram.col(j);
    wc.gram.noalias() -= kappa * column * column.transpose();
    wc.proj += (beta / (1.0 + a) - kappa * dj) * column;

    if (++report.iterations % kRefreshInterval == 0) wc.rebuild(A, b, V);
  }

  wc.rebuild(A, b, V);
  report.final_p.resize(static_cast<std::size_t>(I));
  for (Eigen::Index i = 0; i < I; ++i) {
    report.final_p[static_cast<std::size_t>(i)] = violation_probability(wc.x0(u, i));
    report.max_final_p = std::max(report.max_final_p, report.final_p[static_cast<std::size_t>(i)]);
  }
  report.violating_after = count_violating();
  return {GaussianPosterior(std::move(A), std::move(b)), report};
}

}  // namespace dpt
