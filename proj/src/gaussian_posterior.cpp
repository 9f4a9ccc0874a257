#include "dpt/gaussian_posterior.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "dpt/errors.hpp"

namespace dpt {

BetaMoments beta_moments_from_count(std::int64_t successes, std::int64_t copies, SigmaConvention convention) {
  if (copies < 1 || successes < 0 || successes > copies) {
    throw ConfigError("beta_moments needs 0 <= n <= N and N >= 1");
  }
  const double N = static_cast<double>(copies);
  const double n = static_cast<double>(successes);
  const double denom = (N + 2.0) * (N + 2.0) * (N + 3.0);
  BetaMoments out;
  out.mu = (n + 1.0) / (N + 2.0);
  if (convention == SigmaConvention::beta) {
    out.sigma2 = (n + 1.0) * (N - n + 1.0) / denom;
  } else {
    out.sigma2 = std::max(n * (N - n + 1.0) / denom, kStrictSigmaFloor);
  }
  return out;
}

BetaMoments beta_moments(double frequency, std::int64_t copies, SigmaConvention convention) {
  const double scaled = frequency * static_cast<double>(copies);
  const double rounded = std::round(scaled);
  if (!std::isfinite(scaled) || std::abs(scaled - rounded) > 1e-9 * std::max(1.0, scaled)) {
    throw ConfigError("frequency is not a multiple of 1/N");
  }
  return beta_moments_from_count(static_cast<std::int64_t>(rounded), copies, convention);
}

GaussianPosterior::GaussianPosterior(Eigen::MatrixXd A, Eigen::VectorXd b) : A_(std::move(A)), b_(std::move(b)) {
  if (A_.rows() != A_.cols() || A_.rows() != b_.size()) {
    throw DimensionError("posterior quadratic form has inconsistent dimensions");
  }
}

GaussianPosterior GaussianPosterior::init_prior(int probe_count, double epsilon_reg) {
  if (probe_count < 2) throw ConfigError("init_prior needs at least two probes");
  if (!(epsilon_reg > 0.0)) throw ConfigError("epsilon_reg must be positive");
  const Eigen::Index d = probe_count - 1;
  return GaussianPosterior(epsilon_reg * Eigen::MatrixXd::Identity(d, d),
                           Eigen::VectorXd::Constant(d, 2.0 * epsilon_reg / probe_count));
}

Eigen::VectorXd pattern_gradient(const Eigen::VectorXd& f_row) {
  const Eigen::Index d = f_row.size() - 1;
  return f_row.head(d).array() - f_row[d];
}

GaussianPosterior GaussianPosterior::bayes_update(const Eigen::VectorXd& f_row, double frequency,
                                                  std::int64_t copies, SigmaConvention convention) const {
  if (f_row.size() != dim() + 1) {
    throw DimensionError("pattern row of length " + std::to_string(f_row.size()) + " for posterior of dim " +
                         std::to_string(dim()));
  }
  const BetaMoments bm = beta_moments(frequency, copies, convention);
  if (!(bm.sigma2 >= kSigmaGuard)) throw NumericalError("outcome variance below floor");
  const Eigen::VectorXd g = pattern_gradient(f_row);
  const double fM = f_row[dim()];
  Eigen::MatrixXd A = A_;
  A.selfadjointView<Eigen::Lower>().rankUpdate(g, 0.5 / bm.sigma2);
  A.triangularView<Eigen::StrictlyUpper>() = A.transpose();
  return GaussianPosterior(std::move(A), b_ + ((bm.mu - fM) / bm.sigma2) * g);
}

PosteriorMoments GaussianPosterior::moments() const {
  Eigen::LLT<Eigen::MatrixXd> llt(2.0 * A_);
  if (llt.info() != Eigen::Success) throw NumericalError("posterior precision is not positive definite");
  PosteriorMoments out;
  out.covariance = llt.solve(Eigen::MatrixXd::Identity(dim(), dim()));
  out.covariance = 0.5 * (out.covariance + out.covariance.transpose()).eval();
  out.mean = llt.solve(b_);
  out.total_variance = out.covariance.trace();
  return out;
}

Eigen::VectorXd GaussianPosterior::mean() const {
  Eigen::LLT<Eigen::MatrixXd> llt(2.0 * A_);
  if (llt.info() != Eigen::Success) throw NumericalError("posterior precision is not positive definite");
  return llt.solve(b_);
}

double GaussianPosterior::total_variance() const { return moments().total_variance; }

namespace {

double log_likelihood(const Eigen::VectorXd& c, const std::vector<Observation>& updates) {
  double ll = 0.0;
  for (const auto& obs : updates) {
    const Eigen::Index d = c.size();
    const double P = obs.f_row.head(d).dot(c) + (1.0 - c.sum()) * obs.f_row[d];
    const double n = std::round(obs.frequency * static_cast<double>(obs.copies));
    const double N = static_cast<double>(obs.copies);
    if (P < 0.0 || P > 1.0) return -std::numeric_limits<double>::infinity();
    if (n > 0) ll += n * std::log(P);
    if (N - n > 0) ll += (N - n) * std::log1p(-P);
  }
  return ll;
}

bool inside(const LinearConstraintSet& cs, const Eigen::VectorXd& c) {
  for (Eigen::Index i = 0; i < cs.count(); ++i) {
    if (cs.v.col(i).dot(c) < cs.u[i]) return false;
  }
  return true;
}

}  // namespace

ExactMoments exact_moments_oracle(const OracleRegion& region, const std::vector<Observation>& updates,
                                  int points_per_axis) {
  const Eigen::Index d = region.lower.size();
  if (d < 1 || d > 2) throw ConfigError("exact_moments_oracle supports dim 1 or 2 only");
  if (region.upper.size() != d) throw DimensionError("oracle box bounds differ in dimension");
  if (region.constraints.count() > 0 && region.constraints.dim() != d) {
    throw DimensionError("oracle constraints differ in dimension");
  }
  if (points_per_axis < 2001) throw ConfigError("oracle grid needs at least 2001 points per axis");
  for (const auto& u : updates) {
    if (u.f_row.size() != d + 1) throw DimensionError("oracle observation has wrong pattern length");
  }

  const int n = points_per_axis;
  const Eigen::VectorXd h = (region.upper - region.lower) / (n - 1);
  // Trapezoid weights on each axis.
  auto weight = [n](int i) { return (i == 0 || i == n - 1) ? 0.5 : 1.0; };

  // Two passes: find the log-likelihood maximum, then accumulate shifted weights.
  const int ny = d == 2 ? n : 1;
  std::vector<double> ll(static_cast<std::size_t>(n) * ny);
  std::vector<char> in(ll.size());
  double ll_max = -std::numeric_limits<double>::infinity();
  Eigen::VectorXd c(d);
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < n; ++i) {
      c[0] = region.lower[0] + i * h[0];
      if (d == 2) c[1] = region.lower[1] + j * h[1];
      const auto idx = static_cast<std::size_t>(j) * n + i;
      ll[idx] = log_likelihood(c, updates);
      in[idx] = inside(region.constraints, c);
      ll_max = std::max(ll_max, ll[idx]);
    }
  }
  if (!std::isfinite(ll_max)) throw NumericalError("oracle likelihood vanishes on the whole grid");

  double z_in = 0.0, z_all = 0.0;
  Eigen::VectorXd s1 = Eigen::VectorXd::Zero(d);
  Eigen::MatrixXd s2 = Eigen::MatrixXd::Zero(d, d);
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < n; ++i) {
      const auto idx = static_cast<std::size_t>(j) * n + i;
      const double w = weight(i) * (d == 2 ? weight(j) : 1.0) * std::exp(ll[idx] - ll_max);
      z_all += w;
      if (!in[idx]) continue;
      c[0] = region.lower[0] + i * h[0];
      if (d == 2) c[1] = region.lower[1] + j * h[1];
      z_in += w;
      s1 += w * c;
      s2 += w * c * c.transpose();
    }
  }
  if (!(z_in > 0.0)) throw NumericalError("oracle region carries no posterior mass");
  ExactMoments out;
  out.mean = s1 / z_in;
  out.covariance = s2 / z_in - out.mean * out.mean.transpose();
  out.mass_outside = 1.0 - z_in / z_all;
  return out;
}

}  // namespace dpt
