#pragma once

// Gaussian belief over the M-1 free expansion coefficients, stored as the
// quadratic form w(c) ~ exp(-c.A.c + b.c). Covariance is (2A)^-1 and the mean
// is (2A)^-1 b; both are derived on demand.

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "dpt/quantum_model.hpp"

namespace dpt {

enum class SigmaConvention {
  // Beta(NF+1, N(1-F)+1) posterior variance; strictly positive.
  beta,
  // Numerator (NF)(N(1-F)+1) as printed, floored at kStrictSigmaFloor.
  strict_paper,
};

inline constexpr double kStrictSigmaFloor = 1e-12;
inline constexpr double kSigmaGuard = 1e-15;

struct BetaMoments {
  double mu = 0.0;
  double sigma2 = 0.0;
};

BetaMoments beta_moments_from_count(std::int64_t successes, std::int64_t copies,
                                    SigmaConvention convention = SigmaConvention::beta);

// F must be an integer multiple of 1/N (within 1e-9); ConfigError otherwise.
BetaMoments beta_moments(double frequency, std::int64_t copies,
                         SigmaConvention convention = SigmaConvention::beta);

struct PosteriorMoments {
  Eigen::VectorXd mean;
  Eigen::MatrixXd covariance;
  double total_variance = 0.0;
};

class GaussianPosterior {
 public:
  GaussianPosterior(Eigen::MatrixXd A, Eigen::VectorXd b);

  // Isotropic epsilon-regularized stand-in for the flat prior, centered at the
  // uniform mixture c_m = 1/M.
  static GaussianPosterior init_prior(int probe_count, double epsilon_reg);

  const Eigen::MatrixXd& A() const { return A_; }
  const Eigen::VectorXd& b() const { return b_; }
  Eigen::Index dim() const { return b_.size(); }

  // One binomial observation of a setting with probe pattern f_row (length M)
  // and signal frequency F from `copies` trials.
  GaussianPosterior bayes_update(const Eigen::VectorXd& f_row, double frequency, std::int64_t copies,
                                 SigmaConvention convention = SigmaConvention::beta) const;

  // Throws NumericalError when A is not positive definite.
  PosteriorMoments moments() const;
  Eigen::VectorXd mean() const;
  double total_variance() const;

 private:
  Eigen::MatrixXd A_;
  Eigen::VectorXd b_;
};

// g_m = f_m - f_M for m < M.
Eigen::VectorXd pattern_gradient(const Eigen::VectorXd& f_row);

struct Observation {
  Eigen::VectorXd f_row;
  double frequency;
  std::int64_t copies;
};

// Integration domain for the brute-force oracle: an axis-aligned box, and the
// physical region inside it cut out by optional half-space constraints.
struct OracleRegion {
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;
  LinearConstraintSet constraints;
};

struct ExactMoments {
  Eigen::VectorXd mean;
  Eigen::MatrixXd covariance;
  // Posterior mass inside the box but outside the constraints.
  double mass_outside = 0.0;
};

// Dense-grid quadrature of flat prior x binomial likelihoods, restricted to the
// physical region. dim <= 2 only.
ExactMoments exact_moments_oracle(const OracleRegion& region, const std::vector<Observation>& updates,
                                  int points_per_axis = 2001);

}  // namespace dpt
