#pragma once

// Distribution shearing: deform the Gaussian belief along one constraint
// normal so that less of its mass lies on the unphysical side while the mean
// of the physical part stays put, then refit. Applied greedily over a set of
// half-space constraints until every violation probability is small.

#include <vector>

#include <Eigen/Dense>

#include "dpt/gaussian_posterior.hpp"
#include "dpt/quantum_model.hpp"

namespace dpt {

enum class DeviationRule {
  // Largest signed standardized coordinate x0, i.e. the most violated constraint.
  signed_x0,
  // Largest |x0|, literal reading; may pick a comfortably satisfied constraint
  // and then stop early.
  absolute_x0,
};

struct ShearingConfig {
  double p_threshold = 0.01;
  double p_step = 0.0025;
  double epsilon_total = 0.01;
  int max_iterations = 20000;
  DeviationRule rule = DeviationRule::signed_x0;

  // Throws ConfigError unless 0 < p_step < p_threshold < 1 and max_iterations >= 0.
  void validate() const;
};

// Standardized boundary coordinate and the Gaussian mass beyond it.
struct ViolationStats {
  double x0 = 0.0;
  double p = 0.0;
};

struct ShearCoefficients {
  double a = 0.0;
  double b = 0.0;
};

struct ShearReport {
  int iterations = 0;
  bool max_iterations_hit = false;
  std::vector<double> final_p;
  double max_final_p = 0.0;
  int violating_before = 0;
  int violating_after = 0;
  // Number of constraints above threshold, recorded before every shear.
  std::vector<int> violating_history;
};

// Mass of exp(-x^2)/sqrt(pi) below x0, i.e. (1 + erf(x0)) / 2.
double violation_probability(double x0);

// Mean of exp(-x^2) restricted to [x, inf) minus x; stable for large x.
double truncated_mean_excess(double x);

ViolationStats standardize_constraint(const GaussianPosterior& post, const Eigen::VectorXd& v, double u);

// Closed-form solution of the two shearing conditions (same truncated mean,
// violation probability p_target). Requires 0 < p_target <= p(x0) < 1.
ShearCoefficients solve_shear_coefficients(double x0, double p_target);

// A += a v v^T / |v'|^2, b += b_shear v / |v'| + a (v.A^-1.b) v / |v'|^2 with
// |v'|^2 = v.A^-1.v at the incoming posterior. Throws when 1 + a <= 0.
GaussianPosterior apply_shear(const GaussianPosterior& post, const Eigen::VectorXd& v, double a, double b_shear);

struct ShearResult {
  GaussianPosterior posterior;
  ShearReport report;
};

ShearResult shear_until_physical(const GaussianPosterior& post, const LinearConstraintSet& constraints,
                                 const ShearingConfig& config = {});

}  // namespace dpt
