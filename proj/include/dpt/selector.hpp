#pragma once

// Measurement-setting selection by predicted average posterior variance, and
// the relative-decrease stopping rule.

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "dpt/gaussian_posterior.hpp"
#include "dpt/pattern_bank.hpp"

namespace dpt {

inline constexpr int kHermiteNodes = 32;
inline constexpr double kProbabilityClamp = 1e-12;

struct CandidateScore {
  std::size_t setting_index = 0;
  double predicted_variance = 0.0;
  // Expected drop in total variance, current - predicted.
  double expected_reduction = 0.0;
  // Sum of the predictive outcome distribution before renormalization.
  double outcome_distribution_mass_check = 0.0;
};

struct StoppingConfig {
  double eta = 0.01;
  int consecutive_required = 3;
  void validate() const;
};

struct ScoringOptions {
  std::int64_t copies = 1000;
  SigmaConvention sigma = SigmaConvention::beta;
  // Optional symmetric PSD weight W: variance is measured as tr(W Sigma).
  // Null means the plain coefficient variance tr(Sigma).
  const Eigen::MatrixXd* metric = nullptr;
};

double weighted_total_variance(const PosteriorMoments& post, const Eigen::MatrixXd* metric);

// Physicists' Gauss-Hermite rule (weight exp(-x^2)), computed once.
struct HermiteRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};
const HermiteRule& hermite_rule();
HermiteRule make_hermite_rule(int n);

// p(n), n = 0..N, for the binomial outcome count of a setting with probe
// pattern f_row, marginalized over the Gaussian belief. Sums to 1.
Eigen::VectorXd predictive_outcome_dist(const PosteriorMoments& post, const Eigen::VectorXd& f_row,
                                        std::int64_t copies, double* raw_mass = nullptr);

// Expected total variance after measuring the setting, averaged over p(n).
CandidateScore score_candidate(const PosteriorMoments& post, const Eigen::VectorXd& f_row,
                               const ScoringOptions& options);
double predicted_variance(const PosteriorMoments& post, const Eigen::VectorXd& f_row,
                          const ScoringOptions& options = {});

// Scores every listed setting of the bank. The OpenMP kernel and the serial
// reference produce bit-identical results.
std::vector<CandidateScore> score_candidates(const PosteriorMoments& post, const PatternBank& bank,
                                             std::span<const std::size_t> candidates,
                                             const ScoringOptions& options);
std::vector<CandidateScore> score_candidates_serial(const PosteriorMoments& post, const PatternBank& bank,
                                                    std::span<const std::size_t> candidates,
                                                    const ScoringOptions& options);

struct Selection {
  std::size_t setting_index = 0;
  double delta = 0.0;
  std::vector<CandidateScore> scores;
};

// Minimizes the predicted variance over settings not in `used` (all settings
// when allow_repeats is set). Ties go to the lowest index. Throws ConfigError
// when nothing is left.
Selection select_next(const PosteriorMoments& post, const PatternBank& bank, const std::vector<bool>& used,
                      const ScoringOptions& options, bool allow_repeats = false);

// history holds (Delta_{k+1}, Var_k) pairs, oldest first. True iff the last
// consecutive_required entries all satisfy |Delta - Var| < eta * Var.
bool stopping_check(std::span<const std::pair<double, double>> history, const StoppingConfig& config);

}  // namespace dpt
