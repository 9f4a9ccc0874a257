#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dpt/gaussian_posterior.hpp"
#include "dpt/pattern_bank.hpp"
#include "dpt/quantum_model.hpp"
#include "dpt/run_config.hpp"
#include "dpt/shearing.hpp"

namespace dpt {

// Tolerance on post-shear variance growth before a step is flagged.
inline constexpr double kVarianceIncreaseTolerance = 1e-9;

struct StepRecord {
  int step = 0;
  std::size_t setting_index = 0;
  Amplitude setting{0.0, 0.0};
  double delta = 0.0;          // predicted average variance of the chosen setting
  double var_before = 0.0;     // total variance when the setting was chosen
  double var_updated = 0.0;    // after the Bayes update, before shearing
  double var_after = 0.0;      // after shearing
  double frequency = 0.0;
  bool stop_flag = false;
  double min_eig_before_shear = 0.0;
  double min_eig_after_shear = 0.0;
  double hs_distance = 0.0;    // posterior-averaged squared HS distance to truth
  double step_distance = 0.0;  // squared HS distance between consecutive mean estimators
  double fidelity = 0.0;       // of the mean estimator after shearing
  int shear_iterations = 0;
  bool shear_max_hit = false;
  bool var_increase = false;

  bool operator==(const StepRecord&) const = default;
};

struct SelectionTrace {
  int initial_shear_iterations = 0;
  bool initial_shear_max_hit = false;
  double initial_variance = 0.0;
  std::vector<StepRecord> steps;
  bool operator==(const SelectionTrace&) const = default;
};


enum class RunStatus { stopped, exhausted, max_settings };
std::string to_string(RunStatus status);

struct SettingEstimate {
  std::size_t setting_index = 0;
  Amplitude setting{0.0, 0.0};
  double estimated_probability = 0.0;
  double measured_frequency = 0.0;
};

struct EstimatorReport {
  RunStatus status = RunStatus::exhausted;
  int settings_used = 0;
  // First step at which the stopping rule fired, 0 if never.
  int first_stop_step = 0;
  Eigen::VectorXd mean;
  Eigen::MatrixXd covariance;
  DensityMatrix rho;
  double fidelity = 0.0;
  double min_eigenvalue = 0.0;
  double truncation_leakage = 0.0;
  double final_hs_distance = 0.0;
  std::vector<SettingEstimate> per_setting;
};

struct RunResult {
  SelectionTrace trace;
  EstimatorReport report;
};

RunResult run_reconstruction(const RunConfig& config);

// Closed-form pieces for Hilbert-Schmidt distances between probe mixtures and
// the true signal.
struct DistanceModel {
  Eigen::MatrixXd gram;          // M x M
  Eigen::MatrixXd reduced_gram;  // over the M-1 free coefficients
  Eigen::VectorXd signal_overlap;  // tr(rho_m rho_true)
  double purity = 1.0;             // tr(rho_true^2)
};

DistanceModel make_distance_model(const ProbeLattice& lattice, const SignalState& signal);

// <||rho_est(c) - rho_true||^2> over the Gaussian belief.
double hs_distance_to_truth(const PosteriorMoments& post, const DistanceModel& model);

// Squared HS distance between the estimators of two free-coefficient vectors.
double hs_distance_between(const Eigen::VectorXd& c1, const Eigen::VectorXd& c2, const DistanceModel& model);

struct BestRepresentation {
  Eigen::VectorXd coefficients;  // full length M
  double residual = 0.0;         // ||rho_true - projection||^2
};

// Gram-projected least-squares representation of the true state, using a
// pseudo-inverse with relative eigenvalue cutoff 1e-10.
BestRepresentation best_representation(const DistanceModel& model);

struct BaselineResult {
  Eigen::VectorXd coefficients;  // M-1 free coefficients
  Eigen::Index rank = 0;
  bool rank_deficient = false;
};

// Unconstrained least squares of signal frequencies against probe patterns
// with c_M = 1 - sum(c), normal equations regularized by `ridge`.
BaselineResult lsq_baseline(const PatternBank& bank, const Eigen::VectorXd& signal_frequencies,
                            double ridge = 1e-10);

}  // namespace dpt
