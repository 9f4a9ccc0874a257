#include "dpt/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "dpt/errors.hpp"
#include "dpt/selector.hpp"

namespace dpt {

std::string to_string(RunStatus status) {
  switch (status) {
    case RunStatus::stopped:
      return "stopped";
    case RunStatus::exhausted:
      return "exhausted";
    case RunStatus::max_settings:
      return "max_settings";
  }
  return "unknown";
}

DistanceModel make_distance_model(const ProbeLattice& lattice, const SignalState& signal) {
  DistanceModel model;
  model.gram = probe_gram(lattice);
  const auto M = model.gram.rows();
  const Eigen::Index d = M - 1;
  const Eigen::VectorXd last = model.gram.col(d).head(d);
  model.reduced_gram = model.gram.topLeftCorner(d, d);
  model.reduced_gram.colwise() -= last;
  model.reduced_gram.rowwise() -= last.transpose();
  model.reduced_gram.array() += model.gram(d, d);
  model.signal_overlap.resize(M);
  for (Eigen::Index m = 0; m < M; ++m) {
    model.signal_overlap[m] = signal_born_probability(signal, lattice.amplitudes[static_cast<std::size_t>(m)]);
  }
  return model;
}

double hs_distance_to_truth(const PosteriorMoments& post, const DistanceModel& model) {
  if (post.mean.size() != model.reduced_gram.rows()) throw DimensionError("distance model dimension mismatch");
  const Eigen::VectorXd c = full_coefficients(post.mean);
  const double at_mean = c.dot(model.gram * c) - 2.0 * c.dot(model.signal_overlap) + model.purity;
  const double spread = model.reduced_gram.cwiseProduct(post.covariance).sum();
  return std::max(0.0, at_mean + spread);
}

double hs_distance_between(const Eigen::VectorXd& c1, const Eigen::VectorXd& c2, const DistanceModel& model) {
  const Eigen::VectorXd diff = c1 - c2;
  return std::max(0.0, diff.dot(model.reduced_gram * diff));
}

BestRepresentation best_representation(const DistanceModel& model) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(model.gram);
  const Eigen::VectorXd& ev = solver.eigenvalues();
  const double cutoff = 1e-10 * ev.maxCoeff();
  const Eigen::MatrixXd& U = solver.eigenvectors();
  Eigen::VectorXd proj = U.transpose() * model.signal_overlap;
  for (Eigen::Index i = 0; i < ev.size(); ++i) proj[i] = ev[i] > cutoff ? proj[i] / ev[i] : 0.0;
  BestRepresentation out;
  out.coefficients = U * proj;
  out.residual = std::max(0.0, model.purity - model.signal_overlap.dot(out.coefficients));
  return out;
}

BaselineResult lsq_baseline(const PatternBank& bank, const Eigen::VectorXd& signal_frequencies, double ridge) {
  if (static_cast<std::size_t>(signal_frequencies.size()) != bank.settings()) {
    throw DimensionError("baseline needs one signal frequency per bank setting");
  }
  if (bank.probes() < 2) throw DimensionError("baseline needs at least two probes");
  const Eigen::MatrixXd f = bank.frequencies();
  const Eigen::Index d = f.cols() - 1;
  const Eigen::MatrixXd G = f.leftCols(d).colwise() - f.col(d);
  const Eigen::VectorXd r = signal_frequencies - f.col(d);

  Eigen::MatrixXd normal = G.transpose() * G;
  normal.diagonal().array() += ridge;
  BaselineResult out;
  out.coefficients = normal.ldlt().solve(G.transpose() * r);
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(G);
  qr.setThreshold(1e-10);
  out.rank = qr.rank();
  out.rank_deficient = out.rank < d;
  return out;
}

namespace {

double mean_estimator_min_eig(const Eigen::VectorXd& mean, const ProbeLattice& lattice, int cutoff) {
  return min_eigenvalue(assemble_estimator(mean, lattice, cutoff).rho);
}

void check_bank_matches(const PatternBank& bank, const ProbeLattice& lattice) {
  if (bank.probes() != lattice.size()) {
    throw DimensionError("bank has " + std::to_string(bank.probes()) + " probes but lattice has " +
                         std::to_string(lattice.size()));
  }
  for (std::size_t m = 0; m < lattice.size(); ++m) {
    if (std::abs(bank.probe_amplitudes[m] - lattice.amplitudes[m]) > 1e-12) {
      throw DimensionError("bank probe amplitude " + std::to_string(m) + " does not match the lattice");
    }
  }
}

}  // namespace

RunResult run_reconstruction(const RunConfig& config) {
  config.validate();
  const ProbeLattice lattice = build_probe_lattice(config.lattice.side_count, config.lattice.spacing,
                                                   config.lattice.center);
  const auto M = static_cast<int>(lattice.size());
  const PatternBank bank = config.bank_path
                               ? load_bank(*config.bank_path)
                               : simulate_probe_bank(lattice, lattice.amplitudes, config.probe_copies,
                                                     config.effective_bank_seed());
  check_bank_matches(bank, lattice);
  const auto& settings = bank.setting_amplitudes;
  SignalMeter meter(config.signal, config.signal_copies, config.effective_signal_seed());

  const LinearConstraintSet constraints =
      constraint_coefficients(default_test_kets(lattice, config.fock_cutoff - 1), lattice);
  const DistanceModel distance = make_distance_model(lattice, config.signal);
  const bool hs_metric = config.variance_metric == VarianceMetric::hilbert_schmidt;
  const ScoringOptions scoring{config.signal_copies, config.sigma, hs_metric ? &distance.reduced_gram : nullptr};

  RunResult result;
  auto& trace = result.trace;
  auto& report = result.report;

  auto initial = shear_until_physical(GaussianPosterior::init_prior(M, config.epsilon_reg), constraints,
                                      config.shearing);
  GaussianPosterior posterior = std::move(initial.posterior);
  PosteriorMoments moments = posterior.moments();
  trace.initial_shear_iterations = initial.report.iterations;
  trace.initial_shear_max_hit = initial.report.max_iterations_hit;
  trace.initial_variance = weighted_total_variance(moments, scoring.metric);

  const int max_steps = config.max_settings > 0 ? config.max_settings : static_cast<int>(settings.size());
  std::vector<bool> used(settings.size(), false);
  std::vector<std::pair<double, double>> history;
  report.status = RunStatus::max_settings;

  for (int step = 1; step <= max_steps; ++step) {
    if (!config.allow_repeats && std::find(used.begin(), used.end(), false) == used.end()) {
      report.status = RunStatus::exhausted;
      break;
    }
    const Selection sel = select_next(moments, bank, used, scoring, config.allow_repeats);
    history.emplace_back(sel.delta, weighted_total_variance(moments, scoring.metric));
    const bool stop = stopping_check(history, config.stopping);

    StepRecord rec;
    rec.step = step;
    rec.setting_index = sel.setting_index;
    rec.setting = settings[sel.setting_index];
    rec.delta = sel.delta;
    rec.var_before = weighted_total_variance(moments, scoring.metric);
    rec.stop_flag = stop;
    rec.frequency = meter.measure(sel.setting_index, settings);
    used[sel.setting_index] = true;

    const GaussianPosterior updated =
        posterior.bayes_update(bank.row(sel.setting_index), rec.frequency, config.signal_copies, config.sigma);
    const PosteriorMoments updated_moments = updated.moments();
    rec.var_updated = weighted_total_variance(updated_moments, scoring.metric);
    rec.min_eig_before_shear = mean_estimator_min_eig(updated_moments.mean, lattice, config.fock_cutoff);

    auto sheared = shear_until_physical(updated, constraints, config.shearing);
    rec.shear_iterations = sheared.report.iterations;
    rec.shear_max_hit = sheared.report.max_iterations_hit;
    posterior = std::move(sheared.posterior);
    PosteriorMoments next = posterior.moments();
    rec.var_after = weighted_total_variance(next, scoring.metric);
    rec.var_increase = rec.var_after > rec.var_before * (1.0 + kVarianceIncreaseTolerance);
    {
      const auto est = assemble_estimator(next.mean, lattice, config.fock_cutoff);
      rec.min_eig_after_shear = min_eigenvalue(est.rho);
      rec.fidelity = fidelity(est.rho, config.signal);
    }
    rec.hs_distance = hs_distance_to_truth(next, distance);
    rec.step_distance = hs_distance_between(next.mean, moments.mean, distance);
    moments = std::move(next);
    trace.steps.push_back(rec);

    if (stop && report.first_stop_step == 0) report.first_stop_step = step;
    if (stop && !config.continue_past_stop) {
      report.status = RunStatus::stopped;
      break;
    }
  }
  if (report.status == RunStatus::max_settings && !config.allow_repeats &&
      std::find(used.begin(), used.end(), false) == used.end()) {
    report.status = RunStatus::exhausted;
  }

  report.settings_used = static_cast<int>(trace.steps.size());
  report.mean = moments.mean;
  report.covariance = moments.covariance;
  const AssembledEstimator est = assemble_estimator(moments.mean, lattice, config.fock_cutoff);
  report.rho = est.rho;
  report.truncation_leakage = est.truncation_leakage;
  report.fidelity = fidelity(est.rho, config.signal);
  report.min_eigenvalue = min_eigenvalue(est.rho);
  report.final_hs_distance = hs_distance_to_truth(moments, distance);
  const Eigen::VectorXd full = full_coefficients(moments.mean);
  for (const auto& rec : trace.steps) {
    SettingEstimate e;
    e.setting_index = rec.setting_index;
    e.setting = rec.setting;
    e.estimated_probability = std::clamp(bank.row(rec.setting_index).dot(full), 0.0, 1.0);
    e.measured_frequency = rec.frequency;
    report.per_setting.push_back(e);
  }
  return result;
}

}  // namespace dpt
