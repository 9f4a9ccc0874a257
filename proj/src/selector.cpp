#include "dpt/selector.hpp"

#include <cmath>
#include <numbers>

#include "dpt/errors.hpp"

namespace dpt {

void StoppingConfig::validate() const {
  if (!(eta > 0.0 && eta < 1.0)) throw ConfigError("stopping eta must lie in (0, 1)");
  if (consecutive_required < 1) throw ConfigError("stopping consecutive_required must be >= 1");
}

HermiteRule make_hermite_rule(int n) {
  // Golub-Welsch on the symmetric Jacobi matrix of the Hermite recurrence.
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
  for (int k = 1; k < n; ++k) J(k, k - 1) = J(k - 1, k) = std::sqrt(0.5 * k);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(J);
  HermiteRule rule;
  for (int i = 0; i < n; ++i) {
    rule.nodes.push_back(solver.eigenvalues()[i]);
    const double v0 = solver.eigenvectors()(0, i);
    rule.weights.push_back(std::sqrt(std::numbers::pi) * v0 * v0);
  }
  return rule;
}

const HermiteRule& hermite_rule() {
  static const HermiteRule rule = make_hermite_rule(kHermiteNodes);
  return rule;
}

namespace {

struct OutcomeModel {
  double mean_p;
  double sd_p;
};

OutcomeModel outcome_model(const PosteriorMoments& post, const Eigen::VectorXd& g, double fM,
                           const Eigen::VectorXd& sigma_g) {
  const double var = std::max(0.0, g.dot(sigma_g));
  return {g.dot(post.mean) + fM, std::sqrt(var)};
}

Eigen::VectorXd outcome_dist(const OutcomeModel& model, std::int64_t copies, double* raw_mass) {
  const auto& rule = hermite_rule();
  const double N = static_cast<double>(copies);
  Eigen::VectorXd lchoose(copies + 1);
  for (std::int64_t n = 0; n <= copies; ++n) {
    lchoose[n] = std::lgamma(N + 1.0) - std::lgamma(n + 1.0) - std::lgamma(N - n + 1.0);
  }
  Eigen::VectorXd p = Eigen::VectorXd::Zero(copies + 1);
  for (std::size_t j = 0; j < rule.nodes.size(); ++j) {
    const double P = std::clamp(model.mean_p + std::numbers::sqrt2 * model.sd_p * rule.nodes[j],
                                kProbabilityClamp, 1.0 - kProbabilityClamp);
    const double w = rule.weights[j] / std::sqrt(std::numbers::pi);
    const double lp = std::log(P), lq = std::log1p(-P);
    for (std::int64_t n = 0; n <= copies; ++n) {
      p[n] += w * std::exp(lchoose[n] + n * lp + (N - n) * lq);
    }
  }
  const double mass = p.sum();
  if (raw_mass) *raw_mass = mass;
  return p / mass;
}

}  // namespace

Eigen::VectorXd predictive_outcome_dist(const PosteriorMoments& post, const Eigen::VectorXd& f_row,
                                        std::int64_t copies, double* raw_mass) {
  if (f_row.size() != post.mean.size() + 1) throw DimensionError("pattern row length mismatch");
  if (copies < 1) throw ConfigError("copies must be >= 1");
  const Eigen::VectorXd g = pattern_gradient(f_row);
  const Eigen::VectorXd sigma_g = post.covariance * g;
  return outcome_dist(outcome_model(post, g, f_row[g.size()], sigma_g), copies, raw_mass);
}

CandidateScore score_candidate(const PosteriorMoments& post, const Eigen::VectorXd& f_row,
                               const ScoringOptions& options) {
  if (f_row.size() != post.mean.size() + 1) throw DimensionError("pattern row length mismatch");
  const Eigen::VectorXd g = pattern_gradient(f_row);
  const Eigen::VectorXd sigma_g = post.covariance * g;
  const OutcomeModel model = outcome_model(post, g, f_row[g.size()], sigma_g);
  CandidateScore score;
  const Eigen::VectorXd p = outcome_dist(model, options.copies, &score.outcome_distribution_mass_check);

  // Rank-one update of the precision by g g^T / (2 sigma^2(n)) lowers the
  // covariance trace by |Sigma g|^2 / (sigma^2(n) + g^T Sigma g).
  const double gsg = model.sd_p * model.sd_p;
  const double sg2 = options.metric ? sigma_g.dot(*options.metric * sigma_g) : sigma_g.squaredNorm();
  double reduction = 0.0;
  if (sg2 > 0.0) {
    for (std::int64_t n = 0; n <= options.copies; ++n) {
      const double s2 = beta_moments_from_count(n, options.copies, options.sigma).sigma2;
      reduction += p[n] * sg2 / (s2 + gsg);
    }
  }
  score.expected_reduction = reduction;
  score.predicted_variance = weighted_total_variance(post, options.metric) - reduction;
  return score;
}

double weighted_total_variance(const PosteriorMoments& post, const Eigen::MatrixXd* metric) {
  return metric ? metric->cwiseProduct(post.covariance).sum() : post.total_variance;
}

double predicted_variance(const PosteriorMoments& post, const Eigen::VectorXd& f_row,
                          const ScoringOptions& options) {
  return score_candidate(post, f_row, options).predicted_variance;
}

Selection select_next(const PosteriorMoments& post, const PatternBank& bank, const std::vector<bool>& used,
                      const ScoringOptions& options, bool allow_repeats) {
  if (used.size() != bank.settings()) throw DimensionError("used-setting mask does not match bank");
  std::vector<std::size_t> candidates;
  for (std::size_t k = 0; k < bank.settings(); ++k) {
    if (allow_repeats || !used[k]) candidates.push_back(k);
  }
  if (candidates.empty()) throw ConfigError("all measurement settings are exhausted");

  Selection sel;
  sel.scores = score_candidates(post, bank, candidates, options);
  sel.setting_index = sel.scores.front().setting_index;
  sel.delta = sel.scores.front().predicted_variance;
  for (const auto& s : sel.scores) {
    if (s.predicted_variance < sel.delta) {
      sel.delta = s.predicted_variance;
      sel.setting_index = s.setting_index;
    }
  }
  return sel;
}

bool stopping_check(std::span<const std::pair<double, double>> history, const StoppingConfig& config) {
  const auto R = static_cast<std::size_t>(config.consecutive_required);
  if (history.size() < R) return false;
  for (std::size_t i = history.size() - R; i < history.size(); ++i) {
    const auto [delta, var] = history[i];
    if (!(std::abs(delta - var) < config.eta * var)) return false;
  }
  return true;
}

}  // namespace dpt
