#include <string>

#include "dpt/errors.hpp"
#include "dpt/selector.hpp"

namespace dpt {

namespace {

void check_inputs(const PosteriorMoments& post, const PatternBank& bank, std::span<const std::size_t> candidates) {
  if (bank.probes() != static_cast<std::size_t>(post.mean.size()) + 1) {
    throw DimensionError("bank has " + std::to_string(bank.probes()) + " probes for posterior of dim " +
                         std::to_string(post.mean.size()));
  }
  for (auto k : candidates) {
    if (k >= bank.settings()) throw DimensionError("candidate setting " + std::to_string(k) + " out of range");
  }
}

}  // namespace

std::vector<CandidateScore> score_candidates(const PosteriorMoments& post, const PatternBank& bank,
                                             std::span<const std::size_t> candidates,
                                             const ScoringOptions& options) {
  check_inputs(post, bank, candidates);
  hermite_rule();  // initialize before the parallel region
  std::vector<CandidateScore> scores(candidates.size());
  const auto count = static_cast<std::int64_t>(candidates.size());
#pragma omp parallel for schedule(dynamic, 1)
  for (std::int64_t i = 0; i < count; ++i) {
    const auto k = candidates[static_cast<std::size_t>(i)];
    scores[static_cast<std::size_t>(i)] = score_candidate(post, bank.row(k), options);
    scores[static_cast<std::size_t>(i)].setting_index = k;
  }
  return scores;
}

std::vector<CandidateScore> score_candidates_serial(const PosteriorMoments& post, const PatternBank& bank,
                                                    std::span<const std::size_t> candidates,
                                                    const ScoringOptions& options) {
  check_inputs(post, bank, candidates);
  std::vector<CandidateScore> scores;
  scores.reserve(candidates.size());
  for (auto k : candidates) {
    auto s = score_candidate(post, bank.row(k), options);
    s.setting_index = k;
    scores.push_back(s);
  }
  return scores;
}

}  // namespace dpt
