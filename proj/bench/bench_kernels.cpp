// OpenMP candidate scoring against its serial reference, plus bank simulation
// at one thread and at the default thread count.

#include <benchmark/benchmark.h>
#include <omp.h>

#include <numeric>
#include <vector>

#include "dpt/experiment.hpp"
#include "dpt/pattern_bank.hpp"
#include "dpt/selector.hpp"

using namespace dpt;

namespace {

struct Fixture {
  ProbeLattice lattice = build_probe_lattice(11, 0.125);
  PatternBank bank = simulate_probe_bank(lattice, lattice.amplitudes, 1000, 7);
  PosteriorMoments moments;
  std::vector<std::size_t> all;
  DistanceModel distance = make_distance_model(lattice, CoherentSignal{{0.5, 0.0}});

  Fixture() {
    // a few updates so the covariance is not isotropic
    auto post = GaussianPosterior::init_prior(121, 1.0);
    for (std::size_t k : {3u, 40u, 60u, 64u, 100u}) post = post.bayes_update(bank.row(k), 0.4, 1000);
    moments = post.moments();
    all.resize(bank.settings());
    std::iota(all.begin(), all.end(), 0);
  }
};

const Fixture& fixture() {
  static const Fixture f;
  return f;
}

void BM_score_parallel(benchmark::State& state) {
  const auto& f = fixture();
  omp_set_num_threads(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(score_candidates(f.moments, f.bank, f.all, {}));
  omp_set_num_threads(omp_get_num_procs());
}

void BM_score_serial(benchmark::State& state) {
  const auto& f = fixture();
  for (auto _ : state) benchmark::DoNotOptimize(score_candidates_serial(f.moments, f.bank, f.all, {}));
}

void BM_score_parallel_hs(benchmark::State& state) {
  const auto& f = fixture();
  ScoringOptions opt;
  opt.metric = &f.distance.reduced_gram;
  for (auto _ : state) benchmark::DoNotOptimize(score_candidates(f.moments, f.bank, f.all, opt));
}

void BM_simulate_bank(benchmark::State& state) {
  const auto& f = fixture();
  omp_set_num_threads(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(simulate_probe_bank(f.lattice, f.lattice.amplitudes, 1000, 7));
  omp_set_num_threads(omp_get_num_procs());
}

void thread_counts(benchmark::internal::Benchmark* b) {
  const int procs = omp_get_num_procs();
  for (int t = 1; t < procs; t *= 2) b->Arg(t);
  b->Arg(procs);
}

}  // namespace

BENCHMARK(BM_score_serial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_score_parallel)->Apply(thread_counts)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_score_parallel_hs)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_simulate_bank)->Apply(thread_counts)->Unit(benchmark::kMillisecond)->UseRealTime();

BENCHMARK_MAIN();
