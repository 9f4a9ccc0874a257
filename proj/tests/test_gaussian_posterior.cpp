#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "doctest.h"

#include "dpt/errors.hpp"
#include "dpt/gaussian_posterior.hpp"

using namespace dpt;

namespace {

Eigen::MatrixXd random_spd(int n, std::mt19937_64& gen) {
  std::normal_distribution<double> z;
  Eigen::MatrixXd B(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) B(i, j) = z(gen);
  return B * B.transpose() + n * Eigen::MatrixXd::Identity(n, n);
}

// Pattern row of length M with entries on the 1/N grid.
Eigen::VectorXd random_row(int M, std::int64_t N, std::mt19937_64& gen) {
  std::uniform_int_distribution<std::int64_t> c(0, N);
  Eigen::VectorXd f(M);
  for (auto& x : f) x = double(c(gen)) / double(N);
  return f;
}

}  // namespace

TEST_CASE("prior construction") {
  auto two = GaussianPosterior::init_prior(2, 1e-6).moments();
  CHECK(two.mean[0] == doctest::Approx(0.5));
  CHECK(two.covariance(0, 0) == doctest::Approx(5e5));
  CHECK(GaussianPosterior::init_prior(2, 0.5).total_variance() == doctest::Approx(1.0));

  const auto big = GaussianPosterior::init_prior(121, 1e-6);
  CHECK(big.dim() == 120);
  CHECK((big.mean().array() - 1.0 / 121).abs().maxCoeff() < 1e-12);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(big.A());
  CHECK(es.eigenvalues().minCoeff() == doctest::Approx(1e-6));
  CHECK(es.eigenvalues().maxCoeff() == doctest::Approx(1e-6));

  CHECK_THROWS_AS(GaussianPosterior::init_prior(5, 0.0), ConfigError);
  CHECK_THROWS_AS(GaussianPosterior::init_prior(5, -1.0), ConfigError);
  CHECK_THROWS_AS(GaussianPosterior::init_prior(1, 1.0), ConfigError);
}

TEST_CASE("beta moments") {
  auto m = beta_moments(0.5, 1000);
  CHECK(m.mu == doctest::Approx(0.5));
  CHECK(beta_moments(1.0, 1000).sigma2 == doctest::Approx(1001.0 / (1002.0 * 1002.0 * 1003.0)).epsilon(1e-14));
  CHECK(beta_moments(0.0, 1000).sigma2 == doctest::Approx(1001.0 / (1002.0 * 1002.0 * 1003.0)).epsilon(1e-14));
  CHECK(beta_moments(1.0, 1000, SigmaConvention::strict_paper).sigma2 ==
        doctest::Approx(1000.0 / (1002.0 * 1002.0 * 1003.0)).epsilon(1e-14));
  CHECK(beta_moments(0.0, 1000, SigmaConvention::strict_paper).sigma2 == kStrictSigmaFloor);
  CHECK_THROWS_AS(beta_moments(0.1234567, 1000), ConfigError);
  CHECK_THROWS_AS(beta_moments(1.5, 10), ConfigError);

  double prev_mu = -1;
  double best = 0;
  std::int64_t best_n = -1;
  for (std::int64_t n = 0; n <= 1000; ++n) {
    const auto b = beta_moments_from_count(n, 1000);
    CHECK(b.mu > prev_mu);
    CHECK(b.mu > 0.0);
    CHECK(b.mu < 1.0);
    CHECK(b.sigma2 > 0.0);
    prev_mu = b.mu;
    if (b.sigma2 > best) {
      best = b.sigma2;
      best_n = n;
    }
  }
  CHECK(best_n == 500);
}

TEST_CASE("zero gradient update leaves the posterior unchanged") {
  const auto prior = GaussianPosterior::init_prior(4, 0.3);
  const Eigen::VectorXd f = Eigen::VectorXd::Constant(4, 0.25);
  const auto post = prior.bayes_update(f, 0.7, 1000);
  CHECK((post.A() - prior.A()).norm() == 0.0);
  CHECK((post.b() - prior.b()).norm() == 0.0);
  CHECK_THROWS_AS(prior.bayes_update(Eigen::VectorXd::Zero(3), 0.5, 1000), DimensionError);
}

TEST_CASE("rank-one update matches dense recomputation") {
  std::mt19937_64 gen(21);
  for (int t = 0; t < 30; ++t) {
    const int M = 2 + int(gen() % 40);
    const Eigen::MatrixXd A = random_spd(M - 1, gen);
    Eigen::VectorXd b = Eigen::VectorXd::Random(M - 1);
    const GaussianPosterior post(A, b);
    const auto f = random_row(M, 1000, gen);
    const double F = double(gen() % 1001) / 1000.0;
    const auto next = post.bayes_update(f, F, 1000);

    const auto bm = beta_moments(F, 1000);
    const Eigen::VectorXd g = f.head(M - 1).array() - f[M - 1];
    const Eigen::MatrixXd A2 = A + g * g.transpose() / (2 * bm.sigma2);
    const Eigen::VectorXd b2 = b + (bm.mu - f[M - 1]) * g / bm.sigma2;
    const Eigen::MatrixXd cov = (2 * A2).inverse();
    const auto mo = next.moments();
    CHECK((mo.covariance - cov).norm() <= 1e-10 * cov.norm());
    CHECK((mo.mean - cov * b2).norm() <= 1e-10 * std::max(1.0, (cov * b2).norm()));
    CHECK(mo.total_variance == doctest::Approx(cov.trace()).epsilon(1e-10));
    CHECK(mo.total_variance < post.total_variance());
  }
}

TEST_CASE("updates commute up to rounding") {
  std::mt19937_64 gen(5);
  const int M = 12;
  std::vector<Observation> obs;
  for (int i = 0; i < 8; ++i) obs.push_back({random_row(M, 500, gen), double(gen() % 501) / 500.0, 500});
  auto fwd = GaussianPosterior::init_prior(M, 1e-3);
  for (const auto& o : obs) fwd = fwd.bayes_update(o.f_row, o.frequency, o.copies);
  std::shuffle(obs.begin(), obs.end(), gen);
  auto perm = GaussianPosterior::init_prior(M, 1e-3);
  for (const auto& o : obs) perm = perm.bayes_update(o.f_row, o.frequency, o.copies);
  CHECK((fwd.A() - perm.A()).cwiseAbs().maxCoeff() <= 1e-12 * fwd.A().cwiseAbs().maxCoeff());
}

TEST_CASE("trace never grows over random updates") {
  std::mt19937_64 gen(8);
  auto post = GaussianPosterior::init_prior(30, 1e-4);
  double prev = post.total_variance();
  for (int i = 0; i < 100; ++i) {
    post = post.bayes_update(random_row(30, 1000, gen), double(gen() % 1001) / 1000.0, 1000);
    const double now = post.total_variance();
    CHECK(now <= prev);
    prev = now;
  }
}

TEST_CASE("singular A is reported") {
  const GaussianPosterior bad(Eigen::MatrixXd::Zero(2, 2), Eigen::VectorXd::Zero(2));
  CHECK_THROWS_AS(bad.moments(), NumericalError);
}

TEST_CASE("exact oracle basics") {
  OracleRegion region{Eigen::VectorXd::Zero(1), Eigen::VectorXd::Ones(1), {}};
  auto ex = exact_moments_oracle(region, {});
  CHECK(ex.mean[0] == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(ex.covariance(0, 0) == doctest::Approx(1.0 / 12).epsilon(1e-5));

  const Observation flat{Eigen::Vector2d(0.4, 0.4), 0.9, 100};
  ex = exact_moments_oracle(region, {flat});
  CHECK(ex.mean[0] == doctest::Approx(0.5).epsilon(1e-9));

  OracleRegion three{Eigen::VectorXd::Zero(3), Eigen::VectorXd::Ones(3), {}};
  CHECK_THROWS_AS(exact_moments_oracle(three, {}), ConfigError);
}

TEST_CASE("single update agrees with exact Bayes at M = 2") {
  // Two probes seen through one setting; the signal is a 0.3/0.7 mixture.
  const double q1 = 1.0, q2 = std::exp(-1.0);
  const Eigen::Vector2d f(q1, q2);
  const double P = 0.3 * q1 + 0.7 * q2;
  const double F = std::round(P * 1000) / 1000;
  const auto post = GaussianPosterior::init_prior(2, 1e-6).bayes_update(f, F, 1000).moments();
  OracleRegion region{Eigen::VectorXd::Constant(1, -1.0), Eigen::VectorXd::Constant(1, 2.0), {}};
  const auto ex = exact_moments_oracle(region, {{f, F, 1000}}, 20001);
  CHECK(std::abs(post.mean[0] - ex.mean[0]) < 1e-3);
  CHECK(std::abs(post.covariance(0, 0) / ex.covariance(0, 0) - 1) < 0.05);
}
