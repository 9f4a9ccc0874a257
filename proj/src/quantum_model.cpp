#include "dpt/quantum_model.hpp"

#include <cmath>
#include <iostream>
#include <string>

#include "dpt/errors.hpp"

namespace dpt {

namespace {

bool same_ket(const TestKet& a, const TestKet& b) {
  auto as_vacuum = [](const TestKet& k) {
    if (const auto* f = std::get_if<FockKet>(&k)) return f->n == 0;
    return std::get<CoherentKet>(k).alpha == Amplitude{0.0, 0.0};
  };
  if (as_vacuum(a) && as_vacuum(b)) return true;
  if (a.index() != b.index()) return false;
  if (const auto* f = std::get_if<FockKet>(&a)) return f->n == std::get<FockKet>(b).n;
  return std::get<CoherentKet>(a).alpha == std::get<CoherentKet>(b).alpha;
}

double cat_norm_sq(Amplitude alpha) {
  return 2.0 * (1.0 + std::exp(-2.0 * std::norm(alpha)));
}

double coherent_tail_weight(Amplitude alpha, int cutoff) {
  double tail = 0.0;
  for (int n = cutoff; n < cutoff + 400; ++n) {
    const double term = fock_coherent_prob(n, alpha);
    tail += term;
    if (term < 1e-300 || term < 1e-18 * tail) break;
  }
  return tail;
}

}  // namespace

TestKetSet::TestKetSet(std::vector<TestKet> kets) : kets_(std::move(kets)) {
  if (kets_.empty()) throw ConfigError("test-ket set must not be empty");
  for (std::size_t i = 0; i < kets_.size(); ++i) {
    if (const auto* f = std::get_if<FockKet>(&kets_[i]); f && f->n < 0) {
      throw ConfigError("Fock test ket with negative photon number");
    }
    for (std::size_t j = 0; j < i; ++j) {
      if (same_ket(kets_[i], kets_[j])) {
        throw ConfigError("duplicate test ket at positions " + std::to_string(j) + " and " +
                          std::to_string(i));
      }
    }
  }
}

TestKetSet default_test_kets(const ProbeLattice& lattice, int fock_max) {
  std::vector<TestKet> kets;
  for (int n = 0; n <= fock_max; ++n) kets.emplace_back(FockKet{n});
  for (const auto& a : lattice.amplitudes) {
    if (fock_max >= 0 && a == Amplitude{0.0, 0.0}) continue;
    kets.emplace_back(CoherentKet{a});
  }
  return TestKetSet(std::move(kets));
}

double coherent_overlap_prob(Amplitude alpha, Amplitude beta) {
  return std::exp(-std::norm(alpha - beta));
}

std::complex<double> coherent_inner(Amplitude beta, Amplitude alpha) {
  return std::exp(-0.5 * std::norm(alpha) - 0.5 * std::norm(beta) + std::conj(beta) * alpha);
}

double signal_born_probability(const SignalState& signal, Amplitude beta) {
  return std::visit(
      [&](const auto& s) -> double {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, CoherentSignal>) {
          return coherent_overlap_prob(s.alpha, beta);
        } else if constexpr (std::is_same_v<T, SingleFockSignal>) {
          const double r2 = std::norm(beta);
          return r2 * std::exp(-r2);
        } else {
          const auto amp = coherent_inner(beta, s.alpha) + coherent_inner(beta, -s.alpha);
          return std::norm(amp) / cat_norm_sq(s.alpha);
        }
      },
      signal);
}

ProbeLattice build_probe_lattice(int side_count, double spacing, Amplitude center) {
  if (side_count < 3 || side_count % 2 == 0) {
    throw ConfigError("lattice side_count must be odd and >= 3, got " + std::to_string(side_count));
  }
  if (!(spacing > 0.0) || !std::isfinite(spacing)) {
    throw ConfigError("lattice spacing must be positive and finite");
  }
  ProbeLattice lattice;
  lattice.side_count = side_count;
  lattice.spacing = spacing;
  lattice.center = center;
  lattice.amplitudes.reserve(static_cast<std::size_t>(side_count) * side_count);
  const int half = side_count / 2;
  for (int j = 0; j < side_count; ++j) {
    for (int i = 0; i < side_count; ++i) {
      lattice.amplitudes.push_back(center + Amplitude{(i - half) * spacing, (j - half) * spacing});
    }
  }
  return lattice;
}

double fock_coherent_prob(int n, Amplitude alpha) {
  const double r2 = std::norm(alpha);
  if (r2 == 0.0) return n == 0 ? 1.0 : 0.0;
  return std::exp(-r2 + n * std::log(r2) - std::lgamma(n + 1.0));
}

Eigen::VectorXcd coherent_fock_vector(Amplitude alpha, int cutoff) {
  Eigen::VectorXcd out(cutoff);
  std::complex<double> term = std::exp(-0.5 * std::norm(alpha));
  for (int n = 0; n < cutoff; ++n) {
    out[n] = term;
    term *= alpha / std::sqrt(n + 1.0);
  }
  return out;
}

Eigen::VectorXcd signal_fock_vector(const SignalState& signal, int cutoff) {
  return std::visit(
      [&](const auto& s) -> Eigen::VectorXcd {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, CoherentSignal>) {
          return coherent_fock_vector(s.alpha, cutoff);
        } else if constexpr (std::is_same_v<T, SingleFockSignal>) {
          Eigen::VectorXcd v = Eigen::VectorXcd::Zero(cutoff);
          if (cutoff > 1) v[1] = 1.0;
          return v;
        } else {
          Eigen::VectorXcd v = coherent_fock_vector(s.alpha, cutoff) + coherent_fock_vector(-s.alpha, cutoff);
          return v / std::sqrt(cat_norm_sq(s.alpha));
        }
      },
      signal);
}

Eigen::VectorXd test_ket_probe_values(const TestKet& ket, const ProbeLattice& lattice) {
  Eigen::VectorXd values(static_cast<Eigen::Index>(lattice.size()));
  for (std::size_t m = 0; m < lattice.size(); ++m) {
    const auto a = lattice.amplitudes[m];
    if (const auto* f = std::get_if<FockKet>(&ket)) {
      values[static_cast<Eigen::Index>(m)] = fock_coherent_prob(f->n, a);
    } else {
      values[static_cast<Eigen::Index>(m)] = coherent_overlap_prob(std::get<CoherentKet>(ket).alpha, a);
    }
  }
  return values;
}

LinearConstraintSet constraint_coefficients(const TestKetSet& kets, const ProbeLattice& lattice) {
  const auto M = static_cast<Eigen::Index>(lattice.size());
  if (M < 2) throw ConfigError("constraint_coefficients needs at least two probes");
  std::vector<Eigen::VectorXd> columns;
  std::vector<double> offsets;
  for (const auto& ket : kets.kets()) {
    const Eigen::VectorXd values = test_ket_probe_values(ket, lattice);
    const double last = values[M - 1];
    Eigen::VectorXd col = values.head(M - 1).array() - last;
    if (col.norm() == 0.0) continue;
    columns.push_back(std::move(col));
    offsets.push_back(-last);
  }
  LinearConstraintSet set;
  set.v.resize(M - 1, static_cast<Eigen::Index>(columns.size()));
  set.u.resize(static_cast<Eigen::Index>(columns.size()));
  for (std::size_t i = 0; i < columns.size(); ++i) {
    set.v.col(static_cast<Eigen::Index>(i)) = columns[i];
    set.u[static_cast<Eigen::Index>(i)] = offsets[i];
  }
  return set;
}

Eigen::VectorXd full_coefficients(const Eigen::VectorXd& free) {
  Eigen::VectorXd full(free.size() + 1);
  full.head(free.size()) = free;
  full[free.size()] = 1.0 - free.sum();
  return full;
}

AssembledEstimator assemble_estimator(const Eigen::VectorXd& free_coefficients,
                                      const ProbeLattice& lattice, int cutoff) {
  if (static_cast<std::size_t>(free_coefficients.size()) + 1 != lattice.size()) {
    throw DimensionError("coefficient vector length " + std::to_string(free_coefficients.size()) +
                         " does not match lattice of " + std::to_string(lattice.size()) + " probes");
  }
  if (!free_coefficients.allFinite()) throw NumericalError("non-finite estimator coefficients");
  const Eigen::VectorXd c = full_coefficients(free_coefficients);
  const auto M = static_cast<Eigen::Index>(lattice.size());

  Eigen::MatrixXcd kets(cutoff, M);
  AssembledEstimator out;
  for (Eigen::Index m = 0; m < M; ++m) {
    const auto a = lattice.amplitudes[static_cast<std::size_t>(m)];
    kets.col(m) = coherent_fock_vector(a, cutoff);
    out.truncation_leakage += std::abs(c[m]) * coherent_tail_weight(a, cutoff);
  }
  Eigen::MatrixXcd rho = kets * c.asDiagonal() * kets.adjoint();
  out.rho.entries = 0.5 * (rho + rho.adjoint());
  if (out.truncation_leakage > 1e-6) {
    out.leakage_warning = true;
    std::cerr << "warning: Fock truncation leakage " << out.truncation_leakage << " exceeds 1e-6 at cutoff "
              << cutoff << "\n";
  }
  return out;
}

Eigen::MatrixXd probe_gram(const ProbeLattice& lattice) {
  const auto M = static_cast<Eigen::Index>(lattice.size());
  Eigen::MatrixXd S(M, M);
  for (Eigen::Index m = 0; m < M; ++m) {
    S(m, m) = 1.0;
    for (Eigen::Index n = 0; n < m; ++n) {
      S(m, n) = S(n, m) = coherent_overlap_prob(lattice.amplitudes[static_cast<std::size_t>(m)],
                                                lattice.amplitudes[static_cast<std::size_t>(n)]);
    }
  }
  return S;
}

double fidelity(const DensityMatrix& rho, const SignalState& signal) {
  const auto& R = rho.entries;
  if (R.rows() != R.cols()) throw DimensionError("density matrix is not square");
  const double scale = std::max(1.0, R.cwiseAbs().maxCoeff());
  if ((R - R.adjoint()).cwiseAbs().maxCoeff() > 1e-10 * scale) {
    throw NumericalError("fidelity requires a Hermitian density matrix");
  }
  const Eigen::VectorXcd psi = signal_fock_vector(signal, rho.cutoff());
  return std::real(psi.dot(R * psi));
}

double min_eigenvalue(const DensityMatrix& rho) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(rho.entries, Eigen::EigenvaluesOnly);
  return solver.eigenvalues().minCoeff();
}

}  // namespace dpt
