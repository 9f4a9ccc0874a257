#pragma once

// Phase-space physics of the coherent-probe data-pattern scheme: probe
// lattices, ideal coherent-projection probabilities, the three signal states
// used in the case studies, positivity test kets, and Fock-basis assembly of
// estimators.

#include <complex>
#include <cstddef>
#include <variant>
#include <vector>

#include <Eigen/Dense>

namespace dpt {

using Amplitude = std::complex<double>;

inline constexpr int kDefaultFockCutoff = 41;

struct ProbeLattice {
  int side_count = 0;
  double spacing = 0.0;
  Amplitude center{0.0, 0.0};
  // Row-major: index = j * side_count + i, with i along Re (left to right) and
  // j along Im (bottom to top), both counted from the lower-left corner.
  std::vector<Amplitude> amplitudes;

  std::size_t size() const { return amplitudes.size(); }
};

struct CoherentSignal {
  Amplitude alpha;
};
struct SingleFockSignal {};
struct EvenCatSignal {
  Amplitude alpha;
};

using SignalState = std::variant<CoherentSignal, SingleFockSignal, EvenCatSignal>;

struct FockKet {
  int n;
};
struct CoherentKet {
  Amplitude alpha;
};
using TestKet = std::variant<FockKet, CoherentKet>;

class TestKetSet {
 public:
  // Rejects empty sets and duplicate kets (Coherent(0) duplicates Fock(0)).
  explicit TestKetSet(std::vector<TestKet> kets);
  const std::vector<TestKet>& kets() const { return kets_; }
  std::size_t size() const { return kets_.size(); }

 private:
  std::vector<TestKet> kets_;
};

// Fock states 0..fock_max plus one coherent ket per probe; the vacuum probe is
// skipped when Fock(0) is present since it is the same ket.
TestKetSet default_test_kets(const ProbeLattice& lattice, int fock_max = kDefaultFockCutoff - 1);

// Half-spaces sum_m c_m v[m,i] >= u[i] over the M-1 free coefficients.
struct LinearConstraintSet {
  Eigen::MatrixXd v;  // (M-1) x I, one column per constraint
  Eigen::VectorXd u;  // I

  Eigen::Index count() const { return u.size(); }
  Eigen::Index dim() const { return v.rows(); }
};

// Hermitian matrix in the truncated Fock basis |0>..|cutoff-1>.
struct DensityMatrix {
  Eigen::MatrixXcd entries;
  int cutoff() const { return static_cast<int>(entries.rows()); }
};

double coherent_overlap_prob(Amplitude alpha, Amplitude beta);

// <beta|alpha> for coherent states.
std::complex<double> coherent_inner(Amplitude beta, Amplitude alpha);

double signal_born_probability(const SignalState& signal, Amplitude beta);

ProbeLattice build_probe_lattice(int side_count, double spacing, Amplitude center = {0.0, 0.0});

// |<n|alpha>|^2, evaluated in log space.
double fock_coherent_prob(int n, Amplitude alpha);

// Fock amplitudes <n|alpha>, n < cutoff.
Eigen::VectorXcd coherent_fock_vector(Amplitude alpha, int cutoff = kDefaultFockCutoff);

// Normalized signal ket truncated to the cutoff.
Eigen::VectorXcd signal_fock_vector(const SignalState& signal, int cutoff = kDefaultFockCutoff);

// <psi|rho_m|psi> for every probe m.
Eigen::VectorXd test_ket_probe_values(const TestKet& ket, const ProbeLattice& lattice);

LinearConstraintSet constraint_coefficients(const TestKetSet& kets, const ProbeLattice& lattice);

// Full coefficient vector (length M) from the M-1 free coefficients.
Eigen::VectorXd full_coefficients(const Eigen::VectorXd& free);

struct AssembledEstimator {
  DensityMatrix rho;
  double truncation_leakage = 0.0;  // sum_m |c_m| * tail weight beyond cutoff
  bool leakage_warning = false;
};

AssembledEstimator assemble_estimator(const Eigen::VectorXd& free_coefficients,
                                      const ProbeLattice& lattice,
                                      int cutoff = kDefaultFockCutoff);

// S_mn = tr(rho_m rho_n) = exp(-|alpha_m - alpha_n|^2).
Eigen::MatrixXd probe_gram(const ProbeLattice& lattice);

// <psi|rho|psi>. Throws NumericalError if rho is not Hermitian.
double fidelity(const DensityMatrix& rho, const SignalState& signal);

double min_eigenvalue(const DensityMatrix& rho);

}  // namespace dpt
