#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <mutex>
#include <vector>

#include <Eigen/Dense>

#include "dpt/quantum_model.hpp"

namespace dpt {

inline constexpr int kBankSchemaVersion = 1;

// Pre-acquired probe data patterns: counts[k][m] successes out of copies for
// setting k and probe m. Frequencies are always derived from integer counts.
struct PatternBank {
  int schema_version = kBankSchemaVersion;
  std::int64_t copies = 0;
  std::uint64_t seed = 0;
  std::vector<Amplitude> setting_amplitudes;
  std::vector<Amplitude> probe_amplitudes;
  std::vector<std::int64_t> counts;  // row-major K x M

  std::size_t settings() const { return setting_amplitudes.size(); }
  std::size_t probes() const { return probe_amplitudes.size(); }
  std::int64_t count(std::size_t k, std::size_t m) const { return counts[k * probes() + m]; }
  double frequency(std::size_t k, std::size_t m) const {
    return static_cast<double>(count(k, m)) / static_cast<double>(copies);
  }
  Eigen::VectorXd row(std::size_t k) const;
  Eigen::MatrixXd frequencies() const;

  // Throws DimensionError / CountError on inconsistent contents.
  void validate() const;

  bool operator==(const PatternBank&) const = default;
};

PatternBank simulate_probe_bank(const ProbeLattice& lattice, const std::vector<Amplitude>& settings,
                                std::int64_t copies, std::uint64_t seed);

// Bank whose counts are round(p_km * copies); used for noiseless checks.
PatternBank exact_probe_bank(const ProbeLattice& lattice, const std::vector<Amplitude>& settings,
                             std::int64_t copies);

void save_bank(const PatternBank& bank, const std::filesystem::path& path);
PatternBank load_bank(const std::filesystem::path& path);
void export_bank_csv(const PatternBank& bank, const std::filesystem::path& path);

// Measures the unknown signal on demand, at most once per setting.
class SignalMeter {
 public:
  SignalMeter(SignalState signal, std::int64_t copies, std::uint64_t seed);

  // Thread-safe; the first query for a setting draws Binomial(copies, P_k).
  double measure(std::size_t setting_index, const std::vector<Amplitude>& settings);

  const SignalState& signal() const { return signal_; }
  std::int64_t copies() const { return copies_; }
  std::size_t measured_count() const;

 private:
  SignalState signal_;
  std::int64_t copies_;
  std::uint64_t seed_;
  mutable std::mutex mutex_;
  std::map<std::size_t, std::int64_t> cache_;
};

}  // namespace dpt
