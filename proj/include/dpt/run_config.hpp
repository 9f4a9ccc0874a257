#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "json.hpp"

#include "dpt/gaussian_posterior.hpp"
#include "dpt/quantum_model.hpp"
#include "dpt/selector.hpp"
#include "dpt/shearing.hpp"

namespace dpt {

// How the posterior spread is measured for selection and stopping.
// coefficient: tr(Sigma). hilbert_schmidt: tr(S Sigma) with S the probe Gram
// matrix over the free coefficients, i.e. the mean squared HS spread of rho.
enum class VarianceMetric { coefficient, hilbert_schmidt };

struct LatticeSpec {
  int side_count = 11;
  double spacing = 0.125;
  Amplitude center{0.0, 0.0};
};

struct RunConfig {
  LatticeSpec lattice;
  SignalState signal = CoherentSignal{{0.5, 0.0}};
  std::int64_t probe_copies = 1000;
  std::int64_t signal_copies = 1000;
  std::uint64_t seed = 1;
  // Explicit stream seeds; derived from `seed` when absent.
  std::optional<std::uint64_t> bank_seed;
  std::optional<std::uint64_t> signal_seed;
  // Load the probe bank from file instead of simulating it.
  std::optional<std::filesystem::path> bank_path;
  double epsilon_reg = 1e-6;
  int fock_cutoff = kDefaultFockCutoff;
  ShearingConfig shearing;
  StoppingConfig stopping;
  SigmaConvention sigma = SigmaConvention::beta;
  VarianceMetric variance_metric = VarianceMetric::coefficient;
  // 0 means every setting of the bank.
  int max_settings = 0;
  bool continue_past_stop = false;
  bool allow_repeats = false;
  std::filesystem::path output_dir = "out";

  std::uint64_t effective_bank_seed() const;
  std::uint64_t effective_signal_seed() const;

  // Throws ConfigError on any out-of-range field.
  void validate() const;
};

std::string signal_name(const SignalState& signal);

nlohmann::json to_json(const RunConfig& config);
// Unknown keys are rejected; missing keys keep their defaults.
RunConfig run_config_from_json(const nlohmann::json& doc);
RunConfig load_run_config(const std::filesystem::path& path);

}  // namespace dpt
