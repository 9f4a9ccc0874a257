#include "dpt/pattern_bank.hpp"

#include <cmath>
#include <fstream>
#include <string>

#include "dpt/errors.hpp"
#include "dpt/rng.hpp"
#include "json.hpp"

namespace dpt {

using nlohmann::json;

Eigen::VectorXd PatternBank::row(std::size_t k) const {
  Eigen::VectorXd r(static_cast<Eigen::Index>(probes()));
  for (std::size_t m = 0; m < probes(); ++m) r[static_cast<Eigen::Index>(m)] = frequency(k, m);
  return r;
}

Eigen::MatrixXd PatternBank::frequencies() const {
  Eigen::MatrixXd f(static_cast<Eigen::Index>(settings()), static_cast<Eigen::Index>(probes()));
  for (std::size_t k = 0; k < settings(); ++k) f.row(static_cast<Eigen::Index>(k)) = row(k).transpose();
  return f;
}

void PatternBank::validate() const {
  if (copies < 1) throw CountError("bank copies per setting must be >= 1");
  if (counts.size() != settings() * probes()) {
    throw DimensionError("bank has " + std::to_string(counts.size()) + " counts for " +
                         std::to_string(settings()) + " settings x " + std::to_string(probes()) + " probes");
  }
  for (std::size_t i = 0; i < counts.size(); ++i) {
    if (counts[i] < 0 || counts[i] > copies) {
      throw CountError("bank count " + std::to_string(counts[i]) + " at (" + std::to_string(i / probes()) +
                       "," + std::to_string(i % probes()) + ") outside [0, " + std::to_string(copies) + "]");
    }
  }
}

PatternBank simulate_probe_bank(const ProbeLattice& lattice, const std::vector<Amplitude>& settings,
                                std::int64_t copies, std::uint64_t seed) {
  if (copies < 1) throw ConfigError("probe copies N_p must be >= 1");
  PatternBank bank;
  bank.copies = copies;
  bank.seed = seed;
  bank.setting_amplitudes = settings;
  bank.probe_amplitudes = lattice.amplitudes;
  const auto K = static_cast<std::int64_t>(settings.size());
  const auto M = static_cast<std::int64_t>(lattice.size());
  bank.counts.assign(static_cast<std::size_t>(K * M), 0);

#pragma omp parallel for schedule(static)
  for (std::int64_t k = 0; k < K; ++k) {
    for (std::int64_t m = 0; m < M; ++m) {
      const double p = coherent_overlap_prob(lattice.amplitudes[static_cast<std::size_t>(m)],
                                             settings[static_cast<std::size_t>(k)]);
      auto gen = derive_stream(seed, {static_cast<std::uint64_t>(k), static_cast<std::uint64_t>(m)});
      bank.counts[static_cast<std::size_t>(k * M + m)] = draw_binomial(gen, copies, p);
    }
  }
  return bank;
}

PatternBank exact_probe_bank(const ProbeLattice& lattice, const std::vector<Amplitude>& settings,
                             std::int64_t copies) {
  PatternBank bank;
  bank.copies = copies;
  bank.setting_amplitudes = settings;
  bank.probe_amplitudes = lattice.amplitudes;
  for (const auto& beta : settings) {
    for (const auto& alpha : lattice.amplitudes) {
      bank.counts.push_back(std::llround(coherent_overlap_prob(alpha, beta) * static_cast<double>(copies)));
    }
  }
  return bank;
}

namespace {

json amplitudes_to_json(const std::vector<Amplitude>& amps) {
  json out = json::array();
  for (const auto& a : amps) out.push_back({a.real(), a.imag()});
  return out;
}

const json& require(const json& doc, const char* key) {
  if (!doc.contains(key)) throw SchemaError(std::string("bank file is missing field '") + key + "'");
  return doc.at(key);
}

std::vector<Amplitude> amplitudes_from_json(const json& arr, const char* key) {
  if (!arr.is_array()) throw SchemaError(std::string("bank field '") + key + "' must be an array");
  std::vector<Amplitude> out;
  for (const auto& item : arr) {
    if (!item.is_array() || item.size() != 2 || !item[0].is_number() || !item[1].is_number()) {
      throw SchemaError(std::string("bank field '") + key + "' must hold [re, im] pairs");
    }
    out.emplace_back(item[0].get<double>(), item[1].get<double>());
  }
  return out;
}

}  // namespace

void save_bank(const PatternBank& bank, const std::filesystem::path& path) {
  bank.validate();
  json doc;
  doc["schema_version"] = bank.schema_version;
  doc["N_p"] = bank.copies;
  doc["seed"] = bank.seed;
  doc["probe_amplitudes"] = amplitudes_to_json(bank.probe_amplitudes);
  doc["setting_amplitudes"] = amplitudes_to_json(bank.setting_amplitudes);
  json counts = json::array();
  for (std::size_t k = 0; k < bank.settings(); ++k) {
    json row = json::array();
    for (std::size_t m = 0; m < bank.probes(); ++m) row.push_back(bank.count(k, m));
    counts.push_back(std::move(row));
  }
  doc["counts"] = std::move(counts);

  std::ofstream out(path);
  if (!out) throw IoError("cannot open bank file for writing: " + path.string());
  out << doc.dump() << "\n";
  if (!out) throw IoError("failed writing bank file: " + path.string());
}

PatternBank load_bank(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open bank file: " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw SchemaError("bank file " + path.string() + " is not valid JSON: " + e.what());
  }
  if (!doc.is_object()) throw SchemaError("bank file must hold a JSON object");

  PatternBank bank;
  const auto& version = require(doc, "schema_version");
  if (!version.is_number_integer() || version.get<int>() != kBankSchemaVersion) {
    throw SchemaError("unsupported bank schema_version " + version.dump() + " (expected " +
                      std::to_string(kBankSchemaVersion) + ")");
  }
  bank.schema_version = version.get<int>();
  const auto& np = require(doc, "N_p");
  const auto& seed = require(doc, "seed");
  if (!np.is_number_integer()) throw SchemaError("bank field 'N_p' must be an integer");
  if (!seed.is_number_integer()) throw SchemaError("bank field 'seed' must be an integer");
  bank.copies = np.get<std::int64_t>();
  bank.seed = seed.get<std::uint64_t>();
  bank.probe_amplitudes = amplitudes_from_json(require(doc, "probe_amplitudes"), "probe_amplitudes");
  bank.setting_amplitudes = amplitudes_from_json(require(doc, "setting_amplitudes"), "setting_amplitudes");

  const auto& counts = require(doc, "counts");
  if (!counts.is_array()) throw SchemaError("bank field 'counts' must be an array of rows");
  if (counts.size() != bank.settings()) {
    throw DimensionError("bank has " + std::to_string(counts.size()) + " count rows for " +
                         std::to_string(bank.settings()) + " settings");
  }
  for (const auto& row : counts) {
    if (!row.is_array()) throw SchemaError("bank count rows must be arrays");
    if (row.size() != bank.probes()) {
      throw DimensionError("bank count row of length " + std::to_string(row.size()) + " for " +
                           std::to_string(bank.probes()) + " probes");
    }
    for (const auto& c : row) {
      if (!c.is_number_integer()) throw SchemaError("bank counts must be integers");
      bank.counts.push_back(c.get<std::int64_t>());
    }
  }
  bank.validate();
  return bank;
}

void export_bank_csv(const PatternBank& bank, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open CSV file for writing: " + path.string());
  out << "setting";
  for (std::size_t m = 0; m < bank.probes(); ++m) out << ",probe_" << m;
  out << "\n";
  out.precision(17);
  for (std::size_t k = 0; k < bank.settings(); ++k) {
    out << k;
    for (std::size_t m = 0; m < bank.probes(); ++m) out << "," << bank.frequency(k, m);
    out << "\n";
  }
  if (!out) throw IoError("failed writing CSV file: " + path.string());
}

SignalMeter::SignalMeter(SignalState signal, std::int64_t copies, std::uint64_t seed)
    : signal_(std::move(signal)), copies_(copies), seed_(seed) {
  if (copies_ < 1) throw ConfigError("signal copies N_s must be >= 1");
}

double SignalMeter::measure(std::size_t setting_index, const std::vector<Amplitude>& settings) {
  if (setting_index >= settings.size()) {
    throw DimensionError("setting index " + std::to_string(setting_index) + " out of range");
  }
  std::lock_guard lock(mutex_);
  auto it = cache_.find(setting_index);
  if (it == cache_.end()) {
    const double p = signal_born_probability(signal_, settings[setting_index]);
    auto gen = derive_stream(seed_, {static_cast<std::uint64_t>(setting_index)});
    it = cache_.emplace(setting_index, draw_binomial(gen, copies_, p)).first;
  }
  return static_cast<double>(it->second) / static_cast<double>(copies_);
}

std::size_t SignalMeter::measured_count() const {
  std::lock_guard lock(mutex_);
  return cache_.size();
}

}  // namespace dpt
