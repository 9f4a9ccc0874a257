#include "dpt/run_config.hpp"

#include <fstream>
#include <set>

#include "dpt/errors.hpp"
#include "dpt/rng.hpp"

namespace dpt {

using nlohmann::json;

namespace {

constexpr std::uint64_t kBankSalt = 0x62616e6bULL;
constexpr std::uint64_t kSignalSalt = 0x7369676eULL;

json amplitude_json(Amplitude a) { return json::array({a.real(), a.imag()}); }

Amplitude amplitude_from(const json& j, const char* what) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number()) {
    throw ConfigError(std::string(what) + " must be an [re, im] pair");
  }
  return {j[0].get<double>(), j[1].get<double>()};
}

void reject_unknown(const json& obj, const std::set<std::string>& known, const std::string& where) {
  if (!obj.is_object()) throw ConfigError(where + " must be a JSON object");
  for (const auto& [key, _] : obj.items()) {
    if (!known.count(key)) throw ConfigError("unknown key '" + key + "' in " + where);
  }
}

template <typename T>
void read(const json& obj, const char* key, T& out) {
  if (!obj.contains(key)) return;
  try {
    out = obj.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad value for '") + key + "': " + e.what());
  }
}

}  // namespace

std::uint64_t RunConfig::effective_bank_seed() const {
  return bank_seed ? *bank_seed : splitmix64(seed ^ kBankSalt);
}

std::uint64_t RunConfig::effective_signal_seed() const {
  return signal_seed ? *signal_seed : splitmix64(seed ^ kSignalSalt);
}

void RunConfig::validate() const {
  if (lattice.side_count < 3 || lattice.side_count % 2 == 0) {
    throw ConfigError("lattice.side_count must be odd and >= 3");
  }
  if (!(lattice.spacing > 0.0)) throw ConfigError("lattice.spacing must be positive");
  if (probe_copies < 1 || signal_copies < 1) throw ConfigError("copy counts must be >= 1");
  if (!(epsilon_reg > 0.0)) throw ConfigError("epsilon_reg must be positive");
  if (fock_cutoff < 2) throw ConfigError("fock_cutoff must be >= 2");
  if (max_settings < 0) throw ConfigError("max_settings must be >= 0");
  shearing.validate();
  stopping.validate();
}

std::string signal_name(const SignalState& signal) {
  switch (signal.index()) {
    case 0:
      return "coherent";
    case 1:
      return "single_photon";
    default:
      return "even_cat";
  }
}

json to_json(const RunConfig& c) {
  json signal{{"type", signal_name(c.signal)}};
  if (const auto* s = std::get_if<CoherentSignal>(&c.signal)) signal["alpha"] = amplitude_json(s->alpha);
  if (const auto* s = std::get_if<EvenCatSignal>(&c.signal)) signal["alpha"] = amplitude_json(s->alpha);

  json doc{
      {"lattice",
       {{"side_count", c.lattice.side_count},
        {"spacing", c.lattice.spacing},
        {"center", amplitude_json(c.lattice.center)}}},
      {"signal", signal},
      {"probe_copies", c.probe_copies},
      {"signal_copies", c.signal_copies},
      {"seed", c.seed},
      {"bank_seed", c.effective_bank_seed()},
      {"signal_seed", c.effective_signal_seed()},
      {"epsilon_reg", c.epsilon_reg},
      {"fock_cutoff", c.fock_cutoff},
      {"shearing",
       {{"p_threshold", c.shearing.p_threshold},
        {"p_step", c.shearing.p_step},
        {"epsilon_total", c.shearing.epsilon_total},
        {"max_iterations", c.shearing.max_iterations},
        {"rule", c.shearing.rule == DeviationRule::signed_x0 ? "signed" : "absolute"}}},
      {"stopping", {{"eta", c.stopping.eta}, {"consecutive_required", c.stopping.consecutive_required}}},
      {"sigma", c.sigma == SigmaConvention::beta ? "beta" : "strict_paper"},
      {"variance_metric", c.variance_metric == VarianceMetric::coefficient ? "coefficient" : "hilbert_schmidt"},
      {"max_settings", c.max_settings},
      {"continue_past_stop", c.continue_past_stop},
      {"allow_repeats", c.allow_repeats},
      {"output_dir", c.output_dir.string()},
  };
  if (c.bank_path) doc["bank_path"] = c.bank_path->string();
  return doc;
}

RunConfig run_config_from_json(const json& doc) {
  reject_unknown(doc,
                 {"lattice", "signal", "probe_copies", "signal_copies", "seed", "bank_seed", "signal_seed",
                  "bank_path", "epsilon_reg", "fock_cutoff", "shearing", "stopping", "sigma", "variance_metric", "max_settings",
                  "continue_past_stop", "allow_repeats", "output_dir"},
                 "run config");
  RunConfig c;
  if (doc.contains("lattice")) {
    const auto& l = doc.at("lattice");
    reject_unknown(l, {"side_count", "spacing", "center"}, "lattice");
    read(l, "side_count", c.lattice.side_count);
    read(l, "spacing", c.lattice.spacing);
    if (l.contains("center")) c.lattice.center = amplitude_from(l.at("center"), "lattice.center");
  }
  if (doc.contains("signal")) {
    const auto& s = doc.at("signal");
    reject_unknown(s, {"type", "alpha"}, "signal");
    std::string type = "coherent";
    read(s, "type", type);
    Amplitude alpha{0.5, 0.0};
    if (s.contains("alpha")) alpha = amplitude_from(s.at("alpha"), "signal.alpha");
    if (type == "coherent") {
      c.signal = CoherentSignal{alpha};
    } else if (type == "single_photon") {
      c.signal = SingleFockSignal{};
    } else if (type == "even_cat") {
      c.signal = EvenCatSignal{alpha};
    } else {
      throw ConfigError("unknown signal type '" + type + "'");
    }
  }
  read(doc, "probe_copies", c.probe_copies);
  read(doc, "signal_copies", c.signal_copies);
  read(doc, "seed", c.seed);
  if (doc.contains("bank_seed")) c.bank_seed = doc.at("bank_seed").get<std::uint64_t>();
  if (doc.contains("signal_seed")) c.signal_seed = doc.at("signal_seed").get<std::uint64_t>();
  if (doc.contains("bank_path")) c.bank_path = doc.at("bank_path").get<std::string>();
  read(doc, "epsilon_reg", c.epsilon_reg);
  read(doc, "fock_cutoff", c.fock_cutoff);
  if (doc.contains("shearing")) {
    const auto& s = doc.at("shearing");
    reject_unknown(s, {"p_threshold", "p_step", "epsilon_total", "max_iterations", "rule"}, "shearing");
    read(s, "p_threshold", c.shearing.p_threshold);
    read(s, "p_step", c.shearing.p_step);
    read(s, "epsilon_total", c.shearing.epsilon_total);
    read(s, "max_iterations", c.shearing.max_iterations);
    std::string rule = "signed";
    read(s, "rule", rule);
    if (rule == "signed") {
      c.shearing.rule = DeviationRule::signed_x0;
    } else if (rule == "absolute") {
      c.shearing.rule = DeviationRule::absolute_x0;
    } else {
      throw ConfigError("unknown shearing rule '" + rule + "'");
    }
  }
  if (doc.contains("stopping")) {
    const auto& s = doc.at("stopping");
    reject_unknown(s, {"eta", "consecutive_required"}, "stopping");
    read(s, "eta", c.stopping.eta);
    read(s, "consecutive_required", c.stopping.consecutive_required);
  }
  if (doc.contains("sigma")) {
    const auto sigma = doc.at("sigma").get<std::string>();
    if (sigma == "beta") {
      c.sigma = SigmaConvention::beta;
    } else if (sigma == "strict_paper") {
      c.sigma = SigmaConvention::strict_paper;
    } else {
      throw ConfigError("unknown sigma convention '" + sigma + "'");
    }
  }
  if (doc.contains("variance_metric")) {
    const auto metric = doc.at("variance_metric").get<std::string>();
    if (metric == "coefficient") {
      c.variance_metric = VarianceMetric::coefficient;
    } else if (metric == "hilbert_schmidt") {
      c.variance_metric = VarianceMetric::hilbert_schmidt;
    } else {
      throw ConfigError("unknown variance metric '" + metric + "'");
    }
  }
  read(doc, "max_settings", c.max_settings);
  read(doc, "continue_past_stop", c.continue_past_stop);
  read(doc, "allow_repeats", c.allow_repeats);
  if (doc.contains("output_dir")) c.output_dir = doc.at("output_dir").get<std::string>();
  c.validate();
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file: " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config file " + path.string() + " is not valid JSON: " + e.what());
  }
  return run_config_from_json(doc);
}

}  // namespace dpt
