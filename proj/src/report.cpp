#include "dpt/report.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "dpt/errors.hpp"

namespace dpt {

using nlohmann::json;

namespace {

json matrix_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

json vector_json(const Eigen::VectorXd& v) { return json(std::vector<double>(v.data(), v.data() + v.size())); }

// Shortest round-trip representation keeps the CSVs byte-stable and lossless.
std::string num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  return out;
}

void finish(std::ofstream& out, const std::filesystem::path& path) {
  out.flush();
  if (!out) throw IoError("failed writing: " + path.string());
}

}  // namespace

json trace_to_json(const SelectionTrace& trace) {
  json steps = json::array();
  for (const auto& s : trace.steps) {
    steps.push_back({{"step", s.step},
                     {"setting_index", s.setting_index},
                     {"setting", {s.setting.real(), s.setting.imag()}},
                     {"delta", s.delta},
                     {"var_before", s.var_before},
                     {"var_updated", s.var_updated},
                     {"var_after", s.var_after},
                     {"frequency", s.frequency},
                     {"stop_flag", s.stop_flag},
                     {"min_eig_before_shear", s.min_eig_before_shear},
                     {"min_eig_after_shear", s.min_eig_after_shear},
                     {"hs_distance", s.hs_distance},
                     {"step_distance", s.step_distance},
                     {"fidelity", s.fidelity},
                     {"shear_iterations", s.shear_iterations},
                     {"shear_max_hit", s.shear_max_hit},
                     {"var_increase", s.var_increase}});
  }
  return {{"initial_shear_iterations", trace.initial_shear_iterations},
          {"initial_shear_max_hit", trace.initial_shear_max_hit},
          {"initial_variance", trace.initial_variance},
          {"steps", std::move(steps)}};
}

SelectionTrace trace_from_json(const json& doc) {
  try {
    SelectionTrace trace;
    trace.initial_shear_iterations = doc.at("initial_shear_iterations").get<int>();
    trace.initial_shear_max_hit = doc.at("initial_shear_max_hit").get<bool>();
    trace.initial_variance = doc.at("initial_variance").get<double>();
    for (const auto& j : doc.at("steps")) {
      StepRecord s;
      s.step = j.at("step").get<int>();
      s.setting_index = j.at("setting_index").get<std::size_t>();
      s.setting = {j.at("setting")[0].get<double>(), j.at("setting")[1].get<double>()};
      s.delta = j.at("delta").get<double>();
      s.var_before = j.at("var_before").get<double>();
      s.var_updated = j.at("var_updated").get<double>();
      s.var_after = j.at("var_after").get<double>();
      s.frequency = j.at("frequency").get<double>();
      s.stop_flag = j.at("stop_flag").get<bool>();
      s.min_eig_before_shear = j.at("min_eig_before_shear").get<double>();
      s.min_eig_after_shear = j.at("min_eig_after_shear").get<double>();
      s.hs_distance = j.at("hs_distance").get<double>();
      s.step_distance = j.at("step_distance").get<double>();
      s.fidelity = j.at("fidelity").get<double>();
      s.shear_iterations = j.at("shear_iterations").get<int>();
      s.shear_max_hit = j.at("shear_max_hit").get<bool>();
      s.var_increase = j.at("var_increase").get<bool>();
      trace.steps.push_back(s);
    }
    return trace;
  } catch (const json::exception& e) {
    throw SchemaError(std::string("malformed trace: ") + e.what());
  }
}

json report_to_json(const EstimatorReport& r) {
  json per_setting = json::array();
  for (const auto& e : r.per_setting) {
    per_setting.push_back({{"setting_index", e.setting_index},
                           {"setting", {e.setting.real(), e.setting.imag()}},
                           {"estimated_probability", e.estimated_probability},
                           {"measured_frequency", e.measured_frequency}});
  }
  return {{"status", to_string(r.status)},
          {"settings_used", r.settings_used},
          {"first_stop_step", r.first_stop_step},
          {"fidelity", r.fidelity},
          {"min_eigenvalue", r.min_eigenvalue},
          {"truncation_leakage", r.truncation_leakage},
          {"final_hs_distance", r.final_hs_distance},
          {"mean", vector_json(r.mean)},
          {"covariance", matrix_json(r.covariance)},
          {"density_matrix", {{"re", matrix_json(r.rho.entries.real())}, {"im", matrix_json(r.rho.entries.imag())}}},
          {"per_setting", std::move(per_setting)}};
}

json shear_report_to_json(const ShearReport& r) {
  return {{"iterations", r.iterations},
          {"max_iterations_hit", r.max_iterations_hit},
          {"violating_before", r.violating_before},
          {"violating_after", r.violating_after},
          {"max_final_p", r.max_final_p},
          {"final_p", r.final_p}};
}

void export_report(const SelectionTrace& trace, const EstimatorReport& report, const RunConfig& config,
                   const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory " + dir.string() + ": " + ec.message());

  {
    const auto path = dir / "run.json";
    json doc{{"schema_version", kRunSchemaVersion},
             {"versions", {{"dpt", kLibraryVersion}, {"bank_schema", kBankSchemaVersion}}},
             {"config", to_json(config)},
             {"trace", trace_to_json(trace)},
             {"report", report_to_json(report)}};
    auto out = open_out(path);
    out << doc.dump(2) << "\n";
    finish(out, path);
  }
  {
    const auto path = dir / "trace.csv";
    auto out = open_out(path);
    out << "step,setting_index,setting_re,setting_im,delta,var_before,var_updated,var_after,frequency,"
           "stop_flag,min_eig_before_shear,min_eig_after_shear,hs_distance,step_distance,fidelity,shear_iterations,"
           "shear_max_hit,var_increase\n";
    for (const auto& s : trace.steps) {
      out << s.step << ',' << s.setting_index << ',' << num(s.setting.real()) << ',' << num(s.setting.imag())
          << ',' << num(s.delta) << ',' << num(s.var_before) << ',' << num(s.var_updated) << ','
          << num(s.var_after) << ',' << num(s.frequency) << ',' << int(s.stop_flag) << ','
          << num(s.min_eig_before_shear) << ',' << num(s.min_eig_after_shear) << ',' << num(s.hs_distance) << ','
          << num(s.step_distance) << ',' << num(s.fidelity) << ',' << s.shear_iterations << ',' << int(s.shear_max_hit) << ','
          << int(s.var_increase) << '\n';
    }
    finish(out, path);
  }
  {
    const auto path = dir / "trajectory.csv";
    auto out = open_out(path);
    out << "order,setting_index,re,im,before_stop\n";
    for (const auto& s : trace.steps) {
      const bool before = report.first_stop_step == 0 || s.step <= report.first_stop_step;
      out << s.step << ',' << s.setting_index << ',' << num(s.setting.real()) << ',' << num(s.setting.imag())
          << ',' << int(before) << '\n';
    }
    finish(out, path);
  }
  {
    const auto path = dir / "frequencies.csv";
    auto out = open_out(path);
    out << "setting_index,re,im,estimated_probability,measured_frequency\n";
    for (const auto& e : report.per_setting) {
      out << e.setting_index << ',' << num(e.setting.real()) << ',' << num(e.setting.imag()) << ','
          << num(e.estimated_probability) << ',' << num(e.measured_frequency) << '\n';
    }
    finish(out, path);
  }
  {
    const auto path = dir / "eigenvalues.csv";
    auto out = open_out(path);
    out << "step,min_eig_before_shear,min_eig_after_shear\n";
    for (const auto& s : trace.steps) {
      out << s.step << ',' << num(s.min_eig_before_shear) << ',' << num(s.min_eig_after_shear) << '\n';
    }
    finish(out, path);
  }
}

LoadedRun load_run(const std::filesystem::path& run_json) {
  std::ifstream in(run_json);
  if (!in) throw IoError("cannot open run file: " + run_json.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw SchemaError("run file " + run_json.string() + " is not valid JSON: " + e.what());
  }
  if (!doc.contains("schema_version") || doc.at("schema_version") != kRunSchemaVersion) {
    throw SchemaError("unsupported run.json schema_version");
  }
  for (const char* key : {"config", "trace", "report"}) {
    if (!doc.contains(key)) throw SchemaError(std::string("run.json is missing '") + key + "'");
  }
  LoadedRun run;
  run.config = run_config_from_json(doc.at("config"));
  run.trace = trace_from_json(doc.at("trace"));
  run.report = doc.at("report");
  return run;
}

std::string summarize_run(const LoadedRun& run) {
  std::ostringstream os;
  const auto& r = run.report;
  os << "signal:          " << signal_name(run.config.signal) << "\n"
     << "status:          " << r.value("status", "?") << "\n"
     << "settings used:   " << r.value("settings_used", 0) << "\n"
     << "first stop step: " << r.value("first_stop_step", 0) << "\n"
     << "fidelity:        " << r.value("fidelity", 0.0) << "\n"
     << "min eigenvalue:  " << r.value("min_eigenvalue", 0.0) << "\n"
     << "HS distance:     " << r.value("final_hs_distance", 0.0) << "\n";
  if (!run.trace.steps.empty()) {
    const auto& last = run.trace.steps.back();
    os << "final variance:  " << last.var_after << "\n";
  }
  int flagged = 0;
  for (const auto& s : run.trace.steps) flagged += s.var_increase;
  os << "variance jumps:  " << flagged << "\n";
  return os.str();
}

}  // namespace dpt
