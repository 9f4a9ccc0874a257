#include <sys/wait.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "json.hpp"

#include "dpt/errors.hpp"
#include "dpt/experiment.hpp"
#include "dpt/report.hpp"

using namespace dpt;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "dpt_cli_tests" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

std::vector<std::string> lines(const fs::path& p) {
  std::ifstream in(p);
  std::vector<std::string> out;
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

int cli(const std::string& args) {
  const std::string cmd = std::string("\"") + DPT_CLI_PATH + "\" " + args + " >/dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

void write_config(const fs::path& p, const nlohmann::json& doc) {
  std::ofstream out(p);
  out << doc.dump(2);
}

nlohmann::json small_config_json() {
  return {{"lattice", {{"side_count", 5}, {"spacing", 0.25}}},
          {"signal", {{"type", "even_cat"}, {"alpha", {0.5, 0.0}}}},
          {"epsilon_reg", 1.0},
          {"max_settings", 6},
          {"continue_past_stop", true}};
}

}  // namespace

TEST_CASE("exported report files") {
  const auto dir = scratch("export");
  RunConfig cfg = run_config_from_json(small_config_json());
  const auto r = run_reconstruction(cfg);
  export_report(r.trace, r.report, cfg, dir);

  const auto trace = lines(dir / "trace.csv");
  REQUIRE(trace.size() == r.trace.steps.size() + 1);
  CHECK(trace[0] ==
        "step,setting_index,setting_re,setting_im,delta,var_before,var_updated,var_after,frequency,stop_flag,"
        "min_eig_before_shear,min_eig_after_shear,hs_distance,step_distance,fidelity,shear_iterations,"
        "shear_max_hit,var_increase");
  CHECK(lines(dir / "trajectory.csv")[0] == "order,setting_index,re,im,before_stop");
  CHECK(lines(dir / "trajectory.csv").size() == r.trace.steps.size() + 1);
  CHECK(lines(dir / "frequencies.csv")[0] == "setting_index,re,im,estimated_probability,measured_frequency");
  CHECK(lines(dir / "frequencies.csv").size() == r.report.per_setting.size() + 1);
  CHECK(lines(dir / "eigenvalues.csv")[0] == "step,min_eig_before_shear,min_eig_after_shear");

  // every data row has as many fields as its header
  for (const char* name : {"trace.csv", "trajectory.csv", "frequencies.csv", "eigenvalues.csv"}) {
    const auto rows = lines(dir / name);
    const auto width = std::count(rows[0].begin(), rows[0].end(), ',');
    for (const auto& row : rows) CHECK(std::count(row.begin(), row.end(), ',') == width);
  }

  const auto loaded = load_run(dir / "run.json");
  CHECK(loaded.trace == r.trace);
  CHECK(to_json(loaded.config) == to_json(cfg));
  CHECK(loaded.report.at("settings_used") == r.report.settings_used);
  CHECK(summarize_run(loaded).find("even_cat") != std::string::npos);
}

TEST_CASE("identical configs give byte-identical outputs") {
  const auto a = scratch("det_a"), b = scratch("det_b");
  RunConfig cfg = run_config_from_json(small_config_json());
  cfg.output_dir = "same";
  const auto r1 = run_reconstruction(cfg);
  const auto r2 = run_reconstruction(cfg);
  export_report(r1.trace, r1.report, cfg, a);
  export_report(r2.trace, r2.report, cfg, b);
  for (const char* name : {"run.json", "trace.csv", "trajectory.csv", "frequencies.csv", "eigenvalues.csv"}) {
    CHECK(slurp(a / name) == slurp(b / name));
  }
}

TEST_CASE("load_run errors") {
  const auto dir = scratch("bad_run");
  CHECK_THROWS_AS(load_run(dir / "missing.json"), IoError);
  {
    std::ofstream out(dir / "v.json");
    out << R"({"schema_version": 7})";
  }
  CHECK_THROWS_AS(load_run(dir / "v.json"), SchemaError);
  {
    std::ofstream out(dir / "t.json");
    out << "[1,2";
  }
  CHECK_THROWS_AS(load_run(dir / "t.json"), SchemaError);
}

TEST_CASE("export to an unwritable location fails with an I/O error") {
  const auto dir = scratch("blocked");
  {
    std::ofstream out(dir / "file");
    out << "x";
  }
  RunConfig cfg = run_config_from_json(small_config_json());
  cfg.max_settings = 1;
  const auto r = run_reconstruction(cfg);
  CHECK_THROWS_AS(export_report(r.trace, r.report, cfg, dir / "file" / "sub"), IoError);
}

TEST_CASE("command line exit codes") {
  const auto dir = scratch("cli");
  write_config(dir / "ok.json", small_config_json());

  CHECK(cli("bank generate --config " + (dir / "ok.json").string() + " --out " + (dir / "bank").string()) == 0);
  CHECK(fs::exists(dir / "bank" / "bank.json"));
  CHECK(fs::exists(dir / "bank" / "bank.csv"));

  CHECK(cli("run --config " + (dir / "ok.json").string() + " --seed 5 --out " + (dir / "run").string()) == 0);
  CHECK(fs::exists(dir / "run" / "run.json"));
  const auto run_doc = nlohmann::json::parse(slurp(dir / "run" / "run.json"));
  CHECK(run_doc.at("config").at("seed") == 5);
  CHECK(cli("report " + (dir / "run").string()) == 0);
  CHECK(cli("report " + (dir / "run" / "run.json").string()) == 0);

  CHECK(cli("baseline --config " + (dir / "ok.json").string() + " --out " + (dir / "base").string()) == 0);
  CHECK(fs::exists(dir / "base" / "baseline.json"));

  CHECK(cli("run --config " + (dir / "ok.json").string() + " --strict-paper-sigma --abs-deviation-shearing "
            "--hs-variance --out " + (dir / "flags").string()) == 0);
  const auto flags = nlohmann::json::parse(slurp(dir / "flags" / "run.json")).at("config");
  CHECK(flags.at("sigma") == "strict_paper");
  CHECK(flags.at("shearing").at("rule") == "absolute");
  CHECK(flags.at("variance_metric") == "hilbert_schmidt");

  // reuse the generated bank
  auto with_bank = small_config_json();
  with_bank["bank_path"] = (dir / "bank" / "bank.json").string();
  write_config(dir / "with_bank.json", with_bank);
  CHECK(cli("run --config " + (dir / "with_bank.json").string() + " --out " + (dir / "run2").string()) == 0);

  // validation errors
  auto bad = small_config_json();
  bad["lattice"]["side_count"] = 4;
  write_config(dir / "bad.json", bad);
  CHECK(cli("run --config " + (dir / "bad.json").string() + " --out " + (dir / "x").string()) == 1);
  bad = small_config_json();
  bad["unknown_key"] = true;
  write_config(dir / "bad2.json", bad);
  CHECK(cli("run --config " + (dir / "bad2.json").string()) == 1);
  CHECK(cli("run --no-such-flag") == 1);
  CHECK(cli("") == 1);

  // I/O errors
  CHECK(cli("run --config " + (dir / "nope.json").string()) == 2);
  CHECK(cli("report " + (dir / "nothing_here").string()) == 2);
  auto missing_bank = small_config_json();
  missing_bank["bank_path"] = (dir / "absent_bank.json").string();
  write_config(dir / "missing_bank.json", missing_bank);
  CHECK(cli("run --config " + (dir / "missing_bank.json").string()) == 2);

  CHECK(cli("--help") == 0);
}
